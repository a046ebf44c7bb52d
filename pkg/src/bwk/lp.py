"""Fractional relaxation: LP-primal / LP-dual, LP-value of a mixture, and the
LP-perfect construction.

The solver is a dense revised simplex with Bland's rule. Problems here are
tiny (a few resources, at most a few thousand arms), and callers need basic
(vertex) optima, which interior-point codes do not return.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Instance, LatentStructure

FEAS_TOL = 1e-8
_PIVOT_TOL = 1e-11


class UnboundedLPError(ValueError):
    """Some arm earns reward without consuming any resource."""


@dataclass(frozen=True, eq=False)
class ArmDistribution:
    """Probability vector over arms; any deficit below 1 sits on the null arm."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if np.any(w < -1e-12) or w.sum() > 1 + 1e-12:
            raise ValueError("weights must be nonnegative with sum <= 1")
        w = np.clip(w, 0.0, None)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point(cls, arm: int, arms: int) -> "ArmDistribution":
        w = np.zeros(arms)
        w[arm] = 1.0
        return cls(w)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @property
    def deficit(self) -> float:
        return max(0.0, 1.0 - float(self.weights.sum()))

    def reward(self, latent: LatentStructure) -> float:
        return float(self.weights @ latent.expected_reward)

    def consumption(self, latent: LatentStructure, time_resource: Optional[int] = None) -> np.ndarray:
        c = self.weights @ latent.expected_consumption
        if time_resource is not None and self.deficit > 0:
            c = c.copy()
            c[time_resource] += self.deficit * latent.expected_consumption[0, time_resource]
        return c

    def cumulative(self, null_arm: Optional[int] = None) -> np.ndarray:
        w = np.array(self.weights)
        if null_arm is not None:
            w[null_arm] += self.deficit
        return np.cumsum(w / w.sum())

    def sample(self, rng: np.random.Generator, null_arm: Optional[int] = None) -> int:
        cum = self.cumulative(null_arm)
        return int(min(np.searchsorted(cum, rng.random(), side="right"), len(cum) - 1))


@dataclass(frozen=True, eq=False)
class LpSolution:
    value: float
    xi: np.ndarray
    eta: np.ndarray
    tight_constraints: tuple
    basis: tuple

    def distribution(self) -> ArmDistribution:
        s = self.xi.sum()
        if s <= 0:
            raise ValueError("optimal solution is zero; no LP-optimal mixture")
        return ArmDistribution(self.xi / s)


def _simplex(A: np.ndarray, b: np.ndarray, c: np.ndarray, basis=None):
    """Maximize ``c @ x`` s.t. ``A @ x <= b, x >= 0`` with ``b > 0``.

    Returns ``(x, y, basis)`` with ``y`` the dual prices. Entering and leaving
    variables follow Bland's rule (lowest index), so the returned vertex is a
    deterministic function of the data and the starting basis.
    """
    d, m = A.shape
    M = np.hstack([A, np.eye(d)])
    cost = np.concatenate([c, np.zeros(d)])
    start = list(range(m, m + d))
    if basis is not None:
        basis = list(basis)
        try:
            xb = np.linalg.solve(M[:, basis], b)
            if np.all(xb >= -FEAS_TOL):
                start = basis
        except np.linalg.LinAlgError:
            pass
    basis = start
    max_iter = 50 * (m + d) + 1000
    for _ in range(max_iter):
        Bm = M[:, basis]
        xb = np.linalg.solve(Bm, b)
        y = np.linalg.solve(Bm.T, cost[basis])
        reduced = cost - y @ M
        scale = max(1.0, float(np.max(np.abs(cost))))
        reduced[basis] = 0.0
        cand = np.flatnonzero(reduced > _PIVOT_TOL * scale)
        if cand.size == 0:
            x = np.zeros(m + d)
            x[basis] = xb
            return np.clip(x[:m], 0.0, None), np.clip(y, 0.0, None), tuple(basis)
        j = int(cand[0])
        col = np.linalg.solve(Bm, M[:, j])
        pos = np.flatnonzero(col > _PIVOT_TOL)
        if pos.size == 0:
            raise UnboundedLPError("LP-primal is unbounded")
        ratios = np.maximum(xb[pos], 0.0) / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * max(1.0, best)]
        leave = min(ties, key=lambda k: basis[k])
        basis[leave] = j
    raise RuntimeError("simplex did not converge")


def _solve(latent: LatentStructure, budgets, basis=None) -> LpSolution:
    A = np.ascontiguousarray(latent.expected_consumption.T)
    b = np.asarray(budgets, dtype=float).reshape(-1)
    r = latent.expected_reward
    free = np.all(A == 0, axis=0) & (r > 0)
    if np.any(free):
        raise UnboundedLPError(
            f"arms {np.flatnonzero(free).tolist()} earn reward without consuming any resource")
    x, y, basis = _simplex(A, b, r, basis)
    slack = b - A @ x
    tight = tuple(int(i) for i in np.flatnonzero(slack <= FEAS_TOL * np.maximum(1.0, b)))
    return LpSolution(float(r @ x), x, y, tight, basis)


def solve_primal(latent: LatentStructure, budgets, basis: Optional[Sequence[int]] = None) -> LpSolution:
    """Optimal basic solution of LP-primal together with its dual.

    ``basis`` optionally warm-starts the simplex from a previously optimal
    basis (used when many closely related LPs are solved in a row).
    """
    return _solve(latent, budgets, basis)


def lpopt(latent: LatentStructure, budgets) -> float:
    return solve_primal(latent, budgets).value


def lp_value(distribution, latent: LatentStructure, budgets, time_resource: Optional[int] = None) -> float:
    """``r(D) * min_i B_i / c_i(D)`` over resources with positive consumption."""
    if not isinstance(distribution, ArmDistribution):
        distribution = ArmDistribution(distribution)
    r = distribution.reward(latent)
    c = distribution.consumption(latent, time_resource)
    b = np.asarray(budgets, dtype=float).reshape(-1)
    if r <= 0:
        return 0.0
    pos = c > 0
    if not np.any(pos):
        raise UnboundedLPError("distribution earns reward while consuming nothing")
    return float(r * np.min(b[pos] / c[pos]))


def best_fixed_arm_value(latent: LatentStructure, budgets) -> float:
    """Largest LP-value among point-mass distributions."""
    return max(lp_value(ArmDistribution.point(x, latent.arms), latent, budgets)
               for x in range(latent.arms))


def lp_perfect(latent: LatentStructure, budgets, horizon: int, null_arm: Optional[int] = None,
               solution: Optional[LpSolution] = None) -> ArmDistribution:
    """LP-optimal mixture with per-round consumption <= B/T and support <= d.

    Normalizes an optimal vertex ``xi`` to ``D = xi / |xi|_1``; if some
    resource is then consumed faster than ``B/T`` per round, scales the
    non-null mass by ``alpha = (B/T) / max_i c_i(D)`` and moves the rest to
    the null arm. Budgets must be uniform.
    """
    b = np.asarray(budgets, dtype=float).reshape(-1)
    if not np.allclose(b, b[0], rtol=1e-12, atol=0):
        raise ValueError("lp_perfect expects uniform budgets; call normalize_budgets first")
    B = float(b[0])
    if solution is None:
        solution = solve_primal(latent, b)
    xi = solution.xi
    total = xi.sum()
    m = latent.arms
    if total <= 0 or solution.value <= 0:
        if null_arm is None:
            raise ValueError("zero LP optimum and no null arm to idle on")
        return ArmDistribution.point(null_arm, m)
    D = xi / total
    c = D @ latent.expected_consumption
    rate = B / horizon
    cmax = float(c.max())
    if cmax <= rate * (1 + 1e-12):
        return ArmDistribution(D)
    if null_arm is None:
        raise ValueError("rescaling to per-round consumption B/T needs a null arm")
    alpha = rate / cmax
    w = alpha * D
    w[null_arm] = 0.0
    w[null_arm] = max(0.0, 1.0 - w.sum())
    return ArmDistribution(w)


def instance_lpopt(inst: Instance) -> float:
    return lpopt(inst.latent, inst.budgets)
