"""Learning policies: primal-dual with Hedge (PD-BwK), balanced exploration
(BalanceBwK), the deterministic warm-up, and simple baselines.

Every policy follows the episode protocol of :func:`bwk.core.run_episode`:
``reset(info, rng)``, then alternating ``choose()`` / ``update(arm, reward,
consumption)``. Policies only ever see :class:`~bwk.core.InstanceInfo`, never
the latent structure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .confidence import ConfidenceState, RadiusParams, rad
from .core import InstanceInfo, LatentStructure
from .hedge import Hedge
from .lp import ArmDistribution, UnboundedLPError, lp_perfect, solve_primal

_EPS_MIN = 1e-9
_EPS_MAX = 0.999


def pdbwk_eps(d: int, B: float) -> float:
    """``sqrt(ln d / B)``, clipped into the open interval Hedge accepts."""
    eps = math.sqrt(math.log(d) / B) if d > 1 else 0.0
    return min(max(eps, _EPS_MIN), _EPS_MAX)


class Policy:
    name = "policy"

    def reset(self, info: InstanceInfo, rng: np.random.Generator) -> None:
        self.info = info
        self.rng = rng

    def choose(self) -> int:
        raise NotImplementedError

    def update(self, arm: int, reward: float, consumption) -> None:
        pass


class PdBwK(Policy):
    """Primal-dual policy: Hedge over resources, optimistic bang-per-buck arm choice.

    After pulling every arm once, each round picks the arm minimizing
    ``y . LCB_consumption[:, j] / UCB_reward[j]`` (ties to the lowest index),
    then feeds that arm's LCB consumption column to Hedge as the payoff.
    A declared null arm has known zero reward, so it is never pulled.
    """

    name = "pdbwk"

    def __init__(self, c_rad: Optional[float] = None, eps: Optional[float] = None):
        self.c_rad = c_rad
        self.eps_override = eps

    def reset(self, info, rng):
        super().reset(info, rng)
        m, d = info.arms, info.resources
        self.params = RadiusParams(self.c_rad) if self.c_rad else RadiusParams.default(d, info.horizon, m)
        self.eps = self.eps_override or pdbwk_eps(d, info.budget)
        self.hedge = Hedge(d, self.eps)
        self.stats = ConfidenceState(m, d)
        self.ucb = np.ones(m)
        self.lcb = np.zeros((d, m))
        self.startup = [x for x in range(m) if x != info.null_arm]
        self.inv_ucb = np.ones(m)
        if info.null_arm is not None:
            self.inv_ucb[info.null_arm] = np.inf
            self.ucb[info.null_arm] = 0.0
        self.t = 0

    @property
    def in_startup(self) -> bool:
        return self.t < len(self.startup)

    def scores(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            s = (self.hedge.y @ self.lcb) * self.inv_ucb
        s[np.isnan(s)] = np.inf
        return s

    def choose(self) -> int:
        if self.in_startup:
            return self.startup[self.t]
        return int(np.argmin(self.scores()))

    def update(self, arm, reward, consumption):
        if not self.in_startup:
            self.hedge.step(self.lcb[:, arm], check=False)
        self.t += 1
        st = self.stats
        st.update(arm, reward, consumption)
        n = int(st.counts[arm])
        c = self.params.c_rad
        mr = min(1.0, max(0.0, st.reward_sum[arm] / n))
        if arm != self.info.null_arm:
            self.ucb[arm] = u = min(1.0, mr + math.sqrt(c * mr / n) + c / n)
            self.inv_ucb[arm] = 1.0 / u
        mc = np.clip(st.consumption_sum[arm] / n, 0.0, 1.0)
        self.lcb[:, arm] = np.maximum(0.0, mc - (np.sqrt(c * mc / n) + c / n))


def pdbwk_choose(policy: PdBwK) -> int:
    return policy.choose()


def pdbwk_update(policy: PdBwK, arm: int, outcome) -> PdBwK:
    policy.update(arm, outcome.reward, outcome.consumption)
    return policy


@dataclass
class DeterministicRun:
    total_reward: float
    post_startup_reward: float
    arms: list
    stop_time: int
    eps: float


def pdbwk_deterministic(latent: LatentStructure, budgets, eps: Optional[float] = None,
                        horizon: Optional[int] = None, time_resource: Optional[int] = None) -> DeterministicRun:
    """Primal-dual schedule when rewards and consumptions are known exactly.

    Pulls each arm once, then repeatedly picks ``argmin_j y.C[:, j] / r_j``
    and updates Hedge with the pulled column. Stops at the first round whose
    consumption would exceed a budget, or after ``horizon`` rounds.
    """
    r = latent.expected_reward
    C = latent.expected_consumption.T  # d x m
    d, m = C.shape
    b = np.asarray(budgets, dtype=float).reshape(-1)
    limit = b * (1 + 1e-9) + 1e-9
    if eps is None:
        eps = pdbwk_eps(d, float(b.min()))
    if horizon is None:
        if np.any((C.sum(axis=0) == 0) & (r > 0)):
            raise UnboundedLPError("free arm and no horizon: the schedule never stops")
        horizon = 10**12
    checked = np.array([i for i in range(d) if i != time_resource], dtype=int)
    base = 1.0 + eps
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), np.inf)
    v = np.ones(d)
    cum = np.zeros(d)
    arms = []
    total = post = 0.0
    t = 0
    while t < horizon:
        t += 1
        if t <= m:
            j = t - 1
        else:
            y = v / v.sum()
            s = (y @ C) * inv_r
            s[np.isnan(s)] = np.inf
            j = int(np.argmin(s))
        arms.append(j)
        cum += C[:, j]
        if np.any(cum[checked] > limit[checked]):
            return DeterministicRun(total, post, arms, t, eps)
        total += r[j]
        if t > m:
            post += r[j]
            v *= np.power(base, C[:, j])
            top = v.max()
            if top > 1e100:
                v /= top
    return DeterministicRun(total, post, arms, t + 1, eps)


class Balance(Policy):
    """Balanced exploration over potentially LP-perfect mixtures.

    Time is split into phases of ``m`` rounds. At each phase start the
    confidence region for the latent structure is refreshed, and a candidate
    set of LP-perfect mixtures is rebuilt from it. Round ``x`` of the phase is
    designated to arm ``x``: the candidate with the largest weight on ``x``
    is chosen and an arm is sampled from it.

    Without a ``domain``, the confidence region is the per-coordinate box of
    intersected confidence intervals and the candidate set is approximated by
    mapping ``K`` structures from the box through :func:`lp_perfect`: the
    optimistic corner (UCB rewards, LCB consumptions), the pessimistic corner,
    and ``K - 2`` uniform draws. With a ``domain`` (a finite list of feasible
    latent structures) the region is the exact set of consistent members and
    the candidate set is exact.
    """

    name = "balance"

    def __init__(self, K: int = 32, c_rad: Optional[float] = None,
                 domain: Optional[Sequence[LatentStructure]] = None):
        if K < 2:
            raise ValueError("K must be >= 2")
        self.K = int(K)
        self.c_rad = c_rad
        self.domain = list(domain) if domain is not None else None

    def reset(self, info, rng):
        super().reset(info, rng)
        if info.null_arm is None or info.time_resource is None:
            raise ValueError("Balance needs an instance with a time resource and a null arm")
        if not np.allclose(info.budgets, info.budgets[0]):
            raise ValueError("Balance expects uniform budgets")
        m, d = info.arms, info.resources
        self.params = RadiusParams(self.c_rad) if self.c_rad else RadiusParams.default(d, info.horizon, m)
        self.stats = ConfidenceState(m, d)
        self.r_lo, self.r_hi = np.zeros(m), np.ones(m)
        self.c_lo, self.c_hi = np.zeros((m, d)), np.ones((m, d))
        self._pin_known(self.r_lo, self.r_hi, self.c_lo, self.c_hi)
        self.region = list(self.domain) if self.domain is not None else None
        self.phase = -1
        self.pointer = m
        self.candidates: list = []
        self._basis = None
        self._cache: dict = {}
        self.t = 0

    def _pin_known(self, r_lo, r_hi, c_lo, c_hi):
        info = self.info
        tr, na = info.time_resource, info.null_arm
        c_lo[:, tr] = c_hi[:, tr] = info.time_rate
        r_lo[na] = r_hi[na] = 0.0
        others = [i for i in range(info.resources) if i != tr]
        c_lo[na, others] = c_hi[na, others] = 0.0

    # -- confidence region ----------------------------------------------

    def _refresh_region(self):
        st = self.stats
        seen = st.counts > 0
        if not np.any(seen):
            return
        r_lo, r_hi = st.reward_interval(self.params)
        c_lo, c_hi = st.consumption_interval(self.params)
        if self.region is not None:
            nr = st.mean_reward()
            nc = st.mean_consumption()
            n = np.maximum(st.counts, 1)
            wr = rad(self.params, nr, n)
            wc = rad(self.params, nc, n[:, None])
            keep = []
            for mu in self.region:
                ok_r = np.abs(mu.expected_reward - nr) <= wr + 1e-12
                ok_c = np.abs(mu.expected_consumption - nc) <= wc + 1e-12
                if np.all(ok_r[seen]) and np.all(ok_c[seen]):
                    keep.append(mu)
            if keep:
                self.region = keep
            return
        new = [np.maximum(self.r_lo, r_lo), np.minimum(self.r_hi, r_hi),
               np.maximum(self.c_lo, c_lo), np.minimum(self.c_hi, c_hi)]
        self._pin_known(*new)
        # an empty intersection means a confidence bound failed; restart from the current estimate
        bad_r = new[0] > new[1]
        bad_c = new[2] > new[3]
        new[0][bad_r], new[1][bad_r] = r_lo[bad_r], r_hi[bad_r]
        new[2][bad_c], new[3][bad_c] = c_lo[bad_c], c_hi[bad_c]
        self._pin_known(*new)
        self.r_lo, self.r_hi, self.c_lo, self.c_hi = new

    def _perfect(self, mu: LatentStructure) -> ArmDistribution:
        info = self.info
        if self.region is not None:
            key = id(mu)
            if key not in self._cache:
                sol = solve_primal(mu, info.budgets)
                self._cache[key] = lp_perfect(mu, info.budgets, info.horizon, info.null_arm, solution=sol)
            return self._cache[key]
        # warm start from the last optimal basis; infeasible bases fall back to a cold start
        sol = solve_primal(mu, info.budgets, basis=self._basis)
        self._basis = sol.basis
        return lp_perfect(mu, info.budgets, info.horizon, info.null_arm, solution=sol)

    def structures(self) -> list:
        if self.region is not None:
            return list(self.region)
        out = [LatentStructure(self.r_hi, self.c_lo), LatentStructure(self.r_lo, self.c_hi)]
        for _ in range(self.K - 2):
            r = self.rng.uniform(self.r_lo, self.r_hi)
            c = self.rng.uniform(self.c_lo, self.c_hi)
            out.append(LatentStructure(r, c))
        return out

    def balance_candidates(self) -> list:
        cands: list = []
        for mu in self.structures():
            D = self._perfect(mu)
            if not any(np.max(np.abs(D.weights - E.weights)) < 1e-9 for E in cands):
                cands.append(D)
        return cands

    def _start_phase(self):
        self.phase += 1
        self._refresh_region()
        self.candidates = self.balance_candidates()
        self._weights = np.vstack([D.weights for D in self.candidates])
        self.pointer = 0

    def choose(self) -> int:
        if self.pointer >= self.info.arms:
            self._start_phase()
        x = self.pointer
        self.pointer += 1
        D = self.candidates[int(np.argmax(self._weights[:, x]))]
        return D.sample(self.rng, self.info.null_arm)

    def update(self, arm, reward, consumption):
        self.t += 1
        self.stats.update(arm, reward, consumption)


class FixedDistribution(Policy):
    """Samples every round from a fixed mixture ``D``, ignoring feedback."""

    name = "fixed"

    def __init__(self, distribution):
        if not isinstance(distribution, ArmDistribution):
            distribution = ArmDistribution(distribution)
        self.distribution = distribution

    def reset(self, info, rng):
        super().reset(info, rng)
        w = self.distribution.weights
        if w.shape[0] != info.arms:
            raise ValueError("distribution length does not match the number of arms")
        if self.distribution.deficit > 1e-12 and info.null_arm is None:
            raise ValueError("distribution leaves mass for a null arm the instance lacks")
        self._cum = self.distribution.cumulative(info.null_arm)
        self._point = int(np.argmax(w)) if np.count_nonzero(w) == 1 and self.distribution.deficit <= 1e-12 else None

    def choose(self) -> int:
        if self._point is not None:
            return self._point
        k = int(np.searchsorted(self._cum, self.rng.random(), side="right"))
        return min(k, len(self._cum) - 1)


class UcbFixedArm(Policy):
    """Optimistic index on rewards alone; resources only matter via the stopping rule.

    Plays the arm with the largest reward UCB, ties to the lowest index. An
    arm never pulled has the trivial interval [0, 1], hence UCB 1.
    """

    name = "ucb_fixed_arm"

    def __init__(self, c_rad: Optional[float] = None):
        self.c_rad = c_rad

    def reset(self, info, rng):
        super().reset(info, rng)
        m = info.arms
        self.params = RadiusParams(self.c_rad) if self.c_rad else RadiusParams.default(info.resources, info.horizon, m)
        self.counts = np.zeros(m, dtype=np.int64)
        self.sums = np.zeros(m)
        self.ucb = np.ones(m)

    def choose(self) -> int:
        return int(np.argmax(self.ucb))

    def update(self, arm, reward, consumption):
        self.counts[arm] += 1
        self.sums[arm] += reward
        n = int(self.counts[arm])
        mr = min(1.0, self.sums[arm] / n)
        c = self.params.c_rad
        self.ucb[arm] = min(1.0, mr + math.sqrt(c * mr / n) + c / n)


class UniformRandom(Policy):
    name = "uniform_random"

    def choose(self) -> int:
        return int(self.rng.integers(self.info.arms))


def baseline_fixed_distribution(distribution) -> FixedDistribution:
    return FixedDistribution(distribution)


def baseline_ucb_fixed_arm(**kwargs) -> UcbFixedArm:
    return UcbFixedArm(**kwargs)


_REGISTRY = {
    "pdbwk": PdBwK,
    "balance": Balance,
    "ucb_fixed_arm": UcbFixedArm,
    "uniform_random": UniformRandom,
}


def make_policy(spec) -> Policy:
    """Build a policy from ``"name"``, ``"name:<json kwargs>"``, ``"fixed:<json weights>"``
    or a dict ``{"name": ..., **kwargs}``."""
    if isinstance(spec, dict):
        spec = dict(spec)
        name = spec.pop("name")
        if name == "fixed":
            return FixedDistribution(spec["weights"])
        if name not in _REGISTRY:
            raise ValueError(f"unknown policy {name!r}")
        return _REGISTRY[name](**spec)
    name, _, arg = str(spec).partition(":")
    if name == "fixed":
        if not arg:
            raise ValueError("fixed policy needs a JSON weight vector, e.g. fixed:[0.5,0.5]")
        return FixedDistribution(json.loads(arg))
    if name not in _REGISTRY:
        raise ValueError(f"unknown policy {name!r}")
    kwargs = json.loads(arg) if arg else {}
    return _REGISTRY[name](**kwargs)
