"""Price meshes, the eps-cover relation between arms, and discretization error."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import LatentStructure
from .lp import lpopt

_TOL = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Sorted, strictly increasing price points in [0, 1]."""

    kind: str
    points: tuple
    eps: Optional[float] = None
    p0: Optional[float] = None

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        if not pts:
            raise ValueError("mesh is empty")
        if any(p < 0 or p > 1 for p in pts):
            raise ValueError("mesh points must lie in [0, 1]")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("mesh points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "eps": self.eps, "p0": self.p0, "points": list(self.points)}


def additive_mesh(eps: float) -> Mesh:
    """Multiples of ``eps`` in [0, 1]; ``floor(1/eps) + 1`` points (1 is not forced)."""
    if not eps > 0 or eps > 1:
        raise ValueError("need 0 < eps <= 1")
    k = math.floor(1 / eps + 1e-9)
    # round away float noise such as 3 * 0.1 = 0.30000000000000004
    pts = [min(1.0, round(i * eps, 12)) for i in range(k + 1)]
    return Mesh("additive", pts, eps=eps)


def hyperbolic_mesh(eps: float, p0: float) -> Mesh:
    """``{1/(1 + eps*l) : l = 0, 1, ...} & [p0, 1]``, ascending."""
    if not eps > 0:
        raise ValueError("need eps > 0")
    if not 0 < p0 < 1:
        raise ValueError("need 0 < p0 < 1")
    pts = []
    ell = 0
    while True:
        p = 1.0 / (1.0 + eps * ell)
        if p < p0 - 1e-15:
            break
        pts.append(p)
        ell += 1
    return Mesh("hyperbolic", sorted(pts), eps=eps, p0=p0)


def explicit_mesh(points: Sequence[float]) -> Mesh:
    return Mesh("explicit", sorted(set(float(p) for p in points)))


def covers(x: int, y: int, eps: float, latent: LatentStructure,
           time_resource: Optional[int] = None, tol: float = _TOL) -> bool:
    """Does arm ``x`` eps-cover arm ``y``?

    For each resource ``i`` with ``c_i(x) + c_i(y) > 0``: (i) ``r(x)/c_i(x) >=
    r(y)/c_i(y) - eps`` and (ii) ``c_i(x) >= c_i(y)``. When ``c_i(y) = 0 <
    c_i(x)`` the ratio ``r(y)/0`` is infinite unless ``r(y) = 0``, so (i)
    holds only if ``r(y) = 0``. The time resource (equal consumption on every
    arm) is checked only when neither arm consumes anything else.
    """
    r = latent.expected_reward
    C = latent.expected_consumption
    rx, ry = float(r[x]), float(r[y])
    cx, cy = C[x], C[y]
    resources = list(range(latent.resources))
    if time_resource is not None:
        others = [i for i in resources if i != time_resource]
        if np.any(cx[others] > 0) or np.any(cy[others] > 0):
            resources = others
    for i in resources:
        a, b = float(cx[i]), float(cy[i])
        if a + b <= 0:
            continue
        if a < b - tol:
            return False
        if b <= 0:
            if ry > tol:
                return False
            continue
        if rx / a < ry / b - eps - tol:
            return False
    return True


def is_discretization(S: Sequence[int], latent: LatentStructure, eps: float,
                      time_resource: Optional[int] = None) -> bool:
    """True iff every arm of ``latent`` is eps-covered by some arm of ``S``."""
    S = list(S)
    if not S:
        raise ValueError("S must be nonempty")
    return all(any(covers(x, y, eps, latent, time_resource) for x in S)
               for y in range(latent.arms))


def uncovered_arms(S: Sequence[int], latent: LatentStructure, eps: float,
                   time_resource: Optional[int] = None) -> list:
    S = list(S)
    return [y for y in range(latent.arms)
            if not any(covers(x, y, eps, latent, time_resource) for x in S)]


def discretization_error(S: Sequence[int], X_full: Sequence[int], latent: LatentStructure,
                         budgets) -> float:
    """``LPOPT(X_full) - LPOPT(S)`` with both arm sets given as indices into ``latent``."""
    S, X = list(S), list(X_full)
    if not set(S) <= set(X):
        raise ValueError("S must be a subset of X_full")
    return lpopt(latent.subset(X), budgets) - lpopt(latent.subset(S), budgets)


def theorem_bound(eps: float, d: int, B: float) -> float:
    """Upper bound ``eps * d * B`` on the error of an eps-discretization."""
    return eps * d * B


def truncation_bound(p0: float, T: int, B: float) -> float:
    """Loss ``p0 * T**2 / B`` from restricting procurement prices to ``[p0, 1]``."""
    return p0 * T * T / B


def fine_grid(n: int = 1000, lo: float = 0.0) -> list:
    """Prices ``k/n`` in ``[lo, 1]``: a finite stand-in for the continuum."""
    return [k / n for k in range(n + 1) if k / n >= lo - 1e-15]


@dataclass
class MeshStudy:
    """A mesh placed inside a grid-based pricing or procurement instance."""

    mesh: Mesh
    prices: list
    mesh_arms: list
    grid_arms: list
    latent: LatentStructure
    budgets: np.ndarray
    time_resource: int
    null_arm: int

    @property
    def S(self) -> list:
        return self.mesh_arms + [self.null_arm]

    @property
    def X(self) -> list:
        return self.grid_arms + [self.null_arm]

    def is_discretization(self, eps: Optional[float] = None) -> bool:
        eps = self.mesh.eps if eps is None else eps
        sub = self.latent.subset(self.X)
        pos = {a: k for k, a in enumerate(self.X)}
        return is_discretization([pos[a] for a in self.S], sub, eps, self.time_resource)

    def error(self) -> float:
        return discretization_error(self.S, self.X, self.latent, self.budgets)


def mesh_study(kind: str, demand, mesh: Mesh, B: float, T: int, grid: Optional[Sequence[float]] = None) -> MeshStudy:
    """Build a pricing or procurement instance whose arms are ``grid | mesh``.

    Arms are the sorted union of the grid (default ``k/1000``) and the mesh
    points, so the mesh is a subset of the "full" action set; a null arm is
    appended last. Resources are ``[items or money, time]``.
    """
    from .envs import make_pricing_env, make_procurement_env

    grid = fine_grid() if grid is None else list(grid)
    prices = sorted(set(round(p, 12) for p in list(grid) + list(mesh.points)))
    make = {"pricing": make_pricing_env, "procurement": make_procurement_env}[kind]
    env = make(demand, prices, B, T, null_arm=True)
    inst = env.instance
    index = {p: k for k, p in enumerate(prices)}
    mesh_arms = sorted(index[round(p, 12)] for p in mesh.points)
    grid_set = set(round(p, 12) for p in grid) | set(round(p, 12) for p in mesh.points)
    grid_arms = sorted(index[p] for p in grid_set)
    return MeshStudy(mesh, prices, mesh_arms, grid_arms, env.latent, inst.budgets,
                     inst.time_resource, inst.null_arm)
