"""Environment constructors: dynamic pricing, dynamic procurement, the
lower-bound family, the round-robin and the two-group separation examples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ArmSupport, Environment, append_null_arm


@dataclass(frozen=True, eq=False)
class DemandCurve:
    """Finite distribution of buyer (or seller) values on [0, 1]."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        q = np.asarray(self.probs, dtype=float).reshape(-1)
        if v.shape != q.shape or v.size == 0:
            raise ValueError("values and probs must be nonempty and of equal length")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("values must lie in [0, 1]")
        if np.any(q < 0) or abs(q.sum() - 1) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        order = np.argsort(v, kind="stable")
        v, q = v[order], q[order]
        v.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", q)

    @classmethod
    def from_pairs(cls, pairs) -> "DemandCurve":
        v, q = zip(*pairs)
        return cls(np.array(v), np.array(q))

    def prob_at_least(self, p: float) -> float:
        """``Pr[v >= p]``: sale probability when posting price ``p`` to a buyer."""
        return float(min(1.0, self.probs[self.values >= p].sum()))

    def prob_at_most(self, p: float) -> float:
        """``Pr[v <= p]``: a seller accepts offer ``p`` (ties count as a sale)."""
        return float(min(1.0, self.probs[self.values <= p].sum()))


def _two_point(prob: float, hit, miss) -> ArmSupport:
    pts = [(prob, *hit), (1.0 - prob, *miss)]
    return ArmSupport.from_points([pt for pt in pts if pt[0] > 0])


def _check_prices(prices) -> list:
    prices = [float(p) for p in prices]
    if not prices:
        raise ValueError("price list is empty")
    if any(p < 0 or p > 1 for p in prices):
        raise ValueError("prices must lie in [0, 1]")
    return prices


def make_pricing_env(demand: DemandCurve, prices: Sequence[float], B: float, T: int,
                     null_arm: bool = True) -> Environment:
    """Seller with ``B`` items facing ``T`` unit-demand buyers; one arm per price.

    Resources are ``[items, time]`` with uniform budgets ``B`` (time is
    consumed at ``B/T`` per round). A sale at price ``p`` yields reward ``p``.
    """
    prices = _check_prices(prices)
    if not 0 < B <= T:
        raise ValueError("need 0 < B <= T")
    rate = B / T
    sup = [_two_point(demand.prob_at_least(p), (p, [1.0, rate]), (0.0, [0.0, rate])) for p in prices]
    env = Environment(sup, [B, B], T, time_resource=1)
    return append_null_arm(env) if null_arm else env


def make_procurement_env(demand: DemandCurve, prices: Sequence[float], B: float, T: int,
                         null_arm: bool = True) -> Environment:
    """Buyer with money ``B`` facing ``T`` sellers; each purchase yields reward 1.

    A seller with value ``v`` accepts offer ``p`` iff ``v <= p``; the purchase
    costs ``p``. Resources are ``[money, time]``.
    """
    prices = _check_prices(prices)
    if not 0 < B <= T:
        raise ValueError("need 0 < B <= T")
    rate = B / T
    sup = [_two_point(demand.prob_at_most(p), (1.0, [p, rate]), (0.0, [0.0, rate])) for p in prices]
    env = Environment(sup, [B, B], T, time_resource=1)
    return append_null_arm(env) if null_arm else env


@dataclass(frozen=True)
class LowerBoundParams:
    m: int
    B: float
    p: float
    eps: float
    best_arm: int = 0
    T: int = 10**9

    def __post_init__(self):
        if self.m < 1 or not 0 <= self.best_arm < self.m:
            raise ValueError("need m >= 1 and 0 <= best_arm < m")
        if not (0 <= self.eps < self.p <= 1):
            raise ValueError("need 0 <= eps < p <= 1")
        if not 0 < self.B <= self.T:
            raise ValueError("need 0 < B <= T")


def make_lb_env(params: LowerBoundParams, null_arm: bool = False) -> Environment:
    """Every arm pays 1; consumption is Bernoulli(p), or Bernoulli(p - eps) on the best arm.

    Resources are ``[resource, time]``; the default horizon is effectively infinite.
    """
    rate = params.B / params.T
    sup = []
    for x in range(params.m):
        q = params.p - params.eps if x == params.best_arm else params.p
        sup.append(_two_point(q, (1.0, [1.0, rate]), (1.0, [0.0, rate])))
    env = Environment(sup, [params.B, params.B], params.T, time_resource=1)
    return append_null_arm(env) if null_arm else env


def opt_inf(params: LowerBoundParams) -> float:
    """Optimal expected reward of the infinite-horizon family: ``floor(B+1)/(p-eps) - 1``."""
    if not params.eps < params.p:
        raise ValueError("need eps < p")
    return math.floor(params.B + 1) / (params.p - params.eps) - 1


def make_separation_env(case: str, m: int = 4, B: float = 10, T: int = 40) -> Environment:
    """Two equal groups of deterministic arms, each group draining its own resource.

    Case ``"i"``: the first group consumes 1 per pull of resource 0 and the
    second 1/2 per pull of resource 1; case ``"ii"`` swaps the rates.
    Resources are ``[r0, r1, time]``.
    """
    if m % 2 or m < 2:
        raise ValueError("m must be a positive even number")
    if not B < T / 2:
        raise ValueError("need B < T/2")
    if case not in ("i", "ii"):
        raise ValueError("case must be 'i' or 'ii'")
    a, b = (1.0, 0.5) if case == "i" else (0.5, 1.0)
    rate = B / T
    sup = []
    for x in range(m):
        c = [a, 0.0, rate] if x < m // 2 else [0.0, b, rate]
        sup.append(ArmSupport.point(1.0, c))
    return append_null_arm(Environment(sup, [B, B, B], T, time_resource=2))


def make_roundrobin_env(d: int, B: float, T: int) -> Environment:
    """``d`` arms, arm ``i`` pays 1 and consumes one unit of resource ``i``.

    Resources are ``[r_0 .. r_{d-1}, time]``; a null arm is appended.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if T < d * B + d:
        raise ValueError("need T >= d*B + d")
    rate = B / T
    sup = []
    for x in range(d):
        c = np.zeros(d + 1)
        c[x] = 1.0
        c[d] = rate
        sup.append(ArmSupport.point(1.0, c))
    return append_null_arm(Environment(sup, [B] * (d + 1), T, time_resource=d))


# -- the two-point examples where a mixture of prices beats any fixed price ----


def two_point_pricing(k: float, delta: float, n: int):
    """Buyer value 1 w.p. ``k^(1/2+delta)/n`` else ``k^(delta-1/2)``; returns (demand, prices)."""
    low = k ** (delta - 0.5)
    q = k ** (0.5 + delta) / n
    if not 0 < q < 1:
        raise ValueError("parameters give an invalid probability")
    return DemandCurve(np.array([low, 1.0]), np.array([1.0 - q, q])), [low, 1.0]


def two_point_procurement(B: float, T: int):
    """Seller value 0 w.p. ``B/T`` else 1; returns (demand, prices)."""
    q = B / T
    return DemandCurve(np.array([0.0, 1.0]), np.array([q, 1.0 - q])), [0.0, 1.0]


# -- configuration entry point ------------------------------------------------


def _demand(spec) -> DemandCurve:
    if isinstance(spec, dict):
        return DemandCurve(np.array(spec["values"]), np.array(spec["probs"]))
    return DemandCurve.from_pairs(spec)


def env_from_config(cfg: dict, alpha: float = 1.0) -> Environment:
    """Build an environment from a config dict, with budgets and horizon scaled by ``alpha``.

    ``cfg["env"]`` selects the constructor: ``pricing``, ``procurement``,
    ``lb``, ``separation``, ``roundrobin``, ``two_point_pricing``,
    ``two_point_procurement`` or ``instance`` (an inline serialized environment).
    """
    kind = cfg.get("env")
    if kind is None:
        raise ValueError("config has no 'env' field")

    def B():
        return cfg["B"] * alpha

    def T():
        return int(round(cfg["T"] * alpha))

    if kind == "pricing":
        return make_pricing_env(_demand(cfg["demand"]), cfg["prices"], B(), T(),
                                cfg.get("null_arm", True))
    if kind == "procurement":
        return make_procurement_env(_demand(cfg["demand"]), cfg["prices"], B(), T(),
                                    cfg.get("null_arm", True))
    if kind == "lb":
        params = LowerBoundParams(cfg["m"], B(), cfg["p"], cfg["eps"], cfg.get("best_arm", 0),
                                  int(round(cfg.get("T", 10**9) * alpha)))
        return make_lb_env(params, cfg.get("null_arm", False))
    if kind == "separation":
        return make_separation_env(cfg.get("case", "i"), cfg.get("m", 4), B(), T())
    if kind == "roundrobin":
        return make_roundrobin_env(cfg["d"], B(), T())
    if kind == "two_point_pricing":
        demand, prices = two_point_pricing(cfg["k"], cfg["delta"], cfg["T"])
        return make_pricing_env(demand, prices, cfg["k"] * alpha, T())
    if kind == "two_point_procurement":
        demand, prices = two_point_procurement(cfg["B"], cfg["T"])
        return make_procurement_env(demand, prices, B(), T())
    if kind == "instance":
        env = Environment.from_dict(cfg["instance"])
        if alpha != 1.0:
            inst = env.instance
            T2 = int(round(inst.horizon * alpha))
            sup = env.supports
            if inst.time_resource is not None:
                # keep the time column equal to B_time / T after scaling
                j = inst.time_resource
                rate = inst.budgets[j] * alpha / T2
                sup = [type(s)(s.weights, s.rewards,
                               np.where(np.arange(s.consumption.shape[1]) == j, rate, s.consumption))
                       for s in sup]
            env = Environment(sup, inst.budgets * alpha, T2, inst.time_resource, inst.null_arm)
        return env
    raise ValueError(f"unknown env {kind!r}")
