"""Problem model: outcomes, latent structures, instances, environments and
the budget-stopping episode loop."""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

# Slack used when comparing cumulative consumption against a budget; sums of
# fractional consumptions would otherwise trip the stopping rule spuriously.
BUDGET_TOL = 1e-9

MEAN_TOL = 1e-9
WEIGHT_TOL = 1e-12


class InvalidArmError(ValueError):
    """Raised when a policy or caller references an arm that does not exist."""


def _check_unit(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.size and (np.any(arr < 0.0) or np.any(arr > 1.0) or np.any(np.isnan(arr))):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Outcome:
    """One round's realized reward and consumption vector."""

    reward: float
    consumption: tuple

    def __post_init__(self):
        cons = tuple(float(c) for c in self.consumption)
        object.__setattr__(self, "reward", float(self.reward))
        object.__setattr__(self, "consumption", cons)
        _check_unit([self.reward], "reward")
        _check_unit(cons, "consumption")


@dataclass(frozen=True, eq=False)
class LatentStructure:
    """Expected reward per arm and expected consumption per (arm, resource)."""

    expected_reward: np.ndarray
    expected_consumption: np.ndarray

    def __post_init__(self):
        r = _check_unit(self.expected_reward, "expected_reward").reshape(-1)
        c = _check_unit(self.expected_consumption, "expected_consumption")
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if c.ndim != 2 or c.shape[0] != r.shape[0] or r.shape[0] < 1:
            raise ValueError("expected_consumption must be an m x d matrix matching m rewards")
        r.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "expected_reward", r)
        object.__setattr__(self, "expected_consumption", c)

    @property
    def arms(self) -> int:
        return self.expected_reward.shape[0]

    @property
    def resources(self) -> int:
        return self.expected_consumption.shape[1]

    def subset(self, arms: Sequence[int]) -> "LatentStructure":
        idx = np.asarray(list(arms), dtype=int)
        return LatentStructure(self.expected_reward[idx], self.expected_consumption[idx])

    def __eq__(self, other):
        if not isinstance(other, LatentStructure):
            return NotImplemented
        return (np.array_equal(self.expected_reward, other.expected_reward)
                and np.array_equal(self.expected_consumption, other.expected_consumption))


@dataclass(frozen=True, eq=False)
class Instance:
    latent: LatentStructure
    budgets: np.ndarray
    horizon: int
    time_resource: Optional[int] = None
    null_arm: Optional[int] = None

    def __post_init__(self):
        b = np.asarray(self.budgets, dtype=float).reshape(-1)
        if b.shape[0] != self.latent.resources:
            raise ValueError("one budget per resource required")
        if np.any(b <= 0):
            raise ValueError("budgets must be positive")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be a positive integer")
        if np.any(b > self.horizon * (1 + 1e-12)):
            raise ValueError("every budget must satisfy B_i <= T")
        b.setflags(write=False)
        object.__setattr__(self, "budgets", b)
        object.__setattr__(self, "horizon", int(self.horizon))
        c = self.latent.expected_consumption
        if self.time_resource is not None:
            j = self.time_resource
            if not 0 <= j < self.latent.resources:
                raise ValueError("time_resource out of range")
            rate = b[j] / self.horizon
            if not np.allclose(c[:, j], rate, rtol=0, atol=1e-12):
                raise ValueError("time column must equal B_time / T for every arm")
        if self.null_arm is not None:
            x = self.null_arm
            if not 0 <= x < self.latent.arms:
                raise ValueError("null_arm out of range")
            others = [i for i in range(self.latent.resources) if i != self.time_resource]
            if self.latent.expected_reward[x] != 0 or np.any(c[x, others] != 0):
                raise ValueError("null arm must have zero reward and zero non-time consumption")

    @property
    def arms(self) -> int:
        return self.latent.arms

    @property
    def resources(self) -> int:
        return self.latent.resources

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.budgets == self.budgets[0]))

    def info(self) -> "InstanceInfo":
        return InstanceInfo(self.arms, self.resources, self.budgets, self.horizon,
                            self.time_resource, self.null_arm)


@dataclass(frozen=True, eq=False)
class InstanceInfo:
    """What a learning policy is allowed to know: the instance minus its latent structure."""

    arms: int
    resources: int
    budgets: np.ndarray
    horizon: int
    time_resource: Optional[int] = None
    null_arm: Optional[int] = None

    @property
    def budget(self) -> float:
        return float(np.min(self.budgets))

    @property
    def time_rate(self) -> Optional[float]:
        if self.time_resource is None:
            return None
        return float(self.budgets[self.time_resource]) / self.horizon


@dataclass(frozen=True)
class ArmSupport:
    """Finite-support outcome distribution of one arm."""

    weights: np.ndarray
    rewards: np.ndarray
    consumption: np.ndarray  # shape (k, d)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        r = _check_unit(self.rewards, "support reward").reshape(-1)
        c = _check_unit(self.consumption, "support consumption")
        if c.ndim == 1:
            c = c.reshape(len(w), -1)
        if len(w) < 1 or r.shape[0] != len(w) or c.shape[0] != len(w):
            raise ValueError("support arrays must have matching lengths")
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("support weights must be nonnegative and sum to 1")
        for a in (w, r, c):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "consumption", c)

    @classmethod
    def point(cls, reward, consumption) -> "ArmSupport":
        return cls(np.ones(1), np.array([reward]), np.asarray(consumption, dtype=float).reshape(1, -1))

    @classmethod
    def from_points(cls, points) -> "ArmSupport":
        """Build from an iterable of ``(weight, reward, consumption)`` triples."""
        w, r, c = zip(*points)
        return cls(np.array(w, dtype=float), np.array(r, dtype=float), np.array(c, dtype=float))

    def mean(self):
        return float(self.weights @ self.rewards), self.weights @ self.consumption

    def with_column(self, value: float) -> "ArmSupport":
        col = np.full((len(self.weights), 1), value)
        return ArmSupport(self.weights, self.rewards, np.hstack([self.consumption, col]))

    def scaled(self, factors) -> "ArmSupport":
        return ArmSupport(self.weights, self.rewards, self.consumption * np.asarray(factors))


class Environment:
    """An instance together with its per-arm finite-support outcome model.

    Immutable after construction; safe to share across concurrent episodes.
    """

    def __init__(self, supports: Sequence[ArmSupport], budgets, horizon: int,
                 time_resource: Optional[int] = None, null_arm: Optional[int] = None):
        self.supports = tuple(supports)
        if not self.supports:
            raise ValueError("at least one arm is required")
        d = self.supports[0].consumption.shape[1]
        if any(s.consumption.shape[1] != d for s in self.supports):
            raise ValueError("all arms must report the same number of resources")
        means = [s.mean() for s in self.supports]
        latent = LatentStructure(np.clip([m[0] for m in means], 0, 1),
                                 np.clip(np.vstack([m[1] for m in means]), 0, 1))
        self.instance = Instance(latent, budgets, horizon, time_resource, null_arm)
        # flattened sampling tables for the hot loop
        self._cum = [np.cumsum(s.weights) for s in self.supports]
        self._det = [len(s.weights) == 1 for s in self.supports]
        self._rew = [s.rewards.tolist() for s in self.supports]
        self._con = [[tuple(row) for row in s.consumption.tolist()] for s in self.supports]

    @classmethod
    def deterministic(cls, latent: LatentStructure, budgets, horizon, time_resource=None,
                      null_arm=None) -> "Environment":
        sup = [ArmSupport.point(r, c) for r, c in
               zip(latent.expected_reward, latent.expected_consumption)]
        return cls(sup, budgets, horizon, time_resource, null_arm)

    @classmethod
    def bernoulli(cls, latent: LatentStructure, budgets, horizon, time_resource=None,
                  null_arm=None) -> "Environment":
        """Outcomes with reward ~ Bernoulli(r) and consumption_i ~ Bernoulli(c_i), independent.

        The time column (if declared) stays deterministic.
        """
        sup = []
        d = latent.resources
        for r, c in zip(latent.expected_reward, latent.expected_consumption):
            coords = [(0.0, 1.0, float(r))]
            for i in range(d):
                if i == time_resource or c[i] in (0.0, 1.0):
                    coords.append((float(c[i]), float(c[i]), 1.0))
                else:
                    coords.append((0.0, 1.0, float(c[i])))
            pts = {}
            for bits in np.ndindex(*([2] * (d + 1))):
                w = 1.0
                vals = []
                for b, (lo, hi, q) in zip(bits, coords):
                    w *= q if b else 1.0 - q
                    vals.append(hi if b else lo)
                if w > 0:
                    key = tuple(vals)
                    pts[key] = pts.get(key, 0.0) + w
            sup.append(ArmSupport.from_points([(w, k[0], k[1:]) for k, w in pts.items()]))
        return cls(sup, budgets, horizon, time_resource, null_arm)

    @property
    def latent(self) -> LatentStructure:
        return self.instance.latent

    @property
    def arms(self) -> int:
        return self.instance.arms

    @property
    def resources(self) -> int:
        return self.instance.resources

    def _replace(self, supports=None, budgets=None, time_resource=..., null_arm=...):
        return Environment(
            self.supports if supports is None else supports,
            self.instance.budgets if budgets is None else budgets,
            self.instance.horizon,
            self.instance.time_resource if time_resource is ... else time_resource,
            self.instance.null_arm if null_arm is ... else null_arm,
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        inst = self.instance
        return {
            "arms": inst.arms,
            "resources": inst.resources,
            "budgets": inst.budgets.tolist(),
            "horizon": inst.horizon,
            "time_resource": inst.time_resource,
            "null_arm": inst.null_arm,
            "support": [
                [{"weight": float(w), "reward": float(r), "consumption": c.tolist()}
                 for w, r, c in zip(s.weights, s.rewards, s.consumption)]
                for s in self.supports
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Environment":
        sup = [ArmSupport.from_points([(p["weight"], p["reward"], p["consumption"]) for p in arm])
               for arm in data["support"]]
        if "arms" in data and len(sup) != data["arms"]:
            raise ValueError("'arms' does not match the number of support arrays")
        env = cls(sup, data["budgets"], data["horizon"], data.get("time_resource"),
                  data.get("null_arm"))
        if "resources" in data and env.resources != data["resources"]:
            raise ValueError("'resources' does not match the consumption vectors")
        return env

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Environment":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Normalizations
# ---------------------------------------------------------------------------


def add_time_resource(model, budgets=None, horizon=None, time_budget=None):
    """Append a time resource consumed deterministically at rate ``time_budget / T``.

    ``model`` is either a :class:`LatentStructure` (then ``budgets`` and
    ``horizon`` are required and an :class:`Instance` is returned) or an
    :class:`Environment` (returns an Environment; its budgets and horizon are
    reused). ``time_budget`` defaults to the horizon, i.e. one unit per round.
    """
    if isinstance(model, Environment):
        inst = model.instance
        if inst.time_resource is not None:
            raise ValueError("instance already has a time resource")
        T = inst.horizon
        tb = float(T if time_budget is None else time_budget)
        if tb > T:
            raise ValueError("time budget cannot exceed the horizon")
        sup = [s.with_column(tb / T) for s in model.supports]
        return Environment(sup, list(inst.budgets) + [tb], T, inst.resources, inst.null_arm)

    if horizon is None or int(horizon) < 1:
        raise ValueError("horizon T must be >= 1")
    T = int(horizon)
    b = np.asarray(budgets, dtype=float).reshape(-1)
    if np.any(b <= 0):
        raise ValueError("budgets must be positive")
    tb = float(T if time_budget is None else time_budget)
    if tb <= 0:
        raise ValueError("time budget must be positive")
    c = np.hstack([model.expected_consumption, np.full((model.arms, 1), tb / T)])
    latent = LatentStructure(model.expected_reward, c)
    return Instance(latent, np.append(b, tb), T, time_resource=model.resources)


def normalize_budgets(obj):
    """Rescale consumption so that every budget equals ``B = min_i B_i``.

    Works on an :class:`Instance` or an :class:`Environment`.
    """
    if isinstance(obj, Environment):
        inst = obj.instance
        B = float(inst.budgets.min())
        factors = B / inst.budgets
        if np.all(factors == 1.0):
            return obj
        sup = [s.scaled(factors) for s in obj.supports]
        return obj._replace(supports=sup, budgets=np.full(inst.resources, B))
    inst = obj
    B = float(inst.budgets.min())
    factors = B / inst.budgets
    if np.all(factors == 1.0):
        return inst
    latent = LatentStructure(inst.latent.expected_reward, inst.latent.expected_consumption * factors)
    return Instance(latent, np.full(inst.resources, B), inst.horizon, inst.time_resource, inst.null_arm)


def append_null_arm(obj):
    """Add an arm with zero reward and zero consumption except time. Idempotent."""
    inst = obj.instance if isinstance(obj, Environment) else obj
    if inst.time_resource is None:
        raise ValueError("a null arm requires a declared time resource")
    if inst.null_arm is not None:
        return obj
    row = np.zeros(inst.resources)
    row[inst.time_resource] = inst.budgets[inst.time_resource] / inst.horizon
    if isinstance(obj, Environment):
        sup = list(obj.supports) + [ArmSupport.point(0.0, row)]
        return obj._replace(supports=sup, null_arm=inst.arms)
    latent = LatentStructure(np.append(inst.latent.expected_reward, 0.0),
                             np.vstack([inst.latent.expected_consumption, row]))
    return Instance(latent, inst.budgets, inst.horizon, inst.time_resource, inst.arms)


# ---------------------------------------------------------------------------
# Randomness
# ---------------------------------------------------------------------------


def make_rng(seed, *key) -> np.random.Generator:
    """Counter-based (Philox) generator for a 64-bit seed and an optional spawn key.

    ``key`` items may be ints or strings; strings are hashed with CRC32 so that
    the derived stream is stable across processes and Python versions.
    """
    spawn = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in key)
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=spawn)
    return np.random.Generator(np.random.Philox(ss))


def _sample_index(env: Environment, arm: int, rng: np.random.Generator) -> int:
    if env._det[arm]:
        return 0
    cum = env._cum[arm]
    k = int(np.searchsorted(cum, rng.random(), side="right"))
    return min(k, len(cum) - 1)


def sample_outcome(env: Environment, arm: int, rng: np.random.Generator) -> Outcome:
    if not 0 <= arm < env.arms:
        raise InvalidArmError(f"arm {arm} out of range [0, {env.arms})")
    k = _sample_index(env, arm, rng)
    return Outcome(env._rew[arm][k], env._con[arm][k])


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------


@dataclass
class EpisodeTrace:
    """Per-round record of one run.

    Rounds ``1..stop_time-1`` earned reward; round ``stop_time`` (if it exists,
    i.e. ``stop_time <= T``) is the round whose consumption broke a budget.
    """

    arms: list
    outcome_index: list
    stop_time: int
    total_reward: float
    env: Environment = field(repr=False)

    @property
    def rounds(self):
        env = self.env
        return [(a, Outcome(env._rew[a][k], env._con[a][k]))
                for a, k in zip(self.arms, self.outcome_index)]

    def rewards(self) -> np.ndarray:
        env = self.env
        return np.array([env._rew[a][k] for a, k in zip(self.arms, self.outcome_index)])

    def consumption(self) -> np.ndarray:
        env = self.env
        if not self.arms:
            return np.zeros((0, env.resources))
        return np.array([env._con[a][k] for a, k in zip(self.arms, self.outcome_index)])

    def pulls(self) -> np.ndarray:
        """Number of pulls of each arm over the rewarded rounds 1..tau-1."""
        return np.bincount(np.asarray(self.arms[: self.stop_time - 1], dtype=int),
                           minlength=self.env.arms)


def run_episode(policy, env: Environment, rng: np.random.Generator) -> EpisodeTrace:
    """Play ``policy`` on ``env`` until a budget is exceeded or T rounds pass.

    The policy is reset with the public :class:`InstanceInfo` and must provide
    ``choose() -> int`` and ``update(arm, reward, consumption)``.
    """
    inst = env.instance
    T = inst.horizon
    d = inst.resources
    budgets = [float(b) * (1 + BUDGET_TOL) + BUDGET_TOL for b in inst.budgets]
    # the time resource is tracked by the round counter, which is exact
    checked = [i for i in range(d) if i != inst.time_resource]
    cum = [0.0] * d
    m = env.arms
    policy.reset(inst.info(), rng)
    arms, idx = [], []
    total = 0.0
    stop = T + 1
    rew, con, det, cumw = env._rew, env._con, env._det, env._cum
    for t in range(1, T + 1):
        arm = policy.choose()
        if not (0 <= arm < m):
            raise InvalidArmError(f"policy chose arm {arm} at round {t}; valid range is [0, {m})")
        arm = int(arm)
        if det[arm]:
            k = 0
        else:
            cw = cumw[arm]
            k = int(np.searchsorted(cw, rng.random(), side="right"))
            if k >= len(cw):
                k = len(cw) - 1
        arms.append(arm)
        idx.append(k)
        c = con[arm][k]
        over = False
        for i in checked:
            v = cum[i] + c[i]
            cum[i] = v
            if v > budgets[i]:
                over = True
        if over:
            stop = t
            break
        r = rew[arm][k]
        total += r
        policy.update(arm, r, c)
    return EpisodeTrace(arms, idx, stop, total, env)
