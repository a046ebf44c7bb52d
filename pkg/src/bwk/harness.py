"""Seeded Monte-Carlo experiments: per-trial rows, regret against LPOPT, and
scaling curves over a ladder of budget/horizon multipliers."""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import Environment, make_rng, run_episode
from .envs import env_from_config, make_separation_env
from .lp import lp_perfect, lpopt
from .policies import Balance, FixedDistribution, make_policy

CSV_COLUMNS = ("policy", "env", "alpha", "trial", "seed", "reward", "stop_time", "lpopt", "regret")


@dataclass
class ExperimentConfig:
    env: dict
    policies: list
    trials: int = 100
    seed: int = 0
    alphas: list = field(default_factory=lambda: [1.0])
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.env, dict) or "env" not in self.env:
            raise ValueError("config 'env' must be a dict with an 'env' field")
        if isinstance(self.policies, (str, dict)):
            self.policies = [self.policies]
        if not self.policies:
            raise ValueError("config needs at least one policy")
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        self.trials = int(self.trials)
        self.alphas = [float(a) for a in self.alphas]
        if not self.alphas or any(a < 1 for a in self.alphas):
            raise ValueError("scaling multipliers must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {"env", "policies", "trials", "seed", "alphas", "out", "workers"}
        extra = set(data) - known - {"policy"}
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        if "policy" in data:
            data.setdefault("policies", [data.pop("policy")])
        if "env" not in data or "policies" not in data:
            raise ValueError("config needs 'env' and 'policies'")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def env_name(self) -> str:
        return str(self.env.get("name", self.env["env"]))


def policy_label(spec) -> str:
    if isinstance(spec, dict):
        return json.dumps(spec, sort_keys=True, separators=(",", ":"))
    return str(spec)


def trial_seed(base_seed: int, policy: str, alpha_index: int, trial: int) -> int:
    """Stable 63-bit seed derived from (base seed, policy label, alpha index, trial)."""
    ss = np.random.SeedSequence(int(base_seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(zlib.crc32(policy.encode()), int(alpha_index), int(trial)))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def domain_for(env_cfg: dict, alpha: float) -> Optional[list]:
    """Finite set of candidate latent structures, where the environment family defines one."""
    if env_cfg["env"] == "separation":
        m = env_cfg.get("m", 4)
        B, T = env_cfg["B"] * alpha, int(round(env_cfg["T"] * alpha))
        return [make_separation_env(c, m, B, T).latent for c in ("i", "ii")]
    return None


def build_policy(spec, env: Environment, env_cfg: dict, alpha: float):
    """Resolve a policy spec; ``fixed:lp_perfect`` and ``balance`` with ``domain: "auto"``
    are filled in from the (scaled) environment."""
    if isinstance(spec, str) and spec == "fixed:lp_perfect":
        inst = env.instance
        return FixedDistribution(lp_perfect(env.latent, inst.budgets, inst.horizon, inst.null_arm))
    if isinstance(spec, dict) and spec.get("name") == "balance" and isinstance(spec.get("domain"), str):
        kw = {k: v for k, v in spec.items() if k not in ("name", "domain")}
        dom = domain_for(env_cfg, alpha)
        if dom is None:
            raise ValueError(f"environment {env_cfg['env']!r} has no finite domain")
        return Balance(domain=dom, **kw)
    return make_policy(spec)


@lru_cache(maxsize=64)
def _scaled(env_json: str, alpha: float):
    env = env_from_config(json.loads(env_json), alpha)
    return env, lpopt(env.latent, env.instance.budgets)


@dataclass(frozen=True)
class TrialRow:
    policy: str
    env: str
    alpha: float
    trial: int
    seed: int
    reward: float
    stop_time: int
    lpopt: float

    @property
    def regret(self) -> float:
        return self.lpopt - self.reward

    def values(self) -> tuple:
        return (self.policy, self.env, _fmt(self.alpha), self.trial, self.seed,
                _fmt(self.reward), self.stop_time, _fmt(self.lpopt), _fmt(self.regret))


def _fmt(x: float) -> str:
    return repr(float(x))


def _run_trial(task) -> TrialRow:
    env_json, env_name, spec, label, alpha, a_idx, trial, base_seed = task
    env, lp = _scaled(env_json, alpha)
    policy = build_policy(spec, env, json.loads(env_json), alpha)
    seed = trial_seed(base_seed, label, a_idx, trial)
    tr = run_episode(policy, env, make_rng(seed))
    return TrialRow(label, env_name, alpha, trial, seed, float(tr.total_reward), int(tr.stop_time), lp)


@dataclass
class SummaryRow:
    policy: str
    alpha: float
    trials: int
    mean_reward: float
    stderr: float
    lpopt: float
    mean_regret: float
    mean_stop_time: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RegretReport:
    rows: list
    env: str = ""

    def summary(self) -> list:
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r.policy, r.alpha), []).append(r)
        out = []
        for (pol, alpha), rs in groups.items():
            rs = sorted(rs, key=lambda r: r.trial)
            rew = np.array([r.reward for r in rs])
            n = len(rew)
            se = float(rew.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            lp = rs[0].lpopt
            out.append(SummaryRow(pol, alpha, n, float(rew.mean()), se, lp, lp - float(rew.mean()),
                                  float(np.mean([r.stop_time for r in rs]))))
        return out

    def find(self, policy: str, alpha: float = 1.0) -> SummaryRow:
        for s in self.summary():
            if s.policy == policy and s.alpha == alpha:
                return s
        raise KeyError((policy, alpha))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.values())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"env": self.env, "summary": [s.to_dict() for s in self.summary()]},
                          indent=2, sort_keys=True)

    def write(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            f.write(self.to_csv())
        stem = path[:-4] if path.endswith(".csv") else path
        with open(stem + ".summary.json", "w") as f:
            f.write(self.to_json() + "\n")


def run_experiment(config: ExperimentConfig) -> RegretReport:
    """Run every (policy, alpha, trial) combination; deterministic for a given config.

    Rows are ordered by policy, then alpha, then trial, whatever the number
    of worker processes.
    """
    env_json = json.dumps(config.env, sort_keys=True)
    name = config.env_name()
    tasks = []
    for spec in config.policies:
        label = policy_label(spec)
        for a_idx, alpha in enumerate(config.alphas):
            for trial in range(config.trials):
                tasks.append((env_json, name, spec, label, alpha, a_idx, trial, config.seed))
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            rows = list(ex.map(_run_trial, tasks, chunksize=max(1, len(tasks) // (4 * config.workers))))
    else:
        rows = [_run_trial(t) for t in tasks]
    order = {policy_label(s): k for k, s in enumerate(config.policies)}
    rows.sort(key=lambda r: (order[r.policy], r.alpha, r.trial))
    report = RegretReport(rows, name)
    if config.out:
        report.write(config.out)
    return report


@dataclass
class RegretCurve:
    policy: str
    points: list  # (alpha, regret, regret / sqrt(alpha))
    slope: float


def regret_curve(report: RegretReport, policy: Optional[str] = None) -> RegretCurve:
    """Regret against alpha with a least-squares log-log slope."""
    rows = [s for s in report.summary() if policy is None or s.policy == policy]
    if policy is None:
        names = {s.policy for s in rows}
        if len(names) != 1:
            raise ValueError("report has several policies; pass one explicitly")
        policy = names.pop()
    rows.sort(key=lambda s: s.alpha)
    if len(rows) < 3:
        raise ValueError("a regret curve needs at least 3 scaling points")
    pts = [(s.alpha, s.mean_regret, s.mean_regret / math.sqrt(s.alpha)) for s in rows]
    a = np.array([p[0] for p in pts])
    g = np.array([p[1] for p in pts])
    slope = float(np.polyfit(np.log(a), np.log(g), 1)[0]) if np.all(g > 0) else float("nan")
    return RegretCurve(policy, pts, slope)

