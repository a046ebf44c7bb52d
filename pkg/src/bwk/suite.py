"""The acceptance battery: one function per criterion, each returning metrics
and a verdict. Results are written as a CSV that depends only on the seed;
wall-clock timings go to stdout and a separate JSON file."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import oracles
from .confidence import RadiusParams, rad
from .core import LatentStructure, add_time_resource, append_null_arm, make_rng, run_episode
from .discretization import (
    additive_mesh,
    explicit_mesh,
    fine_grid,
    hyperbolic_mesh,
    mesh_study,
    theorem_bound,
    truncation_bound,
)
from .envs import (
    DemandCurve,
    LowerBoundParams,
    make_lb_env,
    make_pricing_env,
    make_procurement_env,
    make_roundrobin_env,
    opt_inf,
    two_point_pricing,
    two_point_procurement,
)
from .harness import ExperimentConfig, regret_curve, run_experiment
from .hedge import Hedge
from .lp import best_fixed_arm_value, lp_perfect, lp_value, lpopt, solve_primal
from .policies import FixedDistribution, pdbwk_deterministic

TOL = 1e-12


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: list = field(default_factory=list)  # (key, value)
    limit: Optional[float] = None  # runtime budget in seconds
    seconds: float = 0.0

    @property
    def within_time(self) -> bool:
        return self.limit is None or self.seconds <= self.limit

    @property
    def ok(self) -> bool:
        return self.passed and self.within_time

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        shown = ", ".join(f"{k}={_show(v)}" for k, v in self.metrics[:6])
        budget = f" (limit {self.limit:g} s)" if self.limit is not None else ""
        return f"criterion {self.number:2d} {verdict}: {self.name} | {shown} | {self.seconds:.1f} s{budget}"


def _show(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# -- 1: confidence radius properties -----------------------------------------


def criterion_1(seed: int, n: int = 10_000) -> CriterionResult:
    rng = make_rng(seed, "criterion-1")
    c = rng.uniform(0.5, 30.0, n)

    def R(nu, N):
        return np.sqrt(c * nu / N) + c / N

    # rad() itself must agree with the vectorized formula used below
    idx = rng.integers(0, n, 50)
    nu0 = rng.random(50)
    N0 = rng.integers(1, 10**6, 50)
    agree = all(abs(rad(RadiusParams(float(c[i])), float(a), int(b)) - R(a, b)[i]) <= TOL
                for i, a, b in zip(idx, nu0, N0))

    def logint(lo, hi, size):
        return np.floor(np.exp(rng.uniform(math.log(lo), math.log(hi + 1), size))).astype(np.int64)

    v1, v2 = rng.random(n), rng.random(n)
    lo, hi = np.minimum(v1, v2), np.maximum(v1, v2)
    N1, N2 = logint(1, 10**6, n), logint(1, 10**6, n)
    Nl, Nh = np.minimum(N1, N2), np.maximum(N1, N2)
    counts = {}
    counts["a_nu"] = int(np.sum(R(lo, Nl) > R(hi, Nl) + TOL))
    counts["a_N"] = int(np.sum(R(lo, Nl) < R(lo, Nh) - TOL))
    counts["b"] = int(np.sum(R((v1 + v2) / 2, N1) < (R(v1, N1) + R(v2, N1)) / 2 - TOL))
    counts["c"] = int(np.sum(np.maximum(0, lo - R(lo, N1)) > np.maximum(0, hi - R(hi, N1)) + TOL))
    # (d): nu in [4c/N, 1], only where that range is nonempty
    Nd = logint(1, 10**6, n)
    Nd = np.maximum(Nd, np.ceil(4 * c).astype(np.int64))
    nud = rng.uniform(np.minimum(1.0, 4 * c / Nd), 1.0)
    counts["d"] = int(np.sum(nud - R(nud, Nd) < nud / 4 - TOL))
    # (e): nu in [0, 4c/N]
    Ne = logint(1, 10**6, n)
    nue = rng.uniform(0, np.minimum(1.0, 4 * c / Ne))
    counts["e"] = int(np.sum(R(nue, Ne) > 3 * c / Ne + TOL))
    # (f): exact scaling identity
    alpha = 1.0 - rng.random(n)  # (0, 1]
    lhs = R(v1, alpha * N1)
    rhs = R(alpha * v1, N1) / alpha
    counts["f"] = int(np.sum(np.abs(lhs - rhs) > TOL * np.maximum(1.0, np.abs(rhs))))
    # (g): averaged radius, K = 4
    tables = oracles.harmonic_tables(10**6)
    Ng = logint(1, 10**6, n)
    Ng = np.minimum(Ng, 10**6)
    avg = (np.sqrt(c * v2) * tables[1][Ng] + c * tables[0][Ng]) / Ng
    counts["g"] = int(np.sum(avg > 4 * np.log(Ng + 1) * R(v2, Ng) + TOL))
    # two-sided closeness: |nu - nu_hat| <= rad(nu_hat, N) implies rad(nu_hat, N) <= 3 rad(nu, N)
    nh = rng.random(n)
    w = R(nh, N2)
    nu = rng.uniform(np.maximum(0, nh - w), np.minimum(1, nh + w))
    counts["close"] = int(np.sum(R(nh, N2) > 3 * R(nu, N2) + TOL))
    metrics = [("inputs_per_property", n), ("rad_matches_formula", agree)]
    metrics += [(f"violations_{k}", v) for k, v in counts.items()]
    passed = agree and all(v == 0 for v in counts.values())
    return CriterionResult(1, "confidence radius properties", passed, metrics, limit=5.0)


# -- 2: Hedge guarantee ---------------------------------------------------------


def criterion_2(seed: int, runs: int = 1000) -> CriterionResult:
    rng = make_rng(seed, "criterion-2")
    worst = math.inf
    steps = 0
    for _ in range(runs):
        d = int(rng.integers(1, 17))
        L = int(math.exp(rng.uniform(0, math.log(10**4))))
        eps = float(rng.uniform(0.01, 0.99))
        kind = rng.integers(3)
        if kind == 0:
            pay = rng.random((L, d))
        elif kind == 1:
            pay = (rng.random((L, d)) < rng.random(d)).astype(float)
        else:  # one coordinate favored, then switched halfway
            pay = np.zeros((L, d))
            pay[: L // 2, 0] = 1.0
            pay[L // 2:, d - 1] = 1.0
        h = Hedge(d, eps)
        for row in pay:
            h.step(row)
        steps += L
        worst = min(worst, h.guarantee_slack())
    return CriterionResult(2, "Hedge regret guarantee", worst >= -1e-9,
                           [("runs", runs), ("total_steps", steps), ("min_slack", worst)], limit=30.0)


# -- 3: LP oracle equivalence and LP-perfect properties ----------------------------


def _random_latent(rng, m, d, zero_frac=0.2):
    r = rng.random(m)
    C = rng.random((m, d))
    C[rng.random((m, d)) < zero_frac] = 0.0
    for x in range(m):  # no arm earns reward for free
        if not np.any(C[x] > 0):
            C[x, rng.integers(d)] = rng.uniform(0.05, 1.0)
    return LatentStructure(r, C)


def criterion_3(seed: int, n: int = 500) -> CriterionResult:
    rng = make_rng(seed, "criterion-3")
    value_err = dual_gap = dual_viol = 0.0
    perfect_fail = 0
    for _ in range(n):
        m, d = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        lat = _random_latent(rng, m, d)
        b = rng.uniform(1.0, 100.0, d)
        sol = solve_primal(lat, b)
        bf, _ = oracles.brute_force_lp(lat, b)
        value_err = max(value_err, abs(sol.value - bf))
        dual_gap = max(dual_gap, abs(oracles.dual_value(sol.eta, b) - sol.value))
        dual_viol = max(dual_viol, oracles.dual_violation(lat, sol.eta))
        # LP-perfect: uniform budget, time resource and null arm (at most 5 resources in total)
        dd = min(d, 4)
        base = LatentStructure(lat.expected_reward, lat.expected_consumption[:, :dd])
        if not np.all(np.any(base.expected_consumption > 0, axis=1)):
            base = _random_latent(rng, m, dd)
        B = float(rng.uniform(1.0, 100.0))
        T = int(rng.integers(math.ceil(B), math.ceil(B) * 20 + 1))
        inst = append_null_arm(add_time_resource(base, [B] * dd, T, time_budget=B))
        D = lp_perfect(inst.latent, inst.budgets, T, inst.null_arm)
        opt = lpopt(inst.latent, inst.budgets)
        c = D.consumption(inst.latent, inst.time_resource)
        support = D.support.size + (1 if D.deficit > 1e-12 and D.weights[inst.null_arm] == 0 else 0)
        ok_a = abs(lp_value(D, inst.latent, inst.budgets, inst.time_resource) - opt) <= 1e-8 * max(1.0, opt)
        ok_b = np.all(c <= B / T + 1e-10) and support <= inst.resources
        ok_c = support != 2 or np.any(np.abs(c - B / T) <= 1e-8)
        perfect_fail += int(not (ok_a and ok_b and ok_c))
    passed = value_err <= 1e-8 and dual_gap <= 1e-8 and dual_viol <= 1e-8 and perfect_fail == 0
    return CriterionResult(3, "LP solver vs vertex enumeration; LP-perfect properties", passed,
                           [("instances", n), ("max_value_error", value_err), ("max_duality_gap", dual_gap),
                            ("max_dual_violation", dual_viol), ("lp_perfect_failures", perfect_fail)])


# -- 4: round-robin separation --------------------------------------------------


def criterion_4(seed: int, trials: int = 200) -> CriterionResult:
    small = make_roundrobin_env(3, 5, 100)
    b = small.instance.budgets
    lp_small = lpopt(small.latent, b)
    non_null = small.latent.subset(range(3))
    best_fixed = best_fixed_arm_value(non_null, b)
    cfg = ExperimentConfig({"env": "roundrobin", "d": 3, "B": 2000, "T": 10**4},
                           ["pdbwk", "ucb_fixed_arm"], trials=trials, seed=seed)
    rep = run_experiment(cfg)
    pd = rep.find("pdbwk")
    ucb = rep.find("ucb_fixed_arm")
    ok = (abs(lp_small - 15) <= 1e-9 and abs(best_fixed - 5) <= 1e-9
          and pd.mean_reward >= 0.9 * pd.lpopt and ucb.mean_reward <= 2000 + 3 * ucb.stderr)
    return CriterionResult(4, "round-robin: mixtures beat any fixed arm", ok,
                           [("lpopt_d3_B5", lp_small), ("best_fixed_arm_B5", best_fixed),
                            ("pdbwk_mean_reward", pd.mean_reward), ("lpopt_B2000", pd.lpopt),
                            ("ucb_fixed_arm_mean_reward", ucb.mean_reward), ("ucb_fixed_arm_stderr", ucb.stderr)],
                           limit=120.0)


# -- 5: deterministic warm-up bound ------------------------------------------------


def criterion_5(seed: int, n: int = 100) -> CriterionResult:
    rng = make_rng(seed, "criterion-5")
    worst = math.inf
    fails = 0
    for _ in range(n):
        m, d = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        lat = _random_latent(rng, m, d)
        B = float(math.floor(math.exp(rng.uniform(math.log(100), math.log(10**4)))))
        run = pdbwk_deterministic(lat, [B] * d)
        opt = lpopt(lat, [B] * d)
        eps = run.eps
        bound = opt * (1 - eps - (m + 1) / B - math.log(d) / (eps * B))
        margin = run.post_startup_reward - bound
        worst = min(worst, margin / max(1.0, opt))
        fails += int(margin < -1e-9 * max(1.0, opt))
    return CriterionResult(5, "deterministic primal-dual warm-up bound", fails == 0,
                           [("instances", n), ("violations", fails), ("min_relative_margin", worst)])


# -- 6: lower-bound family closed forms -------------------------------------------


def criterion_6(seed: int, trials: int = 100_000) -> CriterionResult:
    prm = LowerBoundParams(m=2, B=10, p=0.5, eps=0.1, best_arm=0)
    env = make_lb_env(prm)
    level = math.floor(prm.B) + 1  # the episode ends when consumption first exceeds B
    out = []
    ok = True
    for arm in range(prm.m):
        q = prm.p - prm.eps if arm == prm.best_arm else prm.p
        w = np.zeros(prm.m)
        w[arm] = 1.0
        pol = FixedDistribution(w)
        rew = np.empty(trials)
        tau = np.empty(trials)
        for k in range(trials):
            tr = run_episode(pol, env, make_rng(seed, "criterion-6", arm, k))
            rew[k], tau[k] = tr.total_reward, tr.stop_time
        se_t = tau.std(ddof=1) / math.sqrt(trials)
        ok &= abs(tau.mean() - level / q) <= 3 * se_t
        out += [(f"arm{arm}_mean_stop", float(tau.mean())), (f"arm{arm}_expected_stop", level / q)]
        if arm == prm.best_arm:
            se_r = rew.std(ddof=1) / math.sqrt(trials)
            ok &= abs(rew.mean() - opt_inf(prm)) <= 3 * se_r
            out = [("best_arm_mean_reward", float(rew.mean())), ("opt_inf", opt_inf(prm)),
                   ("best_arm_stderr", float(se_r))] + out
    return CriterionResult(6, "lower-bound family: reward and stopping time", bool(ok), out, limit=60.0)


# -- 7: mixtures of prices beat a single price ----------------------------------


def criterion_7(seed: int) -> CriterionResult:
    demand, prices = two_point_pricing(100, 0.1, 1000)
    env = make_pricing_env(demand, prices, 100, 1000)
    b = env.instance.budgets
    lat = env.latent
    pr = lpopt(lat, b) / max(lp_value(np.eye(lat.arms)[x], lat, b, 1) for x in range(len(prices)))
    demand, prices = two_point_procurement(50, 500)
    env = make_procurement_env(demand, prices, 50, 500)
    b = env.instance.budgets
    lat = env.latent
    pc = lpopt(lat, b) / max(lp_value(np.eye(lat.arms)[x], lat, b, 1) for x in range(len(prices)))
    return CriterionResult(7, "two-price mixtures vs best single price", pr >= 1.7 and pc >= 1.7,
                           [("pricing_ratio", pr), ("procurement_ratio", pc)], limit=1.0)


# -- 8: discretization -------------------------------------------------------------


def _random_demand(rng) -> DemandCurve:
    k = int(rng.integers(1, 8))
    return DemandCurve(rng.random(k), rng.dirichlet(np.ones(k)))


def criterion_8(seed: int, n: int = 20) -> CriterionResult:
    rng = make_rng(seed, "criterion-8")
    worst_pricing = math.inf
    for _ in range(n):
        dem = _random_demand(rng)
        B = float(rng.integers(10, 200))
        T = int(B * rng.integers(2, 20))
        for eps in (0.2, 0.1, 0.05):
            st = mesh_study("pricing", dem, additive_mesh(eps), B, T)
            err = st.error()
            worst_pricing = min(worst_pricing, theorem_bound(eps, st.latent.resources, B) + 1e-6 - err)
    hyper_fail = 0
    worst_trunc = math.inf
    for _ in range(n):
        dem = _random_demand(rng)
        B = float(rng.integers(10, 200))
        T = int(B * rng.integers(2, 20))
        eps = float(rng.choice([0.2, 0.1, 0.05]))
        p0 = float(rng.uniform(0.05, 0.5))
        st = mesh_study("procurement", dem, hyperbolic_mesh(eps, p0), B, T, grid=fine_grid(1000, p0))
        hyper_fail += int(not st.is_discretization())
        full = mesh_study("procurement", dem, explicit_mesh([1.0]), B, T)
        trunc = mesh_study("procurement", dem, explicit_mesh([1.0]), B, T, grid=fine_grid(1000, p0))
        gap = lpopt(trunc.latent, trunc.budgets) - (lpopt(full.latent, full.budgets) - truncation_bound(p0, T, B))
        worst_trunc = min(worst_trunc, gap)
    ok = worst_pricing >= 0 and hyper_fail == 0 and worst_trunc >= -1e-8
    return CriterionResult(8, "discretization error and mesh covers", ok,
                           [("min_pricing_bound_slack", worst_pricing), ("hyperbolic_cover_failures", hyper_fail),
                            ("min_truncation_slack", worst_trunc)], limit=60.0)


# -- 9: domain-aware Balance vs PD-BwK on the two-group example ---------------------


def criterion_9(seed: int, trials: int = 200) -> CriterionResult:
    cfg = ExperimentConfig({"env": "separation", "case": "i", "m": 4, "B": 200, "T": 1000},
                           ["pdbwk", {"name": "balance", "domain": "auto"}], trials=trials, seed=seed)
    rep = run_experiment(cfg)
    pd = rep.find("pdbwk")
    bal = rep.find('{"domain":"auto","name":"balance"}')
    ok = bal.mean_regret <= 0.5 * pd.mean_regret
    return CriterionResult(9, "Balance regret at most half of PD-BwK on the two-group example", ok,
                           [("pdbwk_regret", pd.mean_regret), ("balance_regret", bal.mean_regret),
                            ("balance_stderr", bal.stderr), ("ratio", bal.mean_regret / pd.mean_regret),
                            ("lpopt", pd.lpopt)])


# -- 10: regret scaling ---------------------------------------------------------


LB_SCALING = {"env": "lb", "m": 2, "B": 100, "p": 0.5, "eps": 0.2, "T": 10**6}


def criterion_10(seed: int, trials: int = 500) -> CriterionResult:
    cfg = ExperimentConfig(dict(LB_SCALING), ["pdbwk"], trials=trials, seed=seed, alphas=[1, 4, 16])
    curve = regret_curve(run_experiment(cfg), "pdbwk")
    metrics = [("slope", curve.slope)]
    for a, g, g_norm in curve.points:
        metrics += [(f"regret_alpha{int(a)}", g), (f"regret_over_sqrt_alpha{int(a)}", g_norm)]
    return CriterionResult(10, "PD-BwK regret grows like sqrt(alpha)", bool(curve.slope <= 0.75),
                           metrics, limit=300.0)


# -- 11: determinism ----------------------------------------------------------


def criterion_11(seed: int) -> CriterionResult:
    """In-process rerun of a seeded multi-policy experiment; the full two-run
    CLI comparison lives in the acceptance tests."""
    cfg = ExperimentConfig({"env": "pricing", "demand": [[0.3, 0.5], [0.8, 0.5]], "prices": [0.3, 0.5, 0.8],
                            "B": 20, "T": 100},
                           ["pdbwk", "ucb_fixed_arm", "uniform_random", {"name": "balance", "K": 4}],
                           trials=5, seed=seed)
    a = run_experiment(cfg).to_csv()
    b = run_experiment(cfg).to_csv()
    return CriterionResult(11, "seeded reruns are byte-identical", a == b, [("rows", a.count("\n") - 1)])


CRITERIA: dict = {k: globals()[f"criterion_{k}"] for k in range(1, 12)}


@dataclass
class SuiteResult:
    seed: int
    results: list

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("criterion", "name", "passed", "metric", "value"))
        for r in self.results:
            for k, v in r.metrics:
                w.writerow((r.number, r.name, _fmt(r.passed), k, _fmt(v)))
        return buf.getvalue()

    def timings(self) -> dict:
        return {str(r.number): {"seconds": r.seconds, "limit": r.limit, "within_limit": r.within_time}
                for r in self.results}


def run_suite(seed: int = 0, only=None, echo: Optional[Callable[[str], None]] = print) -> SuiteResult:
    results = []
    for k, fn in CRITERIA.items():
        if only and k not in only:
            continue
        t0 = time.perf_counter()
        res = fn(seed)
        res.seconds = time.perf_counter() - t0
        results.append(res)
        if echo:
            echo(res.line())
    return SuiteResult(seed, results)


def write_suite(result: SuiteResult, path: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(result.to_csv())
    stem = path[:-4] if path.endswith(".csv") else path
    with open(stem + ".timings.json", "w") as f:
        json.dump(result.timings(), f, indent=2, sort_keys=True)
        f.write("\n")
