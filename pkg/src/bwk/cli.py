"""Command line entry point: ``bwk run | lp | mesh | lb | suite``.

Exit codes: 0 success, 1 usage or input error, 2 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_json(path: str):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}") from e


def _floats(x) -> list:
    return [float(v) for v in np.asarray(x).reshape(-1)]


def cmd_run(args) -> int:
    from .harness import ExperimentConfig, run_experiment

    data = _load_json(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.trials is not None:
        data["trials"] = args.trials
    if args.out is not None:
        data["out"] = args.out
    if args.workers is not None:
        data["workers"] = args.workers
    try:
        cfg = ExperimentConfig.from_dict(data)
        report = run_experiment(cfg)
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"bad config: {e}") from e
    print(f"{'policy':<32} {'alpha':>6} {'trials':>6} {'mean_reward':>12} {'stderr':>9} "
          f"{'lpopt':>10} {'regret':>10} {'stop_time':>10}")
    for s in report.summary():
        print(f"{s.policy[:32]:<32} {s.alpha:>6g} {s.trials:>6d} {s.mean_reward:>12.3f} {s.stderr:>9.3f} "
              f"{s.lpopt:>10.3f} {s.mean_regret:>10.3f} {s.mean_stop_time:>10.1f}")
    if cfg.out:
        print(f"wrote {cfg.out}")
    return EXIT_OK


def cmd_lp(args) -> int:
    from .core import Environment
    from .lp import UnboundedLPError, lp_perfect, solve_primal

    data = _load_json(args.instance)
    try:
        env = Environment.from_dict(data)
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"bad instance: {e}") from e
    inst = env.instance
    try:
        sol = solve_primal(env.latent, inst.budgets)
    except UnboundedLPError as e:
        raise UsageError(str(e)) from e
    out = {"lpopt": sol.value, "xi": _floats(sol.xi), "eta": _floats(sol.eta),
           "tight_constraints": list(sol.tight_constraints)}
    uniform = np.allclose(inst.budgets, inst.budgets[0])
    if uniform and inst.null_arm is not None:
        D = lp_perfect(env.latent, inst.budgets, inst.horizon, inst.null_arm, solution=sol)
        out["lp_perfect"] = _floats(D.weights)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_mesh(args) -> int:
    from .discretization import additive_mesh, fine_grid, hyperbolic_mesh, mesh_study, theorem_bound
    from .envs import DemandCurve

    try:
        if args.kind == "additive":
            mesh = additive_mesh(args.eps)
        else:
            if args.p0 is None:
                raise UsageError("hyperbolic mesh needs --p0")
            mesh = hyperbolic_mesh(args.eps, args.p0)
    except ValueError as e:
        raise UsageError(str(e)) from e
    out = {"kind": mesh.kind, "eps": mesh.eps, "p0": mesh.p0, "size": len(mesh), "points": list(mesh.points)}
    if args.instance:
        if args.demand is None or args.B is None or args.T is None:
            raise UsageError("--instance needs --demand, --B and --T")
        try:
            demand = DemandCurve.from_pairs(json.loads(args.demand))
        except (ValueError, TypeError) as e:
            raise UsageError(f"bad --demand: {e}") from e
        lo = mesh.p0 if mesh.p0 is not None else 0.0
        st = mesh_study(args.instance, demand, mesh, args.B, args.T, grid=fine_grid(args.grid, lo))
        err = st.error()
        bound = theorem_bound(mesh.eps, st.latent.resources, args.B)
        out.update({"instance": args.instance, "grid_points": args.grid,
                    "is_discretization": st.is_discretization(),
                    "discretization_error": err, "error_bound": bound, "within_bound": err <= bound + 1e-6})
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_lb(args) -> int:
    from .core import make_rng, run_episode
    from .envs import LowerBoundParams, make_lb_env, opt_inf
    from .lp import lpopt
    from .policies import FixedDistribution

    try:
        prm = LowerBoundParams(args.m, args.B, args.p, args.eps, 0, args.T)
    except ValueError as e:
        raise UsageError(str(e)) from e
    env = make_lb_env(prm)
    out = {"m": prm.m, "B": prm.B, "p": prm.p, "eps": prm.eps, "T": prm.T,
           "opt_inf": opt_inf(prm), "lpopt": lpopt(env.latent, env.instance.budgets),
           "best_arm_expected_stop": (int(np.floor(prm.B)) + 1) / (prm.p - prm.eps)}
    if args.trials:
        w = np.zeros(prm.m)
        w[prm.best_arm] = 1.0
        pol = FixedDistribution(w)
        rew = np.array([run_episode(pol, env, make_rng(args.seed, "lb", k)).total_reward
                        for k in range(args.trials)])
        out["best_arm_mean_reward"] = float(rew.mean())
        out["best_arm_stderr"] = float(rew.std(ddof=1) / np.sqrt(len(rew))) if len(rew) > 1 else 0.0
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_suite(args) -> int:
    from .suite import CRITERIA, run_suite, write_suite

    only = None
    if args.only:
        try:
            only = {int(k) for k in args.only.split(",")}
        except ValueError as e:
            raise UsageError("--only takes a comma-separated list of criterion numbers") from e
        if not only <= set(CRITERIA):
            raise UsageError(f"criteria are numbered {min(CRITERIA)}..{max(CRITERIA)}")
    res = run_suite(args.seed, only)
    write_suite(res, args.out)
    passed = sum(r.ok for r in res.results)
    print(f"{passed}/{len(res.results)} criteria passed; wrote {args.out}")
    return EXIT_OK if res.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bwk", description="Bandits with knapsacks: experiments, LP tools and the acceptance battery.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a seeded Monte-Carlo experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--out")
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_run)

    lp = sub.add_parser("lp", help="solve the LP relaxation of a serialized instance")
    lp.add_argument("instance")
    lp.set_defaults(func=cmd_lp)

    m = sub.add_parser("mesh", help="print a price mesh and optionally verify it on an instance")
    m.add_argument("--kind", choices=("additive", "hyperbolic"), default="additive")
    m.add_argument("--eps", type=float, required=True)
    m.add_argument("--p0", type=float)
    m.add_argument("--instance", choices=("pricing", "procurement"))
    m.add_argument("--demand", help='JSON list of [value, probability] pairs')
    m.add_argument("--B", type=float)
    m.add_argument("--T", type=int)
    m.add_argument("--grid", type=int, default=1000)
    m.set_defaults(func=cmd_mesh)

    lb = sub.add_parser("lb", help="closed forms (and optional simulation) for the lower-bound family")
    lb.add_argument("--p", type=float, required=True)
    lb.add_argument("--eps", type=float, required=True)
    lb.add_argument("--B", type=float, required=True)
    lb.add_argument("--m", type=int, default=2)
    lb.add_argument("--T", type=int, default=10**9)
    lb.add_argument("--trials", type=int, default=0)
    lb.add_argument("--seed", type=int, default=0)
    lb.set_defaults(func=cmd_lb)

    s = sub.add_parser("suite", help="run the acceptance battery")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="bwk_suite.csv")
    s.add_argument("--only", help="comma-separated criterion numbers")
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"bwk: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
