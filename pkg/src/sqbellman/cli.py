"""Command-line front end: ``sqbellman <command> [options]``.

Every command prints (or writes under ``--out``) its resolved configuration next
to its results.  ``verify`` exits nonzero when any check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings

import numpy as np

from . import dyadic, mc, suites
from .bollobas import bollobas_B
from .davis import DavisBellman
from .envelope import ObstacleSpec, compare_to_closed_form, default_a_set, solve_greatest_subsolution, \
    solve_heat_envelope
from .reports import VerificationReport
from .specfn import OutOfVerifiedRange, davis_constant

EXPERIMENTS = ("ratio", "hitting", "supermartingale", "jensen")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=_floats, help="comma-separated exponents")
    p.add_argument("--grid", help='lattice, e.g. "p:-3,3,401 q:0,3,401"')
    p.add_argument("--a-set", dest="a_set", type=int, help="number of step sizes")
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqbellman", description="Bellman functions for square-function inequalities")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constant", help="c_alpha and kappa_alpha")
    _common(p)

    p = sub.add_parser("eval", help="closed-form Bellman function at a point")
    p.add_argument("function", choices=("davis", "bollobas"))
    p.add_argument("point", type=_floats, help="p,q  or  x,lambda")
    _common(p)

    p = sub.add_parser("envelope", help="solve the obstacle problem on a lattice")
    p.add_argument("obstacle", choices=("davis", "bollobas"))
    p.add_argument("--c-scale", type=float, default=1.0, help="multiply c_alpha in the Davis obstacle")
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--method", choices=("rowwise", "value"), default="rowwise")
    _common(p)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=suites.SUITES)
    _common(p)

    p = sub.add_parser("oracle", help="dyadic dynamic-programming bound at a point")
    p.add_argument("problem", choices=("davis", "bollobas"))
    p.add_argument("point", type=_floats)
    _common(p)

    p = sub.add_parser("mc", help="Monte-Carlo experiments")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--a", type=_floats, help="levels (ratio: multiples of c_alpha)")
    _common(p)
    return parser


def _config(args, suite: str) -> suites.SuiteConfig:
    keys = ("alpha", "grid", "a_set", "tol", "seed", "depth", "paths", "dt", "out", "format")
    return suites.SuiteConfig.from_defaults(suite, **{k: getattr(args, k, None) for k in keys})


def _reports_csv(reports) -> str:
    buf = io.StringIO()
    cols = ["name", "passed", "worst_violation", "location", "tolerance", "samples", "wall_time_ms"]
    w = csv.writer(buf)
    w.writerow(cols)
    for r in reports:
        d = r.to_dict()
        w.writerow([d[c] if c != "location" else " ".join(map(repr, d[c])) for c in cols])
    return buf.getvalue()


def _emit(cfg: suites.SuiteConfig, payload, name: str, csv_text: str | None = None) -> None:
    """Write results under cfg.out (with config.json) or print them."""
    if cfg.format == "csv" and csv_text is not None:
        body = csv_text
        ext = "csv"
    else:
        body = json.dumps(payload, indent=2) + "\n"
        ext = "json"
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        cfg.save(os.path.join(cfg.out, "config.json"))
        with open(os.path.join(cfg.out, f"{name}.{ext}"), "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        if ext == "csv":
            sys.stdout.write("# config: " + json.dumps(cfg.to_dict()) + "\n")
            sys.stdout.write(body)
        else:
            sys.stdout.write(json.dumps({"config": cfg.to_dict(), "results": payload}, indent=2) + "\n")


def cmd_constant(args) -> int:
    cfg = _config(args, "constant")
    out = []
    for a in cfg.alpha:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", OutOfVerifiedRange)
            k = davis_constant(a)
        row = {"alpha": a, "c_alpha": k.c_alpha, "kappa_alpha": k.kappa_alpha, "residual": k.residual}
        msgs = [str(w.message) for w in caught if issubclass(w.category, OutOfVerifiedRange)]
        if msgs or k.out_of_range:
            row["warning"] = msgs[0] if msgs else "alpha outside the verified range"
            print(f"warning: {row['warning']}", file=sys.stderr)
        out.append(row)
    _emit(cfg, out, "constant")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args, "eval")
    x, y = args.point
    if args.function == "davis":
        rows = [{"alpha": a, "p": x, "q": y, "U": float(DavisBellman.for_alpha(a)(x, y))} for a in cfg.alpha]
    else:
        rows = [{"x": x, "lambda": y, "B": float(bollobas_B(x, y))}]
    _emit(cfg, rows, "eval")
    return 0


def cmd_envelope(args) -> int:
    cfg = _config(args, "envelope")
    parsed = suites.parse_grid(cfg.grid)
    axes = list(parsed.values())
    if args.obstacle == "davis":
        alpha = cfg.alpha[0]
        c = davis_constant(alpha).c_alpha * args.c_scale
        obst = ObstacleSpec.davis_power(alpha, c)
        a_set = default_a_set(axes[0], cfg.a_set)
        grid, rep = solve_heat_envelope(obst, axes[0], axes[1], a_set=a_set, max_iters=args.max_iters,
                                        method=args.method, watch=(0.0, 1.0))
        bell = DavisBellman.for_alpha(alpha)
        ref, mask = bell, lambda P, Q: (np.abs(P) <= 2.0) & (Q >= 0.25) & (Q <= 2.0)
    else:
        obst = ObstacleSpec.bollobas_range()
        a_set = default_a_set(axes[0], cfg.a_set)
        grid, rep = solve_greatest_subsolution(obst, axes[0], axes[1], a_set=a_set, max_iters=args.max_iters,
                                               method=args.method)
        ref, mask = bollobas_B, lambda X, L: (X * X <= 0.8 * L) & (L >= 0.25)
    grid.names = tuple(parsed)
    result = {"solve": rep.to_dict(), "obstacle": obst.describe()}
    if not rep.diverged:
        cmp = compare_to_closed_form(grid, ref, mask)
        result["closed_form_comparison"] = {k: v for k, v in cmp.items() if k != "location"}
        result["value_at_unit_point"] = float(grid.sample(0.0, 1.0))
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        grid.dump(os.path.join(cfg.out, "grid.txt"))
    _emit(cfg, result, "envelope")
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args, args.suite)
    reports = suites.run_suite(cfg)
    for r in reports:
        print(r.line(), file=sys.stderr)
    _emit(cfg, [r.to_dict() for r in reports], "reports", _reports_csv(reports))
    return 0 if all(r.passed for r in reports) else 1


def cmd_oracle(args) -> int:
    cfg = _config(args, "oracle")
    x, y = args.point
    if args.problem == "davis":
        alpha = cfg.alpha[0]
        value, trace = dyadic.sup_oracle_davis(x, y, cfg.depth, alpha=alpha, history=True)
        row = {"problem": "davis", "alpha": alpha, "point": [x, y], "depth": cfg.depth, "value": value,
               "trace": trace, "bound": "lower", "closed_form": float(DavisBellman.for_alpha(alpha)(x, y))}
    else:
        value, trace = dyadic.inf_oracle_bollobas(x, y, cfg.depth, history=True)
        row = {"problem": "bollobas", "point": [x, y], "depth": cfg.depth, "value": value, "trace": trace,
               "bound": "upper", "closed_form": float(bollobas_B(x, y))}
    _emit(cfg, row, "oracle")
    return 0


def cmd_mc(args) -> int:
    cfg = _config(args, "mc")
    alpha = cfg.alpha[0]
    base = mc.McConfig(n_paths=cfg.paths, dt=cfg.dt, t_max=cfg.t_max, seed=cfg.seed)
    if args.experiment == "ratio":
        c = davis_constant(alpha).c_alpha
        base.a_values = tuple(m * c for m in (args.a or (0.5, 0.7, 0.9)))
        stats = mc.simulate_T_a(base, alpha)
        _emit(cfg, [s.to_row() for s in stats], "ratio", mc.stats_to_csv(stats))
        return 0
    reports: list[VerificationReport] = []
    if args.experiment == "hitting":
        for a in args.a or (0.5,):
            reports += mc.check_hitting_time_moments(a, base)
    elif args.experiment == "supermartingale":
        reports.append(mc.supermartingale_check(DavisBellman.for_alpha(alpha), base))
    else:
        for a in args.a or (0.5,):
            reports.append(mc.jensen_gap_check(DavisBellman.for_alpha(alpha), 0.0, 1.0, a, base))
    _emit(cfg, [r.to_dict() for r in reports], args.experiment, _reports_csv(reports))
    return 0 if all(r.passed for r in reports) else 1


COMMANDS = {"constant": cmd_constant, "eval": cmd_eval, "envelope": cmd_envelope, "verify": cmd_verify,
            "oracle": cmd_oracle, "mc": cmd_mc}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
