"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 infeasible/unbounded/numerical
LP, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .caseio import ImportOptions, import_case
from .clearing import clear_dpd, clear_standard
from .config import load_config
from .exceptions import CaseFormatError, SolveError, ValidationError
from .export import export_results, fmt
from .grid import validate_network
from .lpsolve import Tolerances, dump_lp
from .meritorder import build_demand_curve, build_supply_curve, intersect, write_curve_csv
from .orderbook import validate_orderbook
from .scenario import ScenarioConfig, evaluate, res_sweep, sample_alphas

EXIT_OK, EXIT_INVALID, EXIT_SOLVE, EXIT_IO = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--case", required=True, help="case file (native .json or MATPOWER .m)")
    p.add_argument("--format", default="auto", choices=["auto", "native", "matpower"])
    p.add_argument("--out", help="directory for CSV output")
    p.add_argument("--config", help="scenario/import config file (INI key-value)")
    p.add_argument("--tol-gap", type=float, default=1e-6)
    p.add_argument("--tol-feas", type=float, default=1e-7)


def _alpha_flags(p: argparse.ArgumentParser, defaults: bool) -> None:
    p.add_argument("--alpha-mean", type=float, default=None, help="mean green premium ($/MWh)")
    p.add_argument("--alpha-std", type=float, default=None, help="premium standard deviation")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpdmarket", description="DC market clearing with green premiums")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("validate", help="check network and order-book invariants"))
    _common(sub.add_parser("merit-order", help="copper-plate clearing from step curves"))
    p = sub.add_parser("clear", help="standard surplus-maximizing clearing")
    _common(p)
    p.add_argument("--dump-lp", help="write the LP in row/column text format")
    p = sub.add_parser("clear-dpd", help="dual-pricing dispatch clearing")
    _common(p)
    _alpha_flags(p, defaults=False)
    p.add_argument("--alpha-file", help="CSV with columns load_id,alpha")
    p.add_argument("--dump-lp", help="write the LP in row/column text format")
    p = sub.add_parser("sweep-res", help="clear both ways across RES shares")
    _common(p)
    _alpha_flags(p, defaults=True)
    p.add_argument("--shares", required=True, help="comma-separated RES shares, e.g. 0.3,0.5,0.8")
    p = sub.add_parser("report", help="emissions, dispatch deltas and homes for one scenario")
    _common(p)
    _alpha_flags(p, defaults=True)
    p.add_argument("--share", type=float, default=None, help="rescale to this RES share first")
    return parser


def _load(args) -> tuple:
    config, options = load_config(args.config) if args.config else (ScenarioConfig(), ImportOptions())
    return config, options


def _scenario_config(args, config: ScenarioConfig) -> ScenarioConfig:
    kw = dict(config.__dict__)
    if args.alpha_mean is not None:
        kw["alpha_mean"] = args.alpha_mean
    if args.alpha_std is not None:
        kw["alpha_std"] = args.alpha_std
    if args.seed is not None:
        kw["rng_seed"] = args.seed
    return ScenarioConfig(**kw)


def _read_alpha_file(path) -> dict[str, float]:
    out = {}
    try:
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.DictReader(fh), 2):
                try:
                    out[row["load_id"]] = float(row["alpha"])
                except (KeyError, TypeError, ValueError):
                    raise CaseFormatError("expected load_id,alpha", path=path, line=lineno) from None
    except OSError as exc:
        raise CaseFormatError(f"cannot read alpha file: {exc.strerror or exc}", path=path) from None
    return out


def _print_solution(sol) -> None:
    print(f"objective\t{fmt(sol.objective)}")
    print(f"served_mwh\t{fmt(sol.total_served)}")
    print(f"green_dispatch_mwh\t{fmt(sol.green_dispatch)}")
    print(f"black_dispatch_mwh\t{fmt(sol.black_dispatch)}")
    print(f"congested_lines\t{len(sol.congested_lines)}")
    if hasattr(sol, "lambda_green"):
        print(f"lambda_green\t{fmt(sol.lambda_green)}")


def _cmd_validate(args) -> int:
    _, options = _load(args)
    net, ob = import_case(args.case, options, args.format, validate=False)
    report = validate_network(net).extend(validate_orderbook(ob, net))
    if report.valid:
        print(f"valid\t{len(net.buses)} buses\t{len(net.lines)} lines\t"
              f"{len(ob.generators)} generators\t{len(ob.loads)} loads")
        return EXIT_OK
    for f in report.findings:
        print(f"{f.code}\t{f.message}")
    return EXIT_INVALID


def _cmd_merit_order(args) -> int:
    _, options = _load(args)
    net, ob = import_case(args.case, options, args.format)
    supply, demand = build_supply_curve(ob), build_demand_curve(ob)
    point = intersect(supply, demand)
    print(f"price\t{fmt(point.price) if point.price is not None else 'undefined'}")
    print(f"volume_mwh\t{fmt(point.volume)}")
    print(f"green_share\t{fmt(point.green_share)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_curve_csv(supply, out / "supply_curve.csv")
        write_curve_csv(demand, out / "demand_curve.csv")
    return EXIT_OK


def _cmd_clear(args, dpd: bool) -> int:
    config, options = _load(args)
    net, ob = import_case(args.case, options, args.format)
    tol = Tolerances(feas=args.tol_feas, gap=args.tol_gap)
    if dpd:
        if args.alpha_file:
            ob = ob.with_alphas(_read_alpha_file(args.alpha_file))
        elif args.alpha_mean is not None or args.alpha_std is not None or args.seed is not None:
            cfg = _scenario_config(args, config)
            ob = ob.with_alphas(sample_alphas(ob.loads, cfg.alpha_mean, cfg.alpha_std, cfg.rng_seed))
        sol = clear_dpd(net, ob, tol)
    else:
        sol = clear_standard(net, ob, tol)
    _print_solution(sol)
    if args.dump_lp:
        with open(args.dump_lp, "w") as fh:
            dump_lp(sol.lp, fh)
    if args.out:
        export_results(sol, args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config, options = _load(args)
    net, ob = import_case(args.case, options, args.format)
    try:
        shares = [float(s) for s in args.shares.split(",") if s.strip()]
    except ValueError:
        raise CaseFormatError("shares must be comma-separated numbers", field="--shares") from None
    reports = res_sweep(net, ob, _scenario_config(args, config), shares,
                        Tolerances(feas=args.tol_feas, gap=args.tol_gap))
    print("res_share\tdelta_green\tdelta_black\tlambda_green\temissions_before\temissions_after")
    for r in reports:
        print("\t".join(fmt(v) for v in (r.res_share, r.delta_green, r.delta_black, r.lambda_green,
                                          r.avg_emissions_before, r.avg_emissions_after)))
    if args.out:
        export_results(reports, args.out)
    return EXIT_OK


def _cmd_report(args) -> int:
    config, options = _load(args)
    net, ob = import_case(args.case, options, args.format)
    r = evaluate(net, ob, _scenario_config(args, config), args.share,
                 Tolerances(feas=args.tol_feas, gap=args.tol_gap))
    for key in ("res_share", "delta_green", "delta_black", "lambda_green", "avg_emissions_before",
                "avg_emissions_after", "homes_powered", "congested_before", "congested_after",
                "merchandising_surplus"):
        print(f"{key}\t{fmt(getattr(r, key))}")
    if args.out:
        export_results([r], args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "validate": _cmd_validate,
        "merit-order": _cmd_merit_order,
        "clear": lambda a: _cmd_clear(a, dpd=False),
        "clear-dpd": lambda a: _cmd_clear(a, dpd=True),
        "sweep-res": _cmd_sweep,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        for f in exc.report.findings:
            print(f"{f.code}\t{f.message}", file=sys.stderr)
        return EXIT_INVALID
    except SolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVE
    except (CaseFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
