"""Command line interface.

Subcommands: conditions | mesh-info | interp-study | linear-study | solve |
contraction-study | oracle | full-study | run.  Each maps onto one study
driver; `run` reads a TOML or JSON config file and dispatches on its study
kind.  Exit codes: 0 success, 1 solver failure, 2 out-of-theory warning-only
run, 64 malformed config or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_OUT_OF_THEORY = 2
EXIT_USAGE = 64


def _load_config(path: str) -> dict:
    try:
        if path.endswith(".json"):
            with open(path) as fh:
                return json.load(fh)
        try:
            import tomllib as toml
        except ModuleNotFoundError:
            import tomli as toml
        with open(path, "rb") as fh:
            return toml.load(fh)
    except FileNotFoundError:
        raise _Usage(f"config file not found: {path}")
    except (json.JSONDecodeError, ValueError) as exc:
        raise _Usage(f"malformed config {path}: {exc}")


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures surface as exit code 64."""

    def error(self, message):
        raise _Usage(f"{message}\n{self.format_usage()}")


def _study_args(sub):
    sub.add_argument("--out", default=None, help="output directory for report files")
    sub.add_argument("--R", type=float, default=1.0)
    sub.add_argument("--eps", type=float, nargs="+", default=[0.25])
    sub.add_argument("--levels", type=int, default=3)
    sub.add_argument("--h0", type=float, default=0.5)
    sub.add_argument("--cells0", type=int, default=None)
    sub.add_argument("--domain", choices=["interval", "disk"], default="disk")
    sub.add_argument("--q", type=int, default=1, help="boundary parametrization order")
    sub.add_argument(
        "--elem", choices=["hermite3", "hermite5", "argyris5"], default="argyris5"
    )
    sub.add_argument("--regime", choices=["mcf", "imcf"], default="mcf")
    sub.add_argument("--k", type=int, default=1, help="curvature power for mcf")
    sub.add_argument("--mu", type=float, default=3.0)
    sub.add_argument("--wdeg", type=int, default=2)
    sub.add_argument("--delta", type=float, default=0.6)
    sub.add_argument("--gamma", type=float, default=1.0)
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--seed", type=int, default=7)
    sub.add_argument("--resolution", type=int, default=10000)
    sub.add_argument("--pairs", type=int, default=4)
    sub.add_argument("--max-iter", type=int, default=2000)
    sub.add_argument("--tol", type=float, default=1e-9)


def _config_from_args(args, kind: str) -> dict:
    cfg = {
        "study": {"kind": kind, "seed": args.seed},
        "domain": {"kind": args.domain, "R": args.R, "boundary_order": args.q},
        "regime": {"name": args.regime, "k": args.k},
        "element": {"kind": args.elem},
        "params": {
            "mu": args.mu,
            "wdeg": args.wdeg,
            "gamma": args.gamma,
            "delta": args.delta,
        },
        "sweep": {"eps": list(args.eps), "levels": args.levels, "h0": args.h0},
        "solver": {
            "max_iter": args.max_iter,
            "tol": args.tol,
            "residual_tol": 1e-12,
            "pairs": args.pairs,
        },
        "oracle": {"resolution": args.resolution},
    }
    if args.cells0 is not None:
        cfg["sweep"]["cells0"] = args.cells0
    if args.n is not None:
        cfg["params"]["n"] = args.n
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="curvflow",
        description="Finite element studies for the regularized level-set "
        "equation of flows by powers of mean curvature",
    )
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = subs.add_parser("conditions", help="parameter admissibility arithmetic")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--wdeg", type=int, required=True)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--deg", type=int, default=9)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--h", type=float, default=0.25)
    p.add_argument("--json", dest="json_out", default=None, help="write report JSON")

    for name in (
        "mesh-info",
        "interp-study",
        "linear-study",
        "solve",
        "contraction-study",
        "oracle",
        "full-study",
    ):
        sp = subs.add_parser(name, help=f"run the {name} study")
        _study_args(sp)

    p = subs.add_parser("run", help="run a study from a TOML or JSON config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    return parser


_CMD_TO_KIND = {
    "mesh-info": "mesh-info",
    "interp-study": "interp",
    "linear-study": "linear",
    "solve": "solve",
    "contraction-study": "contraction",
    "oracle": "oracle",
    "full-study": "full",
}


def _run_conditions(args) -> int:
    from . import conditions

    if args.delta is None:
        iv = conditions.delta_interval(args.mu, args.wdeg)
        delta = 0.5 * (iv[0] + iv[1]) if iv else 1.0
    else:
        delta = args.delta
    params = conditions.ParameterSet(
        n=args.n,
        mu=args.mu,
        deg=args.deg,
        wdeg=args.wdeg,
        epsilon=args.eps,
        gamma=args.gamma,
        delta=delta,
        h=args.h,
    )
    rep = conditions.sufficient_conditions(params)
    iv = rep.delta_interval
    if iv is None:
        print(f"nu = {rep.nu:.6g}; no admissible delta interval")
    else:
        print(f"nu = {rep.nu:.6g}; admissible delta interval ({iv[0]:.6g}, {iv[1]:.6g})")
    print(f"exponents: {[round(e, 6) for e in rep.exponents]}")
    print(f"sufficient: {rep.sufficient_ok}")
    print(f"rho = {'overflow' if rep.rho_overflow else rep.rho}")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(rep.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK if rep.sufficient_ok["all"] else EXIT_OUT_OF_THEORY


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage()
        return EXIT_USAGE

    from .oracle import OracleError
    from .solver import SolverError
    from .studies import ConfigError, StudyError, resolve_config, run_study

    try:
        if args.command == "conditions":
            return _run_conditions(args)
        if args.command == "run":
            raw = _load_config(args.config)
            cfg = resolve_config(raw)
            outdir = args.out or cfg["study"]["out"]
        else:
            cfg = resolve_config(_config_from_args(args, _CMD_TO_KIND[args.command]))
            outdir = args.out or cfg["study"]["out"]
        report = run_study(cfg, outdir)
        path = report.write(outdir)
        print(f"report written to {path}")
        for name, summary_val in sorted(report.summary.items()):
            print(f"  {name}: {summary_val}")
        if report.flags.get("out_of_theory"):
            print("warning: parameters are outside the sufficient conditions")
            return EXIT_OUT_OF_THEORY
        return EXIT_OK
    except (_Usage, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StudyError, SolverError, OracleError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
