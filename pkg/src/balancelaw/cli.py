"""Command line entry point: ``balancelaw {run, refine, constants, identities}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .constants import ball_volume, dim_constants, mollifier_identities, plateau_mollifier, wallis
from .errors import BalanceLawError

IDENTITY_TOL = 1e-6


def _cmd_run(args) -> int:
    from .certify import load_scenario, run_scenario

    cfg = load_scenario(args.config)
    report = run_scenario(cfg)
    out = Path(args.out) if args.out else Path("results") / cfg.name
    report.write(out)
    sys.stdout.write(report.text())
    sys.stdout.write(f"results written to {out}\n")
    return 0 if report.passed else 1


def _cmd_refine(args) -> int:
    from .certify import load_scenario, refinement_study

    cfg = load_scenario(args.config)
    table = refinement_study(cfg, args.levels)
    out = Path(args.out) if args.out else Path("results") / f"{cfg.name}_refine"
    table.write(out)
    sys.stdout.write((out / "report.txt").read_text())
    sys.stdout.write(f"results written to {out}\n")
    return 0 if table.passed else 1


def _cmd_constants(args) -> int:
    m = plateau_mollifier(args.dim, args.flat_radius)
    dc = dim_constants(args.dim, m)
    row = {
        "N": args.dim,
        "W_N": dc.wallis,
        "omega_N": dc.ball_volume,
        "omega_N/omega_{N-1}": dc.ball_volume / ball_volume(args.dim - 1),
        "2 W_N": 2 * wallis(args.dim),
        "C1": dc.c1,
        "M1": dc.m1,
        "M1/C1": dc.m1 / dc.c1,
        "N W_N": dc.nwn,
    }
    if args.json:
        sys.stdout.write(json.dumps(row, indent=2) + "\n")
    else:
        for k, v in row.items():
            sys.stdout.write(f"{k:>22} = {v!r}\n")
    rel = abs(row["M1/C1"] - row["N W_N"]) / row["N W_N"]
    return 0 if rel < IDENTITY_TOL and math.isclose(row["omega_N/omega_{N-1}"], row["2 W_N"], rel_tol=1e-12) else 1


def _cmd_identities(args) -> int:
    rep = mollifier_identities(args.dim, plateau_mollifier(args.dim, args.flat_radius), args.lam)
    d = rep.as_dict()
    if args.json:
        sys.stdout.write(json.dumps(d, indent=2) + "\n")
    else:
        for k, v in d.items():
            sys.stdout.write(f"{k:>26} = {v!r}\n")
    ok = rep.max() < IDENTITY_TOL
    sys.stdout.write(f"max residual {rep.max():.3e} ({'PASS' if ok else 'FAIL'})\n")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="balancelaw", description="Certify a priori estimates for scalar balance laws.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve a scenario and check its envelopes")
    r.add_argument("config", help="scenario file or name of a shipped scenario")
    r.add_argument("--out", help="results directory (default results/<name>)")
    r.set_defaults(func=_cmd_run)

    f = sub.add_parser("refine", help="repeat a scenario on successively halved grids")
    f.add_argument("config")
    f.add_argument("--levels", type=int, default=3)
    f.add_argument("--out")
    f.set_defaults(func=_cmd_refine)

    for name, func, helptext in (("constants", _cmd_constants, "Wallis, ball volume and mollifier moments"),
                                 ("identities", _cmd_identities, "mollifier integral identity residuals")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--dim", type=int, required=True)
        c.add_argument("--flat-radius", type=float, default=0.5, help="plateau radius of the mollifier")
        c.add_argument("--json", action="store_true")
        if name == "identities":
            c.add_argument("--lam", type=float, default=1.0, help="mollifier scale")
        c.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "dim", 1) < 1:
        sys.stderr.write("--dim must be at least 1\n")
        return 2
    try:
        return args.func(args)
    except BalanceLawError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
