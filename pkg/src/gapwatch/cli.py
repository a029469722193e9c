"""Command-line entry point: ``gapwatch {run,synth-profile,check-config,oracle}``.

Exit status: 0 success, 1 invalid input or failed validation, 2 run aborted
(e.g. collision). Failures print ``ERROR <code>: <message>`` as the first
line on standard error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .controller import check_stability
from .errors import CollisionDetected, GapwatchError, InvalidConfig
from .oracle import cross_check
from .output import write_outputs
from .simulator import run

log = logging.getLogger("gapwatch")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ABORT = 2

ORACLE_TOL = 1e-5


def _error(code: str, message: str) -> None:
    print(f"ERROR {code}: {message}", file=sys.stderr)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="configuration file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                   dest="overrides", help="override one setting (repeatable)")
    p.add_argument("--out", metavar="DIR",
                   help="output directory (default: $GAPWATCH_OUT, else ./gapwatch-out)")
    p.add_argument("--seed", type=int, help="shorthand for --set sim.rng_seed=N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapwatch",
                                     description="Platoon time-gap monitoring simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate and write records/events/summary")
    _common(p)
    p.add_argument("--no-figures", action="store_true", help="skip the PNG report")

    p = sub.add_parser("synth-profile", help="write the synthetic lead acceleration CSV")
    _common(p)

    p = sub.add_parser("check-config", help="validate a configuration without running")
    _common(p)

    p = sub.add_parser("oracle", help="cross-check the posterior against grid quadrature")
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load(args):
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"sim.rng_seed={args.seed}")
    return cfgmod.load_config(args.config, overrides)


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("GAPWATCH_OUT") or "gapwatch-out")


def cmd_run(args) -> int:
    config = _load(args)
    out = _out_dir(args)
    try:
        result = run(config)
        status = EXIT_OK
    except CollisionDetected as exc:
        _error(exc.code, str(exc))
        result = exc.partial
        status = EXIT_ABORT
    if result is not None:
        paths = write_outputs(result, out)
        if not args.no_figures:
            from .plotting import render_report
            render_report(result, out / "figures")
        for p in paths.values():
            log.info("wrote %s", p)
    if status == EXIT_OK:
        triggers = sum(1 for e in result.events if e["kind"] == "trigger")
        violations = sum(1 for e in result.events if e["kind"] == "violation")
        print(f"ok: {len(result.records)} records, {violations} violations, "
              f"{triggers} triggers -> {out}")
    return status


def cmd_synth_profile(args) -> int:
    config = _load(args)
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    lead = config.lead
    if lead.profile != "synth":
        raise InvalidConfig("synth-profile needs lead.profile = synth")
    profile = lead.build_profile(config.dt)
    path = out / "profile.csv"
    profile.to_csv(path)
    print(f"ok: {len(profile)} samples -> {path}")
    return EXIT_OK


def cmd_check_config(args) -> int:
    config = _load(args)
    eig = check_stability(config.controller)
    print("ok: configuration valid")
    print("closed-loop eigenvalues: " + ", ".join(f"{z:.4g}" for z in eig))
    lim = config.chart
    print(f"control limits: LCL={lim.mu_desired - lim.L * lim.sigma_desired:.4g} "
          f"CL={lim.mu_desired:.4g} UCL={lim.mu_desired + lim.L * lim.sigma_desired:.4g}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    res = cross_check(args.cases, args.seed)
    print(f"cases={res.cases} max_mean_rel_err={res.max_mean_err:.3e} "
          f"max_cov_rel_err={res.max_cov_err:.3e}")
    if res.max_err > ORACLE_TOL:
        _error("OracleMismatch", f"max relative error {res.max_err:.3e} exceeds {ORACLE_TOL:g}")
        return EXIT_INVALID
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "synth-profile": cmd_synth_profile,
    "check-config": cmd_check_config,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InvalidConfig as exc:
        _error(exc.code, str(exc))
        return EXIT_INVALID
    except GapwatchError as exc:
        _error(exc.code, str(exc))
        return EXIT_ABORT if isinstance(exc, CollisionDetected) else EXIT_INVALID
    except (OSError, ValueError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
