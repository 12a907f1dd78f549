"""Command-line front end: ``plumesurvey {run,sweep,validate,dump-field}``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness import (
    ConfigError,
    ExperimentSpec,
    format_table,
    parse_config,
    replicate_field,
    replicate_seed,
    run_experiment,
)
from .mission import SUMMARY_HEADER, run_mission, summary_row, write_mission_log
from .plume_field import center_values, format_grid

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _load(args) -> ExperimentSpec:
    text = ""
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    spec = parse_config(text)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        spec = replace(spec, base=replace(spec.base, seed=args.seed))
    if args.out is not None:
        spec = replace(spec, out=args.out)
    return spec


def _cmd_validate(spec: ExperimentSpec, out) -> None:
    n = len(spec.sweep) * spec.replicates
    out.write(f"ok: {n} mission(s), strategy={spec.base.strategy}, sweep={spec.sweep_key or '-'}\n")


def _cmd_run(spec: ExperimentSpec, out) -> None:
    conc = replicate_field(spec, 0)
    config = replace(spec.base, seed=replicate_seed(spec.base.seed, 0))
    result = run_mission(config, conc)
    out.write(SUMMARY_HEADER + "\n" + summary_row(result) + "\n")
    if spec.out:
        write_mission_log(result, spec.out)


def _cmd_sweep(spec: ExperimentSpec, out) -> None:
    table = run_experiment(spec)
    if not spec.out:
        out.write(format_table(table))


def _cmd_dump_field(spec: ExperimentSpec, out) -> None:
    text = format_grid(center_values(replicate_field(spec, 0), spec.base.region))
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


COMMANDS = {
    "run": (_cmd_run, "fly one mission (replicate 0) and print its summary row"),
    "sweep": (_cmd_sweep, "run the configured experiment and write the result table"),
    "validate": (_cmd_validate, "check the configuration only"),
    "dump-field": (_cmd_dump_field, "export ground-truth concentrations at box centers"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plumesurvey", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out", metavar="PATH", help="output path (prefix for run logs)")
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        spec = _load(args)
        COMMANDS[args.command][0](spec, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
