"""Command-line entry point.

Subcommands:
  run            one experiment, R replications, traces plus an error report
  table1         all three experiments side by side
  density-curve  target and proposal densities on a grid, before and after
  check          fast numerical self-checks

Exit codes: 0 success, 1 failed check, 2 bad configuration, 3 divergence
during sampling, 4 I/O failure. The master seed resolves in order:
--seed flag, "seed" key in --config, SAIS_SEED environment variable, 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from . import experiments
from .errors import ConfigError, IterationDiverged, SamplerError


def _env_seed() -> Optional[int]:
    raw = os.environ.get("SAIS_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SAIS_SEED must be an integer, got {raw!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--experiment", choices=experiments.PRESET_NAMES,
                   help="built-in preset to start from")
    p.add_argument("--config", metavar="PATH",
                   help="JSON config file; other flags override its values")
    p.add_argument("--replications", type=int, metavar="R")
    p.add_argument("--iterations", type=int, metavar="T")
    p.add_argument("--batch", type=int, metavar="N", help="draws per iteration")
    p.add_argument("--gain-c", type=float, dest="gain_c", metavar="C")
    p.add_argument("--gain-t0", type=float, dest="gain_t0", metavar="T0")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), help="trace file format")
    p.add_argument("--diagnostics", action="store_true",
                   help="record effective sample size and divergence per iteration")


def _resolve_config(args: argparse.Namespace) -> experiments.ExperimentConfig:
    config_has_seed = False
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
        cfg = experiments.parse_config(text)
        config_has_seed = "seed" in json.loads(text)
        if args.experiment is not None and args.experiment != cfg.experiment:
            raise ConfigError(
                f"--experiment {args.experiment} conflicts with config experiment {cfg.experiment}"
            )
    elif args.experiment is not None:
        cfg = experiments.preset(args.experiment)
    else:
        raise ConfigError("provide --experiment or --config")

    for flag, field in (
        ("replications", "replications"),
        ("iterations", "iterations"),
        ("batch", "batch_size"),
        ("gain_c", "gain_c"),
        ("gain_t0", "gain_t0"),
        ("out", "out"),
        ("format", "format"),
    ):
        value = getattr(args, flag)
        if value is not None:
            setattr(cfg, field, value)
    if args.diagnostics:
        cfg.diagnostics = True

    if args.seed is not None:
        cfg.seed = args.seed
    elif not config_has_seed:
        env = _env_seed()
        if env is not None:
            cfg.seed = env

    experiments.validate_config(cfg)
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    report, paths = experiments.run(cfg)
    for arm in report.arms:
        print(f"{report.example} {arm.name}: mse={arm.mse:.3e} se={arm.se:.1e} "
              f"mean={arm.mean:.6f} diverged={arm.diverged}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_table1(args: argparse.Namespace) -> int:
    if args.seed is not None:
        seed = args.seed
    else:
        env = _env_seed()
        seed = env if env is not None else 0
    replications = args.replications if args.replications is not None else 1000
    if replications < 2:
        raise ConfigError("--replications must be at least 2")
    _, text = experiments.table1(seed, replications, args.out)
    sys.stdout.write(text)
    if args.out:
        print(f"wrote {os.path.join(args.out, 'table1.txt')}")
        print(f"wrote {os.path.join(args.out, 'table1.csv')}")
    return 0


def _parse_at(raw: str) -> List[int]:
    try:
        its = [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"--at expects comma-separated integers, got {raw!r}")
    if not its or any(t < 0 for t in its):
        raise ConfigError(f"--at expects nonnegative iteration indices, got {raw!r}")
    return its


def _parse_grid(raw: str) -> tuple:
    parts = raw.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects lo:hi:step, got {raw!r}")
    try:
        lo, hi, step = (float(part) for part in parts)
    except ValueError:
        raise ConfigError(f"--grid expects lo:hi:step, got {raw!r}")
    if not lo < hi or not step > 0:
        raise ConfigError(f"--grid expects lo < hi and step > 0, got {raw!r}")
    return lo, hi, step


def _cmd_density_curve(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    cols, rows = experiments.density_curve(cfg, _parse_at(args.at), _parse_grid(args.grid))
    out_dir = cfg.out if cfg.out is not None else f"sais-{cfg.experiment}"
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "density_curve.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(experiments.density_curve_csv(cols, rows))
    print(f"wrote {path}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    results = experiments.self_check(seed)
    width = max(len(name) for name, _, _ in results)
    failures = 0
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        print(f"{status}  {name:<{width}}  {detail}")
        failures += 0 if passed else 1
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sais",
        description="Adaptive importance sampling driven by stochastic approximation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment and write traces plus an error report")
    _add_common(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_table = sub.add_parser("table1", help="run all three experiments and print the error table")
    p_table.add_argument("--replications", type=int, metavar="R")
    p_table.add_argument("--seed", type=int)
    p_table.add_argument("--out", metavar="DIR")
    p_table.set_defaults(handler=_cmd_table1)

    p_curve = sub.add_parser("density-curve",
                             help="tabulate target and proposal densities on a grid")
    _add_common(p_curve)
    p_curve.add_argument("--at", default="0,100", metavar="T1,T2,...",
                         help="iteration counts to snapshot (default 0,100)")
    p_curve.add_argument("--grid", default="-5:6:0.01", metavar="LO:HI:STEP",
                         help="evaluation grid (default -5:6:0.01)")
    p_curve.set_defaults(handler=_cmd_density_curve)

    p_check = sub.add_parser("check", help="run fast numerical self-checks")
    p_check.add_argument("--seed", type=int)
    p_check.set_defaults(handler=_cmd_check)
    return parser


def _merge_grid_flag(argv: List[str]) -> List[str]:
    # argparse refuses option values that begin with a dash, so splice
    # "--grid -5:6:0.01" into "--grid=-5:6:0.01" before parsing
    out: List[str] = []
    i = 0
    while i < len(argv):
        if argv[i] == "--grid" and i + 1 < len(argv):
            out.append(f"--grid={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    raw = list(sys.argv[1:]) if argv is None else list(argv)
    args = parser.parse_args(_merge_grid_flag(raw))
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"sais: config error: {exc}", file=sys.stderr)
        return 2
    except IterationDiverged as exc:
        print(f"sais: divergence: {exc}", file=sys.stderr)
        return 3
    except SamplerError as exc:
        print(f"sais: sampling failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"sais: i/o failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
