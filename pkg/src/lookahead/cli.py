"""Command-line entry point: ``lookahead {run,compare,decompose,oracle,presets}``."""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import DECOMPOSE_TRIALS, PRESETS, emit_config, parse_config
from .diagnostics import oracle_battery
from .engine import HorizonSpec
from .errors import ConfigurationError, LookaheadError
from .harness import compare_strategies, run_campaign, strategy_variants
from .io import MANIFEST_NOTES, RunManifest, emit_curves_csv, emit_metrics_csv

log = logging.getLogger("lookahead")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
ORACLE_TOL = 1e-10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _load(args):
    path = Path(args.config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from None
    cfg = parse_config(text)
    overrides = {}
    if getattr(args, "replications", None):
        overrides["replications"] = args.replications
        overrides["diagnostics_replications"] = min(cfg.diagnostics_replications,
                                                    args.replications)
    if getattr(args, "trials", None):
        overrides["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return replace(cfg, **overrides) if overrides else cfg


def _manifest(command, cfg, outputs):
    return RunManifest(
        command=command,
        config=emit_config(cfg),
        engine_version=__version__,
        seed=cfg.seed,
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        outputs=[str(p) for p in outputs],
        notes=dict(MANIFEST_NOTES),
    )


def _finish(out: Path, command, cfg, outputs):
    manifest = out / "manifest.json"
    _manifest(command, cfg, [*outputs, manifest]).write(manifest)
    for p in outputs:
        print(p)
    print(manifest)


def cmd_presets(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in PRESETS.items():
        p = out / f"{name}.ini"
        p.write_text(text, encoding="utf-8")
        print(p)
    return EXIT_OK


def cmd_run(args):
    cfg = _load(args)
    if args.diagnostics:
        cfg = replace(cfg, diagnostics_enabled=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    table = run_campaign(cfg, workers=args.workers)
    log.info("campaign finished in %.1f s", time.perf_counter() - t0)
    csv_path = emit_metrics_csv(table, out / "metrics.csv")
    _finish(out, "run", cfg, [csv_path])
    return EXIT_OK


def cmd_compare(args):
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    variants = strategy_variants(cfg, args.horizon)
    tables = compare_strategies(variants, workers=args.workers)
    outputs = []
    for v, table in zip(variants, tables):
        outputs.append(emit_metrics_csv(table, out / f"metrics_{v.strategy.value}.csv"))
        print(f"{v.strategy.value:>14} T={v.horizon.T}: final info_gain "
              f"{table.info_gain[-1]:.6f}, final mse {table.mse[-1, 0]:.6g} "
              f"{table.mse[-1, 1]:.6g}")
    _finish(out, "compare", cfg, outputs)
    return EXIT_OK


def cmd_decompose(args):
    cfg = _load(args)
    cfg = replace(cfg, diagnostics_enabled=True, diagnostics_replications=cfg.replications)
    if args.at:
        try:
            at = [int(t) for t in args.at.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"--at expects comma-separated trial numbers, got {args.at!r}")
    else:
        at = [t for t in DECOMPOSE_TRIALS[cfg.model.kind] if t <= cfg.trials]
    bad = [t for t in at if not 1 <= t <= cfg.trials]
    if bad:
        raise ConfigurationError(f"--at trials {bad} outside 1..{cfg.trials}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = run_campaign(cfg, workers=args.workers)
    outputs = [emit_curves_csv(table, at, out / "curves.csv"),
               emit_metrics_csv(table, out / "metrics.csv")]
    print(f"max mean UD {table.ud_mean.max():.3e} at trial {table.ud_mean.argmax() + 1}; "
          f"max mean RD {table.rd_mean.max():.3e} at trial {table.rd_mean.argmax() + 1}")
    _finish(out, "decompose", cfg, outputs)
    return EXIT_OK


def cmd_oracle(args):
    worst = oracle_battery(args.instances, args.seed)
    print(f"max |bellman - brute force| over {args.instances} instances: {worst:.3e}")
    return EXIT_OK if worst <= ORACLE_TOL else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lookahead", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def campaign_args(sp):
        sp.add_argument("config", help="configuration file (see `lookahead presets`)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--workers", type=int, default=1, help="replication worker processes")
        sp.add_argument("--replications", type=int, help="override replication count")
        sp.add_argument("--trials", type=int, help="override trial count")
        sp.add_argument("--seed", type=int, help="override seed")

    sp = sub.add_parser("presets", help="write the bundled configurations")
    sp.add_argument("--out", default="presets")
    sp.set_defaults(func=cmd_presets)

    sp = sub.add_parser("run", help="run one campaign and write metrics.csv")
    campaign_args(sp)
    sp.add_argument("--diagnostics", action="store_true", help="also compute UD/RD")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="myopic vs T-step ahead vs global T-step")
    campaign_args(sp)
    sp.add_argument("--horizon", type=int, default=2)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("decompose", help="per-design utility curves and UD/RD series")
    campaign_args(sp)
    sp.add_argument("--at", help="comma-separated trials for curves.csv")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("oracle", help="check Bellman solves against brute force")
    sp.add_argument("--instances", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LookaheadError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
