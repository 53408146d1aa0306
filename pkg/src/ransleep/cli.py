"""Command-line entry point for the benchmark harness."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .errors import RansleepError
from .harness import (
    BENCHMARK_NAMES,
    TRAFFIC_NAMES,
    VARIANTS,
    RunMatrix,
    Settings,
    calibrated_rates,
    closed_loop,
    run_matrix,
)
from .orchestrator import AuditLog, default_registry, load_registry, save_registry
from .sleep import RuCapability


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ransleep",
        description="Run the gNB energy-saving benchmark matrix.",
    )
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--benchmarks", type=_csv_list, default=BENCHMARK_NAMES,
                   help="comma list: Baseline,Lean160,TG10,TG30,TG60")
    p.add_argument("--variants", type=_csv_list, default=VARIANTS,
                   help="comma list: mu,muDS")
    p.add_argument("--traffics", type=_csv_list, default=TRAFFIC_NAMES,
                   help="comma list: Low,Light,Medium")
    p.add_argument("--seeds", type=int, default=None, help="seeds per benchmark cell")
    p.add_argument("--horizon", type=float, default=None, help="simulated seconds per seed")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.add_argument("--calibrate-only", action="store_true",
                   help="calibrate arrival rates and exit")
    p.add_argument("--orchestrate", action="store_true",
                   help="closed-loop mode: orchestrator picks and guards the config")
    p.add_argument("--registry", type=Path, default=None,
                   help="feature registry file (written with defaults if missing)")
    p.add_argument("--orchestrate-seed", type=int, default=0,
                   help="seed for the closed-loop run")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.horizon is not None:
            cfg["grid.horizon_s"] = float(args.horizon)
        seeds = args.seeds if args.seeds is not None else int(cfg["harness.seeds"])
        args.out.mkdir(parents=True, exist_ok=True)

        registry = default_registry()
        if args.registry:
            if args.registry.exists():
                registry = load_registry(args.registry)
            else:
                save_registry(registry, args.registry)

        settings = Settings.from_config(cfg)
        if args.calibrate_only:
            rates = calibrated_rates(settings, args.traffics, cache_dir=args.out)
            for traffic, rate in sorted(rates.items()):
                print(f"{traffic}: {rate:.6f} sessions/s")
            return 0

        if args.orchestrate:
            rates = calibrated_rates(settings, args.traffics, cache_dir=args.out)
            audit = AuditLog(args.out / "audit.log")
            for traffic in args.traffics:
                records = closed_loop(
                    settings, traffic, args.orchestrate_seed, rates[traffic],
                    capability=RuCapability.MICRO_PLUS_DEEP,
                    registry=registry, audit=audit,
                )
                final = records[-1]
                print(
                    f"{traffic}: {final['bench'].cell_id} -> {final['action']} "
                    f"after {final['iteration']} iteration(s); "
                    f"mean power {final['result'].mean_power:.2f}"
                )
            return 0

        matrix = RunMatrix(
            benchmarks=args.benchmarks,
            variants=args.variants,
            traffics=args.traffics,
            seeds=seeds,
        )
        run_matrix(matrix, args.out, cfg=cfg, parallel=args.parallel)
        print(f"wrote {args.out / 'raw.csv'}, {args.out / 'results.csv'}, "
              f"{args.out / 'manifest.json'}")
        return 0
    except RansleepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
