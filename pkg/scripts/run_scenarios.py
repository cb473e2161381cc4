#!/usr/bin/env python3
"""Run the bundled scenarios over a few seeds and print a metrics table.

Usage:
    python scripts/run_scenarios.py [--seeds 5] [--outdir runs/]

With --outdir every run is saved under <outdir>/<scenario>_seed<k>/ in the
same artifact layout the CLI produces.
"""

import argparse
import statistics
import sys
import time
from pathlib import Path

from swarmreid.config import load_config, set_value
from swarmreid.runner import run_experiment

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SCENARIOS = ("baseline", "comm_benefit", "crowded")


def run_scenario(name: str, seeds: range, outdir: Path | None) -> dict:
    base = load_config(CONFIG_DIR / f"{name}.yaml")
    rows = []
    for seed in seeds:
        config = set_value(base, "seed", seed)
        started = time.perf_counter()
        art = run_experiment(config)
        elapsed = time.perf_counter() - started
        if outdir is not None:
            art.save(outdir / f"{name}_seed{seed}")
        m = art.metrics
        rows.append((m.cmc[0] if m.cmc else 0.0, m.map_score, m.avg_purity,
                     sum(m.clusters_per_robot), elapsed))
    return {
        "cmc1": statistics.fmean(r[0] for r in rows),
        "map": statistics.fmean(r[1] for r in rows),
        "purity": statistics.fmean(r[2] for r in rows),
        "clusters": statistics.fmean(r[3] for r in rows),
        "sec_per_run": statistics.fmean(r[4] for r in rows),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=5,
                        help="number of seeds per scenario (default 5)")
    parser.add_argument("--outdir", type=Path, default=None,
                        help="save run artifacts under this directory")
    args = parser.parse_args(argv)

    header = f"{'scenario':<14} {'cmc@1':>7} {'mAP':>7} {'purity':>7} " \
             f"{'clusters':>9} {'s/run':>7}"
    print(header)
    print("-" * len(header))
    for name in SCENARIOS:
        stats = run_scenario(name, range(args.seeds), args.outdir)
        print(f"{name:<14} {stats['cmc1']:>7.3f} {stats['map']:>7.3f} "
              f"{stats['purity']:>7.3f} {stats['clusters']:>9.1f} "
              f"{stats['sec_per_run']:>7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
