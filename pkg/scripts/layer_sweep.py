"""Fidelity versus number of layers for each ansatz variant.

Runs the sweep from ``configs/layer_sweep.json`` once per (mode, driver)
combination and writes one output directory per variant.

    python3 scripts/layer_sweep.py --out out/variants --jobs 1
"""

import argparse
from dataclasses import replace
from pathlib import Path

from poisson_vqa.experiment import ExperimentConfig, run_sweep, write_sweep

VARIANTS = [
    ("two-per-layer", "default"),
    ("per-term", "default"),
    ("per-term", "default+fields"),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    here = Path(__file__).resolve().parent.parent
    parser.add_argument("--config", default=here / "configs" / "layer_sweep.json")
    parser.add_argument("--out", default="out/variants")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--max-layers", type=int, default=None, help="shorten the p range")
    args = parser.parse_args()

    base = ExperimentConfig.load(args.config)
    if args.max_layers:
        base = replace(base, sweep=replace(base.sweep, p=list(range(1, args.max_layers + 1))))
    for mode, driver in VARIANTS:
        cfg = base.override(mode=mode, driver=driver)
        rows, minimal = run_sweep(cfg, jobs=args.jobs)
        out = Path(args.out) / f"{mode}_{driver}"
        write_sweep(cfg, rows, minimal, out)
        print(f"{mode:14s} {driver:13s}", end="")
        for m in sorted(minimal):
            best = max(r["fidelity"] for r in rows if r["m"] == m)
            print(f"  m={m}: p={minimal[m]} F={best:.5f}", end="")
        print()


if __name__ == "__main__":
    main()
