#!/usr/bin/env python3
"""Data-addition sweep: inject replicated, label-flipped rows from one
subgroup into clusters where a disjoint target subgroup lives, and compare
the base and patched models on the target.

Usage: python3 scripts/data_addition_sweep.py [--out results/data_addition.jsonl]
"""

from __future__ import annotations

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from mgrobust.config import load_config
from mgrobust.experiment import run_experiment

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "data_addition.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="results path (overrides config)")
    args = parser.parse_args()

    config = load_config(CONFIG)
    _, results = run_experiment(config, args.out)

    target = config.attack.target_group
    table = defaultdict(list)
    for record in results:
        for group in record.groups:
            if group.group == target:
                table[(record.noise_level, record.variant)].append(abs(group.ma_err))

    print(f"target group: {target}")
    print(f"{'alpha':>6} {'clf':>10} {'clf_pp':>10}")
    for level in config.attack.levels:
        clf = np.mean(table[(level, "clf")])
        pp = np.mean(table[(level, "clf_pp")])
        print(f"{int(level):>6} {clf:>10.4f} {pp:>10.4f}")


if __name__ == "__main__":
    main()
