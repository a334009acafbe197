#!/usr/bin/env python3
"""Label-flip sweep: corrupt one subgroup's labels at rising rates and watch
how the base model's error bleeds into untouched subgroups, while the patched
model stays flat.

Usage: python3 scripts/label_change_sweep.py [--out results/label_change.jsonl]
"""

from __future__ import annotations

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from mgrobust.config import load_config
from mgrobust.experiment import run_experiment

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "label_change.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="results path (overrides config)")
    args = parser.parse_args()

    config = load_config(CONFIG)
    _, results = run_experiment(config, args.out)

    table = defaultdict(list)
    for record in results:
        for group in record.groups:
            table[(record.noise_level, record.variant, group.group)].append(group.ma_err)

    groups = [g.group for g in results[0].groups]
    print(f"{'sigma':>6} {'variant':>8}  " + "  ".join(f"{g:>10}" for g in groups))
    for level in config.attack.levels:
        for variant in ("clf", "clf_pp"):
            cells = "  ".join(
                f"{np.mean(table[(level, variant, g)]):>10.4f}" for g in groups
            )
            print(f"{level:>6.1f} {variant:>8}  {cells}")


if __name__ == "__main__":
    main()
