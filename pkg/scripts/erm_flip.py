#!/usr/bin/env python3
"""The one-flip counterexample: a majority-vote constant learner on a
half-and-half sample swings from all-zeros to all-ones when a single label is
corrupted, blowing through the per-group robustness budget.

Usage: python3 scripts/erm_flip.py [--n 1000] [--flips 1]
"""

from __future__ import annotations

import argparse

from mgrobust.learners import erm_flip_demo


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--flips", type=int, default=1)
    parser.add_argument("--slack", type=float, default=0.05)
    args = parser.parse_args()

    outcome = erm_flip_demo(args.n, args.flips, epsilon_slack=args.slack)
    check = outcome.check
    before = outcome.predictor_before.predict(outcome.clean.features)[0]
    after = outcome.predictor_after.predict(outcome.clean.features)[0]
    bound = check.label_term + check.sym_diff_term + check.epsilon_slack
    print(f"constant before corruption: {before}")
    print(f"constant after {args.flips} flipped label(s): {after}")
    print(f"mean prediction gap (full domain): {check.lhs}")
    print(f"allowed budget: {check.label_term} + {check.sym_diff_term} + {check.epsilon_slack} = {bound}")
    print(f"robust: {check.satisfied}")


if __name__ == "__main__":
    main()
