#!/usr/bin/env python3
"""Leave-one-out benchmark of every method on a synthetic corpus.

Generates (or reuses) a labeled corpus, runs the full tune/train/evaluate
protocol per held-out system for the learned ensemble, both competing
ensembles and the three standalone detector families, and prints one report
table per method and anti-pattern.

Typical runs:

    python scripts/run_loocv_experiment.py --seed 0 --systems 4 --classes 60 --trials 10
    python scripts/run_loocv_experiment.py --corpus build/corpus --trials 30 \
        --methods mlp rule-card hist jdeodorant
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from smellkit.evaluation import report_table
from smellkit.protocol import AntiPattern, build_artifacts, leave_one_out, make_pipeline
from smellkit.synth import SynthParams, as_labeled, generate_corpus, read_corpus

ALL_METHODS = ("mlp", "vote", "asci", "rule-card", "hist", "jdeodorant")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", help="existing corpus directory; omit to generate one")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--systems", type=int, default=4)
    parser.add_argument("--classes", type=int, default=80)
    parser.add_argument("--commits", type=int, default=150)
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--methods", nargs="+", default=list(ALL_METHODS), choices=ALL_METHODS)
    parser.add_argument(
        "--pattern", choices=["god-class", "feature-envy", "both"], default="both"
    )
    args = parser.parse_args()

    if args.corpus:
        systems = read_corpus(args.corpus)
    else:
        params = SynthParams(n_classes=args.classes, n_commits=args.commits)
        systems = [as_labeled(s) for s in generate_corpus(args.seed, args.systems, params)]
    print(f"corpus: {len(systems)} systems, {sum(len(s.model.classes) for s in systems)} classes")

    patterns = {
        "god-class": [AntiPattern.GOD_CLASS],
        "feature-envy": [AntiPattern.FEATURE_ENVY],
        "both": list(AntiPattern),
    }[args.pattern]

    arts = [build_artifacts(s) for s in systems]
    for pattern in patterns:
        print(f"\n=== {pattern.value} ===")
        summary = []
        for method in args.methods:
            pipeline = make_pipeline(method, pattern, dtype=np.float32)
            started = time.perf_counter()
            report = leave_one_out(arts, pipeline, trials=args.trials, seed=args.seed)
            elapsed = time.perf_counter() - started
            overall = report.overall.scores
            summary.append((method, overall.mcc))
            print(f"\n--- {method} ({elapsed:.1f}s) ---")
            print(report_table(report), end="")
        print("\noverall MCC ranking:")
        for method, mcc in sorted(summary, key=lambda pair: -pair[1]):
            print(f"  {method:12s} {mcc:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
