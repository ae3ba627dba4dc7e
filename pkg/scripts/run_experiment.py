#!/usr/bin/env python3
"""Run the full benchmark experiment: generate the default synthetic corpus
(100 train / 85 test images across 7 classes), train the score network and
the decision tree cascade, evaluate on the held-out split, and save the model
plus a JSON report.

Usage:
    python scripts/run_experiment.py --out runs/exp1 [--corpus-seed 0]
        [--train-seed 7] [--hidden 24] [--eta 0.3] [--alpha 0.9]
        [--epsilon 1e-6] [--max-epochs 500]
"""

import argparse
import json
import os
import sys
import time

from fishid import pipeline, synthgen
from fishid.mlp import TrainConfig
from fishid.pipeline import format_report, report_to_dict


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/experiment", help="output directory")
    ap.add_argument("--corpus-seed", type=int, default=0)
    ap.add_argument("--train-seed", type=int, default=7)
    ap.add_argument("--hidden", type=int, default=24)
    ap.add_argument("--eta", type=float, default=0.3)
    ap.add_argument("--alpha", type=float, default=0.9)
    ap.add_argument("--epsilon", type=float, default=1e-6)
    ap.add_argument("--max-epochs", type=int, default=500)
    args = ap.parse_args(argv)

    os.makedirs(args.out, exist_ok=True)
    corpus_dir = os.path.join(args.out, "corpus")

    t0 = time.time()
    manifest, paths = synthgen.generate_corpus(
        corpus_dir, synthgen.SynthConfig(seed=args.corpus_seed)
    )
    print(f"corpus: {len(paths)} images -> {corpus_dir} ({time.time()-t0:.1f}s)")

    cfg = TrainConfig(
        eta=args.eta,
        alpha=args.alpha,
        epsilon=args.epsilon,
        max_epochs=args.max_epochs,
        seed=args.train_seed,
        init_scale=pipeline.PIPELINE_INIT_SCALE,
    )
    t0 = time.time()
    bundle = pipeline.train_bundle(manifest, train_cfg=cfg, hidden=args.hidden)
    print(f"trained {len(bundle.registry)} classes ({time.time()-t0:.1f}s)")

    model_path = os.path.join(args.out, "model.json")
    pipeline.save_bundle(bundle, model_path)
    print(f"model -> {model_path}")

    t0 = time.time()
    report = pipeline.evaluate(bundle, manifest)
    print(f"evaluated {report.total} test images ({time.time()-t0:.1f}s)")
    print(format_report(report))

    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"report -> {report_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
