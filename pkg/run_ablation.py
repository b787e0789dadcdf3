#!/usr/bin/env python3
"""
Pooling and pair-sampling ablations on the bundled suite

Trains one model per variant (pooling mean/sum/max at k=10, then k=1/20 with mean pooling),
evaluates each on the suite and writes out/ablation/summary.csv with the top-1 averages.

Usage:
  python run_ablation.py
  python run_ablation.py --iterations 500 --out out/ablation_quick
"""
import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent / 'src'))

import pandas as pd  # noqa: E402

from chipletrank.dataset import SamplingConfig  # noqa: E402
from chipletrank.model import TrainConfig  # noqa: E402
from chipletrank.pipeline import ChipletRankPipeline, configure_logging  # noqa: E402

logger = logging.getLogger(__name__)

VARIANTS = [
    ('pool-mean-k10', 'mean', 10),
    ('pool-sum-k10', 'sum', 10),
    ('pool-max-k10', 'max', 10),
    ('pool-mean-k1', 'mean', 1),
    ('pool-mean-k20', 'mean', 20),
]


def main():
    parser = argparse.ArgumentParser(description='Run pooling and k ablations on a suite')
    parser.add_argument('--suite', default=str(Path(__file__).parent / 'data' / 'suite.json'))
    parser.add_argument('--out', default='out/ablation')
    parser.add_argument('--seed', type=int, default=42)
    parser.add_argument('--iterations', type=int, default=3000)
    parser.add_argument('--parallel', type=int, default=1)
    args = parser.parse_args()

    configure_logging('INFO')
    pipeline = ChipletRankPipeline()
    rows = []
    for tag, pooling, k in VARIANTS:
        logger.info(f"Ablation variant {tag}")
        report = pipeline.run_suite(
            args.suite, args.out,
            sampling=SamplingConfig(k=k, seed=args.seed),
            train_cfg=TrainConfig(iterations=args.iterations, seed=args.seed, pooling=pooling),
            parallel=args.parallel,
            tag=tag,
        )
        for agg in report.aggregates:
            rows.append({'variant': tag, 'pooling': pooling, 'k': k, **vars(agg)})

    summary = pd.DataFrame(rows)
    summary_path = Path(args.out) / 'summary.csv'
    summary.to_csv(summary_path, index=False, float_format='%.6g')
    print(summary[summary['method'] == 'top1'][['variant', 'split', 'method_t', 'method_wl', 'method_l',
                                                 'delta_t_pct', 'delta_wl_pct']].to_string(index=False))
    print(f"\nSummary written to {summary_path}")


if __name__ == "__main__":
    main()
