"""
Command-line interface: chipletrank <sweep|label|pairs|train|rank|baseline|eval|plot|generate> [flags]
"""
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from .core import PlacementOrder
from .dataset import SamplingConfig
from .errors import ChipletRankError, UsageError
from .model import POOLING_MODES, TrainConfig
from .pipeline import ChipletRankPipeline, configure_logging
from .placer import MAX_ENUMERABLE, PlacerConfig, SampledOrders, ThermalConfig
from .ranking import IMPORTANCE_MODES
from .synthetic import PROFILES

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('sweep', 'label', 'pairs', 'train', 'rank', 'baseline', 'eval', 'plot', 'generate')


class ArgumentParser(argparse.ArgumentParser):
    """Raise UsageError instead of printing usage and exiting with status 2"""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=42, help='Seed for every RNG stream (default: 42)')
    common.add_argument('--out', help='Output path (file, directory or prefix depending on subcommand)')
    common.add_argument('--parallel', type=int, default=1, help='Worker count for sweep and rank (default: 1)')
    common.add_argument('--log-level', default=None, help='Logging level (default: $CHIPLETRANK_LOG_LEVEL or INFO)')

    placement = ArgumentParser(add_help=False)
    placement.add_argument('--grid', type=int, default=64, help='Placer cells per side (default: 64)')
    placement.add_argument('--spacing', type=int, default=0, help='Margin cells between chiplets (default: 0)')
    placement.add_argument('--thermal-grid', type=int, default=32, help='Thermal samples per side (default: 32)')
    placement.add_argument('--kappa', type=float, default=40.0, help='C per watt coupling (default: 40)')
    placement.add_argument('--sigma0', type=float, default=1.0, help='Kernel width offset in mm (default: 1.0)')

    candidates = ArgumentParser(add_help=False)
    candidates.add_argument('--orders', choices=['all', 'sampled'], default='all',
                            help='Enumerate all permutations or sample them (default: all)')
    candidates.add_argument('--max-orders', type=int, default=1000, help='Sample size for --orders sampled')
    candidates.add_argument('--cap', type=int, default=MAX_ENUMERABLE,
                            help=f'Largest chiplet count allowed for --orders all (default: {MAX_ENUMERABLE})')

    parser = ArgumentParser(prog='chipletrank', description='Chiplet placement-order exploration with learning to rank')
    sub = parser.add_subparsers(dest='command', metavar='subcommand', parser_class=ArgumentParser)

    p = sub.add_parser('sweep', parents=[common, placement, candidates], help='Evaluate placement orders')
    p.add_argument('--system', required=True, help='System JSON file')
    p.add_argument('--order-file', help='Evaluate only the dash-separated orders listed one per line')

    p = sub.add_parser('label', parents=[common], help='Assign correlation levels to a sweep')
    p.add_argument('--sweep', required=True, help='Sweep CSV')
    p.add_argument('--no-summary', action='store_true', help='Skip the summary text file')

    p = sub.add_parser('pairs', parents=[common], help='Sample training pairs from labeled sweeps')
    p.add_argument('--labeled', nargs='+', required=True, help='Labeled CSVs, one per system (stem = system name)')
    p.add_argument('--k', type=int, default=10, help='Max comparisons per point (default: 10)')

    p = sub.add_parser('train', parents=[common], help='Train the ranking model')
    p.add_argument('--pairs', required=True, help='Pairs JSON-lines file')
    p.add_argument('--systems', required=True, help='Directory of system JSON files')
    p.add_argument('--pooling', choices=POOLING_MODES, default='mean', help='Graph pooling (default: mean)')
    p.add_argument('--iterations', type=int, default=3000, help='Minibatch steps (default: 3000)')
    p.add_argument('--batch', type=int, default=64, help='Pairs per step (default: 64)')
    p.add_argument('--lr', type=float, default=1e-4, help='Adam learning rate (default: 1e-4)')

    p = sub.add_parser('rank', parents=[common, candidates], help='Rank candidate orders of a system')
    p.add_argument('--system', required=True, help='System JSON file')
    p.add_argument('--model', required=True, help='Model checkpoint')
    p.add_argument('--top', type=int, default=5, help='Entries to report (default: 5)')

    p = sub.add_parser('baseline', parents=[common, placement], help='Importance x area baseline order')
    p.add_argument('--system', required=True, help='System JSON file')
    p.add_argument('--importance', choices=IMPORTANCE_MODES, default='pagerank',
                   help='Chiplet importance measure (default: pagerank)')

    p = sub.add_parser('eval', parents=[common], help='Compare baseline and ranked orders on a suite')
    p.add_argument('--model', required=True, help='Model checkpoint')
    p.add_argument('--suite', required=True, help='Suite JSON naming train and test systems')
    p.add_argument('--labeled-dir', required=True, help='Directory of labeled CSVs named <system>.csv')
    p.add_argument('--top', type=int, default=5, help='Size of the top-k average (default: 5)')
    p.add_argument('--importance', choices=IMPORTANCE_MODES, default='pagerank')
    p.add_argument('--k', type=int, default=10, help='Pairs per point for held-out accuracy (default: 10)')

    p = sub.add_parser('plot', parents=[common], help='Scatter plot of a labeled sweep')
    p.add_argument('--labeled', required=True, help='Labeled CSV')
    p.add_argument('--highlight', nargs='*', default=[], help='Orders to mark, e.g. 2-0-1')
    p.add_argument('--histogram', help='Also write T/WL frequency histograms to this SVG')

    p = sub.add_parser('generate', parents=[common], help='Write synthetic system files')
    p.add_argument('--count', type=int, default=1, help='Systems to generate (default: 1)')
    p.add_argument('--chiplets', type=int, default=6, help='Chiplets per system (default: 6)')
    p.add_argument('--profile', choices=sorted(PROFILES), default='mixed')
    p.add_argument('--prefix', default='synth', help='System name prefix (default: synth)')
    return parser


def _require_out(args) -> str:
    if not args.out:
        raise UsageError(f"--out is required for '{args.command}'")
    return args.out


def _placement_configs(args):
    return (PlacerConfig(grid=args.grid, spacing=args.spacing),
            ThermalConfig(grid=args.thermal_grid, kappa=args.kappa, sigma0=args.sigma0))


def _order_source(args):
    if args.orders == 'sampled':
        return SampledOrders(args.max_orders, args.seed)
    return 'all'


def dispatch(args) -> None:
    command = args.command
    if command == 'sweep':
        placer_cfg, thermal_cfg = _placement_configs(args)
        orders = _order_source(args)
        if args.order_file:
            lines = Path(args.order_file).read_text().split()
            orders = [PlacementOrder.parse(line) for line in lines]
        ChipletRankPipeline(placer_cfg, thermal_cfg).run_sweep(
            args.system, _require_out(args), orders, args.parallel, args.cap, args.seed)

    elif command == 'label':
        labeled = ChipletRankPipeline().run_label(args.sweep, _require_out(args), not args.no_summary)
        print(f"Level histogram (L=0..10): {labeled.histogram().tolist()}")

    elif command == 'pairs':
        pairs = ChipletRankPipeline().run_pairs(args.labeled, _require_out(args), SamplingConfig(args.k, args.seed))
        print(f"Sampled {len(pairs)} pairs")

    elif command == 'train':
        config = TrainConfig(lr=args.lr, batch=args.batch, iterations=args.iterations, seed=args.seed,
                             pooling=args.pooling)
        model = ChipletRankPipeline().run_train(args.pairs, args.systems, _require_out(args), config)
        print(f"Final loss {model.meta['loss_history'][-1]:.6f}")

    elif command == 'rank':
        ranked = ChipletRankPipeline().run_rank(args.system, args.model, args.out, _order_source(args),
                                                args.top, args.parallel, args.cap)
        for k, (order, score) in enumerate(ranked, 1):
            print(f"{k}\t{order}\t{score!r}")

    elif command == 'baseline':
        result = ChipletRankPipeline(*_placement_configs(args)).run_baseline(args.system, args.importance, args.out)
        print(f"{result['order']}\tT={result['temperature_c']:.4f}\tWL={result['wirelength_mm']:.4f}")

    elif command == 'eval':
        report = ChipletRankPipeline().run_eval(args.model, args.suite, args.labeled_dir, _require_out(args),
                                                args.top, args.importance, SamplingConfig(args.k, args.seed))
        print(report.format_table())

    elif command == 'plot':
        ChipletRankPipeline().run_plot(args.labeled, _require_out(args), args.highlight, args.histogram)

    elif command == 'generate':
        paths = ChipletRankPipeline().run_generate(_require_out(args), args.count, args.chiplets, args.seed,
                                                   args.profile, args.prefix)
        for path in paths:
            print(path)


def run_pipeline(argv: Optional[List[str]] = None) -> int:
    """Parse flags, run one subcommand and return the process exit status"""
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"missing subcommand; choose one of {', '.join(SUBCOMMANDS)}")
        configure_logging((args.log_level or os.environ.get('CHIPLETRANK_LOG_LEVEL', 'INFO')).upper())
        dispatch(args)
        return 0
    except ChipletRankError as exc:
        code = exc.exit_code
        message = f"{type(exc).__name__}: {exc}"
    except (FileNotFoundError, PermissionError) as exc:
        code = 2
        message = f"{type(exc).__name__}: {exc}"
    except Exception as exc:  # noqa: BLE001
        logger.debug("Unhandled error", exc_info=True)
        code = 3
        message = f"{type(exc).__name__}: {exc}"
    print(f"error: {' '.join(message.split())}", file=sys.stderr)
    return code


def main() -> int:
    return run_pipeline()


if __name__ == "__main__":
    sys.exit(main())
