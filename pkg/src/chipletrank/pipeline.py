"""
Chiplet placement-order pipeline - orchestrates sweeping, labeling, pairing, training, ranking and evaluation
"""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from . import __version__
from .core import ChipletSystem, PlacementOrder
from .data_handler import DataLoader, DataSaver
from .dataset import SamplingConfig, build_graph, fit_scaler, sample_pairs
from .errors import DataError
from .model import RankModel, TrainConfig, load_model, save_model, train
from .pareto import LabeledScatter, assign_levels
from .placer import (MAX_ENUMERABLE, OrderSource, PlacerConfig, ScatterSet, ThermalConfig, evaluate_order,
                     sweep)
from .plotting import emit_histograms, emit_scatter_plot
from .ranking import EvalReport, baseline_order, eval_compare, rank_orders
from .synthetic import generate_system

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(level: Union[str, int] = 'INFO') -> None:
    logging.basicConfig(level=level, format=LOG_FORMAT)


def file_digest(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            h.update(block)
    return h.hexdigest()


def config_hash(config: Dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: Dict[str, Any]
    seeds: Dict[str, int] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    tool_version: str = __version__
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished_at: Optional[str] = None

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def add_input(self, path: PathLike) -> None:
        path = Path(path)
        if path.is_dir():
            for child in sorted(path.glob('*')):
                if child.is_file():
                    self.inputs[str(child)] = file_digest(child)
        elif path.exists():
            self.inputs[str(path)] = file_digest(path)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['config_hash'] = self.config_hash
        return data


class ChipletRankPipeline:
    """End-to-end placement-order ranking pipeline"""

    def __init__(self, placer_cfg: Optional[PlacerConfig] = None, thermal_cfg: Optional[ThermalConfig] = None):
        """Initialize pipeline components"""
        self.placer_cfg = placer_cfg or PlacerConfig()
        self.thermal_cfg = thermal_cfg or ThermalConfig()
        self.loader = DataLoader()
        self.saver = DataSaver()
        logger.info("Pipeline initialized")

    def _finish(self, manifest: RunManifest, artifact: PathLike) -> None:
        manifest.finished_at = datetime.now(timezone.utc).isoformat()
        artifact = Path(artifact)
        self.saver.save_json(manifest.to_dict(), artifact.with_name(artifact.name + '.manifest.json'))

    def run_sweep(
        self,
        system_path: PathLike,
        output_csv: PathLike,
        orders: OrderSource = 'all',
        parallel: int = 1,
        cap: int = MAX_ENUMERABLE,
        seed: Optional[int] = None,
    ) -> ScatterSet:
        """
        Evaluate placement orders of one system and save the sweep CSV

        Args:
            system_path: Path to system JSON
            output_csv: Path to sweep CSV
            orders: 'all', an explicit order list or SampledOrders
            parallel: Worker processes
            cap: Largest chiplet count for all-permutations
            seed: Recorded in the manifest when sampling
        """
        logger.info(f"Starting sweep: {system_path} -> {output_csv}")
        manifest = RunManifest('sweep', {
            'system': str(system_path), 'orders': str(orders), 'cap': cap,
            'placer': asdict(self.placer_cfg), 'thermal': asdict(self.thermal_cfg),
        }, seeds={} if seed is None else {'orders': seed})
        manifest.add_input(system_path)

        system = self.loader.load_system(system_path)
        scatter = sweep(system, orders, parallel, self.placer_cfg, self.thermal_cfg, cap)
        self.saver.save_sweep(scatter, output_csv)
        manifest.outputs.append(str(output_csv))
        self._finish(manifest, output_csv)
        logger.info("Sweep completed successfully")
        return scatter

    def run_label(self, sweep_csv: PathLike, output_csv: PathLike, save_summary: bool = True) -> LabeledScatter:
        logger.info(f"Starting labeling: {sweep_csv} -> {output_csv}")
        manifest = RunManifest('label', {'sweep': str(sweep_csv)})
        manifest.add_input(sweep_csv)

        labeled = assign_levels(self.loader.load_sweep(sweep_csv))
        self.saver.save_labeled(labeled, output_csv)
        manifest.outputs.append(str(output_csv))
        if save_summary:
            summary_path = Path(output_csv).with_suffix('').as_posix() + '_summary.txt'
            self.saver.save_summary_stats(labeled, summary_path)
            manifest.outputs.append(summary_path)
        self._finish(manifest, output_csv)
        return labeled

    def run_pairs(self, labeled_csvs: Sequence[PathLike], output_path: PathLike,
                  sampling: Optional[SamplingConfig] = None):
        """Sample within-system training pairs; each system id is its labeled CSV's file stem"""
        sampling = sampling or SamplingConfig()
        logger.info(f"Sampling pairs from {len(labeled_csvs)} labeled sweeps (k={sampling.k})")
        manifest = RunManifest('pairs', {'labeled': [str(p) for p in labeled_csvs], **asdict(sampling)},
                               seeds={'sampling': sampling.seed})
        labeled = {}
        for path in labeled_csvs:
            manifest.add_input(path)
            labeled[Path(path).stem] = self.loader.load_labeled(path)

        pairs = sample_pairs(labeled, sampling)
        self.saver.save_pairs(pairs, output_path)
        manifest.outputs.append(str(output_path))
        self._finish(manifest, output_path)
        return pairs

    def run_train(self, pairs_path: PathLike, systems_dir: PathLike, output_model: PathLike,
                  config: Optional[TrainConfig] = None) -> RankModel:
        """
        Rebuild the graphs the pairs reference, fit the scaler on them and train

        Args:
            pairs_path: Pairs JSON-lines file
            systems_dir: Directory holding the referenced system JSON files
            output_model: Checkpoint path
            config: Training settings
        """
        config = config or TrainConfig()
        logger.info(f"Starting training: {pairs_path} -> {output_model}")
        manifest = RunManifest('train', {'pairs': str(pairs_path), 'systems': str(systems_dir), **asdict(config)},
                               seeds={'train': config.seed})
        manifest.add_input(pairs_path)
        manifest.add_input(systems_dir)

        pairs = self.loader.load_pairs(pairs_path)
        systems = self.loader.load_systems(systems_dir)
        graphs = {}
        for p in pairs:
            if p.system_id not in systems:
                raise DataError(f"pairs reference system '{p.system_id}' not found in {systems_dir}")
            system = systems[p.system_id]
            for order, level in ((p.strong, p.level_strong), (p.weak, p.level_weak)):
                key = (p.system_id, str(order))
                if key not in graphs:
                    graphs[key] = build_graph(system, order, level)

        scaler = fit_scaler(graphs.values())
        model = train(pairs, graphs, scaler, config)
        save_model(model, output_model)
        manifest.outputs.append(str(output_model))
        self._finish(manifest, output_model)
        logger.info("Training completed successfully")
        return model

    def run_rank(self, system_path: PathLike, model_path: PathLike, output_csv: Optional[PathLike] = None,
                 candidates: OrderSource = 'all', top: Optional[int] = 5, parallel: int = 1,
                 cap: int = MAX_ENUMERABLE) -> List[Tuple[PlacementOrder, float]]:
        system = self.loader.load_system(system_path)
        model = load_model(model_path)
        ranked = rank_orders(system, model, candidates, top, parallel, cap)
        if output_csv is not None:
            manifest = RunManifest('rank', {'system': str(system_path), 'model': str(model_path),
                                            'candidates': str(candidates), 'top': top, 'cap': cap})
            manifest.add_input(system_path)
            manifest.add_input(model_path)
            df = pd.DataFrame({
                'rank': range(1, len(ranked) + 1),
                'order': [str(o) for o, _ in ranked],
                'score': [repr(s) for _, s in ranked],
            })
            self.saver.save_frame(df, output_csv)
            manifest.outputs.append(str(output_csv))
            self._finish(manifest, output_csv)
        return ranked

    def run_baseline(self, system_path: PathLike, importance: str = 'pagerank',
                     output_json: Optional[PathLike] = None) -> Dict[str, Any]:
        """Baseline order plus its placed (T, WL)"""
        system = self.loader.load_system(system_path)
        order = baseline_order(system, importance)
        point = evaluate_order(system, order, self.placer_cfg, self.thermal_cfg)
        result = {'system': system.name, 'importance': importance, 'order': str(order),
                  'temperature_c': point.temperature, 'wirelength_mm': point.wirelength}
        if output_json is not None:
            manifest = RunManifest('baseline', {'system': str(system_path), 'importance': importance})
            manifest.add_input(system_path)
            self.saver.save_json(result, output_json)
            manifest.outputs.append(str(output_json))
            self._finish(manifest, output_json)
        return result

    def _suite_systems(self, suite_path: PathLike) -> Tuple[Dict[str, ChipletSystem], Dict[str, str], Path]:
        suite = self.loader.load_suite(suite_path)
        systems_dir = Path(suite_path).parent / suite.get('systems_dir', 'systems')
        systems = self.loader.load_systems(systems_dir)
        splits = {name: 'train' for name in suite['train']}
        splits.update({name: 'test' for name in suite['test']})
        missing = sorted(set(splits) - set(systems))
        if missing:
            raise DataError(f"suite names systems {missing} that are not in {systems_dir}")
        return systems, splits, systems_dir

    def run_eval(self, model_path: PathLike, suite_path: PathLike, labeled_dir: PathLike,
                 output_prefix: PathLike, top: int = 5, importance: str = 'pagerank',
                 sampling: Optional[SamplingConfig] = None) -> EvalReport:
        """
        Compare baseline and ranked orders on every suite system

        Writes <prefix>_rows.csv, <prefix>_aggregates.csv, <prefix>.json and <prefix>.txt
        """
        logger.info(f"Starting evaluation of {model_path} on {suite_path}")
        manifest = RunManifest('eval', {'model': str(model_path), 'suite': str(suite_path),
                                        'labeled': str(labeled_dir), 'top': top, 'importance': importance})
        manifest.add_input(model_path)
        manifest.add_input(suite_path)
        systems, splits, _ = self._suite_systems(suite_path)
        labeled = self.loader.load_labeled_dir(labeled_dir, sorted(splits))
        report = eval_compare(systems, labeled, load_model(model_path), splits, top, importance, sampling)
        self.save_report(report, output_prefix)
        prefix = Path(output_prefix)
        manifest.outputs.append(str(prefix))
        self._finish(manifest, prefix.with_suffix('.json'))
        return report

    def save_report(self, report: EvalReport, output_prefix: PathLike) -> None:
        prefix = Path(output_prefix).with_suffix('').as_posix()
        self.saver.save_frame(report.rows_frame(), prefix + '_rows.csv')
        self.saver.save_frame(report.aggregates_frame(), prefix + '_aggregates.csv')
        self.saver.save_json(report.to_dict(), prefix + '.json')
        Path(prefix + '.txt').write_text(report.format_table() + '\n')

    def run_plot(self, labeled_csv: PathLike, output_svg: PathLike, highlights: Sequence[str] = (),
                 histogram_svg: Optional[PathLike] = None) -> None:
        manifest = RunManifest('plot', {'labeled': str(labeled_csv), 'highlights': list(highlights)})
        manifest.add_input(labeled_csv)
        labeled = self.loader.load_labeled(labeled_csv)
        orders = [PlacementOrder.parse(h) for h in highlights]
        csv_path = emit_scatter_plot(labeled, orders, output_svg)
        manifest.outputs += [str(output_svg), str(csv_path)]
        if histogram_svg is not None:
            emit_histograms(labeled.points, histogram_svg)
            manifest.outputs.append(str(histogram_svg))
        self._finish(manifest, output_svg)

    def run_generate(self, output_dir: PathLike, count: int, n_chiplets: int, seed: int,
                     profile: str = 'mixed', prefix: str = 'synth') -> List[Path]:
        manifest = RunManifest('generate', {'count': count, 'n_chiplets': n_chiplets, 'profile': profile,
                                            'prefix': prefix}, seeds={'generator': seed})
        paths = []
        for i in range(count):
            system = generate_system(f'{prefix}{i}', n_chiplets, seed + i, profile)
            path = Path(output_dir) / f'{system.name}.json'
            self.saver.save_system(system, path)
            paths.append(path)
        manifest.outputs += [str(p) for p in paths]
        self._finish(manifest, Path(output_dir) / f'{prefix}')
        return paths

    def run_suite(
        self,
        suite_path: PathLike,
        output_dir: PathLike,
        sampling: Optional[SamplingConfig] = None,
        train_cfg: Optional[TrainConfig] = None,
        parallel: int = 1,
        reuse_sweeps: bool = True,
        tag: str = 'default',
    ) -> EvalReport:
        """
        Full flow on a suite: sweep and label every system, sample pairs on the training
        systems, train, then evaluate on all systems

        Args:
            reuse_sweeps: Skip systems whose labeled CSV already exists in output_dir
            tag: Names the pairs/model/report files so ablation variants sit side by side
        """
        out = Path(output_dir)
        systems, splits, systems_dir = self._suite_systems(suite_path)
        labeled_dir = out / 'labeled'
        for name in sorted(splits):
            labeled_csv = labeled_dir / f'{name}.csv'
            if reuse_sweeps and labeled_csv.exists():
                continue
            sweep_csv = out / 'sweeps' / f'{name}.csv'
            self.run_sweep(systems_dir / f'{name}.json', sweep_csv, 'all', parallel)
            self.run_label(sweep_csv, labeled_csv)

        train_csvs = [labeled_dir / f'{name}.csv' for name in sorted(splits) if splits[name] == 'train']
        pairs_path = out / f'pairs_{tag}.jsonl'
        self.run_pairs(train_csvs, pairs_path, sampling)
        model_path = out / f'model_{tag}.json'
        self.run_train(pairs_path, systems_dir, model_path, train_cfg)
        return self.run_eval(model_path, suite_path, labeled_dir, out / f'report_{tag}', sampling=sampling)
