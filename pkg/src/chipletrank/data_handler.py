"""
Data loader/saver for systems, sweeps, labeled sweeps, pairs, reports and manifests
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from .core import ChipletSystem, PlacementOrder, parse_system, system_to_dict
from .dataset import TrainingPair
from .errors import MalformedFile
from .pareto import LabeledScatter, corner_sets
from .placer import ScatterPoint, ScatterSet

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SWEEP_COLUMNS = ['order', 'temperature_c', 'wirelength_mm']
LABELED_COLUMNS = SWEEP_COLUMNS + ['slack', 'level']
PAIR_COLUMNS = ['system_id', 'order_strong', 'order_weak', 'level_strong', 'level_weak']
FLOAT_FORMAT = '%.6g'


def _prepare(file_path: PathLike) -> Path:
    path = Path(file_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


class DataLoader:
    """Load pipeline artifacts from disk"""

    def load_system(self, file_path: PathLike) -> ChipletSystem:
        return parse_system(file_path)

    def load_systems(self, directory: PathLike) -> Dict[str, ChipletSystem]:
        """
        Load every *.json system in a directory

        Returns:
            Systems keyed by their name
        """
        directory = Path(directory)
        if not directory.is_dir():
            raise FileNotFoundError(f"Systems directory not found: {directory}")
        systems = {}
        for path in sorted(directory.glob('*.json')):
            system = parse_system(path)
            systems[system.name] = system
        logger.info(f"✓ Loaded {len(systems)} systems from {directory}")
        return systems

    def load_suite(self, file_path: PathLike) -> Dict[str, List[str]]:
        """Train/test split file: {"systems_dir": ..., "train": [...], "test": [...]}"""
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"Suite file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"{path}: {exc}") from exc
        for key in ('train', 'test'):
            if not isinstance(data.get(key), list):
                raise MalformedFile(f"{path}: '{key}' must be a list of system names")
        return data

    def _read_csv(self, file_path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"CSV file not found: {path}")
        try:
            df = pd.read_csv(path, dtype={'order': str})
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise MalformedFile(f"{path}: {exc}") from exc
        missing = [c for c in columns if c not in df.columns]
        if missing:
            raise MalformedFile(f"Column(s) {missing} not found in {path}. Available: {df.columns.tolist()}")
        return df

    def load_sweep(self, file_path: PathLike, system_name: str = None) -> ScatterSet:
        df = self._read_csv(file_path, SWEEP_COLUMNS)
        points = tuple(
            ScatterPoint(PlacementOrder.parse(o), float(t), float(wl))
            for o, t, wl in zip(df['order'], df['temperature_c'], df['wirelength_mm'])
        )
        name = system_name or Path(file_path).stem
        logger.info(f"✓ Loaded {len(points)} sweep points from {file_path}")
        return ScatterSet(system_name=name, points=points)

    def load_labeled(self, file_path: PathLike, system_name: str = None) -> LabeledScatter:
        df = self._read_csv(file_path, LABELED_COLUMNS)
        scatter = self.load_sweep(file_path, system_name)
        return LabeledScatter(
            points=scatter,
            slack=df['slack'].to_numpy(dtype=np.float64),
            level=df['level'].to_numpy(dtype=np.int64),
            corners=corner_sets(scatter),
        )

    def load_labeled_dir(self, directory: PathLike, names: Sequence[str] = None) -> Dict[str, LabeledScatter]:
        directory = Path(directory)
        if names is None:
            names = [p.stem for p in sorted(directory.glob('*.csv'))]
        return {name: self.load_labeled(directory / f'{name}.csv', name) for name in names}

    def load_pairs(self, file_path: PathLike) -> List[TrainingPair]:
        path = Path(file_path)
        if not path.exists():
            raise FileNotFoundError(f"Pairs file not found: {path}")
        try:
            df = pd.read_json(path, lines=True, dtype={'system_id': str, 'order_strong': str, 'order_weak': str})
        except ValueError as exc:
            raise MalformedFile(f"{path}: {exc}") from exc
        missing = [c for c in PAIR_COLUMNS if c not in df.columns]
        if missing:
            raise MalformedFile(f"Field(s) {missing} not found in {path}")
        pairs = [
            TrainingPair(
                system_id=row.system_id,
                strong=PlacementOrder.parse(row.order_strong),
                weak=PlacementOrder.parse(row.order_weak),
                level_strong=int(row.level_strong),
                level_weak=int(row.level_weak),
            )
            for row in df.itertuples(index=False)
        ]
        logger.info(f"✓ Loaded {len(pairs)} pairs from {path}")
        return pairs


class DataSaver:
    """Save pipeline artifacts to disk"""

    def save_system(self, system: ChipletSystem, file_path: PathLike) -> None:
        path = _prepare(file_path)
        path.write_text(json.dumps(system_to_dict(system), indent=2) + '\n')
        logger.info(f"✓ Saved system '{system.name}' to {path}")

    @staticmethod
    def sweep_frame(scatter: ScatterSet) -> pd.DataFrame:
        return pd.DataFrame({
            'order': [str(p.order) for p in scatter],
            'temperature_c': scatter.temperatures,
            'wirelength_mm': scatter.wirelengths,
        }, columns=SWEEP_COLUMNS)

    def save_sweep(self, scatter: ScatterSet, file_path: PathLike) -> None:
        path = _prepare(file_path)
        self.sweep_frame(scatter).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"✓ Saved {len(scatter)} rows to CSV: {path}")

    @classmethod
    def labeled_frame(cls, labeled: LabeledScatter) -> pd.DataFrame:
        df = cls.sweep_frame(labeled.points)
        df['slack'] = labeled.slack
        df['level'] = labeled.level
        return df

    def save_labeled(self, labeled: LabeledScatter, file_path: PathLike) -> None:
        path = _prepare(file_path)
        self.labeled_frame(labeled).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"✓ Saved {len(labeled.level)} rows to CSV: {path}")

    def save_pairs(self, pairs: Sequence[TrainingPair], file_path: PathLike) -> None:
        path = _prepare(file_path)
        df = pd.DataFrame([
            {'system_id': p.system_id, 'order_strong': str(p.strong), 'order_weak': str(p.weak),
             'level_strong': p.level_strong, 'level_weak': p.level_weak}
            for p in pairs
        ], columns=PAIR_COLUMNS)
        df.to_json(path, orient='records', lines=True)
        logger.info(f"✓ Saved {len(df)} pairs to {path}")

    def save_frame(self, df: pd.DataFrame, file_path: PathLike) -> None:
        path = _prepare(file_path)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"✓ Saved {len(df)} rows to CSV: {path}")

    def save_json(self, payload: Mapping[str, Any], file_path: PathLike) -> None:
        path = _prepare(file_path)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + '\n')
        logger.info(f"✓ Saved JSON: {path}")

    def save_summary_stats(self, labeled: LabeledScatter, file_path: PathLike) -> None:
        """
        Save sweep statistics and the level histogram to a text file

        Args:
            labeled: Labeled sweep of one system
            file_path: Output file path
        """
        path = _prepare(file_path)
        stats = labeled.points.statistics()
        histogram = labeled.histogram()
        with open(path, 'w') as f:
            f.write(f"Placement Order Sweep Summary: {labeled.points.system_name}\n")
            f.write("=" * 50 + "\n\n")

            f.write("Temperature (C):\n")
            for key in ('min', 'max', 'mean', 'std'):
                f.write(f"  {key.capitalize()}: {stats['temperature_' + key]:.4f}\n")
            f.write("\n")

            f.write("Wirelength (mm):\n")
            for key in ('min', 'max', 'mean', 'std'):
                f.write(f"  {key.capitalize()}: {stats['wirelength_' + key]:.4f}\n")
            f.write("\n")

            f.write("Correlation Level Distribution:\n")
            total = int(histogram.sum())
            for level in range(len(histogram) - 1, -1, -1):
                count = int(histogram[level])
                f.write(f"  L={level:2d}: {count} ({100.0 * count / total:.1f}%)\n")
            f.write("\n")

            f.write(f"Pareto front size: {labeled.corners.n1}\n")
            f.write(f"Distinct (T, WL) outcomes: {stats['distinct_outcomes']}\n")
            f.write("\n" + "=" * 50 + "\n")
            f.write(f"Total Orders Evaluated: {total}\n")

        logger.info(f"✓ Saved summary statistics to: {path}")
