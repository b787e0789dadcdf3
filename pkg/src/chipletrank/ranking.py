"""
Baseline ordering, model-driven ranking of candidate orders, and baseline-vs-model evaluation
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd

from .core import ChipletSystem, PlacementOrder
from .dataset import OrderGraph, SamplingConfig, build_graph, sample_pairs
from .errors import DataError, MissingSweep, NoComparablePairs
from .pareto import LabeledScatter
from .placer import MAX_ENUMERABLE, OrderSource, enumerate_orders

logger = logging.getLogger(__name__)

IMPORTANCE_MODES = ('pagerank', 'degree')
SPLIT_LABELS = {'train': 'training', 'test': 'testing'}


class Scorer(Protocol):
    def score_graphs(self, graphs: Sequence[OrderGraph]) -> np.ndarray:
        ...


def pagerank(weights: np.ndarray, damping: float = 0.85, tol: float = 1e-9, max_iter: int = 10000) -> np.ndarray:
    """
    Power-iteration PageRank on a symmetric weighted adjacency matrix.

    A node with no edges spreads its mass uniformly over all nodes (teleport).
    """
    n = len(weights)
    strength = weights.sum(axis=0)
    dangling = strength == 0
    transition = np.divide(weights, strength, out=np.zeros_like(weights), where=~dangling)
    rank = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = damping * (transition @ rank + rank[dangling].sum() / n) + (1.0 - damping) / n
        if np.abs(new - rank).sum() < tol:
            return new
        rank = new
    logger.warning(f"PageRank did not converge within {max_iter} iterations")
    return rank


def chiplet_importance(system: ChipletSystem, mode: str = 'pagerank') -> np.ndarray:
    if mode == 'pagerank':
        return pagerank(system.wire_matrix)
    if mode == 'degree':
        strength = system.wire_matrix.sum(axis=0)
        total = strength.sum()
        return strength / total if total > 0 else np.full(system.n, 1.0 / system.n)
    raise DataError(f"importance must be one of {IMPORTANCE_MODES}, got '{mode}'")


def baseline_order(system: ChipletSystem, importance: str = 'pagerank') -> PlacementOrder:
    """Chiplets by descending importance x area; equal keys keep ascending index"""
    key = chiplet_importance(system, importance) * system.areas
    return PlacementOrder(tuple(sorted(range(system.n), key=lambda i: (-key[i], i))))


def rank_orders(
    system: ChipletSystem,
    model: Scorer,
    candidates: OrderSource = 'all',
    top: Optional[int] = None,
    parallelism: int = 1,
    cap: int = MAX_ENUMERABLE,
) -> List[Tuple[PlacementOrder, float]]:
    """
    Score every candidate order; best first, equal scores in lexicographic order

    Args:
        candidates: 'all' or SampledOrders(max_orders, seed)
        top: number of entries to return (all when None)
        parallelism: scoring threads over chunks of candidates
    """
    orders = enumerate_orders(system, candidates, cap)
    graphs = [build_graph(system, o) for o in orders]
    if parallelism > 1 and len(graphs) > 1:
        size = int(np.ceil(len(graphs) / parallelism))
        chunks = [graphs[i:i + size] for i in range(0, len(graphs), size)]
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            scores = np.concatenate(list(pool.map(model.score_graphs, chunks)))
    else:
        scores = np.asarray(model.score_graphs(graphs), dtype=np.float64)

    ranked = sorted(zip(orders, scores.tolist()), key=lambda item: (-item[1], item[0].sequence))
    logger.info(f"Ranked {len(ranked)} orders of system '{system.name}'")
    return ranked if top is None else ranked[:top]


def percentage_delta(baseline: float, method: float) -> float:
    """(method - baseline) / baseline x 100, two decimals"""
    return round((method - baseline) / baseline * 100.0, 2)


@dataclass
class SystemRow:
    system: str
    split: str
    baseline_order: str
    baseline_t: float
    baseline_wl: float
    baseline_l: float
    top1_order: str
    top1_t: float
    top1_wl: float
    top1_l: float
    top5_t: float
    top5_wl: float
    top5_l: float
    median_l: float
    max_l: float


@dataclass
class SplitAggregate:
    split: str
    method: str
    systems: int
    baseline_t: float
    baseline_wl: float
    baseline_l: float
    method_t: float
    method_wl: float
    method_l: float
    delta_t_pct: float
    delta_wl_pct: float
    pairwise_accuracy: Optional[float] = None


def aggregate(rows: Sequence[SystemRow], split: str, method: str = 'top1') -> SplitAggregate:
    """Average the per-system rows of one split and compute the percentage deltas of the averages"""
    if not rows:
        raise DataError(f"no rows to aggregate for split '{split}'")
    base = np.array([[r.baseline_t, r.baseline_wl, r.baseline_l] for r in rows]).mean(axis=0)
    meth = np.array([[getattr(r, f'{method}_t'), getattr(r, f'{method}_wl'), getattr(r, f'{method}_l')]
                     for r in rows]).mean(axis=0)
    return SplitAggregate(
        split=split, method=method, systems=len(rows),
        baseline_t=float(base[0]), baseline_wl=float(base[1]), baseline_l=float(base[2]),
        method_t=float(meth[0]), method_wl=float(meth[1]), method_l=float(meth[2]),
        delta_t_pct=percentage_delta(base[0], meth[0]),
        delta_wl_pct=percentage_delta(base[1], meth[1]),
    )


@dataclass
class EvalReport:
    rows: List[SystemRow]
    aggregates: List[SplitAggregate] = field(default_factory=list)

    def rows_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows])

    def aggregates_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(a) for a in self.aggregates])

    def to_dict(self) -> dict:
        return {'rows': [asdict(r) for r in self.rows], 'aggregates': [asdict(a) for a in self.aggregates]}

    def format_table(self) -> str:
        lines = [
            f"{'system':<16}{'split':<7}{'T_base':>9}{'WL_base':>12}{'L':>4}"
            f"{'T_top1':>9}{'WL_top1':>12}{'L':>4}{'T_top5':>9}{'WL_top5':>12}{'L':>6}",
        ]
        for r in self.rows:
            lines.append(
                f"{r.system:<16}{r.split:<7}{r.baseline_t:>9.2f}{r.baseline_wl:>12.2f}{r.baseline_l:>4.0f}"
                f"{r.top1_t:>9.2f}{r.top1_wl:>12.2f}{r.top1_l:>4.0f}{r.top5_t:>9.2f}{r.top5_wl:>12.2f}{r.top5_l:>6.1f}"
            )
        for a in self.aggregates:
            label = SPLIT_LABELS.get(a.split, a.split)
            line = (f"{label}-average ({a.method}): T {a.baseline_t:.2f} -> {a.method_t:.2f} ({a.delta_t_pct:.2f}%), "
                    f"WL {a.baseline_wl:.2f} -> {a.method_wl:.2f} ({a.delta_wl_pct:.2f}%), "
                    f"L {a.baseline_l:.2f} -> {a.method_l:.2f}")
            if a.pairwise_accuracy is not None:
                line += f", pairwise accuracy {a.pairwise_accuracy:.3f}"
            lines.append(line)
        return '\n'.join(lines)


def _lookup(labeled: LabeledScatter) -> Dict[Tuple[int, ...], Tuple[float, float, int]]:
    pts = labeled.points
    return {
        p.order.sequence: (p.temperature, p.wirelength, int(level))
        for p, level in zip(pts.points, labeled.level)
    }


def _find(table, system: str, order: PlacementOrder):
    try:
        return table[order.sequence]
    except KeyError:
        raise MissingSweep(f"order {order} of system '{system}' is not in its labeled sweep") from None


def heldout_accuracy(systems: Mapping[str, ChipletSystem], labeled: Mapping[str, LabeledScatter],
                     model: Scorer, sampling: SamplingConfig) -> Optional[float]:
    """Fraction of sampled within-system pairs the model orders correctly"""
    try:
        pairs = sample_pairs(labeled, sampling)
    except NoComparablePairs:
        return None
    strong = [build_graph(systems[p.system_id], p.strong) for p in pairs]
    weak = [build_graph(systems[p.system_id], p.weak) for p in pairs]
    return float(np.mean(np.asarray(model.score_graphs(strong)) > np.asarray(model.score_graphs(weak))))


def eval_compare(
    systems: Mapping[str, ChipletSystem],
    labeled: Mapping[str, LabeledScatter],
    model: Scorer,
    splits: Mapping[str, str],
    top: int = 5,
    importance: str = 'pagerank',
    sampling: Optional[SamplingConfig] = None,
) -> EvalReport:
    """
    Compare the baseline order with the model's top-1 and top-k orders on every system,
    looking all outcomes up in the labeled full sweeps

    Args:
        splits: system name -> 'train' or 'test'
    """
    rows = []
    for name in sorted(splits, key=lambda s: (splits[s] != 'train', s)):
        system = systems[name]
        table = _lookup(labeled[name])
        base = baseline_order(system, importance)
        bt, bwl, bl = _find(table, name, base)
        ranked = rank_orders(system, model, 'all', top=top)
        outcomes = np.array([_find(table, name, order) for order, _ in ranked], dtype=np.float64)
        levels = np.asarray(labeled[name].level)
        rows.append(SystemRow(
            system=name, split=splits[name],
            baseline_order=str(base), baseline_t=bt, baseline_wl=bwl, baseline_l=float(bl),
            top1_order=str(ranked[0][0]), top1_t=float(outcomes[0, 0]), top1_wl=float(outcomes[0, 1]),
            top1_l=float(outcomes[0, 2]),
            top5_t=float(outcomes[:, 0].mean()), top5_wl=float(outcomes[:, 1].mean()),
            top5_l=float(outcomes[:, 2].mean()),
            median_l=float(np.median(levels)), max_l=float(levels.max()),
        ))
        logger.info(f"System '{name}': baseline L={bl}, top-1 L={outcomes[0, 2]:.0f}")

    aggregates = []
    for split in ('train', 'test'):
        split_rows = [r for r in rows if r.split == split]
        if not split_rows:
            continue
        accuracy = None
        if split == 'test':
            names = [r.system for r in split_rows]
            accuracy = heldout_accuracy(systems, {n: labeled[n] for n in names}, model,
                                        sampling or SamplingConfig())
        for method in ('top1', 'top5'):
            agg = aggregate(split_rows, split, method)
            agg.pairwise_accuracy = accuracy
            aggregates.append(agg)
    return EvalReport(rows=rows, aggregates=aggregates)
