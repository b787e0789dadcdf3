"""
Feature graphs for (system, order) pairs, min-max scaling, and bounded pairwise sampling
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .core import ChipletSystem, PlacementOrder, validate_order
from .errors import DataError, EmptyCorpus, NoComparablePairs
from .pareto import MAX_LEVEL, LabeledScatter

logger = logging.getLogger(__name__)

NODE_FEATURES = (
    'width_mm',
    'length_mm',
    'power_w',
    'step',
    'area_remaining',
    'power_cumulative_w',
    'wires_closed',
)
NUM_NODE_FEATURES = len(NODE_FEATURES)


@dataclass(frozen=True)
class OrderGraph:
    """
    One chiplet system under one placement order.

    node_features rows follow chiplet index; edges hold (a, b) with a < b, one per net.
    edge_weights are raw wire counts; edge_features is their scaled copy (set by apply_scaler),
    which aggregation uses whenever it is present.
    """
    node_features: np.ndarray
    edges: np.ndarray
    edge_weights: np.ndarray
    label: Optional[int]
    system_id: str
    order: PlacementOrder
    edge_features: Optional[np.ndarray] = None

    @property
    def num_nodes(self) -> int:
        return self.node_features.shape[0]

    def permuted(self, perm: Sequence[int]) -> 'OrderGraph':
        """Relabel nodes so that new node k is old node perm[k]"""
        perm = np.asarray(perm)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(len(perm))
        edges = inverse[self.edges] if len(self.edges) else self.edges
        return replace(self, node_features=self.node_features[perm], edges=edges)


@dataclass(frozen=True)
class FeatureScaler:
    """Per-column min/max for the node features followed by the edge weight"""
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        if self.mins.shape != (NUM_NODE_FEATURES + 1,) or self.maxs.shape != self.mins.shape:
            raise DataError(f"scaler expects {NUM_NODE_FEATURES + 1} columns, got {self.mins.shape}")
        if np.any(self.maxs < self.mins):
            raise DataError("scaler max must be >= min for every feature")

    def transform(self, values: np.ndarray, columns: slice) -> np.ndarray:
        lo, hi = self.mins[columns], self.maxs[columns]
        span = hi - lo
        constant = span == 0
        scaled = (values - lo) / np.where(constant, 1.0, span)
        return np.where(constant, 0.5, np.clip(scaled, 0.0, 1.0))

    def to_dict(self) -> Dict[str, list]:
        return {
            'features': list(NODE_FEATURES) + ['edge_wires'],
            'min': self.mins.tolist(),
            'max': self.maxs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, list]) -> 'FeatureScaler':
        return cls(mins=np.asarray(data['min'], dtype=np.float64), maxs=np.asarray(data['max'], dtype=np.float64))


@dataclass(frozen=True)
class TrainingPair:
    """A within-system comparison; graphs are referenced by (system_id, order) and rebuilt on demand"""
    system_id: str
    strong: PlacementOrder
    weak: PlacementOrder
    level_strong: int
    level_weak: int

    def __post_init__(self):
        if self.level_strong <= self.level_weak:
            raise DataError(
                f"pair in '{self.system_id}': strong level {self.level_strong} must exceed weak level {self.level_weak}"
            )


@dataclass(frozen=True)
class SamplingConfig:
    k: int = 10
    seed: int = 42

    def __post_init__(self):
        if self.k < 1:
            raise DataError(f"sampling k must be >= 1, got {self.k}")


def order_features(system: ChipletSystem, order) -> np.ndarray:
    """
    Order-dependent node columns, indexed by chiplet:
    step (1-based), remaining interposer area fraction after the step,
    cumulative placed power after the step, wires of nets closed at the step
    """
    order = validate_order(system, order)
    seq = np.asarray(order.sequence)
    wires = system.wire_matrix
    out = np.zeros((system.n, 4), dtype=np.float64)
    area_cum = np.cumsum(system.areas[seq])
    power_cum = np.cumsum(system.powers[seq])
    for t, c in enumerate(seq):
        out[c, 0] = t + 1
        out[c, 1] = 1.0 - area_cum[t] / system.interposer.area
        out[c, 2] = power_cum[t]
        out[c, 3] = wires[c, seq[:t]].sum()
    return out


def build_graph(system: ChipletSystem, order, label: Optional[int] = None) -> OrderGraph:
    order = validate_order(system, order)
    if label is not None and not 0 <= label <= MAX_LEVEL:
        raise DataError(f"label must be in 0..{MAX_LEVEL}, got {label}")
    static = np.array([[c.width, c.length, c.power] for c in system.chiplets], dtype=np.float64)
    nodes = np.hstack([static, order_features(system, order)])
    edges = np.array([[net.a, net.b] for net in system.nets], dtype=np.int64).reshape(-1, 2)
    weights = np.array([net.wires for net in system.nets], dtype=np.float64)
    return OrderGraph(
        node_features=nodes,
        edges=edges,
        edge_weights=weights,
        label=None if label is None else int(label),
        system_id=system.name,
        order=order,
    )


def fit_scaler(graphs: Iterable[OrderGraph]) -> FeatureScaler:
    graphs = list(graphs)
    if not graphs:
        raise EmptyCorpus("cannot fit a feature scaler on zero graphs")
    nodes = np.vstack([g.node_features for g in graphs])
    mins = np.append(nodes.min(axis=0), np.inf)
    maxs = np.append(nodes.max(axis=0), -np.inf)
    weights = np.concatenate([g.edge_weights for g in graphs])
    if len(weights):
        mins[-1], maxs[-1] = weights.min(), weights.max()
    else:
        mins[-1] = maxs[-1] = 0.0
    logger.info(f"Fitted feature scaler on {len(graphs)} graphs")
    return FeatureScaler(mins=mins, maxs=maxs)


def apply_scaler(graph: OrderGraph, scaler: FeatureScaler) -> OrderGraph:
    return replace(
        graph,
        node_features=scaler.transform(graph.node_features, slice(0, NUM_NODE_FEATURES)),
        edge_features=scaler.transform(graph.edge_weights, slice(NUM_NODE_FEATURES, None)),
    )


def sample_pairs(labeled: Mapping[str, LabeledScatter], config: Optional[SamplingConfig] = None) -> List[TrainingPair]:
    """
    For each point draw up to k partners of a different level from the same system,
    orient (higher level, lower level) and drop unordered duplicates.

    Systems are visited in sorted id order and points in sweep order, all from one seeded RNG.
    """
    config = config or SamplingConfig()
    rng = np.random.default_rng(config.seed)
    pairs: List[TrainingPair] = []

    for system_id in sorted(labeled):
        scatter = labeled[system_id]
        levels = np.asarray(scatter.level)
        orders = scatter.points.orders
        seen = set()
        for i in range(len(levels)):
            candidates = np.flatnonzero(levels != levels[i])
            if len(candidates) == 0:
                continue
            take = min(config.k, len(candidates))
            for j in rng.choice(candidates, size=take, replace=False):
                j = int(j)
                key = (min(i, j), max(i, j))
                if key in seen:
                    continue
                seen.add(key)
                hi, lo = (i, j) if levels[i] > levels[j] else (j, i)
                pairs.append(TrainingPair(
                    system_id=system_id,
                    strong=orders[hi],
                    weak=orders[lo],
                    level_strong=int(levels[hi]),
                    level_weak=int(levels[lo]),
                ))
        logger.info(f"System '{system_id}': {len(seen)} pairs from {len(levels)} points")

    if not pairs:
        raise NoComparablePairs("every system has a single correlation level; nothing to compare")
    return pairs
