"""
Pairwise learning-to-rank network over order graphs

GraphSage(7->7->32->64, wire-weighted mean aggregation) -> pooling (mean|sum|max)
-> FC 64->64->32->16 -> linear 16->1 score, trained with the RankNet loss
softplus(-(s_strong - s_weak)) and Adam. Forward and reverse passes are written out
by hand in float64 so every gradient can be checked against finite differences.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.special import expit

from .dataset import NUM_NODE_FEATURES, FeatureScaler, OrderGraph, TrainingPair, apply_scaler
from .errors import (DataError, EmptyDataset, EmptyGraph, MalformedCheckpoint, ShapeMismatch,
                     VersionMismatch)
from .optimizer import AdamState, Params, adam_step

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
SAGE_DIMS: Tuple[Tuple[int, int], ...] = ((NUM_NODE_FEATURES, 7), (7, 32), (32, 64))
FC_DIMS: Tuple[Tuple[int, int], ...] = ((64, 64), (64, 32), (32, 16))
HEAD_DIMS = (16, 1)
POOLING_MODES = ('mean', 'sum', 'max')


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch: int = 64
    iterations: int = 3000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 42
    pooling: str = 'mean'

    def __post_init__(self):
        if not self.lr > 0:
            raise DataError(f"lr must be > 0, got {self.lr}")
        if self.batch < 1:
            raise DataError(f"batch must be >= 1, got {self.batch}")
        if self.iterations < 1:
            raise DataError(f"iterations must be >= 1, got {self.iterations}")
        if self.pooling not in POOLING_MODES:
            raise DataError(f"pooling must be one of {POOLING_MODES}, got '{self.pooling}'")


@dataclass(frozen=True)
class SageLayer:
    weight: np.ndarray
    bias: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1] // 2

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


def param_shapes() -> Dict[str, Tuple[int, ...]]:
    shapes = {}
    for i, (d_in, d_out) in enumerate(SAGE_DIMS):
        shapes[f'sage{i}.weight'] = (d_out, 2 * d_in)
        shapes[f'sage{i}.bias'] = (d_out,)
    for i, (d_in, d_out) in enumerate(FC_DIMS):
        shapes[f'fc{i}.weight'] = (d_out, d_in)
        shapes[f'fc{i}.bias'] = (d_out,)
    shapes['head.weight'] = (HEAD_DIMS[1], HEAD_DIMS[0])
    shapes['head.bias'] = (HEAD_DIMS[1],)
    return shapes


def init_params(seed: int) -> Params:
    """Xavier-uniform weights, zero biases"""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes().items():
        if name.endswith('.weight'):
            fan_out, fan_in = shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, size=shape)
        else:
            params[name] = np.zeros(shape)
    return params


def zero_params() -> Params:
    return {name: np.zeros(shape) for name, shape in param_shapes().items()}


def aggregation_matrix(num_nodes: int, edges: np.ndarray, weights: np.ndarray) -> sparse.csr_matrix:
    """Row v holds w_uv / sum_u' w_u'v over neighbors u; all-zero row for isolated nodes"""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    weights = np.asarray(weights, dtype=np.float64)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    vals = np.concatenate([weights, weights])
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(num_nodes, num_nodes))
    deg = np.asarray(A.sum(axis=1)).ravel()
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return (sparse.diags(inv) @ A).tocsr()


def sage_forward(layer: SageLayer, node_states: np.ndarray, edges: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """h'_v = ReLU(W [h_v ; weighted-mean of neighbor h_u] + b)"""
    node_states = np.asarray(node_states, dtype=np.float64)
    if node_states.ndim != 2 or node_states.shape[1] != layer.in_dim:
        raise ShapeMismatch(f"layer expects {layer.in_dim} input features, got shape {node_states.shape}")
    A = aggregation_matrix(len(node_states), edges, weights)
    cat = np.hstack([node_states, A @ node_states])
    return np.maximum(cat @ layer.weight.T + layer.bias, 0.0)


def pool(node_states: np.ndarray, mode: str = 'mean') -> np.ndarray:
    node_states = np.asarray(node_states, dtype=np.float64)
    if node_states.ndim != 2 or len(node_states) == 0:
        raise EmptyGraph("cannot pool a graph with no nodes")
    if mode == 'mean':
        return node_states.mean(axis=0)
    if mode == 'sum':
        return node_states.sum(axis=0)
    if mode == 'max':
        return node_states.max(axis=0)
    raise DataError(f"pooling must be one of {POOLING_MODES}, got '{mode}'")


def pair_loss(s_strong, s_weak):
    """RankNet cross-entropy with target 1: softplus(-(s_strong - s_weak))"""
    return np.logaddexp(0.0, -(np.asarray(s_strong, dtype=np.float64) - np.asarray(s_weak, dtype=np.float64)))


def pair_loss_grad(s_strong, s_weak):
    """d loss / d (s_strong - s_weak) = -sigmoid(-(s_strong - s_weak))"""
    return -expit(-(np.asarray(s_strong, dtype=np.float64) - np.asarray(s_weak, dtype=np.float64)))


@dataclass
class GraphBatch:
    """Disjoint union of normalized graphs; nodes of graph b occupy offsets[b]:offsets[b+1]"""
    x: np.ndarray
    agg: sparse.csr_matrix
    offsets: np.ndarray

    @property
    def size(self) -> int:
        return len(self.offsets) - 1

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    @classmethod
    def from_graphs(cls, graphs: Sequence[OrderGraph]) -> 'GraphBatch':
        if not graphs:
            raise EmptyDataset("no graphs to batch")
        sizes = [g.num_nodes for g in graphs]
        if min(sizes) == 0:
            raise EmptyGraph("cannot score a graph with no nodes")
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        x = np.vstack([g.node_features for g in graphs]).astype(np.float64)
        if x.shape[1] != NUM_NODE_FEATURES:
            raise ShapeMismatch(f"graphs must carry {NUM_NODE_FEATURES} node features, got {x.shape[1]}")
        edges = np.vstack([g.edges.reshape(-1, 2) + off for g, off in zip(graphs, offsets[:-1])])
        # scaled weights once a scaler has been applied, raw wire counts otherwise
        weights = np.concatenate([g.edge_weights if g.edge_features is None else g.edge_features for g in graphs])
        return cls(x=x, agg=aggregation_matrix(len(x), edges, weights), offsets=offsets)


def forward(params: Params, batch: GraphBatch, pooling: str) -> Tuple[np.ndarray, dict]:
    """Scores for every graph in the batch plus the cache needed by backward()"""
    h = batch.x
    sage_cache = []
    for i in range(len(SAGE_DIMS)):
        cat = np.hstack([h, batch.agg @ h])
        z = cat @ params[f'sage{i}.weight'].T + params[f'sage{i}.bias']
        sage_cache.append((cat, z))
        h = np.maximum(z, 0.0)

    starts = batch.offsets[:-1]
    if pooling == 'mean':
        g = np.add.reduceat(h, starts, axis=0) / batch.counts[:, None]
    elif pooling == 'sum':
        g = np.add.reduceat(h, starts, axis=0)
    elif pooling == 'max':
        g = np.maximum.reduceat(h, starts, axis=0)
    else:
        raise DataError(f"pooling must be one of {POOLING_MODES}, got '{pooling}'")

    a0 = g @ params['fc0.weight'].T + params['fc0.bias']
    h0 = np.maximum(a0, 0.0)
    a1 = h0 @ params['fc1.weight'].T + params['fc1.bias']
    h1 = np.maximum(a1, 0.0)
    h2 = h1 @ params['fc2.weight'].T + params['fc2.bias']
    scores = (h2 @ params['head.weight'].T + params['head.bias'])[:, 0]

    cache = {
        'sage': sage_cache, 'node_out': h, 'pooled': g,
        'a0': a0, 'h0': h0, 'a1': a1, 'h1': h1, 'h2': h2, 'pooling': pooling,
    }
    return scores, cache


def backward(params: Params, batch: GraphBatch, cache: dict, d_scores: np.ndarray) -> Params:
    """Gradients of sum_b d_scores[b] * score_b with respect to every parameter"""
    grads: Params = {}
    ds = np.asarray(d_scores, dtype=np.float64)[:, None]

    grads['head.weight'] = ds.T @ cache['h2']
    grads['head.bias'] = ds.sum(axis=0)
    dh2 = ds @ params['head.weight']

    grads['fc2.weight'] = dh2.T @ cache['h1']
    grads['fc2.bias'] = dh2.sum(axis=0)
    da1 = (dh2 @ params['fc2.weight']) * (cache['a1'] > 0)
    grads['fc1.weight'] = da1.T @ cache['h0']
    grads['fc1.bias'] = da1.sum(axis=0)
    da0 = (da1 @ params['fc1.weight']) * (cache['a0'] > 0)
    grads['fc0.weight'] = da0.T @ cache['pooled']
    grads['fc0.bias'] = da0.sum(axis=0)
    dg = da0 @ params['fc0.weight']

    counts = batch.counts
    segment = np.repeat(np.arange(batch.size), counts)
    if cache['pooling'] == 'mean':
        dh = dg[segment] / counts[segment, None]
    elif cache['pooling'] == 'sum':
        dh = dg[segment]
    else:
        node_out = cache['node_out']
        dh = np.zeros_like(node_out)
        cols = np.arange(node_out.shape[1])
        for b, (lo, hi) in enumerate(zip(batch.offsets[:-1], batch.offsets[1:])):
            winners = lo + node_out[lo:hi].argmax(axis=0)
            dh[winners, cols] = dg[b]

    agg_t = batch.agg.T.tocsr()
    for i in reversed(range(len(SAGE_DIMS))):
        cat, z = cache['sage'][i]
        dz = dh * (z > 0)
        grads[f'sage{i}.weight'] = dz.T @ cat
        grads[f'sage{i}.bias'] = dz.sum(axis=0)
        dcat = dz @ params[f'sage{i}.weight']
        d_in = SAGE_DIMS[i][0]
        dh = dcat[:, :d_in] + agg_t @ dcat[:, d_in:]
    return grads


def pair_gradients(params: Params, strong: Sequence[OrderGraph], weak: Sequence[OrderGraph],
                   pooling: str) -> Tuple[float, Params]:
    """
    Mean RankNet loss over the pairs and its exact gradient.

    Both twins share weights: strong and weak graphs run through one batched pass,
    so their gradient contributions are summed.
    """
    if len(strong) != len(weak) or not strong:
        raise EmptyDataset("need equally many strong and weak graphs, at least one of each")
    batch = GraphBatch.from_graphs(list(strong) + list(weak))
    scores, cache = forward(params, batch, pooling)
    m = len(strong)
    s_strong, s_weak = scores[:m], scores[m:]
    loss = float(pair_loss(s_strong, s_weak).mean())
    d_delta = pair_loss_grad(s_strong, s_weak) / m
    grads = backward(params, batch, cache, np.concatenate([d_delta, -d_delta]))
    return loss, grads


@dataclass
class RankModel:
    params: Params
    scaler: FeatureScaler
    pooling: str = 'mean'
    meta: dict = field(default_factory=dict)

    @property
    def layers(self) -> List[SageLayer]:
        return [SageLayer(self.params[f'sage{i}.weight'], self.params[f'sage{i}.bias']) for i in range(len(SAGE_DIMS))]

    def normalize(self, graph: OrderGraph) -> OrderGraph:
        return apply_scaler(graph, self.scaler)

    def score_normalized(self, graphs: Sequence[OrderGraph]) -> np.ndarray:
        scores, _ = forward(self.params, GraphBatch.from_graphs(graphs), self.pooling)
        return scores

    def score_graphs(self, graphs: Sequence[OrderGraph]) -> np.ndarray:
        """Scale raw graphs with the stored scaler, then score them in one batch"""
        return self.score_normalized([self.normalize(g) for g in graphs])

    def score_graph(self, graph: OrderGraph) -> float:
        return float(self.score_graphs([graph])[0])


def train(pairs: Sequence[TrainingPair], graphs: Mapping[Tuple[str, str], OrderGraph],
          scaler: FeatureScaler, config: Optional[TrainConfig] = None) -> RankModel:
    """
    Fit a RankModel on within-system pairs.

    Args:
        pairs: oriented (strong, weak) comparisons
        graphs: raw graphs keyed by (system_id, order string)
        scaler: feature scaler fitted on the training graphs
        config: optimizer and schedule settings

    Returns:
        Trained RankModel with loss history in meta
    """
    config = config or TrainConfig()
    if not pairs:
        raise EmptyDataset("no training pairs")

    normalized = {key: apply_scaler(g, scaler) for key, g in graphs.items()}
    try:
        strong_all = [normalized[(p.system_id, str(p.strong))] for p in pairs]
        weak_all = [normalized[(p.system_id, str(p.weak))] for p in pairs]
    except KeyError as exc:
        raise EmptyDataset(f"pair references a graph that was not built: {exc}") from exc

    params = init_params(config.seed)
    rng = np.random.default_rng(config.seed + 1)
    state = AdamState()
    history: List[float] = []
    logger.info(f"Training on {len(pairs)} pairs for {config.iterations} iterations "
                f"(batch {config.batch}, lr {config.lr:g}, pooling {config.pooling})")

    for it in range(1, config.iterations + 1):
        idx = rng.choice(len(pairs), size=config.batch, replace=len(pairs) < config.batch)
        loss, grads = pair_gradients(params, [strong_all[i] for i in idx], [weak_all[i] for i in idx],
                                     config.pooling)
        params = adam_step(params, grads, state, config)
        history.append(loss)
        if it % 100 == 0:
            logger.info(f"Iteration {it}/{config.iterations}: loss {np.mean(history[-100:]):.6f}")

    meta = {'seed': config.seed, 'iterations': config.iterations, 'lr': config.lr,
            'batch': config.batch, 'pairs': len(pairs), 'loss_history': history}
    return RankModel(params=params, scaler=scaler, pooling=config.pooling, meta=meta)


def pairwise_accuracy(model: RankModel, pairs: Sequence[TrainingPair],
                      graphs: Mapping[Tuple[str, str], OrderGraph]) -> float:
    """Fraction of pairs whose strong graph out-scores its weak graph"""
    if not pairs:
        raise EmptyDataset("no pairs to evaluate")
    s = model.score_graphs([graphs[(p.system_id, str(p.strong))] for p in pairs])
    w = model.score_graphs([graphs[(p.system_id, str(p.weak))] for p in pairs])
    return float(np.mean(s > w))


def model_to_dict(model: RankModel) -> dict:
    return {
        'version': CHECKPOINT_VERSION,
        'pooling': model.pooling,
        'dims': {'sage': [list(d) for d in SAGE_DIMS], 'fc': [list(d) for d in FC_DIMS], 'head': list(HEAD_DIMS)},
        'scaler': model.scaler.to_dict(),
        'params': {name: value.tolist() for name, value in model.params.items()},
        'meta': model.meta,
    }


def model_from_dict(data: dict) -> RankModel:
    if not isinstance(data, dict) or 'version' not in data:
        raise MalformedCheckpoint("checkpoint has no version field")
    if data['version'] != CHECKPOINT_VERSION:
        raise VersionMismatch(f"checkpoint version {data['version']}, expected {CHECKPOINT_VERSION}")
    try:
        pooling = data['pooling']
        dims = data['dims']
        if ([tuple(d) for d in dims['sage']] != list(SAGE_DIMS) or [tuple(d) for d in dims['fc']] != list(FC_DIMS)
                or tuple(dims['head']) != HEAD_DIMS):
            raise MalformedCheckpoint(f"checkpoint layer dims {dims} do not match this network")
        scaler = FeatureScaler.from_dict(data['scaler'])
        params = {}
        for name, shape in param_shapes().items():
            value = np.asarray(data['params'][name], dtype=np.float64)
            if value.shape != shape:
                raise MalformedCheckpoint(f"parameter {name} has shape {value.shape}, expected {shape}")
            params[name] = value
        meta = data.get('meta', {})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedCheckpoint):
            raise
        raise MalformedCheckpoint(f"checkpoint is missing or has a malformed field: {exc}") from exc
    if pooling not in POOLING_MODES:
        raise MalformedCheckpoint(f"unknown pooling mode '{pooling}'")
    return RankModel(params=params, scaler=scaler, pooling=pooling, meta=meta)


def save_model(model: RankModel, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # json writes floats with repr(), the shortest text that round-trips a float64
    path.write_text(json.dumps(model_to_dict(model), indent=1))
    logger.info(f"Saved model checkpoint to {path}")


def load_model(path: Union[str, Path]) -> RankModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedCheckpoint(f"{path}: {exc}") from exc
    return model_from_dict(data)
