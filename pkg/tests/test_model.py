"""
Tests for the GraphSage + RankNet model: layers, pooling, loss, gradients, training and checkpoints
"""
import json
from dataclasses import replace

import numpy as np
import pytest

from chipletrank.core import PlacementOrder
from chipletrank.dataset import TrainingPair, apply_scaler, build_graph, fit_scaler
from chipletrank.errors import DataError, EmptyDataset, EmptyGraph, MalformedCheckpoint, ShapeMismatch, VersionMismatch
from chipletrank.model import (GraphBatch, RankModel, SageLayer, TrainConfig, aggregation_matrix, backward, forward,
                               init_params, load_model, model_to_dict, pair_gradients, pair_loss, pair_loss_grad,
                               pairwise_accuracy, param_shapes, pool, sage_forward, save_model, train, zero_params)
from chipletrank.synthetic import generate_system


def loss_and_masks(params, batch, m, pooling):
    """Mean pair loss plus every activation pattern it depends on; a pattern change means a kink in between"""
    scores, cache = forward(params, batch, pooling)
    loss = float(pair_loss(scores[:m], scores[m:]).mean())
    parts = [z > 0 for _, z in cache['sage']] + [cache['a0'] > 0, cache['a1'] > 0]
    if pooling == 'max':
        for lo, hi in zip(batch.offsets[:-1], batch.offsets[1:]):
            parts.append(cache['node_out'][lo:hi].argmax(axis=0))
    return loss, [p.ravel() for p in parts]


def finite_difference_check(params, strong, weak, pooling, entries=None, seed=0, h=1e-5):
    """Largest relative error between analytic and central-difference gradients"""
    _, grads = pair_gradients(params, strong, weak, pooling)
    batch = GraphBatch.from_graphs(list(strong) + list(weak))
    m = len(strong)
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    for name, value in params.items():
        flat = value.reshape(-1)
        indices = range(flat.size) if entries is None else rng.choice(flat.size, min(entries, flat.size), replace=False)
        for idx in indices:
            original = flat[idx]
            flat[idx] = original + h
            loss_plus, masks_plus = loss_and_masks(params, batch, m, pooling)
            flat[idx] = original - h
            loss_minus, masks_minus = loss_and_masks(params, batch, m, pooling)
            flat[idx] = original
            if any(not np.array_equal(a, b) for a, b in zip(masks_plus, masks_minus)):
                continue
            numeric = (loss_plus - loss_minus) / (2 * h)
            analytic = grads[name].reshape(-1)[idx]
            error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
            worst = max(worst, error)
            checked += 1
    assert checked > 0
    return worst


@pytest.fixture
def graph_pool():
    """Normalized graphs from two random 5-chiplet systems, indexed for pairing"""
    graphs = []
    for seed in (1, 2):
        system = generate_system(f'g{seed}', n_chiplets=5, seed=seed)
        rng = np.random.default_rng(seed)
        graphs += [build_graph(system, rng.permutation(5)) for _ in range(6)]
    scaler = fit_scaler(graphs)
    return [apply_scaler(g, scaler) for g in graphs], scaler


class TestSageLayer:

    def test_isolated_node_identity(self):
        """Test W = [I | I], b = 0 on an isolated node gives ReLU(h)"""
        layer = SageLayer(weight=np.hstack([np.eye(3), np.eye(3)]), bias=np.zeros(3))
        out = sage_forward(layer, np.array([[1.0, -2.0, 3.0]]), np.empty((0, 2)), np.empty(0))

        assert out.tolist() == [[1.0, 0.0, 3.0]]

    def test_symmetric_pair(self):
        rng = np.random.default_rng(0)
        layer = SageLayer(weight=rng.normal(size=(4, 6)), bias=rng.normal(size=4))
        h = np.array([[0.3, 0.1, 0.9], [0.3, 0.1, 0.9]])
        out = sage_forward(layer, h, np.array([[0, 1]]), np.array([5.0]))

        assert np.array_equal(out[0], out[1])

    def test_weighted_path(self):
        """Test a 3-node path with wire weights 1 and 3 against hand arithmetic"""
        layer = SageLayer(weight=np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]), bias=np.array([0.0, 0.5]))
        h = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
        out = sage_forward(layer, h, np.array([[0, 1], [1, 2]]), np.array([1.0, 3.0]))

        np.testing.assert_allclose(out, [[1.0, 0.0], [1.75, 0.0], [2.0, 1.5]])

    def test_shape_mismatch(self):
        layer = SageLayer(weight=np.zeros((2, 4)), bias=np.zeros(2))

        with pytest.raises(ShapeMismatch):
            sage_forward(layer, np.zeros((2, 3)), np.empty((0, 2)), np.empty(0))


class TestPool:

    def test_single_node(self):
        h = np.array([[0.5, 2.0, 0.0]])

        for mode in ('mean', 'sum', 'max'):
            assert pool(h, mode).tolist() == [0.5, 2.0, 0.0]

    def test_two_nodes(self):
        h = np.array([[0.0] * 4, [2.0] * 4])

        assert pool(h, 'mean').tolist() == [1.0] * 4
        assert pool(h, 'sum').tolist() == [2.0] * 4
        assert pool(h, 'max').tolist() == [2.0] * 4

    def test_empty_graph(self):
        with pytest.raises(EmptyGraph):
            pool(np.empty((0, 64)))

    def test_unknown_mode(self):
        with pytest.raises(DataError):
            pool(np.ones((2, 2)), 'median')


class TestScoring:

    def test_zero_model_scores_zero(self, graph_pool):
        graphs, scaler = graph_pool
        model = RankModel(params=zero_params(), scaler=scaler)

        assert model.score_normalized(graphs).tolist() == [0.0] * len(graphs)

    @pytest.mark.parametrize('pooling', ['mean', 'sum', 'max'])
    def test_permutation_invariance(self, graph_pool, pooling):
        graphs, scaler = graph_pool
        model = RankModel(params=init_params(3), scaler=scaler, pooling=pooling)
        graph = graphs[0]

        permuted = graph.permuted([4, 2, 0, 3, 1])

        assert model.score_normalized([permuted])[0] == pytest.approx(model.score_normalized([graph])[0], abs=1e-12)

    def test_deterministic(self, graph_pool):
        graphs, scaler = graph_pool
        a = RankModel(params=init_params(42), scaler=scaler).score_normalized(graphs)
        b = RankModel(params=init_params(42), scaler=scaler).score_normalized(graphs)

        assert np.array_equal(a, b)

    def test_batch_matches_single(self, graph_pool):
        """Test scoring in one disjoint-union batch equals scoring graphs one by one"""
        graphs, scaler = graph_pool
        model = RankModel(params=init_params(5), scaler=scaler)
        batched = model.score_normalized(graphs)
        single = [model.score_normalized([g])[0] for g in graphs]

        np.testing.assert_allclose(batched, single, rtol=0, atol=1e-12)

    def test_batch_aggregates_scaled_edge_weights(self, graph_pool):
        """Test normalized graphs aggregate over scaled wire counts; unscaled graphs fall back to raw counts"""
        graphs, _ = graph_pool
        graph = graphs[0]
        scaled = GraphBatch.from_graphs([graph]).agg.toarray()
        raw = GraphBatch.from_graphs([replace(graph, edge_features=None)]).agg.toarray()

        assert graph.edge_features is not None
        np.testing.assert_allclose(scaled, aggregation_matrix(graph.num_nodes, graph.edges, graph.edge_features).toarray())
        np.testing.assert_allclose(raw, aggregation_matrix(graph.num_nodes, graph.edges, graph.edge_weights).toarray())

    def test_parameter_count(self):
        assert sum(int(np.prod(s)) for s in param_shapes().values()) == 11530


class TestPairLoss:

    def test_equal_scores(self):
        assert pair_loss(0.3, 0.3) == pytest.approx(0.693147, abs=1e-6)

    def test_gap_of_two(self):
        assert pair_loss(2.0, 0.0) == pytest.approx(0.126928, abs=1e-6)

    def test_large_negative_gap(self):
        assert pair_loss(0.0, 50.0) == pytest.approx(50.0, abs=1e-9)
        assert np.isfinite(pair_loss(0.0, 1e4))

    def test_antisymmetry_bound(self):
        for a, b in [(0.0, 0.0), (1.0, -2.0), (5.0, 4.9)]:
            assert pair_loss(a, b) + pair_loss(b, a) >= 2 * np.log(2) - 1e-12

    def test_shift_invariance(self):
        assert pair_loss(3.0, 1.0) == pytest.approx(pair_loss(103.0, 101.0), abs=1e-12)

    def test_gradient_at_zero_gap(self):
        assert pair_loss_grad(1.5, 1.5) == -0.5


class TestGradients:

    @pytest.mark.parametrize('pooling', ['mean', 'sum', 'max'])
    def test_finite_differences(self, graph_pool, pooling):
        """Test analytic gradients against central differences on sampled entries"""
        graphs, _ = graph_pool
        params = init_params(7)
        strong, weak = [graphs[0], graphs[6]], [graphs[1], graphs[7]]

        assert finite_difference_check(params, strong, weak, pooling, entries=6) <= 1e-4

    @pytest.mark.slow
    def test_finite_differences_all_parameters(self, graph_pool):
        """Test every parameter on 5 seeded models x 5 random pairs"""
        graphs, _ = graph_pool
        rng = np.random.default_rng(0)
        for seed in range(5):
            params = init_params(seed)
            for _ in range(5):
                i, j = rng.choice(len(graphs), size=2, replace=False)
                assert finite_difference_check(params, [graphs[i]], [graphs[j]], 'mean') <= 1e-4

    def test_zero_model_gradients(self, graph_pool):
        """Test the zero-weight model has no active path, so every gradient is zero"""
        graphs, _ = graph_pool
        loss, grads = pair_gradients(zero_params(), [graphs[0]], [graphs[1]], 'mean')

        assert loss == pytest.approx(np.log(2))
        assert not np.any(grads['sage0.weight'])
        assert all(not np.any(g) for g in grads.values())

    def test_backward_shapes(self, graph_pool):
        graphs, _ = graph_pool
        params = init_params(1)
        batch = GraphBatch.from_graphs(graphs[:3])
        scores, cache = forward(params, batch, 'mean')
        grads = backward(params, batch, cache, np.ones_like(scores))

        assert {k: v.shape for k, v in grads.items()} == param_shapes()

    def test_mismatched_pairs(self, graph_pool):
        graphs, _ = graph_pool

        with pytest.raises(EmptyDataset):
            pair_gradients(init_params(0), graphs[:2], graphs[:1], 'mean')


def pair_corpus(system, n_pairs=12, seed=0):
    """Random pairs over one system with the raw graphs they reference"""
    rng = np.random.default_rng(seed)
    pairs, graphs = [], {}
    for _ in range(n_pairs):
        a, b = (PlacementOrder(tuple(int(i) for i in rng.permutation(system.n))) for _ in range(2))
        if a == b:
            continue
        pairs.append(TrainingPair(system.name, a, b, 8, 2))
        for order in (a, b):
            graphs[(system.name, str(order))] = build_graph(system, order)
    return pairs, graphs


class TestTrain:

    def test_same_seed_same_model(self):
        system = generate_system('t', n_chiplets=5, seed=8)
        pairs, graphs = pair_corpus(system)
        scaler = fit_scaler(graphs.values())
        config = TrainConfig(iterations=15, batch=4, lr=1e-3, seed=3)

        a = train(pairs, graphs, scaler, config)
        b = train(pairs, graphs, scaler, config)

        assert a.meta['loss_history'] == b.meta['loss_history']
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)

    def test_separable_pair(self, triangle_system):
        """Test a single pair whose graphs differ only in order features is fit"""
        strong, weak = PlacementOrder((0, 1, 2)), PlacementOrder((2, 1, 0))
        graphs = {('triangle', str(o)): build_graph(triangle_system, o) for o in (strong, weak)}
        pairs = [TrainingPair('triangle', strong, weak, 10, 0)]

        model = train(pairs, graphs, fit_scaler(graphs.values()), TrainConfig(iterations=500, lr=1e-3, batch=8))

        assert model.meta['loss_history'][-1] < 0.1
        assert pairwise_accuracy(model, pairs, graphs) == 1.0

    def test_no_pairs(self, graph_pool):
        _, scaler = graph_pool

        with pytest.raises(EmptyDataset):
            train([], {}, scaler)

    def test_bad_config(self):
        with pytest.raises(DataError):
            TrainConfig(pooling='median')
        with pytest.raises(DataError):
            TrainConfig(lr=0)


class TestCheckpoint:

    def test_round_trip_bit_identical(self, graph_pool, temp_dir):
        graphs, scaler = graph_pool
        rng = np.random.default_rng(1)
        params = {k: v + rng.normal(scale=1e-3, size=v.shape) for k, v in init_params(9).items()}
        model = RankModel(params=params, scaler=scaler, pooling='sum', meta={'seed': 9})
        path = temp_dir / 'model.json'

        save_model(model, path)
        loaded = load_model(path)

        assert loaded.pooling == 'sum'
        assert loaded.meta == {'seed': 9}
        assert np.array_equal(model.score_normalized(graphs), loaded.score_normalized(graphs))

    def test_many_random_graphs(self, temp_dir):
        systems = [generate_system(f'r{i}', n_chiplets=6, seed=i) for i in range(4)]
        rng = np.random.default_rng(2)
        raw = [build_graph(systems[i % 4], rng.permutation(6)) for i in range(100)]
        model = RankModel(params=init_params(4), scaler=fit_scaler(raw))

        save_model(model, temp_dir / 'm.json')

        assert np.array_equal(model.score_graphs(raw), load_model(temp_dir / 'm.json').score_graphs(raw))

    def test_max_pooling_fidelity(self, graph_pool, temp_dir):
        _, scaler = graph_pool
        save_model(RankModel(params=init_params(0), scaler=scaler, pooling='max'), temp_dir / 'max.json')

        assert load_model(temp_dir / 'max.json').pooling == 'max'

    def test_truncated(self, graph_pool, temp_dir):
        _, scaler = graph_pool
        path = temp_dir / 'model.json'
        save_model(RankModel(params=init_params(0), scaler=scaler), path)
        text = path.read_text()
        path.write_text(text[:len(text) // 2])

        with pytest.raises(MalformedCheckpoint):
            load_model(path)

    def test_version_mismatch(self, graph_pool, temp_dir):
        _, scaler = graph_pool
        data = model_to_dict(RankModel(params=init_params(0), scaler=scaler))
        data['version'] = 2
        path = temp_dir / 'v2.json'
        path.write_text(json.dumps(data))

        with pytest.raises(VersionMismatch):
            load_model(path)

    def test_wrong_shape(self, graph_pool, temp_dir):
        _, scaler = graph_pool
        data = model_to_dict(RankModel(params=init_params(0), scaler=scaler))
        data['params']['fc0.bias'] = [0.0]
        path = temp_dir / 'bad.json'
        path.write_text(json.dumps(data))

        with pytest.raises(MalformedCheckpoint):
            load_model(path)

    def test_missing_file(self, temp_dir):
        with pytest.raises(FileNotFoundError):
            load_model(temp_dir / 'none.json')
