"""
Shared fixtures for the chipletrank test suite
"""
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from chipletrank.core import Chiplet, ChipletSystem, Interposer, PlacementOrder, canonical_nets  # noqa: E402
from chipletrank.dataset import build_graph, fit_scaler  # noqa: E402
from chipletrank.pareto import LabeledScatter, corner_sets  # noqa: E402
from chipletrank.placer import ScatterPoint, ScatterSet  # noqa: E402

DATA_DIR = Path(__file__).parent.parent / 'data'


def make_system(name, sizes, powers, nets, side=20.0, ambient=45.0):
    """Square-interposer system from (width, length) sizes, powers and (a, b, wires) nets"""
    chiplets = tuple(
        Chiplet(name=f'c{i}', width=float(w), length=float(h), power=float(p))
        for i, ((w, h), p) in enumerate(zip(sizes, powers))
    )
    return ChipletSystem(
        name=name,
        interposer=Interposer(width=side, height=side, ambient=ambient),
        chiplets=chiplets,
        nets=canonical_nets(nets),
    )


def labeled_from_levels(name, levels, seed=0):
    """LabeledScatter with the given levels on random (T, WL) points; orders are 0..n-1 encoded as 1-tuples"""
    rng = np.random.default_rng(seed)
    n = len(levels)
    points = tuple(
        ScatterPoint(PlacementOrder((i,)), float(t), float(wl))
        for i, (t, wl) in enumerate(zip(rng.uniform(80, 90, n), rng.uniform(100, 200, n)))
    )
    scatter = ScatterSet(system_name=name, points=points)
    return LabeledScatter(points=scatter, slack=np.zeros(n), level=np.asarray(levels, dtype=np.int64),
                          corners=corner_sets(scatter))


@pytest.fixture
def temp_dir():
    """Temporary output directory removed after the test"""
    path = Path(tempfile.mkdtemp())
    yield path
    shutil.rmtree(path, ignore_errors=True)


@pytest.fixture
def single_system():
    return make_system('single', [(4, 4)], [1.0], [])


@pytest.fixture
def triangle_system():
    """3 chiplets with nets (0,1,w=2), (0,2,w=5), (1,2,w=1)"""
    return make_system('triangle', [(4, 3), (3, 3), (2, 5)], [0.5, 0.3, 0.8], [(0, 1, 2), (0, 2, 5), (1, 2, 1)])


@pytest.fixture
def asym_system():
    """4 chiplets of different sizes and powers on a chain-plus-chord net list"""
    return make_system(
        'asym4',
        [(6, 4), (3, 3), (5, 2), (2, 2)],
        [0.9, 0.2, 0.6, 0.1],
        [(0, 1, 120), (1, 2, 40), (2, 3, 200), (0, 3, 15)],
        side=24.0,
    )


@pytest.fixture
def suite_system():
    """Bundled 6-chiplet training system"""
    from chipletrank.core import parse_system
    return parse_system(DATA_DIR / 'systems' / 'suite_a.json')


@pytest.fixture
def scaled_graphs(asym_system):
    """Raw graphs for every order of asym4 plus a scaler fitted on them"""
    from chipletrank.placer import enumerate_orders
    graphs = [build_graph(asym_system, o) for o in enumerate_orders(asym_system, 'all')]
    return graphs, fit_scaler(graphs)
