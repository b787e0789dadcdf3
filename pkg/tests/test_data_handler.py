"""
Tests for data handling module
"""
import json
import os
import tempfile

import numpy as np
import pandas as pd
import pytest

from chipletrank.core import PlacementOrder
from chipletrank.data_handler import DataLoader, DataSaver
from chipletrank.dataset import TrainingPair
from chipletrank.errors import MalformedFile
from chipletrank.pareto import assign_levels
from chipletrank.placer import sweep

from conftest import DATA_DIR


@pytest.fixture
def loader():
    return DataLoader()


@pytest.fixture
def saver():
    return DataSaver()


@pytest.fixture
def sample_sweep_csv():
    """Create temporary sweep CSV for testing"""
    with tempfile.NamedTemporaryFile(mode='w', delete=False, suffix='.csv') as f:
        f.write("order,temperature_c,wirelength_mm\n")
        f.write("0-1-2,81.5,120.25\n")
        f.write("0-2-1,83,110\n")
        f.write("2-1-0,80.125,140.5\n")
        filepath = f.name

    yield filepath

    # Cleanup
    if os.path.exists(filepath):
        os.remove(filepath)


@pytest.fixture
def labeled(triangle_system):
    return assign_levels(sweep(triangle_system, 'all'))


class TestDataLoader:

    def test_load_sweep(self, loader, sample_sweep_csv):
        """Test loading sweep CSV"""
        scatter = loader.load_sweep(sample_sweep_csv, system_name='tri')

        assert len(scatter) == 3
        assert scatter.system_name == 'tri'
        assert scatter.orders[2] == PlacementOrder((2, 1, 0))
        assert scatter.temperatures.tolist() == [81.5, 83.0, 80.125]

    def test_system_name_defaults_to_stem(self, loader, sample_sweep_csv):
        scatter = loader.load_sweep(sample_sweep_csv)

        assert scatter.system_name == os.path.splitext(os.path.basename(sample_sweep_csv))[0]

    def test_missing_column(self, loader, temp_dir):
        """Test error when a required column is absent"""
        path = temp_dir / 'bad.csv'
        path.write_text("order,temperature_c\n0-1,80\n")

        with pytest.raises(MalformedFile, match='wirelength_mm'):
            loader.load_sweep(path)

    def test_file_not_found(self, loader):
        """Test error handling for missing file"""
        with pytest.raises(FileNotFoundError):
            loader.load_sweep('nonexistent.csv')

    def test_load_systems_dir(self, loader):
        systems = loader.load_systems(DATA_DIR / 'systems')

        assert sorted(systems) == [f'suite_{c}' for c in 'abcdefg']

    def test_load_suite(self, loader):
        suite = loader.load_suite(DATA_DIR / 'suite.json')

        assert len(suite['train']) == 4
        assert len(suite['test']) == 3
        assert not set(suite['train']) & set(suite['test'])

    def test_load_suite_requires_lists(self, loader, temp_dir):
        path = temp_dir / 'suite.json'
        path.write_text(json.dumps({'train': ['a']}))

        with pytest.raises(MalformedFile, match='test'):
            loader.load_suite(path)

    def test_load_pairs_missing_field(self, loader, temp_dir):
        path = temp_dir / 'pairs.jsonl'
        path.write_text('{"system_id": "s", "order_strong": "0-1"}\n')

        with pytest.raises(MalformedFile):
            loader.load_pairs(path)


class TestDataSaver:

    def test_sweep_round_trip(self, loader, saver, labeled, temp_dir):
        """Test saved sweep CSV has the documented header and reloads"""
        path = temp_dir / 'triangle.csv'
        saver.save_sweep(labeled.points, path)

        assert path.read_text().splitlines()[0] == 'order,temperature_c,wirelength_mm'
        again = loader.load_sweep(path)
        assert again.orders == labeled.points.orders
        np.testing.assert_allclose(again.temperatures, labeled.points.temperatures, rtol=1e-5)

    def test_six_significant_digits(self, saver, temp_dir):
        from chipletrank.placer import ScatterPoint, ScatterSet
        scatter = ScatterSet('s', (ScatterPoint(PlacementOrder((0,)), 81.23456789, 12345.6789),))
        path = temp_dir / 's.csv'
        saver.save_sweep(scatter, path)

        assert path.read_text().splitlines()[1] == '0,81.2346,12345.7'

    def test_labeled_round_trip(self, loader, saver, labeled, temp_dir):
        path = temp_dir / 'labeled.csv'
        saver.save_labeled(labeled, path)
        again = loader.load_labeled(path)

        assert again.level.tolist() == labeled.level.tolist()
        assert list(pd.read_csv(path).columns) == ['order', 'temperature_c', 'wirelength_mm', 'slack', 'level']

    def test_pairs_round_trip(self, loader, saver, temp_dir):
        pairs = [
            TrainingPair('sys', PlacementOrder((1, 0, 2)), PlacementOrder((2, 0, 1)), 9, 4),
            TrainingPair('sys', PlacementOrder((0, 1, 2)), PlacementOrder((2, 1, 0)), 10, 0),
        ]
        path = temp_dir / 'pairs.jsonl'
        saver.save_pairs(pairs, path)

        assert len(path.read_text().splitlines()) == 2
        assert loader.load_pairs(path) == pairs

    def test_system_round_trip(self, loader, saver, asym_system, temp_dir):
        path = temp_dir / 'nested' / 'asym4.json'
        saver.save_system(asym_system, path)

        assert loader.load_system(path) == asym_system

    def test_save_summary_stats(self, saver, labeled, temp_dir):
        """Test saving summary statistics"""
        path = temp_dir / 'summary.txt'
        saver.save_summary_stats(labeled, path)

        content = path.read_text()
        assert 'Placement Order Sweep Summary: triangle' in content
        assert 'L=10' in content
        assert 'Total Orders Evaluated: 6' in content

    def test_save_json(self, saver, temp_dir):
        path = temp_dir / 'out.json'
        saver.save_json({'b': 1, 'a': [1, 2]}, path)

        assert json.loads(path.read_text()) == {'a': [1, 2], 'b': 1}
