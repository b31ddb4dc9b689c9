"""Shared fixtures for the RoadHawkes test suite."""

import copy
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest

from roadhawkes.core.network import build_network, load_network

REPO_ROOT = Path(__file__).resolve().parent.parent
NETWORK_DIR = REPO_ROOT / 'networks'


def deep_update(base: Dict[str, Any], changes: Dict[str, Any]) -> Dict[str, Any]:
    """Nested dict update returning a new dict."""
    merged = copy.deepcopy(base)
    for key, value in changes.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_update(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def experiment_document(**sections: Any) -> Dict[str, Any]:
    """Short diamond experiment; keyword arguments override whole blocks key by key."""
    document = {
        'schema_version': 1,
        'network': 'diamond',
        'networks': {'network_dir': str(NETWORK_DIR)},
        'solver': {
            'dx': 0.01,
            'dt': 0.01,
            'horizon': 5.0,
            'inflow_profiles': {'main': {'type': 'constant', 'rate': 0.1, 'cutoff': 4.0}},
        },
        'monte_carlo': {'runs': 1, 'seed': 1234, 'n_jobs': 1, 'toes_times': [3.0, 5.0]},
        'logging': {'level': 'WARNING'},
    }
    return deep_update(document, sections)


@pytest.fixture
def diamond():
    """Diamond network on a coarse grid, ten cells per road."""
    return load_network('diamond', 0.1, NETWORK_DIR)


@pytest.fixture
def diamond_fine():
    return load_network('diamond', 0.01, NETWORK_DIR)


@pytest.fixture
def single_road():
    return load_network('single_road', 0.01, NETWORK_DIR)


@pytest.fixture
def line_network():
    """Two unit roads joined by a 1-1 junction."""
    document = {
        'name': 'line',
        'roads': [
            {'id': 'a', 'interval': [0, 1], 'capacity': 1.0, 'initial_density': 0.3},
            {'id': 'b', 'interval': [0, 1], 'capacity': 1.0, 'initial_density': 0.3},
        ],
        'junctions': [{'id': 'J', 'in': ['a'], 'out': ['b'], 'gamma_v': 0.1}],
        'sources': [{'road': 'a', 'profile': 'main'}],
        'sinks': [{'road': 'b'}],
    }
    return build_network(document, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)
