"""Tests for network loading and validation."""

import numpy as np
import pytest

from conftest import NETWORK_DIR
from roadhawkes.core.network import UpstreamPath, build_network, list_available_networks, load_network
from roadhawkes.errors import ConfigError, NetworkError


def two_roads(**junction):
    document = {
        'roads': [
            {'id': 1, 'interval': [0, 1], 'capacity': 1.0},
            {'id': 2, 'interval': [0, 1], 'capacity': 1.0},
        ],
        'junctions': [dict({'id': 'J', 'in': [1], 'out': [2]}, **junction)],
    }
    return document


class TestDiamond:

    def test_topology(self, diamond):
        assert diamond.name == 'diamond'
        assert diamond.road_ids == ['1', '2', '3', '4', '5', '6', '7']
        assert {j.id: j.kind for j in diamond.junctions.values()} == {'B': '1-2', 'C': '1-2', 'D': '2-1', 'E': '2-1'}
        assert diamond.source_roads == ('1',)
        assert diamond.sink_roads == ('7',)
        assert diamond.source_profiles == {'1': 'main'}
        assert diamond.node_labels == {'A': '1', 'F': '7'}

    def test_parameters(self, diamond):
        assert diamond.junctions['B'].distribution == 0.6
        assert diamond.junctions['B'].distribution_row == (0.6, pytest.approx(0.4))
        assert diamond.junctions['E'].rightway == 0.4
        assert diamond.roads['3'].capacity_cells.tolist() == [0.4] * 10
        assert diamond.roads['4'].initial_densities().tolist() == [0.8] * 10
        assert diamond.total_length == 7.0
        assert diamond.max_road_capacity == 1.0

    def test_grid(self, diamond_fine):
        road = diamond_fine.roads['2']
        assert road.cell_count == 100
        assert road.dx == pytest.approx(0.01)
        assert road.cell_centers[0] == pytest.approx(0.005)
        assert road.cell_index(1.0) == 99
        assert road.cell_index(0.0) == 0

    def test_junction_lookup(self, diamond):
        assert diamond.start_junction('1') is None
        assert diamond.end_junction('1').id == 'B'
        assert diamond.start_junction('6').id == 'D'
        assert diamond.end_junction('7') is None

    def test_upstream_paths_of_merge_road(self, diamond):
        paths = diamond.upstream_map['6']
        assert paths == (
            UpstreamPath('3', 0.0, 0.5),
            UpstreamPath('4', 0.0, 0.5),
            UpstreamPath('1', 1.0, 0.5),
            UpstreamPath('2', 1.0, 0.5),
            UpstreamPath('1', 2.0, 0.5),
        )

    def test_source_road_has_no_upstream(self, diamond):
        assert diamond.upstream_map['1'] == ()

    def test_capacity_scale(self):
        network = load_network('diamond', 0.1, NETWORK_DIR, capacity_scale=10.0)
        assert network.roads['7'].capacity_cells[0] == pytest.approx(10.0)

    def test_overrides(self, diamond):
        changed = diamond.with_overrides(distribution={'B': 0.2}, rightway={'D': 0.9})
        assert changed.junctions['B'].distribution == 0.2
        assert changed.junctions['D'].rightway == 0.9
        assert diamond.junctions['B'].distribution == 0.6
        assert changed.end_junction('1').distribution == 0.2

    def test_override_on_wrong_junction_kind(self, diamond):
        with pytest.raises(NetworkError):
            diamond.with_overrides(distribution={'D': 0.5})
        with pytest.raises(NetworkError):
            diamond.with_overrides(rightway={'B': 1.5})

    def test_available_networks(self):
        assert {'diamond', 'single_road'} <= set(list_available_networks(NETWORK_DIR))


class TestValidation:

    def test_piecewise_capacity(self):
        document = {'roads': [{'id': 1, 'interval': [0, 1],
                               'capacity': [{'start': 0, 'value': 1.0}, {'start': 0.5, 'value': 0.5}]}]}
        road = build_network(document, 0.1).roads['1']
        np.testing.assert_allclose(road.capacity_cells, [1.0] * 5 + [0.5] * 5)
        assert road.capacity_at(0.75) == 0.5

    def test_cycle_is_rejected(self):
        document = two_roads()
        document['junctions'].append({'id': 'K', 'in': [2], 'out': [1]})
        with pytest.raises(NetworkError, match='cycle'):
            build_network(document, 0.1)

    def test_distribution_must_be_stochastic(self):
        document = {
            'roads': [{'id': r, 'interval': [0, 1]} for r in (1, 2, 3)],
            'junctions': [{'id': 'J', 'in': [1], 'out': [2, 3], 'distribution': [0.6, 0.5]}],
        }
        with pytest.raises(NetworkError, match='stochastic'):
            build_network(document, 0.1)

    def test_unsupported_junction_arity(self):
        document = {
            'roads': [{'id': r, 'interval': [0, 1]} for r in (1, 2, 3, 4)],
            'junctions': [{'id': 'J', 'in': [1, 2], 'out': [3, 4]}],
        }
        with pytest.raises(NetworkError, match='not supported'):
            build_network(document, 0.1)

    def test_length_must_fit_grid(self):
        with pytest.raises(NetworkError, match='multiple of dx'):
            build_network({'roads': [{'id': 1, 'interval': [0, 1]}]}, 0.3)

    def test_unknown_road_in_junction(self):
        with pytest.raises(NetworkError, match='unknown road'):
            build_network(two_roads(out=[9]), 0.1)

    def test_unknown_schema_version(self):
        with pytest.raises(ConfigError):
            build_network(dict(two_roads(), schema_version=2), 0.1)

    def test_density_out_of_range(self):
        with pytest.raises(NetworkError):
            build_network({'roads': [{'id': 1, 'length': 1, 'initial_density': 1.2}]}, 0.1)

    def test_nonpositive_capacity(self):
        with pytest.raises(NetworkError):
            build_network({'roads': [{'id': 1, 'length': 1, 'capacity': 0.0}]}, 0.1)

    def test_source_must_be_free_road(self):
        document = dict(two_roads(), sources=[{'road': 2}])
        with pytest.raises(NetworkError):
            build_network(document, 0.1)

    def test_missing_network(self):
        with pytest.raises(ConfigError, match='not found'):
            load_network('nowhere', 0.1, NETWORK_DIR)
