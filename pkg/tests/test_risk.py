"""Tests for the risk measures."""

import numpy as np
import pytest

from roadhawkes.core.capacity import Accident, AccidentOrigin
from roadhawkes.core.risk import (
    congestion_measure,
    count_accidents,
    empty_system_probability,
    time_of_empty_system,
    total_travel_time,
)
from roadhawkes.errors import HistoryMismatchError


def accident(index, road=None, junction=None):
    origin = AccidentOrigin.JUNCTION if junction else AccidentOrigin.BACKGROUND
    return Accident(index=index, size=0.1, reduction=0.5, start=0.0, duration=1.0, origin=origin,
                    road=road, position=0.5 if road else None, junction=junction)


class TestTotalTravelTime:

    def test_small_example(self):
        ttt = total_travel_time(np.array([[0.5, 0.5], [0.5, 0.5]]), [1.0, 0.0], dt=0.1, dx=0.5)
        assert ttt == pytest.approx(0.2)

    def test_per_step_sums(self):
        assert total_travel_time(np.array([1.0, 1.0]), [0.0, 0.0], dt=0.5, dx=0.5) == pytest.approx(0.5)

    def test_empty_history(self):
        assert total_travel_time(np.zeros((0, 3)), [], dt=0.1, dx=0.1) == 0.0

    def test_mismatched_histories(self):
        with pytest.raises(HistoryMismatchError):
            total_travel_time(np.ones((3, 2)), [0.0, 0.0], dt=0.1, dx=0.1)


class TestCongestionMeasure:

    def test_congested_cell(self):
        assert congestion_measure(np.array([0.8]), np.ones(1), np.ones(1), 1.0) == pytest.approx(0.48)

    def test_free_flow_is_clipped_to_zero(self):
        assert congestion_measure(np.array([0.2]), np.ones(1), np.ones(1), 1.0) == 0.0

    def test_accident_raises_measure(self):
        rho = np.full(10, 0.4)
        free = congestion_measure(rho, np.ones(10), np.full(10, 0.3), 0.1)
        blocked = congestion_measure(rho, np.full(10, 0.5), np.full(10, 0.3), 0.1)
        assert free == pytest.approx(0.256)
        assert blocked > free


class TestEmptySystem:

    def test_first_time_after_cutoff(self):
        times = [0.0, 1.0, 2.0, 3.0, 4.0]
        totals = [0.0, 0.5, 1e-3, 1e-8, 0.0]
        assert time_of_empty_system(times, totals, cutoff=0.5) == 3.0
        assert time_of_empty_system(times, totals, cutoff=0.0) == 0.0

    def test_never_empty(self):
        assert time_of_empty_system([0.0, 1.0], [1.0, 1.0]) is None

    def test_mismatch(self):
        with pytest.raises(HistoryMismatchError):
            time_of_empty_system([0.0, 1.0], [1.0])

    def test_probability_counts_missing_as_not_empty(self):
        values = [1.0, 2.5, None, 4.0]
        assert empty_system_probability(values, 2.5) == 0.5
        assert empty_system_probability(values, 10.0) == 0.75
        assert empty_system_probability([], 1.0) == 0.0


class TestAccidentCounts:

    def test_counts_by_location(self):
        log = [accident(0, road='2'), accident(1, road='2'), accident(2, junction='D'), accident(3, road='6')]
        counts = count_accidents(log, road_ids=['1', '2', '6'], junction_ids=['B', 'D'])
        assert counts.per_road == {'1': 0, '2': 2, '6': 1}
        assert counts.per_junction == {'B': 0, 'D': 1}
        assert counts.road_total == 3
        assert counts.total == 4
