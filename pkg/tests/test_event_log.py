"""Tests for accident log loading and the exponential gap analysis."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from roadhawkes.analysis.event_log import (
    EventLog,
    exponential_bin_shares,
    exponentiality_test,
    fit_exponential,
    gap_histogram,
    intermediate_times,
    load_event_log,
)
from roadhawkes.errors import EventLogError


def write_csv(tmp_path, text, name='log.csv'):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoad:

    def test_wall_clock_log_is_sorted(self, tmp_path):
        path = write_csv(tmp_path, (
            "timestamp,road,severity,duration\n"
            "2023-03-01T08:30:00,A1,0.5,1.0\n"
            "2023-03-01T07:00:00,A2,0.2,0.5\n"
            "2023-03-02T01:15:00,A1,0.9,2.0\n"
        ))
        log = load_event_log(path)
        assert len(log) == 3
        assert log.wall_clock
        np.testing.assert_allclose(log.times, [7.0, 8.5, 25.25])
        assert log.attributes['road'].tolist() == ['A2', 'A1', 'A1']
        np.testing.assert_allclose(intermediate_times(log), [90.0, 1005.0])
        np.testing.assert_allclose(intermediate_times(log, 'hours'), [1.5, 16.75])

    def test_numeric_log(self, tmp_path):
        log = load_event_log(write_csv(tmp_path, "start\n3.0\n1.0\n2.5\n"))
        assert not log.wall_clock
        np.testing.assert_allclose(intermediate_times(log), [1.5, 0.5])
        with pytest.raises(EventLogError, match='raw'):
            log.times_in('minutes')

    def test_bad_timestamps_report_lines(self, tmp_path):
        path = write_csv(tmp_path, "timestamp\n2023-03-01T08:30:00\nyesterday\n2023-03-01T09:00:00\nnoon\n")
        with pytest.raises(EventLogError) as info:
            load_event_log(path)
        assert info.value.line_numbers == [3, 5]
        assert 'lines 3, 5' in str(info.value)

    def test_negative_start(self, tmp_path):
        with pytest.raises(EventLogError) as info:
            load_event_log(write_csv(tmp_path, "start\n1.0\n-2.0\n"))
        assert info.value.line_numbers == [3]

    def test_severity_range(self, tmp_path):
        with pytest.raises(EventLogError, match='severity'):
            load_event_log(write_csv(tmp_path, "start,severity\n1.0,0.5\n2.0,1.5\n"))

    def test_missing_time_column(self, tmp_path):
        with pytest.raises(EventLogError, match="'timestamp' or 'start'"):
            load_event_log(write_csv(tmp_path, "road\nA1\n"))

    def test_bad_run_labels(self, tmp_path):
        with pytest.raises(EventLogError) as info:
            load_event_log(write_csv(tmp_path, "run,start\n0,1.0\nfirst,2.0\n1,3.0\n0.5,4.0\n"))
        assert info.value.line_numbers == [3, 5]

    def test_missing_file(self, tmp_path):
        with pytest.raises(EventLogError, match='Cannot read'):
            load_event_log(tmp_path / 'absent.csv')


class TestGaps:

    def test_needs_two_events(self):
        with pytest.raises(EventLogError):
            intermediate_times([1.0])

    def test_from_times(self):
        log = EventLog.from_times([5.0, 1.0, 2.0])
        np.testing.assert_allclose(intermediate_times(log), [1.0, 3.0])
        with pytest.raises(EventLogError):
            EventLog.from_times([-1.0, 2.0])

    def test_ensemble_log_gaps_stay_within_runs(self, tmp_path):
        log = load_event_log(write_csv(tmp_path, "run,start\n0,0.0\n1,5.0\n0,10.0\n1,15.0\n2,7.0\n"))
        assert log.run_count == 3
        np.testing.assert_allclose(intermediate_times(log), [10.0, 10.0])
        assert fit_exponential(intermediate_times(log)) == pytest.approx(0.1)

    def test_ensemble_log_needs_a_run_with_two_events(self, tmp_path):
        log = load_event_log(write_csv(tmp_path, "run,start\n0,1.0\n1,2.0\n"))
        with pytest.raises(EventLogError, match='2 runs'):
            intermediate_times(log)

    def test_fit(self):
        assert fit_exponential([1.0, 2.0, 3.0]) == pytest.approx(0.5)
        with pytest.raises(EventLogError):
            fit_exponential([])
        with pytest.raises(EventLogError):
            fit_exponential([1.0, 0.0])

    def test_histogram(self):
        histogram = gap_histogram([0.5, 1.0, 1.5, 4.0], 1.0)
        np.testing.assert_allclose(histogram.edges, [0, 1, 2, 3, 4, 5])
        assert histogram.counts.tolist() == [1, 2, 0, 0, 1]
        assert histogram.shares.sum() == pytest.approx(1.0)

    def test_bin_shares(self):
        shares = exponential_bin_shares(1.0, [0.0, 1.0, np.inf])
        np.testing.assert_allclose(shares, [1 - np.exp(-1.0), np.exp(-1.0)])


class TestExponentiality:

    def test_exponential_sample_passes(self):
        gaps = np.random.default_rng(8).exponential(2.0, 5000)
        result = exponentiality_test(gaps, level=0.01)
        assert result.passed
        assert result.rate == pytest.approx(0.5, rel=0.05)
        assert result.to_dict()['verdict'] == 'exponential'

    def test_uniform_sample_fails(self):
        gaps = np.random.default_rng(9).uniform(0.9, 1.1, 2000)
        result = exponentiality_test(gaps, level=0.01)
        assert not result.passed
        assert result.to_dict()['verdict'] == 'not exponential'


class TestGapProperties:

    @given(st.lists(st.floats(min_value=0.01, max_value=100.0), min_size=1, max_size=50))
    def test_cumulative_sum_round_trip(self, gaps):
        times = np.concatenate([[0.0], np.cumsum(gaps)])
        np.testing.assert_allclose(intermediate_times(times), gaps, rtol=1e-9, atol=1e-9)

    @given(
        st.lists(st.floats(min_value=0.01, max_value=100.0), min_size=1, max_size=50),
        st.floats(min_value=0.1, max_value=10.0),
    )
    def test_fit_is_scale_equivariant(self, samples, k):
        scaled = fit_exponential(np.asarray(samples) * k)
        assert scaled == pytest.approx(fit_exponential(samples) / k, rel=1e-9)
