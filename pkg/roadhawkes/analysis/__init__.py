"""
RoadHawkes Analysis Package
Accident-log and vehicle-count analysis.
"""

from .event_log import (
    EventLog,
    GapHistogram,
    ExponentialityTest,
    load_event_log,
    intermediate_times,
    fit_exponential,
    gap_histogram,
    exponential_bin_shares,
    exponentiality_test,
)
from .profiles import HourlyProfile, hourly_profile, hourly_shares_from_times, load_hourly_counts, build_inflow_profile

__all__ = [
    'EventLog',
    'GapHistogram',
    'ExponentialityTest',
    'load_event_log',
    'intermediate_times',
    'fit_exponential',
    'gap_histogram',
    'exponential_bin_shares',
    'exponentiality_test',
    'HourlyProfile',
    'hourly_profile',
    'hourly_shares_from_times',
    'load_hourly_counts',
    'build_inflow_profile',
]
