"""
RoadHawkes Core Package
Numerics of the coupled traffic/accident model, no file output.
"""

from .network import Road, Junction, Network, UpstreamPath, build_network, load_network, list_available_networks
from .capacity import Accident, AccidentOrigin, CapacityField, accident_coverage, effective_capacity
from .hawkes import ExcitationKernel, HawkesState
from .accidents import AccidentGenerator, AccidentRiskConfig
from .godunov import SimulationState, SolverConfig
from .inflow import ConstantInflow, InflowProfile, PiecewiseConstantInflow, SinusoidInflow
from .risk import AccidentCounts, RiskReport
from .routing import ReroutePolicy

__all__ = [
    'Road',
    'Junction',
    'Network',
    'UpstreamPath',
    'build_network',
    'load_network',
    'list_available_networks',
    'Accident',
    'AccidentOrigin',
    'CapacityField',
    'accident_coverage',
    'effective_capacity',
    'ExcitationKernel',
    'HawkesState',
    'AccidentGenerator',
    'AccidentRiskConfig',
    'SimulationState',
    'SolverConfig',
    'ConstantInflow',
    'InflowProfile',
    'PiecewiseConstantInflow',
    'SinusoidInflow',
    'AccidentCounts',
    'RiskReport',
    'ReroutePolicy',
]
