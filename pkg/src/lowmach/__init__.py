"""Desk-scale laboratory for the low Mach number limit of isentropic Euler flow."""

from .euler import PressureLaw, SolverConfig, run_pair
from .faadibruno import Poly, PowerSeries1, PowerSeries3, fdb_derivative, oracle_derivative, series_compose
from .multiindex import enumerate_partitions, multinomial, order_lt
from .norms import NormParams, analytic_norm, dissipative_norm, radius
from .spectral import SpectralField, StateU, TorusGrid

__version__ = "0.1.0"

__all__ = [
    "NormParams",
    "Poly",
    "PowerSeries1",
    "PowerSeries3",
    "PressureLaw",
    "SolverConfig",
    "SpectralField",
    "StateU",
    "TorusGrid",
    "analytic_norm",
    "dissipative_norm",
    "enumerate_partitions",
    "fdb_derivative",
    "multinomial",
    "oracle_derivative",
    "order_lt",
    "radius",
    "run_pair",
    "series_compose",
]
