"""Analytic and Monte Carlo evaluation of UAV-fleet IoT data harvesting.

A platoon of UAVs flies at altitude ``h`` with spacing ``mu``; each UAV
schedules one device per TDMA slot from the Poisson devices in its
``w x l`` activation window.  The package evaluates Laplace transforms of
the interference, coverage, mean rate and harvested data by quadrature
and checks each of them against a simulator of the same geometry.
"""
__version__ = "0.1.0"

from .analytic import (
    AnalyticResult,
    LaplaceEvaluator,
    ProductTruncation,
    conditional_coverage,
    conditional_rate,
    coverage_curve,
    coverage_probability,
    coverage_probability_2d,
    factor_window,
    harvested_data,
    laplace_derivative_sum,
    laplace_interference,
    laplace_interference_plus_noise,
    laplace_noise,
    laplace_shot_noise,
    mean_rate,
    mean_rate_2d,
    occupancy_per_device,
)
from .model import (
    ConfigError,
    FadingModel,
    ModulationRule,
    NetworkConfig,
    WindowGeom,
    dump_config,
    load_config,
    loads_config,
    window_center,
)
from .optimize import SweepResult, WindowOptimum, golden_section_max, objective, optimize_window, sweep
from .quadrature import ConvergenceError, QuadratureSpec
from .sim import (
    Scenario,
    SimEstimate,
    SlotSample,
    coverage_estimate,
    empirical_laplace,
    harvest_passage_estimate,
    sample_slot,
    sample_snapshot_stationary,
    simulate_passages,
    snapshot_shot_noise,
)
from .transport import TransportReport, check_identity_analytic, check_identity_simulated

__all__ = [name for name in dir() if not name.startswith("_")]
