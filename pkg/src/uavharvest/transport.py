"""Mass-transport link between UAV-side rate and device-side harvested data.

Per unit time the mass sent by scheduled devices equals the mass received
by UAVs, which gives ``D = R * T / K`` with ``K = lambda*w*l`` devices per
window and ``T = w/v`` seconds spent by a device inside a passing window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import harvested_data, mean_rate
from .model import ModulationRule, NetworkConfig
from .sim import Scenario, coverage_estimate, simulate_passages

__all__ = ["TransportReport", "check_identity_analytic", "check_identity_simulated"]


@dataclass(frozen=True)
class TransportReport:
    """Both sides of ``D * K = R * T`` and their ratio."""

    D: float
    R: float
    K: float
    T: float
    ratio: float
    ratio_error: float
    occupancy: float
    source: str
    active_time: float = math.nan
    idle_time: float = math.nan

    def consistent(self, n_err=3.0):
        return abs(self.ratio - 1.0) <= n_err * self.ratio_error


def _ratio(D, R, K, T):
    return D * K / (R * T)


def check_identity_analytic(cfg: NetworkConfig, modulation=None, **kw) -> TransportReport:
    """Compare the analytic harvested data with the analytic mean rate."""
    if cfg.lam <= 0 or cfg.w <= 0:
        raise ValueError("the identity needs lambda > 0 and w > 0")
    modulation = modulation or ModulationRule()
    D = harvested_data(cfg, modulation, **kw)
    R = mean_rate(cfg, modulation, **kw)
    if R.value == 0:
        raise ValueError("mean rate is zero (no bits per symbol at this threshold)")
    K, T = cfg.mean_devices, cfg.w / cfg.v
    rel = D.error / D.value + R.error / R.value
    return TransportReport(D.value, R.value, K, T, _ratio(D.value, R.value, K, T), rel,
                           cfg.occupancy, "analytic", T, (cfg.mu - cfg.w) / cfg.v)


def check_identity_simulated(sc: Scenario, modulation=None, trials=10_000, slot_duration=None) -> TransportReport:
    """Same identity from two independent simulations.

    ``R`` comes from slot sampling at the typical UAV, ``D`` from passages
    over the typical device (separate random streams); the ratio's standard
    error follows from the delta method.
    """
    if trials < 10_000:
        raise ValueError(f"need at least 10000 trials, got {trials}")
    cfg = sc.cfg
    modulation = modulation or ModulationRule()
    bits = modulation.bits(cfg.tau)
    cov = coverage_estimate(sc, trials)
    D_samples, ts, n_slots = simulate_passages(sc, slot_duration, trials, modulation)
    D = float(D_samples.mean())
    D_se = float(D_samples.std(ddof=1)) / math.sqrt(D_samples.size)
    R, R_se = bits * cov.mean, bits * cov.std_error
    K, T = cfg.mean_devices, cfg.w / cfg.v
    ratio = _ratio(D, R, K, T)
    se = abs(ratio) * math.hypot(D_se / D, R_se / R)
    return TransportReport(D, R, K, T, ratio, se, cfg.occupancy, "simulated",
                           n_slots * ts, (cfg.mu - cfg.w) / cfg.v)
