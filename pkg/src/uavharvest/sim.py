"""Monte Carlo simulation of the UAV/IoT network.

Every window draws from its own counter-based stream (Philox keyed by
seed, purpose, window index and trial chunk), so estimates are bit-exact
reproducible and changing the number of simulated windows leaves the
streams of the remaining windows untouched.  Trials are processed in
fixed-size chunks; a trial's random numbers depend only on
``(seed, window, trial)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .model import ModulationRule, NetworkConfig

__all__ = [
    "Scenario",
    "SimEstimate",
    "SlotSample",
    "sample_slot",
    "slot_powers",
    "empirical_laplace",
    "coverage_estimate",
    "harvest_passage_estimate",
    "simulate_passages",
    "sample_snapshot_stationary",
    "snapshot_shot_noise",
    "default_slot_duration",
]

# stream purposes
_SLOT, _PASSAGE, _TYPICAL, _SNAPSHOT = 1, 2, 3, 4


@dataclass(frozen=True)
class Scenario:
    """A config plus the simulation controls.

    ``k_sim`` windows are simulated on each side of the serving window
    (per axis in the planar model); defaults are 64 (1-D) and 16 (2-D).
    """

    cfg: NetworkConfig
    seed: int = 0
    k_sim: int | None = None
    chunk: int = 2048

    def __post_init__(self):
        if self.k_sim is None:
            object.__setattr__(self, "k_sim", 16 if self.cfg.is_2d else 64)
        if self.k_sim < 0 or self.chunk < 1:
            raise ValueError("k_sim must be >= 0 and chunk >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def windows(self):
        """Window indices ``(i, j)`` in a fixed order; the serving window first."""
        k = self.k_sim
        ii = np.arange(-k, k + 1)
        jj = ii if self.cfg.is_2d else np.zeros(1, dtype=int)
        I, J = np.meshgrid(ii, jj, indexing="ij")
        I, J = I.ravel(), J.ravel()
        order = np.lexsort((J, I, (I != 0) | (J != 0)))
        return I[order], J[order]

    def truncation_bias(self, sigma_max=1.0):
        """Upper bound on the omitted interference's effect, relative, per unit sigma."""
        from .analytic import _tail_coefficient

        if self.k_sim == 0:
            return math.inf
        k = (self.k_sim, self.k_sim if self.cfg.is_2d else 0)
        return _tail_coefficient(self.cfg, k) * sigma_max


@dataclass(frozen=True)
class SimEstimate:
    """Sample mean of a per-trial quantity with its standard error."""

    metric: str
    mean: float
    std_error: float
    trials: int
    seed: int
    info: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_samples(cls, metric, samples, seed, **info):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        sd = float(samples.std(ddof=1)) if n > 1 else 0.0
        return cls(metric, float(samples.mean()), sd / math.sqrt(n), n, seed, info)

    def ci(self, level=0.95):
        z = NormalDist().inv_cdf(0.5 + level / 2)
        return self.mean - z * self.std_error, self.mean + z * self.std_error

    def agrees(self, value, n_se=3.0, slack=0.0):
        return abs(self.mean - value) <= n_se * self.std_error + slack


@dataclass(frozen=True)
class SlotSample:
    """One TDMA slot seen by the typical UAV.

    ``x``/``y`` hold the selected device per window (NaN when empty).
    """

    i: np.ndarray
    j: np.ndarray
    count: np.ndarray
    x: np.ndarray
    y: np.ndarray
    gain: np.ndarray
    power: np.ndarray
    uav: tuple = (0.0, 0.0)

    @property
    def occupied(self):
        return self.count > 0

    @property
    def signal(self):
        return float(self.power[(self.i == 0) & (self.j == 0)].sum())

    @property
    def interference(self):
        return float(self.power[(self.i != 0) | (self.j != 0)].sum())

    @property
    def shot_noise(self):
        return float(self.power.sum())


def _zigzag(i):
    i = int(i)
    return 2 * i if i >= 0 else -2 * i - 1


def _stream(seed, purpose, i, j, chunk, extra=0):
    ss = np.random.SeedSequence(seed, spawn_key=(purpose, _zigzag(i), _zigzag(j), chunk, extra))
    return np.random.Generator(np.random.Philox(ss))


def _window_draws(gen, n, cfg, cx, cy):
    """Poisson count, selected-device position and fading gain for n slots."""
    count = gen.poisson(cfg.mean_devices, n)
    x = cx + (gen.random(n) - 0.5) * cfg.w
    y = cy + (gen.random(n) - 0.5) * cfg.l
    gain = gen.gamma(cfg.m, cfg.omega / cfg.m, n)
    return count, x, y, gain


def _power(cfg, gain, x, y, ux=0.0, uy=0.0):
    d2 = (x - ux) ** 2 + (y - uy) ** 2 + cfg.h ** 2
    return cfg.unit_power * gain * d2 ** (-cfg.alpha / 2)


def _center(cfg, i, j):
    return i * cfg.mu, (j * cfg.nu if cfg.is_2d else 0.0)


def _slot_chunk(sc: Scenario, chunk, keep=False):
    cfg = sc.cfg
    n = sc.chunk
    occ0 = np.zeros(n, dtype=bool)
    S = np.zeros(n)
    I = np.zeros(n)
    kept = []
    for i, j in zip(*sc.windows()):
        gen = _stream(sc.seed, _SLOT, i, j, chunk)
        count, x, y, gain = _window_draws(gen, n, cfg, *_center(cfg, i, j))
        pw = np.where(count > 0, _power(cfg, gain, x, y), 0.0)
        if i == 0 and j == 0:
            occ0 = count > 0
            S = pw
        else:
            I += pw
        if keep:
            kept.append((count, x, y, gain, pw))
    return occ0, S, I, kept


def slot_powers(sc: Scenario, trials):
    """Per-trial ``(occupied0, signal, interference)`` for trials ``0..trials-1``."""
    trials = int(trials)
    parts = [_slot_chunk(sc, c)[:3] for c in range(-(-trials // sc.chunk))]
    occ = np.concatenate([p[0] for p in parts])[:trials]
    S = np.concatenate([p[1] for p in parts])[:trials]
    I = np.concatenate([p[2] for p in parts])[:trials]
    return occ, S, I


def sample_slot(sc: Scenario, trial: int = 0) -> SlotSample:
    """The slot of trial number ``trial`` (the counter is the RNG state)."""
    chunk, row = divmod(int(trial), sc.chunk)
    _, _, _, kept = _slot_chunk(sc, chunk, keep=True)
    I, J = sc.windows()
    count = np.array([k[0][row] for k in kept])
    occ = count > 0
    x = np.where(occ, [k[1][row] for k in kept], np.nan)
    y = np.where(occ, [k[2][row] for k in kept], np.nan)
    gain = np.array([k[3][row] for k in kept])
    power = np.array([k[4][row] for k in kept])
    return SlotSample(I, J, count, x, y, gain, power)


def _check_trials(trials, minimum):
    if trials < minimum:
        raise ValueError(f"need at least {minimum} trials, got {trials}")


def empirical_laplace(sc: Scenario, s_grid, trials=100_000, exclude_center=False, min_trials=1000):
    """Monte Carlo ``E[exp(-s N)]`` for each s (N: shot noise, or interference)."""
    _check_trials(trials, min_trials)
    _, S, I = slot_powers(sc, trials)
    N = I if exclude_center else S + I
    metric = "laplace_interference" if exclude_center else "laplace_shot_noise"
    out = []
    for s in np.atleast_1d(np.asarray(s_grid, dtype=float)):
        vals = np.exp(-s * N) if s else np.ones_like(N)
        out.append(SimEstimate.from_samples(metric, vals, sc.seed, s=float(s)))
    return out


def coverage_estimate(sc: Scenario, trials=100_000, tau=None, noise=None, min_trials=1000):
    """Fraction of slots with a non-empty serving window and ``S/(I+N0) >= tau``.

    ``tau`` may be a sequence; all thresholds then share the same samples.
    ``noise`` overrides the config's noise power.
    """
    _check_trials(trials, min_trials)
    cfg = sc.cfg
    occ, S, I = slot_powers(sc, trials)
    n0 = cfg.noise if noise is None else noise
    denom = I + n0
    taus = np.atleast_1d(cfg.tau if tau is None else tau).astype(float)
    out = []
    for t in taus:
        hit = occ & (S >= t * denom)
        out.append(SimEstimate.from_samples("coverage", hit, sc.seed, tau=float(t), noise=n0))
    return out if (tau is not None and np.ndim(tau)) else out[0]


# --------------------------------------------------------------------------
# harvested data per passage

def default_slot_duration(cfg: NetworkConfig, n_slots=41):
    """Slot length giving ``n_slots`` (odd) slots per passage: ``w / (v * n_slots)``."""
    return cfg.w / (cfg.v * n_slots)


def simulate_passages(sc: Scenario, slot_duration=None, trials=10_000, modulation=None,
                      details=False):
    """Simulate UAV passages over a typical device at ``(0, Y)``.

    Slots ``k = -K..K`` with ``K = floor(w / (2 v T_s))``; in slot k the
    serving UAV sits at ``x = -v k T_s`` and interfering windows at
    ``i*mu`` relative to it.  The serving window holds the typical device
    plus a ``Poisson(lambda w l)`` background; one device is selected
    uniformly.  Returns per-passage harvested bits/Hz (and, with
    ``details``, the per-slot arrays).
    """
    cfg = sc.cfg
    ts = default_slot_duration(cfg) if slot_duration is None else float(slot_duration)
    if ts <= 0:
        raise ValueError("slot duration must be > 0")
    if cfg.v * ts > cfg.w / 10:
        warnings.warn("v*T_s exceeds w/10: coarse time discretization", RuntimeWarning, stacklevel=2)
    kmax = int(math.floor(cfg.w / (2 * cfg.v * ts)))
    n_slots = 2 * kmax + 1
    bits = (modulation or ModulationRule()).bits(cfg.tau)
    per_chunk = max(1, sc.chunk // n_slots)
    n_chunks = -(-int(trials) // per_chunk)
    offsets = np.arange(-kmax, kmax + 1) * cfg.v * ts

    data, rec = [], {"count": [], "selected": [], "covered": [], "Y": []}
    I_idx, J_idx = sc.windows()
    for c in range(n_chunks):
        n = per_chunk * n_slots
        gen = _stream(sc.seed, _TYPICAL, 0, 0, c)
        Y = (gen.random(per_chunk) - 0.5) * cfg.l
        background = gen.poisson(cfg.mean_devices, n)
        pick = gen.random(n)
        gain = gen.gamma(cfg.m, cfg.omega / cfg.m, n)
        selected = pick * (background + 1) < 1.0
        # device relative to the serving UAV
        dx = np.tile(offsets, per_chunk)
        dy = np.repeat(Y, n_slots)
        S = _power(cfg, gain, dx, dy)
        interference = np.zeros(n)
        for i, j in zip(I_idx, J_idx):
            if i == 0 and j == 0:
                continue
            wgen = _stream(sc.seed, _PASSAGE, i, j, c, n_slots)
            count, x, y, g = _window_draws(wgen, n, cfg, *_center(cfg, i, j))
            interference += np.where(count > 0, _power(cfg, g, x, y), 0.0)
        covered = S >= cfg.tau * (interference + cfg.noise)
        acc = (selected & covered).reshape(per_chunk, n_slots)
        data.append(ts * bits * acc.sum(axis=1))
        if details:
            rec["count"].append(background.reshape(per_chunk, n_slots) + 1)
            rec["selected"].append(selected.reshape(per_chunk, n_slots))
            rec["covered"].append(covered.reshape(per_chunk, n_slots))
            rec["Y"].append(Y)
    D = np.concatenate(data)[:trials]
    if not details:
        return D, ts, n_slots
    rec = {k: np.concatenate(v)[:trials] for k, v in rec.items()}
    return D, ts, n_slots, rec


def harvest_passage_estimate(sc: Scenario, slot_duration=None, trials=10_000, modulation=None):
    """Mean bits/Hz harvested from the typical device per UAV passage."""
    D, ts, n_slots = simulate_passages(sc, slot_duration, trials, modulation)
    return SimEstimate.from_samples("harvested_data", D, sc.seed, slot_duration=ts, n_slots=n_slots)


# --------------------------------------------------------------------------
# stationary (non-Palm) snapshots

def _time_key(t):
    return int(np.float64(t).view(np.uint64))


def _snapshot_chunk(sc: Scenario, t, chunk, shift=None, keep=False):
    """Shot noise at UAV 0 of the shifted comb, with explicit device patterns."""
    cfg = sc.cfg
    n = sc.chunk
    gen = _stream(sc.seed, _SNAPSHOT, 0, 0, chunk, _time_key(t))
    if shift is None:
        U = (gen.random(n) - 0.5) * cfg.mu
        V = (gen.random(n) - 0.5) * cfg.nu if cfg.is_2d else np.zeros(n)
    else:
        U = np.full(n, float(shift[0]))
        V = np.full(n, float(shift[1]) if len(shift) > 1 else 0.0)
    ux, uy = U + cfg.v * t, V
    N = np.zeros(n)
    kept = []
    for i, j in zip(*sc.windows()):
        wgen = _stream(sc.seed, _SNAPSHOT, i, j, chunk, _time_key(t) ^ 1)
        cx0, cy0 = _center(cfg, i, j)
        cx, cy = cx0 + ux, cy0 + uy
        count = wgen.poisson(cfg.mean_devices, n)
        total = int(count.sum())
        # all devices of the window, then a uniform pick among them
        px = np.repeat(cx, count) + (wgen.random(total) - 0.5) * cfg.w
        py = np.repeat(cy, count) + (wgen.random(total) - 0.5) * cfg.l
        first = np.cumsum(count) - count
        pick = first + np.floor(wgen.random(n) * count).astype(np.int64)
        occ = count > 0
        sx = np.where(occ, px[np.minimum(pick, max(total - 1, 0))] if total else 0.0, np.nan)
        sy = np.where(occ, py[np.minimum(pick, max(total - 1, 0))] if total else 0.0, np.nan)
        gain = wgen.gamma(cfg.m, cfg.omega / cfg.m, n)
        pw = np.where(occ, _power(cfg, gain, np.nan_to_num(sx), np.nan_to_num(sy), ux, uy), 0.0)
        N += pw
        if keep:
            kept.append((count, sx, sy, gain, pw))
    return N, (ux, uy), kept


def snapshot_shot_noise(sc: Scenario, t, n, shift=None):
    """``n`` samples of the shot noise at UAV 0 of the stationary fleet at time t."""
    parts = [_snapshot_chunk(sc, t, c, shift)[0] for c in range(-(-int(n) // sc.chunk))]
    return np.concatenate(parts)[:n]


def sample_snapshot_stationary(sc: Scenario, t=0.0, sample=0, shift=None) -> SlotSample:
    """One snapshot of the stationary fleet (uniform shift U, and V in 2-D).

    Coordinates are absolute; ``uav`` holds UAV 0's ground position.
    Passing ``shift=(0, 0)`` with ``t=0`` recovers the Palm geometry.
    """
    chunk, row = divmod(int(sample), sc.chunk)
    _, (ux, uy), kept = _snapshot_chunk(sc, t, chunk, shift, keep=True)
    I, J = sc.windows()
    return SlotSample(
        I, J,
        np.array([k[0][row] for k in kept]),
        np.array([k[1][row] for k in kept]),
        np.array([k[2][row] for k in kept]),
        np.array([k[3][row] for k in kept]),
        np.array([k[4][row] for k in kept]),
        (float(ux[row]), float(uy[row])),
    )
