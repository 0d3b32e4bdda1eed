"""Network parameters, window geometry and fading model.

All quantities are stored in SI units (meters, seconds, watts, linear
ratios).  Config documents may use unit-suffixed strings such as
``"2 km"``, ``"1000/km2"``, ``"0 dB"`` or ``"23 dBm"``; they are converted
on load by :func:`load_config`.

Coordinates follow the Palm view of the UAV process: the typical UAV
hovers above the origin at altitude ``h`` and window ``i`` (``j`` in the
planar model) is centered at ``(i*mu + v*t, j*nu)``.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy import special

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "NetworkConfig",
    "WindowGeom",
    "FadingModel",
    "ModulationRule",
    "load_config",
    "loads_config",
    "dump_config",
    "parse_quantity",
    "window_center",
]


class ConfigError(ValueError):
    """Invalid or incomplete network configuration."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class NetworkConfig:
    """Full parameter set of the UAV/IoT network, in SI units.

    Attributes
    ----------
    lam : float
        IoT density in devices per square meter.
    mu : float
        Distance between consecutive UAVs on a trajectory (m).
    h : float
        UAV altitude (m).
    w, l : float
        Activation window length along x and width along y (m).
    alpha : float
        Path-loss exponent, ``alpha > 1`` (``> 2`` in the planar model).
    m : int
        Nakagami shape; fading power gains are ``Gamma(m, omega/m)``.
    omega : float
        Mean fading power gain.
    p : float
        Transmit power (W).
    tau : float
        Linear SIR/SINR threshold.
    noise : float
        Thermal noise power (W); 0 selects pure SIR.
    v : float
        UAV speed (m/s).
    nu : float or None
        Spacing between parallel trajectories (m), planar model only.
    mode : {"1d", "2d"}
    d_ref : float
        Reference distance of the path loss (m): a device at distance ``d``
        is received with power ``p * G * (d / d_ref)**-alpha``.
    """

    lam: float
    mu: float
    h: float
    w: float
    l: float
    alpha: float = 4.0
    m: int = 1
    omega: float = 1.0
    p: float = 1.0
    tau: float = 1.0
    noise: float = 0.0
    v: float = 10.0
    nu: float | None = None
    mode: str = "1d"
    d_ref: float = 1.0

    def __post_init__(self):
        if isinstance(self.m, float) and self.m.is_integer():
            object.__setattr__(self, "m", int(self.m))
        self._validate()

    def _validate(self):
        def need(ok, field, msg):
            if not ok:
                raise ConfigError(field, msg)

        for name in ("lam", "mu", "h", "w", "l", "alpha", "omega", "p", "tau", "noise", "v", "d_ref"):
            need(math.isfinite(getattr(self, name)), name, "must be finite")
        need(self.mode in ("1d", "2d"), "mode", f"must be '1d' or '2d', got {self.mode!r}")
        need(self.lam >= 0, "lambda", f"must be >= 0, got {self.lam}")
        need(self.mu > 0, "mu", f"must be > 0, got {self.mu}")
        need(self.h > 0, "h", f"must be > 0, got {self.h}")
        need(self.w >= 0, "w", f"must be >= 0, got {self.w}")
        need(self.w <= self.mu, "w", f"must satisfy w <= mu ({self.w} > {self.mu})")
        need(self.l > 0, "l", f"must be > 0, got {self.l}")
        need(self.alpha > 1, "alpha", f"must be > 1, got {self.alpha}")
        need(isinstance(self.m, (int, np.integer)) and self.m >= 1, "m",
             f"must be a positive integer, got {self.m!r}")
        need(self.omega > 0, "omega", f"must be > 0, got {self.omega}")
        need(self.p > 0, "p", f"must be > 0, got {self.p}")
        need(self.tau > 0, "tau", f"must be > 0, got {self.tau}")
        need(self.noise >= 0, "noise", f"must be >= 0, got {self.noise}")
        need(self.v > 0, "v", f"must be > 0, got {self.v}")
        need(self.d_ref > 0, "d_ref", f"must be > 0, got {self.d_ref}")
        if self.mode == "2d":
            need(self.nu is not None and math.isfinite(self.nu) and self.nu > 0, "nu",
                 "planar mode needs a finite nu > 0")
            need(self.l <= self.nu, "l", f"must satisfy l <= nu ({self.l} > {self.nu})")
            # the planar lattice sum of d**-alpha diverges otherwise
            need(self.alpha > 2, "alpha", f"planar mode needs alpha > 2, got {self.alpha}")

    @property
    def mean_devices(self):
        """Mean number of devices per window, ``lambda*w*l``."""
        return self.lam * self.w * self.l

    @property
    def occupancy(self):
        """Probability that a window is non-empty, ``1 - exp(-lambda*w*l)``."""
        return -math.expm1(-self.mean_devices)

    @property
    def unit_power(self):
        """Received power at one meter before fading, ``p * d_ref**alpha``."""
        return self.p * self.d_ref ** self.alpha

    @property
    def fading(self):
        return FadingModel(self.m, self.omega)

    @property
    def is_2d(self):
        return self.mode == "2d"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        """Config document with plain SI numbers (``lambda`` in m^-2)."""
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("lam")
        if d["nu"] is None:
            del d["nu"]
        return d


@dataclass(frozen=True)
class WindowGeom:
    """An activation window ``[x0 +- w/2] x [y0 +- l/2]`` on the ground."""

    x_center: float
    y_center: float
    half_w: float
    half_l: float
    i: int = 0
    j: int = 0

    @property
    def bounds(self):
        return (self.x_center - self.half_w, self.x_center + self.half_w,
                self.y_center - self.half_l, self.y_center + self.half_l)

    @property
    def area(self):
        return 4.0 * self.half_w * self.half_l

    def contains(self, x, y):
        x0, x1, y0, y1 = self.bounds
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)

    def overlaps(self, other: "WindowGeom"):
        """True when the interiors intersect (shared edges do not count)."""
        ax0, ax1, ay0, ay1 = self.bounds
        bx0, bx1, by0, by1 = other.bounds
        return ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1


def window_center(cfg: NetworkConfig, i: int, t: float = 0.0, j: int = 0) -> WindowGeom:
    """Window ``(i, j)`` at time ``t`` in the Palm frame of the typical UAV."""
    y = j * cfg.nu if (cfg.is_2d and j) else 0.0
    return WindowGeom(i * cfg.mu + cfg.v * t, y, cfg.w / 2, cfg.l / 2, i, j)


@dataclass(frozen=True)
class FadingModel:
    """Nakagami-m power fading: gains ``G ~ Gamma(m, omega/m)`` with mean omega."""

    m: int = 1
    omega: float = 1.0

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.m, self.omega / self.m, size)

    def laplace(self, s):
        """``E[exp(-s G)] = (1 + s*omega/m)**-m``."""
        return (1.0 + np.asarray(s, dtype=float) * self.omega / self.m) ** (-self.m)

    def ccdf(self, x):
        """``P(G >= x)`` as a regularized upper incomplete gamma function."""
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return special.gammaincc(self.m, self.m * x / self.omega)

    def ccdf_series(self, x):
        """``P(G >= x)`` through the finite Erlang sum used by the coverage formulas."""
        z = self.m * np.maximum(np.asarray(x, dtype=float), 0.0) / self.omega
        total = np.zeros_like(z)
        term = np.ones_like(z)
        for k in range(self.m):
            if k:
                term = term * z / k
            total = total + term
        return total * np.exp(-z)


@dataclass(frozen=True)
class ModulationRule:
    """Bits per symbol used to convert coverage into rate.

    ``kind="floor"`` uses ``M = 2**floor(log2(1 + tau))``, ``kind="fixed"``
    a constant order ``M`` and ``kind="shannon"`` the continuous
    ``log2(1 + tau)``.
    """

    kind: str = "floor"
    M: int | None = None

    def __post_init__(self):
        if self.kind not in ("floor", "fixed", "shannon"):
            raise ValueError(f"unknown modulation rule {self.kind!r}")
        if self.kind == "fixed" and (self.M is None or int(self.M) != self.M or self.M < 2):
            raise ValueError("fixed modulation needs an integer M >= 2")

    @classmethod
    def fixed(cls, M):
        return cls("fixed", int(M))

    def order(self, tau):
        """Constellation size M (may be 1, i.e. zero bits)."""
        if self.kind == "fixed":
            return self.M
        if self.kind == "shannon":
            return 1.0 + tau
        return 2 ** int(math.floor(math.log2(1.0 + tau)))

    def bits(self, tau):
        if self.kind == "shannon":
            return math.log2(1.0 + tau)
        return math.log2(self.order(tau))


# --------------------------------------------------------------------------
# config loading

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QTY = re.compile(rf"^\s*({_NUM})\s*(.*?)\s*$")

_LENGTH = {"": 1.0, "m": 1.0, "km": 1e3}
_DENSITY = {"": 1.0, "/m2": 1.0, "/m^2": 1.0, "/km2": 1e-6, "/km^2": 1e-6}
_SPEED = {"": 1.0, "m/s": 1.0, "km/h": 1 / 3.6}
_FREQ = {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def _dbm_to_w(x):
    return 10.0 ** ((x - 30.0) / 10.0)


def _power(value, unit, field):
    u = unit.lower()
    if u in ("", "w"):
        return value
    if u == "mw":
        return value * 1e-3
    if u == "dbm":
        return _dbm_to_w(value)
    if u == "dbw":
        return 10.0 ** (value / 10.0)
    raise ConfigError(field, f"unknown power unit {unit!r}")


def _ratio(value, unit, field):
    u = unit.lower()
    if u == "":
        return value
    if u == "db":
        return 10.0 ** (value / 10.0)
    raise ConfigError(field, f"unknown ratio unit {unit!r}")


def _table(table, value, unit, field):
    key = unit.replace(" ", "")
    if key.lower() in table:
        return value * table[key.lower()]
    if key in table:
        return value * table[key]
    raise ConfigError(field, f"unknown unit {unit!r}")


def parse_quantity(raw, field="value"):
    """Split ``"23 dBm"`` into ``(23.0, "dBm")``; bare numbers get unit ``""``."""
    if isinstance(raw, bool):
        raise ConfigError(field, "expected a number")
    if isinstance(raw, (int, float)):
        return float(raw), ""
    match = _QTY.match(str(raw))
    if not match:
        raise ConfigError(field, f"cannot parse quantity {raw!r}")
    return float(match.group(1)), match.group(2)


_REQUIRED = ("lambda", "mu", "h", "w", "l")
_KNOWN = set(_REQUIRED) | {"d_ref", "alpha", "m", "omega", "p", "tau", "noise", "bandwidth", "v", "nu", "mode"}


def _convert(doc: Mapping[str, Any]) -> dict:
    doc = dict(doc)
    unknown = set(doc) - _KNOWN
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown config field")
    for key in _REQUIRED:
        if key not in doc:
            raise ConfigError(key, "missing required field")

    out = {}
    val, unit = parse_quantity(doc["lambda"], "lambda")
    out["lam"] = _table(_DENSITY, val, unit, "lambda")
    for key in ("mu", "h", "w", "l", "nu", "d_ref"):
        if key in doc:
            val, unit = parse_quantity(doc[key], key)
            out[key] = _table(_LENGTH, val, unit, key)
    if "v" in doc:
        val, unit = parse_quantity(doc["v"], "v")
        out["v"] = _table(_SPEED, val, unit, "v")
    for key in ("alpha", "omega"):
        if key in doc:
            val, unit = parse_quantity(doc[key], key)
            if unit:
                raise ConfigError(key, f"dimensionless, got unit {unit!r}")
            out[key] = val
    if "m" in doc:
        val, unit = parse_quantity(doc["m"], "m")
        if unit or not val.is_integer():
            raise ConfigError("m", f"must be a positive integer, got {doc['m']!r}")
        out["m"] = int(val)
    if "p" in doc:
        out["p"] = _power(*parse_quantity(doc["p"], "p"), "p")
    if "tau" in doc:
        out["tau"] = _ratio(*parse_quantity(doc["tau"], "tau"), "tau")
    if "noise" in doc:
        val, unit = parse_quantity(doc["noise"], "noise")
        if unit.lower().endswith("/hz"):
            if "bandwidth" not in doc:
                raise ConfigError("bandwidth", "required when noise is a spectral density")
            bw = _table(_FREQ, *parse_quantity(doc["bandwidth"], "bandwidth"), "bandwidth")
            out["noise"] = _power(val, unit[:-3], "noise") * bw
        else:
            out["noise"] = _power(val, unit, "noise")
    if "mode" in doc:
        mode = str(doc["mode"]).lower().replace("-", "")
        out["mode"] = mode
    return out


def load_config(source, overrides: Mapping[str, Any] | None = None) -> NetworkConfig:
    """Build a :class:`NetworkConfig` from a TOML file, a TOML string or a mapping.

    ``overrides`` (e.g. from ``--param key=value``) replace document entries
    before unit conversion.  Raises :class:`ConfigError` naming the offending
    field on a missing field, unknown unit or violated bound.
    """
    if isinstance(source, Mapping):
        doc = dict(source)
    else:
        path = Path(source)
        if path.suffix == ".toml" or path.exists():
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        else:
            doc = tomllib.loads(str(source))
    if overrides:
        doc.update(overrides)
    return NetworkConfig(**_convert(doc))


def loads_config(text: str, overrides=None) -> NetworkConfig:
    return load_config(tomllib.loads(text), overrides)


def dump_config(cfg: NetworkConfig) -> str:
    """Flat TOML with SI values; ``repr`` keeps floats bit-exact on reload."""
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        elif isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            lines.append(f"{key} = {int(value)}")
        else:
            lines.append(f"{key} = {float(value)!r}")
    return "\n".join(lines) + "\n"
