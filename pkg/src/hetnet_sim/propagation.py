"""Single- and dual-slope path loss, Rayleigh fading and received power."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw)


@dataclass(frozen=True)
class PathLossModel:
    """Distance attenuation law.

    Single slope when ``critical_radius`` is None, in which case ``alpha1``
    equals ``alpha0``. Beyond the critical radius the dual-slope law carries
    the factor ``(critical_radius / reference_distance) ** (alpha1 - alpha0)``
    so both branches meet at the critical radius.
    """

    alpha0: float
    alpha1: float
    critical_radius: float | None = None
    reference_distance: float = 100.0
    k: float = 1.0

    def __post_init__(self):
        if self.alpha0 < 0 or self.alpha1 < 0:
            raise ValueError("path loss exponents must be non-negative")
        if self.critical_radius is None and self.alpha1 != self.alpha0:
            raise ValueError("single-slope model needs alpha1 == alpha0")
        if self.critical_radius is not None and not self.critical_radius > 0:
            raise ValueError("critical_radius must be positive")
        if not self.reference_distance > 0:
            raise ValueError("reference_distance must be positive")
        if not self.k > 0:
            raise ValueError("k must be positive")

    @classmethod
    def single_slope(cls, alpha: float, reference_distance: float = 100.0, k: float = 1.0):
        return cls(alpha, alpha, None, reference_distance, k)

    @classmethod
    def dual_slope(cls, alpha0: float, alpha1: float, critical_radius: float = 30.0,
                   reference_distance: float = 100.0, k: float = 1.0):
        return cls(alpha0, alpha1, critical_radius, reference_distance, k)

    @property
    def is_dual(self) -> bool:
        return self.critical_radius is not None

    @property
    def alpha(self) -> float:
        if self.is_dual:
            raise AttributeError("dual-slope model has no single exponent")
        return self.alpha0

    @property
    def label(self) -> str:
        if self.is_dual:
            return f"dual[{self.alpha0:g},{self.alpha1:g}]"
        return f"single[{self.alpha0:g}]"

    @property
    def continuity_factor(self) -> float:
        return (self.critical_radius / self.reference_distance) ** (self.alpha1 - self.alpha0)

    def near_branch(self, x):
        return self.k * (np.asarray(x, dtype=float) / self.reference_distance) ** (-self.alpha0)

    def far_branch(self, x):
        c = self.continuity_factor
        return self.k * c * (np.asarray(x, dtype=float) / self.reference_distance) ** (-self.alpha1)

    def factor(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(~(x > 0)):
            raise ValueError("path loss is undefined at non-positive distance")
        if not self.is_dual:
            return self.near_branch(x)
        return np.where(x <= self.critical_radius, self.near_branch(x), self.far_branch(x))

    def loss_db(self, x):
        """Attenuation as a positive-is-loss dB figure."""
        return -10.0 * np.log10(self.factor(x))

    def inverse(self, level):
        """Smallest distance beyond which ``factor`` stays strictly below ``level``.

        Returns inf when the law is flat past the relevant point.
        """
        level = np.asarray(level, dtype=float)
        d0 = self.reference_distance
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            near = _invert(level / self.k, self.alpha0, d0)
            if not self.is_dual:
                out = near
            else:
                at_rc = self.k * (self.critical_radius / d0) ** (-self.alpha0)
                far = _invert(level / (self.k * self.continuity_factor), self.alpha1, d0)
                out = np.where(level >= at_rc, np.minimum(near, self.critical_radius), np.maximum(far, self.critical_radius))
        return np.where(level > 0, out, np.inf)


def _invert(ratio, alpha, d0):
    if alpha == 0:
        return np.where(ratio > 1, 0.0, np.inf)
    return d0 * ratio ** (-1.0 / alpha)


def path_loss_factor(model: PathLossModel, x):
    out = model.factor(x)
    return float(out) if np.ndim(out) == 0 else out


def sample_fading(rng: np.random.Generator, size=None):
    """Rayleigh power gain: exponential with unit mean."""
    return rng.exponential(1.0, size=size)


def received_power(tx_power_dbm: float, fading, model: PathLossModel, x):
    """Received power in mW; use :func:`mw_to_dbm` for the dB view."""
    return np.asarray(fading) * dbm_to_mw(tx_power_dbm) * model.factor(x)


@dataclass(frozen=True)
class TierConfig:
    name: str
    density: float
    tx_power_dbm: float
    band: int

    def __post_init__(self):
        if not (self.density >= 0 and math.isfinite(self.density)):
            raise ValueError(f"{self.name} density must be a non-negative number")

    @property
    def tx_power_mw(self) -> float:
        return 10.0 ** (self.tx_power_dbm / 10.0)
