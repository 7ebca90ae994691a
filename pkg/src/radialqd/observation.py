"""Null/alternative sampling densities and the attenuating path-loss family."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import distances, exposed_mask

LOG_2PI = math.log(2 * math.pi)
CLAMPS = ("unit-floor", "reference-scaled", "literal")


@dataclass(frozen=True)
class ObservationFrame:
    n: int
    locations: np.ndarray
    readings: np.ndarray

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float).reshape(-1, 2)
        x = np.asarray(self.readings).reshape(-1)
        if len(locs) != len(x):
            raise ValueError(f"frame has {len(locs)} locations but {len(x)} readings")
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "readings", x)

    def __len__(self):
        return len(self.readings)


def loglik_null(x, sigma2: float):
    x = np.asarray(x, dtype=float)
    return -0.5 * (LOG_2PI + math.log(sigma2) + x * x / sigma2)


def loglik_alt(x, variance):
    x = np.asarray(x, dtype=float)
    v = np.asarray(variance, dtype=float)
    return -0.5 * (LOG_2PI + np.log(v) + x * x / v)


@dataclass(frozen=True)
class ObservationModel:
    """Zero-mean Gaussian pair ``f0 = N(0, sigma2)``, ``f1 = N(0, sigma2 + gamma2 / d~^theta)``.

    ``flat`` ignores distance. For ``attenuating`` the effective distance is
    ``max(d, 1)`` (unit-floor), ``max(d, d0) / d0`` (reference-scaled) or
    ``max(d0, d / d0)`` (literal).
    """

    family: str = "flat"
    sigma2: float = 1.0
    gamma2: float = 1.0
    theta: float = 2.0
    d0: float = 1.0
    clamp: str = "unit-floor"

    def __post_init__(self):
        if self.family not in ("flat", "attenuating"):
            raise ValueError(f"unknown model family {self.family!r}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.gamma2 < 0 or self.theta < 0 or not self.d0 > 0:
            raise ValueError("need gamma2 >= 0, theta >= 0, d0 > 0")
        if self.clamp not in CLAMPS:
            raise ValueError(f"unknown clamp {self.clamp!r}")

    @property
    def distance_free(self) -> bool:
        return self.family == "flat"

    @property
    def snr(self) -> float:
        return self.gamma2 / self.sigma2

    def effective_distance(self, d):
        d = np.asarray(d, dtype=float)
        if self.clamp == "unit-floor":
            return np.maximum(d, 1.0)
        if self.clamp == "reference-scaled":
            return np.maximum(d, self.d0) / self.d0
        return np.maximum(self.d0, d / self.d0)

    def alt_variance(self, d=0.0):
        if self.family == "flat":
            return np.zeros(np.shape(d)) + (self.sigma2 + self.gamma2)
        return self.sigma2 + self.gamma2 / self.effective_distance(d) ** self.theta

    def log_null(self, x):
        return loglik_null(x, self.sigma2)

    def log_alt(self, x, d=0.0):
        return loglik_alt(x, self.alt_variance(d))

    def llr(self, x, d=0.0):
        """Log-likelihood ratio ``log f1(x; d) - log f0(x)``; broadcasts ``x`` over rows of ``d``."""
        v = self.alt_variance(d)
        x2 = np.asarray(x, dtype=float) ** 2
        return -0.5 * (np.log(v / self.sigma2) + x2 / v - x2 / self.sigma2)

    def sample(self, d, exposed, rng: np.random.Generator) -> np.ndarray:
        var = np.where(exposed, self.alt_variance(d), self.sigma2)
        return np.sqrt(var) * rng.standard_normal(np.shape(exposed))

    def with_gamma2(self, gamma2: float) -> "ObservationModel":
        return ObservationModel(self.family, self.sigma2, gamma2, self.theta, self.d0, self.clamp)


@dataclass(frozen=True)
class QuantizedModel:
    """Finite observation alphabet with distance-free pmfs, used for exact DP checks."""

    pmf0: tuple
    pmf1: tuple

    def __post_init__(self):
        for p in (self.pmf0, self.pmf1):
            if len(p) != len(self.pmf0) or abs(sum(p) - 1) > 1e-12 or min(p) <= 0:
                raise ValueError("pmfs must be positive, equal-length and sum to one")

    distance_free = True

    @property
    def alphabet(self) -> np.ndarray:
        return np.arange(len(self.pmf0))

    def log_null(self, x):
        return np.log(np.asarray(self.pmf0))[np.asarray(x, dtype=int)]

    def log_alt(self, x, d=0.0):
        return np.log(np.asarray(self.pmf1))[np.asarray(x, dtype=int)]

    def llr(self, x, d=0.0):
        return self.log_alt(x) - self.log_null(x)

    def sample(self, d, exposed, rng: np.random.Generator) -> np.ndarray:
        exposed = np.asarray(exposed)
        u = rng.random(exposed.shape)
        c0 = np.searchsorted(np.cumsum(self.pmf0), u, side="right")
        c1 = np.searchsorted(np.cumsum(self.pmf1), u, side="right")
        return np.minimum(np.where(exposed, c1, c0), len(self.pmf0) - 1)


def sample_frame(radius: float, origin, locations, model, rng: np.random.Generator,
                 n: int = 0, unit_length: float = 1.0) -> ObservationFrame:
    """Readings for one slot: exposed sensors draw from f1 at their distance, the rest from f0."""
    locs = np.asarray(locations, dtype=float).reshape(-1, 2)
    d = distances(locs, origin)[0]
    x = model.sample(d, exposed_mask(d / unit_length, radius), rng)
    return ObservationFrame(n, locs, x)
