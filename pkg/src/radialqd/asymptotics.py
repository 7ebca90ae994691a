"""Asymptotic detection-delay calculators (all logarithms natural)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .geometry import Domain, SensorPlacement
from .observation import ObservationModel, sample_frame


def kl_gaussian_variance(var0: float, var1: float) -> float:
    """KL divergence ``D(N(0, var1) || N(0, var0))`` in nats."""
    ratio = var1 / var0
    return 0.5 * (ratio - math.log(ratio) - 1)


def flat_drift(L: int, phi: float, sigma2: float = 1.0) -> float:
    return L * kl_gaussian_variance(sigma2, sigma2 * (1 + phi))


def add_lower_bound(alpha: float, rho: float, drifts: Sequence[float]) -> float:
    q = np.asarray(drifts, dtype=float)
    return float(np.mean(abs(math.log(alpha)) / (q + abs(math.log1p(-rho)))))


def _clamped(s, clamp: str, d0: float = 1.0):
    if clamp == "unit-floor":
        return max(s, 1.0)
    if clamp == "reference-scaled":
        return max(s, d0) / d0
    if clamp == "none":
        return s
    raise ValueError(f"unknown clamp {clamp!r}")


def q_phi_quadrature(phi: float, R: float, theta: float = 2.0, clamp: str = "unit-floor",
                     d0: float = 1.0, reading: str = "density") -> float:
    """Per-sensor drift for sensors uniform on a disk of radius ``R`` around the source.

    ``reading="density"`` integrates the KL against the distance density
    ``2 s / R^2``, i.e. ``(1/R^2) * int_0^R s [phi/s~^theta - log(1 + phi/s~^theta)] ds``.
    ``reading="printed"`` uses ``1/(2R^2)`` in front of the same s-weighted
    integrand, which is half of the density reading.
    """
    if phi == 0:
        return 0.0

    def integrand(s):
        g = phi / _clamped(s, clamp, d0) ** theta
        return s * (g - math.log1p(g))

    breaks = [b for b in (1.0, d0) if 0 < b < R]
    val, _ = integrate.quad(integrand, 0, R, points=breaks or None, epsabs=1e-13, epsrel=1e-13, limit=200)
    scale = 1 / R**2 if reading == "density" else 1 / (2 * R**2)
    return val * scale


def q_phi_closed(phi: float, R: float) -> float:
    """Free-space (theta = 2, unit floor) closed form of :func:`q_phi_quadrature`."""
    R2 = R * R
    return (phi + phi * math.log1p(phi) - (phi + R2) * math.log1p(phi / R2)) / (2 * R2)


def lambda_limit(phi: float, density: float) -> float:
    """Limit of ``L * q_phi`` as ``R, L -> inf`` with ``L / R^2 -> density``."""
    return density / 2 * phi * math.log1p(phi)


def add_approx_attenuating(alpha: float, rho: float, L: int, q_phi: float) -> float:
    return abs(math.log(alpha)) / (L * q_phi + abs(math.log1p(-rho)))


@dataclass
class DriftEstimate:
    slope: float
    stderr: float
    slots: int


def empirical_drift(Z: Sequence[float], start: int = 0) -> DriftEstimate:
    """Least-squares slope of a log-likelihood-ratio trace from slot ``start`` on."""
    z = np.asarray(Z, dtype=float)[start:]
    n = np.arange(len(z), dtype=float)
    slope, _ = np.polyfit(n, z, 1)
    inc = np.diff(z)
    # random-walk LS slope variance is 6/5 of the increment-mean variance
    se = math.sqrt(1.2 * inc.var(ddof=1) / len(inc)) if len(inc) > 1 else math.nan
    return DriftEstimate(float(slope), se, len(z))


def simulate_llr_trace(model: ObservationModel, domain: Domain, source, L: int, slots: int,
                       seed: int = 0, radius: float = math.inf, unit_length: float = 1.0) -> np.ndarray:
    """Cumulative post-change log-likelihood ratio for a known source.

    Sensors are resampled uniformly each slot; with the default infinite
    radius every sensor is exposed, i.e. the segment after full coverage.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    place = SensorPlacement(domain, L, "per-slot-resample", seed)
    src = np.asarray(source, dtype=float).reshape(1, 2)
    z = np.zeros(slots + 1)
    for n in range(1, slots + 1):
        fr = sample_frame(radius, src, place.snapshot(n).locations, model, rng, n, unit_length)
        d = np.hypot(*(fr.locations - src).T)
        exposed = d / unit_length < radius
        z[n] = z[n - 1] + float(np.sum(model.llr(fr.readings, d)[exposed]))
    return z
