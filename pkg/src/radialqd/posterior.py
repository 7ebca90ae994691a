"""Exact recursive posterior over (origin, radius) states.

The filter works on *levels*: level 0 is "no change yet", level ``k >= 1``
has a physical radius ``levels[k]`` (in radius units). The standard model
uses ``levels = 0, 1, ..., R``; mismatched and instantaneous detectors reuse
the same machinery with coarser level ladders.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .geometry import distances, exposed
from .observation import ObservationFrame
from .state_model import (BeliefState, PriorParams, initial_belief, onset_hazard,
                          radius_transition)


class RadialFilter:
    def __init__(self, origins, levels, params: PriorParams, model, unit_length: float = 1.0,
                 check_identity: bool = False):
        self.origins = np.atleast_2d(np.asarray(getattr(origins, "points", origins), dtype=float))
        self.levels = np.asarray(levels, dtype=float)
        if self.levels[0] != 0 or len(self.levels) < 2 or np.any(np.diff(self.levels) <= 0):
            raise ValueError("levels must start at 0 and strictly increase")
        self.params = params
        self.model = model
        self.unit_length = unit_length
        self.check_identity = check_identity

    @classmethod
    def standard(cls, origins, rmax: int, params, model, unit_length=1.0, **kw) -> "RadialFilter":
        return cls(origins, np.arange(rmax + 1), params, model, unit_length, **kw)

    @property
    def M(self) -> int:
        return len(self.origins)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def initial(self, cluster: int = 0) -> BeliefState:
        return initial_belief(self.M, self.params, self.n_levels, cluster)

    def predict(self, belief: BeliefState) -> np.ndarray:
        """One-step prediction ``P(U_{n,m,r} | I_{n-1})`` for ``n = belief.n + 1``."""
        p = belief.probs
        h = onset_hazard(belief.n + 1, self.params)
        rho1 = self.params.rho1
        K = self.n_levels - 1
        stay = np.full(K + 1, 1 - rho1)
        grow = np.full(K + 1, rho1)
        stay[0], stay[K] = 1 - h, 1.0
        grow[1] = h
        out = np.empty_like(p)
        out[:, 0] = p[:, 0] * stay[0]
        out[:, 1:] = p[:, 1:] * stay[1:] + p[:, :-1] * grow[1:]
        return out

    def log_likelihood(self, frame: ObservationFrame) -> np.ndarray:
        """Log-likelihood ratio against the all-null hypothesis for every (origin, level)."""
        if len(frame) == 0:
            return np.zeros((self.M, self.n_levels))
        d = distances(frame.locations, self.origins)
        if self.model.distance_free:
            llr = np.broadcast_to(self.model.llr(frame.readings), d.shape)
        else:
            llr = self.model.llr(frame.readings[None, :], d)
        # a sensor is exposed from the first level strictly beyond its distance onward
        first = np.searchsorted(self.levels, d / self.unit_length, side="right")
        K1 = self.n_levels + 1
        idx = (np.arange(self.M)[:, None] * K1 + first).ravel()
        binned = np.bincount(idx, weights=llr.ravel(), minlength=self.M * K1).reshape(self.M, K1)
        return np.cumsum(binned[:, :-1], axis=1)

    def update(self, predicted: np.ndarray, frame: ObservationFrame, n: int,
               cluster: int = 0, log_scale: float = 0.0) -> BeliefState:
        ll = self.log_likelihood(frame)
        with np.errstate(divide="ignore"):
            logw = np.log(predicted) + ll
        top = logw.max()
        if not np.isfinite(top):
            raise FloatingPointError(f"posterior vanished at slot {n}: all state weights are zero")
        w = np.exp(logw - top)
        z = w.sum()
        belief = BeliefState(n, w / z, cluster, log_scale + top + math.log(z))
        if self.check_identity:
            residual = per_origin_identity_residual(belief)
            assert residual <= 1e-10, f"per-origin identity violated by {residual:.3e} at slot {n}"
        return belief

    def step(self, belief: BeliefState, frame: ObservationFrame) -> BeliefState:
        return self.update(self.predict(belief), frame, belief.n + 1, belief.cluster, belief.log_scale)

    def run(self, frames: Sequence[ObservationFrame]) -> list[BeliefState]:
        beliefs = [self.initial()]
        for fr in frames:
            beliefs.append(self.step(beliefs[-1], fr))
        return beliefs


def change_posterior(belief: BeliefState) -> float:
    """Posterior probability that no change has happened yet."""
    return float(belief.probs[:, 0].sum())


def radius_posterior(belief: BeliefState) -> np.ndarray:
    return belief.probs.sum(axis=0)


def per_origin_posterior(belief: BeliefState, m: int) -> float:
    """``P(t <= n | I_n, O = o_m)``."""
    row = belief.probs[m]
    total = row.sum()
    if total <= 0:
        raise ZeroDivisionError(f"origin {m} has zero posterior mass")
    return float(row[1:].sum() / total)


def per_origin_posteriors(belief: BeliefState) -> np.ndarray:
    rows = belief.probs.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, belief.probs[:, 1:].sum(axis=1) / rows, np.nan)


def pi0_from_per_origin(W) -> float:
    W = np.asarray(W, dtype=float)
    return len(W) / (len(W) + np.sum(W / (1 - W)))


def per_origin_identity_residual(belief: BeliefState) -> float:
    W = per_origin_posteriors(belief)
    if np.any(np.isnan(W)) or np.any(W >= 1):
        return 0.0
    return abs(change_posterior(belief) - pi0_from_per_origin(W))


def brute_force_posterior(frames: Sequence[ObservationFrame], origins, levels, params: PriorParams,
                          model, unit_length: float = 1.0, max_paths: int = 20000) -> BeliefState:
    """Reference posterior by enumerating every level trajectory ``R_0..R_n``.

    Exponential in ``n``; meant only for verifying :class:`RadialFilter`.
    """
    origins = np.atleast_2d(np.asarray(getattr(origins, "points", origins), dtype=float))
    levels = list(levels)
    top = len(levels) - 1
    n = len(frames)
    M = len(origins)
    if M * 2 ** (n + 1) > max_paths:
        raise ValueError(f"instance too large for enumeration (n={n}, M={M})")

    paths = [([0], params.p_inf + (1 - params.p_inf) * (1 - params.rho)),
             ([1], (1 - params.p_inf) * params.rho)]
    for i in range(1, n + 1):
        paths = [(path + [nxt], prob * p)
                 for path, prob in paths
                 for nxt, p in radius_transition(path[-1], i, params, top).items() if p > 0]

    weights = np.zeros((M, top + 1))
    for m, o in enumerate(origins):
        for path, prob in paths:
            loglik = 0.0
            for i, fr in enumerate(frames, start=1):
                radius = levels[path[i]]
                for loc, x in zip(fr.locations, fr.readings):
                    if exposed(loc, o, radius, unit_length):
                        loglik += float(model.log_alt(x, math.dist(loc, o)))
                    else:
                        loglik += float(model.log_null(x))
            weights[m, path[-1]] += prob / M * math.exp(loglik)
    return BeliefState(n, weights / weights.sum())
