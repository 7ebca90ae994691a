"""Finite-horizon backward induction for the Bayes risk on tiny instances.

The belief simplex is discretised by a regular lattice; off-lattice beliefs
are evaluated by barycentric interpolation over the Kuhn (Freudenthal)
triangulation of the lattice, which is exact for affine functions and keeps
interpolation weights non-negative.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import distances, exposed_mask
from .observation import ObservationFrame, ObservationModel, QuantizedModel
from .posterior import RadialFilter, change_posterior
from .state_model import BeliefState, PriorParams, RadiusPath, sample_change_point, transition_matrix

MAX_STATES = 6


class SimplexLattice:
    """Points ``k / N`` with non-negative integer ``k`` summing to ``N`` in ``dim`` coordinates."""

    def __init__(self, dim: int, resolution: int):
        if dim < 2 or resolution < 1:
            raise ValueError("need dim >= 2 and resolution >= 1")
        self.dim = dim
        self.N = resolution
        cum = np.array(list(itertools.combinations_with_replacement(range(resolution + 1), dim - 1)),
                       dtype=np.int64).reshape(-1, dim - 1)
        self._keys = self._encode(cum)
        order = np.argsort(self._keys)
        self._keys = self._keys[order]
        cum = cum[order]
        counts = np.diff(np.column_stack([np.zeros(len(cum), np.int64), cum,
                                          np.full(len(cum), resolution, np.int64)]), axis=1)
        self.points = counts / resolution

    def __len__(self):
        return len(self.points)

    def _encode(self, cum: np.ndarray) -> np.ndarray:
        base = self.N + 1
        return (cum * base ** np.arange(cum.shape[1], dtype=np.int64)).sum(axis=1)

    def interpolate(self, values: np.ndarray, beliefs: np.ndarray) -> np.ndarray:
        P = np.asarray(beliefs, dtype=float).reshape(-1, self.dim)
        y = np.clip(np.cumsum(P[:, :-1] * self.N, axis=1), 0, self.N)
        base = np.minimum(np.floor(y), self.N - 1).astype(np.int64)
        frac = y - base
        # ties go to the higher coordinate first so every vertex stays non-decreasing
        order = (self.dim - 2) - np.argsort(-frac[:, ::-1], axis=1, kind="stable")
        fs = np.take_along_axis(frac, order, axis=1)
        lam = np.empty((len(P), self.dim))
        lam[:, 0] = 1 - fs[:, 0]
        lam[:, 1:-1] = fs[:, :-1] - fs[:, 1:]
        lam[:, -1] = fs[:, -1]
        out = lam[:, 0] * values[self._index(base)]
        vertex = base.copy()
        rows = np.arange(len(P))
        for j in range(self.dim - 1):
            vertex[rows, order[:, j]] += 1
            out += lam[:, j + 1] * values[self._index(vertex)]
        return out

    def _index(self, cum: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._keys, self._encode(cum))
        return idx


@dataclass
class DPInstance:
    """Tiny detection problem: origins, stationary sensors, radius ladder ``0..rmax``."""

    origins: np.ndarray
    sensors: np.ndarray
    rmax: int
    params: PriorParams
    model: object
    unit_length: float = 1.0

    def __post_init__(self):
        self.origins = np.atleast_2d(np.asarray(self.origins, dtype=float))
        self.sensors = np.asarray(self.sensors, dtype=float).reshape(-1, 2)
        if self.n_states > MAX_STATES:
            raise ValueError(f"instance has {self.n_states} states; the DP is limited to {MAX_STATES}")

    @property
    def n_states(self) -> int:
        return len(self.origins) * (self.rmax + 1)

    def filter(self) -> RadialFilter:
        return RadialFilter.standard(self.origins, self.rmax, self.params, self.model, self.unit_length)


@dataclass
class ObservationRule:
    """Finite set of observation vectors with per-state expectation weights.

    ``E[g(X) | state s] ~= sum_x weights[x, s] * g(x)``; ``loglik[x, s]`` is the
    (unnormalised) log-likelihood used in the Bayes update.
    """

    readings: np.ndarray
    weights: np.ndarray
    loglik: np.ndarray


def observation_rule(instance: DPInstance, nodes: int = 16) -> ObservationRule:
    filt = instance.filter()
    L = len(instance.sensors)
    S = instance.n_states
    model = instance.model
    if isinstance(model, QuantizedModel):
        readings = np.array(list(itertools.product(model.alphabet, repeat=L)), dtype=float).reshape(-1, L)
        loglik = _state_loglik(filt, instance.sensors, readings, absolute=True)
        return ObservationRule(readings, np.exp(loglik), loglik)
    if not isinstance(model, ObservationModel):
        raise TypeError("unsupported observation model")
    z, w = np.polynomial.hermite.hermgauss(nodes)
    zz = np.array(list(itertools.product(z, repeat=L))).reshape(-1, L)
    ww = np.prod(np.array(list(itertools.product(w, repeat=L))).reshape(-1, L), axis=1) / math.pi ** (L / 2)
    state_var = _state_variances(instance)
    blocks, wts = [], []
    for s in range(S):
        blocks.append(np.sqrt(2 * state_var[s])[None, :] * zz)
        wt = np.zeros((len(zz), S))
        wt[:, s] = ww
        wts.append(wt)
    readings = np.vstack(blocks)
    loglik = _state_loglik(filt, instance.sensors, readings, absolute=False)
    return ObservationRule(readings, np.vstack(wts), loglik)


def _state_variances(instance: DPInstance) -> np.ndarray:
    m = instance.model
    d = distances(instance.sensors, instance.origins)
    out = []
    for i in range(len(instance.origins)):
        for r in range(instance.rmax + 1):
            exp_ = exposed_mask(d[i] / instance.unit_length, r)
            out.append(np.where(exp_, m.alt_variance(d[i]), m.sigma2))
    return np.array(out)


def _state_loglik(filt: RadialFilter, sensors, readings, absolute: bool) -> np.ndarray:
    rows = []
    for x in readings:
        fr = ObservationFrame(0, sensors, x)
        ll = filt.log_likelihood(fr).reshape(-1)
        if absolute:
            ll = ll + float(np.sum(filt.model.log_null(x)))
        rows.append(ll)
    return np.array(rows)


@dataclass
class ValueTable:
    horizon: int
    cost: float
    lattice: SimplexLattice
    instance: DPInstance
    J: np.ndarray
    D: np.ndarray
    pi0: np.ndarray = field(repr=False)

    def continuation(self, n: int, belief) -> float:
        return float(self.lattice.interpolate(self.D[n], _as_vector(belief))[0])

    def value(self, n: int, belief) -> float:
        return float(self.lattice.interpolate(self.J[n], _as_vector(belief))[0])


def _as_vector(belief) -> np.ndarray:
    return belief.vector if isinstance(belief, BeliefState) else np.asarray(belief, dtype=float).reshape(-1)


def _pi0(P: np.ndarray, M: int, K1: int) -> np.ndarray:
    return P.reshape(-1, M, K1)[:, :, 0].sum(axis=1)


def backward_induction(instance: DPInstance, cost: float, horizon: int, resolution: int,
                       nodes: int = 16, chunk: int = 2_000_000) -> ValueTable:
    """Cost-to-go ``J_n^N`` and continuation ``D_n^N`` on the lattice for ``n = N..0``."""
    if cost < 0 or horizon < 0:
        raise ValueError("need cost >= 0 and horizon >= 0")
    M, K1 = len(instance.origins), instance.rmax + 1
    lat = SimplexLattice(instance.n_states, resolution)
    P = lat.points
    pi0 = _pi0(P, M, K1)
    rule = observation_rule(instance, nodes)
    lik = np.exp(rule.loglik - rule.loglik.max(axis=1, keepdims=True))
    X = len(rule.readings)
    J = np.empty((horizon + 1, len(P)))
    D = np.empty((horizon, len(P)))
    J[horizon] = pi0
    block = max(1, chunk // (X * instance.n_states))
    for n in range(horizon - 1, -1, -1):
        T = transition_matrix(n + 1, instance.params, K1)
        for lo in range(0, len(P), block):
            sl = slice(lo, lo + block)
            pred = (P[sl].reshape(-1, M, K1) @ T).reshape(-1, instance.n_states)
            omega = pred @ rule.weights.T
            post = pred[:, None, :] * lik[None, :, :]
            z = post.sum(axis=2, keepdims=True)
            post = np.divide(post, z, out=np.full_like(post, 1 / instance.n_states), where=z > 0)
            nxt = lat.interpolate(J[n + 1], post.reshape(-1, instance.n_states)).reshape(post.shape[:2])
            D[n, sl] = np.sum(omega * nxt, axis=1)
        J[n] = np.minimum(pi0, cost * (1 - pi0) + D[n])
    if not (np.all(J >= -1e-12) and np.all(J <= 1 + 1e-12)):
        raise FloatingPointError("cost-to-go left [0, 1]; quadrature too coarse")
    return ValueTable(horizon, cost, lat, instance, J, D, pi0)


def dp_policy(table: ValueTable, belief, n: int) -> bool:
    """Stop iff ``pi0 <= c (1 - pi0) + D_n(belief)``; always stop at the horizon."""
    if n >= table.horizon:
        return True
    vec = _as_vector(belief)
    M, K1 = len(table.instance.origins), table.instance.rmax + 1
    pi0 = float(_pi0(vec[None, :], M, K1)[0])
    return pi0 <= table.cost * (1 - pi0) + table.continuation(n, vec)


def threshold_policy(Q: float) -> Callable[[BeliefState, int], bool]:
    def policy(belief, n):
        return change_posterior(belief) <= Q
    return policy


@dataclass
class RiskEstimate:
    mean: float
    half_width: float
    samples: np.ndarray = field(repr=False)

    @property
    def ci(self) -> tuple[float, float]:
        return self.mean - self.half_width, self.mean + self.half_width


def bayes_risk(policy: Callable[[BeliefState, int], bool], cost: float, instance: DPInstance,
               trials: int, seed: int = 0, horizon: int = 200) -> RiskEstimate:
    """Monte Carlo ``P(T < t) + c E[(T - t)^+]`` with the stop forced at ``horizon``.

    Draws depend only on ``(seed, trial)``, so two policies evaluated with the
    same seed see identical trajectories and observations.
    """
    filt = instance.filter()
    d = distances(instance.sensors, instance.origins)
    risks = np.empty(trials)
    for i in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        t = sample_change_point(instance.params, rng)
        m = int(rng.integers(len(instance.origins)))
        path = RadiusPath(t, instance.params.rho1, instance.rmax, rng)
        obs_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i, 1)))
        belief = filt.initial()
        n = 0
        while not (n >= horizon or policy(belief, n)):
            n += 1
            ex = exposed_mask(d[m] / instance.unit_length, path(n))
            x = instance.model.sample(d[m], ex, obs_rng)
            belief = filt.step(belief, ObservationFrame(n, instance.sensors, x))
        false_alarm = t is None or n < t
        delay = 0 if t is None else max(n - t, 0)
        risks[i] = float(false_alarm) + cost * delay
    half = 1.96 * risks.std(ddof=1) / math.sqrt(trials) if trials > 1 else math.inf
    return RiskEstimate(float(risks.mean()), half, risks)


def best_threshold_misclassification(pi0: np.ndarray, stop: np.ndarray) -> tuple[float, float]:
    """Smallest disagreement rate between ``stop`` labels and any rule ``pi0 <= Q``.

    Returns ``(rate, Q)``. Points sharing a ``pi0`` value always get the same
    threshold decision.
    """
    pi0 = np.asarray(pi0, dtype=float)
    stop = np.asarray(stop, dtype=bool)
    vals, inv = np.unique(pi0, return_inverse=True)
    n_stop = np.bincount(inv, weights=stop, minlength=len(vals))
    n_all = np.bincount(inv, minlength=len(vals))
    # Q below every value: nothing stops; Q at vals[k]: groups 0..k stop
    err_stop_side = np.concatenate([[0], np.cumsum(n_all - n_stop)])
    err_cont_side = np.concatenate([[0], np.cumsum(n_stop[::-1])])[::-1]
    errs = err_stop_side + err_cont_side
    k = int(np.argmin(errs))
    Q = -np.inf if k == 0 else float(vals[k - 1])
    return float(errs[k] / len(pi0)), Q


@dataclass
class ThresholdReport:
    rho: float
    misclassification: float
    best_threshold: float
    psi_over_rho_max: float
    psi_over_rho_mean: float


def threshold_diagnostic(tables: dict, layer: int = 0) -> list[ThresholdReport]:
    """Compare each table's DP stop region with the best single ``pi0`` threshold."""
    out = []
    for rho, table in sorted(tables.items(), reverse=True):
        pi0 = table.pi0
        stop = pi0 <= table.cost * (1 - pi0) + table.D[layer]
        rate, Q = best_threshold_misclassification(pi0, stop)
        psi = table.D[layer] - (1 - rho) * pi0
        out.append(ThresholdReport(rho, rate, Q, float(np.max(np.abs(psi)) / rho),
                                   float(np.mean(np.abs(psi))) / rho))
    return out
