"""Prior and Markov transition structure of the hidden (origin, radius) state."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class PriorParams:
    """Geometric onset parameter ``rho``, growth probability ``rho1`` and
    no-change mass ``p_inf`` (0 for the single-event model)."""

    rho: float
    rho1: float = 1.0
    p_inf: float = 0.0

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0,1), got {self.rho}")
        if not 0 < self.rho1 <= 1:
            raise ValueError(f"rho1 must lie in (0,1], got {self.rho1}")
        if not 0 <= self.p_inf < 1:
            raise ValueError(f"p_inf must lie in [0,1), got {self.p_inf}")


@dataclass
class BeliefState:
    """Posterior ``p[m, r] = P(O = o_m, R_n = level r | I_n)``."""

    n: int
    probs: np.ndarray
    cluster: int = 0
    log_scale: float = 0.0

    @property
    def vector(self) -> np.ndarray:
        return self.probs.reshape(-1)

    @property
    def M(self) -> int:
        return self.probs.shape[0]

    @property
    def n_levels(self) -> int:
        return self.probs.shape[1]


def prior_pmf(rho: float, k: int) -> float:
    return rho * (1 - rho) ** k


def onset_hazard(n: int, params: PriorParams) -> float:
    """P(R_n = 1 | R_{n-1} = 0) for slot ``n >= 1``."""
    if params.p_inf == 0:
        return params.rho
    survive = (1 - params.p_inf) * (1 - params.rho) ** (n - 1)
    return params.rho * survive / (params.p_inf + survive)


def radius_transition(r_prev: int, n: int, params: PriorParams, rmax: int) -> dict[int, float]:
    if not 0 <= r_prev <= rmax:
        raise ValueError(f"radius {r_prev} outside [0, {rmax}]")
    if r_prev == rmax:
        return {rmax: 1.0}
    if r_prev == 0:
        h = onset_hazard(n, params)
        return {1: h, 0: 1 - h}
    return {r_prev + 1: params.rho1, r_prev: 1 - params.rho1}


def transition_matrix(n: int, params: PriorParams, n_levels: int) -> np.ndarray:
    """Row-stochastic matrix ``T[i, j] = P(level j at n | level i at n-1)``."""
    rmax = n_levels - 1
    T = np.zeros((n_levels, n_levels))
    for i in range(n_levels):
        for j, p in radius_transition(i, n, params, rmax).items():
            T[i, j] += p
    return T


def initial_belief(M: int, params: PriorParams, n_levels: int, cluster: int = 0) -> BeliefState:
    if n_levels < 2:
        raise ValueError("need at least the no-change and onset levels")
    probs = np.zeros((M, n_levels))
    probs[:, 0] = (params.p_inf + (1 - params.p_inf) * (1 - params.rho)) / M
    probs[:, 1] = (1 - params.p_inf) * params.rho / M
    return BeliefState(0, probs, cluster)


class RadiusPath:
    """Lazily generated true radius path ``R_0, R_1, ...``.

    Growth uses ``uniform < rho1`` so paths drawn from one stream are coupled
    monotonically across ``rho1``.
    """

    def __init__(self, t: Optional[int], rho1: float, rmax: int, rng: np.random.Generator):
        self.t = t
        self.rho1 = rho1
        self.rmax = rmax
        self._rng = rng
        self._radii = [1] if t is not None else []

    def __call__(self, n: int) -> int:
        if self.t is None or n < self.t:
            return 0
        k = n - self.t
        while len(self._radii) <= k:
            last = self._radii[-1]
            u = self._rng.random(64)
            for step in (u < self.rho1):
                last = min(last + int(step), self.rmax)
                self._radii.append(last)
        return self._radii[k]

    def path(self, horizon: int) -> np.ndarray:
        return np.array([self(n) for n in range(horizon + 1)])


@dataclass
class Trajectory:
    t: Optional[int]
    m: int
    radius: RadiusPath = field(repr=False)


def sample_change_point(params: PriorParams, rng: np.random.Generator) -> Optional[int]:
    u_inf, u = rng.random(2)
    if u_inf < params.p_inf:
        return None
    # inverse CDF of P(t >= k) = (1 - rho)^k
    return int(np.floor(np.log1p(-u) / np.log1p(-params.rho)))


def sample_trajectory(params: PriorParams, M: int, rmax: int, rng: np.random.Generator) -> Trajectory:
    t = sample_change_point(params, rng)
    m = int(rng.integers(M))
    return Trajectory(t, m, RadiusPath(t, params.rho1, rmax, rng))
