"""Stopping rules built on the radial posterior filter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .geometry import Domain, build_origin_grid, max_radius
from .observation import ObservationFrame
from .posterior import RadialFilter, change_posterior, per_origin_posteriors
from .state_model import BeliefState, PriorParams

RULE_KINDS = ("rp", "oracle", "instant", "instant-oracle", "rp-mismatched", "t-star")
INF = math.inf


def rp_decide(belief: BeliefState, alpha: float) -> bool:
    return change_posterior(belief) <= alpha


def t_star_threshold(alpha: float, M: int) -> float:
    return 1 - alpha / M


def t_star_decide(W, alpha: float, M: Optional[int] = None) -> bool:
    W = np.asarray(W, dtype=float)
    M = len(W) if M is None else M
    valid = W[~np.isnan(W)]
    return bool(valid.size and valid.max() >= t_star_threshold(alpha, M))


def first_crossing(trace: Sequence[float], alpha: float, below: bool = True) -> Optional[int]:
    """First index where ``trace <= alpha`` (or ``>= alpha`` when ``below`` is False)."""
    arr = np.asarray(trace)
    hits = np.flatnonzero(arr <= alpha if below else arr >= alpha)
    return int(hits[0]) if hits.size else None


# level ladders -----------------------------------------------------------

def standard_levels(rmax: int) -> np.ndarray:
    return np.arange(rmax + 1, dtype=float)


def mismatched_levels(rmax: int, increment: int) -> np.ndarray:
    """Detector-side ladder growing ``increment`` radius units per step, capped at ``rmax``."""
    if increment < 1:
        raise ValueError("mismatch increment must be >= 1")
    steps = math.ceil(rmax / increment)
    return np.unique(np.minimum(np.arange(steps + 1) * increment, rmax)).astype(float)


def instant_levels(rmax: Optional[int]) -> np.ndarray:
    return np.array([0.0, INF if rmax is None else float(rmax)])


def make_rp(domain: Domain, M: int, params: PriorParams, model, unit_length: float = 1.0,
            mismatch_increment: int = 1) -> RadialFilter:
    origins = build_origin_grid(domain, M)
    rmax = max_radius(domain, origins, unit_length)
    levels = standard_levels(rmax) if mismatch_increment == 1 else mismatched_levels(rmax, mismatch_increment)
    return RadialFilter(origins, levels, params, model, unit_length)


def make_oracle(true_origin, domain: Domain, params: PriorParams, model,
                unit_length: float = 1.0) -> RadialFilter:
    origin = np.asarray(true_origin, dtype=float).reshape(1, 2)
    return RadialFilter.standard(origin, max_radius(domain, origin, unit_length), params, model, unit_length)


def make_instant(domain: Domain, params: PriorParams, model, origins=None,
                 unit_length: float = 1.0) -> RadialFilter:
    """Two-level chain: no change, then full coverage.

    With ``origins=None`` the detector is origin-free (valid for distance-free
    models): every sensor is exposed from the onset slot onward.
    """
    if origins is None:
        return RadialFilter(domain.centroid.reshape(1, 2), instant_levels(None), params, model, unit_length)
    pts = np.atleast_2d(np.asarray(getattr(origins, "points", origins), dtype=float))
    return RadialFilter(pts, instant_levels(max_radius(domain, pts, unit_length)), params, model, unit_length)


# sequential execution ----------------------------------------------------

class SequentialDetector:
    """Runs one filter slot by slot and keeps the posterior traces.

    The detector stays active until the stop condition holds at ``stop_alpha``
    (the smallest threshold of interest); stop times for any larger threshold
    are read off the stored trace by first crossing.
    """

    def __init__(self, name: str, filt: RadialFilter, stop_alpha: float, t_star: bool = False,
                 cluster: int = 0):
        self.name = name
        self.filter = filt
        self.stop_alpha = stop_alpha
        self.t_star = t_star
        self.belief = filt.initial(cluster)
        self.pi_trace = [change_posterior(self.belief)]
        self.w_trace = [self._wmax()] if t_star else []
        self.active = not self._stopped()

    def _wmax(self) -> float:
        W = per_origin_posteriors(self.belief)
        return float(np.nanmax(W)) if np.any(~np.isnan(W)) else 0.0

    def _stopped(self) -> bool:
        if self.t_star:
            return self.w_trace[-1] >= t_star_threshold(self.stop_alpha, self.filter.M)
        return self.pi_trace[-1] <= self.stop_alpha

    def observe(self, frame: ObservationFrame) -> bool:
        self.belief = self.filter.step(self.belief, frame)
        self.pi_trace.append(change_posterior(self.belief))
        if self.t_star:
            self.w_trace.append(self._wmax())
        self.active = not self._stopped()
        return self.active

    def stop_time(self, alpha: float) -> Optional[int]:
        if self.t_star:
            return first_crossing(self.w_trace, t_star_threshold(alpha, self.filter.M), below=False)
        return first_crossing(self.pi_trace, alpha)


@dataclass
class DetectionRun:
    pi_trace: list
    stop_times: dict
    capped: bool
    w_trace: list = field(default_factory=list)


def run_detector(filt: RadialFilter, frames: Callable[[int], ObservationFrame] | Iterable[ObservationFrame],
                 alphas: Sequence[float], max_slots: int = 10_000, deadline: float = INF,
                 t_star: bool = False) -> DetectionRun:
    """Run until every threshold in ``alphas`` has stopped, the deadline, or ``max_slots``."""
    source = frames if callable(frames) else _indexer(frames)
    det = SequentialDetector("detector", filt, min(alphas), t_star)
    n = 0
    while det.active and n < max_slots and n + 1 < deadline:
        n += 1
        fr = source(n)
        if fr is None:
            break
        det.observe(fr)
    capped = det.active and n >= max_slots
    return DetectionRun(det.pi_trace, {a: det.stop_time(a) for a in alphas}, capped, det.w_trace)


def _indexer(frames: Iterable[ObservationFrame]):
    it = iter(frames)

    def get(_n):
        return next(it, None)
    return get


# outcome bookkeeping -----------------------------------------------------

@dataclass
class TrialRecord:
    cluster: int
    t: Optional[int]
    origin: tuple
    T: Optional[int]
    deadline: float = INF
    capped: bool = False
    procedure: str = ""
    alpha: float = float("nan")
    trial: int = 0
    sweep_value: float = float("nan")

    @property
    def declared(self) -> bool:
        return self.T is not None and self.T < self.deadline

    @property
    def false_alarm(self) -> bool:
        return self.declared and (self.t is None or self.T < self.t)

    @property
    def delay(self) -> Optional[float]:
        """``(T - t)^+`` with undeclared stops counted at the deadline; None without a change."""
        if self.t is None:
            return None
        stop = self.T if self.declared else self.deadline
        if math.isinf(stop):
            return None
        return float(max(stop - self.t, 0))


def discovery_counts(records: Sequence[TrialRecord]) -> tuple[int, int]:
    V = sum(r.false_alarm for r in records)
    R = sum(r.declared for r in records)
    return V, R


def false_discovery_proportion(records: Sequence[TrialRecord]) -> float:
    V, R = discovery_counts(records)
    return V / max(R, 1)


def run_average_delay(records: Sequence[TrialRecord]) -> float:
    """Mean delay over clusters with a finite change before the deadline; 0 when there are none."""
    delays = [r.delay for r in records if r.t is not None and r.t < r.deadline and r.delay is not None]
    return float(np.mean(delays)) if delays else 0.0


@dataclass
class ParallelOutcome:
    V: int
    R: int
    fdp: float
    add: float


def run_parallel(filters: Sequence[RadialFilter], frame_sources: Sequence[Callable[[int], ObservationFrame]],
                 change_points: Sequence[Optional[int]], alpha: float, deadline: float,
                 origins: Optional[Sequence] = None, max_slots: int = 10_000):
    """Independent RP rules on K clusters, scored under the deadline."""
    records = []
    for k, (filt, src, t) in enumerate(zip(filters, frame_sources, change_points)):
        run = run_detector(filt, src, [alpha], max_slots=max_slots, deadline=deadline)
        T = run.stop_times[alpha]
        origin = tuple(origins[k]) if origins is not None else ()
        records.append(TrialRecord(k, t, origin, T, deadline, run.capped, "rp", alpha))
    V, R = discovery_counts(records)
    return records, ParallelOutcome(V, R, V / max(R, 1), run_average_delay(records))
