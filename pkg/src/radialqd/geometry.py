"""Spatial primitives: domains, origin grids, sensor placement and exposure."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

SENSOR_STREAM = 1


@dataclass(frozen=True)
class Domain:
    """Rectangle ``(x_min, x_max, y_min, y_max)`` or disk ``center`` + ``radius``."""

    kind: str = "rectangle"
    bounds: tuple[float, float, float, float] = (0.0, 10.0, 0.0, 10.0)
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            if not (x1 > x0 and y1 > y0):
                raise ValueError(f"rectangle extents must be positive, got {self.bounds}")
        elif self.kind == "disk":
            if not self.radius > 0:
                raise ValueError(f"disk radius must be positive, got {self.radius}")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def rectangle(cls, x_min, x_max, y_min, y_max) -> "Domain":
        return cls("rectangle", bounds=(float(x_min), float(x_max), float(y_min), float(y_max)))

    @classmethod
    def square(cls, side: float) -> "Domain":
        return cls.rectangle(0.0, side, 0.0, side)

    @classmethod
    def disk(cls, radius: float, center=(0.0, 0.0)) -> "Domain":
        return cls("disk", center=(float(center[0]), float(center[1])), radius=float(radius))

    @property
    def area(self) -> float:
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            return (x1 - x0) * (y1 - y0)
        return math.pi * self.radius**2

    @property
    def centroid(self) -> np.ndarray:
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            return np.array([(x0 + x1) / 2, (y0 + y1) / 2])
        return np.array(self.center, dtype=float)

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            return (
                (pts[:, 0] >= x0 - tol) & (pts[:, 0] <= x1 + tol)
                & (pts[:, 1] >= y0 - tol) & (pts[:, 1] <= y1 + tol)
            )
        d = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return d <= self.radius + tol

    def farthest_distance(self, point) -> float:
        """Largest distance from ``point`` to any point of the domain."""
        p = np.asarray(point, dtype=float)
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            corners = np.array([[x0, y0], [x1, y0], [x0, y1], [x1, y1]])
            return float(np.max(np.hypot(*(corners - p).T)))
        return float(np.hypot(*(p - np.asarray(self.center)))) + self.radius

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "rectangle":
            x0, x1, y0, y1 = self.bounds
            u = rng.random((n, 2))
            return np.column_stack([x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]])
        u = rng.random((n, 2))
        r = self.radius * np.sqrt(u[:, 0])
        ang = 2 * np.pi * u[:, 1]
        return np.column_stack([self.center[0] + r * np.cos(ang), self.center[1] + r * np.sin(ang)])


@dataclass(frozen=True)
class OriginSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1 or pts.shape[1] != 2:
            raise ValueError("origin set needs at least one 2-D point")
        if len({tuple(p) for p in pts}) != len(pts):
            raise ValueError("origin points must be distinct")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SensorSnapshot:
    n: int
    locations: np.ndarray

    def __len__(self):
        return len(self.locations)


def build_origin_grid(domain: Domain, M: int) -> OriginSet:
    """Cell-centred, row-major grid of ``M`` points covering the domain.

    Uses the most-square ``rows x cols`` layout with ``rows * cols >= M`` and
    drops the surplus from the last row. Disks use their inscribed square.
    """
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    cols = math.ceil(math.sqrt(M))
    rows = math.ceil(M / cols)
    if domain.kind == "rectangle":
        x0, x1, y0, y1 = domain.bounds
    else:
        h = domain.radius / math.sqrt(2)
        cx, cy = domain.center
        x0, x1, y0, y1 = cx - h, cx + h, cy - h, cy + h
    xs = x0 + (np.arange(cols) + 0.5) * (x1 - x0) / cols
    ys = y0 + (np.arange(rows) + 0.5) * (y1 - y0) / rows
    pts = np.array([(x, y) for y in ys for x in xs])[:M]
    return OriginSet(pts)


def max_radius(domain: Domain, origins, unit_length: float = 1.0) -> int:
    """Smallest integer radius whose open disk covers the domain from every origin."""
    pts = origins.points if isinstance(origins, OriginSet) else np.atleast_2d(np.asarray(origins, float))
    if len(pts) == 0:
        raise ValueError("origin set is empty")
    far = max(domain.farthest_distance(p) for p in pts)
    return int(math.ceil(far / unit_length)) + 1


def distances(sensors, origins) -> np.ndarray:
    """Euclidean distance matrix, shape ``(n_origins, n_sensors)``."""
    s = np.asarray(sensors, dtype=float).reshape(-1, 2)
    o = np.asarray(origins, dtype=float).reshape(-1, 2)
    return np.hypot(o[:, None, 0] - s[None, :, 0], o[:, None, 1] - s[None, :, 1])


def exposed_mask(dist_units, radius) -> np.ndarray:
    # strict: a sensor exactly on the wavefront is not exposed
    return np.asarray(dist_units) < radius


def exposed(sensor, origin, radius: float, unit_length: float = 1.0) -> bool:
    d = math.dist(tuple(sensor), tuple(origin)) / unit_length
    return bool(exposed_mask(d, radius))


class SensorPlacement:
    """Deterministic stream of sensor snapshots.

    ``uniform-random`` and ``per-slot-resample`` draw fresh uniform locations
    each slot; ``fixed-list`` repeats either the given locations or the slot-0
    draw. Each slot's draw is keyed on ``(seed, *key, slot)`` so snapshots can
    be regenerated in any order.
    """

    POLICIES = ("uniform-random", "per-slot-resample", "fixed-list")

    def __init__(self, domain: Domain, L: int, policy: str = "per-slot-resample",
                 seed: int = 0, key: Sequence[int] = (), locations=None):
        if L < 0:
            raise ValueError("L must be non-negative")
        if policy not in self.POLICIES:
            raise ValueError(f"unknown placement policy {policy!r}")
        self.domain = domain
        self.L = L
        self.policy = policy
        self.seed = seed
        self.key = tuple(key)
        self._fixed: Optional[np.ndarray] = None
        if policy == "fixed-list":
            if locations is not None:
                locs = np.asarray(locations, dtype=float).reshape(-1, 2)
                if not domain.contains(locs).all():
                    raise ValueError("fixed sensor locations must lie inside the domain")
                self._fixed = locs
            else:
                self._fixed = self._draw(0)

    def _draw(self, n: int) -> np.ndarray:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key + (SENSOR_STREAM, n))
        return self.domain.sample_uniform(np.random.default_rng(ss), self.L)

    def snapshot(self, n: int) -> SensorSnapshot:
        if self._fixed is not None:
            return SensorSnapshot(n, self._fixed)
        return SensorSnapshot(n, self._draw(n))

    def __iter__(self) -> Iterator[SensorSnapshot]:
        n = 0
        while True:
            yield self.snapshot(n)
            n += 1


def place_sensors(domain: Domain, L: int, policy: str, seed: int = 0, **kw) -> Iterator[SensorSnapshot]:
    return iter(SensorPlacement(domain, L, policy, seed, **kw))
