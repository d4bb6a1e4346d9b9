"""Point processes on a square region and a bucket-grid spatial index.

Positions are in meters, densities in points per square kilometer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Region:
    """Square region ``[-g, g] x [-g, g]`` with ``g`` in kilometers."""

    half_width_km: float

    def __post_init__(self):
        if not (self.half_width_km > 0 and math.isfinite(self.half_width_km)):
            raise ValueError(f"half_width_km must be positive, got {self.half_width_km}")

    @property
    def half_width_m(self) -> float:
        return 1000.0 * self.half_width_km

    @property
    def side_m(self) -> float:
        return 2.0 * self.half_width_m

    @property
    def area_km2(self) -> float:
        return (2.0 * self.half_width_km) ** 2

    @property
    def diameter_m(self) -> float:
        return math.sqrt(2.0) * self.side_m

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(np.abs(pts) <= self.half_width_m, axis=1)


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    label: str = "user"

    def __len__(self):
        return len(self.points)


def sample_ppp(intensity: float, region: Region, rng: np.random.Generator, label: str = "user") -> PointSet:
    """Homogeneous PPP: Poisson(intensity * area) points, iid uniform on the region."""
    if not intensity >= 0:
        raise ValueError(f"intensity must be non-negative, got {intensity}")
    count = rng.poisson(intensity * region.area_km2)
    g = region.half_width_m
    points = rng.uniform(-g, g, size=(count, 2))
    return PointSet(points, label)


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _expand(counts: np.ndarray):
    """For segment lengths ``counts`` return (segment id, offset in segment) per element."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    seg = np.repeat(np.arange(len(counts)), counts)
    starts = np.cumsum(counts) - counts
    offset = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    return seg, offset


def default_bucket_side(region: Region, n_points: int, critical_radius: float = 0.0,
                        occupancy: float = 2.0) -> float:
    side = max(critical_radius, region.side_m / 256.0)
    if n_points > 0:
        # aim for a few points per bucket so sparse tiers do not scan thousands of empty buckets
        side = max(side, region.side_m * math.sqrt(occupancy / n_points))
    return min(side, region.side_m)


class SpatialIndex:
    """Uniform bucket grid over a region.

    Points are stored bucket-sorted so each bucket is a contiguous slice of
    ``order``. Range queries scan the buckets overlapping the query disk's
    bounding box and drop candidates outside the radius.
    """

    def __init__(self, points, region: Region, bucket_side: float | None = None):
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.region = region
        if bucket_side is None:
            bucket_side = default_bucket_side(region, len(self.points))
        if not bucket_side > 0:
            raise ValueError("bucket_side must be positive")
        self.bucket_side = float(bucket_side)
        self.n_buckets = max(1, int(math.ceil(region.side_m / self.bucket_side)))
        cells = self._cell(self.points)
        flat = cells[:, 1] * self.n_buckets + cells[:, 0]
        self.order = np.argsort(flat, kind="stable")
        self.sorted_points = self.points[self.order]
        counts = np.bincount(flat, minlength=self.n_buckets ** 2)
        self.starts = np.concatenate(([0], np.cumsum(counts)))

    def __len__(self):
        return len(self.points)

    def _cell(self, xy) -> np.ndarray:
        c = np.floor((np.asarray(xy, dtype=float) + self.region.half_width_m) / self.bucket_side)
        return np.clip(c, 0, self.n_buckets - 1).astype(np.int64)

    def neighbors_within(self, center, radius: float) -> np.ndarray:
        """Ids of indexed points at distance <= radius from center, ascending."""
        if not radius >= 0:
            raise ValueError("radius must be non-negative")
        ci, pi, _ = self.pairs_within(np.asarray(center, dtype=float).reshape(1, 2), np.array([radius]))
        return np.sort(pi)

    def pairs_within(self, centers, radii, max_pairs: int = 2_000_000):
        """All (center id, point id, distance) with distance <= radius of that center.

        Pairs are grouped by center id in ascending order. Work is chunked so
        at most about ``max_pairs`` candidates are materialized at once.
        """
        centers = np.asarray(centers, dtype=float).reshape(-1, 2)
        radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),))
        empty = np.empty(0, dtype=np.int64)
        if len(self.points) == 0 or len(centers) == 0:
            return empty, empty, np.empty(0)
        lo = self._cell(centers - radii[:, None])
        hi = self._cell(centers + radii[:, None])
        n_rows = hi[:, 1] - lo[:, 1] + 1
        # a row of buckets is one contiguous slice of the bucket-sorted points
        seg, off = _expand(n_rows)
        row = lo[seg, 1] + off
        first = self.starts[row * self.n_buckets + lo[seg, 0]]
        last = self.starts[row * self.n_buckets + hi[seg, 0] + 1]
        counts = last - first
        out_c, out_p, out_d = [empty], [empty], [np.empty(0)]
        bounds = np.searchsorted(np.cumsum(counts), np.arange(max_pairs, int(counts.sum()) + max_pairs, max_pairs))
        start = 0
        for stop in bounds:
            # keep each center's rows in one chunk
            stop = int(np.searchsorted(seg, seg[min(stop, len(seg) - 1)], side="right")) if stop < len(seg) else len(seg)
            if stop <= start:
                continue
            sl = slice(start, stop)
            s2, o2 = _expand(counts[sl])
            center = seg[sl][s2]
            k = first[sl][s2] + o2
            pid = self.order[k]
            pts = self.sorted_points[k]
            d = np.hypot(pts[:, 0] - centers[center, 0], pts[:, 1] - centers[center, 1])
            keep = d <= radii[center]
            out_c.append(center[keep])
            out_p.append(pid[keep])
            out_d.append(d[keep])
            start = stop
        return np.concatenate(out_c), np.concatenate(out_p), np.concatenate(out_d)
