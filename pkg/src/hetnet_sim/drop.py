"""One realized network and its per-link fading.

Fading for a (user, base station) pair is a pure function of the drop key
and the pair's ids, so it can be evaluated lazily, in any order and on any
worker, and still agree with an exhaustive evaluation of every pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointSet, Region, SpatialIndex, default_bucket_side, sample_ppp
from .propagation import PathLossModel, TierConfig

DOWNLINK = 0
UPLINK = 1
SELECTION = 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    # splitmix64 finalizer
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_uniform(key: int, stream: int, a, b):
    """Deterministic uniforms in (0, 1) indexed by (key, stream, a, b)."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(np.uint64(key) ^ (np.uint64(stream) * _GOLDEN))
        z = _mix(z + a * _GOLDEN + _M1)
        z = _mix(z ^ (b + _M2))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def _bs_code(tier, bs):
    return (np.asarray(tier, dtype=np.uint64) << np.uint64(40)) | np.asarray(bs, dtype=np.uint64)


@dataclass(frozen=True, eq=False)
class Drop:
    region: Region
    tiers: tuple[TierConfig, ...]
    base_stations: tuple[np.ndarray, ...]
    users: np.ndarray
    model: PathLossModel
    fading_key: int
    shared_fading: bool = False

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def tagged(self) -> int:
        """Index of the measurement user at the origin (always the last user)."""
        return len(self.users) - 1

    @property
    def n_bs(self) -> int:
        return sum(len(b) for b in self.base_stations)

    def bs_counts(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.base_stations)

    def fading(self, link: int, users, tier: int, bs):
        """Unit-mean exponential power gain of each (user, base station) link."""
        if self.shared_fading and link == UPLINK:
            link = DOWNLINK
        u = hash_uniform(self.fading_key, link, users, _bs_code(tier, bs))
        return -np.log(u)

    def selection_uniform(self, tier: int, bs):
        return hash_uniform(self.fading_key, SELECTION, 0, _bs_code(tier, bs))

    def distances(self, user: int, tier: int, bs=None):
        pts = self.base_stations[tier] if bs is None else self.base_stations[tier][bs]
        u = self.users[user]
        return np.hypot(pts[..., 0] - u[0], pts[..., 1] - u[1])

    def spatial_index(self, tier: int) -> SpatialIndex:
        cache = self.__dict__.setdefault("_index_cache", {})
        if tier not in cache:
            pts = self.base_stations[tier]
            rc = self.model.critical_radius or 0.0
            side = default_bucket_side(self.region, len(pts), rc)
            cache[tier] = SpatialIndex(pts, self.region, side)
        return cache[tier]


def sample_drop(region: Region, tiers, user_density: float, model: PathLossModel,
                rng: np.random.Generator, fading_key: int, shared_fading: bool = False) -> Drop:
    """Sample every tier's base stations and the users, then append the origin user."""
    bs = tuple(sample_ppp(t.density, region, rng, t.name).points for t in tiers)
    users: PointSet = sample_ppp(user_density, region, rng)
    pts = np.vstack([users.points, np.zeros((1, 2))])
    return Drop(region, tuple(tiers), bs, pts, model, int(fading_key), shared_fading)
