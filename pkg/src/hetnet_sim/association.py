"""Downlink/uplink user association and the uplink power rule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .drop import DOWNLINK, UPLINK, Drop

# P(h > cap) for unit exponential fading; candidates that could only win with
# a fading gain above the cap are culled.
FADING_CAP_TAIL = 1e-12
DEFAULT_FADING_CAP = -math.log(FADING_CAP_TAIL)

class UplinkPolicy(str, enum.Enum):
    COUPLED = "coupled"
    DECOUPLED = "decoupled"


@dataclass(frozen=True)
class DownlinkPolicy:
    """Biased max-received-power association; all-zero biases is plain max power."""

    biases_db: tuple[float, ...] = ()

    def __post_init__(self):
        if not all(math.isfinite(b) for b in self.biases_db):
            raise ValueError("biases must be finite")

    @classmethod
    def max_received_power(cls):
        return cls()

    @classmethod
    def femto_bias(cls, bias_db: float, n_tiers: int = 2):
        # macro tier (index 0) stays unbiased
        return cls((0.0,) * (n_tiers - 1) + (float(bias_db),))

    def bias_db(self, tier: int) -> float:
        return self.biases_db[tier] if tier < len(self.biases_db) else 0.0


@dataclass(frozen=True)
class UplinkPowerRule:
    target_rx_dbm: float = -70.0
    max_tx_dbm: float = 20.0

    def __post_init__(self):
        if not (math.isfinite(self.target_rx_dbm) and math.isfinite(self.max_tx_dbm)):
            raise ValueError("uplink power rule values must be finite")


def uplink_tx_power(rule: UplinkPowerRule, path_loss_db):
    """Truncated channel inversion: reach the target level, capped at max power."""
    out = np.minimum(rule.target_rx_dbm + np.asarray(path_loss_db, dtype=float), rule.max_tx_dbm)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class AssociationMap:
    tier: np.ndarray
    index: np.ndarray
    loads: tuple[np.ndarray, ...]

    @classmethod
    def from_assignment(cls, tier, index, bs_counts):
        tier = np.asarray(tier, dtype=np.int64)
        index = np.asarray(index, dtype=np.int64)
        loads = tuple(np.bincount(index[tier == t], minlength=n) for t, n in enumerate(bs_counts))
        return cls(tier, index, loads)

    def serving(self, user: int) -> tuple[int, int]:
        return int(self.tier[user]), int(self.index[user])

    def load(self, bs: tuple[int, int]) -> int:
        return int(self.loads[bs[0]][bs[1]])

    def members(self, tier: int):
        """Users of each base station in ``tier`` as (order, starts) CSR arrays, users ascending."""
        flat = np.where(self.tier == tier, self.index, -1)
        order = np.argsort(flat, kind="stable")
        order = order[flat[order] >= 0]
        starts = np.concatenate(([0], np.cumsum(self.loads[tier])))
        return order, starts

    def equals(self, other: "AssociationMap") -> bool:
        return (np.array_equal(self.tier, other.tier) and np.array_equal(self.index, other.index)
                and all(np.array_equal(a, b) for a, b in zip(self.loads, other.loads)))


def _require_bs(drop: Drop):
    if drop.n_bs == 0:
        raise ValueError("drop has no base stations")


def _scan_best(drop: Drop, user: int, link: int, weights) -> tuple[int, int]:
    best, best_score = None, -np.inf
    for t, pts in enumerate(drop.base_stations):
        if len(pts) == 0:
            continue
        j = np.arange(len(pts))
        score = weights[t] * drop.fading(link, user, t, j) * drop.model.factor(drop.distances(user, t))
        k = int(np.argmax(score))
        if score[k] > best_score:
            best, best_score = (t, k), score[k]
    return best


def associate_downlink(drop: Drop, user: int, policy: DownlinkPolicy) -> tuple[int, int]:
    """Serving (tier, index) maximizing biased received power, by full scan."""
    _require_bs(drop)
    w = [t.tx_power_mw * 10.0 ** (policy.bias_db(i) / 10.0) for i, t in enumerate(drop.tiers)]
    return _scan_best(drop, user, DOWNLINK, w)


def associate_uplink(drop: Drop, user: int, policy: UplinkPolicy, dl_serving) -> tuple[int, int]:
    _require_bs(drop)
    if UplinkPolicy(policy) is UplinkPolicy.COUPLED:
        return tuple(dl_serving)
    # common reference transmit power: the argmax is min effective path loss
    return _scan_best(drop, user, UPLINK, [1.0] * len(drop.tiers))


@dataclass(frozen=True, eq=False)
class TierBest:
    """Per tier and user, the strongest link by ``fading * path loss factor``.

    Indices are -1 (and gains -1) for empty tiers. Rows are tiers.
    """

    dl_index: np.ndarray
    dl_gain: np.ndarray
    ul_index: np.ndarray
    ul_gain: np.ndarray
    full_scans: int = 0


def _tier_best(drop: Drop, tier: int, cap: float):
    n = drop.n_users
    out = [np.full(n, -1, dtype=np.int64), np.full(n, -1.0), np.full(n, -1, dtype=np.int64), np.full(n, -1.0)]
    if len(drop.base_stations[tier]) == 0:
        return out, 0
    index = drop.spatial_index(tier)
    m = drop.model
    ul_stream = DOWNLINK if drop.shared_fading else UPLINK
    full = _kernels.tier_best(
        drop.users, index.sorted_points, index.order, index.starts, index.n_buckets, index.bucket_side,
        drop.region.half_width_m, m.k, m.reference_distance, m.alpha0, m.alpha1,
        m.critical_radius or 0.0, m.continuity_factor if m.is_dual else 1.0,
        np.uint64(drop.fading_key), np.uint64(DOWNLINK), np.uint64(ul_stream),
        np.uint64(tier) << np.uint64(40), float(cap), *out)
    return out, int(full)


def best_candidates(drop: Drop, fading_cap: float = DEFAULT_FADING_CAP) -> TierBest:
    """Strongest downlink and uplink candidate per tier for every user.

    Searches the tier's spatial index outward from each user and stops once
    no remaining base station could beat the best candidates without a
    fading gain above ``fading_cap``. Users for which that bound never
    triggers end up scanning the whole grid (counted in ``full_scans``).
    """
    rows, scans = [], 0
    for t in range(len(drop.tiers)):
        r, s = _tier_best(drop, t, fading_cap)
        rows.append(r)
        scans += s
    stack = [np.stack([r[k] for r in rows]) for k in range(4)]
    return TierBest(*stack, full_scans=scans)


def downlink_map(drop: Drop, best: TierBest, policy: DownlinkPolicy) -> AssociationMap:
    _require_bs(drop)
    w = np.array([t.tx_power_mw * 10.0 ** (policy.bias_db(i) / 10.0) for i, t in enumerate(drop.tiers)])
    score = np.where(best.dl_index >= 0, w[:, None] * best.dl_gain, -np.inf)
    tier = np.argmax(score, axis=0)
    index = best.dl_index[tier, np.arange(drop.n_users)]
    return AssociationMap.from_assignment(tier, index, drop.bs_counts())


def decoupled_uplink_map(drop: Drop, best: TierBest) -> AssociationMap:
    _require_bs(drop)
    score = np.where(best.ul_index >= 0, best.ul_gain, -np.inf)
    tier = np.argmax(score, axis=0)
    index = best.ul_index[tier, np.arange(drop.n_users)]
    return AssociationMap.from_assignment(tier, index, drop.bs_counts())


def associate_all(drop: Drop, dl_policy: DownlinkPolicy, ul_policy: UplinkPolicy,
                  best: TierBest | None = None):
    """Downlink and uplink maps for every user in the drop, tagged user included."""
    _require_bs(drop)
    if best is None:
        best = best_candidates(drop)
    dl = downlink_map(drop, best, dl_policy)
    if UplinkPolicy(ul_policy) is UplinkPolicy.COUPLED:
        return dl, dl
    return dl, decoupled_uplink_map(drop, best)
