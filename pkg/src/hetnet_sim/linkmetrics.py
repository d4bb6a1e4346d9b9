"""SINR and load-shared rate for a single user."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .association import AssociationMap, UplinkPowerRule, uplink_tx_power
from .drop import DOWNLINK, UPLINK, Drop
from .propagation import dbm_to_mw


@dataclass(frozen=True)
class SinrSample:
    gamma: float
    serving: tuple[int, int]
    band: int
    signal_mw: float = math.nan
    interference_mw: float = 0.0


def _check_serving(drop: Drop, serving):
    t, j = serving
    if not (0 <= t < len(drop.tiers) and 0 <= j < len(drop.base_stations[t])):
        raise ValueError(f"no base station {serving} in this drop")


def downlink_sinr(drop: Drop, user: int, serving, noise_dbm: float) -> SinrSample:
    """Interference comes only from the serving tier's band, serving cell excluded."""
    _check_serving(drop, serving)
    t, j = serving
    tier = drop.tiers[t]
    n = len(drop.base_stations[t])
    rx = tier.tx_power_mw * drop.fading(DOWNLINK, user, t, np.arange(n)) * drop.model.factor(drop.distances(user, t))
    others = np.ones(n, dtype=bool)
    others[j] = False
    interference = float(np.sum(rx[others]))
    gamma = rx[j] / (interference + float(dbm_to_mw(noise_dbm)))
    return SinrSample(float(gamma), (t, j), tier.band, float(rx[j]), interference)


def active_uplink_users(drop: Drop, ul_map: AssociationMap, tier: int) -> np.ndarray:
    """One scheduled user per base station of ``tier`` (-1 for empty cells).

    The pick is uniform over the cell's users, driven by the drop's
    selection stream so it is reproducible.
    """
    order, starts = ul_map.members(tier)
    loads = ul_map.loads[tier]
    n = len(loads)
    u = drop.selection_uniform(tier, np.arange(n))
    pick = np.minimum((u * loads).astype(np.int64), np.maximum(loads - 1, 0))
    chosen = np.full(n, -1, dtype=np.int64)
    busy = loads > 0
    chosen[busy] = order[starts[:-1][busy] + pick[busy]]
    return chosen


def uplink_sinr(drop: Drop, user: int, serving, ul_map: AssociationMap, rule: UplinkPowerRule,
                noise_dbm: float) -> SinrSample:
    """Uplink SINR at the serving base station under truncated channel inversion.

    Interference is one active user from every other same-band cell, each
    inverting the path loss toward its own base station.
    """
    _check_serving(drop, serving)
    t, j = serving
    model = drop.model
    bs = drop.base_stations[t]
    d_own = drop.distances(user, t, j)
    p_own = dbm_to_mw(uplink_tx_power(rule, model.loss_db(d_own)))
    signal = float(p_own * drop.fading(UPLINK, user, t, j) * model.factor(d_own))

    chosen = active_uplink_users(drop, ul_map, t)
    chosen[j] = -1  # orthogonal within the serving cell
    cells = np.flatnonzero(chosen >= 0)
    interference = 0.0
    if cells.size:
        k = chosen[cells]
        upts = drop.users[k]
        d_home = np.hypot(upts[:, 0] - bs[cells, 0], upts[:, 1] - bs[cells, 1])
        p_k = dbm_to_mw(uplink_tx_power(rule, model.loss_db(d_home)))
        d_here = np.hypot(upts[:, 0] - bs[j, 0], upts[:, 1] - bs[j, 1])
        interference = float(np.sum(p_k * drop.fading(UPLINK, k, t, j) * model.factor(d_here)))
    gamma = signal / (interference + float(dbm_to_mw(noise_dbm)))
    return SinrSample(gamma, (t, j), drop.tiers[t].band, signal, interference)


def rate(gamma, load) -> float:
    """Load-shared Shannon rate in bps/Hz."""
    if load < 1:
        raise ValueError(f"load must be at least 1, got {load}")
    g = gamma.gamma if isinstance(gamma, SinrSample) else gamma
    return math.log2(1.0 + g) / load
