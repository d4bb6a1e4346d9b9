"""Self-checks run by ``hetsim validate``: exactness and oracle equivalence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .association import (
    DownlinkPolicy,
    UplinkPolicy,
    associate_all,
    best_candidates,
    downlink_map,
)
from .drop import DOWNLINK, UPLINK, Drop
from .engine import ScenarioConfig, realize_drop
from .geometry import Region, SpatialIndex
from .linkmetrics import rate
from .propagation import PathLossModel, dbm_to_mw, mw_to_dbm

TABLE_PAIRS = ((2.0, 2.0), (2.0, 4.0), (3.0, 3.0), (3.0, 4.0))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def brute_force_maps(drop: Drop, policy: DownlinkPolicy):
    """Downlink and decoupled-uplink (tier, index) for every user by exhaustive scan."""
    n = drop.n_users
    users = np.arange(n)
    dl_score = np.full(n, -np.inf)
    ul_score = np.full(n, -np.inf)
    dl = np.zeros((2, n), dtype=np.int64)
    ul = np.zeros((2, n), dtype=np.int64)
    for t, pts in enumerate(drop.base_stations):
        if len(pts) == 0:
            continue
        j = np.arange(len(pts))
        d = np.hypot(drop.users[:, None, 0] - pts[None, :, 0], drop.users[:, None, 1] - pts[None, :, 1])
        pl = drop.model.factor(d)
        w = drop.tiers[t].tx_power_mw * 10.0 ** (policy.bias_db(t) / 10.0)
        for link, score, out, weight in ((DOWNLINK, dl_score, dl, w), (UPLINK, ul_score, ul, 1.0)):
            g = weight * pl * drop.fading(link, users[:, None], t, j[None, :])
            k = np.argmax(g, axis=1)
            v = g[users, k]
            better = v > score
            score[better] = v[better]
            out[0, better] = t
            out[1, better] = k[better]
    return dl, ul


def check_continuity(rtol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for a0, a1 in TABLE_PAIRS:
        m = PathLossModel.dual_slope(a0, a1)
        near, far = m.near_branch(m.critical_radius), m.far_branch(m.critical_radius)
        worst = max(worst, abs(near - far) / abs(near))
    return CheckResult("dual-slope continuity at critical radius", bool(worst <= rtol), f"max rel diff {worst:.3g}")


def check_equal_exponents() -> CheckResult:
    x = np.geomspace(1.0, 2e4, 2001)
    ok = all(np.array_equal(PathLossModel.dual_slope(a, a).factor(x), PathLossModel.single_slope(a).factor(x))
             for a in (2.0, 3.0, 4.0))
    return CheckResult("dual-slope [a,a] equals single-slope a", ok)


def check_monotone() -> CheckResult:
    x = np.geomspace(1.0, 2e4, 5001)
    ok = all(np.all(np.diff(PathLossModel.dual_slope(a0, a1).factor(x)) <= 0) for a0, a1 in TABLE_PAIRS)
    return CheckResult("path loss non-increasing in distance", ok)


def check_rate_spot_values() -> CheckResult:
    ok = rate(1.0, 1) == 1.0 and rate(0.0, 7) == 0.0 and abs(rate(9.901, 4) - 0.25 * math.log2(10.901)) < 1e-15
    return CheckResult("rate formula spot values", ok)


def check_db_round_trip() -> CheckResult:
    mw = np.geomspace(1e-15, 1e6, 1000)
    err = float(np.max(np.abs(dbm_to_mw(mw_to_dbm(mw)) / mw - 1.0)))
    return CheckResult("dBm/mW round trip", err <= 1e-9, f"max rel err {err:.3g}")


def _small_config(femto_density, model, seed, shared_fading=True):
    base = ScenarioConfig(region=Region(1.0), path_loss=model, master_seed=seed, shared_fading=shared_fading)
    return base.with_densities(macro=1.0, femto=femto_density)


def check_argmax_shift(n_drops: int = 20, seed: int = 7) -> CheckResult:
    bad = 0
    for i in range(n_drops):
        drop, _ = realize_drop(_small_config(10.0, PathLossModel.dual_slope(2.0, 4.0), seed), i)
        best = best_candidates(drop)
        ref = downlink_map(drop, best, DownlinkPolicy((0.0, 0.0)))
        for shift in (3.0, -7.5, 12.0):
            if not downlink_map(drop, best, DownlinkPolicy((shift, shift))).equals(ref):
                bad += 1
    return CheckResult("association invariant under common bias shift", bad == 0, f"{bad} mismatching maps")


def check_spatial_index(n_configs: int = 50, seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    region = Region(1.0)
    bad = 0
    for _ in range(n_configs):
        pts = rng.uniform(-1000, 1000, size=(rng.integers(0, 400), 2))
        idx = SpatialIndex(pts, region, rng.uniform(20, 600))
        c = rng.uniform(-1000, 1000, size=2)
        r = rng.uniform(0, 1500)
        scan = np.flatnonzero(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= r)
        if not np.array_equal(idx.neighbors_within(c, r), scan):
            bad += 1
    return CheckResult("spatial index range query equals linear scan", bad == 0, f"{bad}/{n_configs} differ")


def check_association_oracle(n_drops: int = 100, densities=(1.0, 10.0, 100.0), seed: int = 3) -> CheckResult:
    bad = total = 0
    models = (PathLossModel.single_slope(2.0), PathLossModel.single_slope(3.0), PathLossModel.dual_slope(2.0, 4.0))
    for lam in densities:
        for i in range(n_drops):
            model = models[i % len(models)]
            drop, _ = realize_drop(_small_config(lam, model, seed, shared_fading=i % 2 == 0), i)
            policy = DownlinkPolicy((0.0, float(i % 13)))
            dl_map, ul_map = associate_all(drop, policy, UplinkPolicy.DECOUPLED)
            dl, ul = brute_force_maps(drop, policy)
            total += 1
            if not (np.array_equal(dl_map.tier, dl[0]) and np.array_equal(dl_map.index, dl[1])
                    and np.array_equal(ul_map.tier, ul[0]) and np.array_equal(ul_map.index, ul[1])):
                bad += 1
    return CheckResult("indexed association equals brute force", bad == 0, f"{bad}/{total} drops differ")


def run_all(quick: bool = False) -> list[CheckResult]:
    n = 20 if quick else 100
    return [
        check_continuity(),
        check_equal_exponents(),
        check_monotone(),
        check_rate_spot_values(),
        check_db_round_trip(),
        check_argmax_shift(),
        check_spatial_index(),
        check_association_oracle(n),
    ]
