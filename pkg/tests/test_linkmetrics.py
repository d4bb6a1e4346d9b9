import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_drop
from hetnet_sim.association import AssociationMap, DownlinkPolicy, UplinkPolicy, UplinkPowerRule, associate_all
from hetnet_sim.drop import DOWNLINK
from hetnet_sim.engine import ScenarioConfig, realize_drop
from hetnet_sim.geometry import Region
from hetnet_sim.linkmetrics import active_uplink_users, downlink_sinr, rate, uplink_sinr
from hetnet_sim.propagation import PathLossModel

D10 = 100.0 * math.sqrt(10.0)


def test_downlink_snr_without_interferers():
    drop = make_drop([[[100.0, 0.0]]], [[0.0, 0.0]], powers=(-60.0,))
    s = downlink_sinr(drop, 0, (0, 0), -90.0)
    assert s.gamma == pytest.approx(1000.0, rel=1e-12)
    assert s.interference_mw == 0.0 and s.band == 0


def test_downlink_one_interferer():
    drop = make_drop([[[100.0, 0.0], [0.0, D10]]], [[0.0, 0.0]], powers=(-60.0,))
    s = downlink_sinr(drop, 0, (0, 0), -90.0)
    assert s.gamma == pytest.approx(1e-6 / (1e-7 + 1e-9), rel=1e-9)
    assert s.gamma == pytest.approx(9.901, abs=5e-4)


def test_downlink_out_of_band_isolation():
    femto = [[0.0, 60.0], [400.0, 0.0]]
    a = make_drop([[[50.0, 0.0]], femto], [[0.0, 0.0]], powers=(46.0, 23.0))
    b = make_drop([[[50.0, 0.0]], femto], [[0.0, 0.0]], powers=(80.0, 23.0))
    assert downlink_sinr(a, 0, (1, 0), -10.0).gamma == downlink_sinr(b, 0, (1, 0), -10.0).gamma


def test_invalid_serving_rejected():
    drop = make_drop([[[100.0, 0.0]]], [[0.0, 0.0]])
    with pytest.raises(ValueError):
        downlink_sinr(drop, 0, (0, 1), -90.0)
    with pytest.raises(ValueError):
        downlink_sinr(drop, 0, (1, 0), -90.0)


def test_rate_examples():
    assert rate(1.0, 1) == 1.0
    assert rate(9.901, 4) == 0.25 * math.log2(10.901)
    assert rate(9.901, 4) == pytest.approx(0.8616, abs=5e-5)
    assert rate(0.0, 3) == 0.0
    with pytest.raises(ValueError):
        rate(1.0, 0)


def test_rate_monotone():
    g = np.geomspace(1e-3, 1e4, 50)
    r = [rate(x, 3) for x in g]
    assert np.all(np.diff(r) > 0)
    assert all(rate(5.0, n) > rate(5.0, n + 1) for n in range(1, 20))


def _ul_map(drop, assignment):
    tier, index = zip(*assignment)
    return AssociationMap.from_assignment(tier, index, drop.bs_counts())


def test_uplink_snr_alone_in_band():
    drop = make_drop([[[100.0, 0.0]]], [[0.0, 0.0]])
    m = _ul_map(drop, [(0, 0)])
    s = uplink_sinr(drop, 0, (0, 0), m, UplinkPowerRule(-70.0, 20.0), -90.0)
    assert s.gamma == pytest.approx(100.0, rel=1e-12)  # received exactly at -70 dBm


def test_uplink_two_cell_hand_formula():
    # tagged user 100 m from its cell; the other cell's user 100 m from its own, 1000 m from ours
    bs = [[[100.0, 0.0], [-1000.0, 0.0]]]
    users = [[-900.0, 0.0], [0.0, 0.0]]
    drop = make_drop(bs, users)
    m = _ul_map(drop, [(0, 1), (0, 0)])
    s = uplink_sinr(drop, 1, (0, 0), m, UplinkPowerRule(-70.0, 20.0), -90.0)
    signal = 10 ** (-70 / 10)
    interference = 10 ** (-70 / 10) * (1000.0 / 100.0) ** -2
    assert s.gamma == pytest.approx(signal / (interference + 10 ** (-90 / 10)), rel=1e-12)
    assert s.gamma == pytest.approx(50.0, rel=1e-12)


def test_uplink_truncated_user_lands_below_target():
    drop = make_drop([[[1000.0, 0.0]]], [[0.0, 0.0]])
    m = _ul_map(drop, [(0, 0)])
    rule = UplinkPowerRule(-70.0, -60.0)  # needs -50 dBm, capped at -60
    s = uplink_sinr(drop, 0, (0, 0), m, rule, -90.0)
    assert 10 * math.log10(s.signal_mw) == pytest.approx(-80.0)
    assert s.signal_mw < 10 ** (-70 / 10)


def test_active_users_empty_cells_and_range():
    drop = make_drop([[[100.0, 0.0], [-100.0, 0.0], [0.0, 500.0]]], [[1.0, 0.0], [2.0, 0.0], [-90.0, 0.0]],
                     unit_fading=False)
    m = _ul_map(drop, [(0, 0), (0, 0), (0, 1)])
    chosen = active_uplink_users(drop, m, 0)
    assert chosen[0] in (0, 1) and chosen[1] == 2 and chosen[2] == -1


def _random_drop(seed, femto=10.0):
    cfg = ScenarioConfig(region=Region(1.0), master_seed=seed).with_densities(1.0, femto)
    return realize_drop(cfg, 0)[0]


def test_sinr_ignores_other_tier_power_on_random_drops():
    for seed in range(5):
        drop = _random_drop(seed)
        for t in range(2):
            if len(drop.base_stations[t]) == 0:
                continue
            other = replace(drop, tiers=tuple(replace(x, tx_power_dbm=x.tx_power_dbm + (10.0 if i != t else 0.0))
                                              for i, x in enumerate(drop.tiers)))
            assert downlink_sinr(drop, drop.tagged, (t, 0), -10.0).gamma == \
                downlink_sinr(other, drop.tagged, (t, 0), -10.0).gamma


def test_removing_an_interferer_never_lowers_sinr():
    for seed in range(5):
        drop = _random_drop(seed, femto=30.0)
        pts = drop.base_stations[1]
        if len(pts) < 3:
            continue
        base = downlink_sinr(drop, drop.tagged, (1, 0), -10.0).gamma
        # drop the last femto; the serving one (index 0) keeps its index and fading key
        fewer = replace(drop, base_stations=(drop.base_stations[0], pts[:-1]))
        assert downlink_sinr(fewer, drop.tagged, (1, 0), -10.0).gamma >= base


def test_interference_sum_order_independent():
    drop = _random_drop(7, femto=100.0)
    u = drop.tagged
    s = downlink_sinr(drop, u, (1, 0), -10.0)
    n = len(drop.base_stations[1])
    rx = drop.tiers[1].tx_power_mw * drop.fading(DOWNLINK, u, 1, np.arange(n)) * drop.model.factor(drop.distances(u, 1))
    assert math.fsum(np.sort(rx[1:])) == pytest.approx(s.interference_mw, rel=1e-9)


def test_uplink_sinr_on_random_drop_is_finite():
    drop = _random_drop(2)
    dl, ul = associate_all(drop, DownlinkPolicy(), UplinkPolicy.DECOUPLED)
    s = uplink_sinr(drop, drop.tagged, ul.serving(drop.tagged), ul, UplinkPowerRule(), -10.0)
    assert s.gamma >= 0 and math.isfinite(s.gamma)
