import numpy as np
import pytest

from hetnet_sim.drop import Drop
from hetnet_sim.geometry import Region
from hetnet_sim.propagation import PathLossModel, TierConfig


class UnitFadingDrop(Drop):
    """Drop whose every link has fading gain exactly 1."""

    def fading(self, link, users, tier, bs):
        return np.ones(np.broadcast(np.asarray(users), np.asarray(bs)).shape)


def make_drop(bs_per_tier, users, model=None, powers=(46.0, 23.0), unit_fading=True, key=1, region=Region(1.0),
              shared_fading=True):
    """Hand-built drop; the last user is the tagged one."""
    tiers = tuple(TierConfig(name, 1.0, p, band) for band, (name, p) in enumerate(zip(("macro", "femto"), powers)))
    bs = tuple(np.asarray(b, dtype=float).reshape(-1, 2) for b in bs_per_tier)
    cls = UnitFadingDrop if unit_fading else Drop
    return cls(region, tiers[:len(bs)], bs, np.asarray(users, dtype=float).reshape(-1, 2),
               model or PathLossModel.single_slope(2.0), key, shared_fading)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
