"""Seeded Monte Carlo drops measured at the tagged origin user."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .association import (
    DEFAULT_FADING_CAP,
    DownlinkPolicy,
    UplinkPolicy,
    UplinkPowerRule,
    best_candidates,
    decoupled_uplink_map,
    downlink_map,
)
from .drop import Drop, sample_drop
from .geometry import Region
from .linkmetrics import downlink_sinr, rate, uplink_sinr
from .propagation import PathLossModel, TierConfig

MACRO, FEMTO = 0, 1
MAX_RESAMPLES = 10_000


def default_tiers(macro_density: float = 1.0, femto_density: float = 10.0):
    return (TierConfig("macro", macro_density, 46.0, 0), TierConfig("femto", femto_density, 23.0, 1))


@dataclass(frozen=True)
class ScenarioConfig:
    region: Region = Region(10.0)
    tiers: tuple[TierConfig, ...] = field(default_factory=default_tiers)
    user_density: float = 200.0
    path_loss: PathLossModel = PathLossModel.single_slope(3.0)
    noise_dbm: float = -10.0
    downlink: DownlinkPolicy = DownlinkPolicy()
    uplink: UplinkPolicy = UplinkPolicy.DECOUPLED
    power_rule: UplinkPowerRule = UplinkPowerRule()
    n_drops: int = 2000
    master_seed: int = 0
    # one channel value per user/base-station pair, used on both links
    shared_fading: bool = True
    fading_cap: float = DEFAULT_FADING_CAP

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        object.__setattr__(self, "uplink", UplinkPolicy(self.uplink))
        if not self.tiers:
            raise ValueError("at least one tier is required")
        # one explicit bias per tier so equal policies compare equal
        biases = tuple(float(self.downlink.bias_db(i)) for i in range(len(self.tiers)))
        object.__setattr__(self, "downlink", DownlinkPolicy(biases))
        if not (self.user_density >= 0 and math.isfinite(self.user_density)):
            raise ValueError("user_density must be a non-negative number")
        if not math.isfinite(self.noise_dbm):
            raise ValueError("noise_dbm must be finite")
        if int(self.n_drops) != self.n_drops or self.n_drops < 1:
            raise ValueError("n_drops must be a positive integer")
        if int(self.master_seed) != self.master_seed or not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be an integer in [0, 2**64)")
        if not self.fading_cap > 0:
            raise ValueError("fading_cap must be positive")

    @property
    def macro_density(self) -> float:
        return self.tiers[MACRO].density

    @property
    def femto_density(self) -> float:
        return self.tiers[FEMTO].density

    def with_densities(self, macro: float | None = None, femto: float | None = None) -> "ScenarioConfig":
        tiers = list(self.tiers)
        if macro is not None:
            tiers[MACRO] = replace(tiers[MACRO], density=float(macro))
        if femto is not None:
            tiers[FEMTO] = replace(tiers[FEMTO], density=float(femto))
        return replace(self, tiers=tuple(tiers))

    def with_femto_bias(self, bias_db: float) -> "ScenarioConfig":
        return replace(self, downlink=self.femto_policy(bias_db))

    def femto_policy(self, bias_db: float) -> DownlinkPolicy:
        biases = [self.downlink.bias_db(i) for i in range(len(self.tiers))]
        biases[FEMTO] = float(bias_db)
        return DownlinkPolicy(tuple(biases))


@dataclass(frozen=True)
class DropResult:
    drop_index: int
    bias_db: float
    dl_rate: float
    ul_rate_coupled: float
    ul_rate_decoupled: float
    dl_serving: tuple[int, int]
    ul_serving: tuple[int, int]
    mismatch: bool
    dl_sinr: float
    dl_load: int
    ul_load_coupled: int
    ul_load_decoupled: int
    resamples: int = 0

    @property
    def dl_tier(self) -> int:
        return self.dl_serving[0]


@dataclass(frozen=True)
class RateStats:
    p10: float
    p50: float
    p90: float
    count: int

    @classmethod
    def from_samples(cls, samples):
        return cls(percentile(samples, 10), percentile(samples, 50), percentile(samples, 90), len(samples))


def percentile(samples, q: float) -> float:
    """Linear interpolation between closest ranks."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("percentile of empty sample")
    if not 0 <= q <= 100:
        raise ValueError(f"q must be in [0, 100], got {q}")
    return float(np.percentile(x, q, method="linear"))


def drop_seeds(master_seed: int, drop_index: int, attempt: int = 0):
    """Independent geometry generator and fading key for one drop attempt."""
    geo = np.random.SeedSequence(master_seed, spawn_key=(drop_index, attempt, 0))
    fad = np.random.SeedSequence(master_seed, spawn_key=(drop_index, attempt, 1))
    return np.random.default_rng(geo), int(fad.generate_state(1, np.uint64)[0])


def realize_drop(config: ScenarioConfig, drop_index: int) -> tuple[Drop, int]:
    """Sample a drop, resampling on a fresh substream while it has no base station."""
    for attempt in range(MAX_RESAMPLES):
        rng, key = drop_seeds(config.master_seed, drop_index, attempt)
        drop = sample_drop(config.region, config.tiers, config.user_density, config.path_loss, rng, key,
                           config.shared_fading)
        if drop.n_bs > 0:
            return drop, attempt
    raise RuntimeError(f"drop {drop_index}: no base station after {MAX_RESAMPLES} attempts")


def evaluate_drop(config: ScenarioConfig, drop_index: int, policies) -> list[DropResult]:
    """Tagged-user results for one drop under each downlink policy.

    Every policy sees the same base stations, users and fading.
    """
    drop, resamples = realize_drop(config, drop_index)
    best = best_candidates(drop, config.fading_cap)
    user = drop.tagged
    noise, rule = config.noise_dbm, config.power_rule

    ul_map = decoupled_uplink_map(drop, best)
    ud = ul_map.serving(user)
    ul_dec = rate(uplink_sinr(drop, user, ud, ul_map, rule, noise), ul_map.load(ud))

    dl_cache = {}
    out = []
    for policy in policies:
        dl_map = downlink_map(drop, best, policy)
        s = dl_map.serving(user)
        if s not in dl_cache:
            dl_cache[s] = downlink_sinr(drop, user, s, noise).gamma
        gamma = dl_cache[s]
        load = dl_map.load(s)
        ul_cpl = rate(uplink_sinr(drop, user, s, dl_map, rule, noise), load)
        ul_s = s if config.uplink is UplinkPolicy.COUPLED else ud
        out.append(DropResult(
            drop_index=drop_index,
            bias_db=policy.bias_db(FEMTO) if len(config.tiers) > FEMTO else 0.0,
            dl_rate=rate(gamma, load),
            ul_rate_coupled=ul_cpl,
            ul_rate_decoupled=ul_dec,
            dl_serving=s,
            ul_serving=ul_s,
            mismatch=ul_s != s,
            dl_sinr=gamma,
            dl_load=load,
            ul_load_coupled=load,
            ul_load_decoupled=ul_map.load(ud),
            resamples=resamples,
        ))
    return out


def run_drop(config: ScenarioConfig, drop_index: int) -> DropResult:
    return evaluate_drop(config, drop_index, [config.downlink])[0]


def _evaluate_chunk(args):
    config, indices, policies = args
    return [evaluate_drop(config, i, policies) for i in indices]


def evaluate_policies(config: ScenarioConfig, policies, workers: int = 1, drop_indices=None):
    """Results indexed ``[policy][drop]``, identical for any worker count."""
    policies = list(policies)
    indices = list(range(config.n_drops)) if drop_indices is None else list(drop_indices)
    if workers <= 1 or len(indices) < 2:
        per_drop = _evaluate_chunk((config, indices, policies))
    else:
        n_chunks = min(len(indices), 4 * workers)
        chunks = [indices[i::n_chunks] for i in range(n_chunks)]
        keyed = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk, res in zip(chunks, pool.map(_evaluate_chunk, [(config, c, policies) for c in chunks])):
                keyed.update(zip(chunk, res))
        per_drop = [keyed[i] for i in indices]
    return [[d[p] for d in per_drop] for p in range(len(policies))]


@dataclass(frozen=True)
class ScenarioResult:
    drops: list
    dl: RateStats
    ul_coupled: RateStats
    ul_decoupled: RateStats
    mismatch_fraction: float
    resamples: int

    @classmethod
    def from_drops(cls, drops):
        drops = list(drops)
        return cls(
            drops,
            RateStats.from_samples([d.dl_rate for d in drops]),
            RateStats.from_samples([d.ul_rate_coupled for d in drops]),
            RateStats.from_samples([d.ul_rate_decoupled for d in drops]),
            float(np.mean([d.mismatch for d in drops])),
            sum(d.resamples for d in drops),
        )


def run_scenario(config: ScenarioConfig, workers: int = 1) -> ScenarioResult:
    drops = evaluate_policies(config, [config.downlink], workers)[0]
    return ScenarioResult.from_drops(drops)
