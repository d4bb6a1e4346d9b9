"""Bias optimization and density sweeps built on common random numbers.

Every bias value of a sweep point is evaluated on the same drops, so only
the association decisions differ between grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .association import UplinkPolicy
from .engine import FEMTO, RateStats, ScenarioConfig, evaluate_policies

CSV_COLUMNS = [
    "femto_density_per_km2", "macro_density_per_km2", "pl_model", "alpha0", "alpha1",
    "optimal_bias_dB", "dl_p10_gain", "dl_p50_gain", "dl_p90_gain",
    "ul_coupled_p50", "ul_decoupled_p50", "ul_bias_gain", "ul_decoupling_gain",
    "mismatch_frac_nobias", "mismatch_frac_optbias", "femto_assoc_frac", "n_drops", "seed",
    # dB views of the linear gains above
    "dl_p10_gain_dB", "dl_p50_gain_dB", "dl_p90_gain_dB", "ul_bias_gain_dB", "ul_decoupling_gain_dB",
]


def default_bias_grid(top_db: float = 12.0, step_db: float = 1.0) -> tuple[float, ...]:
    n = int(round(top_db / step_db))
    return tuple(float(i * step_db) for i in range(n + 1))


def default_femto_densities(n: int = 8) -> tuple[float, ...]:
    return tuple(float(x) for x in np.logspace(-1.0, 2.5, n))


def check_grid(grid) -> tuple[float, ...]:
    grid = tuple(float(b) for b in grid)
    if not grid:
        raise ValueError("bias grid is empty")
    if not all(math.isfinite(b) for b in grid):
        raise ValueError("bias grid values must be finite")
    if any(b >= a for a, b in zip(grid[1:], grid)):
        raise ValueError("bias grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class Gain:
    ratio: float

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.ratio)


def gain(metric_with: float, metric_without: float) -> Gain:
    if not metric_without > 0:
        raise ValueError(f"baseline must be positive, got {metric_without}")
    return Gain(metric_with / metric_without)


def decoupling_fraction(results) -> float:
    """Share of drops whose uplink and downlink serving cells differ."""
    flags = [r.mismatch for r in results]
    if not flags:
        raise ValueError("no drop results")
    return float(np.mean(flags))


@dataclass(frozen=True, eq=False)
class BiasEvaluation:
    """Per-drop tagged-user outcomes for every femto bias of a grid.

    Arrays are shaped ``(n_biases, n_drops)`` except ``ul_decoupled``,
    which does not depend on the downlink bias.
    """

    config: ScenarioConfig
    biases: np.ndarray
    dl: np.ndarray
    ul_coupled: np.ndarray
    ul_decoupled: np.ndarray
    mismatch: np.ndarray
    femto: np.ndarray
    resamples: int

    @classmethod
    def run(cls, config: ScenarioConfig, grid=None, workers: int = 1) -> "BiasEvaluation":
        grid = check_grid(default_bias_grid() if grid is None else grid)
        res = evaluate_policies(config, [config.femto_policy(b) for b in grid], workers)

        def arr(attr):
            return np.array([[getattr(d, attr) for d in row] for row in res])

        return cls(
            config, np.array(grid), arr("dl_rate"), arr("ul_rate_coupled"),
            np.array([d.ul_rate_decoupled for d in res[0]]), arr("mismatch"),
            np.array([[d.dl_tier == FEMTO for d in row] for row in res]),
            sum(d.resamples for d in res[0]),
        )

    @property
    def n_drops(self) -> int:
        return self.dl.shape[1]

    def optimal_index(self, q: float = 50.0) -> int:
        # argmax returns the first maximum: ties go to the smaller bias
        return int(np.argmax(np.percentile(self.dl, q, axis=1)))

    def index_of(self, bias_db: float) -> int:
        hits = np.flatnonzero(self.biases == bias_db)
        if not hits.size:
            raise KeyError(f"bias {bias_db} dB not in grid")
        return int(hits[0])


def optimal_bias(config: ScenarioConfig, grid=None, q: float = 50.0, workers: int = 1):
    """Grid bias maximizing the ``q``-th percentile downlink rate, and that rate."""
    ev = BiasEvaluation.run(config, grid, workers)
    i = ev.optimal_index(q)
    return float(ev.biases[i]), float(np.percentile(ev.dl[i], q))


@dataclass(frozen=True, eq=False)
class SweepPoint:
    femto_density: float
    macro_density: float
    config: ScenarioConfig
    optimal_bias_db: float
    dl_nobias: RateStats
    dl_optbias: RateStats
    dl_gains: tuple[Gain, Gain, Gain]
    ul_coupled_p50_nobias: float
    ul_coupled_p50: float
    ul_decoupled_p50: float
    ul_bias_gain: Gain
    ul_decoupling_gain: Gain
    mismatch_nobias: float
    mismatch_optbias: float
    femto_assoc_frac: float
    n_drops: int
    evaluation: BiasEvaluation | None = field(default=None, repr=False)

    @classmethod
    def from_evaluation(cls, ev: BiasEvaluation, q: float = 50.0, keep: bool = True) -> "SweepPoint":
        cfg = ev.config
        i0 = ev.index_of(0.0)
        i = ev.optimal_index(q)
        no, opt = RateStats.from_samples(ev.dl[i0]), RateStats.from_samples(ev.dl[i])
        ulc0, ulc = np.median(ev.ul_coupled[i0]), np.median(ev.ul_coupled[i])
        uld = np.median(ev.ul_decoupled)
        return cls(
            femto_density=cfg.femto_density,
            macro_density=cfg.macro_density,
            config=cfg,
            optimal_bias_db=float(ev.biases[i]),
            dl_nobias=no,
            dl_optbias=opt,
            dl_gains=(gain(opt.p10, no.p10), gain(opt.p50, no.p50), gain(opt.p90, no.p90)),
            ul_coupled_p50_nobias=float(ulc0),
            ul_coupled_p50=float(ulc),
            ul_decoupled_p50=float(uld),
            ul_bias_gain=gain(ulc, ulc0),
            ul_decoupling_gain=gain(uld, ulc),
            mismatch_nobias=float(ev.mismatch[i0].mean()),
            mismatch_optbias=float(ev.mismatch[i].mean()),
            femto_assoc_frac=float(ev.femto[i0].mean()),
            n_drops=ev.n_drops,
            evaluation=ev if keep else None,
        )

    def row(self) -> dict:
        pl = self.config.path_loss
        g10, g50, g90 = self.dl_gains
        return {
            "femto_density_per_km2": self.femto_density,
            "macro_density_per_km2": self.macro_density,
            "pl_model": "dual" if pl.is_dual else "single",
            "alpha0": pl.alpha0,
            "alpha1": pl.alpha1,
            "optimal_bias_dB": self.optimal_bias_db,
            "dl_p10_gain": g10.ratio,
            "dl_p50_gain": g50.ratio,
            "dl_p90_gain": g90.ratio,
            "ul_coupled_p50": self.ul_coupled_p50,
            "ul_decoupled_p50": self.ul_decoupled_p50,
            "ul_bias_gain": self.ul_bias_gain.ratio,
            "ul_decoupling_gain": self.ul_decoupling_gain.ratio,
            "mismatch_frac_nobias": self.mismatch_nobias,
            "mismatch_frac_optbias": self.mismatch_optbias,
            "femto_assoc_frac": self.femto_assoc_frac,
            "n_drops": self.n_drops,
            "seed": self.config.master_seed,
            "dl_p10_gain_dB": g10.db,
            "dl_p50_gain_dB": g50.db,
            "dl_p90_gain_dB": g90.db,
            "ul_bias_gain_dB": self.ul_bias_gain.db,
            "ul_decoupling_gain_dB": self.ul_decoupling_gain.db,
        }


@dataclass(frozen=True, eq=False)
class SweepResult:
    variable: str
    values: tuple[float, ...]
    points: list[SweepPoint]

    def rows(self) -> list[dict]:
        return [p.row() for p in self.points]

    def curve(self, attr: str) -> np.ndarray:
        out = []
        for p in self.points:
            v = getattr(p, attr)
            out.append(v.ratio if isinstance(v, Gain) else v)
        return np.array(out)


def _with_zero(grid):
    grid = check_grid(default_bias_grid() if grid is None else grid)
    return grid if 0.0 in grid else check_grid(sorted(grid + (0.0,)))


def density_sweep(base: ScenarioConfig, femto_densities, grid=None, q: float = 50.0,
                  workers: int = 1, keep: bool = True) -> SweepResult:
    """Optimal-bias gains against femto density at the base macro density."""
    dens = tuple(float(x) for x in femto_densities)
    if any(not d > 0 for d in dens):
        raise ValueError("femto densities must be positive")
    grid = _with_zero(grid)
    points = [SweepPoint.from_evaluation(BiasEvaluation.run(base.with_densities(femto=d), grid, workers), q, keep)
              for d in dens]
    return SweepResult("femto_density_per_km2", dens, points)


def joint_density_sweep(base: ScenarioConfig, macro_densities, ratio: float, grid=None, q: float = 50.0,
                        workers: int = 1, keep: bool = True) -> SweepResult:
    """Both tiers scaled together at ``ratio`` femto cells per macro cell."""
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    dens = tuple(float(x) for x in macro_densities)
    if any(not d > 0 for d in dens):
        raise ValueError("macro densities must be positive")
    grid = _with_zero(grid)
    points = [SweepPoint.from_evaluation(
        BiasEvaluation.run(base.with_densities(macro=m, femto=ratio * m), grid, workers), q, keep) for m in dens]
    return SweepResult("macro_density_per_km2", dens, points)


def decoupling_gain_sweep(base: ScenarioConfig, femto_densities, grid=None, workers: int = 1,
                          keep: bool = True) -> SweepResult:
    """Uplink gains of optimal downlink bias and of decoupling, plus mismatch fractions."""
    return density_sweep(replace(base, uplink=UplinkPolicy.DECOUPLED), femto_densities, grid, 50.0, workers, keep)


def _median_ratio(a, b, axis=-1):
    return np.median(a, axis=axis) / np.median(b, axis=axis)


def bootstrap_ci(statistic, *samples, confidence: float = 0.95, n_resamples: int = 2000, seed: int = 0):
    """Paired percentile bootstrap interval for ``statistic(*samples, axis)``."""
    res = stats.bootstrap(samples, statistic, paired=True, vectorized=True, confidence_level=confidence,
                          n_resamples=n_resamples, method="percentile", random_state=np.random.default_rng(seed),
                          batch=200)
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


def gain_ci(with_, without, q: float = 50.0, **kw):
    """Bootstrap interval of the percentile-rate ratio of two paired samples."""
    def stat(a, b, axis=-1):
        return np.percentile(a, q, axis=axis) / np.percentile(b, q, axis=axis)
    return bootstrap_ci(stat, np.asarray(with_), np.asarray(without), **kw)
