"""Monte Carlo simulator for biasing and uplink/downlink decoupling in two-tier HetNets
under single- and dual-slope path loss."""

__version__ = "0.1.0"

from .association import (
    AssociationMap,
    DownlinkPolicy,
    UplinkPolicy,
    UplinkPowerRule,
    associate_all,
    associate_downlink,
    associate_uplink,
    uplink_tx_power,
)
from .engine import DropResult, RateStats, ScenarioConfig, percentile, run_drop, run_scenario
from .geometry import PointSet, Region, SpatialIndex, distance, sample_ppp
from .linkmetrics import SinrSample, downlink_sinr, rate, uplink_sinr
from .propagation import PathLossModel, TierConfig, path_loss_factor, received_power, sample_fading
from .sweep import (
    SweepResult,
    decoupling_fraction,
    decoupling_gain_sweep,
    density_sweep,
    gain,
    joint_density_sweep,
    optimal_bias,
)
