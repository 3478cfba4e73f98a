"""Recoil effects of optical pumping on a harmonically trapped three-level atom.

Monte Carlo sampling of completed pump trajectories in vibrational phase
space, together with the closed-form moments, photon statistics, and
moment mapping that cross-check the sampler.
"""

__version__ = "0.1.0"

from .config import PumpConfig, load_config, save_config, validate
from .dipole import DipoleCharacteristic
from .mapping import LevelMoments, VibrationalMomentSet, ground_state, map_state
from .moments import RecoilMomentSet, recoil_moments
from .photon_stats import PhotonStatistics
from .trajectory import (
    DEFAULT_SEED,
    RecoilShiftSample,
    SamplerPlan,
    TrajectoryEnsemble,
    sample_batch,
    sample_trajectory,
)
from .waiting_time import WaitingTimeModel

__all__ = [
    "DEFAULT_SEED",
    "DipoleCharacteristic",
    "LevelMoments",
    "PhotonStatistics",
    "PumpConfig",
    "RecoilMomentSet",
    "RecoilShiftSample",
    "SamplerPlan",
    "TrajectoryEnsemble",
    "VibrationalMomentSet",
    "WaitingTimeModel",
    "ground_state",
    "load_config",
    "map_state",
    "recoil_moments",
    "sample_batch",
    "sample_trajectory",
    "save_config",
    "validate",
]
