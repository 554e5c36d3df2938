"""Fiber-coupled detection and photon-counting statistics.

Single-mode fibers project onto their Gaussian mode; multimode fibers act as
incoherent buckets over the core disk (pixel-center membership, bit-stable).
Counting uses Poisson draws with an explicit stream id so concurrent scans
can partition streams deterministically, and accidental coincidences are
subtracted with the standard singles1 * singles2 * window estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SamplingError
from .grid import SampledField, gaussian_mode, overlap

__all__ = [
    "SmfPose",
    "MmfPose",
    "DetectorPose",
    "NoiseConfig",
    "smf_power",
    "mmf_power",
    "detector_power",
    "sample_counts",
    "corrected_coincidences",
    "accidental_rate",
]


@dataclass(frozen=True)
class SmfPose:
    """Single-mode fiber: Gaussian mode of the given waist [m] at center [m]."""

    center: tuple[float, float] | float
    waist: float

    def __post_init__(self):
        if not (self.waist > 0):
            raise ConfigurationError("SMF waist must be positive")


@dataclass(frozen=True)
class MmfPose:
    """Multimode fiber: bucket detector over a core disk of the given diameter [m]."""

    center: tuple[float, float] | float
    core_diameter: float

    def __post_init__(self):
        if not (self.core_diameter > 0):
            raise ConfigurationError("MMF core diameter must be positive")


DetectorPose = SmfPose | MmfPose


@dataclass(frozen=True)
class NoiseConfig:
    """Photon-counting configuration for coincidence measurements."""

    integration_time: float  # [s]
    singles_rate_1: float = 0.0  # [counts/s]
    singles_rate_2: float = 0.0  # [counts/s]
    coincidence_window: float = 2e-9  # [s]
    brightness: float = 1000.0  # [counts/s per unit |A|^2]
    seed: int = 0

    def __post_init__(self):
        if min(self.integration_time, self.singles_rate_1, self.singles_rate_2) < 0:
            raise ConfigurationError("noise rates and integration time must be >= 0")
        if self.coincidence_window < 0:
            raise ConfigurationError("coincidence window must be >= 0")
        if 0 < self.integration_time <= self.coincidence_window:
            raise ConfigurationError("coincidence window must be well below integration time")


def _pose_xy(center, is_1d: bool) -> tuple[float, float]:
    if np.isscalar(center):
        return float(center), 0.0
    cx, cy = center
    if is_1d and cy != 0.0:
        raise ConfigurationError("y pose components are meaningless on a 1-D grid")
    return float(cx), float(cy)


def _check_on_grid(field: SampledField, cx: float, cy: float):
    spec = field.spec
    if abs(cx) > spec.extent_x / 2 or (not spec.is_1d and abs(cy) > spec.extent_y / 2):
        raise ConfigurationError(
            f"detector center ({cx:g}, {cy:g}) m lies outside the grid extent"
        )


def smf_power(field: SampledField, pose: SmfPose) -> float:
    """|<mode, field>|^2 with the pose's unit Gaussian mode."""
    cx, cy = _pose_xy(pose.center, field.spec.is_1d)
    _check_on_grid(field, cx, cy)
    mode = gaussian_mode(field.spec, pose.waist, (cx, cy) if not field.spec.is_1d else cx)
    return abs(overlap(mode, field)) ** 2


def disk_mask(field: SampledField, pose: MmfPose) -> np.ndarray:
    """Boolean pixel-center membership mask of the core disk."""
    cx, cy = _pose_xy(pose.center, field.spec.is_1d)
    _check_on_grid(field, cx, cy)
    X, Y = field.spec.mesh()
    return (X - cx) ** 2 + (Y - cy) ** 2 <= (pose.core_diameter / 2.0) ** 2


def mmf_power(field: SampledField, pose: MmfPose) -> float:
    """Total power sum(|a|^2) * pitch^2 over pixels inside the core disk."""
    if pose.core_diameter < 4.0 * field.spec.pitch:
        raise SamplingError(
            f"MMF core {pose.core_diameter:g} m under-resolved "
            f"(need >= 4 pixels at pitch {field.spec.pitch:g} m)"
        )
    mask = disk_mask(field, pose)
    return float(np.sum(field.intensity()[mask]) * field.spec.cell_area)


def detector_power(field: SampledField, pose: DetectorPose) -> float:
    """Dispatch to the SMF projection or MMF bucket for the pose kind."""
    if isinstance(pose, SmfPose):
        return smf_power(field, pose)
    return mmf_power(field, pose)


def _stream_rng(cfg: NoiseConfig, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([cfg.seed & (2**64 - 1), int(stream)]))
    )


def sample_counts(mean_rate: float, cfg: NoiseConfig, stream: int = 0) -> int:
    """Poisson draw with mean rate * integration time, deterministic per stream."""
    if mean_rate < 0:
        raise ConfigurationError("mean rate must be >= 0")
    return int(_stream_rng(cfg, stream).poisson(mean_rate * cfg.integration_time))


def accidental_rate(cfg: NoiseConfig) -> float:
    """Random-coincidence background singles1 * singles2 * window [counts/s]."""
    return cfg.singles_rate_1 * cfg.singles_rate_2 * cfg.coincidence_window


def corrected_coincidences(
    true_rate: float, cfg: NoiseConfig | None, stream: int = 0
) -> float:
    """Accidental-corrected coincidence rate estimate [counts/s].

    Draws raw counts at the true-plus-accidental rate and subtracts the
    accidental estimate; the result may be negative and is not clamped, so
    the estimator stays unbiased.  Without a noise configuration the true
    rate is returned unchanged.
    """
    if cfg is None:
        return true_rate
    acc = accidental_rate(cfg)
    raw = sample_counts(true_rate + acc, cfg, stream)
    return raw / cfg.integration_time - acc
