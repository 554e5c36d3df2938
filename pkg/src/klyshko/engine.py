"""The classical counter-propagating experiment and the shared two-arm bench.

A Klyshko scene injects a laser into the fixed collection fiber's mode,
propagates it backward through that arm, reflects it at the crystal plane
(perfect mirror, or pump-masked reflection emulating the source), and
propagates it forward through the other arm to a camera, power meter or
scanning fiber.  By reciprocity this intensity is proportional to the pair
coincidence rate of the corresponding two-photon configuration.

:class:`TwoArmSetup` holds one bench (crystal grid, the two arm tails behind
the shared modulator plane, detector geometry) and builds either
configuration from an SLM pattern.  The modulator sits at the crystal-image
plane shared by both arms, so each photon crosses it once while the
classical beam crosses it twice, exactly as in the physical setup.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .detection import DetectorPose, SmfPose, detector_power
from .elements import Element, Mask, OpticalArm, arm_apply, make_arm
from .errors import ConfigurationError, GridMismatchError
from .grid import GridSpec, SampledField, gaussian_mode, specs_match
from .slm import SlmPattern, slm_to_mask
from .spdc import CrystalKernel, coincidence_field, crystal_apply

__all__ = [
    "Camera",
    "PowerMeter",
    "ScanningFiber",
    "KlyshkoScene",
    "klyshko_field",
    "klyshko_power",
    "klyshko_image",
    "TwoArmSetup",
]


@dataclass(frozen=True)
class Camera:
    """Intensity readout over the whole exit plane."""


@dataclass(frozen=True)
class PowerMeter:
    """Power readout through a single fiber pose."""

    pose: DetectorPose


@dataclass(frozen=True)
class ScanningFiber:
    """Power readout for a sequence of fiber poses."""

    poses: tuple[DetectorPose, ...]


Readout = Camera | PowerMeter | ScanningFiber


@dataclass(frozen=True)
class KlyshkoScene:
    """One classical advanced-wave run: source mode, two arms, reflection, readout."""

    source_mode: SampledField
    arm_back: OpticalArm
    arm_fwd: OpticalArm
    crystal: CrystalKernel
    readout: Readout = Camera()

    def __post_init__(self):
        if not specs_match(self.source_mode.spec, self.arm_back.exit_spec):
            raise GridMismatchError("source mode does not live on the backward arm's exit grid")
        if not specs_match(self.arm_back.entry_spec, self.arm_fwd.entry_spec):
            raise GridMismatchError("arms do not meet on a common crystal-plane grid")


def klyshko_field(scene: KlyshkoScene) -> SampledField:
    """Backward through one arm, reflect at the crystal plane, forward through the other."""
    g = arm_apply(scene.arm_back, scene.source_mode.conjugated(), "backward")
    h = crystal_apply(scene.crystal, g)
    return arm_apply(scene.arm_fwd, h, "forward")


def klyshko_power(scene: KlyshkoScene):
    """Fiber-coupled power at the readout pose(s)."""
    field = klyshko_field(scene)
    if isinstance(scene.readout, PowerMeter):
        return detector_power(field, scene.readout.pose)
    if isinstance(scene.readout, ScanningFiber):
        return np.array([detector_power(field, p) for p in scene.readout.poses])
    raise ConfigurationError("power readout requires a PowerMeter or ScanningFiber")


def klyshko_image(scene: KlyshkoScene) -> np.ndarray:
    """Camera intensity |field|^2 on the exit grid."""
    if not isinstance(scene.readout, Camera):
        raise ConfigurationError("image readout requires a Camera")
    return klyshko_field(scene).intensity()


@dataclass(frozen=True)
class TwoArmSetup:
    """One bench: shared modulator plane and the two arm tails behind it.

    ``arm1_tail`` and ``arm2_tail`` run from the crystal plane to the two
    detector planes (diffuser elements plus the far-field lens stage); the
    SLM mask is prepended to both when a pattern is supplied.  ``det2`` is
    the fixed single-mode fiber: it collects photon 2 in the quantum
    configuration and emits the laser in the classical one.
    """

    crystal_spec: GridSpec
    arm1_tail: tuple[Element, ...]
    arm2_tail: tuple[Element, ...]
    focal_length: float
    mirror: CrystalKernel
    source: CrystalKernel
    det2: SmfPose
    brightness: float = 1000.0

    def arm1(self, slm_mask: Mask | None = None) -> OpticalArm:
        head = (slm_mask,) if slm_mask is not None else ()
        return make_arm(head + self.arm1_tail, self.crystal_spec)

    def arm2(self, slm_mask: Mask | None = None) -> OpticalArm:
        head = (slm_mask,) if slm_mask is not None else ()
        return make_arm(head + self.arm2_tail, self.crystal_spec)

    def slm_mask(self, pattern: SlmPattern | None) -> Mask | None:
        return None if pattern is None else slm_to_mask(pattern, self.crystal_spec)

    def source_mode(self, det2_pose: SmfPose | None = None) -> SampledField:
        """The fixed fiber's Gaussian mode on arm 2's exit grid."""
        pose = det2_pose or self.det2
        return gaussian_mode(self.arm2().exit_spec, pose.waist, pose.center)

    def without_diffusers(self) -> "TwoArmSetup":
        """Same bench with every diffuser mask removed (gaps and lenses stay)."""
        strip = lambda tail: tuple(e for e in tail if not isinstance(e, Mask))
        return replace(self, arm1_tail=strip(self.arm1_tail), arm2_tail=strip(self.arm2_tail))

    # -- classical configuration -------------------------------------------------

    def klyshko_scene(
        self,
        pattern: SlmPattern | None,
        readout: Readout,
        det2_pose: SmfPose | None = None,
    ) -> KlyshkoScene:
        mask = self.slm_mask(pattern)
        return KlyshkoScene(
            self.source_mode(det2_pose), self.arm2(mask), self.arm1(mask), self.mirror, readout
        )

    def klyshko_field(self, pattern, det2_pose: SmfPose | None = None) -> SampledField:
        return klyshko_field(self.klyshko_scene(pattern, Camera(), det2_pose))

    def klyshko_power(
        self, pattern, det1_pose: DetectorPose, det2_pose: SmfPose | None = None
    ) -> float:
        return float(
            klyshko_power(self.klyshko_scene(pattern, PowerMeter(det1_pose), det2_pose))
        )

    # -- quantum configuration ---------------------------------------------------

    def coincidence_field(self, pattern, det2_pose: SmfPose | None = None) -> SampledField:
        mask = self.slm_mask(pattern)
        return coincidence_field(
            self.source, self.arm1(mask), self.arm2(mask), self.source_mode(det2_pose)
        )

    def coincidence_power(
        self, pattern, det1_pose: DetectorPose, det2_pose: SmfPose | None = None
    ) -> float:
        """|A|^2-scale coincidence signal at a detector-1 pose (no brightness)."""
        return detector_power(self.coincidence_field(pattern, det2_pose), det1_pose)

    def coincidence_rate(
        self, pattern, det1_pose: DetectorPose, det2_pose: SmfPose | None = None
    ) -> float:
        return self.brightness * self.coincidence_power(pattern, det1_pose, det2_pose)
