"""Memory-effect scanning, the sinh ratio model, and one-parameter fitting.

The tilt-correlation range of a thick medium is quantified by tracking an
optimized focus while the fixed detector (or classical source) is rotated by
delta-theta and the probe detector counter-rotates by the same amount, as the
transverse anti-correlation of the pair dictates.  Normalized tracking ratios
are fitted to

    I(dt) / I(0) = [ (dt/theta0) / sinh(dt/theta0) ]^2

by a one-parameter least square (golden-section search refined parabolically),
with the uncertainty taken from the curvature of the residual at the optimum.

A co-propagating single-pass beacon through the same diffuser is provided as
the reference configuration: it tilts with the illumination and its focus
tracks at +delta-theta, with a broader memory range than the counter-
propagating beam, which crosses scattering layers on both passes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .detection import DetectorPose, detector_power
from .elements import arm_apply, make_arm
from .engine import TwoArmSetup
from .errors import ConfigurationError, FitError
from .grid import gaussian_mode
from .optimize import OptimizationTrace, optimize_cost_function
from .slm import SlmPattern

__all__ = [
    "MemoryScan",
    "MemoryFit",
    "memory_model",
    "shift_pose",
    "memory_scan",
    "fit_memory",
    "beacon_power",
    "beacon_memory_scan",
    "optimize_beacon",
]


def memory_model(delta_theta, theta0: float):
    """Tilt-correlation ratio [(dt/t0)/sinh(dt/t0)]^2, with the limit 1 at 0."""
    if not (theta0 > 0):
        raise ConfigurationError("theta0 must be positive")
    x = np.abs(np.asarray(delta_theta, dtype=float)) / theta0
    small = x < 1e-8
    safe = np.where(small, 1.0, x)
    ratio = np.where(small, 1.0, safe / np.sinh(safe))
    out = ratio**2
    return float(out) if np.isscalar(delta_theta) else out


@dataclass(frozen=True)
class MemoryScan:
    """Normalized tracking ratios I(dt)/I(0) for a list of tilts [rad]."""

    delta_thetas: tuple[float, ...]
    ratios: tuple[float, ...]
    configuration: str  # "classical" | "quantum" | "beacon"

    def __post_init__(self):
        if len(self.delta_thetas) != len(self.ratios):
            raise ConfigurationError("scan angles and ratios differ in length")
        if any(r < 0 for r in self.ratios):
            raise ConfigurationError("tracking ratios cannot be negative")

    def to_csv(self, path) -> None:
        lines = ["delta_theta_rad,ratio,configuration"]
        lines += [
            f"{t!r},{r!r},{self.configuration}"
            for t, r in zip(self.delta_thetas, self.ratios)
        ]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class MemoryFit:
    theta0: float
    theta0_uncertainty: float
    residual_rms: float


def shift_pose(pose: DetectorPose, dx: float) -> DetectorPose:
    """Pose displaced by dx along x."""
    center = pose.center
    if np.isscalar(center):
        return replace(pose, center=float(center) + dx)
    return replace(pose, center=(center[0] + dx, center[1]))


def memory_scan(
    setup: TwoArmSetup,
    pattern: SlmPattern | None,
    delta_thetas,
    configuration: str,
    det1_pose: DetectorPose,
) -> MemoryScan:
    """Track the optimized spot while rotating the fixed detector.

    For each tilt the fixed fiber moves by +f*dt and the probe by -f*dt (the
    anti-correlated pair motion); the detected power is normalized by its
    value at zero tilt.
    """
    if configuration not in ("classical", "quantum"):
        raise ConfigurationError(f"unknown configuration {configuration!r}")
    measure = setup.klyshko_power if configuration == "classical" else setup.coincidence_power
    f = setup.focal_length
    reference = measure(pattern, det1_pose, setup.det2)
    if reference <= 0:
        raise ConfigurationError("zero reference power at delta-theta = 0")
    ratios = []
    for dt in delta_thetas:
        fixed = shift_pose(setup.det2, f * dt)
        probe = shift_pose(det1_pose, -f * dt)
        ratios.append(measure(pattern, probe, fixed) / reference)
    return MemoryScan(tuple(float(t) for t in delta_thetas), tuple(ratios), configuration)


def _residual_sum(scan: MemoryScan, theta0: float) -> float:
    model = memory_model(np.asarray(scan.delta_thetas), theta0)
    return float(np.sum((np.asarray(scan.ratios) - model) ** 2))


def fit_memory(scan: MemoryScan) -> MemoryFit:
    """One-parameter least-squares fit of the memory range theta0.

    Golden-section search on the residual over a logarithmic theta0 range,
    refined by one parabolic step; the uncertainty follows from the residual
    curvature scaled by the residual variance.
    """
    n = len(scan.ratios)
    if n < 4:
        raise FitError("memory fit needs at least 4 scan points")
    if min(scan.ratios) >= 0.8:
        raise FitError("memory range exceeds scan: ratios never drop below 0.8")
    span = max(abs(t) for t in scan.delta_thetas)
    lo, hi = np.log(1e-2 * span), np.log(1e2 * span)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = _residual_sum(scan, np.exp(c)), _residual_sum(scan, np.exp(d))
    for _ in range(200):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = _residual_sum(scan, np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = _residual_sum(scan, np.exp(d))
        if b - a < 1e-12:
            break
    theta0 = float(np.exp(0.5 * (a + b)))
    # parabolic refinement around the golden-section optimum
    h = 1e-4 * theta0
    r0, r1, r2 = (
        _residual_sum(scan, theta0 - h),
        _residual_sum(scan, theta0),
        _residual_sum(scan, theta0 + h),
    )
    denom = r0 - 2.0 * r1 + r2
    if denom > 0:
        theta0 = theta0 + 0.5 * h * (r0 - r2) / denom
        r1 = _residual_sum(scan, theta0)
    # curvature-based one-sigma uncertainty: var(theta0) = 2 s^2 / R''
    h = 1e-3 * theta0
    r0, r2 = _residual_sum(scan, theta0 - h), _residual_sum(scan, theta0 + h)
    curvature = (r0 - 2.0 * r1 + r2) / h**2
    dof = max(n - 1, 1)
    s2 = r1 / dof
    uncertainty = float(np.sqrt(2.0 * s2 / curvature)) if curvature > 0 else float("inf")
    return MemoryFit(theta0, uncertainty, float(np.sqrt(r1 / n)))


def beacon_power(
    setup: TwoArmSetup,
    pattern: SlmPattern | None,
    tilt: float,
    probe: DetectorPose,
    waist: float,
) -> float:
    """Single-pass co-propagating beacon power at a probe pose.

    A Gaussian beam of the given waist enters at the crystal plane with the
    given tilt, crosses the modulator once and arm 1's diffuser once, and is
    detected at the far field: the conventional auxiliary-laser feedback.
    """
    mask = setup.slm_mask(pattern)
    head = (mask,) if mask is not None else ()
    arm = make_arm(head + setup.arm1_tail, setup.crystal_spec)
    source = gaussian_mode(setup.crystal_spec, waist, tilt_angle=tilt)
    return detector_power(arm_apply(arm, source, "forward"), probe)


def beacon_memory_scan(
    setup: TwoArmSetup,
    pattern: SlmPattern | None,
    delta_thetas,
    det1_pose: DetectorPose,
    waist: float,
) -> MemoryScan:
    """Memory scan of the single-pass beacon: its focus co-moves with the tilt."""
    f = setup.focal_length
    reference = beacon_power(setup, pattern, 0.0, det1_pose, waist)
    if reference <= 0:
        raise ConfigurationError("zero beacon reference power")
    ratios = []
    for dt in delta_thetas:
        probe = shift_pose(det1_pose, f * dt)
        ratios.append(beacon_power(setup, pattern, dt, probe, waist) / reference)
    return MemoryScan(tuple(float(t) for t in delta_thetas), tuple(ratios), "beacon")


def optimize_beacon(
    setup: TwoArmSetup,
    pattern0: SlmPattern,
    det1_pose: DetectorPose,
    waist: float,
    phase_steps: int = 8,
) -> OptimizationTrace:
    """Focus the single-pass beacon on the probe pose."""

    def costfn(pattern, stream):
        return beacon_power(setup, pattern, 0.0, det1_pose, waist)

    return optimize_cost_function(costfn, pattern0, phase_steps)
