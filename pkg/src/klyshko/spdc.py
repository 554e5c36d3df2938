"""Thin-crystal photon-pair source model and the coincidence computation.

The two-point source kernel factorizes as K(r1, r2) = P((r1+r2)/2) * G(r1-r2):
a pump-envelope factor at the pair midpoint and a phase-matching kernel in
the separation.  In the momentum representation G is the thin-crystal sinc,

    G(q) = sinc(L * q^2 / (2 k_pump)),   q = 2*pi*nu,

whose first zero sits near sqrt(wavelength/L) in angle.  With phase matching
disabled G degenerates to a delta and K acts pointwise; a perfect mirror is
the identity.

Coincidence amplitudes are computed two independent ways:

* :func:`coincidence_amplitude` - the factorized advanced-wave contraction
  (backward through one arm, through the crystal kernel, forward through the
  other arm, projected on the first detector mode);
* :func:`brute_force_coincidence` - the explicit double sum over both
  crystal-plane coordinates with K materialized as an N x N matrix (1-D
  only; this is the oracle the factorized path is validated against).

Detector modes are conjugated once at injection and once at projection;
backward propagation itself never conjugates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .detection import DetectorPose, NoiseConfig, corrected_coincidences, detector_power
from .elements import OpticalArm, arm_apply
from .errors import ConfigurationError, GridMismatchError
from .grid import GridSpec, SampledField, overlap, specs_match

__all__ = [
    "PumpConfig",
    "CrystalKernel",
    "pump_profile",
    "crystal_apply",
    "coincidence_field",
    "coincidence_amplitude",
    "brute_force_coincidence",
    "coincidence_map",
]

_ORACLE_MAX_N = 256


@dataclass(frozen=True)
class PumpConfig:
    """Pump beam at the crystal: transverse profile and wavelength."""

    waist: float = 500e-6
    wavelength: float = 405e-9
    profile: str = "gaussian"  # "gaussian" | "planewave"

    def __post_init__(self):
        if not (self.waist > 0):
            raise ConfigurationError("pump waist must be positive")
        if self.profile not in ("gaussian", "planewave"):
            raise ConfigurationError(f"unknown pump profile {self.profile!r}")


@dataclass(frozen=True)
class CrystalKernel:
    """Crystal-plane reflection/source operator configuration."""

    pump: PumpConfig = PumpConfig()
    crystal_length: float = 2e-3
    phase_matching: bool = False
    mode: str = "two_photon_source"  # | "perfect_mirror" | "pump_masked_mirror"

    def __post_init__(self):
        if not (self.crystal_length > 0):
            raise ConfigurationError("crystal length must be positive")
        if self.mode not in ("two_photon_source", "perfect_mirror", "pump_masked_mirror"):
            raise ConfigurationError(f"unknown crystal mode {self.mode!r}")


def pump_profile(kernel: CrystalKernel, spec: GridSpec) -> np.ndarray:
    """Pump transverse amplitude on the crystal grid (1 for a plane wave)."""
    if kernel.pump.profile == "planewave":
        return np.ones(spec.shape)
    X, Y = spec.mesh()
    return np.exp(-(X**2 + Y**2) / kernel.pump.waist**2)


def _sinc_filter(kernel: CrystalKernel, spec: GridSpec) -> np.ndarray:
    """Phase-matching transfer function on the fft frequency grid."""
    nu_x = np.fft.fftfreq(spec.n_x, spec.pitch)
    nu_y = np.fft.fftfreq(spec.n_y, spec.pitch)
    nu2 = nu_y[:, None] ** 2 + nu_x[None, :] ** 2
    # sinc(L q^2 / (2 k_p)) with q = 2 pi nu; np.sinc(x) = sin(pi x)/(pi x)
    return np.sinc(2.0 * kernel.crystal_length * kernel.pump.wavelength * nu2)


@lru_cache(maxsize=8)
def _midpoint_kernel_matrix(kernel: CrystalKernel, spec: GridSpec) -> np.ndarray:
    """Exact 1-D kernel matrix K[j, l] = P((x_j + x_l)/2) * G(x_j - x_l).

    G is the circulant real-space kernel of the phase-matching filter, so
    with a plane-wave pump the matrix product reproduces the Fourier-domain
    filter exactly.
    """
    x = spec.x()
    c = np.fft.ifft(_sinc_filter(kernel, spec)[0])
    n = spec.n_x
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    circulant = c[idx]
    if kernel.pump.profile == "planewave":
        mid = np.ones((n, n))
    else:
        mid = np.exp(-(((x[:, None] + x[None, :]) / 2.0) ** 2) / kernel.pump.waist**2)
    m = mid * circulant
    m.setflags(write=False)
    return m


def crystal_apply(kernel: CrystalKernel, f: SampledField) -> SampledField:
    """Apply the crystal-plane operator to a field.

    Perfect mirror: identity.  Without phase matching: pointwise pump
    envelope.  With phase matching: the full midpoint kernel contraction in
    1-D (where the oracle runs), and the factorized pump-multiply followed by
    the momentum-space sinc filter in 2-D.
    """
    if kernel.mode == "perfect_mirror":
        return f.relabel("crystal")
    if not kernel.phase_matching:
        out = pump_profile(kernel, f.spec) * f.amplitudes
    elif f.spec.is_1d:
        m = _midpoint_kernel_matrix(kernel, f.spec)
        out = (m @ f.amplitudes[0])[None, :]
    else:
        filtered = np.fft.fft2(pump_profile(kernel, f.spec) * f.amplitudes)
        out = np.fft.ifft2(filtered * _sinc_filter(kernel, f.spec))
    return SampledField(f.spec, out, "crystal")


def coincidence_field(
    kernel: CrystalKernel,
    arm1: OpticalArm,
    arm2: OpticalArm,
    det2_mode: SampledField,
) -> SampledField:
    """Field at detector-1's plane whose mode projections are coincidence amplitudes.

    Computes arm1_forward(K(arm2_backward(conj(det2_mode)))); projecting it on
    any detector-1 mode gives the coincidence amplitude for that mode, so a
    whole detector scan costs a single propagation.
    """
    if not specs_match(det2_mode.spec, arm2.exit_spec):
        raise GridMismatchError("det2 mode does not live on arm 2's exit grid")
    if not specs_match(arm1.entry_spec, arm2.entry_spec):
        raise GridMismatchError("arms do not share the crystal-plane grid")
    g = arm_apply(arm2, det2_mode.conjugated(), "backward")
    h = crystal_apply(kernel, g)
    return arm_apply(arm1, h, "forward")


def coincidence_amplitude(
    kernel: CrystalKernel,
    arm1: OpticalArm,
    arm2: OpticalArm,
    det1_mode: SampledField,
    det2_mode: SampledField,
) -> complex:
    """Two-photon coincidence amplitude A; the rate is proportional to |A|^2."""
    e = coincidence_field(kernel, arm1, arm2, det2_mode)
    return overlap(det1_mode, e)


def _materialized_kernel(kernel: CrystalKernel, spec: GridSpec) -> np.ndarray:
    if kernel.mode == "perfect_mirror":
        return np.eye(spec.n_x)
    if not kernel.phase_matching:
        return np.diag(pump_profile(kernel, spec)[0])
    return _midpoint_kernel_matrix(kernel, spec)


def brute_force_coincidence(
    kernel: CrystalKernel,
    arm1: OpticalArm,
    arm2: OpticalArm,
    det1_mode: SampledField,
    det2_mode: SampledField,
) -> complex:
    """Oracle: explicit double sum over both crystal-plane coordinates.

    A = sum_{r1, r2} (T1^t conj(m1))(r1) K(r1, r2) (T2^t conj(m2))(r2) * pitch^2
    with K materialized as an explicit matrix.  1-D grids up to N = 256 only.
    """
    spec = arm1.entry_spec
    if not spec.is_1d:
        raise ConfigurationError("the brute-force oracle supports 1-D grids only")
    if spec.n_x > _ORACLE_MAX_N:
        raise ConfigurationError(
            f"the brute-force oracle is limited to N <= {_ORACLE_MAX_N}"
        )
    a = arm_apply(arm1, det1_mode.conjugated(), "backward").amplitudes[0]
    b = arm_apply(arm2, det2_mode.conjugated(), "backward").amplitudes[0]
    k = _materialized_kernel(kernel, spec)
    return complex(a @ k @ b * spec.cell_area)


def coincidence_map(
    kernel: CrystalKernel,
    arm1: OpticalArm,
    arm2: OpticalArm,
    det1_scan: list[DetectorPose],
    det2_mode: SampledField,
    noise: NoiseConfig | None = None,
    brightness: float = 1000.0,
) -> np.ndarray:
    """Coincidence rate [counts/s] for each detector-1 pose.

    SMF poses project the coincidence field on their Gaussian mode; MMF poses
    integrate it over the core disk (the incoherent sum over pixel modes).
    With a noise configuration, rates are Poisson-sampled per pose (stream =
    pose index) and accidental-corrected.
    """
    e = coincidence_field(kernel, arm1, arm2, det2_mode)
    scale = noise.brightness if noise is not None else brightness
    rates = np.empty(len(det1_scan))
    for i, pose in enumerate(det1_scan):
        rate = scale * detector_power(e, pose)
        rates[i] = corrected_coincidences(rate, noise, stream=i)
    return rates
