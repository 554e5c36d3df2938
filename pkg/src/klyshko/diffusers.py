"""Random phase screens with a target divergence, and the two-screen thick diffuser.

A screen is a unit-amplitude mask exp(i*phi) where phi is a stationary
Gaussian random field with Gaussian autocorrelation

    <phi(x) phi(x + d)> = stdev^2 * exp(-d^2 / correlation_length^2)

synthesized spectrally: white Gaussian noise filtered in the frequency
domain, with the filter gain normalized analytically so the pointwise
standard deviation is exact for every realization size.  Streams are drawn
from PCG64 seeded by SeedSequence([seed]) so screens are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import Element, FreeSpace, Mask
from .errors import CalibrationError, SamplingError
from .grid import GridSpec, SampledField, farfield

__all__ = [
    "ScreenParams",
    "ThickDiffuser",
    "derive_screen_seed",
    "make_phase_screen",
    "screen_phase",
    "calibrate_divergence",
    "divergence_half_angle",
    "thick_diffuser_elements",
]


@dataclass(frozen=True)
class ScreenParams:
    """Gaussian-correlated random phase screen parameters."""

    correlation_length: float
    phase_stdev: float
    seed: int

    def __post_init__(self):
        if self.phase_stdev < 0:
            raise ValueError(f"phase stdev must be >= 0, got {self.phase_stdev}")


@dataclass(frozen=True)
class ThickDiffuser:
    """Two screens separated by a free-space gap."""

    screen_a: ScreenParams
    screen_b: ScreenParams
    gap: float

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError(f"gap must be >= 0, got {self.gap}")


def derive_screen_seed(master_seed: int, screen_index: int) -> int:
    """Per-screen 64-bit seed from (master seed, screen index)."""
    ss = np.random.SeedSequence([int(master_seed), int(screen_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def screen_phase(spec: GridSpec, params: ScreenParams) -> np.ndarray:
    """Sample the random phase map of a screen (radians, shape (n_y, n_x))."""
    if params.correlation_length < 2.0 * spec.pitch:
        raise SamplingError(
            f"correlation length {params.correlation_length:g} m under-resolved "
            f"on pitch {spec.pitch:g} m"
        )
    if params.phase_stdev == 0.0:
        return np.zeros(spec.shape)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([params.seed & 0xFFFFFFFFFFFFFFFF])))
    white = rng.standard_normal(spec.shape)
    nu_x = np.fft.fftfreq(spec.n_x, spec.pitch)
    nu_y = np.fft.fftfreq(spec.n_y, spec.pitch)
    nu2 = nu_y[:, None] ** 2 + nu_x[None, :] ** 2
    # |H|^2 is the Gaussian power spectrum of the target autocorrelation
    gain = np.exp(-((np.pi * params.correlation_length) ** 2) * nu2 / 2.0)
    n_tot = spec.n_x * spec.n_y
    variance_unit = float(np.sum(gain**2)) / n_tot
    phi = np.fft.ifft2(np.fft.fft2(white) * gain).real
    return phi * (params.phase_stdev / np.sqrt(variance_unit))


def make_phase_screen(spec: GridSpec, params: ScreenParams) -> Mask:
    """Unit-amplitude random phase mask, deterministic per seed."""
    phi = screen_phase(spec, params)
    return Mask(SampledField(spec, np.exp(1j * phi), f"screen(seed={params.seed})"))


def thick_diffuser_elements(td: ThickDiffuser, spec: GridSpec) -> list[Element]:
    """[screen_a, gap, screen_b] as arm elements."""
    return [
        make_phase_screen(spec, td.screen_a),
        FreeSpace(td.gap),
        make_phase_screen(spec, td.screen_b),
    ]


def _halfwidth_at_half_max(theta: np.ndarray, envelope: np.ndarray) -> float:
    """HWHM of a peaked symmetric profile via a Gaussian fit of its core.

    Fitting exp(-c * theta^2) to all points above 15% of the peak averages the
    ensemble fluctuations over the whole core, which a single half-maximum
    crossing would not.  The central sample is excluded so a residual
    ballistic spike cannot skew the fit.
    """
    n = theta.size
    peak = envelope.max()
    if peak <= 0:
        raise CalibrationError("far-field envelope is empty")
    keep = (envelope >= 0.15 * peak) & (np.abs(theta) > 0.5 * (theta[1] - theta[0]))
    # guard against wrapped tails: restrict to the contiguous lobe around zero
    keep &= np.abs(theta) < 0.45 * (theta[-1] - theta[0])
    if np.count_nonzero(keep) < 8:
        raise CalibrationError("envelope core under-resolved on this grid")
    t2 = theta[keep] ** 2
    logi = np.log(envelope[keep] / peak)
    # weighted LSQ of log I = a - c t^2 (weights ~ I to de-emphasize the tails)
    w = envelope[keep] / peak
    sw, swt2, swt4 = np.sum(w), np.sum(w * t2), np.sum(w * t2 * t2)
    swl, swt2l = np.sum(w * logi), np.sum(w * t2 * logi)
    det = sw * swt4 - swt2 * swt2
    c = -(sw * swt2l - swt2 * swl) / det
    if not (c > 0):
        raise CalibrationError("envelope does not fall off inside the grid")
    return float(np.sqrt(np.log(2.0) / c))


def divergence_half_angle(
    spec: GridSpec,
    correlation_length: float,
    phase_stdev: float,
    n_seeds: int = 32,
    master_seed: int = 0,
) -> float:
    """Measured far-field HWHM half-angle of a plane wave through the screen.

    Ensemble mean over ``n_seeds`` realizations, lightly smoothed before the
    half-maximum crossing is located.
    """
    flat = SampledField(spec, np.ones(spec.shape, dtype=complex))
    focal = 1.0
    acc = None
    for i in range(n_seeds):
        params = ScreenParams(correlation_length, phase_stdev, derive_screen_seed(master_seed, i))
        mask = make_phase_screen(spec, params)
        out = farfield(
            SampledField(spec, flat.amplitudes * mask.transmission.amplitudes), focal
        )
        inten = out.intensity()
        acc = inten if acc is None else acc + inten
    envelope = acc[0] if spec.is_1d else acc[acc.shape[0] // 2]
    window = max(3, spec.n_x // 128)
    kernel = np.ones(window) / window
    envelope = np.convolve(envelope, kernel, mode="same")
    theta = farfield(flat, focal).spec.x() / focal
    return _halfwidth_at_half_max(theta, envelope)


def calibrate_divergence(
    spec: GridSpec,
    target_half_angle: float,
    phase_stdev: float,
    n_seeds: int = 32,
    master_seed: int = 0,
    rel_tol: float = 0.02,
) -> float:
    """Correlation length whose far-field envelope HWHM matches the target.

    Bisection on the correlation length; the measured divergence shrinks
    monotonically as the correlation length grows.
    """
    nyquist = spec.wavelength / (2.0 * spec.pitch)
    if not (0 < target_half_angle < 0.5 * nyquist):
        raise CalibrationError(
            f"target half-angle {target_half_angle:g} rad outside (0, {0.5 * nyquist:g}) "
            "for this grid"
        )

    def measure(corr):
        return divergence_half_angle(spec, corr, phase_stdev, n_seeds, master_seed)

    lo = 2.0 * spec.pitch  # widest attainable divergence
    hi = spec.extent_x / 8.0  # narrowest useful divergence
    try:
        d_lo = measure(lo)
        d_hi = measure(hi)
    except CalibrationError as exc:
        raise CalibrationError(f"calibration bracket failed: {exc}") from exc
    if not (d_hi < target_half_angle < d_lo):
        raise CalibrationError(
            f"target {target_half_angle:g} rad not bracketed by "
            f"[{d_hi:g}, {d_lo:g}] rad on this grid"
        )
    for _ in range(60):
        mid = np.sqrt(lo * hi)
        d_mid = measure(mid)
        if abs(d_mid - target_half_angle) <= rel_tol * target_half_angle:
            return float(mid)
        if d_mid > target_half_angle:
            lo = mid
        else:
            hi = mid
    raise CalibrationError("divergence calibration did not converge")
