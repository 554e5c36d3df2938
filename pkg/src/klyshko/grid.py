"""Sampled complex fields on uniform transverse grids.

Conventions used throughout the package:

* Amplitudes are stored as complex arrays of shape ``(n_y, n_x)``; a grid
  with ``n_y == 1`` is the 1-D transverse mode used by the brute-force
  two-photon oracle.
* Sample ``j`` along an axis of ``n`` samples sits at ``(j - n/2) * pitch``,
  so the coordinate origin is the sample at index ``n // 2`` (``n`` even).
* The energy measure is ``pitch**2`` per sample in 1-D and 2-D alike; all
  inner products, mode normalizations and unitarity statements refer to it.
* The far-field map of an ideal 2f lens stage is the centered discrete
  Fourier transform with kernel ``exp(-2j*pi*x*u/(lambda*f))``.  The kernel
  matrix is symmetric in (x, u), which is what lets backward (reciprocal)
  propagation reuse the forward map.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, GridMismatchError, SamplingError

__all__ = [
    "GridSpec",
    "SampledField",
    "make_grid",
    "specs_match",
    "gaussian_mode",
    "overlap",
    "farfield",
    "invert_coords",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform transverse grid: sample counts, pitch [m] and wavelength [m]."""

    n_x: int
    n_y: int
    pitch: float
    wavelength: float

    def __post_init__(self):
        if self.n_x <= 0 or self.n_y <= 0 or self.n_x % 2 or (self.n_y % 2 and self.n_y != 1):
            raise ConfigurationError(
                f"sample counts must be positive and even (or n_y == 1), got {self.n_x}x{self.n_y}"
            )
        if not (self.pitch > 0):
            raise ConfigurationError(f"pitch must be positive, got {self.pitch}")
        if not (self.wavelength > 0):
            raise ConfigurationError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def is_1d(self) -> bool:
        return self.n_y == 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_y, self.n_x)

    @property
    def extent_x(self) -> float:
        return self.n_x * self.pitch

    @property
    def extent_y(self) -> float:
        return self.n_y * self.pitch

    @property
    def cell_area(self) -> float:
        return self.pitch * self.pitch

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    def x(self) -> np.ndarray:
        """Sample coordinates along x, origin at index n_x // 2."""
        return (np.arange(self.n_x) - self.n_x // 2) * self.pitch

    def y(self) -> np.ndarray:
        """Sample coordinates along y (a single 0.0 for 1-D grids)."""
        if self.is_1d:
            return np.zeros(1)
        return (np.arange(self.n_y) - self.n_y // 2) * self.pitch

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) coordinate arrays of shape (n_y, n_x)."""
        return np.meshgrid(self.x(), self.y())


def make_grid(n_x: int, n_y: int, pitch: float, wavelength: float) -> GridSpec:
    """Validate and build a :class:`GridSpec`."""
    return GridSpec(int(n_x), int(n_y), float(pitch), float(wavelength))


def specs_match(a: GridSpec, b: GridSpec, rtol: float = 1e-9) -> bool:
    """Grid compatibility check; pitch compared with a relative tolerance.

    Pitches reconstructed through lens and magnifier chains differ from the
    nominal value by float rounding, so exact equality is too strict.
    """
    return (
        a.n_x == b.n_x
        and a.n_y == b.n_y
        and a.wavelength == b.wavelength
        and abs(a.pitch - b.pitch) <= rtol * a.pitch
    )


@dataclass
class SampledField:
    """Complex scalar amplitude sampled on a :class:`GridSpec`."""

    spec: GridSpec
    amplitudes: np.ndarray
    plane_label: str = ""

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.shape != self.spec.shape:
            raise GridMismatchError(
                f"amplitude shape {a.shape} does not match grid {self.spec.shape}"
            )
        self.amplitudes = a

    def energy(self) -> float:
        """Total energy sum(|a|^2) * pitch^2."""
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.spec.cell_area)

    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def conjugated(self) -> "SampledField":
        return SampledField(self.spec, np.conj(self.amplitudes), self.plane_label)

    def relabel(self, plane_label: str) -> "SampledField":
        return SampledField(self.spec, self.amplitudes, plane_label)


def _as_xy(value, is_1d: bool) -> tuple[float, float]:
    """Accept a scalar (x only) or an (x, y) pair; y forced to 0 in 1-D."""
    if np.isscalar(value):
        return float(value), 0.0
    vx, vy = value
    if is_1d and vy != 0.0:
        raise ConfigurationError("y components are meaningless on a 1-D grid")
    return float(vx), float(vy)


def gaussian_mode(spec: GridSpec, waist: float, center=0.0, tilt_angle=0.0) -> SampledField:
    """Unit-energy Gaussian mode exp(-r^2/waist^2) with optional center and tilt.

    Parameters
    ----------
    spec : GridSpec
        Grid to sample on.
    waist : float
        1/e amplitude radius [m]; must be at least two pitches for adequate
        sampling.
    center : float or (float, float)
        Mode center [m].
    tilt_angle : float or (float, float)
        Propagation tilt [rad]; adds a linear phase exp(i*k*tilt*x).
    """
    if waist < 2.0 * spec.pitch:
        raise SamplingError(
            f"waist {waist:g} m under-resolved on pitch {spec.pitch:g} m (need >= 2 pitches)"
        )
    cx, cy = _as_xy(center, spec.is_1d)
    tx, ty = _as_xy(tilt_angle, spec.is_1d)
    X, Y = spec.mesh()
    r2 = (X - cx) ** 2 + (Y - cy) ** 2
    a = np.exp(-r2 / waist**2) * np.exp(1j * spec.wavenumber * (tx * X + ty * Y))
    norm = np.sqrt(np.sum(np.abs(a) ** 2) * spec.cell_area)
    if norm == 0.0:
        raise SamplingError("gaussian mode has no support on the grid (center off-grid?)")
    return SampledField(spec, a / norm, "mode")


def overlap(f: SampledField, g: SampledField) -> complex:
    """Inner product sum(conj(f) * g) * pitch^2, conjugate-linear in ``f``."""
    if not specs_match(f.spec, g.spec):
        raise GridMismatchError(f"overlap of mismatched grids: {f.spec} vs {g.spec}")
    return complex(np.sum(np.conj(f.amplitudes) * g.amplitudes) * f.spec.cell_area)


def _centered_dft(a: np.ndarray, axes) -> np.ndarray:
    """DFT with kernel exp(-2j*pi*(j-n/2)*(l-n/2)/n) along the given axes."""
    return np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(a, axes=axes), axes=axes), axes=axes)


def farfield(f: SampledField, focal_length: float) -> SampledField:
    """Ideal 2f Fourier mapping to the back focal plane of a lens.

    Output coordinates are x' = focal_length * theta with pitch
    lambda * focal_length / (n * pitch).  The map is unitary: energy is
    conserved exactly up to rounding.  Requires a 1-D grid or a square 2-D
    grid (a single scalar pitch cannot represent an anisotropic far field).
    """
    if not (focal_length > 0):
        raise ConfigurationError(f"focal length must be positive, got {focal_length}")
    spec = f.spec
    if not spec.is_1d and spec.n_x != spec.n_y:
        raise ConfigurationError("2-D far-field mapping requires a square grid")
    n = spec.n_x
    out_pitch = spec.wavelength * focal_length / (n * spec.pitch)
    out_spec = replace(spec, pitch=out_pitch)
    if spec.is_1d:
        scale = np.sqrt(n) * spec.pitch**2 / (spec.wavelength * focal_length)
        amp = scale * _centered_dft(f.amplitudes, axes=(1,))
    else:
        scale = spec.pitch**2 / (spec.wavelength * focal_length)
        amp = scale * _centered_dft(f.amplitudes, axes=(0, 1))
    return SampledField(out_spec, amp, f"farfield({f.plane_label})")


def invert_coords(f: SampledField) -> SampledField:
    """Coordinate inversion x -> -x (and y -> -y) on the centered grid.

    Index 0 has no mirror partner on an even grid and maps to itself.
    """
    a = f.amplitudes
    a = np.roll(a[..., ::-1], 1, axis=-1)
    if not f.spec.is_1d:
        a = np.roll(a[::-1, :], 1, axis=0)
    return SampledField(f.spec, a, f.plane_label)
