"""Optical elements and arm composition with forward and reciprocal-backward application.

Backward application is the transpose of the forward map with respect to the
physical bilinear pairing sum(g * (T f)) * pitch^2 (no conjugation): this is
the discrete form of the optical reciprocity theorem, and the property the
advanced-wave correspondence rests on.  All element kernels here are chosen
symmetric, so backward application reuses the forward kernels:

* free space: the angular-spectrum convolution kernel is even,
* masks: diagonal,
* lens Fourier stages: the centered-DFT kernel is symmetric in (x, u) and the
  exit-grid-to-entry-grid map is again :func:`klyshko.grid.farfield`,
* magnifiers: the measure-weighted transpose of an ideal rescale by ``r``
  is the rescale by ``1/r``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .errors import ConfigurationError, GridMismatchError
from .grid import GridSpec, SampledField, farfield, specs_match

__all__ = [
    "FreeSpace",
    "LensFourier",
    "Mask",
    "Magnifier",
    "Element",
    "OpticalArm",
    "make_arm",
    "element_exit_spec",
    "apply_element",
    "arm_apply",
    "attenuator",
]

_MASK_TOL = 1e-9


@dataclass(frozen=True)
class FreeSpace:
    """Angular-spectrum propagation over a non-negative distance [m]."""

    distance: float

    def __post_init__(self):
        if self.distance < 0:
            raise ConfigurationError(f"free-space distance must be >= 0, got {self.distance}")


@dataclass(frozen=True)
class LensFourier:
    """Ideal 2f Fourier stage with the given focal length [m]."""

    focal_length: float

    def __post_init__(self):
        if not (self.focal_length > 0):
            raise ConfigurationError(f"focal length must be > 0, got {self.focal_length}")


@dataclass(frozen=True)
class Mask:
    """Pointwise complex transmission with |t| <= 1."""

    transmission: SampledField

    def __post_init__(self):
        peak = np.abs(self.transmission.amplitudes).max()
        if peak > 1.0 + _MASK_TOL:
            raise ConfigurationError(f"mask transmission exceeds unity: max |t| = {peak}")


@dataclass(frozen=True)
class Magnifier:
    """Ideal coordinate rescale: pitch -> pitch * ratio, energy conserved."""

    ratio: float

    def __post_init__(self):
        if not (self.ratio > 0):
            raise ConfigurationError(f"magnifier ratio must be > 0, got {self.ratio}")


Element = Union[FreeSpace, LensFourier, Mask, Magnifier]


def attenuator(spec: GridSpec, amplitude: float) -> Mask:
    """Uniform amplitude mask (e.g. the 1/sqrt(2) beam-splitter factor)."""
    if not 0.0 <= amplitude <= 1.0:
        raise ConfigurationError(f"attenuator amplitude must be in [0, 1], got {amplitude}")
    t = np.full(spec.shape, amplitude, dtype=np.complex128)
    return Mask(SampledField(spec, t, "attenuator"))


def element_exit_spec(e: Element, entry: GridSpec) -> GridSpec:
    """Grid spec after applying ``e`` forward to a field on ``entry``."""
    if isinstance(e, FreeSpace):
        return entry
    if isinstance(e, Mask):
        if not specs_match(e.transmission.spec, entry):
            raise GridMismatchError(
                f"mask grid {e.transmission.spec} does not match plane grid {entry}"
            )
        return entry
    if isinstance(e, LensFourier):
        if not entry.is_1d and entry.n_x != entry.n_y:
            raise ConfigurationError("2-D Fourier stage requires a square grid")
        out_pitch = entry.wavelength * e.focal_length / (entry.n_x * entry.pitch)
        return replace(entry, pitch=out_pitch)
    if isinstance(e, Magnifier):
        return replace(entry, pitch=entry.pitch * e.ratio)
    raise TypeError(f"unknown element type {type(e)!r}")


@dataclass(frozen=True)
class OpticalArm:
    """Ordered element sequence with consistent entry and exit grids."""

    elements: tuple[Element, ...]
    entry_spec: GridSpec
    exit_spec: GridSpec


def make_arm(elements, entry_spec: GridSpec) -> OpticalArm:
    """Build an arm, chaining grid specs through every element."""
    elements = tuple(elements)
    spec = entry_spec
    for e in elements:
        spec = element_exit_spec(e, spec)
    return OpticalArm(elements, entry_spec, spec)


def _angular_spectrum(f: SampledField, distance: float) -> SampledField:
    spec = f.spec
    nu_x = np.fft.fftfreq(spec.n_x, spec.pitch)
    nu_y = np.fft.fftfreq(spec.n_y, spec.pitch)
    nu2 = nu_y[:, None] ** 2 + nu_x[None, :] ** 2
    inv_wl2 = 1.0 / spec.wavelength**2
    # evanescent components (|nu| > 1/lambda) are dropped
    kz = 2.0 * np.pi * np.sqrt(np.maximum(inv_wl2 - nu2, 0.0))
    h = np.where(nu2 <= inv_wl2, np.exp(1j * distance * kz), 0.0)
    out = np.fft.ifft2(np.fft.fft2(f.amplitudes) * h)
    return SampledField(spec, out, f.plane_label)


def apply_element(e: Element, f: SampledField, direction: str = "forward") -> SampledField:
    """Apply one element to a field, forward or reciprocal-backward."""
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    if isinstance(e, FreeSpace):
        if e.distance == 0.0:
            return f
        return _angular_spectrum(f, e.distance)
    if isinstance(e, Mask):
        if not specs_match(e.transmission.spec, f.spec):
            raise GridMismatchError("mask grid does not match field grid")
        return SampledField(f.spec, f.amplitudes * e.transmission.amplitudes, f.plane_label)
    if isinstance(e, LensFourier):
        # symmetric kernel: the transpose from the exit grid back to the
        # entry grid is the same Fourier map (pitch relation is an involution)
        return farfield(f, e.focal_length)
    if isinstance(e, Magnifier):
        r = e.ratio if direction == "forward" else 1.0 / e.ratio
        out_spec = replace(f.spec, pitch=f.spec.pitch * r)
        return SampledField(out_spec, f.amplitudes / r, f.plane_label)
    raise TypeError(f"unknown element type {type(e)!r}")


def arm_apply(arm: OpticalArm, f: SampledField, direction: str = "forward") -> SampledField:
    """Apply a whole arm: forward in order, backward in reverse order."""
    if direction == "forward":
        if not specs_match(f.spec, arm.entry_spec):
            raise GridMismatchError("field grid does not match arm entry grid")
        for e in arm.elements:
            f = apply_element(e, f, "forward")
        return f
    if direction == "backward":
        if not specs_match(f.spec, arm.exit_spec):
            raise GridMismatchError("field grid does not match arm exit grid")
        for e in reversed(arm.elements):
            f = apply_element(e, f, "backward")
        return f
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
