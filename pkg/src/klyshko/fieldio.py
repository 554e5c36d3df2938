"""Field serialization: raw float32 interleaved complex pairs, and PGM previews.

File layout: one ASCII header line

    AWP1 nx ny pitch_m wavelength_m plane_label

followed by row-major little-endian float32 (re, im) pairs.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError
from .grid import GridSpec, SampledField

__all__ = ["save_field", "load_field", "save_pgm"]

_MAGIC = "AWP1"


def save_field(f: SampledField, path) -> None:
    """Write a field in the raw interleaved-float32 format."""
    label = f.plane_label.replace("\n", " ") or "-"
    header = f"{_MAGIC} {f.spec.n_x} {f.spec.n_y} {f.spec.pitch!r} {f.spec.wavelength!r} {label}\n"
    pairs = np.empty(f.spec.shape + (2,), dtype="<f4")
    pairs[..., 0] = f.amplitudes.real
    pairs[..., 1] = f.amplitudes.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(pairs.tobytes())


def load_field(path) -> SampledField:
    """Read a field written by :func:`save_field`."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").rstrip("\n")
        parts = header.split(" ", 5)
        if len(parts) != 6 or parts[0] != _MAGIC:
            raise ConfigurationError(f"not a {_MAGIC} field file: {path}")
        n_x, n_y = int(parts[1]), int(parts[2])
        pitch, wavelength = float(parts[3]), float(parts[4])
        label = parts[5]
        raw = np.frombuffer(fh.read(), dtype="<f4")
    if raw.size != 2 * n_x * n_y:
        raise ConfigurationError(
            f"field payload has {raw.size} floats, expected {2 * n_x * n_y}"
        )
    pairs = raw.reshape(n_y, n_x, 2)
    amp = pairs[..., 0].astype(np.float64) + 1j * pairs[..., 1].astype(np.float64)
    spec = GridSpec(n_x, n_y, pitch, wavelength)
    return SampledField(spec, amp, "" if label == "-" else label)


def save_pgm(f: SampledField, path, intensity: np.ndarray | None = None) -> None:
    """Write an 8-bit binary PGM of |a|^2 normalized to its maximum."""
    img = f.intensity() if intensity is None else np.asarray(intensity, dtype=float)
    peak = img.max()
    if peak > 0:
        img = img / peak
    data = np.round(255.0 * img).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
