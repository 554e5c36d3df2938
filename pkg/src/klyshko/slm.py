"""Segmented phase modulator with a virtual pinhole, imaged at the crystal plane.

The active area is a rows x cols square tiling clipped to a circular pupil;
segments whose centers fall outside the clip radius are deactivated.  The
clip center carries a sub-segment offset (1e-4 segment units) so that center
distances are all distinct, which makes any active-segment count attainable
by choice of radius; a perfectly centered circle on an odd tiling can only
realize counts of the form 4k+1.

The virtual pinhole adds opposite linear phase tilts (along x) inside and
outside a disk, separating pupil light from stray light in the far field.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .elements import Mask
from .errors import ConfigurationError
from .grid import GridSpec, SampledField

__all__ = [
    "SlmLayout",
    "SlmPattern",
    "make_layout",
    "active_segments",
    "flat_pattern",
    "random_pattern",
    "slm_to_mask",
    "set_segment",
    "save_pattern",
    "load_pattern",
]

TWO_PI = 2.0 * np.pi
_CLIP_OFFSET = (1e-4, 1e-4 * np.sqrt(2.0))  # segment units, breaks lattice ties


@dataclass(frozen=True)
class SlmLayout:
    """Segment tiling geometry: counts, physical segment pitch [m], clip radius."""

    rows: int
    cols: int
    segment_pitch: float
    clip_radius: float  # in segment units

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("layout needs at least one row and one column")
        if not (self.segment_pitch > 0):
            raise ConfigurationError("segment pitch must be positive")

    @property
    def n_active(self) -> int:
        return len(active_segments(self))

    @property
    def width(self) -> float:
        return self.cols * self.segment_pitch

    @property
    def height(self) -> float:
        return self.rows * self.segment_pitch


def _center_distances(rows: int, cols: int) -> np.ndarray:
    r = np.arange(rows)[:, None] - (rows - 1) / 2.0 - _CLIP_OFFSET[1]
    c = np.arange(cols)[None, :] - (cols - 1) / 2.0 - _CLIP_OFFSET[0]
    return np.hypot(c, r)


@lru_cache(maxsize=64)
def _active_table(layout: SlmLayout) -> tuple[tuple[tuple[int, int], ...], np.ndarray]:
    d = _center_distances(layout.rows, layout.cols)
    inside = d <= layout.clip_radius
    ids = np.full((layout.rows, layout.cols), -1, dtype=int)
    order = []
    k = 0
    for r in range(layout.rows):
        for c in range(layout.cols):
            if inside[r, c]:
                ids[r, c] = k
                order.append((r, c))
                k += 1
    ids.setflags(write=False)
    return tuple(order), ids


def active_segments(layout: SlmLayout) -> tuple[tuple[int, int], ...]:
    """(row, col) of active segments in row-major order."""
    return _active_table(layout)[0]


def make_layout(rows: int, cols: int, n_active: int, segment_pitch: float) -> SlmLayout:
    """Layout whose circular clip keeps exactly ``n_active`` segments."""
    if not (1 <= n_active <= rows * cols):
        raise ConfigurationError(
            f"cannot keep {n_active} of {rows * cols} segments"
        )
    d = np.sort(_center_distances(rows, cols).ravel())
    if n_active == rows * cols:
        radius = float(d[-1] + 1.0)
    else:
        lo, hi = d[n_active - 1], d[n_active]
        if hi <= lo:
            raise ConfigurationError("degenerate segment distances; cannot hit count")
        radius = float(0.5 * (lo + hi))
    layout = SlmLayout(rows, cols, segment_pitch, radius)
    assert layout.n_active == n_active
    return layout


@dataclass(frozen=True)
class SlmPattern:
    """Per-segment phases plus the virtual-pinhole tilt configuration."""

    layout: SlmLayout
    phases: tuple[float, ...]
    pinhole_radius: float = 0.0  # [m]; 0 disables the pinhole
    tilt_inside: float = 0.0  # [rad/m]
    tilt_outside: float = 0.0  # [rad/m]

    def __post_init__(self):
        n = self.layout.n_active
        if len(self.phases) != n:
            raise ConfigurationError(
                f"pattern has {len(self.phases)} phases for {n} active segments"
            )
        object.__setattr__(
            self, "phases", tuple(float(p) % TWO_PI for p in self.phases)
        )
        if self.pinhole_radius > 0 and self.tilt_inside == self.tilt_outside:
            raise ConfigurationError(
                "virtual pinhole requires distinct inside/outside tilts"
            )

    @property
    def n_segments(self) -> int:
        return self.layout.n_active

    def phase_array(self) -> np.ndarray:
        return np.asarray(self.phases)


def flat_pattern(layout: SlmLayout, **pinhole) -> SlmPattern:
    """All-zero phases; keyword arguments configure the pinhole."""
    return SlmPattern(layout, (0.0,) * layout.n_active, **pinhole)


def random_pattern(layout: SlmLayout, seed: int, **pinhole) -> SlmPattern:
    """Uniform random phases in [0, 2*pi), deterministic per seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1)])))
    return SlmPattern(layout, tuple(rng.uniform(0.0, TWO_PI, layout.n_active)), **pinhole)


def set_segment(pattern: SlmPattern, index: int, phase: float) -> SlmPattern:
    """Value-semantics update of one segment phase (wrapped to [0, 2*pi))."""
    if not 0 <= index < pattern.n_segments:
        raise IndexError(f"segment index {index} out of range 0..{pattern.n_segments - 1}")
    phases = list(pattern.phases)
    phases[index] = float(phase) % TWO_PI
    return replace(pattern, phases=tuple(phases))


def slm_to_mask(pattern: SlmPattern, spec: GridSpec) -> Mask:
    """Render the pattern as a unit-amplitude phase mask on ``spec``.

    Each active segment contributes a constant phase over its tile; pixels
    outside the pupil carry zero segment phase.  With the pinhole enabled,
    pixels inside the disk get the inside tilt and all others the outside
    tilt.  Pixel membership uses the pixel-center criterion, so the mask is a
    pure, bit-stable function of (pattern, spec).
    """
    layout = pattern.layout
    if layout.width > spec.extent_x + 1e-12 or (
        not spec.is_1d and layout.height > spec.extent_y + 1e-12
    ):
        raise ConfigurationError("SLM pupil exceeds the grid extent")
    X, Y = spec.mesh()
    sp = layout.segment_pitch
    col = np.floor((X + layout.width / 2.0) / sp).astype(int)
    row = np.floor((Y + layout.height / 2.0) / sp).astype(int)
    in_box = (col >= 0) & (col < layout.cols) & (row >= 0) & (row < layout.rows)
    ids = _active_table(layout)[1]
    seg = np.where(in_box, ids[row.clip(0, layout.rows - 1), col.clip(0, layout.cols - 1)], -1)
    lookup = np.append(pattern.phase_array(), 0.0)  # seg == -1 -> phase 0
    phase = lookup[seg]
    if pattern.pinhole_radius > 0:
        inside = X**2 + Y**2 <= pattern.pinhole_radius**2
        phase = phase + np.where(inside, pattern.tilt_inside, pattern.tilt_outside) * X
    return Mask(SampledField(spec, np.exp(1j * phase), "slm"))


def save_pattern(pattern: SlmPattern, path) -> None:
    """Text format: layout metadata header, then one `index phase` line per segment."""
    lines = [
        f"# rows {pattern.layout.rows}",
        f"# cols {pattern.layout.cols}",
        f"# segment_pitch_m {pattern.layout.segment_pitch!r}",
        f"# clip_radius {pattern.layout.clip_radius!r}",
        f"# pinhole_radius_m {pattern.pinhole_radius!r}",
        f"# tilt_inside_rad_per_m {pattern.tilt_inside!r}",
        f"# tilt_outside_rad_per_m {pattern.tilt_outside!r}",
    ]
    lines += [f"{i} {p!r}" for i, p in enumerate(pattern.phases)]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pattern(path) -> SlmPattern:
    """Read a pattern written by :func:`save_pattern`."""
    meta: dict[str, str] = {}
    entries: dict[int, float] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                _, key, value = line.split(None, 2)
                meta[key] = value
            else:
                idx, phase = line.split()
                entries[int(idx)] = float(phase)
    layout = SlmLayout(
        int(meta["rows"]),
        int(meta["cols"]),
        float(meta["segment_pitch_m"]),
        float(meta["clip_radius"]),
    )
    phases = tuple(entries[i] for i in range(len(entries)))
    return SlmPattern(
        layout,
        phases,
        pinhole_radius=float(meta["pinhole_radius_m"]),
        tilt_inside=float(meta["tilt_inside_rad_per_m"]),
        tilt_outside=float(meta["tilt_outside_rad_per_m"]),
    )
