"""Scenario configuration: TOML schema, loading, validation, and bench building.

Configs are TOML files with unit-suffixed keys (``_m``, ``_rad``, ``_s``).
``validate_config`` reports schema findings (unknown scenario, missing or
mistyped keys, under-resolved diffusers) without running anything; the
scenario runner builds a :class:`~klyshko.engine.TwoArmSetup` and its SLM
layout from the validated dictionary.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .detection import MmfPose, NoiseConfig, SmfPose
from .diffusers import ScreenParams, calibrate_divergence, derive_screen_seed, make_phase_screen
from .elements import FreeSpace, LensFourier
from .engine import TwoArmSetup
from .errors import ConfigurationError
from .grid import GridSpec, make_grid
from .slm import SlmLayout, make_layout
from .spdc import CrystalKernel, PumpConfig

__all__ = ["Finding", "ValidationReport", "load_config", "validate_config", "build_bench"]

SCENARIO_NAMES = (
    "equivalence_oracle",
    "fig2_speckle",
    "fig3_optimize",
    "fig4_memory",
    "fig5_two_spots",
    "supp_deviations",
)

# section -> key -> (python type, required)
_SCHEMA: dict[str, dict[str, tuple[type, bool]]] = {
    "run": {
        "seed": (int, True),
        "seeds": (int, False),
        "output_dir": (str, False),
    },
    "grid": {
        "n_x": (int, True),
        "n_y": (int, True),
        "pitch_m": (float, True),
        "wavelength_m": (float, True),
    },
    "pump": {
        "waist_m": (float, True),
        "wavelength_m": (float, True),
        "profile": (str, False),
    },
    "crystal": {
        "length_m": (float, True),
        "phase_matching": (bool, True),
        "classical_mode": (str, False),
    },
    "slm": {
        "rows": (int, True),
        "cols": (int, True),
        "segments": (int, True),
        "segment_pitch_m": (float, True),
        "pinhole_radius_m": (float, False),
        "tilt_inside_rad_per_m": (float, False),
        "tilt_outside_rad_per_m": (float, False),
    },
    "diffuser1": {
        "correlation_length_m": (float, False),
        "divergence_half_angle_rad": (float, False),
        "phase_stdev_rad": (float, True),
        "gap_m": (float, False),
        "thick": (bool, False),
    },
    "diffuser2": {
        "correlation_length_m": (float, False),
        "divergence_half_angle_rad": (float, False),
        "phase_stdev_rad": (float, True),
        "gap_m": (float, False),
        "thick": (bool, False),
    },
    "detectors": {
        "focal_length_m": (float, True),
        "det2_waist_m": (float, True),
        "det2_center_m": (float, False),
        "target_kind": (str, False),
        "target_waist_m": (float, False),
        "target_core_diameter_m": (float, False),
        "target_theta_rad": (float, False),
        "target_theta_b_rad": (float, False),
        "scan_half_range_rad": (float, False),
        "scan_points": (int, False),
    },
    "optimizer": {
        "phase_steps": (int, False),
        "passes": (int, False),
        "alpha": (float, False),
        "baseline_patterns": (int, False),
    },
    "noise": {
        "enabled": (bool, False),
        "integration_time_s": (float, False),
        "singles_rate_1": (float, False),
        "singles_rate_2": (float, False),
        "coincidence_window_s": (float, False),
        "brightness": (float, False),
    },
    "memory": {
        "scan_max_rad": (float, False),
        "scan_points": (int, False),
        "beacon_waist_m": (float, False),
        "offaxis_shift_theta0": (float, False),
    },
}


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    path: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.path}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding]

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    def ok(self) -> bool:
        return not self.errors

    def __str__(self):
        if not self.findings:
            return "configuration valid: zero findings"
        return "\n".join(str(f) for f in self.findings)


def load_config(path) -> dict:
    """Parse a TOML config file; parse errors carry line/column context."""
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except _toml.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def _check_section(section: str, table: dict, findings: list[Finding]):
    schema = _SCHEMA[section]
    for key, (kind, required) in schema.items():
        if key not in table:
            if required:
                findings.append(Finding("error", f"{section}.{key}", "missing required key"))
            continue
        value = table[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
            findings.append(
                Finding("error", f"{section}.{key}", f"expected {kind.__name__}, got {type(value).__name__}")
            )
    for key in table:
        if key not in schema:
            findings.append(Finding("warning", f"{section}.{key}", "unknown key"))


def validate_dict(cfg: dict) -> ValidationReport:
    """Schema and physics checks on a parsed configuration."""
    findings: list[Finding] = []
    scenario = cfg.get("scenario")
    if scenario is None:
        findings.append(Finding("error", "scenario", "missing scenario name"))
    elif scenario not in SCENARIO_NAMES:
        findings.append(
            Finding("error", "scenario", f"unknown scenario {scenario!r}; see list-scenarios")
        )
    for section in _SCHEMA:
        table = cfg.get(section)
        if table is None:
            required = any(req for _, req in _SCHEMA[section].values())
            if required and section not in ("memory",):
                findings.append(Finding("error", section, "missing section"))
            continue
        if not isinstance(table, dict):
            findings.append(Finding("error", section, "expected a table"))
            continue
        _check_section(section, table, findings)
    for key in cfg:
        if key != "scenario" and key not in _SCHEMA:
            findings.append(Finding("warning", key, "unknown section"))
    if findings and any(f.severity == "error" for f in findings):
        return ValidationReport(findings)

    # physics-level checks need a syntactically sound config
    grid = cfg["grid"]
    pitch = float(grid["pitch_m"])
    wavelength = float(grid["wavelength_m"])
    nyquist = wavelength / (2.0 * pitch)
    for name in ("diffuser1", "diffuser2"):
        d = cfg.get(name, {})
        corr = d.get("correlation_length_m")
        if corr is not None and float(corr) < 2.0 * pitch:
            findings.append(
                Finding("error", f"{name}.correlation_length_m", "diffuser under-resolved")
            )
        div = d.get("divergence_half_angle_rad")
        if div is not None and float(div) >= 0.5 * nyquist:
            findings.append(
                Finding("error", f"{name}.divergence_half_angle_rad", "diffuser under-resolved")
            )
        if corr is None and div is None:
            findings.append(
                Finding(
                    "error",
                    name,
                    "need correlation_length_m or divergence_half_angle_rad",
                )
            )
    slm = cfg["slm"]
    if float(slm["segment_pitch_m"]) * int(slm["cols"]) > pitch * int(grid["n_x"]):
        findings.append(Finding("error", "slm.segment_pitch_m", "pupil exceeds grid extent"))
    det = cfg["detectors"]
    if float(det["det2_waist_m"]) <= 0:
        findings.append(Finding("error", "detectors.det2_waist_m", "must be positive"))
    return ValidationReport(findings)


def validate_config(path) -> ValidationReport:
    """Parse and validate a config file without running it."""
    try:
        cfg = load_config(path)
    except ConfigurationError as exc:
        return ValidationReport([Finding("error", str(path), str(exc))])
    return validate_dict(cfg)


@dataclass(frozen=True)
class Bench:
    """Everything a scenario needs: the two-arm setup plus SLM and poses."""

    setup: TwoArmSetup
    spec: GridSpec
    layout: SlmLayout
    pinhole: dict
    target: SmfPose | MmfPose
    target_b: SmfPose | MmfPose | None
    noise: NoiseConfig | None
    master_seed: int


def _screen_params(d: dict, spec: GridSpec, seed: int, index: int) -> ScreenParams:
    corr = d.get("correlation_length_m")
    if corr is None:
        corr = calibrate_divergence(
            spec, float(d["divergence_half_angle_rad"]), float(d["phase_stdev_rad"])
        )
    return ScreenParams(float(corr), float(d["phase_stdev_rad"]), derive_screen_seed(seed, index))


def _diffuser_elements(d: dict, spec: GridSpec, seed: int, base_index: int):
    first = make_phase_screen(spec, _screen_params(d, spec, seed, base_index))
    if not d.get("thick", False):
        return (first,)
    second = make_phase_screen(spec, _screen_params(d, spec, seed, base_index + 1))
    return (first, FreeSpace(float(d.get("gap_m", 0.0))), second)


def _target_pose(det: dict, focal: float, theta_key: str) -> SmfPose | MmfPose:
    center = focal * float(det.get(theta_key, 0.0))
    if det.get("target_kind", "smf") == "mmf":
        return MmfPose(center, float(det["target_core_diameter_m"]))
    return SmfPose(center, float(det.get("target_waist_m", 30e-6)))


def build_bench(cfg: dict, seed_offset: int = 0) -> Bench:
    """Construct the bench for a validated configuration.

    ``seed_offset`` re-seeds the disorder for ensemble members while keeping
    every other parameter fixed.
    """
    report = validate_dict(cfg)
    if not report.ok():
        raise ConfigurationError(f"invalid configuration:\n{report}")
    grid = cfg["grid"]
    spec = make_grid(grid["n_x"], grid["n_y"], grid["pitch_m"], grid["wavelength_m"])
    seed = int(cfg["run"]["seed"]) + seed_offset
    focal = float(cfg["detectors"]["focal_length_m"])

    pump = PumpConfig(
        waist=float(cfg["pump"]["waist_m"]),
        wavelength=float(cfg["pump"]["wavelength_m"]),
        profile=cfg["pump"].get("profile", "gaussian"),
    )
    crystal = cfg["crystal"]
    source = CrystalKernel(
        pump,
        crystal_length=float(crystal["length_m"]),
        phase_matching=bool(crystal["phase_matching"]),
    )
    mirror_mode = crystal.get("classical_mode", "perfect_mirror")
    mirror = (
        CrystalKernel(mode="perfect_mirror")
        if mirror_mode == "perfect_mirror"
        else CrystalKernel(pump, crystal_length=float(crystal["length_m"]), mode=mirror_mode)
    )

    arm1 = _diffuser_elements(cfg["diffuser1"], spec, seed, 0) + (LensFourier(focal),)
    arm2 = _diffuser_elements(cfg["diffuser2"], spec, seed, 2) + (LensFourier(focal),)

    det = cfg["detectors"]
    det2 = SmfPose(center=float(det.get("det2_center_m", 0.0)), waist=float(det["det2_waist_m"]))
    noise_cfg = cfg.get("noise", {})
    noise = None
    if noise_cfg.get("enabled", False):
        noise = NoiseConfig(
            integration_time=float(noise_cfg.get("integration_time_s", 0.1)),
            singles_rate_1=float(noise_cfg.get("singles_rate_1", 0.0)),
            singles_rate_2=float(noise_cfg.get("singles_rate_2", 0.0)),
            coincidence_window=float(noise_cfg.get("coincidence_window_s", 2e-9)),
            brightness=float(noise_cfg.get("brightness", 1000.0)),
            seed=seed,
        )
    slm = cfg["slm"]
    layout = make_layout(
        int(slm["rows"]), int(slm["cols"]), int(slm["segments"]), float(slm["segment_pitch_m"])
    )
    pinhole = {
        "pinhole_radius": float(slm.get("pinhole_radius_m", 0.0)),
        "tilt_inside": float(slm.get("tilt_inside_rad_per_m", 0.0)),
        "tilt_outside": float(slm.get("tilt_outside_rad_per_m", 0.0)),
    }
    setup = TwoArmSetup(
        crystal_spec=spec,
        arm1_tail=arm1,
        arm2_tail=arm2,
        focal_length=focal,
        mirror=mirror,
        source=source,
        det2=det2,
        brightness=float(noise_cfg.get("brightness", 1000.0)),
    )
    target = _target_pose(det, focal, "target_theta_rad")
    target_b = (
        _target_pose(det, focal, "target_theta_b_rad") if "target_theta_b_rad" in det else None
    )
    return Bench(setup, spec, layout, pinhole, target, target_b, noise, seed)
