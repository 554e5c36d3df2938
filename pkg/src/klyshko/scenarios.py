"""Named experiment scenarios with reproducible seeds and structured outputs.

Each scenario builds a bench from its configuration, runs the corresponding
measurement sequence, writes CSV data, PGM previews, raw fields, and a JSON
manifest, and checks its internal assertions (a failed assertion still
writes all artifacts, then raises).  All numeric artifacts are deterministic
functions of (config, seeds) and independent of the thread count.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__ as _version
from .config import SCENARIO_NAMES, Bench, build_bench, load_config, validate_dict
from .detection import SmfPose, detector_power
from .diffusers import ScreenParams, make_phase_screen
from .elements import FreeSpace, LensFourier, Magnifier, arm_apply, make_arm
from .errors import ConfigurationError, KlyshkoError
from .fieldio import save_field, save_pgm
from .grid import SampledField, gaussian_mode, make_grid
from .memory import (
    beacon_memory_scan,
    fit_memory,
    memory_scan,
    optimize_beacon,
    shift_pose,
)
from .optimize import (
    CostConfig,
    KlyshkoPower,
    QuantumCoincidence,
    SingleSpot,
    TwoSpot,
    enhancement,
    efficiency,
    evaluate_cost,
    sequential_optimize,
    speckle_baseline,
)
from .slm import flat_pattern, save_pattern
from .spdc import CrystalKernel, PumpConfig, brute_force_coincidence, coincidence_amplitude

__all__ = ["RunManifest", "ScenarioAssertionError", "run_scenario", "list_scenarios"]


class ScenarioAssertionError(KlyshkoError):
    """An internal scenario assertion failed (artifacts were still written)."""


@dataclass
class RunManifest:
    scenario: str
    config_hash: str
    seeds: list[int]
    artifacts: list[str]
    assertions: list[dict]
    wall_clock_s: float
    version: str

    def write(self, path: Path):
        with open(path, "w", encoding="ascii") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)
            fh.write("\n")


def list_scenarios() -> tuple[str, ...]:
    return SCENARIO_NAMES


def default_config_path(name: str) -> Path:
    return Path(str(resources.files("klyshko") / "configs" / f"{name}.toml"))


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def pmap(fn, items, threads: int = 1) -> list:
    """Order-preserving map, optionally threaded; results identical either way."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in row) for row in rows]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _scan_poses(bench: Bench, det: dict):
    half = float(det.get("scan_half_range_rad", 3e-3))
    n = int(det.get("scan_points", 81))
    f = bench.setup.focal_length
    thetas = np.linspace(-half, half, n)
    waist = float(det.get("target_waist_m", 30e-6))
    return thetas, [SmfPose(f * t, waist) for t in thetas]


def _pattern0(bench: Bench):
    return flat_pattern(bench.layout, **bench.pinhole)


# --------------------------------------------------------------------------
# scenario implementations
# --------------------------------------------------------------------------


def _run_equivalence_oracle(cfg: dict, outdir: Path, threads: int):
    grid = cfg["grid"]
    spec = make_grid(grid["n_x"], grid["n_y"], grid["pitch_m"], grid["wavelength_m"])
    master = int(cfg["run"]["seed"])
    n_scenes = int(cfg["run"].get("seeds", 20))
    rng = np.random.default_rng(master)

    def one_scene(i):
        arms = []
        for _ in range(2):
            elements = [
                make_phase_screen(
                    spec,
                    ScreenParams(
                        float(cfg["diffuser1"]["correlation_length_m"]),
                        float(rng.uniform(1.5, 3.0)),
                        int(rng.integers(2**31)),
                    ),
                )
            ]
            if rng.random() < 0.5:
                elements.append(FreeSpace(float(rng.uniform(0.0, 3e-2))))
            if rng.random() < 0.3:
                elements.append(Magnifier(float(rng.choice([0.5, 2.0]))))
            elements.append(LensFourier(float(cfg["detectors"]["focal_length_m"])))
            arms.append(make_arm(elements, spec))
        arm1, arm2 = arms
        p1, p2 = arm1.exit_spec.pitch, arm2.exit_spec.pitch
        m1 = gaussian_mode(arm1.exit_spec, 4 * p1, float(rng.uniform(-20, 20)) * p1)
        tilt = float(rng.uniform(1e-3, 4e-3)) if i < 4 else 0.0
        m2 = gaussian_mode(
            arm2.exit_spec, 4 * p2, float(rng.uniform(-20, 20)) * p2, tilt_angle=tilt
        )
        kernel = CrystalKernel(
            PumpConfig(waist=float(rng.uniform(150e-6, 400e-6))),
            crystal_length=float(cfg["crystal"]["length_m"]),
            phase_matching=bool(cfg["crystal"]["phase_matching"]),
        )
        fast = coincidence_amplitude(kernel, arm1, arm2, m1, m2)
        slow = brute_force_coincidence(kernel, arm1, arm2, m1, m2)
        rel = abs(abs(fast) ** 2 - abs(slow) ** 2) / abs(slow) ** 2
        return (i, abs(fast) ** 2, abs(slow) ** 2, rel, tilt != 0.0)

    # scene construction consumes the rng sequentially; parallelism not worth it
    rows = [one_scene(i) for i in range(n_scenes)]
    _write_csv(
        outdir / "oracle_scenes.csv",
        "scene,factorized_rate,brute_force_rate,relative_error,tilted_mode",
        rows,
    )
    worst = max(r[3] for r in rows)
    assertions = [
        {
            "name": "oracle_equivalence_rel_error",
            "ok": bool(worst < 1e-6),
            "detail": f"max relative |A|^2 error {worst:.3e} over {n_scenes} scenes (< 1e-6)",
        }
    ]
    return [outdir / "oracle_scenes.csv"], assertions, [master]


def _coincidence_map_2d(bench: Bench, pattern, thetas, threads: int = 1):
    e = bench.setup.coincidence_field(pattern)
    f = bench.setup.focal_length
    waist = bench.target.waist if isinstance(bench.target, SmfPose) else 40e-6

    def one_row(ty):
        return [detector_power(e, SmfPose((f * tx, f * ty), waist)) for tx in thetas]

    return np.array(pmap(one_row, thetas, threads))


def _run_fig2_speckle(cfg: dict, outdir: Path, threads: int):
    bench = build_bench(cfg)
    p0 = _pattern0(bench)
    det = cfg["detectors"]
    half = float(det.get("scan_half_range_rad", 3e-3))
    n = int(det.get("scan_points", 33))
    thetas = np.linspace(-half, half, n)

    quantum = _coincidence_map_2d(bench, p0, thetas, threads) * bench.setup.brightness
    classical_field = bench.setup.klyshko_field(p0)
    f = bench.setup.focal_length
    waist = bench.target.waist if isinstance(bench.target, SmfPose) else 40e-6

    def classical_row(ty):
        return [
            detector_power(classical_field, SmfPose((f * tx, f * ty), waist))
            for tx in thetas
        ]

    classical_map = np.array(pmap(classical_row, thetas, threads))

    artifacts = []
    for name, grid_map in (
        ("two_photon_speckle.csv", quantum),
        ("klyshko_speckle_scan.csv", classical_map),
    ):
        rows = [
            (float(tx), float(ty), float(grid_map[iy, ix]))
            for iy, ty in enumerate(thetas)
            for ix, tx in enumerate(thetas)
        ]
        _write_csv(outdir / name, "pose_x_rad,pose_y_rad,rate", rows)
        artifacts.append(outdir / name)
    # PGM previews: quantum map and the classical camera image
    save_pgm(classical_field, outdir / "klyshko_speckle.pgm")
    artifacts.append(outdir / "klyshko_speckle.pgm")
    save_pgm(classical_field, outdir / "two_photon_speckle.pgm", intensity=quantum)
    artifacts.append(outdir / "two_photon_speckle.pgm")
    save_field(classical_field, outdir / "klyshko_field.awp")
    artifacts.append(outdir / "klyshko_field.awp")

    # the figure's message: the classical pattern resembles the two-photon
    # speckle.  Check the pointwise correlation of the two maps plus the
    # quantum speckle contrast.
    q = quantum.ravel() - quantum.mean()
    c = classical_map.ravel() - classical_map.mean()
    resemblance = float(np.sum(q * c) / np.sqrt(np.sum(q**2) * np.sum(c**2)))
    c_quantum = float(quantum.std() / quantum.mean())
    assertions = [
        {
            "name": "speckle_resemblance",
            "ok": bool(resemblance > 0.5 and 0.3 < c_quantum < 3.0),
            "detail": f"map correlation {resemblance:.2f} (> 0.5), "
            f"quantum contrast {c_quantum:.2f}",
        }
    ]
    return artifacts, assertions, [bench.master_seed]


def _fig3_metrics(bench: Bench, cfg: dict):
    """Optimize classically, transfer to the quantum configuration, measure."""
    opt = cfg.get("optimizer", {})
    p0 = _pattern0(bench)
    cost_cl = CostConfig(SingleSpot(bench.target), KlyshkoPower())
    cost_q = CostConfig(SingleSpot(bench.target), QuantumCoincidence())
    n_base = int(opt.get("baseline_patterns", 16))

    base_cl = speckle_baseline(bench.setup, cost_cl, p0, n_base, bench.master_seed + 500)
    trace = sequential_optimize(
        bench.setup, cost_cl, p0, int(opt.get("phase_steps", 8)), int(opt.get("passes", 1))
    )
    base_q = speckle_baseline(bench.setup, cost_q, p0, n_base, bench.master_seed + 500)
    q_opt = evaluate_cost(bench.setup, cost_q, trace.final_pattern)

    clean = replace(bench.setup, brightness=bench.setup.brightness).without_diffusers()
    ref_cl = evaluate_cost(clean, cost_cl, p0)
    ref_q = evaluate_cost(clean, cost_q, p0)

    enh_cl = enhancement(trace.best_cost, base_cl)
    enh_q = enhancement(q_opt, base_q)
    trace.enhancement = enh_cl
    trace.efficiency = efficiency(trace.best_cost, ref_cl)
    return {
        "trace": trace,
        "enh_classical": enh_cl,
        "enh_quantum": enh_q,
        "eff_classical": trace.efficiency,
        "eff_quantum": efficiency(q_opt, ref_q),
        "transfer_ratio": enh_q / enh_cl,
    }


def _run_fig3_optimize(cfg: dict, outdir: Path, threads: int):
    bench = build_bench(cfg)
    det = cfg["detectors"]
    thetas, poses = _scan_poses(bench, det)
    p0 = _pattern0(bench)
    m = _fig3_metrics(bench, cfg)
    trace = m["trace"]

    artifacts = []

    def scan_csv(name, pattern, which):
        fld = (
            bench.setup.klyshko_field(pattern)
            if which == "classical"
            else bench.setup.coincidence_field(pattern)
        )
        scale = 1.0 if which == "classical" else bench.setup.brightness
        rows = [(float(t), 0.0, scale * detector_power(fld, p)) for t, p in zip(thetas, poses)]
        _write_csv(outdir / name, "pose_x_rad,pose_y_rad,rate", rows)
        artifacts.append(outdir / name)
        return fld

    clean_bench = replace(bench, setup=bench.setup.without_diffusers())
    clean_field = clean_bench.setup.klyshko_field(p0)
    save_pgm(clean_field, outdir / "focus_no_diffuser.pgm")
    artifacts.append(outdir / "focus_no_diffuser.pgm")

    before = scan_csv("classical_before.csv", p0, "classical")
    save_pgm(before, outdir / "classical_before.pgm")
    artifacts.append(outdir / "classical_before.pgm")
    scan_csv("quantum_before.csv", p0, "quantum")
    after = scan_csv("classical_after.csv", trace.final_pattern, "classical")
    save_pgm(after, outdir / "classical_after.pgm")
    artifacts.append(outdir / "classical_after.pgm")
    scan_csv("quantum_after.csv", trace.final_pattern, "quantum")

    trace.to_csv(outdir / "optimization_trace.csv")
    artifacts.append(outdir / "optimization_trace.csv")
    save_pattern(trace.final_pattern, outdir / "optimized_pattern.txt")
    artifacts.append(outdir / "optimized_pattern.txt")
    _write_csv(
        outdir / "metrics.csv",
        "enh_classical,enh_quantum,eff_classical,eff_quantum,transfer_ratio",
        [
            (
                m["enh_classical"],
                m["enh_quantum"],
                m["eff_classical"],
                m["eff_quantum"],
                m["transfer_ratio"],
            )
        ],
    )
    artifacts.append(outdir / "metrics.csv")

    n_seg = bench.layout.n_active
    ideal = np.pi / 4 * (n_seg - 1)
    assertions = [
        {
            "name": "classical_enhancement_window",
            "ok": bool(0.5 * ideal <= m["enh_classical"] <= 1.2 * ideal),
            "detail": f"enhancement {m['enh_classical']:.1f} vs window [{0.5 * ideal:.1f}, {1.2 * ideal:.1f}]",
        },
        {
            "name": "quantum_transfer",
            "ok": bool(m["transfer_ratio"] >= 0.5),
            "detail": f"quantum/classical enhancement ratio {m['transfer_ratio']:.2f} (>= 0.5)",
        },
    ]
    return artifacts, assertions, [bench.master_seed]


def _run_fig4_memory(cfg: dict, outdir: Path, threads: int):
    bench = build_bench(cfg)
    mem = cfg.get("memory", {})
    scan_max = float(mem.get("scan_max_rad", 2e-3))
    n_scan = int(mem.get("scan_points", 12))
    dths = np.concatenate(
        [np.linspace(scan_max / 30, scan_max / 2, n_scan - 3), np.linspace(0.65, 1.0, 3) * scan_max]
    )
    beacon_waist = float(mem.get("beacon_waist_m", 700e-6))
    opt = cfg.get("optimizer", {})
    p0 = _pattern0(bench)
    cost = CostConfig(SingleSpot(bench.target), KlyshkoPower())
    trace = sequential_optimize(bench.setup, cost, p0, int(opt.get("phase_steps", 8)))
    pattern = trace.final_pattern

    artifacts = []
    fits = {}
    for config in ("classical", "quantum"):
        scan = memory_scan(bench.setup, pattern, dths, config, bench.target)
        scan.to_csv(outdir / f"memory_{config}.csv")
        artifacts.append(outdir / f"memory_{config}.csv")
        fits[config] = fit_memory(scan)
    btrace = optimize_beacon(bench.setup, p0, bench.target, beacon_waist)
    bscan = beacon_memory_scan(bench.setup, btrace.final_pattern, dths, bench.target, beacon_waist)
    bscan.to_csv(outdir / "memory_beacon.csv")
    artifacts.append(outdir / "memory_beacon.csv")
    fits["beacon"] = fit_memory(bscan)

    with open(outdir / "memory_fits.json", "w", encoding="ascii") as fh:
        json.dump(
            {
                k: {
                    "theta0_rad": v.theta0,
                    "theta0_uncertainty_rad": v.theta0_uncertainty,
                    "residual_rms": v.residual_rms,
                }
                for k, v in fits.items()
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    artifacts.append(outdir / "memory_fits.json")

    # off-axis deterioration and re-optimization
    shift = float(mem.get("offaxis_shift_theta0", 2.5)) * fits["quantum"].theta0
    f = bench.setup.focal_length
    det2_off = shift_pose(bench.setup.det2, f * shift)
    probe_off = shift_pose(bench.target, -f * shift)
    q_orig = bench.setup.coincidence_power(pattern, bench.target)
    q_drop = bench.setup.coincidence_power(pattern, probe_off, det2_off) / q_orig
    setup_off = replace(bench.setup, det2=det2_off)
    trace_off = sequential_optimize(
        setup_off, CostConfig(SingleSpot(probe_off), KlyshkoPower()), p0,
        int(opt.get("phase_steps", 8)),
    )
    q_reopt = setup_off.coincidence_power(trace_off.final_pattern, probe_off, det2_off) / q_orig
    _write_csv(
        outdir / "offaxis.csv",
        "shift_rad,drop_ratio,reoptimized_ratio",
        [(shift, q_drop, q_reopt)],
    )
    artifacts.append(outdir / "offaxis.csv")

    agree = abs(fits["classical"].theta0 - fits["quantum"].theta0) / fits["quantum"].theta0
    assertions = [
        {
            "name": "sinh_fit_quality",
            "ok": bool(
                fits["classical"].residual_rms < 0.1 and fits["quantum"].residual_rms < 0.1
            ),
            "detail": f"residual rms classical {fits['classical'].residual_rms:.3f}, "
            f"quantum {fits['quantum'].residual_rms:.3f} (< 0.1)",
        },
        {
            "name": "classical_quantum_agreement",
            "ok": bool(agree < 0.15),
            "detail": f"theta0 classical {fits['classical'].theta0:.3e} rad vs "
            f"quantum {fits['quantum'].theta0:.3e} rad ({agree * 100:.1f}%)",
        },
        {
            "name": "beacon_memory_broader",
            "ok": bool(
                fits["beacon"].theta0 > max(fits["classical"].theta0, fits["quantum"].theta0)
            ),
            "detail": f"beacon theta0 {fits['beacon'].theta0:.3e} rad",
        },
        {
            "name": "offaxis_drop_and_reoptimization",
            "ok": bool(q_drop < 0.4 and q_reopt >= 0.8),
            "detail": f"drop {q_drop:.2f} (< 0.4), re-optimized {q_reopt:.2f} (>= 0.8)",
        },
    ]
    return artifacts, assertions, [bench.master_seed]


def _run_fig5_two_spots(cfg: dict, outdir: Path, threads: int):
    bench = build_bench(cfg)
    if bench.target_b is None:
        raise ConfigurationError("fig5_two_spots needs detectors.target_theta_b_rad")
    opt = cfg.get("optimizer", {})
    alpha = float(opt.get("alpha", 0.2))
    p0 = _pattern0(bench)
    cost = CostConfig(TwoSpot(bench.target, bench.target_b, alpha), KlyshkoPower())
    trace = sequential_optimize(
        bench.setup, cost, p0, int(opt.get("phase_steps", 8)), int(opt.get("passes", 1))
    )

    det = cfg["detectors"]
    thetas, poses = _scan_poses(bench, det)
    artifacts = []
    for name, pattern, which in (
        ("classical_before.csv", p0, "classical"),
        ("classical_after.csv", trace.final_pattern, "classical"),
        ("quantum_after.csv", trace.final_pattern, "quantum"),
    ):
        fld = (
            bench.setup.klyshko_field(pattern)
            if which == "classical"
            else bench.setup.coincidence_field(pattern)
        )
        rows = [(float(t), 0.0, detector_power(fld, p)) for t, p in zip(thetas, poses)]
        _write_csv(outdir / name, "pose_x_rad,pose_y_rad,rate", rows)
        artifacts.append(outdir / name)
        save_pgm(fld, outdir / name.replace(".csv", ".pgm"))
        artifacts.append(outdir / name.replace(".csv", ".pgm"))
    trace.to_csv(outdir / "optimization_trace.csv")
    artifacts.append(outdir / "optimization_trace.csv")
    save_pattern(trace.final_pattern, outdir / "optimized_pattern.txt")
    artifacts.append(outdir / "optimized_pattern.txt")

    fld = bench.setup.klyshko_field(trace.final_pattern)
    i_a = detector_power(fld, bench.target)
    i_b = detector_power(fld, bench.target_b)
    base_a = speckle_baseline(
        bench.setup, CostConfig(SingleSpot(bench.target), KlyshkoPower()), p0,
        int(opt.get("baseline_patterns", 16)), bench.master_seed + 500,
    )
    base_b = speckle_baseline(
        bench.setup, CostConfig(SingleSpot(bench.target_b), KlyshkoPower()), p0,
        int(opt.get("baseline_patterns", 16)), bench.master_seed + 500,
    )
    imbalance = abs(i_a - i_b) / max(i_a, i_b)
    _write_csv(
        outdir / "metrics.csv",
        "spot_a,spot_b,enh_a,enh_b,imbalance",
        [(i_a, i_b, i_a / base_a, i_b / base_b, imbalance)],
    )
    artifacts.append(outdir / "metrics.csv")
    assertions = [
        {
            "name": "two_spot_enhancements",
            "ok": bool(i_a / base_a >= 5.0 and i_b / base_b >= 5.0),
            "detail": f"enhancements {i_a / base_a:.1f}, {i_b / base_b:.1f} (>= 5)",
        },
        {
            "name": "two_spot_balance",
            "ok": bool(imbalance <= 0.25),
            "detail": f"imbalance {imbalance * 100:.1f}% (<= 25%)",
        },
    ]
    return artifacts, assertions, [bench.master_seed]


def _second_moment_width(field: SampledField) -> float:
    x = field.spec.x()
    inten = field.intensity()[0] if field.spec.is_1d else field.intensity().sum(axis=0)
    total = inten.sum()
    mean = (x * inten).sum() / total
    return float(2.0 * np.sqrt(((x - mean) ** 2 * inten).sum() / total))


def _run_supp_deviations(cfg: dict, outdir: Path, threads: int):
    from .spdc import crystal_apply

    bench = build_bench(cfg)
    setup = bench.setup
    back = arm_apply(setup.arm2(), setup.source_mode().conjugated(), "backward")
    masked_kernel = CrystalKernel(
        setup.source.pump, setup.source.crystal_length, mode="pump_masked_mirror"
    )
    w_mirror = _second_moment_width(crystal_apply(setup.mirror, back))
    w_masked = _second_moment_width(crystal_apply(masked_kernel, back))
    artifacts = []
    _write_csv(
        outdir / "beam_widths.csv",
        "reflection,width_m",
        [("perfect_mirror", w_mirror), ("pump_masked_mirror", w_masked)],
    )
    artifacts.append(outdir / "beam_widths.csv")

    # virtual pinhole: pupil and background light separate in the far field
    p0 = _pattern0(bench)
    mask = setup.slm_mask(p0)
    spec = setup.crystal_spec
    broad = gaussian_mode(spec, waist=spec.extent_x / 4)
    lens = make_arm((mask, LensFourier(setup.focal_length)), spec)
    out = arm_apply(lens, broad, "forward")
    save_pgm(out, outdir / "pinhole_far_field.pgm")
    artifacts.append(outdir / "pinhole_far_field.pgm")
    inten = out.intensity()[0]
    x = out.spec.x()
    pos, neg = inten[x > 0], inten[x < 0]
    lobe_sep = float(
        (x[x > 0] * pos).sum() / pos.sum() - (x[x < 0] * neg).sum() / neg.sum()
    )
    expected = 2 * setup.focal_length * p0.tilt_inside / spec.wavenumber
    _write_csv(
        outdir / "pinhole_lobes.csv",
        "lobe_separation_m,expected_m",
        [(lobe_sep, expected)],
    )
    artifacts.append(outdir / "pinhole_lobes.csv")

    assertions = [
        {
            "name": "mirror_beam_wider_than_pump_masked",
            "ok": bool(w_mirror > w_masked),
            "detail": f"widths {w_mirror:.3e} m (mirror) vs {w_masked:.3e} m (pump mask)",
        }
    ]
    return artifacts, assertions, [bench.master_seed]


_RUNNERS = {
    "equivalence_oracle": _run_equivalence_oracle,
    "fig2_speckle": _run_fig2_speckle,
    "fig3_optimize": _run_fig3_optimize,
    "fig4_memory": _run_fig4_memory,
    "fig5_two_spots": _run_fig5_two_spots,
    "supp_deviations": _run_supp_deviations,
}


def run_scenario(
    name_or_path: str,
    output_root: str | Path | None = None,
    threads: int = 1,
) -> RunManifest:
    """Run a named scenario or a TOML config; returns the written manifest.

    Raises :class:`ConfigurationError` for unknown scenarios or invalid
    configs, :class:`ScenarioAssertionError` when an internal assertion
    fails (after writing all artifacts and the manifest).
    """
    path = Path(name_or_path)
    if name_or_path in SCENARIO_NAMES:
        path = default_config_path(name_or_path)
    elif not path.exists():
        raise ConfigurationError(
            f"unknown scenario or missing config file: {name_or_path!r}"
        )
    cfg = load_config(path)
    report = validate_dict(cfg)
    if not report.ok():
        raise ConfigurationError(f"invalid configuration {path}:\n{report}")
    scenario = cfg["scenario"]
    root = Path(output_root) if output_root else Path(cfg["run"].get("output_dir", "out"))
    outdir = root / scenario
    outdir.mkdir(parents=True, exist_ok=True)

    start = time.monotonic()
    artifacts, assertions, seeds = _RUNNERS[scenario](cfg, outdir, threads)
    manifest = RunManifest(
        scenario=scenario,
        config_hash=_config_hash(cfg),
        seeds=[int(s) for s in seeds],
        artifacts=sorted(str(Path(a).name) for a in artifacts),
        assertions=assertions,
        wall_clock_s=time.monotonic() - start,
        version=_version,
    )
    manifest.write(outdir / "manifest.json")
    failed = [a for a in assertions if not a["ok"]]
    if failed:
        details = "; ".join(f"{a['name']}: {a['detail']}" for a in failed)
        raise ScenarioAssertionError(f"{scenario}: {details}")
    return manifest
