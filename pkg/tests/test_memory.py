import numpy as np
import pytest

from klyshko.detection import SmfPose
from klyshko.diffusers import ScreenParams, derive_screen_seed, make_phase_screen
from klyshko.elements import FreeSpace, LensFourier
from klyshko.engine import TwoArmSetup
from klyshko.errors import ConfigurationError, FitError
from klyshko.grid import make_grid
from klyshko.memory import (
    MemoryScan,
    beacon_memory_scan,
    fit_memory,
    memory_model,
    memory_scan,
    optimize_beacon,
    shift_pose,
)
from klyshko.optimize import CostConfig, KlyshkoPower, SingleSpot, sequential_optimize
from klyshko.slm import flat_pattern, make_layout
from klyshko.spdc import CrystalKernel, PumpConfig

SPEC = make_grid(1024, 1, 8e-6, 810e-9)
FOCAL = 0.1
LAYOUT = make_layout(1, 64, 64, 3 * SPEC.pitch)
THETA_T = 0.5e-3
TARGET = SmfPose(FOCAL * THETA_T, 30e-6)
COST = CostConfig(SingleSpot(TARGET), KlyshkoPower())
SCAN = np.concatenate([np.linspace(0.06e-3, 1.0e-3, 9), [1.3e-3, 1.6e-3, 2.0e-3]])


def _setup(seed, thick_gap_1=2e-2, thick_gap_2=3e-2, arm2_thin=False):
    s = lambda i: derive_screen_seed(seed, i)

    def thick(base, gap):
        return (
            make_phase_screen(SPEC, ScreenParams(60e-6, 3.0, s(base))),
            FreeSpace(gap),
            make_phase_screen(SPEC, ScreenParams(60e-6, 3.0, s(base + 1))),
        )

    arm2 = (
        (make_phase_screen(SPEC, ScreenParams(60e-6, 3.0, s(2))),)
        if arm2_thin
        else thick(2, thick_gap_2)
    )
    return TwoArmSetup(
        crystal_spec=SPEC,
        arm1_tail=thick(0, thick_gap_1) + (LensFourier(FOCAL),),
        arm2_tail=arm2 + (LensFourier(FOCAL),),
        focal_length=FOCAL,
        mirror=CrystalKernel(mode="perfect_mirror"),
        source=CrystalKernel(
            PumpConfig(waist=700e-6), crystal_length=0.5e-3, phase_matching=True
        ),
        det2=SmfPose(center=0.0, waist=28e-6),
    )


def test_memory_model_limit_at_zero():
    assert memory_model(0.0, 2.2e-3) == 1.0
    assert memory_model(1e-15, 2.2e-3) == pytest.approx(1.0, abs=1e-12)


def test_memory_model_at_theta0():
    # direct evaluation of the closed form: (1/sinh 1)^2
    expected = (1.0 / np.sinh(1.0)) ** 2
    assert expected == pytest.approx(0.7241, abs=1e-4)
    assert memory_model(2.2e-3, 2.2e-3) == pytest.approx(expected, abs=1e-12)


def test_memory_model_far_tail():
    assert memory_model(10 * 2.2e-3, 2.2e-3) < 1e-6


def test_memory_model_even_and_decreasing():
    t0 = 1.5e-3
    xs = np.linspace(0.1e-3, 8e-3, 40)
    np.testing.assert_allclose(memory_model(xs, t0), memory_model(-xs, t0), rtol=1e-12)
    values = memory_model(xs, t0)
    assert np.all(np.diff(values) < 0)


def test_fit_memory_noiseless_round_trip():
    t0 = 2.2e-3
    dts = np.linspace(0.2e-3, 8e-3, 15)
    scan = MemoryScan(tuple(dts), tuple(memory_model(dts, t0)), "classical")
    fit = fit_memory(scan)
    assert fit.theta0 == pytest.approx(t0, rel=1e-6)
    assert fit.residual_rms < 1e-8


def test_fit_memory_with_noise_recovers_theta0():
    t0 = 2.2e-3
    dts = np.linspace(0.2e-3, 8e-3, 25)
    rng = np.random.default_rng(17)
    ratios = memory_model(dts, t0) * (1 + 0.02 * rng.standard_normal(dts.size))
    fit = fit_memory(MemoryScan(tuple(dts), tuple(np.abs(ratios)), "quantum"))
    assert fit.theta0 == pytest.approx(t0, rel=0.05)
    assert fit.theta0_uncertainty < 0.2 * t0


def test_fit_memory_rejects_degenerate_scans():
    dts = np.linspace(0.1e-3, 1e-3, 8)
    flat = MemoryScan(tuple(dts), tuple(np.full(dts.size, 0.97)), "classical")
    with pytest.raises(FitError, match="exceeds scan"):
        fit_memory(flat)
    with pytest.raises(FitError):
        fit_memory(MemoryScan((1e-3, 2e-3, 3e-3), (1.0, 0.5, 0.1), "classical"))


def test_shift_pose_scalar_and_tuple():
    assert shift_pose(SmfPose(1e-3, 30e-6), 5e-4).center == pytest.approx(1.5e-3)
    p = shift_pose(SmfPose((1e-3, 2e-3), 30e-6), -1e-3)
    assert p.center[0] == pytest.approx(0.0) and p.center[1] == pytest.approx(2e-3)


def test_single_conjugate_plane_screen_has_quasi_infinite_memory():
    # a thin screen imaged at the modulator plane commutes with tilts
    setup = _setup(seed=3, arm2_thin=True)
    import dataclasses

    thin1 = (make_phase_screen(SPEC, ScreenParams(60e-6, 3.0, 77)), LensFourier(FOCAL))
    setup = dataclasses.replace(setup, arm1_tail=thin1, arm2_tail=thin1)
    trace = sequential_optimize(setup, COST, flat_pattern(LAYOUT))
    scan = memory_scan(setup, trace.final_pattern, SCAN, "classical", TARGET)
    assert min(scan.ratios) >= 0.9
    with pytest.raises(FitError):
        fit_memory(scan)


def test_thick_diffuser_memory_fits_sinh_model():
    setup = _setup(seed=0)
    trace = sequential_optimize(setup, COST, flat_pattern(LAYOUT))
    for config in ("classical", "quantum"):
        scan = memory_scan(setup, trace.final_pattern, SCAN, config, TARGET)
        fit = fit_memory(scan)
        assert fit.residual_rms < 0.1
        assert 0.1e-3 < fit.theta0 < 1.0e-3
    assert scan.ratios[0] > 0.8  # small tilts stay within the memory range


def test_classical_and_quantum_memory_ranges_agree():
    setup = _setup(seed=1)
    trace = sequential_optimize(setup, COST, flat_pattern(LAYOUT))
    fc = fit_memory(memory_scan(setup, trace.final_pattern, SCAN, "classical", TARGET))
    fq = fit_memory(memory_scan(setup, trace.final_pattern, SCAN, "quantum", TARGET))
    assert abs(fc.theta0 - fq.theta0) / fq.theta0 < 0.15


def test_beacon_memory_is_broader():
    setup = _setup(seed=2)
    trace = sequential_optimize(setup, COST, flat_pattern(LAYOUT))
    fc = fit_memory(memory_scan(setup, trace.final_pattern, SCAN, "classical", TARGET))
    tb = optimize_beacon(setup, flat_pattern(LAYOUT), TARGET, waist=700e-6)
    fb = fit_memory(beacon_memory_scan(setup, tb.final_pattern, SCAN, TARGET, waist=700e-6))
    assert fb.theta0 > fc.theta0


def test_memory_range_never_grows_with_gap():
    # gap = 0 degenerates to a single conjugate-plane screen (infinite range)
    gaps = [0.0, 2e-2, 4.5e-2, 9e-2]
    medians = []
    for gap in gaps:
        fitted = []
        for seed in range(3):
            setup = _setup(10 + seed, thick_gap_1=gap, thick_gap_2=gap)
            trace = sequential_optimize(setup, COST, flat_pattern(LAYOUT))
            scan = memory_scan(setup, trace.final_pattern, SCAN, "classical", TARGET)
            try:
                fitted.append(fit_memory(scan).theta0)
            except FitError:
                fitted.append(np.inf)  # range exceeds the scan
        medians.append(np.median(fitted))
    assert all(a >= b for a, b in zip(medians, medians[1:]))


def test_memory_scan_validates_configuration():
    setup = _setup(seed=4)
    with pytest.raises(ConfigurationError):
        memory_scan(setup, flat_pattern(LAYOUT), SCAN, "sideways", TARGET)
