"""Scalar wave-optics toolkit for shaping photon-pair correlations through
thick scattering media, driven by a counter-propagating classical beacon.

The package simulates, at desk scale, a two-photon experiment in which
spatially entangled photon pairs traverse independent diffusers, together
with its classical twin: a laser injected backward through one collection
fiber, reflected at the source plane, and detected through the other arm.
Optical reciprocity makes the classical intensity proportional to the pair
coincidence rate, so a spatial light modulator optimized on the bright
classical signal also refocuses the quantum correlations.
"""

__version__ = "0.1.0"

from .errors import (
    CalibrationError,
    ConfigurationError,
    FitError,
    GridMismatchError,
    KlyshkoError,
    SamplingError,
)
from .grid import (
    GridSpec,
    SampledField,
    farfield,
    gaussian_mode,
    make_grid,
    overlap,
    specs_match,
)
from .fieldio import load_field, save_field, save_pgm
from .elements import (
    Element,
    FreeSpace,
    LensFourier,
    Magnifier,
    Mask,
    OpticalArm,
    apply_element,
    arm_apply,
    attenuator,
    make_arm,
)
from .diffusers import (
    ScreenParams,
    ThickDiffuser,
    calibrate_divergence,
    derive_screen_seed,
    divergence_half_angle,
    make_phase_screen,
    thick_diffuser_elements,
)
from .slm import (
    SlmLayout,
    SlmPattern,
    flat_pattern,
    load_pattern,
    make_layout,
    random_pattern,
    save_pattern,
    set_segment,
    slm_to_mask,
)
from .spdc import (
    CrystalKernel,
    PumpConfig,
    brute_force_coincidence,
    coincidence_amplitude,
    coincidence_field,
    coincidence_map,
    crystal_apply,
)
from .detection import (
    DetectorPose,
    MmfPose,
    NoiseConfig,
    SmfPose,
    corrected_coincidences,
    detector_power,
    mmf_power,
    sample_counts,
    smf_power,
)
from .engine import (
    Camera,
    KlyshkoScene,
    PowerMeter,
    ScanningFiber,
    TwoArmSetup,
    klyshko_field,
    klyshko_image,
    klyshko_power,
)
from .optimize import (
    CostConfig,
    KlyshkoPower,
    OptimizationTrace,
    QuantumCoincidence,
    SingleSpot,
    TwoSpot,
    efficiency,
    enhancement,
    evaluate_cost,
    optimize_cost_function,
    sequential_optimize,
    speckle_baseline,
)
from .memory import (
    MemoryFit,
    MemoryScan,
    beacon_memory_scan,
    fit_memory,
    memory_model,
    memory_scan,
    optimize_beacon,
)
from .config import build_bench, load_config, validate_config
from .scenarios import RunManifest, list_scenarios, run_scenario
