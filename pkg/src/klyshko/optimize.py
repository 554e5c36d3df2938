"""Continuous sequential phase optimization with pluggable feedback.

For each segment, the cost is measured at equally spaced test phases, a
trigonometric response model is least-squares fitted, and the segment is set
to the fitted optimum if a confirmation measurement beats the best cost so
far (the keep-best rule guards against noise-driven regressions; in
noiseless runs it makes the best-so-far cost provably non-decreasing).

The response model contains the first and second harmonics of the segment
phase.  Because the modulator plane is shared by both arms, a segment phase
enters the round-trip (or two-photon) amplitude twice: with a plain mirror
the response is exactly pi-periodic and carries no first harmonic at all, so
a single-cosine fit would be blind to it; with the pump and phase-matching
kernels both harmonics appear.  On a uniform phase grid the two harmonics
are orthogonal and the fit stays a closed-form cosine least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .detection import (
    DetectorPose,
    NoiseConfig,
    corrected_coincidences,
    detector_power,
    sample_counts,
)
from .engine import TwoArmSetup
from .errors import ConfigurationError, KlyshkoError
from .grid import SampledField
from .slm import SlmPattern, set_segment

__all__ = [
    "SingleSpot",
    "TwoSpot",
    "KlyshkoPower",
    "QuantumCoincidence",
    "CostConfig",
    "StepRecord",
    "OptimizationTrace",
    "OptimizationAborted",
    "evaluate_cost",
    "sequential_optimize",
    "optimize_cost_function",
    "fit_phase_response",
    "random_phases_like",
    "speckle_baseline",
    "enhancement",
    "efficiency",
]


@dataclass(frozen=True)
class SingleSpot:
    """Maximize the power coupled into one detector pose."""

    pose: DetectorPose


@dataclass(frozen=True)
class TwoSpot:
    """Maximize the summed power in two spots with a balance penalty.

    If the spot intensities differ by x percent (relative to the larger
    one), the summed cost is reduced by alpha * x percent.
    """

    pose_a: DetectorPose
    pose_b: DetectorPose
    alpha: float = 0.2

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError("two-spot penalty slope must be >= 0")


@dataclass(frozen=True)
class KlyshkoPower:
    """Classical feedback: the counter-propagating beam's detected power."""

    noise: NoiseConfig | None = None


@dataclass(frozen=True)
class QuantumCoincidence:
    """Quantum feedback: accidental-corrected coincidence rate."""

    noise: NoiseConfig | None = None


@dataclass(frozen=True)
class CostConfig:
    kind: SingleSpot | TwoSpot
    feedback: KlyshkoPower | QuantumCoincidence = KlyshkoPower()

    def noiseless(self) -> "CostConfig":
        return replace(self, feedback=replace(self.feedback, noise=None))


def _feedback_field(setup: TwoArmSetup, cost_cfg: CostConfig, pattern) -> SampledField:
    if isinstance(cost_cfg.feedback, KlyshkoPower):
        return setup.klyshko_field(pattern)
    return setup.coincidence_field(pattern)


def _read_spot(power: float, feedback, stream: int) -> float:
    noise = feedback.noise
    if noise is None:
        return power
    rate = noise.brightness * power
    if isinstance(feedback, QuantumCoincidence):
        return corrected_coincidences(rate, noise, stream)
    return sample_counts(rate, noise, stream) / noise.integration_time


def two_spot_cost(i_a: float, i_b: float, alpha: float) -> float:
    """(Ia + Ib) * (1 - alpha * x / 100) with x the percent imbalance."""
    total = i_a + i_b
    larger = max(i_a, i_b)
    if larger <= 0.0:
        return total
    x = 100.0 * abs(i_a - i_b) / larger
    return total * (1.0 - alpha * x / 100.0)


def evaluate_cost(
    setup: TwoArmSetup, cost_cfg: CostConfig, pattern: SlmPattern | None, stream: int = 0
) -> float:
    """One feedback measurement of the configured cost for a pattern."""
    fld = _feedback_field(setup, cost_cfg, pattern)
    kind = cost_cfg.kind
    if isinstance(kind, SingleSpot):
        return _read_spot(detector_power(fld, kind.pose), cost_cfg.feedback, stream)
    i_a = _read_spot(detector_power(fld, kind.pose_a), cost_cfg.feedback, 2 * stream)
    i_b = _read_spot(detector_power(fld, kind.pose_b), cost_cfg.feedback, 2 * stream + 1)
    return two_spot_cost(i_a, i_b, kind.alpha)


def fit_phase_response(phases: np.ndarray, costs: np.ndarray) -> tuple[float, float]:
    """Cosine least squares of the segment response on a uniform phase grid.

    Fits a + sum_h (p_h cos(h phi) + q_h sin(h phi)) for h in {1, 2} (h = 2
    dropped below five samples, where it would alias), and returns the phase
    maximizing the fitted response plus the predicted cost there.
    """
    m = phases.size
    harmonics = (1, 2) if m >= 5 else (1,)
    mean = float(np.mean(costs))
    coeffs = []
    for h in harmonics:
        p = 2.0 / m * float(np.sum(costs * np.cos(h * phases)))
        q = 2.0 / m * float(np.sum(costs * np.sin(h * phases)))
        coeffs.append((h, p, q))
    fine = np.linspace(0.0, 2.0 * np.pi, 1024, endpoint=False)
    model = np.full_like(fine, mean)
    for h, p, q in coeffs:
        model += p * np.cos(h * fine) + q * np.sin(h * fine)
    k = int(np.argmax(model))
    # parabolic refinement on the cyclic fine grid
    y0, y1, y2 = model[k - 1], model[k], model[(k + 1) % fine.size]
    denom = y0 - 2.0 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    step = fine[1] - fine[0]
    phi_opt = float((fine[k] + shift * step) % (2.0 * np.pi))
    predicted = float(y1 - 0.25 * (y0 - y2) * shift) if denom != 0 else float(y1)
    return phi_opt, predicted


@dataclass(frozen=True)
class StepRecord:
    segment: int
    tested_phases: tuple[float, ...]
    tested_costs: tuple[float, ...]
    fitted_phase: float
    predicted_cost: float
    measured_cost: float
    accepted: bool
    chosen_phase: float
    best_cost: float


@dataclass
class OptimizationTrace:
    steps: list[StepRecord]
    final_pattern: SlmPattern
    initial_cost: float
    best_cost: float
    enhancement: float | None = None
    efficiency: float | None = None

    def best_costs(self) -> np.ndarray:
        return np.array([s.best_cost for s in self.steps])

    def to_csv(self, path) -> None:
        lines = ["step,segment,chosen_phase,cost"]
        lines += [
            f"{i},{s.segment},{s.chosen_phase!r},{s.best_cost!r}"
            for i, s in enumerate(self.steps)
        ]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")


class OptimizationAborted(KlyshkoError):
    """Raised on non-finite feedback; carries the partial trace."""

    def __init__(self, message: str, trace: OptimizationTrace):
        super().__init__(message)
        self.trace = trace


def optimize_cost_function(
    costfn,
    pattern0: SlmPattern,
    phase_steps: int = 8,
    passes: int = 1,
) -> OptimizationTrace:
    """Sequential optimization loop over any cost function.

    ``costfn(pattern, stream) -> float`` is the feedback; ``stream`` is a
    monotone counter that noisy feedbacks can use as a counting-stream id.
    Segments are visited in row-major order over the active pupil; each is
    probed at ``phase_steps`` uniform phases, the response is fitted, and the
    fitted optimum is kept only if a confirmation measurement reaches the
    running best.
    """
    if phase_steps < 3:
        raise ConfigurationError("phase optimization needs at least 3 test phases")
    if passes < 1:
        raise ConfigurationError("pass count must be >= 1")
    test_phases = 2.0 * np.pi * np.arange(phase_steps) / phase_steps
    pattern = pattern0
    stream = 0
    best = costfn(pattern, stream)
    initial = best
    steps: list[StepRecord] = []

    def aborted(costs):
        return OptimizationAborted(
            f"non-finite feedback at step {len(steps)}: {costs}",
            OptimizationTrace(steps, pattern, initial, best),
        )

    if not np.isfinite(best):
        raise aborted([best])
    for _ in range(passes):
        for seg in range(pattern.n_segments):
            costs = np.empty(phase_steps)
            for k, phi in enumerate(test_phases):
                stream += 1
                costs[k] = costfn(set_segment(pattern, seg, phi), stream)
            if not np.all(np.isfinite(costs)):
                raise aborted(costs)
            phi_opt, predicted = fit_phase_response(test_phases, costs)
            stream += 1
            candidate = set_segment(pattern, seg, phi_opt)
            measured = costfn(candidate, stream)
            if not np.isfinite(measured):
                raise aborted([measured])
            accepted = measured >= best
            if accepted:
                pattern = candidate
                best = measured
            steps.append(
                StepRecord(
                    segment=seg,
                    tested_phases=tuple(test_phases),
                    tested_costs=tuple(costs),
                    fitted_phase=phi_opt,
                    predicted_cost=predicted,
                    measured_cost=measured,
                    accepted=accepted,
                    chosen_phase=pattern.phases[seg],
                    best_cost=best,
                )
            )
    return OptimizationTrace(steps, pattern, initial, best)


def sequential_optimize(
    setup: TwoArmSetup,
    cost_cfg: CostConfig,
    pattern0: SlmPattern,
    phase_steps: int = 8,
    passes: int = 1,
) -> OptimizationTrace:
    """Optimize the configured feedback on a two-arm bench."""

    def costfn(pattern, stream):
        return evaluate_cost(setup, cost_cfg, pattern, stream)

    return optimize_cost_function(costfn, pattern0, phase_steps, passes)


def random_phases_like(pattern: SlmPattern, seed: int) -> SlmPattern:
    """Uniform random phases with the pattern's layout and pinhole preserved."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1)])))
    return replace(
        pattern, phases=tuple(rng.uniform(0.0, 2.0 * np.pi, pattern.n_segments))
    )


def speckle_baseline(
    setup: TwoArmSetup,
    cost_cfg: CostConfig,
    pattern0: SlmPattern,
    n_patterns: int = 16,
    seed: int = 0,
) -> float:
    """Mean noiseless cost over random patterns: the pre-optimization speckle level."""
    noiseless = cost_cfg.noiseless()
    values = [
        evaluate_cost(setup, noiseless, random_phases_like(pattern0, seed + i))
        for i in range(n_patterns)
    ]
    return float(np.mean(values))


def enhancement(optimized_value: float, speckle_mean_before: float) -> float:
    """Optimized spot intensity over the mean pre-optimization speckle intensity."""
    if not (speckle_mean_before > 0):
        raise ConfigurationError("speckle baseline must be positive")
    return optimized_value / speckle_mean_before


def efficiency(optimized_value: float, no_diffuser_value: float) -> float:
    """Optimized spot intensity over the diffuser-free spot intensity."""
    if not (no_diffuser_value > 0):
        raise ConfigurationError("diffuser-free reference must be positive")
    return optimized_value / no_diffuser_value
