"""
Accuracy metrics over Monte-Carlo trials and leading-order complexity estimates.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ucadoa.array_model import DoA, azimuth_distance, greedy_match
from ucadoa.estimator.robustness import EstimatorState
from ucadoa.exceptions import InvalidArgumentError

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

# (|d theta|, |d phi|) charged to a truth when a trial produced no estimate at all
EMPTY_TRIAL_ERRORS = (90.0, 180.0)
# Slack on the detection threshold so that 0.2 + 0.2 compares as 0.4
_SDP_SLACK = 1e-9


@dataclass(frozen=True)
class TrialOutcome:
    """
    Result of one estimator run on one trial.

    Attributes:
        truth (tuple): True DoAs.
        estimates (tuple): Estimated DoAs, unordered.
        wall_time (float): Seconds spent in the estimator.
        flops_estimate (float): Summed complexity estimate over the run's iterations.
        iterations_used (int): Number of iterations the run took.
    """

    truth: Tuple[DoA, ...]
    estimates: Tuple[DoA, ...]
    wall_time: float = 0.0
    flops_estimate: float = 0.0
    iterations_used: int = 1

    def __post_init__(self):
        if self.wall_time < 0:
            raise InvalidArgumentError(f"Wall time must be non-negative, got {self.wall_time}")
        if self.iterations_used < 1:
            raise InvalidArgumentError(f"Iterations used must be >= 1, got {self.iterations_used}")
        object.__setattr__(self, "truth", tuple(self.truth))
        object.__setattr__(self, "estimates", tuple(self.estimates))


def _squared_error(truth: DoA, estimate: DoA) -> float:
    d_phi = float(azimuth_distance(truth.azimuth, estimate.azimuth))
    return (estimate.elevation - truth.elevation) ** 2 + d_phi ** 2


def paired_errors(trial: TrialOutcome) -> List[Tuple[float, float]]:
    """
    (|d theta|, |d phi|) for every truth of a trial after greedy nearest-neighbor pairing.

    A truth left without an estimate gets the largest error any estimate of the trial
    would have given it, or (90, 180) when the trial has no estimate.
    """
    pairs = dict(greedy_match(trial.truth, trial.estimates))
    errors = []
    for i, truth in enumerate(trial.truth):
        if i in pairs:
            estimate = trial.estimates[pairs[i]]
            errors.append(
                (
                    abs(estimate.elevation - truth.elevation),
                    float(azimuth_distance(truth.azimuth, estimate.azimuth)),
                )
            )
        elif trial.estimates:
            worst = max(trial.estimates, key=lambda e: _squared_error(truth, e))
            errors.append(
                (abs(worst.elevation - truth.elevation), float(azimuth_distance(truth.azimuth, worst.azimuth)))
            )
        else:
            errors.append(EMPTY_TRIAL_ERRORS)
    return errors


def _check_trials(trials: Sequence[TrialOutcome]):
    if not trials:
        logger.error("Metrics need at least one trial")
        raise InvalidArgumentError("Metrics need at least one trial")


def rmse(trials: Sequence[TrialOutcome]) -> float:
    """sqrt(mean over trials and sources of d theta^2 + d phi^2), in degrees."""
    _check_trials(trials)
    total = 0.0
    count = 0
    for trial in trials:
        for d_theta, d_phi in paired_errors(trial):
            total += d_theta ** 2 + d_phi ** 2
            count += 1
    return math.sqrt(total / count) if count else 0.0


def sdp(trials: Sequence[TrialOutcome], step_theta: float, step_phi: float) -> float:
    """Fraction of (trial, source) pairs with |d theta| + |d phi| <= v_theta + v_phi."""
    _check_trials(trials)
    threshold = step_theta + step_phi + _SDP_SLACK
    outcomes = [d_theta + d_phi <= threshold for trial in trials for d_theta, d_phi in paired_errors(trial)]
    return float(np.mean(outcomes)) if outcomes else 0.0


def flops_estimate(
    method: str,
    element_count: int,
    snapshots_per_bin: int,
    bins: int,
    source_count: int,
    radii_product_sum: float = 0.0,
    step_theta: float = 1.0,
    step_phi: float = 1.0,
    grid_size: Tuple[int, int] = (0, 0),
) -> float:
    """
    Leading-order complexity of one iteration, big-O constants taken as 1.

    Args:
        method (str): Method tag.
        element_count (int): M.
        snapshots_per_bin (int): K_f.
        bins (int): Focused bins (Z_in for 'ripf', Z otherwise).
        source_count (int): N-hat entering the iteration.
        radii_product_sum (float): Sum of R_theta * R_phi over the focusing regions.
        step_theta (float): v_theta in degrees.
        step_phi (float): v_phi in degrees.
        grid_size (tuple): (L_theta, L_phi) of the full-range spectrum.

    Returns:
        float: Estimated floating point operations.
    """
    m2 = element_count ** 2
    base = element_count + 8 * snapshots_per_bin
    region_term = 16.0 * radii_product_sum / (step_theta * step_phi)
    search = 8.0 * m2 * grid_size[0] * grid_size[1]

    if method in ("c-csm", "c-csm-1"):
        return 2.0 * bins * m2 * (base + 4 * source_count) + search
    if method == "se-csm":
        return 2.0 * bins * m2 * (base + 20 * source_count) + search
    if method in ("r-csm", "i-2d-csm"):
        return 2.0 * bins * m2 * (base + region_term) + search
    if method == "ripf":
        return 2.0 * bins * m2 * (base + region_term)
    logger.error(f"No complexity model for method: {method}")
    raise InvalidArgumentError(f"No complexity model for method: {method}")


def run_flops(
    method: str,
    trace: Iterable[EstimatorState],
    element_count: int,
    snapshots_per_bin: int,
    step_theta: float,
    step_phi: float,
    grid_size: Tuple[int, int],
) -> List[float]:
    """Complexity estimate of every iteration of a run."""
    return [
        flops_estimate(
            method,
            element_count,
            snapshots_per_bin,
            state.bins_focused,
            state.previous_source_count,
            state.radii_product_sum,
            step_theta,
            step_phi,
            grid_size,
        )
        for state in trace
    ]


@dataclass(frozen=True)
class CostBoundResult:
    """Outcome of the per-iteration complexity constraint."""

    satisfied: bool
    margin: float
    lhs: float
    rhs: float


def cost_bound_check(
    element_count: int,
    fft_size: int,
    snapshots_per_bin: int,
    source_count: int,
    avg_err_theta: float,
    avg_err_phi: float,
    bias: float,
    step_theta: float,
    step_phi: float,
    grid_size: Tuple[int, int],
    max_iterations: int,
    iterations_to_converge: int,
) -> CostBoundResult:
    """
    Check that one partial-focusing iteration is cheaper than one full-band CSM iteration.

    The focused-bin count and the radii-product sum are replaced by their bounds:
        Z_in  <= 1 + d (d I + 2 Z) / (4 I_c I),  d = d_theta + d_phi
        sum R R < (ln 100 / (2 I_c))^2 N theta_e phi_e d^2 b (b - 1)
    and substituted into
        Z_in [M + 8 K_f + 16 sum R R / (v_theta v_phi)] < Z (M + 4 N + 8 K_f) + 4 L_theta L_phi.

    Returns:
        CostBoundResult: Whether the inequality holds and the relative margin (rhs - lhs) / rhs.
    """
    if iterations_to_converge < 1:
        logger.error(f"Iterations to converge must be >= 1, got {iterations_to_converge}")
        raise InvalidArgumentError(f"Iterations to converge must be >= 1, got {iterations_to_converge}")
    d = avg_err_theta / 1.0 + avg_err_phi / 1.0
    bins_bound = 1.0 + d * (d * max_iterations + 2.0 * fft_size) / (
        4.0 * iterations_to_converge * max_iterations
    )
    radii_bound = (
        (math.log(100.0) / (2.0 * iterations_to_converge)) ** 2
        * source_count
        * avg_err_theta
        * avg_err_phi
        * d ** 2
        * bias
        * (bias - 1.0)
    )
    lhs = bins_bound * (
        element_count + 8 * snapshots_per_bin + 16.0 * radii_bound / (step_theta * step_phi)
    )
    rhs = fft_size * (element_count + 4 * source_count + 8 * snapshots_per_bin) + 4.0 * grid_size[0] * grid_size[1]
    return CostBoundResult(lhs < rhs, (rhs - lhs) / rhs, lhs, rhs)


def cheaper_iteration_fraction(iteration_flops: Sequence[float], reference_flops: float) -> float:
    """Share of iterations whose complexity estimate is below the reference iteration's."""
    if not iteration_flops:
        return math.nan
    return float(np.mean([f < reference_flops for f in iteration_flops]))
