"""
Iteration bookkeeping shared by every CSM estimator: parameters, per-iteration state,
robustness regions, the average estimate change and the bin increment rule.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, List, Sequence, Tuple

import numpy as np

from ucadoa.array_model import DoA, angular_costs, greedy_match, normalize_azimuth
from ucadoa.constant.main import (
    DEFAULT_AVG_ERROR,
    DEFAULT_BIAS,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_STEP,
)
from ucadoa.exceptions import InvalidArgumentError
from ucadoa.focusing import FocusingAngleSet
from ucadoa.subspace import SpectrumRegion, azimuth_axis, elevation_axis

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

# Slack on the ceiling in the bin increment so that 6.0000000001 stays 6
_CEIL_SLACK = 1e-9


@dataclass(frozen=True)
class RipfParams:
    """
    Estimator parameters.

    Attributes:
        max_iterations (int): Iteration cap I.
        bias (float): Radius bias b, greater than 1.
        avg_err_theta (float): Average elevation error of the pre-estimates in degrees.
        avg_err_phi (float): Average azimuth error of the pre-estimates in degrees.
        step_theta (float): Elevation grid step in degrees.
        step_phi (float): Azimuth grid step in degrees.
    """

    max_iterations: int = DEFAULT_MAX_ITERATIONS
    bias: float = DEFAULT_BIAS
    avg_err_theta: float = DEFAULT_AVG_ERROR
    avg_err_phi: float = DEFAULT_AVG_ERROR
    step_theta: float = DEFAULT_STEP
    step_phi: float = DEFAULT_STEP

    def __post_init__(self):
        problems = []
        if self.max_iterations < 1:
            problems.append(f"max_iterations={self.max_iterations} must be >= 1")
        if self.bias <= 1.0:
            problems.append(f"bias={self.bias} must be > 1")
        if self.step_theta <= 0 or self.step_phi <= 0:
            problems.append(f"steps ({self.step_theta}, {self.step_phi}) must be positive")
        if self.avg_err_theta < 0 or self.avg_err_phi < 0:
            problems.append(
                f"average errors ({self.avg_err_theta}, {self.avg_err_phi}) must be non-negative"
            )
        if problems:
            message = "Invalid estimator parameters: " + "; ".join(problems)
            logger.error(message)
            raise InvalidArgumentError(message)

    @property
    def d_theta(self) -> float:
        """Average elevation error in units of one degree."""
        return self.avg_err_theta / 1.0

    @property
    def d_phi(self) -> float:
        return self.avg_err_phi / 1.0

    def mu_f(self, fft_size: int) -> float:
        """Bins added per unit of estimate change: Z/I + (d_theta + d_phi)/2."""
        return fft_size / self.max_iterations + (self.d_theta + self.d_phi) / 2.0


@dataclass(frozen=True)
class EstimatorState:
    """
    Snapshot of one estimator iteration.

    Besides the estimates it records what a complexity estimate of the iteration needs:
    the number of focused bins, the source count entering the iteration and the sum of
    the robustness-radius products.
    """

    iteration: int
    estimates: Tuple[DoA, ...]
    source_count: int
    delta_bar: float
    d_delta: float
    focus_set: FrozenSet[int]
    previous_source_count: int = 0
    radii_product_sum: float = 0.0
    focusing_angle_count: int = 0
    dropped_bins: FrozenSet[int] = field(default_factory=frozenset)

    @property
    def bins_focused(self) -> int:
        return len(self.focus_set)


@dataclass(frozen=True)
class RobustnessRegion:
    """
    Search interval around one estimate.

    The elevation interval is clipped to [0, 90]. The azimuth interval is stored
    unwrapped as [phi_lo, phi_hi]; `azimuth_segments` gives its wrapped pieces.
    """

    center: DoA
    theta_lo: float
    theta_hi: float
    phi_lo: float
    phi_hi: float
    radius_theta: float
    radius_phi: float

    @property
    def full_circle(self) -> bool:
        return self.phi_hi - self.phi_lo >= 360.0

    def azimuth_segments(self) -> List[Tuple[float, float]]:
        """Wrapped azimuth coverage as non-overlapping [lo, hi] pieces inside [0, 360]."""
        if self.full_circle:
            return [(0.0, 360.0)]
        width = self.phi_hi - self.phi_lo
        lo = float(normalize_azimuth(self.phi_lo))
        if lo + width <= 360.0:
            return [(lo, lo + width)]
        return [(lo, 360.0), (0.0, lo + width - 360.0)]

    def spectrum_region(self) -> SpectrumRegion:
        return SpectrumRegion(self.theta_lo, self.theta_hi, self.phi_lo, self.phi_hi)


def _check_non_empty(name: str, doas: Sequence[DoA]):
    if len(doas) == 0:
        logger.error(f"{name} estimate list is empty")
        raise InvalidArgumentError(f"{name} estimate list is empty")


def delta_bar(prev: Sequence[DoA], curr: Sequence[DoA]) -> float:
    """
    Average change between consecutive estimate lists, in degrees.

    Equal counts: current estimates are aligned to previous ones by greedy nearest
    neighbor, then the summed |d theta| + |d phi| is divided by 2N. Different counts:
    every current estimate takes its distance to the closest previous estimate, and
    the sum is divided by twice the current count.
    """
    _check_non_empty("Previous", prev)
    _check_non_empty("Current", curr)
    costs = angular_costs(curr, prev)
    if len(prev) == len(curr):
        total = sum(costs[i, j] for i, j in greedy_match(curr, prev))
    else:
        total = costs.min(axis=1).sum()
    return float(total) / (2.0 * len(curr))


def frequency_increment(state: EstimatorState, fft_size: int, params: RipfParams) -> int:
    """
    Number of bins to add in the iteration after `state`.

    min(ceil(mu_f * d_delta), Z - |F_in|) where d_delta and F_in come from `state`.
    """
    wanted = math.ceil(params.mu_f(fft_size) * state.d_delta - _CEIL_SLACK)
    return max(0, min(int(wanted), fft_size - len(state.focus_set)))


def robustness_radii(estimate: DoA, iteration: int, d_delta_prev: float, params: RipfParams) -> Tuple[float, float]:
    """
    Robustness radii (R_theta, R_phi) in degrees.

    R_theta = avg_err_theta * (b - cos(theta)) * d / i
    R_phi   = avg_err_phi   * (b - sin(theta)) * d / i
    with d the previous iteration's normalized change (1 before the first iteration).
    """
    if iteration < 1:
        logger.error(f"Iteration index must be >= 1, got {iteration}")
        raise InvalidArgumentError(f"Iteration index must be >= 1, got {iteration}")
    theta = math.radians(estimate.elevation)
    scale = d_delta_prev / iteration
    r_theta = params.avg_err_theta * (params.bias - math.cos(theta)) * scale
    r_phi = params.avg_err_phi * (params.bias - math.sin(theta)) * scale
    return r_theta, r_phi


def robustness_region(estimate: DoA, radii: Tuple[float, float]) -> RobustnessRegion:
    """Intervals [theta - R_theta, theta + R_theta] clipped to [0, 90] and phi +/- R_phi."""
    r_theta, r_phi = radii
    if r_theta < 0 or r_phi < 0:
        logger.error(f"Radii must be non-negative, got {radii}")
        raise InvalidArgumentError(f"Radii must be non-negative, got {radii}")
    theta_lo = max(0.0, estimate.elevation - r_theta)
    theta_hi = min(estimate.elevation + r_theta, 90.0)
    if 2.0 * r_phi >= 360.0:
        phi_lo, phi_hi = estimate.azimuth - 180.0, estimate.azimuth + 180.0
    else:
        phi_lo, phi_hi = estimate.azimuth - r_phi, estimate.azimuth + r_phi
    return RobustnessRegion(estimate, theta_lo, theta_hi, phi_lo, phi_hi, r_theta, r_phi)


def sample_focusing_angles(regions: Sequence[RobustnessRegion], step_theta: float, step_phi: float) -> FocusingAngleSet:
    """
    Grid of focusing angles over the union of the regions.

    Each region is sampled from its lower bounds with the given steps; exact duplicates
    are kept once, in first-seen order.
    """
    if len(regions) == 0:
        logger.error("No robustness region to sample")
        raise InvalidArgumentError("No robustness region to sample")
    theta_parts = []
    phi_parts = []
    for region in regions:
        spectrum_region = region.spectrum_region()
        tt, pp = np.meshgrid(
            elevation_axis(spectrum_region, step_theta),
            azimuth_axis(spectrum_region, step_phi),
            indexing="ij",
        )
        theta_parts.append(tt.ravel())
        phi_parts.append(pp.ravel())
    points = np.column_stack([np.concatenate(theta_parts), np.concatenate(phi_parts)])
    _, first = np.unique(points, axis=0, return_index=True)
    first.sort()
    return FocusingAngleSet(points[first, 0], points[first, 1])
