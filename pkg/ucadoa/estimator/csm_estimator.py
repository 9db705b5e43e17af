import logging
from abc import ABC, abstractmethod
from typing import List, Sequence, Set, Tuple

import numpy as np

from ucadoa.array_model import ArrayGeometry, DoA, greedy_match
from ucadoa.estimator.robustness import (
    EstimatorState,
    RipfParams,
    RobustnessRegion,
    delta_bar,
    robustness_region,
    sample_focusing_angles,
)
from ucadoa.exceptions import DegenerateFocusingError, InvalidArgumentError
from ucadoa.focusing import FocusingAngleSet, focused_covariance, focusing_matrices
from ucadoa.signal_sim import NarrowbandStack
from ucadoa.subspace import (
    SpectrumRegion,
    estimate_source_count,
    find_peaks,
    full_range_regions,
    hermitian_eig,
    music_spectrum,
)

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


def point_regions(estimates: Sequence[DoA]) -> List[RobustnessRegion]:
    """Zero-radius regions, one per estimate."""
    return [robustness_region(doa, (0.0, 0.0)) for doa in estimates]


def fill_estimates(current: List[DoA], previous: Sequence[DoA], count: int) -> List[DoA]:
    """
    Top up a short peak list with previous estimates that no current estimate claims.
    """
    if len(current) >= count:
        return current
    claimed = {j for _, j in greedy_match(current, previous)}
    filled = list(current)
    for j, doa in enumerate(previous):
        if len(filled) == count:
            break
        if j not in claimed and doa not in filled:
            filled.append(doa)
    logger.warning(f"Spectrum gave {len(current)} of {count} estimates; filled to {len(filled)}")
    return filled


class CsmEstimator(ABC):
    """
    Abstract base class for coherent signal-subspace estimators.

    Each iteration focuses a set of bins onto the reference frequency with RSS matrices
    built over a set of focusing angles, pools the focused covariance, counts sources,
    and searches the MUSIC spectrum for that many peaks. Subclasses decide which bins
    are focused, which angles the focusing matrices use and where the spectrum is
    searched.
    """

    # Method tag, as used in ESTIMATOR_CLASSES
    method = ""

    def iteration_limit(self, params: RipfParams) -> int:
        return params.max_iterations

    def prepare(self, geom: ArrayGeometry, stack: NarrowbandStack, params: RipfParams):
        """Hook for per-run precomputation, called once before the first iteration."""

    @abstractmethod
    def select_bins(
        self,
        iteration: int,
        stack: NarrowbandStack,
        focus: Set[int],
        dropped: Set[int],
        trace: List[EstimatorState],
        params: RipfParams,
        rng: np.random.Generator,
    ) -> Set[int]:
        """
        Bins to focus in this iteration.

        Args:
            iteration (int): 1-based iteration index.
            stack (NarrowbandStack): The snapshots.
            focus (set): Bins focused in the previous iteration.
            dropped (set): Bins whose focusing was degenerate; never selected again.
            trace (list): States of the earlier iterations.
            params (RipfParams): Estimator parameters.
            rng (np.random.Generator): The run's random stream.

        Returns:
            set: 0-based bin indices.
        """

    @abstractmethod
    def focusing_regions(
        self, iteration: int, estimates: Sequence[DoA], d_delta_prev: float, params: RipfParams
    ) -> List[RobustnessRegion]:
        """Regions whose sampled angles build the focusing matrices."""

    def focusing_angles(self, iteration: int, regions: List[RobustnessRegion], params: RipfParams) -> FocusingAngleSet:
        return sample_focusing_angles(regions, params.step_theta, params.step_phi)

    def spectrum_regions(self, regions: List[RobustnessRegion]) -> List[SpectrumRegion]:
        """Where the MUSIC spectrum is searched; the full hemisphere by default."""
        return full_range_regions()

    def radii_product_sum(self, regions: List[RobustnessRegion]) -> float:
        """Sum over regions of the elevation and azimuth radius product."""
        return float(sum(region.radius_theta * region.radius_phi for region in regions))

    def estimate(
        self,
        stack: NarrowbandStack,
        pre_estimates: Sequence[DoA],
        geom: ArrayGeometry,
        params: RipfParams,
        rng: np.random.Generator,
    ) -> Tuple[List[DoA], List[EstimatorState]]:
        """
        Run the iterative estimator.

        Stops once the estimates no longer move and the source count is stable, or
        after the iteration limit.

        Returns:
            tuple: (final estimates, one EstimatorState per iteration).
        """
        if len(pre_estimates) == 0:
            logger.error("At least one pre-estimated DoA is required")
            raise InvalidArgumentError("At least one pre-estimated DoA is required")
        if stack.element_count != geom.element_count:
            logger.error(
                f"Snapshot rows ({stack.element_count}) do not match the array ({geom.element_count})"
            )
            raise InvalidArgumentError(
                f"Snapshot rows ({stack.element_count}) do not match the array ({geom.element_count})"
            )

        self.prepare(geom, stack, params)
        estimates = list(pre_estimates)
        source_count = len(estimates)
        d_delta = 1.0
        focus: Set[int] = set()
        dropped: Set[int] = set()
        trace: List[EstimatorState] = []

        for iteration in range(1, self.iteration_limit(params) + 1):
            bins = self.select_bins(iteration, stack, focus, dropped, trace, params, rng)
            regions = self.focusing_regions(iteration, estimates, d_delta, params)
            angles = self.focusing_angles(iteration, regions, params)

            matrices, degenerate = focusing_matrices(geom, stack, bins, angles)
            dropped.update(degenerate)
            focus = set(matrices)
            if not focus:
                logger.error(f"Iteration {iteration}: no bin could be focused")
                raise DegenerateFocusingError(f"Iteration {iteration}: no bin could be focused")

            covariance = focused_covariance(stack, sorted(focus), matrices)
            eigenvalues, eigenvectors = hermitian_eig(covariance)
            count = estimate_source_count(eigenvalues)
            grid = music_spectrum(
                eigenvectors[:, count:],
                geom,
                stack.center_frequency,
                self.spectrum_regions(regions),
                params.step_theta,
                params.step_phi,
            )
            current = fill_estimates(find_peaks(grid, count), estimates, count)

            delta = delta_bar(estimates, current)
            state = EstimatorState(
                iteration=iteration,
                estimates=tuple(current),
                source_count=len(current),
                delta_bar=delta,
                d_delta=delta / 1.0,  # delta_bar in units of one degree
                focus_set=frozenset(focus),
                previous_source_count=source_count,
                radii_product_sum=self.radii_product_sum(regions),
                focusing_angle_count=len(angles),
                dropped_bins=frozenset(dropped),
            )
            trace.append(state)
            logger.info(
                f"{self.method} iteration {iteration}: {len(focus)} bins, {len(angles)} focusing angles, "
                f"N={count}, delta={delta:.4f}"
            )

            converged = delta == 0.0 and state.source_count == source_count
            estimates, source_count, d_delta = current, state.source_count, state.d_delta
            if converged:
                break

        logger.debug(f"{self.method} finished after {len(trace)} iterations")
        return estimates, trace


class FullBandCsmEstimator(CsmEstimator):
    """Benchmark scaffolding: every bin is focused and the whole hemisphere is searched."""

    def select_bins(self, iteration, stack, focus, dropped, trace, params, rng) -> Set[int]:
        return set(range(stack.fft_size)) - dropped

