import logging
from typing import List, Sequence, Set

import numpy as np

from ucadoa.array_model import DoA
from ucadoa.estimator.csm_estimator import CsmEstimator
from ucadoa.estimator.robustness import (
    RipfParams,
    RobustnessRegion,
    frequency_increment,
    robustness_radii,
    robustness_region,
)
from ucadoa.subspace import SpectrumRegion

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


class RipfCsmEstimator(CsmEstimator):
    """
    Robust iterative partial-focusing CSM.

    The first iteration focuses a single random bin. Every later iteration adds a number
    of random unselected bins that grows with how far the estimates moved. Focusing
    angles and the MUSIC search are both confined to robustness regions around the
    current estimates; the regions shrink with the iteration index and the estimate change.
    """

    method = "ripf"

    def select_bins(self, iteration, stack, focus, dropped, trace, params, rng) -> Set[int]:
        available = np.array(
            [z for z in range(stack.fft_size) if z not in focus and z not in dropped], dtype=int
        )
        if iteration == 1:
            wanted = 1
        else:
            wanted = frequency_increment(trace[-1], stack.fft_size, params)
        wanted = min(wanted, available.size)
        if wanted == 0:
            return set(focus)
        added = rng.choice(available, size=wanted, replace=False)
        logger.debug(f"Iteration {iteration}: adding bins {sorted(int(z) for z in added)}")
        return set(focus) | {int(z) for z in added}

    def focusing_regions(
        self, iteration: int, estimates: Sequence[DoA], d_delta_prev: float, params: RipfParams
    ) -> List[RobustnessRegion]:
        return [
            robustness_region(doa, robustness_radii(doa, iteration, d_delta_prev, params))
            for doa in estimates
        ]

    def spectrum_regions(self, regions: List[RobustnessRegion]) -> List[SpectrumRegion]:
        return [region.spectrum_region() for region in regions]
