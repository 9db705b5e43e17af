from typing import List, Sequence

from ucadoa.array_model import DoA
from ucadoa.estimator.csm_estimator import FullBandCsmEstimator, point_regions
from ucadoa.estimator.robustness import RipfParams, RobustnessRegion


class ConventionalCsmEstimator(FullBandCsmEstimator):
    """Conventional CSM: focus every bin on the current estimates, search the whole hemisphere."""

    method = "c-csm"

    def focusing_regions(
        self, iteration: int, estimates: Sequence[DoA], d_delta_prev: float, params: RipfParams
    ) -> List[RobustnessRegion]:
        return point_regions(estimates)


class SinglePassCsmEstimator(ConventionalCsmEstimator):
    """Conventional CSM stopped after its first iteration."""

    method = "c-csm-1"

    def iteration_limit(self, params: RipfParams) -> int:
        return 1
