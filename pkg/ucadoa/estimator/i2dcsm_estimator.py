from typing import Tuple

from ucadoa.constant.estimator import I2D_CSM_RHO
from ucadoa.estimator.rcsm_estimator import RobustCsmEstimator
from ucadoa.estimator.robustness import RipfParams


class Iterative2DCsmEstimator(RobustCsmEstimator):
    """
    R-CSM variant whose intervals stop shrinking once they reach the grid resolution.

    The shrink index is min(i, rho * v / 1 deg), evaluated separately with the elevation
    and azimuth steps.
    """

    method = "i-2d-csm"

    def shrink_indices(self, iteration: int, params: RipfParams) -> Tuple[float, float]:
        return (
            min(float(iteration), I2D_CSM_RHO * params.step_theta / 1.0),
            min(float(iteration), I2D_CSM_RHO * params.step_phi / 1.0),
        )
