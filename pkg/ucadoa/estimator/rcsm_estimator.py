import math
from typing import List, Sequence, Tuple

from ucadoa.array_model import DoA
from ucadoa.constant.estimator import R_CSM_EXPONENT
from ucadoa.estimator.csm_estimator import FullBandCsmEstimator
from ucadoa.estimator.robustness import RipfParams, RobustnessRegion


def shrinking_elevation_interval(elevation: float, shrink_index: float) -> Tuple[float, float]:
    """
    Elevation interval whose sine spans sin(theta) +/- 1 / (2 q^p), in degrees.

    The sine bounds are clipped into [0, 1] before the arcsine.
    """
    half = 1.0 / (2.0 * shrink_index ** R_CSM_EXPONENT)
    s = math.sin(math.radians(elevation))
    lo = math.degrees(math.asin(max(0.0, s - half)))
    hi = math.degrees(math.asin(min(s + half, 1.0)))
    return lo, hi


def shrinking_azimuth_radius(shrink_index: float) -> float:
    """360 / (2 q^p) degrees, capped at a half turn."""
    return min(360.0 / (2.0 * shrink_index ** R_CSM_EXPONENT), 180.0)


def shrinking_region(estimate: DoA, index_theta: float, index_phi: float) -> RobustnessRegion:
    lo, hi = shrinking_elevation_interval(estimate.elevation, index_theta)
    # asin of the clipped sine can land a hair away from the estimate at the poles
    lo, hi = min(lo, estimate.elevation), max(hi, estimate.elevation)
    radius_phi = shrinking_azimuth_radius(index_phi)
    return RobustnessRegion(
        estimate,
        lo,
        hi,
        estimate.azimuth - radius_phi,
        estimate.azimuth + radius_phi,
        (hi - lo) / 2.0,
        radius_phi,
    )


class RobustCsmEstimator(FullBandCsmEstimator):
    """
    CSM whose focusing angles are sampled from intervals shrinking as 1 / i^2.

    Elevation intervals shrink in the sine domain, azimuth intervals linearly.
    """

    method = "r-csm"

    def shrink_indices(self, iteration: int, params: RipfParams) -> Tuple[float, float]:
        return float(iteration), float(iteration)

    def focusing_regions(
        self, iteration: int, estimates: Sequence[DoA], d_delta_prev: float, params: RipfParams
    ) -> List[RobustnessRegion]:
        index_theta, index_phi = self.shrink_indices(iteration, params)
        return [shrinking_region(doa, index_theta, index_phi) for doa in estimates]
