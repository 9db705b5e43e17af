import logging
from typing import List, Sequence

import numpy as np

from ucadoa.array_model import ArrayGeometry, DoA, normalize_azimuth, quiescent_beamwidths
from ucadoa.constant.estimator import SE_CSM_FIRST_OFFSET, SE_CSM_LATER_OFFSET
from ucadoa.constant.main import GRID_DECIMALS
from ucadoa.estimator.csm_estimator import FullBandCsmEstimator, point_regions
from ucadoa.estimator.robustness import RipfParams, RobustnessRegion
from ucadoa.focusing import FocusingAngleSet
from ucadoa.signal_sim import NarrowbandStack

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


def extra_focusing_angles(estimates: Sequence[DoA], offset_theta: float, offset_phi: float) -> FocusingAngleSet:
    """
    Every estimate plus the four corners (theta +/- offset_theta, phi +/- offset_phi).

    Elevations are clipped into [0, 90] and azimuths wrapped; duplicates are kept once.
    """
    theta = []
    phi = []
    for doa in estimates:
        theta.append(doa.elevation)
        phi.append(doa.azimuth)
        for sign_theta in (-1.0, 1.0):
            for sign_phi in (-1.0, 1.0):
                theta.append(min(max(doa.elevation + sign_theta * offset_theta, 0.0), 90.0))
                phi.append(float(normalize_azimuth(doa.azimuth + sign_phi * offset_phi)))
    points = np.round(np.column_stack([theta, phi]), GRID_DECIMALS)
    _, first = np.unique(points, axis=0, return_index=True)
    first.sort()
    return FocusingAngleSet(points[first, 0], points[first, 1])


class ExtraAngleCsmEstimator(FullBandCsmEstimator):
    """
    CSM whose focusing angles add beamwidth-scaled extras around every estimate.

    Extras sit a quarter beamwidth away in the first iteration and an eighth afterwards.
    Beamwidths are the 3 dB widths of the uniform-weight pattern at the reference frequency.
    """

    method = "se-csm"

    def __init__(self):
        self.beamwidths = None

    def prepare(self, geom: ArrayGeometry, stack: NarrowbandStack, params: RipfParams):
        self.beamwidths = quiescent_beamwidths(geom, stack.center_frequency)
        logger.debug(f"Beamwidths at {stack.center_frequency} Hz: {self.beamwidths}")

    def focusing_regions(
        self, iteration: int, estimates: Sequence[DoA], d_delta_prev: float, params: RipfParams
    ) -> List[RobustnessRegion]:
        return point_regions(estimates)

    def focusing_angles(self, iteration: int, regions: List[RobustnessRegion], params: RipfParams) -> FocusingAngleSet:
        fraction = SE_CSM_FIRST_OFFSET if iteration == 1 else SE_CSM_LATER_OFFSET
        bw_theta, bw_phi = self.beamwidths
        return extra_focusing_angles(
            [region.center for region in regions], fraction * bw_theta, fraction * bw_phi
        )
