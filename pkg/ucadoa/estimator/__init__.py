from .ccsm_estimator import ConventionalCsmEstimator, SinglePassCsmEstimator
from .i2dcsm_estimator import Iterative2DCsmEstimator
from .rcsm_estimator import RobustCsmEstimator
from .ripf_estimator import RipfCsmEstimator
from .secsm_estimator import ExtraAngleCsmEstimator

__all__ = [
    "ConventionalCsmEstimator",
    "ExtraAngleCsmEstimator",
    "Iterative2DCsmEstimator",
    "RipfCsmEstimator",
    "RobustCsmEstimator",
    "SinglePassCsmEstimator",
]
