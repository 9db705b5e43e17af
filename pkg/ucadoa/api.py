import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ucadoa.array_model import ArrayGeometry, DoA
from ucadoa.constant.estimator import BENCHMARK_METHODS
from ucadoa.estimator.robustness import EstimatorState, RipfParams
from ucadoa.exceptions import InvalidArgumentError
from ucadoa.factory import EstimatorFactory
from ucadoa.signal_sim import NarrowbandStack

logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


def _run(
    method: str,
    stack: NarrowbandStack,
    pre_estimates: Sequence[DoA],
    geom: ArrayGeometry,
    params: Optional[RipfParams],
    rng: Optional[np.random.Generator],
) -> Tuple[List[DoA], List[EstimatorState]]:
    estimator = EstimatorFactory.get_estimator(method)
    params = params or RipfParams()
    rng = rng if rng is not None else np.random.default_rng()
    estimates, trace = estimator.estimate(stack, pre_estimates, geom, params, rng)
    logger.debug(f"{method}: {len(trace)} iterations, estimates {[d.as_tuple() for d in estimates]}")
    return estimates, trace


# Proposed estimator
def ripf_csm(
    stack: NarrowbandStack,
    pre_estimates: Sequence[DoA],
    geom: ArrayGeometry,
    params: RipfParams = None,
    rng: np.random.Generator = None,
) -> Tuple[List[DoA], List[EstimatorState]]:
    """
    Estimate DoAs with robust iterative partial focusing.

    Returns the final estimates and one EstimatorState per iteration. The random stream
    drives the bin selection only; the same stream state gives the same trace.
    """
    return _run("ripf", stack, pre_estimates, geom, params, rng)


# Benchmark estimators
def benchmark_csm(
    stack: NarrowbandStack,
    pre_estimates: Sequence[DoA],
    geom: ArrayGeometry,
    variant: str,
    params: RipfParams = None,
    rng: np.random.Generator = None,
) -> Tuple[List[DoA], List[EstimatorState]]:
    """
    Estimate DoAs with one of the full-band CSM variants.

    variant is one of 'c-csm-1', 'c-csm', 'se-csm', 'r-csm', 'i-2d-csm' (case-insensitive).
    """
    tag = variant.lower()
    if tag not in BENCHMARK_METHODS:
        logger.error(f"Unknown benchmark variant: {variant}")
        raise InvalidArgumentError(f"Unknown benchmark variant: {variant}")
    return _run(tag, stack, pre_estimates, geom, params, rng)
