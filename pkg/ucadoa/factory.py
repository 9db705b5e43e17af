import importlib
import logging
from functools import lru_cache
from typing import List

from ucadoa.constant.estimator import ESTIMATOR_CLASSES
from ucadoa.exceptions import InvalidArgumentError

# Set up logging
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


@lru_cache(maxsize=None)
def _resolve_class(class_path: str) -> type:
    """Import "package.module.Class" and return the class."""
    module_name, _, class_name = class_path.rpartition(".")
    if not module_name:
        logger.error(f"Invalid estimator class path: {class_path}. Expected 'module.Class' format.")
        raise InvalidArgumentError(f"Invalid estimator class path: {class_path}. Expected 'module.Class' format.")
    try:
        module = importlib.import_module(module_name)
        return getattr(module, class_name)
    except (ImportError, AttributeError) as e:
        logger.error(f"Error importing class {class_path}: {e}")
        raise InvalidArgumentError(f"Error importing class {class_path}: {e}") from e


class EstimatorFactory:
    """
    Factory class that creates DoA estimators from their method tag.
    """

    @staticmethod
    def methods() -> List[str]:
        """Every tag the factory accepts, in registration order."""
        return list(ESTIMATOR_CLASSES)

    @staticmethod
    def get_estimator(method: str):
        """
        Return a fresh estimator instance.

        Estimators keep per-run state (SE-CSM caches its beamwidths), so each call
        builds a new object; only the class lookup is cached.

        :param method: 'ripf', 'c-csm-1', 'c-csm', 'se-csm', 'r-csm' or 'i-2d-csm'.
        :return: An instance of the matching CsmEstimator subclass.
        """
        class_path = ESTIMATOR_CLASSES.get(method)
        if not class_path:
            logger.error(f"Unsupported estimator: {method}")
            raise InvalidArgumentError(
                f"Unsupported estimator: {method}. Must be one of: {', '.join(ESTIMATOR_CLASSES)}"
            )
        logger.debug(f"Building estimator {class_path} for '{method}'")
        return _resolve_class(class_path)()
