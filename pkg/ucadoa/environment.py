import logging
import os

from ucadoa.constant.main import DEFAULT_OUTPUT_DIRECTORY, ENV_VAR_CONFIG
from ucadoa.exceptions import ConfigError

# Set up logging
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)


def ensure_writable(directory: str) -> str:
    """Create directory if needed; raise OSError naming the path when it cannot be written."""
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        logger.error(f"Cannot create output directory {directory}: {e}")
        raise
    if not os.access(directory, os.W_OK):
        logger.error(f"Output directory is not writable: {directory}")
        raise PermissionError(f"Output directory is not writable: {directory}")
    return directory


class Environment:
    """
    Runtime settings of a batch, loaded from constructor arguments or environment variables.

    Attributes:
        threads (int): Worker threads for Monte-Carlo trials.
        output_dir (str): Directory receiving results.csv and the plots.
        log_level (str): Logging level name.
    """

    VALID_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}

    def __init__(self, threads: int = None, output_dir: str = None, log_level: str = None):
        """
        :param threads: Optional worker count overriding UCADOA_THREADS (default 1).
        :param output_dir: Optional output directory overriding UCADOA_OUTPUT_DIR.
        :param log_level: Optional level name overriding UCADOA_LOG_LEVEL (default INFO).
        """
        raw_threads = threads if threads is not None else os.getenv(ENV_VAR_CONFIG["threads"], "1")
        try:
            self.threads = int(raw_threads)
        except (TypeError, ValueError) as e:
            logger.error(f"Invalid thread count: {raw_threads}")
            raise ConfigError(f"Invalid thread count: {raw_threads}") from e
        if self.threads < 1:
            logger.error(f"Thread count must be >= 1, got {self.threads}")
            raise ConfigError(f"Thread count must be >= 1, got {self.threads}")

        self.output_dir = output_dir or os.getenv(ENV_VAR_CONFIG["output_dir"]) or DEFAULT_OUTPUT_DIRECTORY

        self.log_level = (log_level or os.getenv(ENV_VAR_CONFIG["log_level"], "INFO")).upper()
        if self.log_level not in self.VALID_LOG_LEVELS:
            raise ConfigError(
                f"Invalid log level '{self.log_level}'. Must be one of: "
                f"{', '.join(sorted(self.VALID_LOG_LEVELS))}"
            )

    def ensure_output_dir(self) -> str:
        """Create the output directory if needed and check it is writable."""
        return ensure_writable(self.output_dir)

    def log_configuration(self):
        logger.info("Environment Configuration:")
        logger.info(f"Threads: {self.threads}")
        logger.info(f"Output directory: {self.output_dir}")
        logger.info(f"Log level: {self.log_level}")
