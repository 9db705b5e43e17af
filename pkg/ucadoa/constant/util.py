import os
from datetime import datetime


def get_daily_log_directory(base_path: str) -> str:
    """
    Creates a directory for the current date under the given base path.
    If the directory already exists, it returns the existing directory path.

    Ensures the base path exists before proceeding.

    Args:
        base_path (str): The base path where the daily directory should be created.
                         For example: "/tmp"

    Returns:
        str: The full path to the daily directory.

    Raises:
        ValueError: If the base path does not exist.
        OSError: If the directory creation fails.

    Example:
        log_dir = get_daily_log_directory("/tmp")
        # Returns: /tmp/ucadoa-2025-04-04
    """
    if not os.path.exists(base_path):
        raise ValueError(f"Base path does not exist: {base_path}")

    daily_directory = f"ucadoa-{datetime.now().strftime('%Y-%m-%d')}"
    log_directory = os.path.join(base_path, daily_directory)

    # exist_ok: concurrent batches may race on the first run of the day
    os.makedirs(log_directory, exist_ok=True)

    return log_directory


def get_package_root_directory():
    """
    Returns the root directory of the project, which is the directory
    that contains the 'ucadoa' package directory.

    Returns:
        str: The root directory path, one level up from the 'ucadoa' directory.
    """
    constant_directory_path = os.path.dirname(os.path.abspath(__file__))
    return os.path.dirname(os.path.dirname(constant_directory_path))
