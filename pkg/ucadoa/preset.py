import glob
import json
import logging
import os
from typing import Dict

from ucadoa.constant.main import DEFAULT_PRESET_DIRECTORY
from ucadoa.exceptions import ConfigError

# Set up logging
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

PRESET_SUFFIX = ".json"


def _read_document(path: str) -> dict:
    """Read one JSON config; raise ConfigError unless it holds a single object."""
    try:
        with open(path, "r", encoding="utf-8") as file:
            document = json.load(file)
    except json.JSONDecodeError as e:
        logger.error(f"Error decoding JSON in {path}: {e}")
        raise ConfigError(f"Error decoding JSON in {path}: {e}") from e
    if not isinstance(document, dict):
        logger.error(f"Config {path} must be a JSON object")
        raise ConfigError(f"Config {path} must be a JSON object")
    return document


def preset_names(folder_path=DEFAULT_PRESET_DIRECTORY):
    """Names of the preset files in folder_path, sorted."""
    pattern = os.path.join(glob.escape(folder_path), f"*{PRESET_SUFFIX}")
    return sorted(os.path.basename(path)[: -len(PRESET_SUFFIX)] for path in glob.glob(pattern))


def load_presets_from_folder(folder_path=DEFAULT_PRESET_DIRECTORY) -> Dict[str, dict]:
    """
    Load every experiment preset in a folder.

    Unreadable presets are logged and skipped so one broken file does not hide the others.

    :param folder_path: Folder holding the preset JSON files.
    :return: Preset documents keyed by file name without the suffix.
    """
    if not os.path.isdir(folder_path):
        raise FileNotFoundError(f"The presets folder at {folder_path} does not exist or is not a directory.")

    presets = {}
    for name in preset_names(folder_path):
        try:
            presets[name] = _read_document(os.path.join(folder_path, name + PRESET_SUFFIX))
        except ConfigError:
            logger.warning(f"Skipping preset '{name}'")
    return presets


def load_config_document(reference: str, folder_path=DEFAULT_PRESET_DIRECTORY) -> dict:
    """
    Resolve --config: an existing file path is read as JSON, anything else is looked up
    as a preset name.

    :raises ConfigError: If the file is not a JSON object or no preset has that name.
    """
    if os.path.isfile(reference):
        return _read_document(reference)

    path = os.path.join(folder_path, reference + PRESET_SUFFIX)
    if not os.path.isfile(path):
        available = preset_names(folder_path) if os.path.isdir(folder_path) else []
        logger.error(f"No config file or preset named '{reference}'")
        raise ConfigError(f"No config file or preset named '{reference}'. Presets: {', '.join(available)}")
    return _read_document(path)
