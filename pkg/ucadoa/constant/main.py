import os
import tempfile

from ucadoa.constant.util import get_daily_log_directory, get_package_root_directory

# Define the log format
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# Get the system's base temporary directory (cross-platform)
BASE_TMP_DIRECTORY = tempfile.gettempdir()

# Log file lives in a per-day directory so repeated batches do not grow one file forever.
LOG_FILE_PATH = os.path.join(get_daily_log_directory(BASE_TMP_DIRECTORY), "ucadoa.log")

# Default directory for experiment presets (relative to the project root).
DEFAULT_PRESET_DIRECTORY = os.path.join(get_package_root_directory(), "preset")

# Default output directory for results.csv and plots.
DEFAULT_OUTPUT_DIRECTORY = os.path.join(os.getcwd(), "doa-results")

# Dictionary mapping runtime settings to environment variable names.
ENV_VAR_CONFIG = {
    "threads": "UCADOA_THREADS",          # Worker threads for Monte-Carlo trials
    "output_dir": "UCADOA_OUTPUT_DIR",    # Where results.csv and plots are written
    "log_level": "UCADOA_LOG_LEVEL",      # DEBUG, INFO, WARNING, ...
}

# Physical constants
SPEED_OF_LIGHT = 2.99792458e8  # m/s
ROUNDED_SPEED_OF_LIGHT = 3e8   # rounded value used by the default experiments

# Scenario defaults
DEFAULT_ELEMENT_COUNT = 5
DEFAULT_CENTER_FREQUENCY = 30e9   # Hz
DEFAULT_BANDWIDTH = 9e9           # Hz
DEFAULT_SAMPLE_RATE = 11.25e9     # Hz
DEFAULT_FFT_SIZE = 32
DEFAULT_SNR = 10.0                # dB
DEFAULT_PATH_DELAY = 1e-9         # s

# Desk scale keeps batches in minutes; full scale is for final curves.
DESK_SCALE_DURATION = 1e-6        # s
DESK_SCALE_TRIALS = 50
FULL_SCALE_DURATION = 10e-6       # s
FULL_SCALE_TRIALS = 200

# Estimator defaults
DEFAULT_MAX_ITERATIONS = 15
DEFAULT_BIAS = 3.0
DEFAULT_AVG_ERROR = 3.0           # degrees
DEFAULT_STEP = 0.2                # degrees

# Numerical tolerances
HERMITIAN_TOLERANCE = 1e-10
SINGULAR_VALUE_FLOOR = 1e-12
EIGENVALUE_RATIO_FLOOR = 1e-12
SPECTRUM_DENOMINATOR_FLOOR = 1e-30
SPECTRUM_CEILING = 1e30
GRID_DECIMALS = 9                 # grid coordinates are rounded to 1e-9 degree
BEAMWIDTH_SCAN_STEP = 0.01        # degrees

# Ground-truth DoA groups, (elevation, azimuth) in degrees, keyed by source count.
REFERENCE_DOA_GROUPS = {
    1: [
        [(60.0, 150.0)],
        [(33.0, 50.0)],
        [(28.0, 230.0)],
    ],
    2: [
        [(60.0, 150.0), (20.0, 45.0)],
        [(40.0, 175.0), (70.0, 250.0)],
        [(25.0, 230.0), (65.0, 150.0)],
    ],
    3: [
        [(60.0, 150.0), (30.0, 95.0), (45.0, 300.0)],
        [(30.0, 50.0), (40.0, 190.0), (70.0, 250.0)],
        [(25.0, 230.0), (65.0, 150.0), (35.0, 60.0)],
    ],
}

# Header written in front of raw IQ dumps: magic, u32 M, u64 K_t, f64 fS, padding to 32 bytes.
IQ_MAGIC = b"UCAIQ\0"
IQ_HEADER_FORMAT = "<6sIQd6x"

# Columns of results.csv, in order.
RESULT_COLUMNS = [
    "method",
    "n_sources",
    "sweep_axis",
    "sweep_value",
    "rmse_deg",
    "sdp",
    "rmse_crb_deg",
    "mean_wall_time_s",
    "mean_flops",
    "mean_iterations",
    "input_checksum",
]
