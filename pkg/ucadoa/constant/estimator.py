# Estimator classes
ESTIMATOR_CLASSES = {
    "ripf": "ucadoa.estimator.ripf_estimator.RipfCsmEstimator",
    "c-csm-1": "ucadoa.estimator.ccsm_estimator.SinglePassCsmEstimator",
    "c-csm": "ucadoa.estimator.ccsm_estimator.ConventionalCsmEstimator",
    "se-csm": "ucadoa.estimator.secsm_estimator.ExtraAngleCsmEstimator",
    "r-csm": "ucadoa.estimator.rcsm_estimator.RobustCsmEstimator",
    "i-2d-csm": "ucadoa.estimator.i2dcsm_estimator.Iterative2DCsmEstimator",
}

# Tags accepted by benchmark_csm (everything except the proposed estimator)
BENCHMARK_METHODS = ["c-csm-1", "c-csm", "se-csm", "r-csm", "i-2d-csm"]

# Display names used in logs and plot legends
METHOD_LABELS = {
    "ripf": "RIPF-CSM",
    "c-csm-1": "C-CSM (i=1)",
    "c-csm": "C-CSM",
    "se-csm": "SE-CSM",
    "r-csm": "R-CSM",
    "i-2d-csm": "I-2D-CSM",
}

# Extra focusing angle offsets, in beamwidth fractions
SE_CSM_FIRST_OFFSET = 0.25
SE_CSM_LATER_OFFSET = 0.125

# Interval shrink exponent
R_CSM_EXPONENT = 2

# Step-to-iteration factor, in (1, 3]
I2D_CSM_RHO = 2.0

# Sweep axes and the CLI spelling of each
SWEEP_AXES = {
    "snr": "snr",
    "pre-error": "pre_error",
    "steps": "steps",
    "fft-size": "fft_size",
}
