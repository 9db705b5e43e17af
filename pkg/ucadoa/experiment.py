"""
Monte-Carlo experiment runner.

Every (sweep value, group, trial) draws its own random streams from the master seed, so
each method sees bit-identical inputs and the results do not depend on the thread count.
"""
from __future__ import annotations

import copy
import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ucadoa.array_model import ArrayGeometry, DoA, max_radius
from ucadoa.constant.estimator import ESTIMATOR_CLASSES, SWEEP_AXES
from ucadoa.constant.main import (
    DEFAULT_ELEMENT_COUNT,
    DEFAULT_OUTPUT_DIRECTORY,
    DESK_SCALE_TRIALS,
    FULL_SCALE_DURATION,
    FULL_SCALE_TRIALS,
    ROUNDED_SPEED_OF_LIGHT,
    REFERENCE_DOA_GROUPS,
)
from ucadoa.crb import CrbScenario, crb_closed_form, rmse_crb
from ucadoa.environment import ensure_writable
from ucadoa.estimator.robustness import RipfParams
from ucadoa.exceptions import ConfigError, InvalidArgumentError, UcaDoaError
from ucadoa.factory import EstimatorFactory
from ucadoa.metrics import TrialOutcome, cheaper_iteration_fraction, flops_estimate, rmse, run_flops, sdp
from ucadoa.signal_sim import (
    ScenarioConfig,
    bin_frequencies,
    clean_received,
    make_pre_estimates,
    noise_variance_for,
    simulate_trial,
    source_spectra,
)
from ucadoa.subspace import full_range_dimensions

# Set up logger
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

# spawn_key stream slots of one trial
_NOISE_STREAM = 0
_PRE_ESTIMATE_STREAM = 1
_ESTIMATOR_STREAM = 2


def default_doa_groups() -> List[List[DoA]]:
    """The nine reference groups, three per source count."""
    return [
        [DoA(theta, phi) for theta, phi in group]
        for count in sorted(REFERENCE_DOA_GROUPS)
        for group in REFERENCE_DOA_GROUPS[count]
    ]


@dataclass(frozen=True)
class SweepSpec:
    """One swept axis and its values."""

    axis: str
    values: Tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A complete batch description.

    Attributes:
        scenario (ScenarioConfig): Signal scenario; its path_doas are replaced per group.
        methods (tuple): Method tags to run on every trial.
        ripf (RipfParams): Estimator parameters shared by all methods.
        doa_groups (tuple): Ground-truth DoA groups.
        trials (int): Monte-Carlo trials per group and sweep value.
        sweep (SweepSpec, optional): Swept axis.
        master_seed (int): Root of every random stream.
        output_dir (str): Destination of results.csv and plots.
        element_count (int): Number of UCA elements M.
        radius (float, optional): UCA radius; defaults to the grating-lobe limit at f0 + B/2.
        light_speed (float): Propagation speed used by the array model.
        record_wall_time (bool): Time every estimator run; when false (the default) wall times
            are reported as 0 so repeated runs write identical bytes.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    methods: Tuple[str, ...] = ("ripf",)
    ripf: RipfParams = field(default_factory=RipfParams)
    doa_groups: Tuple[Tuple[DoA, ...], ...] = field(
        default_factory=lambda: tuple(tuple(g) for g in default_doa_groups())
    )
    trials: int = DESK_SCALE_TRIALS
    sweep: Optional[SweepSpec] = None
    master_seed: int = 0
    output_dir: str = DEFAULT_OUTPUT_DIRECTORY
    element_count: int = DEFAULT_ELEMENT_COUNT
    radius: Optional[float] = None
    light_speed: float = ROUNDED_SPEED_OF_LIGHT
    record_wall_time: bool = False

    @classmethod
    def from_dict(cls, document: dict) -> "ExperimentConfig":
        """
        Build a config from its JSON form; field names are snake_case and unknown keys
        are rejected.

        Raises:
            ConfigError: On unknown keys, wrong types or values that violate a precondition.
        """
        if not isinstance(document, dict):
            raise ConfigError("Experiment config must be a JSON object")
        document = copy.deepcopy(document)
        known = {f.name for f in fields(cls)}
        _reject_unknown("config", document, known)

        try:
            kwargs = {}
            if "scenario" in document:
                scenario = document.pop("scenario")
                _reject_unknown(
                    "scenario", scenario, {f.name for f in fields(ScenarioConfig)} - {"path_doas"}
                )
                kwargs["scenario"] = ScenarioConfig(**scenario)
            if "ripf" in document:
                ripf = document.pop("ripf")
                _reject_unknown("ripf", ripf, {f.name for f in fields(RipfParams)})
                kwargs["ripf"] = RipfParams(**ripf)
            if "doa_groups" in document:
                kwargs["doa_groups"] = tuple(
                    tuple(DoA(float(theta), float(phi)) for theta, phi in group)
                    for group in document.pop("doa_groups")
                )
            if "sweep" in document and document["sweep"] is not None:
                sweep = document.pop("sweep")
                _reject_unknown("sweep", sweep, {"axis", "values"})
                kwargs["sweep"] = SweepSpec(
                    _normalize_axis(sweep["axis"]), tuple(float(v) for v in sweep["values"])
                )
            if "methods" in document:
                kwargs["methods"] = tuple(str(m).lower() for m in document.pop("methods"))
            kwargs.update(document)
            config = cls(**kwargs)
        except ConfigError:
            raise
        except (InvalidArgumentError, KeyError, TypeError, ValueError) as e:
            logger.error(f"Invalid experiment config: {e}")
            raise ConfigError(f"Invalid experiment config: {e}") from e

        config.validate()
        return config

    def validate(self):
        problems = []
        if self.trials < 1:
            problems.append(f"trials={self.trials} must be >= 1")
        unknown = [m for m in self.methods if m not in ESTIMATOR_CLASSES]
        if unknown:
            problems.append(f"unknown methods {unknown}")
        if not self.methods:
            problems.append("no method requested")
        if not self.doa_groups or any(len(g) == 0 for g in self.doa_groups):
            problems.append("doa_groups must hold non-empty groups")
        if self.sweep is not None and not self.sweep.values:
            problems.append("sweep values must be non-empty")
        try:
            geom = self.geometry()
            for group in self.doa_groups:
                replace(self.scenario, path_doas=list(group)).validate(geom)
        except InvalidArgumentError as e:
            problems.append(str(e))
        if problems:
            message = "Invalid experiment config: " + "; ".join(problems)
            logger.error(message)
            raise ConfigError(message)

    def at_full_scale(self) -> "ExperimentConfig":
        """Same batch with the full-scale duration and trial count."""
        return replace(
            self,
            scenario=replace(self.scenario, duration=FULL_SCALE_DURATION),
            trials=FULL_SCALE_TRIALS,
        )

    def geometry(self) -> ArrayGeometry:
        max_frequency = self.scenario.max_frequency
        radius = self.radius or max_radius(self.element_count, max_frequency, self.light_speed)
        return ArrayGeometry(self.element_count, radius, self.light_speed, max_frequency)

    def resolved(self, value: Optional[float]) -> Tuple[ScenarioConfig, RipfParams]:
        """Scenario and estimator parameters at one sweep value."""
        if self.sweep is None or value is None:
            return self.scenario, self.ripf
        axis = self.sweep.axis
        if axis == "snr":
            return replace(self.scenario, snr=value), self.ripf
        if axis == "pre_error":
            return self.scenario, replace(self.ripf, avg_err_theta=value, avg_err_phi=value)
        if axis == "steps":
            return self.scenario, replace(self.ripf, step_theta=value, step_phi=value)
        if axis == "fft_size":
            return replace(self.scenario, fft_size=int(value)), self.ripf
        raise ConfigError(f"Unsupported sweep axis: {axis}")


def _reject_unknown(where: str, document, known):
    if not isinstance(document, dict):
        raise ConfigError(f"'{where}' must be a JSON object")
    unknown = sorted(set(document) - set(known))
    if unknown:
        logger.error(f"Unknown keys in {where}: {unknown}")
        raise ConfigError(f"Unknown keys in {where}: {unknown}")


def _normalize_axis(axis: str) -> str:
    """Accept both the CLI spelling (pre-error) and the field spelling (pre_error)."""
    if axis in SWEEP_AXES:
        return SWEEP_AXES[axis]
    if axis in SWEEP_AXES.values():
        return axis
    raise ConfigError(f"Unknown sweep axis '{axis}'. Must be one of: {', '.join(SWEEP_AXES)}")


@dataclass(frozen=True)
class ResultRow:
    """One pooled row: a method at one source count and sweep value."""

    method: str
    n_sources: int
    sweep_axis: str
    sweep_value: Optional[float]
    rmse_deg: float
    sdp: float
    rmse_crb_deg: float
    mean_wall_time_s: float
    mean_flops: float
    mean_iterations: float
    input_checksum: str


@dataclass
class ResultTable:
    """
    Pooled results of a batch.

    Attributes:
        rows (list): ResultRow objects, ordered by sweep value, source count, then method.
        cheaper_fraction (dict): For every (source count, sweep value) with a partial-focusing
            run, the share of its iterations estimated cheaper than one conventional full-band
            iteration.
    """

    rows: List[ResultRow] = field(default_factory=list)
    cheaper_fraction: Dict[Tuple[int, Optional[float]], float] = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def methods(self) -> List[str]:
        return list(dict.fromkeys(row.method for row in self.rows))

    def series(self, method: str, n_sources: int) -> List[ResultRow]:
        return [r for r in self.rows if r.method == method and r.n_sources == n_sources]


@dataclass(frozen=True)
class _TrialResult:
    checksum: str
    outcomes: Dict[str, TrialOutcome]
    iteration_flops: Dict[str, List[float]]


def trial_streams(master_seed: int, sweep_index: int, group_index: int, trial_index: int):
    """Independent (noise, pre-estimate, estimator) seed sequences of one trial."""
    return [
        np.random.SeedSequence(master_seed, spawn_key=(sweep_index, group_index, trial_index, slot))
        for slot in (_NOISE_STREAM, _PRE_ESTIMATE_STREAM, _ESTIMATOR_STREAM)
    ]


class BatchRunner:
    """Runs the trials of one config and pools them into a ResultTable."""

    def __init__(self, cfg: ExperimentConfig, threads: int = 1):
        self.cfg = cfg
        self.threads = max(1, int(threads))
        self.geom = cfg.geometry()

    def _grid_size(self, params: RipfParams) -> Tuple[int, int]:
        return full_range_dimensions(params.step_theta, params.step_phi)

    def _run_trial(
        self,
        scenario: ScenarioConfig,
        params: RipfParams,
        truth: Sequence[DoA],
        sweep_index: int,
        group_index: int,
        trial_index: int,
    ) -> _TrialResult:
        noise_seed, pre_seed, estimator_seed = trial_streams(
            self.cfg.master_seed, sweep_index, group_index, trial_index
        )
        data = simulate_trial(self.geom, scenario, np.random.default_rng(noise_seed))
        pre_estimates = make_pre_estimates(
            truth, params.avg_err_theta, params.avg_err_phi, np.random.default_rng(pre_seed)
        )
        grid_size = self._grid_size(params)

        outcomes = {}
        iteration_flops = {}
        for method in self.cfg.methods:
            estimator = EstimatorFactory.get_estimator(method)
            rng = np.random.default_rng(estimator_seed)
            started = time.perf_counter()
            estimates, trace = estimator.estimate(data.stack, pre_estimates, self.geom, params, rng)
            elapsed = time.perf_counter() - started
            flops = run_flops(
                method,
                trace,
                self.geom.element_count,
                data.stack.snapshots_per_bin,
                params.step_theta,
                params.step_phi,
                grid_size,
            )
            iteration_flops[method] = flops
            outcomes[method] = TrialOutcome(
                truth=tuple(truth),
                estimates=tuple(estimates),
                wall_time=elapsed if self.cfg.record_wall_time else 0.0,
                flops_estimate=float(sum(flops)),
                iterations_used=len(trace),
            )
        return _TrialResult(data.stack.checksum(), outcomes, iteration_flops)

    def group_crb(self, scenario: ScenarioConfig, truth: Sequence[DoA]):
        """Closed-form bound of one group, or None when the scenario is noiseless."""
        group_scenario = replace(scenario, path_doas=list(truth))
        variance = noise_variance_for(clean_received(self.geom, group_scenario), group_scenario.snr)
        if variance <= 0.0:
            return None
        crb_scenario = CrbScenario(
            self.geom,
            truth,
            source_spectra(group_scenario),
            variance,
            bin_frequencies(
                group_scenario.center_frequency, group_scenario.sample_rate, group_scenario.fft_size
            ),
        )
        return crb_closed_form(crb_scenario)

    def run(self) -> ResultTable:
        cfg = self.cfg
        axis = cfg.sweep.axis if cfg.sweep else "none"
        values: List[Optional[float]] = list(cfg.sweep.values) if cfg.sweep else [None]
        table = ResultTable()

        for sweep_index, value in enumerate(values):
            scenario, params = cfg.resolved(value)
            logger.info(
                f"Sweep {axis}={value}: {len(cfg.doa_groups)} groups x {cfg.trials} trials, "
                f"methods {', '.join(cfg.methods)}"
            )
            per_group = []
            for group_index, truth in enumerate(cfg.doa_groups):
                group_scenario = replace(scenario, path_doas=list(truth))
                group_scenario.validate(self.geom)
                tasks = range(cfg.trials)

                def run_one(trial_index, _truth=truth, _scenario=group_scenario, _group=group_index):
                    return self._run_trial(_scenario, params, _truth, sweep_index, _group, trial_index)

                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    results = list(pool.map(run_one, tasks))
                per_group.append((truth, results, self.group_crb(scenario, truth)))
                logger.info(f"Group {group_index + 1}/{len(cfg.doa_groups)} done")

            self._pool(table, axis, value, params, per_group)
        return table

    def _pool(self, table: ResultTable, axis: str, value, params: RipfParams, per_group):
        for n_sources in sorted({len(truth) for truth, _, _ in per_group}):
            groups = [g for g in per_group if len(g[0]) == n_sources]
            digest = hashlib.sha256()
            for _, results, _ in groups:
                for result in results:
                    digest.update(result.checksum.encode("ascii"))
            checksum = digest.hexdigest()[:16]

            bounds = [crb for _, _, crb in groups]
            bound = math.nan if any(b is None for b in bounds) else rmse_crb(bounds, n_sources)

            for method in self.cfg.methods:
                outcomes = [r.outcomes[method] for _, results, _ in groups for r in results]
                table.rows.append(
                    ResultRow(
                        method=method,
                        n_sources=n_sources,
                        sweep_axis=axis,
                        sweep_value=value,
                        rmse_deg=rmse(outcomes),
                        sdp=sdp(outcomes, params.step_theta, params.step_phi),
                        rmse_crb_deg=bound,
                        mean_wall_time_s=float(np.mean([o.wall_time for o in outcomes])),
                        mean_flops=float(np.mean([o.flops_estimate for o in outcomes])),
                        mean_iterations=float(np.mean([o.iterations_used for o in outcomes])),
                        input_checksum=checksum,
                    )
                )

            if "ripf" in self.cfg.methods:
                iteration_flops = [
                    f for _, results, _ in groups for r in results for f in r.iteration_flops["ripf"]
                ]
                reference = self._single_pass_reference(value, params, n_sources)
                table.cheaper_fraction[(n_sources, value)] = cheaper_iteration_fraction(
                    iteration_flops, reference
                )

    def _single_pass_reference(self, value, params: RipfParams, n_sources: int) -> float:
        scenario, _ = self.cfg.resolved(value)
        snapshots = scenario.sample_count // scenario.fft_size
        return flops_estimate(
            "c-csm",
            self.geom.element_count,
            snapshots,
            scenario.fft_size,
            n_sources,
            grid_size=self._grid_size(params),
        )


def run_batch(cfg: ExperimentConfig, threads: int = 1) -> ResultTable:
    """
    Run every requested method on every trial of every group and sweep value.

    Rows pool all groups that share a source count. The CRB column is NaN for
    noiseless scenarios.
    """
    ensure_writable(cfg.output_dir)
    try:
        return BatchRunner(cfg, threads).run()
    except UcaDoaError:
        raise
    except (FloatingPointError, np.linalg.LinAlgError) as e:
        logger.error(f"Batch failed: {e}")
        raise UcaDoaError(f"Batch failed: {e}") from e


def crb_report(cfg: ExperimentConfig) -> List[Tuple[int, Optional[float], float]]:
    """
    RMSE bound per source count and sweep value, from the clean source spectra.

    Returns:
        list: (n_sources, sweep_value, rmse_crb_deg) tuples; the bound is NaN when noiseless.
    """
    runner = BatchRunner(cfg)
    values: List[Optional[float]] = list(cfg.sweep.values) if cfg.sweep else [None]
    report = []
    for value in values:
        scenario, _ = cfg.resolved(value)
        by_count: Dict[int, list] = {}
        for truth in cfg.doa_groups:
            by_count.setdefault(len(truth), []).append(runner.group_crb(scenario, truth))
        for n_sources in sorted(by_count):
            bounds = by_count[n_sources]
            bound = math.nan if any(b is None for b in bounds) else rmse_crb(bounds, n_sources)
            logger.info(f"RMSE_CRB for N={n_sources} at {value}: {bound:.6g} deg")
            report.append((n_sources, value, bound))
    return report
