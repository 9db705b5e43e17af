import argparse
import logging
import os
import sys
from dataclasses import replace

from ucadoa.constant.estimator import SWEEP_AXES
from ucadoa.constant.main import LOG_FILE_PATH, LOG_FORMAT
from ucadoa.environment import Environment, ensure_writable
from ucadoa.exceptions import ConfigError, UcaDoaError
from ucadoa.experiment import ExperimentConfig, crb_report, run_batch
from ucadoa.metrics import cost_bound_check
from ucadoa.output import CRB_FILE, emit_outputs, write_crb_csv
from ucadoa.preset import load_config_document
from ucadoa.subspace import full_range_dimensions

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format=LOG_FORMAT,
    handlers=[
        logging.StreamHandler(),
        logging.FileHandler(LOG_FILE_PATH),
    ],
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

COST_BOUND_COMMANDS = ("check-appendix-b", "check-cost-bound")


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--config",
        type=str,
        required=True,
        help="Experiment config: a JSON file path or the name of a preset.",
    )
    parser.add_argument(
        "--paper-scale",
        "--full-scale",
        dest="full_scale",
        action="store_true",
        help="Use the full-scale sampling duration and trial count instead of the desk-scale ones.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads for the Monte-Carlo trials (default: UCADOA_THREADS or 1).",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="Output directory (default: the config's output_dir, UCADOA_OUTPUT_DIR or ./doa-results).",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doa", description="Wideband 2D DoA estimation experiments with a uniform circular array."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run a Monte-Carlo batch and write results.csv and plots.")
    _add_common_arguments(run_parser)

    sweep_parser = subparsers.add_parser("sweep", help="Run a batch over one swept parameter.")
    _add_common_arguments(sweep_parser)
    sweep_parser.add_argument(
        "--axis",
        type=str,
        required=True,
        choices=list(SWEEP_AXES),
        help="Swept parameter.",
    )
    sweep_parser.add_argument(
        "--values",
        type=str,
        required=True,
        help="Comma-separated sweep values (e.g., 0,5,10).",
    )

    crb_parser = subparsers.add_parser("crb", help="Write the RMSE bound of the configured scenario to crb.csv.")
    _add_common_arguments(crb_parser)

    cost_parser = subparsers.add_parser(
        "check-appendix-b",
        aliases=["check-cost-bound"],
        help="Check that one partial-focusing iteration is cheaper than one full-band iteration.",
    )
    _add_common_arguments(cost_parser)
    cost_parser.add_argument(
        "--iterations-to-converge",
        type=int,
        default=5,
        help="Expected iterations to convergence (default 5).",
    )
    return parser


def apply_log_level(level: str):
    """Module loggers keep their own INFO level, so the threshold also goes on the root handlers."""
    root = logging.getLogger()
    root.setLevel(level)
    for handler in root.handlers:
        handler.setLevel(level)


def _parse_values(text: str):
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"Invalid sweep values '{text}': {e}") from e
    if not values:
        raise ConfigError("Sweep values must be non-empty")
    return values


def load_config(args) -> ExperimentConfig:
    """Resolve the config reference and apply the command-line overrides."""
    document = load_config_document(args.config)
    if getattr(args, "axis", None):
        document["sweep"] = {"axis": args.axis, "values": _parse_values(args.values)}
    cfg = ExperimentConfig.from_dict(document)

    environment = Environment(threads=args.threads, output_dir=args.out or document.get("output_dir"))
    environment.log_configuration()
    apply_log_level(environment.log_level)
    cfg = replace(cfg, output_dir=environment.output_dir)
    if args.full_scale:
        cfg = cfg.at_full_scale()
    args.threads = environment.threads
    return cfg


def _run(args, cfg: ExperimentConfig):
    table = run_batch(cfg, threads=args.threads)
    emit_outputs(table, cfg.output_dir)
    for row in table.rows:
        logger.info(
            f"{row.method} N={row.n_sources} {row.sweep_axis}={row.sweep_value}: "
            f"RMSE={row.rmse_deg:.4f} deg, SDP={row.sdp:.3f}, CRB={row.rmse_crb_deg:.4f} deg"
        )
    for (n_sources, value), fraction in sorted(table.cheaper_fraction.items(), key=lambda item: str(item[0])):
        logger.info(f"N={n_sources} at {value}: {fraction:.1%} of ripf iterations cheaper than one C-CSM iteration")


def _crb(cfg: ExperimentConfig):
    ensure_writable(cfg.output_dir)
    report = crb_report(cfg)
    axis = cfg.sweep.axis if cfg.sweep else "none"
    path = write_crb_csv(report, os.path.join(cfg.output_dir, CRB_FILE), axis)
    logger.info(f"CRB report written to {path}")


def _check_cost_bound(args, cfg: ExperimentConfig) -> bool:
    scenario, params = cfg.resolved(None)
    grid_size = full_range_dimensions(params.step_theta, params.step_phi)
    satisfied = True
    for n_sources in sorted({len(group) for group in cfg.doa_groups}):
        result = cost_bound_check(
            element_count=cfg.element_count,
            fft_size=scenario.fft_size,
            snapshots_per_bin=scenario.sample_count // scenario.fft_size,
            source_count=n_sources,
            avg_err_theta=params.avg_err_theta,
            avg_err_phi=params.avg_err_phi,
            bias=params.bias,
            step_theta=params.step_theta,
            step_phi=params.step_phi,
            grid_size=grid_size,
            max_iterations=params.max_iterations,
            iterations_to_converge=args.iterations_to_converge,
        )
        satisfied = satisfied and result.satisfied
        print(
            f"N={n_sources}: satisfied={result.satisfied} margin={result.margin:.4f} "
            f"(lhs={result.lhs:.6g}, rhs={result.rhs:.6g})"
        )
    return satisfied


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args)
        if args.command in ("run", "sweep"):
            _run(args, cfg)
        elif args.command == "crb":
            _crb(cfg)
        elif args.command in COST_BOUND_COMMANDS:
            _check_cost_bound(args, cfg)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except (UcaDoaError, OSError) as e:
        logger.error(f"An error occurred: {e}")
        return EXIT_RUNTIME_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
