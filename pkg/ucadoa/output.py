"""
Result files of a batch: results.csv and one SVG plot per metric.
"""
import csv
import logging
import math
import os
from typing import Dict, List, Optional, Sequence

import matplotlib
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from ucadoa.constant.estimator import METHOD_LABELS
from ucadoa.constant.main import RESULT_COLUMNS
from ucadoa.exceptions import InvalidArgumentError
from ucadoa.experiment import ResultRow, ResultTable

# Set up logging
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

RESULTS_FILE = "results.csv"
CRB_FILE = "crb.csv"
CRB_COLUMNS = ["n_sources", "sweep_axis", "sweep_value", "rmse_crb_deg"]

# Fixed salt and no date so that repeated runs write identical SVG bytes
_SVG_RC = {"svg.hashsalt": "ucadoa", "svg.fonttype": "path"}
_SVG_METADATA = {"Date": None}

# metric -> (file name, row attribute, y label)
PLOTS = {
    "rmse": ("rmse.svg", "rmse_deg", "RMSE (deg)"),
    "sdp": ("sdp.svg", "sdp", "SDP"),
    "runtime": ("runtime.svg", "mean_wall_time_s", "Mean run time (s)"),
}

_INT_FIELDS = {"n_sources"}
_STR_FIELDS = {"method", "sweep_axis", "input_checksum"}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _parse(name: str, text: str):
    if name in _STR_FIELDS:
        return text
    if name in _INT_FIELDS:
        return int(text)
    if name == "sweep_value" and text == "":
        return None
    return float(text)


def write_results_csv(table: ResultTable, path: str) -> str:
    """Write the table with the RESULT_COLUMNS header; floats keep their full precision."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(RESULT_COLUMNS)
            for row in table.rows:
                writer.writerow([_format(getattr(row, column)) for column in RESULT_COLUMNS])
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise OSError(f"Failed to write {path}: {e}") from e
    return path


def read_results_csv(path: str) -> ResultTable:
    """Parse a results.csv written by write_results_csv back into a ResultTable."""
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames != RESULT_COLUMNS:
            logger.error(f"Unexpected columns in {path}: {reader.fieldnames}")
            raise InvalidArgumentError(f"Unexpected columns in {path}: {reader.fieldnames}")
        rows = [ResultRow(**{name: _parse(name, record[name]) for name in RESULT_COLUMNS}) for record in reader]
    return ResultTable(rows=rows)


def _x_values(rows: Sequence[ResultRow]) -> List[float]:
    return [0.0 if row.sweep_value is None else row.sweep_value for row in rows]


def _plot_metric(table: ResultTable, attribute: str, y_label: str, path: str, with_crb: bool):
    source_counts = sorted({row.n_sources for row in table.rows})
    figure = Figure(figsize=(5.0 * len(source_counts), 4.0))
    FigureCanvasAgg(figure)
    axes = figure.subplots(1, len(source_counts), squeeze=False)[0]
    sweep_axis = table.rows[0].sweep_axis

    for ax, n_sources in zip(axes, source_counts):
        for method in table.methods():
            series = table.series(method, n_sources)
            if not series:
                continue
            (line,) = ax.plot(
                _x_values(series),
                [getattr(row, attribute) for row in series],
                marker="o",
                label=METHOD_LABELS.get(method, method),
            )
            line.set_gid(f"series-{method}-n{n_sources}")

        if with_crb:
            reference = table.series(table.methods()[0], n_sources)
            bounds = [row.rmse_crb_deg for row in reference]
            if not all(math.isnan(b) for b in bounds):
                (line,) = ax.plot(_x_values(reference), bounds, linestyle="--", color="k", label="RMSE_CRB")
                line.set_gid(f"series-crb-n{n_sources}")

        ax.set_title(f"N = {n_sources}")
        ax.set_xlabel(sweep_axis if sweep_axis != "none" else "nominal")
        ax.set_ylabel(y_label)
        if attribute == "rmse_deg" and all(
            getattr(row, attribute) > 0 for row in table.rows if row.n_sources == n_sources
        ):
            ax.set_yscale("log")
        ax.grid(True, alpha=0.3)
        ax.legend()

    figure.tight_layout()
    try:
        with matplotlib.rc_context(_SVG_RC):
            figure.savefig(path, format="svg", metadata=_SVG_METADATA)
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise OSError(f"Failed to write {path}: {e}") from e


def emit_outputs(table: ResultTable, directory: str) -> Dict[str, str]:
    """
    Write results.csv, rmse.svg, sdp.svg and runtime.svg into directory.

    Each plot has one panel per source count, the sweep value on the x-axis and one
    series per method. The RMSE plot also carries the CRB series when it is finite.

    Returns:
        dict: File kind -> written path.
    """
    if not table.rows:
        logger.error("Cannot emit outputs for an empty result table")
        raise InvalidArgumentError("Cannot emit outputs for an empty result table")
    os.makedirs(directory, exist_ok=True)

    written = {"results": write_results_csv(table, os.path.join(directory, RESULTS_FILE))}
    for metric, (filename, attribute, y_label) in PLOTS.items():
        path = os.path.join(directory, filename)
        _plot_metric(table, attribute, y_label, path, with_crb=metric == "rmse")
        written[metric] = path
    logger.info(f"Results written to {directory}")
    return written


def write_crb_csv(bounds: Sequence[tuple], path: str, sweep_axis: Optional[str] = "none") -> str:
    """
    Write one row per (source count, sweep value) bound.

    bounds holds (n_sources, sweep_value, rmse_crb_deg) tuples.
    """
    try:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(CRB_COLUMNS)
            for n_sources, sweep_value, bound in bounds:
                writer.writerow([n_sources, sweep_axis, _format(sweep_value), _format(float(bound))])
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise OSError(f"Failed to write {path}: {e}") from e
    return path
