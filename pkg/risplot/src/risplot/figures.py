"""Benchmark figure rendering.

Consumes the sweep CSVs written by the `risce` command line tool and draws
the three NMSE comparison figures.  The coupling to the producer is the
CSV schema alone; nothing here imports the simulation code.
"""

import csv
import logging
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

logger = logging.getLogger(__name__)

# legend order is fixed for visual comparability across figures
METHOD_ORDER = ("conv2tce", "omp", "noperm", "greedy")

# figure name -> (sweep column value, x column, x-axis label)
FIGURES = {
    "pilots": ("pilots", "T", "total pilot slots T"),
    "scatterers": ("scatterers", "L_ur", "scatterers per link L"),
    "groups": ("groups", "Q", "surface groups Q"),
}

FLOOR = 1e-16  # substitute for nonpositive NMSE on a log axis

_MARKERS = {"conv2tce": "o", "omp": "s", "noperm": "^", "greedy": "d"}


class PlotError(Exception):
    """Input CSV unusable for the requested figure."""


@dataclass(frozen=True)
class PlotSpec:
    input_csv: str
    figure: str
    output_image: str
    log_y: bool = True

    def validate(self):
        if self.figure not in FIGURES:
            raise PlotError(f"unknown figure {self.figure!r}; "
                            f"expected one of {sorted(FIGURES)}")
        return self


def _load_rows(path, needed):
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames or []
            missing = [c for c in needed if c not in header]
            if missing:
                raise PlotError(
                    f"{path}: missing columns {missing}")
            return list(reader)
    except OSError as e:
        raise PlotError(f"cannot read {path}: {e}")


def _series(rows, sweep, x_col):
    """Rows of one sweep -> {method: sorted [(x, mean_nmse)]}."""
    picked = {}
    for row in rows:
        if row["sweep"] != sweep:
            continue
        try:
            x = float(row[x_col])
            y = float(row["mean_nmse"])
        except (TypeError, ValueError):
            raise PlotError(
                f"non-numeric {x_col}/mean_nmse in sweep {sweep!r}")
        picked.setdefault(row["method"], []).append((x, y))
    for pts in picked.values():
        pts.sort()
    return picked


def _ordered_methods(series):
    known = [m for m in METHOD_ORDER if m in series]
    extra = sorted(m for m in series if m not in METHOD_ORDER)
    return known + extra


def render(spec):
    """Draw one figure; returns the output path.

    Raises PlotError when the CSV lacks the schema columns or contains no
    rows for the requested sweep.  The input file is only ever read.
    """
    spec.validate()
    sweep, x_col, x_label = FIGURES[spec.figure]
    rows = _load_rows(spec.input_csv,
                      ("sweep", "method", x_col, "mean_nmse"))
    series = _series(rows, sweep, x_col)
    if not series:
        raise PlotError(
            f"{spec.input_csv}: no rows for sweep {sweep!r}")

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    try:
        for method in _ordered_methods(series):
            xs, ys = zip(*series[method])
            if spec.log_y and min(ys) <= 0.0:
                logger.warning(
                    "clamping %d nonpositive NMSE value(s) for %s to %g",
                    sum(y <= 0.0 for y in ys), method, FLOOR)
                ys = tuple(max(y, FLOOR) for y in ys)
            ax.plot(xs, ys, marker=_MARKERS.get(method, "x"),
                    label=method)
        if spec.log_y:
            ax.set_yscale("log")
        ax.set_xlabel(x_label)
        ax.set_ylabel("mean NMSE")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(spec.output_image, dpi=150, format="png",
                    metadata={"Software": "risplot"})
    finally:
        plt.close(fig)
    return spec.output_image
