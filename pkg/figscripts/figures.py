#!/usr/bin/env python3
"""Figure specs and rendering for the reproduction plots.

Reads the simulation CLI's output layout (see the package's
docs/cli.md): survival and MSD CSVs, fit-result JSONs, and the
self-similar profile CSV.  Fit overlays come straight from the stored
fit results, never from a re-fit here.  Rendering is read-only; every
input is hash-checked before and after drawing.
"""

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

AXIS_SCALES = ("linear", "log")

SURVIVAL_COLUMNS = ("threshold", "probability")
MSD_COLUMNS = ("time", "msd")
PROFILE_COLUMNS = ("t", "x", "density")

# memory-time tags in the msd_Tm_<tag> directories, plot order
MEMORY_TAGS = ("0.01", "1", "10", "100", "1000", "inf")


class FigureError(Exception):
    """Any failure that should abort a figure and explain itself."""


class SchemaError(FigureError):
    """An input file does not match its documented schema."""


class EmptyInputError(FigureError):
    """An input parses but holds no data rows; no empty plots."""


class ReadOnlyViolation(FigureError):
    """Rendering changed an input file, which must never happen."""


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _read_table(path, columns):
    """Read a CSV with the exact expected header; columns of floats.

    A header mismatch reports the column diff; a file with no data rows
    raises EmptyInputError.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header "
                              f"{list(columns)}") from None
        if tuple(header) != tuple(columns):
            missing = [c for c in columns if c not in header]
            unexpected = [c for c in header if c not in columns]
            raise SchemaError(
                f"{path}: header mismatch; missing columns {missing}, "
                f"unexpected columns {unexpected}")
        rows = list(reader)
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as err:
        raise SchemaError(f"{path}: non-numeric cell ({err})") from None
    return {name: data[:, j] for j, name in enumerate(columns)}


@dataclass(frozen=True)
class SlopeOverlay:
    """A fitted line drawn over its fit window, taken from a FitResult.

    space selects the fit coordinates: "loglog" lines are
    10^intercept * t^slope, "semilog" lines are 10^(intercept+slope*t).
    """

    slope: float
    intercept: float
    window: tuple
    space: str
    label: str

    def __post_init__(self):
        if self.space not in ("loglog", "semilog"):
            raise FigureError(f"unknown overlay space {self.space!r}")
        if not self.window[0] < self.window[1]:
            raise FigureError("overlay window must satisfy lo < hi")

    def curve(self, n=64):
        lo, hi = self.window
        if self.space == "loglog":
            x = np.geomspace(lo, hi, n)
            return x, 10.0 ** self.intercept * x ** self.slope
        x = np.linspace(lo, hi, n)
        return x, 10.0 ** (self.intercept + self.slope * x)


def overlay_from_fit(path, expect_op):
    """Build a SlopeOverlay from a stored fit-result JSON; never re-fit."""
    with open(path) as fh:
        data = json.load(fh)
    missing = [k for k in ("operation", "slope", "intercept", "window")
               if k not in data]
    if missing:
        raise SchemaError(f"{path}: fit result missing keys {missing}")
    if data["operation"] != expect_op:
        raise SchemaError(f"{path}: operation {data['operation']!r}, "
                          f"expected {expect_op!r}")
    slope = float(data["slope"])
    if expect_op == "fit-loglog":
        space = "loglog"
        label = f"slope {slope:.3f}"
    else:
        space = "semilog"
        label = f"rate {-slope * math.log(10.0):.3g}"
    return SlopeOverlay(
        slope=slope,
        intercept=float(data["intercept"]),
        window=tuple(float(v) for v in data["window"]),
        space=space,
        label=label,
    )


@dataclass(frozen=True)
class FigureSpec:
    """One figure: id, input files, axis scales and fit overlays."""

    figure_id: str
    inputs: tuple
    x_scale: str = "log"
    y_scale: str = "log"
    overlays: tuple = field(default_factory=tuple)
    title: str = ""

    def __post_init__(self):
        if self.figure_id not in DRAWERS:
            raise FigureError(f"unknown figure id {self.figure_id!r}; "
                              f"have {sorted(DRAWERS)}")
        for scale in (self.x_scale, self.y_scale):
            if scale not in AXIS_SCALES:
                raise FigureError(f"axis scale must be one of {AXIS_SCALES}, "
                                  f"got {scale!r}")
        if not self.inputs:
            raise FigureError("a figure needs at least one input file")
        for path in self.inputs:
            if not os.path.isfile(path):
                raise FigureError(f"input not found: {path}")


# ------------------------------------------------------------ drawers
# Each drawer consumes spec.inputs positionally as assembled by the
# matching builder below.


def _draw_fig1a(spec, ax):
    table = _read_table(spec.inputs[0], SURVIVAL_COLUMNS)
    ax.plot(table["threshold"], table["probability"], lw=1.6,
            label="CCW intervals")
    ax.set_xlabel("t")
    ax.set_ylabel("P(T > t)")


def _draw_fig6(spec, ax):
    table = _read_table(spec.inputs[0], SURVIVAL_COLUMNS)
    mask = table["probability"] > 0.0
    ax.plot(table["threshold"][mask], table["probability"][mask], lw=1.6,
            label="stopping times")
    ax.set_xlabel("t")
    ax.set_ylabel("P(T > t)")


def _tm_label(path):
    name = os.path.basename(os.path.dirname(path))
    if name.startswith("msd_Tm_"):
        return "T_m = " + name[len("msd_Tm_"):]
    return os.path.splitext(os.path.basename(path))[0]


def _draw_fig7a(spec, ax):
    curves = [p for p in spec.inputs if p.endswith(".csv")]
    for path in curves:
        table = _read_table(path, MSD_COLUMNS)
        mask = (table["time"] > 0.0) & (table["msd"] > 0.0)
        ax.plot(table["time"][mask], table["msd"][mask], lw=1.4,
                label=_tm_label(path))
    ax.set_xlabel("t")
    ax.set_ylabel("MSD")


def _draw_fig9(spec, ax):
    table = _read_table(spec.inputs[0], PROFILE_COLUMNS)
    times = np.unique(table["t"])
    if times.size == 0:
        raise EmptyInputError(f"{spec.inputs[0]}: no profile times")
    for t in times:
        sel = table["t"] == t
        line, = ax.plot(table["x"][sel], table["density"][sel], lw=1.4,
                        label=f"t = {t:g}")
        # fronts: the support ends at x = +-t, where the density
        # diverges integrably
        for front in (-t, t):
            ax.axvline(front, color=line.get_color(), ls="--", lw=0.8,
                       alpha=0.6)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_ylim(0.0, 4.0 / (math.pi * float(times.min())))


DRAWERS = {
    "fig1a": _draw_fig1a,
    "fig6": _draw_fig6,
    "fig7a": _draw_fig7a,
    "fig9": _draw_fig9,
}


# ------------------------------------------------------------ builders
# Builders map the reproduce-target output layout to FigureSpecs.


def spec_fig1a(input_dir):
    """From `reproduce --target fig1`: CCW survival with its fitted slope."""
    return FigureSpec(
        figure_id="fig1a",
        inputs=(
            os.path.join(input_dir, "survival_ccw", "survival.csv"),
            os.path.join(input_dir, "fit", "fit_loglog.json"),
        ),
        overlays=(
            overlay_from_fit(os.path.join(input_dir, "fit", "fit_loglog.json"),
                             "fit-loglog"),
        ),
        title="CCW interval survival",
    )


def spec_fig6(input_dir):
    """From `reproduce --target fig6`: survival with power-law and tail fits."""
    loglog = os.path.join(input_dir, "fit_loglog", "fit_loglog.json")
    semilog = os.path.join(input_dir, "fit_semilog", "fit_semilog.json")
    return FigureSpec(
        figure_id="fig6",
        inputs=(
            os.path.join(input_dir, "survival", "survival.csv"),
            loglog,
            semilog,
        ),
        overlays=(
            overlay_from_fit(loglog, "fit-loglog"),
            overlay_from_fit(semilog, "fit-semilog"),
        ),
        title="stopping-time survival",
    )


def spec_fig7a(input_dir):
    """From `reproduce --target fig7a`: six MSD curves plus slope guides."""
    curves = tuple(os.path.join(input_dir, f"msd_Tm_{tag}", "msd.csv")
                   for tag in MEMORY_TAGS)
    ballistic = os.path.join(input_dir, "fit_ballistic", "fit_loglog.json")
    diffusive = os.path.join(input_dir, "fit_diffusive", "fit_loglog.json")
    return FigureSpec(
        figure_id="fig7a",
        inputs=curves + (ballistic, diffusive),
        overlays=(
            overlay_from_fit(ballistic, "fit-loglog"),
            overlay_from_fit(diffusive, "fit-loglog"),
        ),
        title="dispersion by memory time",
    )


def spec_fig9(input_dir):
    """From `reproduce --target fig9`: the 1-D self-similar profile."""
    return FigureSpec(
        figure_id="fig9",
        inputs=(os.path.join(input_dir, "oracle", "profile.csv"),),
        x_scale="linear",
        y_scale="linear",
        title="self-similar profile",
    )


BUILDERS = {
    "fig1a": spec_fig1a,
    "fig6": spec_fig6,
    "fig7a": spec_fig7a,
    "fig9": spec_fig9,
}


# ------------------------------------------------------------- render


def draw(spec, ax):
    """Draw the spec onto an Axes: data, scales, overlays, legend."""
    DRAWERS[spec.figure_id](spec, ax)
    ax.set_xscale(spec.x_scale)
    ax.set_yscale(spec.y_scale)
    for overlay in spec.overlays:
        x, y = overlay.curve()
        ax.plot(x, y, color="black", ls=":", lw=1.8, label=overlay.label)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(fontsize=8, framealpha=0.8)


def render(spec, out_dir, formats=("png", "svg"), dpi=150):
    """Render one figure to out_dir; returns the written file paths.

    Emits one file per format (raster png, vector svg by default).
    Inputs are hashed before and after; any change raises
    ReadOnlyViolation.
    """
    before = {path: _sha256(path) for path in spec.inputs}
    fig, ax = plt.subplots(figsize=(6.4, 4.8), layout="constrained")
    try:
        draw(spec, ax)
        os.makedirs(out_dir, exist_ok=True)
        written = []
        for fmt in formats:
            path = os.path.join(out_dir, f"{spec.figure_id}.{fmt}")
            fig.savefig(path, dpi=dpi)
            written.append(path)
    finally:
        plt.close(fig)
    changed = [path for path in spec.inputs if _sha256(path) != before[path]]
    if changed:
        raise ReadOnlyViolation(
            f"rendering must not modify inputs; changed: {changed}")
    return written
