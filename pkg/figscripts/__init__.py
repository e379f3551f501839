"""Plotting package for the simulation toolkit's CSV/JSON outputs.

Everything numerical shown in a figure (curves, fitted slopes,
histograms) is computed by the simulation package and read back from
its documented file schemas; this package only draws.
"""

from figscripts.figures import (
    BUILDERS,
    EmptyInputError,
    FigureError,
    FigureSpec,
    ReadOnlyViolation,
    SchemaError,
    SlopeOverlay,
    draw,
    overlay_from_fit,
    render,
)

__all__ = [
    "BUILDERS",
    "EmptyInputError",
    "FigureError",
    "FigureSpec",
    "ReadOnlyViolation",
    "SchemaError",
    "SlopeOverlay",
    "draw",
    "overlay_from_fit",
    "render",
]
