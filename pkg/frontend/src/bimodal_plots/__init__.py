"""Plotting frontend for bimodal engine CSV bundles."""
from .csvio import Feature, RenderError, Table, read_table
from .job import PlotJob
from .render import REGISTRY, render

__version__ = "0.1.0"

__all__ = [
    "Feature",
    "PlotJob",
    "REGISTRY",
    "RenderError",
    "Table",
    "read_table",
    "render",
    "__version__",
]
