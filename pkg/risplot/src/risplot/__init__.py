"""Figure rendering for the channel-estimation benchmark CSVs."""

__version__ = "0.1.0"

from .figures import FIGURES, METHOD_ORDER, PlotError, PlotSpec, render

__all__ = [
    "FIGURES",
    "METHOD_ORDER",
    "PlotError",
    "PlotSpec",
    "render",
    "__version__",
]
