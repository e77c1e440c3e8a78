"""Figure rendering over the polygin CLI's file outputs.

These scripts never recompute statistics: every number on a figure comes
from a sample CSV or a report JSON produced by the main package.
"""

__version__ = "0.1.0"

from .render import FigureJob, SchemaError, render

__all__ = ["FigureJob", "SchemaError", "render", "__version__"]
