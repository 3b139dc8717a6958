"""Static figures from curvflow study reports."""

from .render import FigureSpec, SchemaError, fit_slope, render, render_all

__version__ = "0.1.0"
