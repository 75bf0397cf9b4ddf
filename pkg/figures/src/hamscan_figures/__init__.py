"""Figure rendering for hamscan run outputs."""

from .render import FigureSpec, SchemaError, fit_exponential_rate, render

__all__ = ["FigureSpec", "SchemaError", "fit_exponential_rate", "render"]

__version__ = "0.1.0"
