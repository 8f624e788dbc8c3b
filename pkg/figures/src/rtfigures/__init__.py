"""Figure rendering for the reverse-translation simulator's outputs.

Consumes only the documented CSV contracts (sweep aggregates, per-figure
exports, per-request traces); numbers are re-plotted, never recomputed.
"""

from .render import FigureDataError, FigureSpec, render

__all__ = ["FigureSpec", "FigureDataError", "render"]
