"""Figure rendering for multi-task bandit benchmark result tables."""

from .render import FigureSpec, RenderError, load_rows, render_figures

__version__ = "0.1.0"
