"""Figure regeneration for the fosls2d experiment CSV files."""

__version__ = "0.1.0"

from .figures import FigureSpec, plot_loglog, plot_pollution, plot_surface, plot_trace

__all__ = ["FigureSpec", "plot_loglog", "plot_pollution", "plot_surface", "plot_trace"]
