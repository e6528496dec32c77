"""Diagnostic figures for mixphase run CSVs."""

__version__ = "0.1.0"

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, heatmap_cells, render

__all__ = ["FIGURE_KINDS", "FigureSpec", "SchemaError", "heatmap_cells", "render", "__version__"]
