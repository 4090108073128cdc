"""Batch figure rendering for the bdris simulator's CSV outputs."""

from .recipes import FIGURES, FigureRecipe, RenderResult, SchemaError, render

__all__ = ["FIGURES", "FigureRecipe", "RenderResult", "SchemaError", "render"]
__version__ = "0.1.0"
