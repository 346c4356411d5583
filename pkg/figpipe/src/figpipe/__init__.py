"""Batch figure renderer for twinshift experiment CSV output."""

from .render import FIGURE_KINDS, PlotSpec, RenderResult, SchemaError, render

__version__ = "0.1.0"
