"""Adapter exporting classifier internals in semshield interchange formats."""

from .extract import ExtractionError, ExtractionSpec, extract

__version__ = "0.1.0"

__all__ = ["ExtractionError", "ExtractionSpec", "extract"]
