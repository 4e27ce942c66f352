"""Render photonsource analysis outputs into publication-style figures.

This package consumes only the frozen CSV/JSON file schemas (schema
comment line in CSVs, ``schema`` key in JSONs) and knows nothing about
the simulation internals.  Figures are pure functions of the input
files: fixed style, no timestamps, reproducible bytes per environment.
"""

__version__ = "0.1.0"

from .figures import plot_arrival, plot_correlation, plot_pemit
from .reader import SchemaMismatch, read_csv, read_json

__all__ = ["plot_arrival", "plot_correlation", "plot_pemit",
           "read_csv", "read_json", "SchemaMismatch"]
