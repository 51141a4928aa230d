"""Offline figure rendering for pvfaultsig CLI artifacts."""

from .errors import MissingField, PlotError, SchemaMismatch
from .render import PLOT_KINDS, PlotRequest, render

__version__ = "0.1.0"
