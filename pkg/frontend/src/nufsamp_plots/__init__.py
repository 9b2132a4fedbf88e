"""Figure rendering for nufsamp experiment outputs (pure view layer)."""

from .plots import plot_landscape, plot_objective, plot_psd, plot_trajectory
from .readers import SchemaError

__version__ = "0.1.0"
