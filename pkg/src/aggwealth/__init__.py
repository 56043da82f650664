"""Closed monetary economy of agents grouped in interacting aggregates."""
from .model import ConfigError, MacroInvariants, SizeInitSpec, SystemState, init_state, validate_invariants
from .kernels import MigrationKernelSpec, MoneyKernelSpec, aggregate_exchange, draw_delta_n, monetary_exchange
from .engine import ObservableSeries, RunConfig, equilibrium_snapshot, run

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "MacroInvariants", "SizeInitSpec", "SystemState", "init_state", "validate_invariants",
    "MoneyKernelSpec", "MigrationKernelSpec", "monetary_exchange", "aggregate_exchange", "draw_delta_n",
    "RunConfig", "ObservableSeries", "run", "equilibrium_snapshot",
]
