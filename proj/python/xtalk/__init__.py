"""Crosstalk-adaptive instruction scheduling."""

from ._core import (
    ArgumentError,
    Circuit,
    Device,
    Error,
    FitError,
    InvariantError,
    ParseError,
    Schedule,
    SolverError,
    VerificationError,
    analytic_success,
    estimate_cost,
    fit_rb,
    gen_random_circuit,
    gen_swap_path,
    monte_carlo_success,
    run_cli,
    schedule,
    verify,
)

__all__ = [
    "ArgumentError",
    "Circuit",
    "Device",
    "Error",
    "FitError",
    "InvariantError",
    "ParseError",
    "Schedule",
    "SolverError",
    "VerificationError",
    "analytic_success",
    "estimate_cost",
    "fit_rb",
    "gen_random_circuit",
    "gen_swap_path",
    "monte_carlo_success",
    "run_cli",
    "schedule",
    "verify",
]
