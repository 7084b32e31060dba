"""Chord lookup-length models under churn, steady-state solvers and a simulator."""

from ._core import (
    CostTable,
    Ring,
    SimulationError,
    SolverError,
    SteadyState,
    estimate_churn,
    figures,
    periodic_death_fraction,
    run_experiment,
    scaling_form,
    simulate,
    solve_coc,
    solve_nochurn,
    solve_with_churn,
)

__all__ = [
    "CostTable",
    "Ring",
    "SimulationError",
    "SolverError",
    "SteadyState",
    "estimate_churn",
    "figures",
    "periodic_death_fraction",
    "run_experiment",
    "scaling_form",
    "simulate",
    "solve_coc",
    "solve_nochurn",
    "solve_with_churn",
]
