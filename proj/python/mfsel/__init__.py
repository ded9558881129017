"""Selection experiments for potential mean field games."""

from ._core import (
    Error,
    Field,
    Model,
    enumerate_stationary,
    kuiper,
    logcosh_positive_root,
    minimize_static_U,
    riccati_field,
    run_scenario,
    simulate,
    solve_field,
    solve_field_eps,
    static_U,
    value,
    wasserstein1,
)

__all__ = [
    "Error",
    "Field",
    "Model",
    "enumerate_stationary",
    "kuiper",
    "logcosh_positive_root",
    "minimize_static_U",
    "riccati_field",
    "run_scenario",
    "simulate",
    "solve_field",
    "solve_field_eps",
    "static_U",
    "value",
    "wasserstein1",
]
