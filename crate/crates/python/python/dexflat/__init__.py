"""Input classification, negotiation graphs and switching control."""

from ._native import (
    BUILTIN_SCENARIOS,
    BUILTIN_SYSTEMS,
    Graph,
    Scenario,
    System,
    Trace,
    classify,
    negotiability_graph,
    run_criterion,
    simulate,
)

__all__ = [
    "BUILTIN_SCENARIOS",
    "BUILTIN_SYSTEMS",
    "Graph",
    "Scenario",
    "System",
    "Trace",
    "classify",
    "negotiability_graph",
    "run_criterion",
    "simulate",
]
