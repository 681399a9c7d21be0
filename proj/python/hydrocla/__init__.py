"""Loop-flow simulation, state estimation and confidence-limit analysis."""

from ._core import (
    Error,
    MeasurementSet,
    Network,
    NotConverged,
    ParseError,
    ValidationError,
    em_confidence_limits,
    esm_confidence_limits,
    estimate,
    fixture_names,
    load_fixture,
    parse_measurements,
    parse_network,
    run_cli,
    simulate,
    state_labels,
)

__all__ = [
    "Error",
    "MeasurementSet",
    "Network",
    "NotConverged",
    "ParseError",
    "ValidationError",
    "em_confidence_limits",
    "esm_confidence_limits",
    "estimate",
    "fixture_names",
    "load_fixture",
    "parse_measurements",
    "parse_network",
    "run_cli",
    "simulate",
    "state_labels",
]
