"""Branching random walks in a random time environment: simulation and checks.

The subpackages follow the pipeline: ``env`` (laws, environments, moment
profiles), ``popsim`` (particle simulation), ``martingales`` (W, N1, N2),
``special``, ``edgeworth`` and ``limits`` (the analytic side), ``oracle``
(independent exact references) and ``harness`` (experiments and reports).
"""

from .env import (
    ConfigError,
    EnvironmentSpec,
    EnvState,
    check_conditions,
    cumulative_profile,
    expected_moments,
    load_spec,
    parse_spec,
    sample_environment,
)
from .edgeworth import HypothesisError
from .limits import IntervalSet
from .popsim import CapPolicy, simulate, simulate_batch

__version__ = "0.1.0"

__all__ = [
    "CapPolicy",
    "ConfigError",
    "EnvState",
    "EnvironmentSpec",
    "HypothesisError",
    "IntervalSet",
    "check_conditions",
    "cumulative_profile",
    "expected_moments",
    "load_spec",
    "parse_spec",
    "sample_environment",
    "simulate",
    "simulate_batch",
]
