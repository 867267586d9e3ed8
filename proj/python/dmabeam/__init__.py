# SPDX-License-Identifier: Apache-2.0
"""Hybrid beamforming engine for dynamic-metasurface ISAC arrays."""

from ._core import (
    AdmittanceSet,
    AlgorithmConfig,
    ArrayGeometry,
    Beamformer,
    ConditioningError,
    Direction,
    IterationRecord,
    OracleError,
    RunResult,
    Scenario,
    SurrogateMode,
    ValidationError,
    beampattern_gain,
    build_synthetic_admittances,
    load_config,
    load_scenario,
    objective_upper_bound,
    parse_scenario_text,
    radiated_power,
    render_result,
    render_trace,
    run_all_oracles,
    run_alternating,
    scenario_with_susceptance,
    sinr,
    steering_vector,
    total_beampattern,
    validate_admittances,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
