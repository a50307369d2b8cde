"""Fault-tolerant supervisory control for distributed discrete event systems."""

from .automata import (
    FORMAT,
    Alphabet,
    Automaton,
    AutomatonError,
    Verdict,
    accessible,
    complement,
    completion,
    compose,
    compose_all,
    equivalent,
    from_doc,
    lift,
    load,
    marked_inclusion,
    project,
    satisfies,
    suffix,
    to_doc,
    to_dot,
)
from .actuator import FaultConfig, check_actuator_tolerance, post_fault_supervisor, safety_bank
from .coordination import Participant, check_symn, syn_co, weakest_assumption
from .scenario import Scenario, bundled, load_scenario, run_pipeline
from .sensor import build_safe_diagnoser, check_sf_safe, check_sensor_tolerance
from .staging import FaultEvent, run_staged
from .synthesis import Supervisor, closed_loop, inf_c, supremal_supervisor

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "Automaton",
    "AutomatonError",
    "FORMAT",
    "FaultConfig",
    "FaultEvent",
    "Participant",
    "Scenario",
    "Supervisor",
    "Verdict",
    "accessible",
    "build_safe_diagnoser",
    "bundled",
    "check_actuator_tolerance",
    "check_sensor_tolerance",
    "check_sf_safe",
    "check_symn",
    "closed_loop",
    "complement",
    "completion",
    "compose",
    "compose_all",
    "equivalent",
    "from_doc",
    "inf_c",
    "lift",
    "load",
    "load_scenario",
    "marked_inclusion",
    "post_fault_supervisor",
    "project",
    "run_pipeline",
    "run_staged",
    "safety_bank",
    "satisfies",
    "suffix",
    "supremal_supervisor",
    "syn_co",
    "to_doc",
    "to_dot",
    "weakest_assumption",
]
