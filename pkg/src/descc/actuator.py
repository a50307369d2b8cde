"""Actuator faults: post-fault plants, the tolerance test, and post-fault supervisors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .automata import (
    Alphabet,
    Automaton,
    AutomatonError,
    Verdict,
    suffix,
    satisfies,
)
from .synthesis import Supervisor, closed_loop, inf_c, supremal_supervisor

NOMINAL_MODE = "0"


@dataclass(frozen=True)
class FaultConfig:
    """Fault-prone actuators and sensors of one subsystem, with derived event names."""

    subsystem: int
    actuators: tuple[str, ...] = ()
    sensors: tuple[str, ...] = ()

    def fault_event(self, actuator: str) -> str:
        return f"h({self.subsystem},{actuator})"

    def switch_event(self, m1: str, m2: str) -> str:
        if m2 == NOMINAL_MODE:
            raise AutomatonError("a faulty subsystem cannot switch back to the nominal mode")
        if m1 == NOMINAL_MODE:
            return self.fault_event(m2)
        return f"h({self.subsystem},{m1},{m2})"

    def switch_events(self) -> tuple[str, ...]:
        # m1 == m2 would re-fail an already failed actuator, so it is left out
        modes = (NOMINAL_MODE,) + self.actuators
        return tuple(
            self.switch_event(m1, m2) for m1 in modes for m2 in self.actuators if m1 != m2
        )

    def sensor_fault(self, sensor: str) -> str:
        return f"f({self.subsystem},{sensor})"

    @staticmethod
    def faulty_reading(sensor: str) -> str:
        return f"{sensor}^f"

    def derived_events(self) -> tuple[str, ...]:
        return (
            self.switch_events()
            + tuple(self.sensor_fault(s) for s in self.sensors)
            + tuple(self.faulty_reading(s) for s in self.sensors)
        )

    def validate(self, alphabet: Alphabet) -> None:
        """Check the membership constraints and freshness of derived names."""
        bad = [a for a in self.actuators if a not in alphabet.controllable or a not in alphabet.observable]
        if bad:
            raise AutomatonError("actuators must be controllable and observable: " + ", ".join(bad))
        bad = [s for s in self.sensors if s not in alphabet.observable or s in alphabet.controllable]
        if bad:
            raise AutomatonError("sensor readings must be observable and uncontrollable: " + ", ".join(bad))
        clash = [e for e in self.derived_events() if e in alphabet]
        if clash:
            raise AutomatonError("derived fault event names collide with plant events: " + ", ".join(clash))


def _repartitioned(a: Automaton, alphabet: Alphabet) -> Automaton:
    return Automaton.build(alphabet, a.transitions(), a.initial, states=a.states, marked=a.marked)


def post_fault_plant_single(g: Automaton, t0: Sequence[str], actuator: str, cfg: FaultConfig) -> Automaton:
    """Suffix plant after ``t0`` with ``actuator`` now uncontrollable and its fault event added."""
    if actuator not in cfg.actuators:
        raise AutomatonError(f"{actuator!r} is not a declared actuator")
    base = suffix(g, t0)
    al = base.alphabet.repartition(controllable=base.alphabet.controllable - {actuator})
    al = al.extend([cfg.fault_event(actuator)], controllable=False, observable=True, owners=[cfg.subsystem])
    return _repartitioned(base, al)


def post_fault_plant_multi(g: Automaton, t0: Sequence[str], cfg: FaultConfig) -> Automaton:
    """Suffix plant after ``t0`` with every actuator uncontrollable and all mode switches added."""
    if not cfg.actuators:
        raise AutomatonError("multi-fault model needs at least one actuator")
    base = suffix(g, t0)
    al = base.alphabet.repartition(controllable=base.alphabet.controllable - set(cfg.actuators))
    al = al.extend(cfg.switch_events(), controllable=False, observable=True, owners=[cfg.subsystem])
    return _repartitioned(base, al)


def post_fault_spec(safe: Automaton, t0: Sequence[str]) -> Automaton:
    if not safe.generates(t0):
        raise AutomatonError("nominal run already unsafe: " + " ".join(t0))
    return suffix(safe, t0)


def check_actuator_tolerance(
    plant_f: Automaton,
    post_spec: Automaton,
    rename: Mapping[str, str] | None = None,
) -> Verdict:
    """Tolerant iff every purely uncontrollable continuation stays within the post-fault spec."""
    floor = inf_c(plant_f, plant_f.alphabet.uncontrollable)
    v = satisfies(floor, post_spec, rename=rename)
    return Verdict(True) if v else Verdict(False, v.witness, "uncontrollable escape from the post-fault specification")


def safety_bank(g: Automaton, safe: Automaton, cfg: FaultConfig) -> dict[str, Supervisor]:
    """Offline safety supervisors, one per lost actuator plus ``"ALL"`` for every actuator lost."""
    uc = g.alphabet.uncontrollable
    obs = g.alphabet.observable
    bank = {m: supremal_supervisor(g, safe, uc | {m}, obs) for m in cfg.actuators}
    bank["ALL"] = supremal_supervisor(g, safe, uc | set(cfg.actuators), obs)
    return bank


def post_fault_supervisor(
    bank_entry: Supervisor,
    g: Automaton,
    plant_f: Automaton,
    post_spec: Automaton,
    t0: Sequence[str],
) -> Supervisor:
    """Post-fault supervisor: the bank entry resumed after ``t0`` when possible, else fresh synthesis."""
    if not check_actuator_tolerance(plant_f, post_spec):
        raise AutomatonError("actuator fault tolerance not established")
    if not bank_entry.empty and closed_loop(bank_entry, g).generates(t0):
        resumed = suffix(bank_entry.realization, t0).with_alphabet(plant_f.alphabet)
        candidate = Supervisor(resumed, trivial=resumed.num_transitions == 0)
        if satisfies(closed_loop(candidate, plant_f), post_spec):
            return candidate
    al = plant_f.alphabet
    return supremal_supervisor(plant_f, post_spec, al.uncontrollable, al.observable)
