"""Scenario files: loading, validation, and the end-to-end pipeline."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

from .actuator import FaultConfig
from .automata import (
    FORMAT,
    Automaton,
    AutomatonError,
    Verdict,
    compose_all,
    from_doc,
    lift,
    satisfies,
    to_doc,
)
from .coordination import (
    Participant,
    check_coordination_existence,
    check_modules,
    check_post_fault_coordination,
    inf_module,
    initial_module,
    syn_co,
    universe_of,
    _shared_events,
)
from .staging import ACTUATOR, FaultEvent, StagedLoop, occurrence_projection, run_staged
from .synthesis import Supervisor, closed_loop, supervisor_from_automaton, supremal_supervisor

NOMINAL_OK, COORDINATED, TOLERABLE_ONLY, INTOLERANT = "nominal-ok", "coordinated", "tolerable-only", "intolerant"

_SCENARIO_KEYS = {"format", "subsystems", "global_spec", "fault_script"}
_SUBSYSTEM_KEYS = {"id", "plant", "safety", "local_spec", "nominal_supervisor", "fault_config"}
_FAULT_KEYS = {"kind", "subsystem", "target", "after"}


@dataclass
class Subsystem:
    ident: int
    plant: Automaton
    safety: Automaton
    local_spec: Automaton
    supervisor: Supervisor
    fault_config: FaultConfig
    synthesized: bool = False


@dataclass
class Scenario:
    subsystems: list[Subsystem]
    global_spec: Automaton
    fault_script: list[FaultEvent]
    warnings: list[str] = field(default_factory=list)

    def subsystem(self, ident: int) -> Subsystem:
        for s in self.subsystems:
            if s.ident == ident:
                return s
        raise AutomatonError(f"no subsystem with id {ident}")


def _check_keys(obj, allowed, what, required=None):
    if not isinstance(obj, Mapping):
        raise AutomatonError(f"{what} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise AutomatonError(f"unknown {what} keys: " + ", ".join(sorted(unknown)))
    missing = set(allowed if required is None else required) - set(obj)
    if missing:
        raise AutomatonError(f"missing {what} keys: " + ", ".join(sorted(missing)))


def _on_plant(a: Automaton, plant: Automaton, what: str) -> Automaton:
    extra = set(a.alphabet.events) - set(plant.alphabet.events)
    if extra:
        raise AutomatonError(f"{what} uses events outside the plant: " + ", ".join(sorted(extra)))
    return a


def parse_scenario(doc: Mapping) -> Scenario:
    _check_keys(doc, _SCENARIO_KEYS, "scenario", required={"subsystems", "global_spec"})
    if "format" in doc and doc["format"] != FORMAT:
        raise AutomatonError(f"unsupported format {doc['format']!r}")
    subs = []
    for entry in doc["subsystems"]:
        _check_keys(entry, _SUBSYSTEM_KEYS, "subsystem", required={"id", "plant", "safety", "local_spec"})
        ident = int(entry["id"])
        plant = from_doc(entry["plant"])
        safety = _on_plant(from_doc(entry["safety"]), plant, "safety automaton")
        local = _on_plant(from_doc(entry["local_spec"]), plant, "local specification")
        fc = entry.get("fault_config", {})
        _check_keys(fc, {"actuators", "sensors"}, "fault_config", required=set())
        cfg = FaultConfig(ident, tuple(fc.get("actuators", ())), tuple(fc.get("sensors", ())))
        if "nominal_supervisor" in entry:
            s = from_doc(entry["nominal_supervisor"])
            if set(s.alphabet.events) != set(plant.alphabet.events):
                raise AutomatonError(f"supervisor of subsystem {ident} must use the plant alphabet")
            sup, synth = supervisor_from_automaton(s.with_alphabet(plant.alphabet)), False
        else:
            target = lift(lift(plant, local), safety)
            al = plant.alphabet
            sup, synth = supremal_supervisor(plant, target, al.uncontrollable, al.observable), True
        subs.append(Subsystem(ident, plant, safety, local, sup, cfg, synth))
    if not subs:
        raise AutomatonError("scenario has no subsystems")
    ids = [s.ident for s in subs]
    if len(set(ids)) != len(ids):
        raise AutomatonError("duplicate subsystem ids")
    script = []
    for f in doc.get("fault_script", []):
        _check_keys(f, _FAULT_KEYS, "fault script entry", required={"kind", "subsystem", "target"})
        script.append(FaultEvent(f["kind"], int(f["subsystem"]), f["target"], tuple(f.get("after", ()))))
    sc = Scenario(subs, from_doc(doc["global_spec"]), script)
    validate(sc)
    return sc


def validate(sc: Scenario) -> None:
    """Check the structural assumptions; raises with the offending event names."""
    subs = sc.subsystems
    for a in subs:
        for b in subs:
            if a is b:
                continue
            clash = sorted(set(a.plant.alphabet.uncontrollable) & set(b.plant.alphabet.controllable))
            if clash:
                raise AutomatonError(
                    f"events uncontrollable in subsystem {a.ident} but controllable in subsystem {b.ident}: "
                    + ", ".join(clash)
                )
    for s in subs:
        s.fault_config.validate(s.plant.alphabet)
        v = satisfies(closed_loop(s.supervisor, s.plant), s.safety)
        if not v:
            raise AutomatonError(
                f"nominal closed loop of subsystem {s.ident} leaves its safety language: " + " ".join(v.witness)
            )
    events = set().union(*(s.plant.alphabet.events for s in subs))
    extra = set(sc.global_spec.alphabet.events) - events
    if extra:
        raise AutomatonError("global specification uses unknown events: " + ", ".join(sorted(extra)))
    owners: dict[str, set] = {}
    for s in subs:
        for e in s.plant.alphabet.events:
            owners.setdefault(e, set()).add(s.ident)
    sc.warnings.clear()
    for ft in sc.fault_script:
        s = sc.subsystem(ft.subsystem)
        pool = s.fault_config.actuators if ft.kind == ACTUATOR else s.fault_config.sensors
        if ft.target not in pool:
            raise AutomatonError(f"fault target {ft.target} is not a declared {ft.kind} of subsystem {s.ident}")
        unknown = [e for e in ft.after if e not in s.plant.alphabet]
        if unknown:
            raise AutomatonError("fault injection trace uses unknown events: " + ", ".join(unknown))
        if len(owners[ft.target]) > 1:
            sc.warnings.append(f"fault target {ft.target} is shared with other subsystems")


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AutomatonError(f"invalid JSON: {exc}") from None
    return parse_scenario(doc)


def bundled(name: str = "multirobot.json") -> Scenario:
    """Load one of the scenario files shipped with the package."""
    text = resources.files("descc").joinpath("data", name).read_text(encoding="utf-8")
    return parse_scenario(json.loads(text))


def scenario_to_doc(sc: Scenario) -> dict:
    return {
        "format": FORMAT,
        "subsystems": [
            {
                "id": s.ident,
                "plant": to_doc(s.plant),
                "safety": to_doc(s.safety),
                "local_spec": to_doc(s.local_spec),
                "nominal_supervisor": to_doc(s.supervisor.realization),
                "fault_config": {"actuators": list(s.fault_config.actuators), "sensors": list(s.fault_config.sensors)},
            }
            for s in sc.subsystems
        ],
        "global_spec": to_doc(sc.global_spec),
        "fault_script": [
            {"kind": f.kind, "subsystem": f.subsystem, "target": f.target, "after": list(f.after)}
            for f in sc.fault_script
        ],
    }


# --------------------------------------------------------------------------
# Pipeline


def _verdict_doc(v: Verdict) -> dict:
    out = {"holds": v.holds}
    if not v.holds:
        out["witness"] = _jsonable(v.witness)
        out["reason"] = v.reason
    return out


def _jsonable(x):
    if isinstance(x, (tuple, list)):
        return [_jsonable(y) for y in x]
    return x


def stage_loops(sc: Scenario) -> dict[int, StagedLoop]:
    """Run the fault script for every subsystem it touches."""
    out = {}
    for s in sc.subsystems:
        faults = [f for f in sc.fault_script if f.subsystem == s.ident]
        if faults:
            out[s.ident] = run_staged(s.plant, s.supervisor, s.safety, s.fault_config, faults)
    return out


def participants(sc: Scenario, loops: dict[int, StagedLoop] | None = None) -> list[Participant]:
    """Coordination participants: staged closed loops for faulty subsystems, plants otherwise."""
    loops = stage_loops(sc) if loops is None else loops
    parts = []
    for s in sc.subsystems:
        if s.ident in loops:
            loop = loops[s.ident]
            sup = loop.stages[-1].supervisors.get("") or next(iter(loop.stages[-1].supervisors.values()), s.supervisor)
            parts.append(Participant(s.ident, loop.automaton, sup, True, s.plant.alphabet.events))
        else:
            parts.append(Participant(s.ident, s.plant, s.supervisor))
    return parts


def run_pipeline(sc: Scenario) -> dict:
    """Nominal check, fault-script interpretation, then coordination; returns the report."""
    nominal_parts = [Participant(s.ident, s.plant, s.supervisor) for s in sc.subsystems]
    universe = universe_of(nominal_parts)
    p = sc.global_spec
    nom_modules = [initial_module(pt, universe) for pt in nominal_parts]
    nom_symn = check_modules(nom_modules, p, universe)
    nom_direct = satisfies(compose_all(nom_modules), p)
    report: dict = {
        "format": FORMAT,
        "nominal": {"symn": _verdict_doc(nom_symn), "direct": _verdict_doc(nom_direct)},
        "warnings": list(sc.warnings),
        "iterations": 0,
        "counterexamples": [],
        "per_subsystem": {},
        "faults": {},
    }

    loops = stage_loops(sc)
    for ident, loop in sorted(loops.items()):
        report["faults"][str(ident)] = {
            "stages": [
                {"kind": st.kind, "target": st.fault.target if st.fault else None,
                 "tolerance": _verdict_doc(st.tolerance), "note": st.note}
                for st in loop.stages
            ],
            "tolerant": loop.tolerant,
            "staged_states": loop.automaton.num_states,
        }
    if any(not loop.tolerant for loop in loops.values()):
        report["verdict"] = INTOLERANT
        report["per_subsystem"] = _nominal_docs(sc)
        return report

    if not loops and nom_direct:
        report["verdict"] = NOMINAL_OK
        report["per_subsystem"] = {
            str(s.ident): {"supervisor": to_doc(s.supervisor.realization), "module": to_doc(m)}
            for s, m in zip(sc.subsystems, nom_modules)
        }
        return report

    parts = participants(sc, loops)
    universe = universe_of(parts)
    shared = _shared_events(parts)
    modules = [initial_module(pt, universe) for pt in parts]
    nominal_mods = [m for pt, m in zip(parts, modules) if not pt.faulty]
    faulty_mods = [m for pt, m in zip(parts, modules) if pt.faulty]
    post = check_post_fault_coordination(nominal_mods, faulty_mods, p, universe)
    exist = check_coordination_existence([inf_module(pt, universe, shared) for pt in parts], p, universe)
    report["coordination"] = {"post_fault": _verdict_doc(post), "existence": _verdict_doc(exist)}
    if not exist:
        report["verdict"] = INTOLERANT
        report["per_subsystem"] = _nominal_docs(sc)
        return report

    res = syn_co(parts, p)
    report["coordination"]["state_counts"] = res.state_counts
    if res.note:
        report["coordination"]["note"] = res.note
    body = res.report()
    report["iterations"] = body["iterations"]
    report["counterexamples"] = body["counterexamples"]
    report["per_subsystem"] = body["per_subsystem"]
    report["verdict"] = res.verdict

    # independent re-checks of the two objectives
    safety = {}
    for pt, s in zip(parts, sc.subsystems):
        if pt.faulty:
            m = occurrence_projection(pt.plant, s.plant.alphabet.events)
        else:
            m = closed_loop(s.supervisor, s.plant)
        safety[str(s.ident)] = _verdict_doc(satisfies(m, s.safety))
    report["local_safety"] = safety
    if res.verdict == COORDINATED:
        report["global"] = _verdict_doc(satisfies(compose_all([m for m in res.modules.values()]), p))
    return report


def _nominal_docs(sc: Scenario) -> dict:
    return {str(s.ident): {"supervisor": to_doc(s.supervisor.realization), "module": None} for s in sc.subsystems}


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
