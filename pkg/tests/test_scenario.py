import copy
import json

import pytest

from descc.automata import AutomatonError, compose_all, from_doc, satisfies
from descc.scenario import (
    bundled,
    dumps_report,
    load_scenario,
    parse_scenario,
    run_pipeline,
    scenario_to_doc,
    stage_loops,
)
from descc.staging import occurrence_projection


@pytest.fixture(scope="module")
def base_doc():
    return scenario_to_doc(bundled("multirobot.json"))


def _event(doc, name):
    return next(e for e in doc["alphabet"] if e["name"] == name)


def test_bundled_scenario_shape():
    sc = bundled("multirobot.json")
    assert [s.ident for s in sc.subsystems] == [1, 2, 3]
    events = set().union(*(s.plant.alphabet.events for s in sc.subsystems))
    assert len(events) == 24
    assert sc.fault_script == []


def test_conflicting_controllability_rejected(base_doc):
    doc = copy.deepcopy(base_doc)
    for key in ("plant", "safety", "local_spec", "nominal_supervisor"):
        _event(doc["subsystems"][1][key], "D1open")["controllable"] = True
    with pytest.raises(AutomatonError, match="uncontrollable in subsystem 1 but controllable in subsystem 2: D1open"):
        parse_scenario(doc)


def test_actuator_membership_rejected(base_doc):
    doc = copy.deepcopy(base_doc)
    doc["subsystems"][0]["fault_config"]["actuators"].append("G1in1")
    with pytest.raises(AutomatonError, match="actuators must be controllable and observable: G1in1"):
        parse_scenario(doc)


def test_undeclared_fault_target_rejected(base_doc):
    doc = copy.deepcopy(base_doc)
    doc["fault_script"] = [{"kind": "actuator", "subsystem": 3, "target": "G3in1", "after": ["h3"]}]
    with pytest.raises(AutomatonError, match="not a declared actuator"):
        parse_scenario(doc)


def test_schema_violations(base_doc):
    doc = copy.deepcopy(base_doc)
    doc["extra"] = 1
    with pytest.raises(AutomatonError, match="unknown scenario keys"):
        parse_scenario(doc)
    doc = copy.deepcopy(base_doc)
    doc["format"] = "descc/0"
    with pytest.raises(AutomatonError, match="unsupported format"):
        parse_scenario(doc)
    doc = copy.deepcopy(base_doc)
    del doc["subsystems"][0]["plant"]
    with pytest.raises(AutomatonError, match="missing subsystem keys: plant"):
        parse_scenario(doc)


def test_unsafe_nominal_supervisor_rejected(base_doc):
    doc = copy.deepcopy(base_doc)
    sub = doc["subsystems"][0]
    sub["safety"] = {**sub["local_spec"], "transitions": sub["local_spec"]["transitions"][:3]}
    with pytest.raises(AutomatonError, match="leaves its safety language"):
        parse_scenario(doc)


def test_missing_supervisor_is_synthesized(base_doc):
    doc = copy.deepcopy(base_doc)
    del doc["subsystems"][1]["nominal_supervisor"]
    sc = parse_scenario(doc)
    s2 = sc.subsystem(2)
    assert s2.synthesized
    assert run_pipeline(sc)["verdict"] == "nominal-ok"


def test_shared_fault_target_warns(base_doc):
    doc = copy.deepcopy(base_doc)
    doc["fault_script"] = [{"kind": "actuator", "subsystem": 3, "target": "OP", "after": ["h3"]}]
    sc = parse_scenario(doc)
    assert any("OP" in w for w in sc.warnings)


def test_load_scenario_reports_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(AutomatonError, match="invalid JSON"):
        load_scenario(p)


def test_nominal_pipeline():
    r = run_pipeline(bundled("multirobot.json"))
    assert r["verdict"] == "nominal-ok"
    assert r["nominal"]["symn"]["holds"] and r["nominal"]["direct"]["holds"]
    assert r["format"] == "descc/1"


def test_fault_pipeline_is_deterministic():
    a = dumps_report(run_pipeline(bundled("multirobot_g3_actuator.json")))
    b = dumps_report(run_pipeline(bundled("multirobot_g3_actuator.json")))
    assert a == b
    assert json.loads(a)["verdict"] == "coordinated"


def test_intolerant_fault(base_doc):
    # losing the door command leaves an uncontrolled path past the safety limit
    doc = copy.deepcopy(base_doc)
    sub = doc["subsystems"][2]
    chain = sub["nominal_supervisor"]
    sub["safety"] = chain
    sub["local_spec"] = chain
    doc["fault_script"] = [{"kind": "actuator", "subsystem": 3, "target": "G3toD1", "after": ["h3"]}]
    r = run_pipeline(parse_scenario(doc))
    assert r["verdict"] == "intolerant"
    assert r["faults"]["3"]["tolerant"] is False


def _all_scripts():
    sc = bundled("multirobot.json")
    g3 = sc.subsystem(3)
    for a in g3.fault_config.actuators:
        for k in range(0, 6):
            yield a, ["h3", "G3to3", "G3in3", "G3toD1", "G3onD1", "OP"][:k]


@pytest.mark.parametrize("actuator,after", list(_all_scripts()))
def test_verdict_implies_objectives(base_doc, actuator, after):
    doc = copy.deepcopy(base_doc)
    doc["fault_script"] = [{"kind": "actuator", "subsystem": 3, "target": actuator, "after": after}]
    try:
        sc = parse_scenario(doc)
        r = run_pipeline(sc)
    except AutomatonError as exc:
        # only scripts whose injection point the closed loop never reaches are refused
        assert "not generated" in str(exc)
        return
    if r["verdict"] in ("coordinated", "tolerable-only"):
        for s, loop in stage_loops(sc).items():
            assert satisfies(occurrence_projection(loop.automaton, sc.subsystem(s).plant.alphabet.events),
                             sc.subsystem(s).safety)
        assert all(v["holds"] for v in r["local_safety"].values())
    if r["verdict"] == "coordinated":
        mods = [from_doc(v["module"]) for v in r["per_subsystem"].values()]
        assert satisfies(compose_all(mods), sc.global_spec)
