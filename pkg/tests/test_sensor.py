import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from descc.actuator import FaultConfig
from descc.automata import Alphabet, Automaton, AutomatonError, satisfies, trace_tree
from descc.sensor import (
    build_faulty_plant,
    build_faulty_supervisor,
    build_safe_diagnoser,
    certain_entry_plant,
    check_sensor_tolerance,
    check_sf_safe,
    closed_loop_fault_model,
    consistent_trace,
    detect_event,
    first_entered_certain,
    occurrence_map,
    occurrence_trace,
    synth_sensor_post_supervisor,
    unsafe_states,
)
from descc.synthesis import closed_loop, supervisor_from_automaton

import oracles
from fixtures import sensor_example
from strategies import automata


def example_models():
    g, s, safe, cfg = sensor_example()
    gk = build_faulty_plant(g, cfg, ["b"])
    sk = build_faulty_supervisor(s, cfg, ["b"])
    return g, s, safe, cfg, gk, sk, closed_loop_fault_model(sk, gk)


def test_faulty_model_sizes():
    *_, gk, sk, gks = example_models()
    assert (gk.num_states, sk.num_states, gks.num_states) == (10, 8, 10)


def test_faulty_models_structure():
    g, s, safe, cfg, gk, sk, gks = example_models()
    assert "f(1,b)" in gk.alphabet.unobservable and "b^f" in gk.alphabet.unobservable
    assert gk.step("2'", "b") == "4'" and gk.step("2'", "b^f") == "4'"
    # the faulty supervisor ignores the missed reading
    assert sk.step("2'", "b^f") == "2'"
    assert gks.generates(["a", "f(1,b)", "b^f", "c"])


def test_unsafe_trace_under_occurrence_semantics():
    *_, safe, cfg, gk, sk, gks = example_models()
    w = ("a", "f(1,b)", "b^f", "c")
    occ = occurrence_trace(w, safe.alphabet.events)
    assert occ == ("a", "b", "c") and not safe.generates(occ)
    v = satisfies(gks, safe, rename=occurrence_map(gks.alphabet.events))
    assert not v and v.witness == w


def test_unsafe_states_and_diagnoser_golden():
    *_, safe, cfg, gk, sk, gks = example_models()
    assert unsafe_states(gks, safe) == {"(3',5')"}
    d = build_safe_diagnoser(gks, safe)
    after_ac = d.state_after(["a", "c"])
    assert after_ac.members == {("(3,3)", ("N",), False), ("(3',3')", ("Y",), False), ("(3',5')", ("Y",), True)}
    assert after_ac.name == "{(3,3):N,(3',3'):Y!,(3',5'):Y!U}"
    assert after_ac.is_uncertain()
    assert first_entered_certain(d) == ()


def test_check_sf_safe_condition_one():
    *_, safe, cfg, gk, sk, gks = example_models()
    v = check_sf_safe(gks, safe)
    assert not v
    cond, name, obs = v.witness
    assert cond == "i" and obs == ("a", "c")


def test_layered_model_tracks_fault_sets():
    al = Alphabet.of("xyz", controllable="z")
    g = Automaton.build(al, [("0", "x", "1"), ("1", "y", "2"), ("2", "z", "0")], "0")
    cfg = FaultConfig(1, (), ("x", "y"))
    flat = build_faulty_plant(g, cfg, ["x", "y"])
    layered = build_faulty_plant(g, cfg, ["x", "y"], layered=True)
    assert layered.num_states > flat.num_states
    assert layered.generates(["f(1,x)", "x^f", "f(1,y)", "y^f"])
    assert not layered.generates(["f(1,x)", "y^f"])
    with pytest.raises(AutomatonError, match="not declared"):
        build_faulty_plant(g, cfg, ["z"])


def detection_fixture(extra_unsafe=False):
    """Reading ``b`` lost; observing ``u`` without ``b`` reveals the fault."""
    events = "abucx" if extra_unsafe else "abuc"
    al = Alphabet.of(events, controllable="ac")
    trans = [("0", "a", "1"), ("1", "b", "2"), ("2", "u", "3"), ("3", "c", "4")]
    if extra_unsafe:
        trans.append(("3", "x", "5"))
    g = Automaton.build(al, trans, "0")
    safe = trace_tree(al, ["abuc"])
    s = supervisor_from_automaton(g)
    cfg = FaultConfig(1, (), ("b",))
    gf = build_faulty_plant(g, cfg, ["b"])
    gks = closed_loop_fault_model(build_faulty_supervisor(s, cfg, ["b"]), gf)
    return g, safe, cfg, gf, gks


def test_first_entered_certain_and_entry_plant():
    g, safe, cfg, gf, gks = detection_fixture()
    d = build_safe_diagnoser(gks, safe)
    fc = first_entered_certain(d)
    assert fc == ("{(1',3'):Y!}",)
    assert check_sf_safe(gks, safe)
    e = certain_entry_plant(gf, gks, d, fc[0], safe, cfg)
    dj = detect_event(1, fc[0], 1)
    assert e.detect_events == (dj,)
    assert e.traces == (("a", "f(1,b)", "b^f", "u"),)
    assert oracles.language(e.plant, 3) == {(), (dj,), (dj, "c")}
    assert check_sensor_tolerance(e)
    sup = synth_sensor_post_supervisor(e)
    assert closed_loop(sup, e.plant).generates([dj, "c"])


def test_sensor_intolerance_after_detection():
    g, safe, cfg, gf, gks = detection_fixture(extra_unsafe=True)
    d = build_safe_diagnoser(gks, safe)
    v = check_sf_safe(gks, safe)
    assert not v and v.witness[0] == "iii"
    fc = first_entered_certain(d)
    e = certain_entry_plant(gf, gks, d, fc[0], safe, cfg)
    v = check_sensor_tolerance(e)
    assert not v and v.witness[-1] == "x"


def test_entry_plant_requires_certain_state():
    *_, safe, cfg, gk, sk, gks = example_models()
    d = build_safe_diagnoser(gks, safe)
    with pytest.raises(AutomatonError, match="certain"):
        certain_entry_plant(gk, gks, d, d.automaton.initial, safe, cfg)


def test_consistent_trace_follows_history():
    g, safe, cfg, gf, gks = detection_fixture()
    d = build_safe_diagnoser(gks, safe)
    qy = first_entered_certain(d)[0]
    member = d.states[qy].sorted_members()[0]
    assert consistent_trace(gks, d, qy, member, history=("a", "u")) == ("a", "f(1,b)", "b^f", "u")


@settings(max_examples=120, deadline=None)
@given(st.data())
def test_diagnoser_matches_consistent_sets(data):
    g = data.draw(automata(max_states=4, acyclic=True, max_events=3))
    al = g.alphabet.repartition(observable=g.alphabet.events)
    g = g.with_alphabet(al)
    sensors = sorted(al.uncontrollable)
    assume(sensors)
    which = data.draw(st.lists(st.sampled_from(sensors), min_size=1, max_size=2, unique=True))
    cfg = FaultConfig(1, (), tuple(sensors))
    safe = data.draw(automata(alphabet=al, max_states=3))
    s = supervisor_from_automaton(g)
    gks = closed_loop_fault_model(build_faulty_supervisor(s, cfg, which), build_faulty_plant(g, cfg, which))
    d = build_safe_diagnoser(gks, safe)
    obs = set(gks.alphabet.observable)
    table = oracles.diagnosis_table(gks, d.faults, obs, safe, occurrence_map(gks.alphabet.events), 12)
    for o, members in table.items():
        ds = d.state_after(o)
        assert ds is not None and set(ds.members) == members
    assert oracles.language(d.automaton, 6) == set(table)
