import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from descc.automata import (
    Alphabet,
    Automaton,
    AutomatonError,
    complement,
    completion,
    compose,
    compose_all,
    dumps,
    equivalent,
    from_doc,
    language_subset,
    lift,
    marked_inclusion,
    project,
    relabel,
    satisfies,
    split_pair,
    suffix,
    to_doc,
    to_dot,
    trace_tree,
    unfold,
    universal,
)

import oracles
from fixtures import loop_plant, tiny
from strategies import automata

N = 6


def test_alphabet_merge_rejects_conflicting_status():
    a = Alphabet.of("ab", controllable="a")
    b = Alphabet.of("ac", controllable="c")
    with pytest.raises(AutomatonError, match="conflicting controllability.*a"):
        a.merge(b)


def test_alphabet_override_and_extend():
    a = Alphabet.of("ab", controllable="a")
    b = Alphabet.of("a", controllable="")
    assert "a" not in a.override(b).controllable
    with pytest.raises(AutomatonError, match="collision"):
        a.extend(["a"], controllable=False, observable=True)


def test_build_rejects_nondeterminism_and_unknown_events():
    al = Alphabet.of("a")
    with pytest.raises(AutomatonError, match="nondeterministic"):
        Automaton.build(al, [("0", "a", "1"), ("0", "a", "2")], "0")
    with pytest.raises(AutomatonError, match="not in alphabet"):
        Automaton.build(al, [("0", "z", "1")], "0")


def test_suffix_of_loop_plant_after_cycle():
    sf = suffix(loop_plant(), ["e1", "e2", "e1", "e3"])
    assert sf.num_states == 2
    assert sorted(sf.transitions()) == [("q2", "e4", "q3"), ("q3", "e2", "q3")]


def test_suffix_rejects_unknown_trace():
    with pytest.raises(AutomatonError, match="trace not generated"):
        suffix(loop_plant(), ["e2"])


def test_completion_and_complement():
    a = tiny("ab", [("0", "a", "1")])
    c = completion(a)
    assert c.error_state in c.states
    assert all(c.step(s, e) is not None for s in c.states for e in "ab")
    co = complement(a)
    assert co.marked == {c.error_state}


def test_satisfies_returns_shortest_witness():
    m = tiny("abc", [("0", "a", "1"), ("1", "b", "2"), ("0", "c", "3"), ("3", "b", "4")])
    p = tiny("b", [])
    v = satisfies(m, p)
    assert not v and v.witness == ("a", "b")


def test_satisfies_requires_property_events():
    with pytest.raises(AutomatonError):
        satisfies(tiny("a", []), tiny("b", []))


def test_marked_inclusion():
    a = tiny("a", [("0", "a", "1")])
    a = Automaton.build(a.alphabet, a.transitions(), "0", marked=["1"])
    assert not marked_inclusion(a, tiny("a", []))
    assert marked_inclusion(a, tiny("a", [("0", "a", "0")]))


def test_relabel_merges_events():
    a = tiny(["x", "x^f"], [("0", "x", "1"), ("1", "x^f", "2")])
    r = relabel(a, {"x^f": "x"})
    assert r.generates(["x", "x"])


def test_lift_keeps_unknown_events_free():
    g = tiny("ab", [("0", "a", "1"), ("1", "b", "2"), ("0", "b", "3")])
    k = tiny("a", [])
    lifted = lift(g, k)
    assert oracles.language(lifted, 3) == {(), ("b",)}


def test_unfold_counts_traces():
    g = tiny("ab", [("0", "a", "1"), ("0", "b", "1"), ("1", "a", "2")])
    t = unfold(g)
    assert t.num_states == len(oracles.language(g, 5))
    with pytest.raises(AutomatonError):
        unfold(loop_plant())


def test_split_pair_nested():
    assert split_pair("((a,b),{c,d})") == ("(a,b)", "{c,d}")


def test_serialization_roundtrip_and_rejections():
    g = loop_plant()
    doc = json.loads(dumps(g))
    assert doc["format"] == "descc/1"
    back = from_doc(doc)
    assert equivalent(g, back) and back.states == g.states
    with pytest.raises(AutomatonError, match="unknown automaton keys"):
        from_doc({**to_doc(g), "extra": 1})
    with pytest.raises(AutomatonError, match="unsupported format"):
        from_doc({**to_doc(g), "format": "other/9"})


def test_to_dot_mentions_every_state():
    dot = to_dot(loop_plant())
    assert dot.startswith("digraph") and all(f'"{s}"' in dot for s in loop_plant().states)


# ---- oracle comparisons on random automata


@settings(max_examples=150, deadline=None)
@given(automata(), st.data())
def test_compose_matches_oracle(a, data):
    b = data.draw(automata(alphabet=a.alphabet.restrict(data.draw(st.sets(st.sampled_from(a.alphabet.events))))))
    c = compose(a, b)
    assert oracles.language(c, 5) == oracles.compose_language([a, b], 5)


@settings(max_examples=150, deadline=None)
@given(automata(), st.data())
def test_project_matches_oracle(a, data):
    keep = data.draw(st.sets(st.sampled_from(a.alphabet.events)))
    p = project(a, keep)
    assert oracles.language(p, N) == oracles.projected_language(a, keep, N)


@settings(max_examples=150, deadline=None)
@given(automata(), st.data())
def test_suffix_matches_oracle(a, data):
    traces = sorted(oracles.language(a, 4), key=lambda t: (len(t), t))
    t = data.draw(st.sampled_from(traces))
    assert oracles.language(suffix(a, t), 4) == oracles.suffix_language(a, t, 4)


@settings(max_examples=200, deadline=None)
@given(automata(), automata(max_events=4))
def test_satisfies_matches_oracle(m, p):
    if not set(p.alphabet.events) <= set(m.alphabet.events):
        return
    keep = set(p.alphabet.events)
    bounded = all(oracles.accepts(p, oracles.proj(t, keep)) for t in oracles.language(m, 7))
    v = satisfies(m, p)
    if v:
        assert bounded
    else:
        # a refutation must be a genuine trace of m whose projection p rejects
        assert oracles.accepts(m, v.witness)
        assert not oracles.accepts(p, oracles.proj(v.witness, keep))
        assert all(oracles.accepts(p, oracles.proj(v.witness[:k], keep)) for k in range(len(v.witness)))


@settings(max_examples=100, deadline=None)
@given(automata())
def test_complement_marks_exactly_the_missing_traces(a):
    co = complement(a)
    every = oracles.compose_language([universal(a.alphabet)], 4)
    gen = oracles.language(a, 4)
    marked = oracles.marked_language(a, 4)
    co_marked = oracles.marked_language(co, 4)
    assert co_marked == {t for t in every if t not in marked}
    assert gen <= oracles.language(co, 4)


@settings(max_examples=100, deadline=None)
@given(automata(acyclic=True))
def test_unfold_preserves_language(a):
    t = unfold(a)
    assert equivalent(a, t)
    assert t.num_states == len(oracles.language(a, N))


@settings(max_examples=100, deadline=None)
@given(automata(), automata())
def test_language_subset_matches_oracle(a, b):
    if set(a.alphabet.events) != set(b.alphabet.events):
        return
    b = b.with_alphabet(a.alphabet)
    v = language_subset(a, b)
    if v:
        assert oracles.language(a, 7) <= oracles.language(b, 7)
    else:
        assert oracles.accepts(a, v.witness) and not oracles.accepts(b, v.witness)


def test_trace_tree_is_prefix_closure():
    al = Alphabet.of("ab")
    t = trace_tree(al, ["ab", "ba", "a"])
    assert oracles.language(t, 3) == {(), ("a",), ("b",), ("a", "b"), ("b", "a")}


def test_compose_all_empty_rejected():
    with pytest.raises(AutomatonError):
        compose_all([])
