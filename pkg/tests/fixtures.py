"""Hand-built fixtures shared by the test modules."""

from descc.actuator import FaultConfig
from descc.automata import Alphabet, Automaton, trace_tree


def loop_plant():
    """Four-state plant with a two-event cycle and a terminal self-loop."""
    al = Alphabet.of(["e1", "e2", "e3", "e4"])
    return Automaton.build(
        al,
        [("q0", "e1", "q1"), ("q1", "e2", "q0"), ("q1", "e3", "q2"), ("q2", "e4", "q3"), ("q3", "e2", "q3")],
        "q0",
    )


def branching_plant():
    """``a`` then an uncontrollable ``b`` or a controllable ``c``; ``c`` may follow ``b``."""
    al = Alphabet.of("abc", controllable="ac")
    g = Automaton.build(al, [("1", "a", "2"), ("2", "b", "4"), ("4", "c", "5"), ("2", "c", "3")], "1")
    safe = trace_tree(al, ["ab", "ac"])
    return g, safe


def sensor_example():
    """Branching plant, its nominal supervisor, safety, and a faulty ``b`` reading."""
    g, safe = branching_plant()
    s = Automaton.build(g.alphabet, [("1", "a", "2"), ("2", "b", "4"), ("2", "c", "3")], "1")
    return g, s, safe, FaultConfig(1, (), ("b",))


def tiny(events, trans, initial="0", controllable=None, observable=None):
    al = Alphabet.of(events, controllable=controllable, observable=observable)
    return Automaton.build(al, trans, initial)
