"""Deterministic finite automata over partitioned event alphabets.

Every value here is immutable after construction and every operation is a
pure function.  State ids are opaque strings; products are named ``(a,b)``
and subset-construction states ``{a,b}`` with members sorted, so outputs are
reproducible byte for byte.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

FORMAT = "descc/1"

Trace = tuple[str, ...]


class AutomatonError(ValueError):
    """Raised for malformed automata or violated operation preconditions."""


@dataclass(frozen=True)
class Verdict:
    """Outcome of a decision procedure, truthy when the property holds."""

    holds: bool
    witness: tuple | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds


# --------------------------------------------------------------------------
# Alphabet


@dataclass(frozen=True)
class Alphabet:
    events: tuple[str, ...]
    controllable: frozenset[str]
    observable: frozenset[str]
    owners: Mapping[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.events)) != len(self.events):
            raise AutomatonError("duplicate event names in alphabet")
        for e in self.events:
            if not isinstance(e, str) or not e:
                raise AutomatonError(f"invalid event name {e!r}")
        known = set(self.events)
        if not self.controllable <= known or not self.observable <= known:
            raise AutomatonError("controllable/observable sets must be subsets of the events")
        owners = {e: frozenset(self.owners.get(e, ())) for e in self.events}
        object.__setattr__(self, "owners", owners)
        object.__setattr__(self, "_pos", {e: i for i, e in enumerate(self.events)})

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def of(
        cls,
        events: Iterable[str],
        controllable: Iterable[str] | None = None,
        observable: Iterable[str] | None = None,
        owners: Mapping[str, Iterable[int]] | None = None,
    ) -> "Alphabet":
        """Convenience constructor: everything controllable and observable by default."""
        events = tuple(events)
        return cls(
            events,
            frozenset(events if controllable is None else controllable),
            frozenset(events if observable is None else observable),
            {e: frozenset(v) for e, v in (owners or {}).items()},
        )

    @property
    def uncontrollable(self) -> frozenset[str]:
        return frozenset(self.events) - self.controllable

    @property
    def unobservable(self) -> frozenset[str]:
        return frozenset(self.events) - self.observable

    def __contains__(self, event: object) -> bool:
        return event in self._pos

    def __iter__(self) -> Iterator[str]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def position(self, event: str) -> int:
        return self._pos[event]

    def ordered(self, events: Iterable[str]) -> tuple[str, ...]:
        """Sort a subset of this alphabet into alphabet order."""
        return tuple(sorted(events, key=self._pos.__getitem__))

    def merge(self, other: "Alphabet") -> "Alphabet":
        """Union of two alphabets; a shared event must agree on controllability."""
        clash = [
            e
            for e in self.events
            if e in other and (e in self.controllable) != (e in other.controllable)
        ]
        if clash:
            raise AutomatonError(
                "conflicting controllability for shared events: " + ", ".join(clash)
            )
        events = self.events + tuple(e for e in other.events if e not in self)
        owners = {e: self.owners.get(e, frozenset()) | other.owners.get(e, frozenset()) for e in events}
        return Alphabet(
            events,
            self.controllable | other.controllable,
            self.observable | other.observable,
            owners,
        )

    def override(self, other: "Alphabet") -> "Alphabet":
        """Union where ``other`` wins on the status of shared events."""
        events = self.events + tuple(e for e in other.events if e not in self)
        src = {e: (other if e in other else self) for e in events}
        ctrl = {e for e in events if e in src[e].controllable}
        obs = {e for e in events if e in src[e].observable}
        owners = {e: self.owners.get(e, frozenset()) | other.owners.get(e, frozenset()) for e in events}
        return Alphabet(events, frozenset(ctrl), frozenset(obs), owners)

    def restrict(self, keep: Iterable[str]) -> "Alphabet":
        keep = set(keep)
        events = tuple(e for e in self.events if e in keep)
        return Alphabet(
            events,
            self.controllable & keep,
            self.observable & keep,
            {e: self.owners[e] for e in events},
        )

    def extend(
        self,
        events: Iterable[str],
        *,
        controllable: bool,
        observable: bool,
        owners: Iterable[int] = (),
    ) -> "Alphabet":
        """Add fresh events with a common status; existing names are rejected."""
        events = tuple(events)
        clash = [e for e in events if e in self]
        if clash:
            raise AutomatonError("event name collision: " + ", ".join(clash))
        own = frozenset(owners)
        return Alphabet(
            self.events + events,
            self.controllable | (frozenset(events) if controllable else frozenset()),
            self.observable | (frozenset(events) if observable else frozenset()),
            {**self.owners, **{e: own for e in events}},
        )

    def repartition(
        self,
        *,
        controllable: Iterable[str] | None = None,
        observable: Iterable[str] | None = None,
    ) -> "Alphabet":
        return Alphabet(
            self.events,
            self.controllable if controllable is None else frozenset(controllable),
            self.observable if observable is None else frozenset(observable),
            self.owners,
        )


# --------------------------------------------------------------------------
# Automaton


@dataclass(frozen=True, eq=False)
class Automaton:
    alphabet: Alphabet
    states: tuple[str, ...]
    initial: str
    marked: frozenset[str]
    delta: Mapping[str, Mapping[str, str]]
    error_state: str | None = None

    @classmethod
    def build(
        cls,
        alphabet: Alphabet,
        transitions: Iterable[tuple[str, str, str]],
        initial: str,
        *,
        states: Iterable[str] | None = None,
        marked: Iterable[str] | None = None,
        error_state: str | None = None,
    ) -> "Automaton":
        """Validate and assemble an automaton.

        States default to those mentioned by ``initial`` and the transitions;
        marking defaults to every state.
        """
        order: dict[str, None] = {initial: None}
        if states is not None:
            order.update((s, None) for s in states)
        delta: dict[str, dict[str, str]] = {}
        for src, ev, dst in transitions:
            if ev not in alphabet:
                raise AutomatonError(f"transition event {ev!r} not in alphabet")
            if states is not None and (src not in order or dst not in order):
                raise AutomatonError(f"transition endpoint not declared: {src!r} -{ev}-> {dst!r}")
            order.setdefault(src, None)
            order.setdefault(dst, None)
            row = delta.setdefault(src, {})
            if row.get(ev, dst) != dst:
                raise AutomatonError(f"nondeterministic transition on {ev!r} from {src!r}")
            row[ev] = dst
        all_states = tuple(order)
        for s in all_states:
            if not isinstance(s, str) or not s:
                raise AutomatonError(f"invalid state id {s!r}")
        if marked is None:
            marked_set = frozenset(all_states)
        else:
            marked_set = frozenset(marked)
            if not marked_set <= set(all_states):
                raise AutomatonError("marked states must be declared states")
        pos = alphabet.position
        frozen = {s: dict(sorted(row.items(), key=lambda kv: pos(kv[0]))) for s, row in delta.items()}
        return cls(alphabet, all_states, initial, marked_set, frozen, error_state)

    # ---- queries

    def step(self, state: str, event: str) -> str | None:
        return self.delta.get(state, {}).get(event)

    def enabled(self, state: str) -> tuple[str, ...]:
        return tuple(self.delta.get(state, {}))

    def successors(self, state: str) -> Iterable[tuple[str, str]]:
        return self.delta.get(state, {}).items()

    def run(self, trace: Iterable[str], start: str | None = None) -> str | None:
        q: str | None = self.initial if start is None else start
        for e in trace:
            if q is None:
                return None
            q = self.step(q, e)
        return q

    def generates(self, trace: Iterable[str]) -> bool:
        return self.run(trace) is not None

    def transitions(self) -> Iterator[tuple[str, str, str]]:
        for s in self.states:
            for e, d in self.successors(s):
                yield s, e, d

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_transitions(self) -> int:
        return sum(len(r) for r in self.delta.values())

    def is_acyclic(self) -> bool:
        colour: dict[str, int] = {}
        for root in self.states:
            if root in colour:
                continue
            stack = [(root, iter(self.delta.get(root, {}).values()))]
            colour[root] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    colour[node] = 2
                    stack.pop()
                elif colour.get(nxt) == 1:
                    return False
                elif nxt not in colour:
                    colour[nxt] = 1
                    stack.append((nxt, iter(self.delta.get(nxt, {}).values())))
        return True

    def with_alphabet(self, alphabet: Alphabet) -> "Automaton":
        """Same structure over a different (super)alphabet."""
        missing = {e for _, e, _ in self.transitions()} - set(alphabet.events)
        if missing:
            raise AutomatonError("new alphabet lacks used events: " + ", ".join(sorted(missing)))
        return Automaton.build(
            alphabet, self.transitions(), self.initial, states=self.states, marked=self.marked
        )

    def __repr__(self) -> str:
        return f"Automaton({self.num_states} states, {self.num_transitions} transitions, {len(self.alphabet)} events)"


# --------------------------------------------------------------------------
# Helpers


def pair_name(a: str, b: str) -> str:
    return f"({a},{b})"


def subset_name(members: Iterable[str]) -> str:
    return "{" + ",".join(sorted(members)) + "}"


def split_pair(name: str) -> tuple[str, str]:
    """Inverse of :func:`pair_name`, respecting nested brackets."""
    if not (name.startswith("(") and name.endswith(")")):
        raise AutomatonError(f"not a product state name: {name!r}")
    depth = 0
    body = name[1:-1]
    for i, ch in enumerate(body):
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        elif ch == "," and depth == 0:
            return body[:i], body[i + 1 :]
    raise AutomatonError(f"not a product state name: {name!r}")


def fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    name = base
    while name in taken:
        name += "'"
    return name


def _bfs_trace(parent: Mapping, node) -> Trace:
    out: list[str] = []
    while parent[node] is not None:
        node, ev = parent[node]
        out.append(ev)
    return tuple(reversed(out))


def _determinize(
    alphabet: Alphabet,
    start: frozenset[str],
    step: Callable[[str, str], Iterable[str]],
    closure_events: Iterable[str],
    is_marked: Callable[[str], bool],
) -> Automaton:
    """Subset construction over ``alphabet`` with closure under ``closure_events``."""
    closure_events = tuple(closure_events)

    def close(seed: Iterable[str]) -> frozenset[str]:
        seen = set(seed)
        todo = list(seen)
        while todo:
            q = todo.pop()
            for e in closure_events:
                for r in step(q, e):
                    if r not in seen:
                        seen.add(r)
                        todo.append(r)
        return frozenset(seen)

    init = close(start)
    names = {init: subset_name(init)}
    queue = deque([init])
    trans = []
    while queue:
        cur = queue.popleft()
        for e in alphabet.events:
            nxt = {r for q in cur for r in step(q, e)}
            if not nxt:
                continue
            tgt = close(nxt)
            if tgt not in names:
                names[tgt] = subset_name(tgt)
                queue.append(tgt)
            trans.append((names[cur], e, names[tgt]))
    marked = [n for s, n in names.items() if any(is_marked(q) for q in s)]
    return Automaton.build(alphabet, trans, names[init], states=names.values(), marked=marked)


# --------------------------------------------------------------------------
# Operations


def accessible(a: Automaton) -> Automaton:
    """Drop states unreachable from the initial state."""
    seen = {a.initial: None}
    queue = deque([a.initial])
    while queue:
        q = queue.popleft()
        for _, d in a.successors(q):
            if d not in seen:
                seen[d] = None
                queue.append(d)
    if len(seen) == a.num_states:
        return a
    keep = [s for s in a.states if s in seen]
    trans = [(s, e, d) for s, e, d in a.transitions() if s in seen]
    err = a.error_state if a.error_state in seen else None
    return Automaton.build(
        a.alphabet, trans, a.initial, states=keep, marked=a.marked & seen.keys(), error_state=err
    )


def compose(a: Automaton, b: Automaton) -> Automaton:
    """Synchronous product: shared events synchronize, private events interleave."""
    alphabet = a.alphabet.merge(b.alphabet)
    shared = set(a.alphabet.events) & set(b.alphabet.events)
    only_a = set(a.alphabet.events) - shared
    start = (a.initial, b.initial)
    names = {start: pair_name(*start)}
    queue = deque([start])
    trans = []
    while queue:
        qa, qb = cur = queue.popleft()
        for e in alphabet.events:
            if e in shared:
                ra, rb = a.step(qa, e), b.step(qb, e)
                if ra is None or rb is None:
                    continue
            elif e in only_a:
                ra, rb = a.step(qa, e), qb
                if ra is None:
                    continue
            else:
                ra, rb = qa, b.step(qb, e)
                if rb is None:
                    continue
            nxt = (ra, rb)
            if nxt not in names:
                names[nxt] = pair_name(*nxt)
                queue.append(nxt)
            trans.append((names[cur], e, names[nxt]))
    marked = [n for (qa, qb), n in names.items() if qa in a.marked and qb in b.marked]
    return Automaton.build(alphabet, trans, names[start], states=names.values(), marked=marked)


def compose_all(automata: Sequence[Automaton]) -> Automaton:
    if not automata:
        raise AutomatonError("nothing to compose")
    out = automata[0]
    for nxt in automata[1:]:
        out = compose(out, nxt)
    return out


def project(a: Automaton, keep: Iterable[str]) -> Automaton:
    """Natural projection onto ``keep``, determinized by subset construction."""
    keep = set(keep)
    if not keep <= set(a.alphabet.events):
        raise AutomatonError("projection events must belong to the alphabet")
    erased = [e for e in a.alphabet.events if e not in keep]
    alphabet = a.alphabet.restrict(keep)

    def step(q: str, e: str):
        r = a.step(q, e)
        return () if r is None else (r,)

    return _determinize(alphabet, frozenset([a.initial]), step, erased, a.marked.__contains__)


def relabel(a: Automaton, mapping: Mapping[str, str]) -> Automaton:
    """Rename transition labels, determinizing if labels merge."""
    mapping = {k: v for k, v in mapping.items() if k in a.alphabet and k != v}
    if not mapping:
        return a
    src = a.alphabet
    events: dict[str, None] = {}
    for e in src.events:
        events.setdefault(mapping.get(e, e), None)
    ctrl, obs, owners = set(), set(), {}
    for e in events:
        # a target that already exists keeps its status; a new name inherits from its source
        ref = e if e in src else next(k for k, v in mapping.items() if v == e)
        if ref in src.controllable:
            ctrl.add(e)
        if ref in src.observable:
            obs.add(e)
        owners[e] = src.owners.get(ref, frozenset())
    alphabet = Alphabet(tuple(events), frozenset(ctrl), frozenset(obs), owners)

    nfa: dict[str, dict[str, set[str]]] = {}
    for s, e, d in a.transitions():
        nfa.setdefault(s, {}).setdefault(mapping.get(e, e), set()).add(d)
    if all(len(ds) == 1 for row in nfa.values() for ds in row.values()):
        trans = [(s, e, next(iter(ds))) for s, row in nfa.items() for e, ds in row.items()]
        return Automaton.build(alphabet, trans, a.initial, states=a.states, marked=a.marked)
    return _determinize(
        alphabet,
        frozenset([a.initial]),
        lambda q, e: nfa.get(q, {}).get(e, ()),
        (),
        a.marked.__contains__,
    )


def suffix(a: Automaton, t: Sequence[str]) -> Automaton:
    """Automaton generating the continuations of ``t`` in ``L(a)``."""
    q = a.run(t)
    if q is None:
        raise AutomatonError("trace not generated: " + " ".join(t))
    moved = Automaton.build(a.alphabet, a.transitions(), q, states=a.states, marked=a.marked)
    return accessible(moved)


def completion(a: Automaton) -> Automaton:
    """Add an unmarked error sink absorbing every undefined move."""
    qe = fresh_name("q_e", a.states)
    trans = list(a.transitions())
    for s in a.states:
        for e in a.alphabet.events:
            if a.step(s, e) is None:
                trans.append((s, e, qe))
    trans.extend((qe, e, qe) for e in a.alphabet.events)
    return Automaton.build(
        a.alphabet, trans, a.initial, states=a.states + (qe,), marked=a.marked, error_state=qe
    )


def complement(a: Automaton) -> Automaton:
    """Complete ``a`` and swap marking, so the result marks alphabet* minus L_m(a)."""
    c = completion(a)
    return Automaton.build(
        c.alphabet,
        c.transitions(),
        c.initial,
        states=c.states,
        marked=set(c.states) - c.marked,
        error_state=c.error_state,
    )


def _pair_search(
    m: Automaton,
    p: Automaton,
    rename: Mapping[str, str] | None,
    is_bad: Callable[[str, str | None], bool],
) -> Trace | None:
    """Breadth-first search of ``m`` tracked by ``p``; ``None`` stands for p's error sink."""
    rename = rename or {}
    p_events = set(p.alphabet.events)
    start = (m.initial, p.initial)
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        qm, qp = cur = queue.popleft()
        if is_bad(qm, qp):
            return _bfs_trace(parent, cur)
        for e, rm in m.successors(qm):
            pe = rename.get(e, e)
            if pe in p_events:
                rp = None if qp is None else p.step(qp, pe)
            else:
                rp = qp
            nxt = (rm, rp)
            if nxt not in parent:
                parent[nxt] = (cur, e)
                queue.append(nxt)
    return None


def satisfies(
    m: Automaton,
    p: Automaton,
    *,
    marked: bool = False,
    rename: Mapping[str, str] | None = None,
) -> Verdict:
    """Decide whether every trace of ``m``, projected onto p's events, lies in ``L(p)``.

    This is reachability of the error sink in ``m || completion(p)``, explored on
    the fly.  ``marked=True`` switches to marked-language inclusion.  ``rename``
    maps events of ``m`` onto events of ``p`` before synchronizing, which gives
    faulty readings the occurrence semantics of the reading they shadow.
    """
    rename = rename or {}
    image = {rename.get(e, e) for e in m.alphabet.events}
    if not set(p.alphabet.events) <= image:
        raise AutomatonError("property alphabet must be contained in the system alphabet")
    if marked:
        bad = lambda qm, qp: qm in m.marked and (qp is None or qp not in p.marked)
    else:
        bad = lambda qm, qp: qp is None
    w = _pair_search(m, p, rename, bad)
    return Verdict(True) if w is None else Verdict(False, w, "property violated")


def marked_inclusion(a: Automaton, b: Automaton) -> Verdict:
    """Decide whether the marked language of ``a`` projects into the generated language of ``b``."""
    if not set(b.alphabet.events) <= set(a.alphabet.events):
        raise AutomatonError("alphabet mismatch: right-hand alphabet must be contained in the left")
    w = _pair_search(a, b, None, lambda qa, qb: qb is None and qa in a.marked)
    return Verdict(True) if w is None else Verdict(False, w, "marked trace outside property")


def language_subset(a: Automaton, b: Automaton) -> Verdict:
    """``L(a) ⊆ L(b)`` for automata over the same event names."""
    if set(a.alphabet.events) != set(b.alphabet.events):
        extra = set(b.alphabet.events) - set(a.alphabet.events)
        if extra:
            # events only b knows never occur in a; compare over b's view of a
            a = a.with_alphabet(a.alphabet.merge(b.alphabet.restrict(extra)))
    return satisfies(a, b)


def equivalent(a: Automaton, b: Automaton) -> bool:
    """Generated-language equality."""
    return bool(language_subset(a, b)) and bool(language_subset(b, a))


def lift(plant: Automaton, spec: Automaton, rename: Mapping[str, str] | None = None) -> Automaton:
    """Sublanguage of ``L(plant)`` whose traces, renamed then projected, stay in ``L(spec)``.

    Events of the plant that the spec does not know interleave freely.
    """
    rename = rename or {}
    spec_events = set(spec.alphabet.events)
    start = (plant.initial, spec.initial)
    names = {start: pair_name(*start)}
    queue = deque([start])
    trans = []
    while queue:
        qg, qs = cur = queue.popleft()
        for e, rg in plant.successors(qg):
            se = rename.get(e, e)
            rs = spec.step(qs, se) if se in spec_events else qs
            if rs is None:
                continue
            nxt = (rg, rs)
            if nxt not in names:
                names[nxt] = pair_name(*nxt)
                queue.append(nxt)
            trans.append((names[cur], e, names[nxt]))
    marked = [n for (qg, qs), n in names.items() if qg in plant.marked and qs in spec.marked]
    return Automaton.build(plant.alphabet, trans, names[start], states=names.values(), marked=marked)


def universal(alphabet: Alphabet, name: str = "u") -> Automaton:
    """One marked state with a self-loop on every event."""
    return Automaton.build(alphabet, [(name, e, name) for e in alphabet.events], name)


def epsilon(alphabet: Alphabet, name: str = "e") -> Automaton:
    """Generates only the empty trace."""
    return Automaton.build(alphabet, [], name)


def shortest_trace_to(a: Automaton, targets: Iterable[str]) -> Trace | None:
    targets = set(targets)
    parent: dict = {a.initial: None}
    queue = deque([a.initial])
    while queue:
        q = queue.popleft()
        if q in targets:
            return _bfs_trace(parent, q)
        for e, d in a.successors(q):
            if d not in parent:
                parent[d] = (q, e)
                queue.append(d)
    return None


def unfold(a: Automaton, limit: int = 200_000) -> Automaton:
    """Prefix-tree form of an acyclic automaton: one state per generated trace."""
    if not a.is_acyclic():
        raise AutomatonError("only acyclic automata unfold into a finite tree")
    trans = []
    marked = []
    names = ["n0"]
    queue = deque([(a.initial, "n0")])
    if a.initial in a.marked:
        marked.append("n0")
    while queue:
        q, node = queue.popleft()
        for e, d in a.successors(q):
            child = f"n{len(names)}"
            names.append(child)
            if len(names) > limit:
                raise AutomatonError("tree unfolding exceeds size limit")
            trans.append((node, e, child))
            if d in a.marked:
                marked.append(child)
            queue.append((d, child))
    return Automaton.build(a.alphabet, trans, "n0", states=names, marked=marked)


def trace_tree(alphabet: Alphabet, traces: Iterable[Sequence[str]]) -> Automaton:
    """Prefix tree generating the prefix closure of ``traces``."""
    trans = []
    index = {(): "n0"}
    for t in traces:
        for k in range(1, len(t) + 1):
            pre = tuple(t[:k])
            if pre not in index:
                index[pre] = f"n{len(index)}"
                trans.append((index[pre[:-1]], pre[-1], index[pre]))
    return Automaton.build(alphabet, trans, "n0", states=index.values())


def chain(alphabet: Alphabet, trace: Sequence[str], prefix: str = "c") -> Automaton:
    """Linear automaton generating the prefixes of one trace."""
    trans = [(f"{prefix}{k}", e, f"{prefix}{k + 1}") for k, e in enumerate(trace)]
    return Automaton.build(alphabet, trans, f"{prefix}0")


# --------------------------------------------------------------------------
# Serialization

_AUTOMATON_KEYS = {"alphabet", "states", "initial", "marked", "transitions"}
_EVENT_KEYS = {"name", "controllable", "observable", "owners"}


def to_doc(a: Automaton) -> dict:
    al = a.alphabet
    return {
        "alphabet": [
            {
                "name": e,
                "controllable": e in al.controllable,
                "observable": e in al.observable,
                "owners": sorted(al.owners.get(e, ())),
            }
            for e in al.events
        ],
        "states": list(a.states),
        "initial": a.initial,
        "marked": [s for s in a.states if s in a.marked],
        "transitions": [[s, e, d] for s, e, d in a.transitions()],
    }


def from_doc(doc: Mapping) -> Automaton:
    if not isinstance(doc, Mapping):
        raise AutomatonError("automaton document must be a JSON object")
    unknown = set(doc) - _AUTOMATON_KEYS - {"format"}
    if unknown:
        raise AutomatonError("unknown automaton keys: " + ", ".join(sorted(unknown)))
    missing = _AUTOMATON_KEYS - set(doc)
    if missing:
        raise AutomatonError("missing automaton keys: " + ", ".join(sorted(missing)))
    if "format" in doc and doc["format"] != FORMAT:
        raise AutomatonError(f"unsupported format {doc['format']!r}")
    events, ctrl, obs, owners = [], set(), set(), {}
    for entry in doc["alphabet"]:
        if not isinstance(entry, Mapping):
            raise AutomatonError("alphabet entries must be objects")
        bad = set(entry) - _EVENT_KEYS
        if bad:
            raise AutomatonError("unknown event keys: " + ", ".join(sorted(bad)))
        if "name" not in entry:
            raise AutomatonError("alphabet entry without a name")
        name = entry["name"]
        events.append(name)
        if entry.get("controllable", True):
            ctrl.add(name)
        if entry.get("observable", True):
            obs.add(name)
        owners[name] = frozenset(int(i) for i in entry.get("owners", ()))
    alphabet = Alphabet(tuple(events), frozenset(ctrl), frozenset(obs), owners)
    for t in doc["transitions"]:
        if not (isinstance(t, Sequence) and len(t) == 3):
            raise AutomatonError(f"transition must be a [src, event, dst] triple: {t!r}")
    return Automaton.build(
        alphabet,
        (tuple(t) for t in doc["transitions"]),
        doc["initial"],
        states=doc["states"],
        marked=doc["marked"],
    )


def dumps(a: Automaton) -> str:
    return json.dumps({"format": FORMAT, **to_doc(a)}, indent=2)


def load(path) -> Automaton:
    with open(path, encoding="utf-8") as fh:
        return from_doc(json.load(fh))


def to_dot(a: Automaton, name: str = "G") -> str:
    """Graphviz rendering; marked states are double circles unless every state is marked."""

    def q(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    all_marked = a.marked == frozenset(a.states)
    lines = [f"digraph {q(name)} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s in a.states:
        shape = "doublecircle" if (s in a.marked and not all_marked) else "circle"
        lines.append(f"  {q(s)} [shape={shape}];")
    lines.append(f"  __start -> {q(a.initial)};")
    edges: dict[tuple[str, str], list[str]] = {}
    for s, e, d in a.transitions():
        edges.setdefault((s, d), []).append(e)
    for (s, d), evs in edges.items():
        lines.append(f"  {q(s)} -> {q(d)} [label={q(', '.join(evs))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
