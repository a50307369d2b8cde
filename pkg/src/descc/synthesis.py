"""Supervisor synthesis under partial observation.

The supremal controllable and normal sublanguage of a prefix-closed
specification is computed in one shot.  With ``L = L(G)`` and ``K`` the
specification restricted to ``L``, the result is

    L minus P^-1 P( (L - K) / uc* ) Sigma*

that is, every string is removed once its observation could also belong to a
string that uncontrollable events can push out of ``K``.  This needs every
controllable event to be observable, which :func:`supremal_supervisor`
enforces.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .automata import (
    Automaton,
    AutomatonError,
    Verdict,
    _bfs_trace,
    accessible,
    compose,
    epsilon,
    project,
)

OUT = "#out"


@dataclass(frozen=True)
class Supervisor:
    """A supervisor realized as an automaton over the plant alphabet.

    ``empty`` means no admissible supervisor exists at all (even the empty
    string is unsafe); ``trivial`` means only the empty string survives.
    """

    realization: Automaton
    trivial: bool = False
    empty: bool = False

    @property
    def alphabet(self):
        return self.realization.alphabet


def _sublanguage_walk(k: Automaton, g: Automaton):
    """BFS over the product of ``k`` and ``g``; raises unless ``L(k) ⊆ L(g)``."""
    g_events = set(g.alphabet.events)
    start = (k.initial, g.initial)
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        qk, qg = cur = queue.popleft()
        yield cur, parent
        for e, rk in k.successors(qk):
            rg = g.step(qg, e) if e in g_events else None
            if rg is None:
                raise AutomatonError(
                    "spec not a sublanguage: " + " ".join(_bfs_trace(parent, cur) + (e,))
                )
            nxt = (rk, rg)
            if nxt not in parent:
                parent[nxt] = (cur, e)
                queue.append(nxt)


def check_controllable(k: Automaton, g: Automaton, uc: Iterable[str]) -> Verdict:
    """Decide ``prefix(K) uc ∩ L(G) ⊆ prefix(K)``; witness is ``(s, sigma)``."""
    uc = set(uc)
    if not uc <= set(g.alphabet.events):
        raise AutomatonError("uncontrollable events must belong to the plant alphabet")
    for (qk, qg), parent in _sublanguage_walk(k, g):
        for e, _ in g.successors(qg):
            if e in uc and k.step(qk, e) is None:
                return Verdict(False, (_bfs_trace(parent, (qk, qg)), e), "not controllable")
    return Verdict(True)


def check_observable(k: Automaton, g: Automaton, obs: Iterable[str]) -> Verdict:
    """Decide observability of ``L(k)`` w.r.t. ``L(g)``; witness is ``(s, t, sigma)``.

    Explores pairs ``(s, t)`` of strings of ``k`` with equal observations,
    where ``s`` enables ``sigma`` in ``k`` and ``t`` enables it in ``g`` but not in ``k``.
    """
    obs = set(obs)
    for _ in _sublanguage_walk(k, g):
        pass
    start = (k.initial, k.initial, g.initial)
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        q1, q2, qg = cur
        for e, _ in k.successors(q1):
            if g.step(qg, e) is not None and k.step(q2, e) is None:
                s, t = _pair_traces(parent, cur)
                return Verdict(False, (s, t, e), "not observable")
        moves = []
        for e, r1 in k.successors(q1):
            if e not in obs:
                moves.append(((r1, q2, qg), (e, None)))
            else:
                r2 = k.step(q2, e)
                if r2 is not None:
                    moves.append(((r1, r2, g.step(qg, e)), (e, e)))
        for e, r2 in k.successors(q2):
            if e not in obs:
                moves.append(((q1, r2, g.step(qg, e)), (None, e)))
        for nxt, lab in moves:
            if nxt not in parent:
                parent[nxt] = (cur, lab)
                queue.append(nxt)
    return Verdict(True)


def _pair_traces(parent, node):
    s, t = [], []
    while parent[node] is not None:
        node, (a, b) = parent[node]
        if a is not None:
            s.append(a)
        if b is not None:
            t.append(b)
    return tuple(reversed(s)), tuple(reversed(t))


def _renumber(a: Automaton, prefix: str) -> Automaton:
    names = {s: f"{prefix}{i}" for i, s in enumerate(a.states)}
    return Automaton.build(
        a.alphabet,
        ((names[s], e, names[d]) for s, e, d in a.transitions()),
        names[a.initial],
        states=names.values(),
        marked=(names[s] for s in a.marked),
    )


def supremal_language(g: Automaton, k: Automaton, uc: Iterable[str], obs: Iterable[str]) -> Automaton | None:
    """Automaton over ``g``'s alphabet for the supremal controllable and normal
    sublanguage of ``L(k) ∩ L(g)``; ``None`` when it is empty."""
    uc, obs = set(uc), set(obs)
    events = g.alphabet.events
    ctrl = set(events) - uc
    if not ctrl <= obs:
        raise AutomatonError("synthesis requires observable controllables")
    k_events = set(k.alphabet.events)
    if not k_events <= set(events):
        raise AutomatonError("specification alphabet must be contained in the plant alphabet")

    # plant tracked by the spec, with a sink for strings that leave it
    start = (g.initial, k.initial)
    index = {start: 0}
    order = [start]
    succ: list[list[tuple[str, int]]] = []
    i = 0
    while i < len(order):
        qg, qk = order[i]
        row = []
        for e, rg in g.successors(qg):
            if qk == OUT:
                rk = OUT
            elif e in k_events:
                rk = k.step(qk, e) or OUT
            else:
                rk = qk
            nxt = (rg, rk)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append((e, index[nxt]))
        succ.append(row)
        i += 1
    n = len(order)
    outside = [order[j][1] == OUT for j in range(n)]

    # bad: can leave the spec through uncontrollable moves only
    bad = list(outside)
    pred_uc: list[list[int]] = [[] for _ in range(n)]
    for j, row in enumerate(succ):
        for e, d in row:
            if e in uc:
                pred_uc[d].append(j)
    todo = [j for j in range(n) if bad[j]]
    while todo:
        d = todo.pop()
        for j in pred_uc[d]:
            if not bad[j]:
                bad[j] = True
                todo.append(j)

    # observer of the tracked plant, run in lockstep with it
    def close(seed):
        seen = set(seed)
        stack = list(seed)
        while stack:
            j = stack.pop()
            for e, d in succ[j]:
                if e not in obs and d not in seen:
                    seen.add(d)
                    stack.append(d)
        return frozenset(seen)

    obs_next: dict = {}

    def observe(cell: frozenset, e: str) -> frozenset:
        key = (cell, e)
        if key not in obs_next:
            obs_next[key] = close({d for j in cell for ev, d in succ[j] if ev == e})
        return obs_next[key]

    tainted: dict[frozenset, bool] = {}

    def is_tainted(cell):
        if cell not in tainted:
            tainted[cell] = any(bad[j] for j in cell)
        return tainted[cell]

    init = (0, close({0}))
    if is_tainted(init[1]):
        return None
    names = {init: "x0"}
    queue = deque([init])
    trans = []
    marked = []
    while queue:
        cur = queue.popleft()
        j, cell = cur
        qg, qk = order[j]
        if qg in g.marked and qk in k.marked:
            marked.append(names[cur])
        for e, d in succ[j]:
            ncell = observe(cell, e) if e in obs else cell
            if outside[d] or is_tainted(ncell):
                continue
            nxt = (d, ncell)
            if nxt not in names:
                names[nxt] = f"x{len(names)}"
                queue.append(nxt)
            trans.append((names[cur], e, names[nxt]))
    return Automaton.build(g.alphabet, trans, "x0", states=names.values(), marked=marked)


def realize(language: Automaton, obs: Iterable[str]) -> Automaton:
    """Observer over ``obs`` with self-loops on every unobservable event."""
    obs = set(obs)
    alphabet = language.alphabet
    observer = project(language, [e for e in alphabet.events if e in obs])
    uo = [e for e in alphabet.events if e not in obs]
    trans = list(observer.transitions())
    trans.extend((s, e, s) for s in observer.states for e in uo)
    return Automaton.build(alphabet, trans, observer.initial, states=observer.states, marked=observer.marked)


def supremal_supervisor(g: Automaton, k: Automaton, uc: Iterable[str], obs: Iterable[str]) -> Supervisor:
    """Maximally permissive supervisor enforcing ``L(k)`` on ``g``."""
    uc, obs = frozenset(uc), frozenset(obs)
    alphabet = g.alphabet.repartition(controllable=set(g.alphabet.events) - uc, observable=obs)
    plant = g if alphabet is g.alphabet else Automaton.build(
        alphabet, g.transitions(), g.initial, states=g.states, marked=g.marked
    )
    lang = supremal_language(plant, k, uc, obs)
    if lang is None:
        return Supervisor(epsilon(alphabet, "z0"), trivial=True, empty=True)
    real = _renumber(realize(lang, obs), "z")
    trivial = lang.num_transitions == 0
    return Supervisor(real, trivial=trivial)


def supervisor_from_automaton(s: Automaton, obs: Iterable[str] | None = None) -> Supervisor:
    """Wrap a hand-written realization, adding unobservable self-loops where missing."""
    obs = set(s.alphabet.observable if obs is None else obs)
    trans = list(s.transitions())
    for q in s.states:
        for e in s.alphabet.events:
            if e not in obs:
                d = s.step(q, e)
                if d is None:
                    trans.append((q, e, q))
                elif d != q:
                    raise AutomatonError(f"unobservable event {e!r} changes supervisor state at {q!r}")
    real = Automaton.build(s.alphabet, trans, s.initial, states=s.states, marked=s.marked)
    return Supervisor(real, trivial=real.num_transitions == 0)


def inf_c(g: Automaton, uc: Iterable[str]) -> Automaton:
    """Infimal prefix-closed controllable language containing the empty string: ``uc* ∩ L(g)``."""
    uc = set(uc)
    trans = [(s, e, d) for s, e, d in g.transitions() if e in uc]
    return accessible(Automaton.build(g.alphabet, trans, g.initial, states=g.states, marked=g.marked))


def closed_loop(s: Supervisor, g: Automaton) -> Automaton:
    if set(s.alphabet.events) != set(g.alphabet.events):
        raise AutomatonError("supervisor and plant alphabets differ")
    # the plant's partition is authoritative
    return compose(s.realization.with_alphabet(g.alphabet), g)
