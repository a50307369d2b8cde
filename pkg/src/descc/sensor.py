"""Sensor faults: faulty-layer models, the safe diagnoser, SF-safe controllability,
and post-detection supervision.

A lost sensor reading ``s`` is modelled by a faulty layer of primed states in
which the physical event can fire either as ``s`` (read) or as ``s^f``
(missed, unobservable).  For safety judgments ``s^f`` counts as an
occurrence of ``s``.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .actuator import FaultConfig
from .automata import (
    Automaton,
    AutomatonError,
    Verdict,
    completion,
    compose,
    fresh_name,
    lift,
    satisfies,
    split_pair,
    subset_name,
    _bfs_trace,
)
from .synthesis import Supervisor, inf_c, supremal_supervisor

Y, N = "Y", "N"


def occurrence_map(alphabet_events: Iterable[str]) -> dict[str, str]:
    """Map every faulty reading ``s^f`` present in the events to ``s``."""
    events = set(alphabet_events)
    return {e: e[:-2] for e in events if e.endswith("^f") and e[:-2] in events}


def occurrence_trace(trace: Iterable[str], keep: Iterable[str]) -> tuple[str, ...]:
    """Relabel faulty readings to their physical event and erase events outside ``keep``."""
    keep = set(keep)
    out = []
    for e in trace:
        if e.endswith("^f") and e[:-2] in keep:
            e = e[:-2]
        if e in keep:
            out.append(e)
    return tuple(out)


def _twin(q: str, faulted: Sequence[str] | None = None) -> str:
    if faulted is None:
        return q + "'"
    return q + "'[" + ",".join(faulted) + "]"


def _fault_alphabet(alphabet, cfg: FaultConfig, which: Sequence[str]):
    readings = [cfg.faulty_reading(s) for s in which]
    faults = [cfg.sensor_fault(s) for s in which]
    al = alphabet.extend(readings, controllable=False, observable=False, owners=[cfg.subsystem])
    return al.extend(faults, controllable=False, observable=False, owners=[cfg.subsystem])


def _check_which(cfg: FaultConfig, which: Sequence[str]) -> tuple[str, ...]:
    which = tuple(which)
    bad = [s for s in which if s not in cfg.sensors]
    if bad:
        raise AutomatonError("not declared sensors: " + ", ".join(bad))
    return tuple(s for s in cfg.sensors if s in which)


def _faulty_model(a: Automaton, cfg: FaultConfig, which, layered: bool, layer_step) -> Automaton:
    """Shared skeleton: nominal copy, fault edges into the faulty copy, and ``layer_step`` inside it.

    ``layer_step(q, faulted)`` yields ``(event, q2)`` moves inside the faulty copy.
    """
    which = _check_which(cfg, which)
    if not which:
        return a
    al = _fault_alphabet(a.alphabet, cfg, which)
    taken = set(a.states)
    trans = list(a.transitions())
    names: dict[tuple[str, tuple], str] = {}

    def name(q, S):
        if (q, S) not in names:
            n = _twin(q, S if layered else None)
            if n in taken:
                raise AutomatonError(f"faulty twin name {n!r} collides with an existing state")
            taken.add(n)
            names[(q, S)] = n
        return names[(q, S)]

    todo = deque()
    for q in a.states:
        for s in which:
            S = (s,) if layered else ()
            if (q, S) not in names:
                todo.append((q, S))
            trans.append((q, cfg.sensor_fault(s), name(q, S)))
    seen = set(todo)
    while todo:
        q, S = todo.popleft()
        active = S if layered else which
        for e, d in layer_step(q, active):
            trans.append((name(q, S), e, name(d, S)))
            if (d, S) not in seen:
                seen.add((d, S))
                todo.append((d, S))
        if layered:
            for s in which:
                if s not in S:
                    S2 = tuple(x for x in which if x in S or x == s)
                    trans.append((name(q, S), cfg.sensor_fault(s), name(q, S2)))
                    if (q, S2) not in seen:
                        seen.add((q, S2))
                        todo.append((q, S2))
    marked = set(a.marked) | {n for (q, _), n in names.items() if q in a.marked}
    return Automaton.build(al, trans, a.initial, states=list(a.states) + list(names.values()), marked=marked)


def build_faulty_plant(g: Automaton, cfg: FaultConfig, which: Sequence[str], layered: bool = False) -> Automaton:
    """Plant with a faulty copy where each affected reading fires both as ``s`` and ``s^f``.

    By default every fault enters one shared faulty layer in which all affected
    readings are dual-labelled.  ``layered=True`` instead tracks which sensors
    have failed so far.
    """

    def step(q, active):
        for e, d in g.successors(q):
            yield e, d
            if e in active:
                yield cfg.faulty_reading(e), d

    return _faulty_model(g, cfg, which, layered, step)


def build_faulty_supervisor(
    s: Supervisor | Automaton,
    cfg: FaultConfig,
    which: Sequence[str],
    layered: bool = False,
) -> Automaton:
    """Supervisor counterpart: the faulty copy follows the nominal decisions, never
    disables an uncontrollable event, and ignores missed readings."""
    x = s.realization if isinstance(s, Supervisor) else s
    uc = x.alphabet.uncontrollable

    def step(q, active):
        row = dict(x.successors(q))
        for e in x.alphabet.events:
            if e in row:
                yield e, row[e]
            elif e in uc:
                yield e, q
        for e in active:
            yield cfg.faulty_reading(e), q

    return _faulty_model(x, cfg, which, layered, step)


def closed_loop_fault_model(s_f: Automaton, g_f: Automaton) -> Automaton:
    return compose(s_f, g_f)


def unsafe_states(gks: Automaton, safe: Automaton, rename: Mapping[str, str] | None = None) -> frozenset[str]:
    """States reached by some string whose occurrence projection leaves ``L(safe)``."""
    rename = occurrence_map(gks.alphabet.events) if rename is None else rename
    c = completion(safe)
    safe_events = set(safe.alphabet.events)
    start = (gks.initial, c.initial)
    seen = {start}
    queue = deque([start])
    bad = set()
    while queue:
        q, p = queue.popleft()
        if p == c.error_state:
            bad.add(q)
        for e, d in gks.successors(q):
            pe = rename.get(e, e)
            nxt = (d, c.step(p, pe) if pe in safe_events else p)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(bad)


# --------------------------------------------------------------------------
# Safe diagnoser


@dataclass(frozen=True)
class DiagnoserState:
    """Set of (state, fault labels, unsafe) triples consistent with one observation."""

    members: frozenset[tuple[str, tuple[str, ...], bool]]

    def __post_init__(self):
        if not self.members:
            raise AutomatonError("diagnoser state must be nonempty")

    def _faulty(self, k: int | None, labels) -> bool:
        return Y in labels if k is None else labels[k] == Y

    def is_normal(self) -> bool:
        return all(Y not in lab for _, lab, _ in self.members)

    def is_certain(self, k: int | None = None) -> bool:
        return all(self._faulty(k, lab) for _, lab, _ in self.members)

    def is_uncertain(self, k: int | None = None) -> bool:
        return not self.is_certain(k) and any(self._faulty(k, lab) for _, lab, _ in self.members)

    def sorted_members(self):
        return sorted(self.members, key=lambda m: (m[1], m[0]))

    @property
    def name(self) -> str:
        parts = []
        for q, lab, unsafe in self.sorted_members():
            parts.append(f"{q}:{''.join(lab)}{'!' if Y in lab else ''}{'U' if unsafe else ''}")
        return "{" + ",".join(parts) + "}"


@dataclass(frozen=True)
class Diagnoser:
    automaton: Automaton
    states: Mapping[str, DiagnoserState]
    faults: tuple[str, ...]
    unsafe: frozenset[str]

    def state_after(self, observation: Sequence[str]) -> DiagnoserState | None:
        q = self.automaton.run(observation)
        return None if q is None else self.states[q]


def _fault_events(gks: Automaton) -> tuple[str, ...]:
    al = gks.alphabet
    return tuple(e for e in al.events if e.startswith("f(") and e.endswith(")") and e not in al.observable)


def build_safe_diagnoser(
    gks: Automaton,
    safe: Automaton,
    faults: Sequence[str] | None = None,
    rename: Mapping[str, str] | None = None,
) -> Diagnoser:
    """Observer of ``gks`` over its observable events carrying fault labels and unsafe flags."""
    faults = _fault_events(gks) if faults is None else tuple(faults)
    obs = gks.alphabet.observable
    if not obs:
        raise AutomatonError("diagnoser needs at least one observable event")
    unsafe = unsafe_states(gks, safe, rename)
    fidx = {f: k for k, f in enumerate(faults)}

    def flip(lab, e):
        k = fidx.get(e)
        if k is None or lab[k] == Y:
            return lab
        return lab[:k] + (Y,) + lab[k + 1 :]

    def close(seed):
        seen = set(seed)
        stack = list(seed)
        while stack:
            q, lab = stack.pop()
            for e, d in gks.successors(q):
                if e in obs:
                    continue
                nxt = (d, flip(lab, e))
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return DiagnoserState(frozenset((q, lab, q in unsafe) for q, lab in seen))

    init = close({(gks.initial, (N,) * len(faults))})
    states = {init.name: init}
    queue = deque([init])
    trans = []
    while queue:
        cur = queue.popleft()
        for e in gks.alphabet.events:
            if e not in obs:
                continue
            nxt = {(d, lab) for q, lab, _ in cur.members if (d := gks.step(q, e)) is not None}
            if not nxt:
                continue
            ds = close(nxt)
            if ds.name not in states:
                states[ds.name] = ds
                queue.append(ds)
            trans.append((cur.name, e, ds.name))
    al = gks.alphabet.restrict(obs)
    aut = Automaton.build(al, trans, init.name, states=states)
    return Diagnoser(aut, states, faults, unsafe)


def first_entered_certain(diag: Diagnoser, k: int | None = None) -> tuple[str, ...]:
    """Certain states entered by one observable step from a normal or uncertain state."""
    out = []
    for src, _, dst in diag.automaton.transitions():
        if diag.states[dst].is_certain(k) and not diag.states[src].is_certain(k) and dst not in out:
            out.append(dst)
    order = {s: i for i, s in enumerate(diag.automaton.states)}
    return tuple(sorted(out, key=order.__getitem__))


def _uc_reach_unsafe(gks: Automaton, start: str, unsafe: frozenset[str]):
    uc = gks.alphabet.uncontrollable
    parent = {start: None}
    queue = deque([start])
    while queue:
        q = queue.popleft()
        if q in unsafe:
            return _bfs_trace(parent, q)
        for e, d in gks.successors(q):
            if e in uc and d not in parent:
                parent[d] = (q, e)
                queue.append(d)
    return None


def check_sf_safe(gks: Automaton, safe: Automaton, diag: Diagnoser | None = None) -> Verdict:
    """Decide the three diagnoser conditions; witness is ``(condition, state name, observation[, string])``."""
    diag = build_safe_diagnoser(gks, safe) if diag is None else diag
    a = diag.automaton
    fc = set(first_entered_certain(diag))
    parent = {a.initial: None}
    queue = deque([a.initial])
    while queue:
        name = queue.popleft()
        ds = diag.states[name]
        obs = _bfs_trace(parent, name)
        if ds.is_uncertain() and any(Y in lab and u for _, lab, u in ds.members):
            return Verdict(False, ("i", name, obs), "uncertain state with an unsafe faulty member")
        if name in fc:
            if any(u for _, _, u in ds.members):
                return Verdict(False, ("ii", name, obs), "first-entered certain state with an unsafe member")
            for q, _, _ in ds.sorted_members():
                w = _uc_reach_unsafe(gks, q, diag.unsafe)
                if w is not None:
                    return Verdict(False, ("iii", name, obs, w), "uncontrollable path to an unsafe state")
        for _, d in a.successors(name):
            if d not in parent:
                parent[d] = (name, _)
                queue.append(d)
    return Verdict(True)


# --------------------------------------------------------------------------
# Post-detection plant and supervisor


@dataclass(frozen=True)
class CertainEntryPlant:
    plant: Automaton
    spec: Automaton
    detect_events: tuple[str, ...]
    members: tuple[str, ...]
    traces: tuple[tuple[str, ...], ...] = field(default=())


def detect_event(subsystem: int, qy_name: str, j: int) -> str:
    digest = hashlib.sha1(qy_name.encode("utf-8")).hexdigest()[:8]
    return f"detect({subsystem},{digest},{j})"


def consistent_trace(
    gks: Automaton,
    diag: Diagnoser,
    qy_name: str,
    member: tuple[str, tuple[str, ...], bool],
    history: Sequence[str] | None = None,
) -> tuple[str, ...]:
    """Shortest string of ``gks`` reaching ``member`` whose observation leads the diagnoser to ``qy_name``.

    With ``history``, the observation must equal it exactly.
    """
    obs = gks.alphabet.observable
    fidx = {f: k for k, f in enumerate(diag.faults)}
    target_q, target_lab, _ = member
    da = diag.automaton

    def flip(lab, e):
        k = fidx.get(e)
        return lab if k is None else lab[:k] + (Y,) + lab[k + 1 :]

    start = (gks.initial, (N,) * len(diag.faults), 0 if history is not None else da.initial)
    parent = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        q, lab, pos = cur
        done = pos == len(history) if history is not None else pos == qy_name
        if done and q == target_q and lab == target_lab:
            return _bfs_trace(parent, cur)
        for e, d in gks.successors(q):
            if e in obs:
                if history is not None:
                    if pos >= len(history) or history[pos] != e:
                        continue
                    npos = pos + 1
                else:
                    npos = da.step(pos, e)
            else:
                npos = pos
            nxt = (d, flip(lab, e), npos)
            if nxt not in parent:
                parent[nxt] = (cur, e)
                queue.append(nxt)
    raise AutomatonError(f"no string of the closed loop reaches member {target_q!r} of {qy_name}")


def certain_entry_plant(
    g_f: Automaton,
    gks: Automaton,
    diag: Diagnoser,
    qy_name: str,
    safe: Automaton,
    cfg: FaultConfig,
    history: Sequence[str] | None = None,
    all_consistent: bool = False,
) -> CertainEntryPlant:
    """Uncontrolled faulty plant restarted from the members of a certain diagnoser state.

    A fresh initial state branches by one ``detect`` event per member.  The
    companion specification continues, after each ``detect``, with the safety
    language left after the occurrence projection of the shortest string
    reaching that member.  With ``all_consistent`` it instead allows only what
    is safe after every such string, which stays sound when different
    histories reach the same member.
    """
    ds = diag.states.get(qy_name)
    if ds is None or not ds.is_certain():
        raise AutomatonError("post-detection plant requires a certain diagnoser state")
    members = ds.sorted_members()
    detects = [detect_event(cfg.subsystem, qy_name, j) for j in range(1, len(members) + 1)]
    q0 = fresh_name("q0^Y", g_f.states)
    trans = [(q0, dj, split_pair(m[0])[1]) for dj, m in zip(detects, members)]
    al = g_f.alphabet.extend(detects, controllable=False, observable=True, owners=[cfg.subsystem])
    # plant part: everything reachable from the members
    seen = {d for _, _, d in trans}
    queue = deque(seen)
    while queue:
        q = queue.popleft()
        for e, d in g_f.successors(q):
            trans.append((q, e, d))
            if d not in seen:
                seen.add(d)
                queue.append(d)
    plant = Automaton.build(al, trans, q0)

    keep = set(safe.alphabet.events)
    traces, spec_trans = [], []
    for j, (dj, m) in enumerate(zip(detects, members), start=1):
        t = consistent_trace(gks, diag, qy_name, m, history)
        traces.append(t)
        if all_consistent:
            starts = _safe_states_of_consistent(gks, diag, qy_name, m, safe)
        else:
            starts = {safe.run(occurrence_trace(t, keep))}
        if None in starts:
            continue  # already unsafe: detect_j itself is outside the specification
        spec_trans.extend(_intersection_branch(safe, frozenset(starts), dj, f"{j}:"))
    sal = safe.alphabet.extend(detects, controllable=False, observable=True, owners=[cfg.subsystem])
    spec = Automaton.build(sal, spec_trans, "p0")
    return CertainEntryPlant(plant, spec, tuple(detects), tuple(m[0] for m in members), tuple(traces))


def _intersection_branch(safe: Automaton, starts: frozenset, detect: str, prefix: str):
    """Transitions of ``detect`` followed by the continuations allowed from every state in ``starts``."""
    names = {starts: prefix + subset_name(starts)}
    out = [("p0", detect, names[starts])]
    queue = deque([starts])
    while queue:
        cur = queue.popleft()
        for e in safe.alphabet.events:
            nxt = [safe.step(q, e) for q in cur]
            if any(d is None for d in nxt):
                continue
            key = frozenset(nxt)
            if key not in names:
                names[key] = prefix + subset_name(key)
                queue.append(key)
            out.append((names[cur], e, names[key]))
    return out


def _safe_states_of_consistent(gks, diag, qy_name, member, safe) -> set:
    """Safety-automaton states (``None`` once unsafe) after every string consistent with ``member``."""
    obs = gks.alphabet.observable
    fidx = {f: k for k, f in enumerate(diag.faults)}
    keep = set(safe.alphabet.events)
    rename = occurrence_map(gks.alphabet.events)
    da = diag.automaton
    target_q, target_lab, _ = member
    start = (gks.initial, (N,) * len(diag.faults), da.initial, safe.initial)
    seen = {start}
    queue = deque([start])
    found = set()
    while queue:
        q, lab, dq, sq = queue.popleft()
        if dq == qy_name and q == target_q and lab == target_lab:
            found.add(sq)
        for e, d in gks.successors(q):
            k = fidx.get(e)
            nlab = lab if k is None else lab[:k] + (Y,) + lab[k + 1 :]
            ndq = da.step(dq, e) if e in obs else dq
            if ndq is None:
                continue
            pe = rename.get(e, e)
            nsq = sq if (sq is None or pe not in keep) else safe.step(sq, pe)
            nxt = (d, nlab, ndq, nsq)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return found


def check_sensor_tolerance(entry: CertainEntryPlant, post_spec: Automaton | None = None) -> Verdict:
    """Tolerant iff the purely uncontrollable behaviour after detection satisfies the post-fault spec."""
    spec = entry.spec if post_spec is None else post_spec
    floor = inf_c(entry.plant, entry.plant.alphabet.uncontrollable)
    v = satisfies(floor, spec, rename=occurrence_map(entry.plant.alphabet.events))
    return Verdict(True) if v else Verdict(False, v.witness, "uncontrollable escape after detection")


def synth_sensor_post_supervisor(entry: CertainEntryPlant, post_spec: Automaton | None = None) -> Supervisor:
    spec = entry.spec if post_spec is None else post_spec
    plant = entry.plant
    target = lift(plant, spec, occurrence_map(plant.alphabet.events))
    al = plant.alphabet
    return supremal_supervisor(plant, target, al.uncontrollable, al.observable)
