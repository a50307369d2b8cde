"""Assume-guarantee coordination of subsystem modules against a global property.

Each module gets the weakest assumption about its environment; the symmetric
rule then discharges the global property by checking that the complements of
all assumptions jointly stay inside it.  When they do not, the refinement
loop prunes the shortest violating trace from every module and resynthesizes
the local coordination supervisors.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .automata import (
    Alphabet,
    Automaton,
    AutomatonError,
    Verdict,
    accessible,
    completion,
    complement,
    compose_all,
    language_subset,
    lift,
    marked_inclusion,
    satisfies,
    subset_name,
    to_doc,
    unfold,
    universal,
)
from .sensor import occurrence_map
from .staging import occurrence_projection
from .synthesis import Supervisor, closed_loop, inf_c, supremal_supervisor

ERROR = "#err"


@dataclass(frozen=True)
class AGModule:
    automaton: Automaton
    interface: frozenset[str]


def interfaces(alphabets: Sequence[Iterable[str]], p_events: Iterable[str], literal: bool = False) -> list[frozenset[str]]:
    """Interface alphabet of every module.

    The literal choice is ``(own ∪ P) ∩ others``.  By default property events
    owned by the module alone are added as well, since otherwise the
    complement premise cannot see them and the rule loses completeness.
    """
    sets = [frozenset(a) for a in alphabets]
    p = frozenset(p_events)
    out = []
    for i, own in enumerate(sets):
        others = frozenset().union(*(s for j, s in enumerate(sets) if j != i))
        iface = (own | p) & others
        if not literal:
            iface |= own & p
        out.append(iface)
    return out


def weakest_assumption(module: AGModule, p: Automaton, universe: Alphabet | None = None) -> Automaton:
    """Largest environment behaviour over the interface under which ``module`` satisfies ``p``.

    Built from ``module || completion(p)``: states that reach the error sink
    through internal events alone are errors; the product is determinized over
    the interface; error subsets are deleted.  A subset the module cannot
    continue from becomes a universal sink, since the environment is then
    unconstrained.
    """
    m = module.automaton
    iface = set(module.interface)
    m_events = set(m.alphabet.events)
    p_events = set(p.alphabet.events)
    if not p_events <= m_events | iface:
        raise AutomatonError("property events must belong to the module or its interface")
    universe = m.alphabet if universe is None else universe
    unknown = iface - set(universe.events)
    if unknown:
        raise AutomatonError("interface contains unknown events: " + ", ".join(sorted(unknown)))
    iface_alpha = universe.restrict(iface)
    internal = [e for e in m.alphabet.events if e not in iface]
    cp = completion(p)
    err = cp.error_state

    # explicit product with the completed property
    start = (m.initial, cp.initial)
    index = {start: 0}
    order = [start]
    succ: list[dict[str, int]] = []
    i = 0
    events = list(m.alphabet.events) + [e for e in iface_alpha.events if e not in m_events]
    while i < len(order):
        qm, qp = order[i]
        row = {}
        if qp != err:
            for e in events:
                dm = m.step(qm, e) if e in m_events else qm
                if dm is None:
                    continue
                dp = cp.step(qp, e) if e in p_events else qp
                nxt = (dm, dp)
                if nxt not in index:
                    index[nxt] = len(order)
                    order.append(nxt)
                row[e] = index[nxt]
        succ.append(row)
        i += 1
    bad = [qp == err for _, qp in order]
    changed = True
    while changed:
        changed = False
        for j, row in enumerate(succ):
            if not bad[j] and any(bad[d] for e, d in row.items() if e not in iface):
                bad[j] = changed = True

    def close(seed):
        seen = set(seed)
        stack = list(seed)
        while stack:
            j = stack.pop()
            for e in internal:
                d = succ[j].get(e)
                if d is not None and d not in seen:
                    seen.add(d)
                    stack.append(d)
        return frozenset(seen)

    sink = "⊤"
    init = close({0})
    if any(bad[j] for j in init):
        # no environment at all can keep the module safe; only the empty language remains
        return Automaton.build(iface_alpha, [], "∅", marked=[])
    names = {init: subset_name(str(j) for j in sorted(init))}
    queue = deque([init])
    trans = []
    need_sink = False
    while queue:
        cur = queue.popleft()
        for e in iface_alpha.events:
            nxt = close({succ[j][e] for j in cur if e in succ[j]})
            if not nxt:
                trans.append((names[cur], e, sink))
                need_sink = True
                continue
            if any(bad[j] for j in nxt):
                continue
            if nxt not in names:
                names[nxt] = subset_name(str(j) for j in sorted(nxt))
                queue.append(nxt)
            trans.append((names[cur], e, names[nxt]))
    states = list(names.values())
    if need_sink:
        states.append(sink)
        trans.extend((sink, e, sink) for e in iface_alpha.events)
    return Automaton.build(iface_alpha, trans, names[init], states=states)


def admits(assumption: Automaton, env: Automaton) -> Verdict:
    """Whether ``L(env)`` lies inside the assumption language.

    An assumption without marked states stands for the empty language, which
    admits no environment at all (every environment generates the empty string).
    """
    if not assumption.marked:
        return Verdict(False, (), "no environment keeps the module safe")
    return language_subset(env, assumption)


def assumptions_for(modules: Sequence[Automaton], p: Automaton, universe: Alphabet, literal: bool = False) -> list[Automaton]:
    ifaces = interfaces([m.alphabet.events for m in modules], p.alphabet.events, literal)
    return [weakest_assumption(AGModule(m, i), p, universe) for m, i in zip(modules, ifaces)]


def check_symn(assumptions: Sequence[Automaton], p: Automaton) -> Verdict:
    """Complement premise of the symmetric rule: marked traces of the complements stay in ``L(p)``."""
    if not assumptions:
        raise AutomatonError("no assumptions given")
    co = compose_all([complement(a) for a in assumptions])
    v = marked_inclusion(co, p)
    return v if v else Verdict(False, v.witness, "complement premise violated")


def check_modules(modules: Sequence[Automaton], p: Automaton, universe: Alphabet) -> Verdict:
    return check_symn(assumptions_for(modules, p, universe), p)


def check_post_fault_coordination(
    nominal_modules: Sequence[Automaton], faulty_modules: Sequence[Automaton], p: Automaton, universe: Alphabet
) -> Verdict:
    """Whether the nominal modules and the post-fault modules still jointly satisfy ``p``."""
    return check_modules(list(nominal_modules) + list(faulty_modules), p, universe)


def check_coordination_existence(inf_modules: Sequence[Automaton], p: Automaton, universe: Alphabet) -> Verdict:
    """Some coordination exists iff the least permissive modules already satisfy ``p``."""
    v = check_modules(inf_modules, p, universe)
    return v if v else Verdict(False, v.witness, "even the least permissive modules violate the property")


# --------------------------------------------------------------------------
# Refinement loop


@dataclass
class Participant:
    """One subsystem as seen by the coordination layer.

    For a nominal subsystem ``plant`` is the bare plant and ``supervisor`` the
    nominal one.  For a faulty subsystem ``plant`` is its staged closed loop,
    ``supervisor`` its active post-fault supervisor, and ``base_events`` the
    nominal local alphabet that modules are projected onto.
    """

    ident: int
    plant: Automaton
    supervisor: Supervisor
    faulty: bool = False
    base_events: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.base_events:
            self.base_events = self.plant.alphabet.events


@dataclass
class CoordinationResult:
    verdict: str
    iterations: int
    counterexamples: list[tuple[str, ...]]
    supervisors: dict[int, Automaton]
    modules: dict[int, Automaton | None]
    state_counts: list[int] = field(default_factory=list)
    note: str = ""

    def report(self) -> dict:
        return {
            "verdict": self.verdict,
            "iterations": self.iterations,
            "counterexamples": [list(c) for c in self.counterexamples],
            "per_subsystem": {
                str(k): {
                    "supervisor": to_doc(self.supervisors[k]),
                    "module": None if self.modules[k] is None else to_doc(self.modules[k]),
                }
                for k in sorted(self.supervisors)
            },
        }


def universe_of(participants: Sequence[Participant]) -> Alphabet:
    """Joint alphabet of all modules.

    Nominal subsystems decide the status of shared events; a failed actuator
    only changes how its own subsystem may be supervised.
    """
    ordered = [pt for pt in participants if pt.faulty] + [pt for pt in participants if not pt.faulty]
    al = None
    for pt in ordered:
        a = pt.plant.alphabet.restrict(pt.base_events)
        al = a if al is None else al.override(a)
    return al.restrict(e for pt in participants for e in pt.base_events)


def _rebase(m: Automaton, universe: Alphabet) -> Automaton:
    return Automaton.build(
        universe.restrict(m.alphabet.events), m.transitions(), m.initial, states=m.states, marked=m.marked
    )


def remove_extensions(m: Automaton, w: Sequence[str]) -> Automaton | None:
    """Automaton for ``L(m)`` minus ``w`` and all its extensions; ``None`` when that is empty."""
    w = tuple(w)
    if not w:
        return None
    if not m.generates(w):
        return m
    if m.is_acyclic():
        tree = unfold(m)
        node = tree.run(w[:-1])
        trans = [(s, e, d) for s, e, d in tree.transitions() if not (s == node and e == w[-1])]
        return accessible(Automaton.build(tree.alphabet, trans, tree.initial, states=tree.states, marked=tree.marked))
    # cyclic: track how much of w the current string still matches
    n = len(w)
    start = (m.initial, 0)
    names = {start: f"({m.initial},0)"}
    queue = deque([start])
    trans = []
    while queue:
        q, k = cur = queue.popleft()
        for e, d in m.successors(q):
            if k >= 0 and e == w[k]:
                if k + 1 == n:
                    continue
                nxt = (d, k + 1)
            else:
                nxt = (d, -1)
            if nxt not in names:
                names[nxt] = f"({d},{nxt[1]})"
                queue.append(nxt)
            trans.append((names[cur], e, names[nxt]))
    marked = [nm for (q, _), nm in names.items() if q in m.marked]
    return Automaton.build(m.alphabet, trans, names[start], states=names.values(), marked=marked)


def _coordination_uc(plant: Automaton, shared: set) -> set:
    # a shared observable event can always be refused by not synchronizing on it
    al = plant.alphabet
    return set(al.uncontrollable) - (shared & set(al.observable))


def _shared_events(participants: Sequence[Participant]) -> set:
    seen, shared = set(), set()
    for pt in participants:
        for e in pt.base_events:
            (shared if e in seen else seen).add(e)
    return shared


def _module_of(pt: Participant, loop: Automaton, universe: Alphabet) -> Automaton:
    m = occurrence_projection(loop, pt.base_events) if pt.faulty else loop
    m = _rebase(m, universe)
    return unfold(m) if m.is_acyclic() else m


def initial_module(pt: Participant, universe: Alphabet) -> Automaton:
    """Module under the participant's current supervision."""
    loop = pt.plant if pt.faulty else closed_loop(pt.supervisor, pt.plant)
    return _module_of(pt, loop, universe)


def inf_module(pt: Participant, universe: Alphabet, shared: set) -> Automaton:
    return _module_of(pt, inf_c(pt.plant, _coordination_uc(pt.plant, shared)), universe)


def _resynthesize(pt: Participant, spec: Automaton, shared: set) -> Supervisor:
    plant = pt.plant
    uc = _coordination_uc(plant, shared)
    target = lift(plant, spec, occurrence_map(plant.alphabet.events)) if pt.faulty else spec
    return supremal_supervisor(plant, target, uc, plant.alphabet.observable)


def syn_co(participants: Sequence[Participant], p: Automaton, max_iterations: int = 1000) -> CoordinationResult:
    """Counterexample-guided synthesis of coordination supervisors."""
    universe = universe_of(participants)
    shared = _shared_events(participants)
    if not set(p.alphabet.events) <= set(universe.events):
        raise AutomatonError("global property mentions events outside every subsystem")
    ids = [pt.ident for pt in participants]
    pre = {pt.ident: pt.supervisor.realization for pt in participants}

    if not check_coordination_existence([inf_module(pt, universe, shared) for pt in participants], p, universe):
        raise AutomatonError("no coordination supervisors exist for this property")

    modules = [initial_module(pt, universe) for pt in participants]
    if check_modules(modules, p, universe):
        ident = {pt.ident: universal(pt.plant.alphabet, "id") for pt in participants}
        return CoordinationResult("coordinated", 0, [], ident, dict(zip(ids, modules)),
                                  [sum(m.num_states for m in modules)])

    # fall back to the bare plants for nominal subsystems
    modules = [initial_module(pt, universe) if pt.faulty else _module_of(pt, pt.plant, universe) for pt in participants]
    sups: dict[int, Automaton] = {pt.ident: universal(pt.plant.alphabet, "id") for pt in participants}
    counts = [sum(m.num_states for m in modules)]
    cexs: list[tuple[str, ...]] = []
    current: list[Automaton | None] = list(modules)
    it = 0
    while True:
        live = [m for m in current if m is not None]
        if len(live) < len(current):
            break
        if check_modules(live, p, universe):
            break
        direct = satisfies(compose_all(live), p)
        if direct:
            # the rule is complete here, so this only guards against inconsistent inputs
            break
        it += 1
        if it > max_iterations:
            raise AutomatonError("refinement did not converge")
        c = direct.witness
        cexs.append(c)
        nxt: list[Automaton | None] = []
        for pt, m in zip(participants, current):
            events = set(m.alphabet.events)
            proj = tuple(e for e in c if e in events)
            spec = remove_extensions(m, proj)
            if spec is None:
                nxt.append(None)
                continue
            sup = _resynthesize(pt, spec, shared)
            sups[pt.ident] = sup.realization
            if sup.empty:
                nxt.append(None)
                continue
            nxt.append(_module_of(pt, closed_loop(sup, pt.plant), universe))
        current = nxt
        counts.append(sum(0 if m is None else m.num_states for m in current))

    final = dict(zip(ids, current))
    live = [m for m in current if m is not None]
    if len(live) < len(current) or compose_all(live).num_transitions == 0:
        return CoordinationResult("tolerable-only", it, cexs, pre, final, counts,
                                  "refinement only admits the trivial solution")
    return CoordinationResult("coordinated", it, cexs, sups, final, counts)
