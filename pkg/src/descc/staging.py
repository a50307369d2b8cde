"""Fault-script interpreter: builds the staged closed loop of one subsystem.

Every fault is injected after a local trace given at occurrence level (faulty
readings count as their physical event, bookkeeping events are erased).  The
staged automaton is the actual run up to the injection point followed by the
fault event and the closed loop of the next stage.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .actuator import (
    FaultConfig,
    check_actuator_tolerance,
    post_fault_plant_multi,
    post_fault_plant_single,
    post_fault_spec,
    post_fault_supervisor,
    safety_bank,
)
from .automata import (
    Alphabet,
    Automaton,
    AutomatonError,
    Verdict,
    accessible,
    lift,
    project,
    relabel,
)
from .sensor import (
    build_faulty_plant,
    build_faulty_supervisor,
    build_safe_diagnoser,
    certain_entry_plant,
    check_sensor_tolerance,
    check_sf_safe,
    closed_loop_fault_model,
    occurrence_map,
    synth_sensor_post_supervisor,
)
from .synthesis import Supervisor, closed_loop, supremal_supervisor

ACTUATOR, SENSOR = "actuator", "sensor"


@dataclass(frozen=True)
class FaultEvent:
    kind: str
    subsystem: int
    target: str
    after: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (ACTUATOR, SENSOR):
            raise AutomatonError(f"unknown fault kind {self.kind!r}")
        object.__setattr__(self, "after", tuple(self.after))


@dataclass
class Stage:
    kind: str
    fault: FaultEvent | None
    supervisors: dict[str, Supervisor]
    plant: Automaton | None = None
    spec: Automaton | None = None
    tolerance: Verdict = field(default_factory=lambda: Verdict(True))
    injected_after: tuple[str, ...] = ()
    note: str = ""


@dataclass
class StagedLoop:
    """Result of running a fault script on one subsystem."""

    subsystem: int
    base_events: tuple[str, ...]
    automaton: Automaton
    stages: list[Stage]
    verdict: Verdict
    failed_stage: int | None = None

    @property
    def tolerant(self) -> bool:
        return self.verdict.holds

    def occurrence_projection(self) -> Automaton:
        return occurrence_projection(self.automaton, self.base_events)


def occurrence_projection(a: Automaton, base_events: Iterable[str]) -> Automaton:
    """Relabel faulty readings to their physical event, then erase every non-base event."""
    base = set(base_events)
    r = relabel(a, occurrence_map(a.alphabet.events))
    return project(r, [e for e in r.alphabet.events if e in base])


def _occ_step(e: str, base: set) -> str | None:
    if e.endswith("^f") and e[:-2] in base:
        return e[:-2]
    return e if e in base else None


def _find_injection(a: Automaton, after: Sequence[str], base: set, region: set | None):
    """Shortest string of ``a`` whose occurrence projection is ``after`` and that ends in ``region``."""
    start = (a.initial, 0)
    parent = {start: None}
    queue = deque([start])
    n = len(after)
    while queue:
        q, k = cur = queue.popleft()
        if k == n and (region is None or q in region):
            out = []
            node = cur
            while parent[node] is not None:
                node, e = parent[node]
                out.append(e)
            return tuple(reversed(out))
        for e, d in a.successors(q):
            o = _occ_step(e, base)
            if o is None:
                nk = k
            elif k < n and after[k] == o:
                nk = k + 1
            else:
                continue
            nxt = (d, nk)
            if nxt not in parent:
                parent[nxt] = (cur, e)
                queue.append(nxt)
    return None


class _Builder:
    """Accumulates the transitions and alphabet of a staged automaton."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self.trans: list[tuple[str, str, str]] = []
        self.states: dict[str, None] = {}

    def add_alphabet(self, al: Alphabet):
        self.alphabet = self.alphabet.override(al)

    def edge(self, s, e, d):
        self.states.setdefault(s, None)
        self.states.setdefault(d, None)
        self.trans.append((s, e, d))

    def path(self, start: str, trace: Sequence[str], prefix: str) -> str:
        cur = start
        self.states.setdefault(cur, None)
        for j, e in enumerate(trace, start=1):
            nxt = f"{prefix}{j}"
            self.edge(cur, e, nxt)
            cur = nxt
        return cur

    def embed(self, a: Automaton, prefix: str) -> dict[str, str]:
        self.add_alphabet(a.alphabet)
        names = {s: prefix + s for s in a.states}
        for s in a.states:
            self.states.setdefault(names[s], None)
        for s, e, d in a.transitions():
            self.edge(names[s], e, names[d])
        return names

    def build(self, initial: str) -> Automaton:
        return accessible(Automaton.build(self.alphabet, self.trans, initial, states=self.states))


def run_staged(
    g: Automaton,
    nominal: Supervisor,
    safe: Automaton,
    cfg: FaultConfig,
    faults: Sequence[FaultEvent],
) -> StagedLoop:
    """Interpret ``faults`` (all for subsystem ``cfg.subsystem``) in order."""
    base = set(g.alphabet.events)
    base_events = g.alphabet.events
    loop0 = closed_loop(nominal, g)
    b = _Builder(g.alphabet)
    names = b.embed(loop0, "0:")
    current = b.build(names[loop0.initial])
    region = set(current.states)
    stages = [Stage("nominal", None, {"": nominal}, g, safe)]

    sensor_ctx = None  # faulty plant once a sensor stage exists
    actuator_faults: list[str] = []
    sensor_faults: list[str] = []
    bank = None
    for idx, ft in enumerate(faults, start=1):
        if ft.subsystem != cfg.subsystem:
            raise AutomatonError("fault script entry for another subsystem")
        if ft.kind == SENSOR:
            if ft.target not in cfg.sensors:
                raise AutomatonError(f"{ft.target!r} is not a declared sensor")
            if actuator_faults:
                raise AutomatonError("sensor faults must precede actuator faults in a combined script")
            if sensor_faults:
                sensor_faults.append(ft.target)
                stages.append(Stage(SENSOR, ft, {}, note="faulty layer already active"))
                continue
            which = [f.target for f in faults if f.kind == SENSOR]
            sensor_faults.append(ft.target)
            res = _sensor_stage(g, nominal, safe, cfg, ft, which, current, region, base, idx)
            stage, current, region, sensor_ctx = res
            stages.append(stage)
            if not stage.tolerance:
                return StagedLoop(cfg.subsystem, base_events, current, stages, stage.tolerance, idx)
            continue

        if ft.target not in cfg.actuators:
            raise AutomatonError(f"{ft.target!r} is not a declared actuator")
        if ft.target in actuator_faults:
            raise AutomatonError(f"actuator {ft.target!r} already failed")
        w = _find_injection(current, ft.after, base, region)
        if w is None:
            raise AutomatonError("fault injection trace not generated by the staged closed loop: " + " ".join(ft.after))
        prev = actuator_faults[-1] if actuator_faults else "0"
        hev = cfg.switch_event(prev, ft.target)
        multi = bool(actuator_faults)
        if sensor_ctx is None:
            plant_base, t_plant, rename = g, ft.after, None
        else:
            plant_base = sensor_ctx
            keep = set(plant_base.alphabet.events)
            t_plant = tuple(e for e in w if e in keep)
            rename = occurrence_map(plant_base.alphabet.events)
        if multi:
            plant_f = post_fault_plant_multi(plant_base, t_plant, cfg)
        else:
            plant_f = post_fault_plant_single(plant_base, t_plant, ft.target, cfg)
        spec = post_fault_spec(safe, ft.after)
        tol = check_actuator_tolerance(plant_f, spec, rename=rename)
        stage = Stage(ACTUATOR, ft, {}, plant_f, spec, tol, w)
        stages.append(stage)
        actuator_faults.append(ft.target)
        if not tol:
            return StagedLoop(cfg.subsystem, base_events, current, stages, tol, idx)
        if sensor_ctx is None:
            if bank is None:
                bank = safety_bank(g, safe, cfg)
            entry = bank["ALL"] if multi else bank[ft.target]
            sup = post_fault_supervisor(entry, g, plant_f, spec, ft.after)
        else:
            al = plant_f.alphabet
            sup = supremal_supervisor(plant_f, lift(plant_f, spec, rename), al.uncontrollable, al.observable)
        stage.supervisors[""] = sup
        loop = closed_loop(sup, plant_f)

        nb = _Builder(current.alphabet)
        end = nb.path(f"{idx}p0", w, f"{idx}p")
        nb.add_alphabet(plant_f.alphabet)
        names = nb.embed(loop, f"{idx}:")
        nb.edge(end, hev, names[loop.initial])
        current = nb.build(f"{idx}p0")
        region = {n for n in names.values() if n in set(current.states)}
    return StagedLoop(cfg.subsystem, base_events, current, stages, Verdict(True))


def _sensor_stage(g, nominal, safe, cfg, ft, which, current, region, base, idx):
    """Build the path to the fault, the undetected region, and a post-detection loop per certain state."""
    t = _find_injection(current, ft.after, base, region)
    if t is None:
        raise AutomatonError("fault injection trace not generated by the staged closed loop: " + " ".join(ft.after))
    g_f = build_faulty_plant(g, cfg, which)
    s_f = build_faulty_supervisor(nominal, cfg, which)
    gks = closed_loop_fault_model(s_f, g_f)
    diag = build_safe_diagnoser(gks, safe)
    stage = Stage(SENSOR, ft, {}, g_f, safe, Verdict(True), t)
    sf = check_sf_safe(gks, safe, diag)
    if not sf:
        stage.tolerance = Verdict(False, sf.witness, "not SF-safe controllable: " + sf.reason)
        return stage, current, region, g_f

    obs = gks.alphabet.observable
    fevent = cfg.sensor_fault(ft.target)
    fidx = {f: k for k, f in enumerate(diag.faults)}
    da = diag.automaton
    nominal_q = gks.run(t)
    start_q = gks.step(nominal_q, fevent)
    obs_t = tuple(e for e in t if e in obs)
    start_d = da.run(obs_t)
    if start_q is None or start_d is None:
        raise AutomatonError("fault cannot be injected at this point")
    k = fidx[fevent]
    start_lab = tuple("Y" if i == k else "N" for i in range(len(diag.faults)))

    nb = _Builder(gks.alphabet)
    end = nb.path(f"{idx}p0", t, f"{idx}p")
    node_names: dict = {}

    def node(key):
        if key not in node_names:
            node_names[key] = f"{idx}r{len(node_names)}"
        return node_names[key]

    start = (start_q, start_lab, start_d)
    nb.edge(end, fevent, node(start))
    entries: dict[str, tuple] = {}
    queue = deque([start])
    seen = {start}
    while queue:
        q, lab, dq = cur = queue.popleft()
        if diag.states[dq].is_certain():
            continue
        for e, d in gks.successors(q):
            j = fidx.get(e)
            nlab = lab if j is None else lab[:j] + ("Y",) + lab[j + 1 :]
            ndq = da.step(dq, e) if e in obs else dq
            nxt = (d, nlab, ndq)
            nb.edge(node(cur), e, node(nxt))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
            if diag.states[ndq].is_certain() and ndq not in entries:
                entries[ndq] = ()

    # one post-detection loop per certain state entered
    for m, qy in enumerate(sorted(entries, key=list(da.states).index)):
        entry = certain_entry_plant(g_f, gks, diag, qy, safe, cfg, all_consistent=True)
        tol = check_sensor_tolerance(entry)
        if not tol:
            stage.tolerance = Verdict(False, (qy,) + tuple(tol.witness), "sensor fault intolerant after detection")
            return stage, current, region, g_f
        sup = synth_sensor_post_supervisor(entry)
        stage.supervisors[qy] = sup
        loop = closed_loop(sup, entry.plant)
        names = nb.embed(loop, f"{idx}s{m}:")
        members = diag.states[qy].sorted_members()
        for (q, lab, dq), nm in list(node_names.items()):
            if dq != qy:
                continue
            jj = next(i for i, mem in enumerate(members) if mem[0] == q and mem[1] == lab)
            dj = entry.detect_events[jj]
            tgt = loop.step(loop.initial, dj)
            if tgt is None:
                raise AutomatonError("post-detection supervisor disables a detection event")
            nb.edge(nm, dj, names[tgt])
    staged = nb.build(f"{idx}p0")
    new_region = {s for s in staged.states if not s.startswith(f"{idx}p")}
    return stage, staged, new_region, g_f


def combined_fault_pipeline(
    g: Automaton,
    nominal: Supervisor,
    safe: Automaton,
    cfg: FaultConfig,
    faults: Sequence[FaultEvent],
) -> StagedLoop:
    """Sensor stage(s) first, then actuator stage(s); every stage is checked against local safety."""
    kinds = [f.kind for f in faults]
    if SENSOR in kinds and ACTUATOR in kinds and kinds.index(ACTUATOR) < len(kinds) - kinds[::-1].index(SENSOR) - 1:
        raise AutomatonError("sensor faults must precede actuator faults in a combined script")
    return run_staged(g, nominal, safe, cfg, faults)


def stage_chain(result: StagedLoop) -> list[Supervisor]:
    """Supervisors in activation order (nominal first)."""
    out = []
    for st in result.stages:
        out.extend(st.supervisors.values())
    return out
