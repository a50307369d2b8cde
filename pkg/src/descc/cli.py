"""Command-line entry point: ``descc <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .automata import FORMAT, AutomatonError, compose_all, load, project, to_doc, to_dot
from .scenario import (
    COORDINATED,
    INTOLERANT,
    NOMINAL_OK,
    TOLERABLE_ONLY,
    dumps_report,
    load_scenario,
    run_pipeline,
)
from .sensor import (
    build_faulty_plant,
    build_faulty_supervisor,
    build_safe_diagnoser,
    check_sf_safe,
    closed_loop_fault_model,
)
from .staging import FaultEvent, run_staged
from .synthesis import supremal_supervisor

EXIT_OK, EXIT_ERROR, EXIT_TOLERABLE, EXIT_VIOLATED = 0, 1, 2, 3
VERDICT_EXIT = {NOMINAL_OK: EXIT_OK, COORDINATED: EXIT_OK, TOLERABLE_ONLY: EXIT_TOLERABLE, INTOLERANT: EXIT_VIOLATED}


class _Parser(argparse.ArgumentParser):
    # usage errors share the validation exit code; 2 is reserved for a verdict
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _emit(args, name: str, payload: dict, automaton=None) -> None:
    text = json.dumps({"format": FORMAT, **payload}, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text, encoding="utf-8")
        if automaton is not None:
            (out / f"{name}.dot").write_text(to_dot(automaton, name), encoding="utf-8")
    elif getattr(args, "dot", False) and automaton is not None:
        sys.stdout.write(to_dot(automaton, name))
    else:
        sys.stdout.write(text)


def _events(csv: str | None) -> list[str]:
    return [e for e in (csv or "").split(",") if e]


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    for w in sc.warnings:
        print(f"warning: {w}", file=sys.stderr)
    n_events = len(set().union(*(s.plant.alphabet.events for s in sc.subsystems)))
    print(f"ok: {len(sc.subsystems)} subsystems, {n_events} events, {len(sc.fault_script)} scripted faults")
    return EXIT_OK


def cmd_compose(args) -> int:
    a = compose_all([load(p) for p in args.automata])
    _emit(args, "composition", to_doc(a), a)
    return EXIT_OK


def cmd_project(args) -> int:
    a = project(load(args.automaton), _events(args.keep))
    _emit(args, "projection", to_doc(a), a)
    return EXIT_OK


def cmd_synth(args) -> int:
    g, k = load(args.plant), load(args.spec)
    al = g.alphabet
    uc = set(_events(args.uc)) if args.uc is not None else al.uncontrollable
    obs = set(_events(args.obs)) if args.obs is not None else al.observable
    sup = supremal_supervisor(g, k, uc, obs)
    _emit(args, "supervisor", {**to_doc(sup.realization), "trivial": sup.trivial, "empty": sup.empty},
          sup.realization)
    return EXIT_OK


def _fault_model(args):
    sc = load_scenario(args.scenario)
    s = sc.subsystem(args.subsystem)
    which = _events(args.sensors) or list(s.fault_config.sensors)
    g_f = build_faulty_plant(s.plant, s.fault_config, which)
    s_f = build_faulty_supervisor(s.supervisor.realization, s.fault_config, which)
    return s, closed_loop_fault_model(s_f, g_f)


def cmd_diagnose(args) -> int:
    s, gks = _fault_model(args)
    diag = build_safe_diagnoser(gks, s.safety)
    _emit(args, "diagnoser", to_doc(diag.automaton), diag.automaton)
    return EXIT_OK


def cmd_check_sf_safe(args) -> int:
    s, gks = _fault_model(args)
    v = check_sf_safe(gks, s.safety)
    _emit(args, "sf_safe", {"holds": v.holds, "witness": _listify(v.witness), "reason": v.reason})
    return EXIT_OK if v else EXIT_VIOLATED


def _listify(x):
    if isinstance(x, (list, tuple)):
        return [_listify(y) for y in x]
    return x


def cmd_tolerance(args) -> int:
    sc = load_scenario(args.scenario)
    s = sc.subsystem(args.subsystem)
    faults = [FaultEvent(args.kind, s.ident, args.target, tuple(_events(args.after)))]
    loop = run_staged(s.plant, s.supervisor, s.safety, s.fault_config, faults)
    st = loop.stages[-1]
    payload = {"holds": st.tolerance.holds, "witness": _listify(st.tolerance.witness), "reason": st.tolerance.reason}
    if loop.tolerant:
        payload["post_fault_supervisors"] = {k: to_doc(v.realization) for k, v in sorted(st.supervisors.items())}
    _emit(args, "tolerance", payload)
    return EXIT_OK if loop.tolerant else EXIT_VIOLATED


def _pipeline(args, keys=None) -> int:
    sc = load_scenario(args.scenario)
    for w in sc.warnings:
        print(f"warning: {w}", file=sys.stderr)
    report = run_pipeline(sc)
    if keys is not None:
        report = {k: report[k] for k in keys if k in report}
        report["format"] = FORMAT
    text = dumps_report(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"verdict: {report['verdict']}", file=sys.stderr)
    return VERDICT_EXIT[report["verdict"]]


def cmd_coordinate(args) -> int:
    return _pipeline(args, ["verdict", "iterations", "counterexamples", "per_subsystem", "coordination"])


def cmd_run(args) -> int:
    return _pipeline(args)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="descc", description="Fault-tolerant supervisory control of distributed discrete event systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", help="directory to write artifacts into (default: stdout)")
        return sp

    sp = add("validate", cmd_validate, "load and validate a scenario file")
    sp.add_argument("scenario")

    sp = add("compose", cmd_compose, "synchronous product of automata")
    sp.add_argument("automata", nargs="+")
    sp.add_argument("--dot", action="store_true", help="print DOT instead of JSON")

    sp = add("project", cmd_project, "natural projection onto a set of events")
    sp.add_argument("automaton")
    sp.add_argument("--keep", required=True, help="comma-separated events to keep")
    sp.add_argument("--dot", action="store_true", help="print DOT instead of JSON")

    sp = add("synth", cmd_synth, "maximally permissive supervisor for a plant and specification")
    sp.add_argument("--plant", required=True)
    sp.add_argument("--spec", required=True)
    sp.add_argument("--uc", help="comma-separated uncontrollable events (default: from the plant alphabet)")
    sp.add_argument("--obs", help="comma-separated observable events (default: from the plant alphabet)")
    sp.add_argument("--dot", action="store_true", help="print DOT instead of JSON")

    for name, fn, help_ in (
        ("diagnose", cmd_diagnose, "safe diagnoser of a subsystem under sensor faults"),
        ("check-sf-safe", cmd_check_sf_safe, "safe-controllability check for sensor faults"),
    ):
        sp = add(name, fn, help_)
        sp.add_argument("scenario")
        sp.add_argument("--subsystem", type=int, required=True)
        sp.add_argument("--sensors", help="comma-separated faulty sensors (default: all declared)")
        sp.add_argument("--dot", action="store_true", help="print DOT instead of JSON")

    sp = add("tolerance", cmd_tolerance, "fault tolerance of one subsystem for one fault")
    sp.add_argument("scenario")
    sp.add_argument("--subsystem", type=int, required=True)
    sp.add_argument("--kind", choices=["actuator", "sensor"], required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--after", default="", help="comma-separated local trace before the fault")

    sp = add("coordinate", cmd_coordinate, "post-fault coordination report")
    sp.add_argument("scenario")

    sp = add("run", cmd_run, "full pipeline: nominal check, fault script, coordination")
    sp.add_argument("scenario")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (AutomatonError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
