"""Regenerate the bundled three-robot scenario files under src/descc/data."""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "descc" / "data"


def alphabet(events, actuators, owner):
    return [
        {"name": e, "controllable": e in actuators, "observable": True, "owners": [owner]}
        for e in events
    ]


def automaton(events, actuators, owner, transitions):
    states = []
    for s, _, d in transitions:
        for q in (s, d):
            if q not in states:
                states.append(q)
    return {
        "alphabet": alphabet(events, actuators, owner),
        "states": states,
        "initial": transitions[0][0],
        "marked": states,
        "transitions": [list(t) for t in transitions],
    }


def chain(events, actuators, owner, trace):
    return automaton(events, actuators, owner, [(f"s{k}", e, f"s{k + 1}") for k, e in enumerate(trace)])


def outer(i):
    to_d, on_d = f"G{i}toD1", f"G{i}onD1"
    to3, in3, to1, in1 = f"G{i}to3", f"G{i}in3", f"G{i}to1", f"G{i}in1"
    trans = [
        ("s0", f"h{i}", "s1"), ("s1", to_d, "s2"), ("s2", on_d, "s3"), ("s3", "OP", "s4"),
        ("s4", "D1open", "s5"), ("s5", "G2in1", "s6"), ("s6", "CL", "s7"), ("s7", "D1closed", "s8"),
        ("s8", to1, "s9"), ("s9", in1, "s10"), ("s10", "r", "s11"),
        ("s1", to3, "s12"), ("s12", in3, "s13"), ("s13", to_d, "s2"),
    ]
    events = [f"h{i}", to_d, on_d, to3, in3, "OP", "D1open", "G2in1", "CL", "D1closed", to1, in1, "r"]
    actuators = [to_d, on_d, "OP", "CL", to3, to1, "r"]
    sensors = [f"h{i}", "G2in1", in3, in1]
    if i == 1:
        nominal = [f"h{i}", to_d, on_d, "OP", "D1open", "G2in1", "CL", "D1closed", to1, in1, "r"]
    else:
        nominal = [f"h{i}", to3, in3, to_d, on_d, "OP", "D1open", "G2in1", "CL", "D1closed", to1, in1, "r"]
    return events, actuators, sensors, trans, nominal


def middle():
    trans = [
        ("s0", "h2", "s1"), ("s1", "G2to2", "s2"), ("s2", "G2in2", "s3"), ("s3", "D1open", "s4"),
        ("s4", "G2to1", "s5"), ("s5", "G2in1", "s6"), ("s6", "r", "s12"),
        ("s1", "D1open", "s7"), ("s7", "G2to2", "s8"), ("s8", "G2in2", "s9"), ("s9", "G2to1", "s10"),
        ("s10", "G2in1", "s11"), ("s11", "r", "s12"),
    ]
    events = ["h2", "G2to2", "G2in2", "D1open", "G2to1", "G2in1", "r"]
    actuators = ["G2to2", "G2to1", "r"]
    sensors = ["h2", "G2in2", "D1open", "G2in1"]
    nominal = ["h2", "G2to2", "G2in2", "D1open", "G2to1", "G2in1", "r"]
    return events, actuators, sensors, trans, nominal


def global_spec():
    # D1 may only open once G2 is in Room 2 and some outer robot has visited Room 3
    events = ["G1in3", "G3in3", "G2in2", "D1open"]
    trans = []
    for a in (0, 1):
        for b in (0, 1):
            s = f"q{a}{b}"
            trans.append((s, "G1in3", f"q1{b}"))
            trans.append((s, "G3in3", f"q1{b}"))
            trans.append((s, "G2in2", f"q{a}1"))
    trans.append(("q11", "D1open", "q11"))
    trans.sort(key=lambda t: t[0] != "q00")
    doc = automaton(events, [], 0, trans)
    for ev in doc["alphabet"]:
        ev["owners"] = [int(ev["name"][1])]
        ev["controllable"] = False
    doc["alphabet"][3]["owners"] = [1, 2, 3]
    return doc


def scenario(fault_script):
    subsystems = []
    for i in (1, 2, 3):
        events, actuators, sensors, trans, nominal = middle() if i == 2 else outer(i)
        plant = automaton(events, actuators, i, trans)
        subsystems.append({
            "id": i,
            "plant": plant,
            "safety": plant,
            "local_spec": chain(events, actuators, i, nominal),
            "nominal_supervisor": chain(events, actuators, i, nominal),
            "fault_config": {"actuators": actuators, "sensors": sensors},
        })
    shared_owners = {}
    for sub in subsystems:
        for ev in sub["plant"]["alphabet"]:
            shared_owners.setdefault(ev["name"], set()).add(sub["id"])
    for sub in subsystems:
        for key in ("plant", "safety", "local_spec", "nominal_supervisor"):
            for ev in sub[key]["alphabet"]:
                ev["owners"] = sorted(shared_owners[ev["name"]])
    spec = global_spec()
    for ev in spec["alphabet"]:
        ev["owners"] = sorted(shared_owners[ev["name"]])
        ev["controllable"] = any(
            e["controllable"] for sub in subsystems for e in sub["plant"]["alphabet"] if e["name"] == ev["name"]
        )
    return {"format": "descc/1", "subsystems": subsystems, "global_spec": spec, "fault_script": fault_script}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    files = {
        "multirobot.json": [],
        "multirobot_g3_actuator.json": [
            {"kind": "actuator", "subsystem": 3, "target": "G3toD1", "after": ["h3"]}
        ],
    }
    for name, script in files.items():
        (OUT / name).write_text(json.dumps(scenario(script), indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
