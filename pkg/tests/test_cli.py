import json
import subprocess
import sys
from importlib import resources

import pytest

from descc.automata import dumps, from_doc, to_doc, trace_tree
from descc.cli import main
from descc.scenario import bundled, scenario_to_doc

from fixtures import branching_plant, loop_plant, sensor_example


def data(name):
    return str(resources.files("descc").joinpath("data", name))


@pytest.fixture
def files(tmp_path):
    g, safe = branching_plant()
    (tmp_path / "g.json").write_text(dumps(g))
    (tmp_path / "safe.json").write_text(dumps(safe))
    (tmp_path / "loop.json").write_text(dumps(loop_plant()))
    return tmp_path


def test_validate(capsys):
    assert main(["validate", data("multirobot.json")]) == 0
    assert "3 subsystems, 24 events" in capsys.readouterr().out


def test_run_exit_codes_and_report(tmp_path, capsys):
    assert main(["run", data("multirobot.json")]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "nominal-ok"
    assert main(["run", data("multirobot_g3_actuator.json"), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdict"] == "coordinated" and report["iterations"] == 1


def test_coordinate_keeps_report_keys(capsys):
    assert main(["coordinate", data("multirobot_g3_actuator.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) >= {"verdict", "iterations", "counterexamples", "per_subsystem", "format"}


def test_intolerant_exit_code(tmp_path):
    doc = scenario_to_doc(bundled())
    sub = doc["subsystems"][2]
    sub["safety"] = sub["local_spec"] = sub["nominal_supervisor"]
    doc["fault_script"] = [{"kind": "actuator", "subsystem": 3, "target": "G3toD1", "after": ["h3"]}]
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    assert main(["run", str(p)]) == 3
    assert main(["tolerance", str(p), "--subsystem", "3", "--kind", "actuator", "--target", "G3toD1",
                 "--after", "h3"]) == 3


def test_tolerable_only_exit_code(tmp_path):
    al_doc = lambda names, ctrl: [{"name": n, "controllable": n in ctrl, "observable": True, "owners": []} for n in names]
    def aut(names, ctrl, trans):
        states = sorted({s for t in trans for s in (t[0], t[2])} | {"0"})
        return {"alphabet": al_doc(names, ctrl), "states": states, "initial": "0", "marked": states,
                "transitions": trans}
    # after losing a, subsystem 1 can still refuse c, but only by emptying subsystem 2
    g1 = aut(["a", "c"], ["a", "c"], [["0", "a", "1"], ["1", "c", "2"]])
    g2 = aut(["b"], ["b"], [["0", "b", "1"]])
    doc = {
        "format": "descc/1",
        "subsystems": [
            {"id": 1, "plant": g1, "safety": g1, "local_spec": g1, "fault_config": {"actuators": ["a"]}},
            {"id": 2, "plant": g2, "safety": g2, "local_spec": g2},
        ],
        "global_spec": aut(["c"], ["c"], []),
        "fault_script": [{"kind": "actuator", "subsystem": 1, "target": "a", "after": []}],
    }
    p = tmp_path / "t.json"
    p.write_text(json.dumps(doc))
    assert main(["run", str(p)]) == 2


def test_validation_error_exit_code(tmp_path, capsys):
    doc = scenario_to_doc(bundled())
    doc["fault_script"] = [{"kind": "actuator", "subsystem": 3, "target": "nope", "after": []}]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert main(["validate", str(p)]) == 1
    assert "nope" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.json")]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_compose_project_synth(files, capsys):
    assert main(["compose", str(files / "g.json"), str(files / "safe.json")]) == 0
    comp = from_doc(json.loads(capsys.readouterr().out))
    assert comp.generates(["a", "b"]) and not comp.generates(["a", "b", "c"])
    assert main(["project", str(files / "loop.json"), "--keep", "e1,e4"]) == 0
    proj = from_doc(json.loads(capsys.readouterr().out))
    assert set(proj.alphabet.events) == {"e1", "e4"}
    assert main(["synth", "--plant", str(files / "g.json"), "--spec", str(files / "safe.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["empty"] is False
    assert main(["synth", "--plant", str(files / "g.json"), "--spec", str(files / "safe.json"), "--dot"]) == 0
    assert capsys.readouterr().out.startswith("digraph")


def test_out_directory_gets_json_and_dot(files):
    out = files / "art"
    assert main(["compose", str(files / "g.json"), "--out", str(out)]) == 0
    assert (out / "composition.json").exists() and (out / "composition.dot").exists()


def test_sensor_commands(tmp_path, capsys):
    g, s, safe, _ = sensor_example()
    doc = {
        "format": "descc/1",
        "subsystems": [{
            "id": 1, "plant": to_doc(g), "safety": to_doc(safe), "local_spec": to_doc(safe),
            "nominal_supervisor": to_doc(s), "fault_config": {"sensors": ["b"]},
        }],
        "global_spec": to_doc(trace_tree(g.alphabet.restrict("a"), ["a"])),
    }
    p = tmp_path / "ex.json"
    p.write_text(json.dumps(doc))
    assert main(["diagnose", str(p), "--subsystem", "1"]) == 0
    diag = json.loads(capsys.readouterr().out)
    assert "{(3,3):N,(3',3'):Y!,(3',5'):Y!U}" in diag["states"]
    assert main(["check-sf-safe", str(p), "--subsystem", "1"]) == 3
    out = json.loads(capsys.readouterr().out)
    assert out["witness"][0] == "i"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "descc", "validate", data("multirobot.json")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "ok:" in res.stdout
