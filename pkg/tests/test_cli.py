import json
import subprocess
import sys

import pytest

from diagplace.cli import BAD_INPUT, OK, UNSAT, main
from diagplace.sdl import fixture_text

from conftest import REFERENCE_TABLE


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_diagnose_half_adder(capsys):
    code, out = run(capsys, "diagnose", "half_adder.sdl", "--obs", "a=1,b=1,s=0,c=0")
    assert code == OK
    assert json.loads(out)["diagnoses"] == [["n5"]]


def test_diagnose_from_file(capsys, tmp_path):
    path = tmp_path / "ha.sdl"
    path.write_text(fixture_text("half_adder"))
    code, out = run(capsys, "diagnose", str(path), "--obs", "a=1,b=1,s=0,c=1")
    assert code == OK and json.loads(out) == {"cardinality": 0, "diagnoses": [[]]}


def test_diagnose_pretty(capsys):
    code, out = run(capsys, "diagnose", "half_adder", "--obs", "a=1,b=1,s=0,c=0", "--pretty")
    assert code == OK and "{n5}" in out


def test_diagnose_nothing_consistent(capsys):
    code, out = run(capsys, "diagnose", "half_adder", "--obs", "a=0,b=0,s=1,c=1",
                    "--size-cap", "1")
    assert code == UNSAT and json.loads(out)["diagnoses"] == []


def test_bad_obs_syntax(capsys):
    code, out = run(capsys, "diagnose", "half_adder", "--obs", "a1")
    assert code == BAD_INPUT and "error" in json.loads(out)


def test_missing_file(capsys):
    code, out = run(capsys, "diagnose", "nowhere.sdl", "--obs", "a=1")
    assert code == BAD_INPUT


def test_parse_error_has_position(capsys, tmp_path):
    path = tmp_path / "bad.sdl"
    path.write_text("COMPONENTS\ntype t states 0 1 fault 0\ncomponent a : nope\n")
    code, out = run(capsys, "modules", str(path))
    doc = json.loads(out)
    assert code == BAD_INPUT and (doc["line"], doc["column"]) == (3, 15)


def test_active(capsys, tmp_path):
    doc = {"configurations": [
        {"inputs": {"a": "1", "b": "1"}, "obs": {"a": "1", "b": "1", "s": "0", "c": "0"}},
        {"inputs": {"a": "1", "b": "0"}, "obs": {"a": "1", "b": "0", "s": "1", "c": "0"}}]}
    path = tmp_path / "obs.json"
    path.write_text(json.dumps(doc))
    code, out = run(capsys, "active", "half_adder", str(path))
    got = json.loads(out)
    assert code == OK and got["diagnoses"] == [["n5"]] and len(got["per_config"]) == 2


def test_active_unexplained(capsys, tmp_path):
    doc = [{"inputs": {"a": "0", "b": "0"}, "obs": {"s": "1", "c": "1"}}]
    path = tmp_path / "obs.json"
    path.write_text(json.dumps(doc))
    code, out = run(capsys, "active", "half_adder", str(path))
    assert code == UNSAT and json.loads(out)["config_index"] == 0


def test_place_eps_small(capsys):
    code, out = run(capsys, "place", "eps_small.sdl", "--m-max", "5", "--k-max", "10")
    doc = json.loads(out)
    assert code == OK and doc["certified"]
    assert len(doc["sensors"]) == 3 and len(doc["configurations"]) <= 10


def test_place_unsat(capsys):
    code, out = run(capsys, "place", "full_adder", "--m-max", "1", "--k-max", "8")
    assert code == UNSAT and json.loads(out)["unsat"] is True


def test_place_pretty_table(capsys):
    code, out = run(capsys, "place", "half_adder", "--m-max", "1", "--k-max", "4", "--pretty")
    assert code == OK and "Configuration id" in out


def test_certify_reference_table(capsys, tmp_path):
    path = tmp_path / "table.json"
    path.write_text(json.dumps([{"on": row} for row in REFERENCE_TABLE]))
    code, out = run(capsys, "certify", "eps_small", "--sensors", "B2,B4,B5",
                    "--schedule", str(path))
    assert code == OK and json.loads(out)["certified"] is True
    path.write_text(json.dumps([{"on": row} for row in REFERENCE_TABLE[:1]]))
    code, out = run(capsys, "certify", "eps_small", "--sensors", "B2,B4,B5",
                    "--schedule", str(path))
    assert code == UNSAT and json.loads(out)["confused"]


def test_certify_bad_json(capsys, tmp_path):
    path = tmp_path / "t.json"
    path.write_text("[{")
    code, _ = run(capsys, "certify", "eps_small", "--sensors", "B2", "--schedule", str(path))
    assert code == BAD_INPUT


def test_modules(capsys):
    code, out = run(capsys, "modules", "eps_large")
    doc = json.loads(out)
    assert code == OK and len(doc["modules"]) == 4
    code, out = run(capsys, "modules", "adder3")
    assert code == OK and len(json.loads(out)["modules"]) >= 3


def test_modules_with_groups(capsys, tmp_path):
    from diagplace.sdl import load_fixture

    system = load_fixture("adder3").system
    groups = [[c for c in system.components if c.startswith(p)] + [f"a{i}", f"b{i}"]
              for i, p in enumerate(("h_", "f1_", "f2_"))]
    path = tmp_path / "groups.json"
    path.write_text(json.dumps({"modules": groups}))
    code, out = run(capsys, "modules", "adder3", "--groups", str(path))
    assert code == OK and len(json.loads(out)["modules"]) == 3
    code, out = run(capsys, "modular-place", "adder3", "--groups", str(path),
                    "--m", "3", "--k-prime", "4")
    doc = json.loads(out)
    assert code == OK and doc["certified"] and len(doc["sensors"]) == 5


def test_modular_place_eps_large(capsys):
    code, out = run(capsys, "modular-place", "eps_large")
    assert code == OK and json.loads(out)["certified"]


def test_modular_place_unsat(capsys):
    code, out = run(capsys, "modular-place", "eps_large", "--m", "1", "--k-prime", "1")
    assert code == UNSAT and "module_index" in json.loads(out)


def test_bench_csv(capsys):
    code, out = run(capsys, "bench", "--n", "30", "--m", "4", "--k", "3", "--instances", "2")
    lines = out.strip().splitlines()
    assert code == OK and lines[0] == "n,m,k,mean_runtime,stddev" and len(lines) == 2


def test_output_is_byte_stable(capsys):
    argv = ["place", "eps_small", "--m-max", "5", "--k-max", "10"]
    assert run(capsys, *argv) == run(capsys, *argv)


def test_console_entry():
    proc = subprocess.run([sys.executable, "-m", "diagplace.cli", "diagnose", "half_adder",
                           "--obs", "a=1,b=1,s=0,c=0"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["diagnoses"] == [["n5"]]
