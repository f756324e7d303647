import json
import subprocess
import sys
from pathlib import Path

import pytest

from tbcodes.cli import main, read_b8

GOLDEN = Path(__file__).parent / "golden"
TB12_SPEC = {"l": 2, "m": 3, "a": [["x", 1], ["y", 2]], "b": [["x", 2], ["z", 4]]}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def twelve(tmp_path):
    path = tmp_path / "twelve.json"
    path.write_text(json.dumps(TB12_SPEC))
    return str(path)


def test_print_stabilizers(capsys, twelve):
    code, out, _ = run(capsys, "construct", "--spec", twelve, "--print-stabilizers")
    assert code == 0
    assert out == (GOLDEN / "construct_tb12_stabilizers.txt").read_text()
    assert "S_Z1 = Z1 Z3 Z8 Z10" in out and "S_X6 = X3 X5 X10 X12" in out


def test_construct_matrices_text(capsys):
    code, out, _ = run(capsys, "construct", "--code", "tb12")
    lines = out.splitlines()
    assert code == 0 and lines[1] == "H_X =" and lines[2] == "001100110000"


def test_distance(capsys, twelve):
    code, out, _ = run(capsys, "distance", "--spec", twelve)
    assert (code, out) == (0, "d=3 exact=true\n")


def test_memory_noiseless(capsys, twelve):
    code, out, _ = run(capsys, "memory", "--spec", twelve, "--p", "0", "--shots", "100", "--seed", "1")
    header, row = out.strip().splitlines()
    fields = dict(zip(header.split(","), row.split(",")))
    assert code == 0 and fields["failures"] == "0" and fields["code"] == "twelve"


@pytest.mark.parametrize(
    "argv,golden",
    [
        (["construct", "--code", "tb12", "--json"], "construct_tb12.json"),
        (["distance", "--code", "tb12", "--json"], "distance_tb12.json"),
        (["logicals", "--code", "tb12", "--logicals", "reference", "--json"], "logicals_tb12_reference.json"),
        (["memory", "--code", "tb12", "--p", "0", "--shots", "100", "--seed", "1", "--json"], "memory_tb12_p0.json"),
        (["verify-gate", "--code", "tb12", "--gates", "s_l2", "--claim", "S:2", "--json"], "verify_gate_s_l2.json"),
    ],
)
def test_json_golden(capsys, argv, golden):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert json.loads(out) == json.loads((GOLDEN / golden).read_text())


def test_fit_json_schema(capsys):
    code, out, _ = run(capsys, "fit", "--points", "3:0.1111111111111111,5:0.04,7:0.02040816326530612", "--json")
    obj = json.loads(out)
    assert code == 0 and sorted(obj) == ["alpha", "beta", "points", "residual"]
    assert obj["beta"] == pytest.approx(2.0, abs=1e-9)


def test_fit_from_csv(capsys, tmp_path):
    from tbcodes.harness import ExperimentResult, results_to_csv

    path = tmp_path / "r.csv"
    results_to_csv(
        [ExperimentResult(f"s{d}", d * d, 1, d, d, 1e-3, 10, 0, 0) for d in (3, 5, 7)], path
    )
    code, out, _ = run(capsys, "fit", "--csv", str(path))
    assert code == 0 and "beta=2 " in out


def test_circuit_sample_decode_pipeline(capsys, tmp_path):
    circ = tmp_path / "c.stim"
    shots = tmp_path / "s.b8"
    dem = tmp_path / "d.dem"
    per_shot = tmp_path / "fail.csv"
    assert run(capsys, "circuit", "--code", "tb12", "--rounds", "3", "--p", "0.002", "--out", str(circ))[0] == 0
    text = circ.read_text()
    assert text.startswith("R 0 1 2") and "DEPOLARIZE2(0.002)" in text
    assert run(capsys, "sample", "--circuit", str(circ), "--shots", "500", "--seed", "3", "--out", str(shots), "--dem", str(dem))[0] == 0
    assert dem.read_text().startswith("error(")
    from tbcodes.circuits import parse

    c = parse(text)
    bits = read_b8(str(shots), c.num_detectors + c.num_observables)
    assert bits.shape == (500, c.num_detectors + 2)
    code, out, _ = run(capsys, "decode", "--circuit", str(circ), "--shots", str(shots), "--out", str(per_shot))
    assert code == 0 and out.startswith("shots=500 failures=")
    assert len(per_shot.read_text().splitlines()) == 501


def test_circuit_to_stdout_is_deterministic(capsys):
    first = run(capsys, "circuit", "--code", "surface3", "--p", "0.001")[1]
    second = run(capsys, "circuit", "--code", "surface3", "--p", "0.001")[1]
    assert first == second and first.count("DETECTOR") == 24


def test_search(capsys):
    code, out, _ = run(capsys, "search", "--l", "2", "--m", "3", "--trials", "500", "--min-k", "2", "--min-d", "3", "--json")
    rows = json.loads(out)["codes"]
    assert code == 0 and rows and all(r["k"] >= 2 and r["d"] >= 3 for r in rows)
    code, out, _ = run(capsys, "search", "--l", "2", "--m", "3", "--trials", "50", "--min-k", "100")
    assert out.strip() == "no codes found"


def test_verify_gate_failure_exit_code(capsys):
    code, out, err = run(capsys, "verify-gate", "--code", "tb12", "--gates", "h_l1", "--claim", "H:1")
    assert code == 2 and err.startswith("error: contract: ")
    assert "stabilizers_preserved=false" in out


def test_verify_gate_from_file(capsys, tmp_path):
    from importlib import resources

    g = tmp_path / "h2.txt"
    g.write_text(resources.files("tbcodes").joinpath("data/gates/h_l2.txt").read_text())
    assert run(capsys, "verify-gate", "--code", "tb12", "--gates", str(g), "--claim", "H:2")[0] == 0
    assert run(capsys, "verify-gate", "--code", "tb12", "--gates", str(g), "--claim", "H:1")[0] == 2


@pytest.mark.parametrize(
    "argv,exit_code,kind",
    [
        (["construct", "--code", "tb13"], 1, "validation"),
        (["construct"], 1, "validation"),
        (["construct", "--code", "tb12", "--spec", "x.json"], 1, "validation"),
        (["construct", "--spec", "/nonexistent.json"], 1, "validation"),
        (["circuit", "--code", "tb12", "--rounds", "0"], 1, "validation"),
        (["memory", "--code", "tb12", "--p", "0.7", "--shots", "10"], 1, "validation"),
        (["fit", "--points", "3:0.1"], 1, "validation"),
        (["fit", "--points", "garbage"], 1, "validation"),
        (["verify-gate", "--code", "tb12", "--gates", "nope.txt", "--claim", "H:1"], 1, "validation"),
        (["logicals", "--code", "tb24", "--logicals", "reference"], 1, "validation"),
    ],
)
def test_error_records(capsys, argv, exit_code, kind):
    code, _, err = run(capsys, *argv)
    assert code == exit_code
    assert err.strip().splitlines()[-1].startswith(f"error: {kind}: ")


def test_contract_exit_code(capsys, tmp_path):
    circ = tmp_path / "c.stim"
    circ.write_text("R 0\nH 0\nM 0\nDETECTOR rec[-1]\n")
    code, _, err = run(capsys, "sample", "--circuit", str(circ), "--shots", "3")
    assert code == 2 and err.startswith("error: contract: ")


def test_unknown_flag_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["distance", "--code", "tb12", "--bogus"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_bad_b8_size(tmp_path):
    p = tmp_path / "x.b8"
    p.write_bytes(b"\x00\x01\x02")
    from tbcodes.errors import ValidationError

    with pytest.raises(ValidationError):
        read_b8(str(p), 9)


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "tbcodes.cli", "distance", "--code", "tb12"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout == "d=3 exact=true\n"


def test_logicals_json_file(capsys, tmp_path):
    f = tmp_path / "l.json"
    f.write_text(json.dumps({"x": ["X4 X5 X6", "X1 X2 X4 X5 X7 X10"], "z": ["Z1 Z2 Z3 Z4 Z5 Z6", "Z1 Z3 Z5 Z6 Z7"]}))
    code, out, _ = run(capsys, "logicals", "--code", "tb12", "--logicals", str(f))
    assert code == 0 and out.startswith("k=2 valid=true")
