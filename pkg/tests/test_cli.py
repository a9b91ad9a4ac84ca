import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qomdp.cli import EXIT_CAP, EXIT_EXHAUSTED, EXIT_INVALID, EXIT_OK, EXIT_PARSE, main
from qomdp.demo import bloch_machine
from qomdp.modelio import dumps_model, load_model, model_to_dict
from qomdp.random_models import random_mealy, random_moore, random_qomdp
from qomdp.transducers import machines_equivalent

MODELS = Path(__file__).resolve().parents[1] / "models"


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data) if isinstance(data, dict) else data)
    return str(p)


def test_help_documents_exit_codes(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for code in range(5):
        assert f"\n  {code}  " in out
    for cmd in ("validate", "simulate", "convert", "solve", "search", "bloch-demo"):
        assert cmd in out


def test_bad_arguments_are_parse_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == EXIT_PARSE
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_PARSE


def test_validate(tmp_path, capsys):
    assert main(["validate", str(MODELS / "bloch.json")]) == EXIT_OK
    d = model_to_dict(bloch_machine())
    d["output"]["b1"] = [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]
    assert main(["validate", write(tmp_path, "bad.json", d)]) == EXIT_INVALID
    assert "$.output" in capsys.readouterr().err
    assert main(["validate", write(tmp_path, "broken.json", "[1, 2")]) == EXIT_PARSE
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_PARSE
    d = json.loads((MODELS / "mdp.json").read_text())
    d["emission"][1][0] = 0.5
    assert main(["validate", write(tmp_path, "col.json", d)]) == EXIT_INVALID
    assert "column 0" in capsys.readouterr().err


def test_validate_cptp_residual(tmp_path, capsys):
    d = model_to_dict(bloch_machine())
    s = np.sqrt(1.5)
    d["transition"]["a2"] = [[[[s, 0], [0, 0]], [[0, 0], [s, 0]]]]
    assert main(["validate", write(tmp_path, "cp.json", d)]) == EXIT_INVALID
    assert "residual 0.5" in capsys.readouterr().err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_simulate_bloch(capsys):
    assert main(["--seed", "4", "simulate", str(MODELS / "bloch.json"), "--actions", "a1 a2 a1"]) == EXIT_OK
    rows = read_csv(capsys.readouterr().out)
    assert [r["action"] for r in rows] == ["a1", "a2", "a1"]
    for r in rows:
        x, y, z = (float(r[k]) for k in "xyz")
        assert x * x + y * y + z * z <= 1 + 1e-9
        assert abs(float(r["rho00_re"]) + float(r["rho11_re"]) - 1) <= 1e-9


def test_simulate_identity_and_chain(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert main(["simulate", str(MODELS / "identity.json"), "--actions", "a", "--steps", "4",
                 "--out", str(out)]) == EXIT_OK
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(recs) == 4 and all(r["state"] == recs[0]["state"] for r in recs)
    assert main(["simulate", str(MODELS / "cycle_chain.json"), "--actions", "step", "--steps", "4",
                 "--format", "jsonl"]) == EXIT_OK
    recs = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert [r["output"] for r in recs] == ["s1", "s2", "s0", "s1"]
    for r in recs:
        k = int(r["output"][1])
        expected = [[[1.0 if i == j == k else 0.0, 0.0] for j in range(3)] for i in range(3)]
        assert r["state"] == expected
    assert main(["simulate", str(MODELS / "bloch.json"), "--actions", "a3"]) == EXIT_INVALID
    assert main(["simulate", str(MODELS / "geometric.json"), "--actions", "a"]) == EXIT_INVALID


def test_simulate_is_seeded(capsys):
    args = ["--seed", "11", "simulate", str(MODELS / "bloch.json"), "--actions", "a1 a2", "--steps", "8"]
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first


def test_convert(tmp_path, capsys):
    out = tmp_path / "mealy.json"
    assert main(["convert", str(MODELS / "bloch.json"), "--direction", "moore-to-mealy", "--out", str(out)]) == 0
    W = load_model(out)
    assert machines_equivalent(bloch_machine(), W, 3)
    back = tmp_path / "moore.json"
    assert main(["convert", str(out), "--direction", "mealy-to-moore", "--out", str(back)]) == 0
    assert load_model(back).dim == 4
    assert main(["convert", str(MODELS / "identity.json"), "--direction", "moore-to-mealy"]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "quantum_mealy"
    assert main(["convert", str(MODELS / "bloch.json"), "--direction", "mealy-to-moore"]) == EXIT_INVALID


def test_convert_random_corpus(tmp_path):
    rng = np.random.default_rng(8)
    for i in range(5):
        for m, direction in ((random_moore(2, rng=rng), "moore-to-mealy"), (random_mealy(2, rng=rng), "mealy-to-moore")):
            p = write(tmp_path, f"m{i}.json", dumps_model(m))
            assert main(["convert", p, "--direction", direction, "--out", str(tmp_path / "o.json")]) == 0


def test_solve(tmp_path, capsys):
    out = tmp_path / "sol.json"
    assert main(["solve", str(MODELS / "geometric.json"), "--epsilon", "1e-4", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "certified" in text
    value = float(text.split("value at rho0:")[1].split()[0])
    assert abs(value - 2.0) <= 1e-4
    sol = json.loads(out.read_text())
    assert sol["kind"] == "qomdp_solution" and sol["bound"] <= 1e-4
    assert main(["solve", str(MODELS / "mdp.json"), "--epsilon", "1e-3"]) == 0
    d = json.loads((MODELS / "geometric.json").read_text())
    d["reward"] = [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
    assert main(["solve", write(tmp_path, "z.json", d), "--epsilon", "0.01"]) == 0
    assert "iterations: 1\n" in capsys.readouterr().out
    assert main(["solve", str(MODELS / "bloch.json")]) == EXIT_INVALID
    assert main(["solve", str(MODELS / "geometric.json"), "--epsilon", "2"]) == EXIT_INVALID


def test_solve_cap(tmp_path, capsys):
    p = write(tmp_path, "q.json", dumps_model(random_qomdp(rng=3)))
    assert main(["solve", p, "--cap", "1"]) == EXIT_CAP
    assert "--cap" in capsys.readouterr().err
    assert main(["solve", p, "--max-iter", "2"]) == EXIT_CAP


def test_search(tmp_path, capsys):
    goal = str(MODELS / "two_step_goal.json")
    assert main(["search", goal, "--problem", "reach", "--tau", "1", "--max-len", "4"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["alpha"] == ["go", "go"]
    assert main(["search", goal, "--problem", "reach", "--tau", "1", "--max-len", "1"]) == EXIT_EXHAUSTED
    capsys.readouterr()
    ident = str(MODELS / "identity.json")
    out = tmp_path / "w.json"
    assert main(["search", ident, "--problem", "reach", "--tau", "1", "--max-len", "2", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["alpha"] == []
    d = json.loads((MODELS / "identity.json").read_text())
    d["accept"] = [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
    zero = write(tmp_path, "zero.json", d)
    assert main(["search", zero, "--problem", "reach", "--tau", "0.5", "--max-len", "3"]) == EXIT_EXHAUSTED
    assert main(["search", zero, "--problem", "nonoccur", "--tau", "0", "--max-len", "3"]) == EXIT_OK
    assert main(["search", zero, "--problem", "reach", "--tau", "0.5", "--max-len", "9",
                 "--node-cap", "3"]) == EXIT_CAP
    assert main(["search", zero, "--problem", "reach", "--tau", "1.5", "--max-len", "3"]) == EXIT_INVALID


def test_bloch_demo(tmp_path, capsys):
    assert main(["--seed", "0", "bloch-demo"]) == EXIT_OK
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 4
    assert [float(rows[0][k]) for k in "xyz"] == pytest.approx([1, 0, 0], abs=1e-15)
    assert [r["action"] for r in rows[1:]] == ["a1", "a2", "a1"]
    for r in rows[1:]:
        assert float(r["p[b-1]"]) == pytest.approx(0.5, abs=1e-12)
        assert float(r["p[b1]"]) == pytest.approx(0.5, abs=1e-12)
    out = tmp_path / "demo.csv"
    assert main(["bloch-demo", "--steps", "5", "--actions", "a2", "--out", str(out)]) == 0
    assert [r["action"] for r in read_csv(out.read_text())[1:]] == ["a2"] * 5
    assert main(["bloch-demo", "--steps", "0"]) == EXIT_INVALID


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "qomdp.cli", "validate", str(MODELS / "mdp.json")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("ok")
