import json
import math

import numpy as np
import pytest

from locind import io
from locind.cli import UsageError, main, parse_command, run
from locind.mps import aklt_tensor
from locind.wstate import build_w


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run_cli(argv, out):
    code = main(list(argv) + ["--out", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def test_parse_examples():
    plan = parse_command(["wstate-report", "--n", "8", "--delta", "0.1", "--connectivity", "line"])
    assert plan.command == "wstate-report"
    assert plan.params == {"n": 8, "delta": 0.1, "connectivity": "line"}
    assert plan.seed == 0
    plan = parse_command(["code-variance", "--code", "c.json", "--d", "1", "--seed", "7"])
    assert plan.seed == 7 and plan.inputs == {"code": "c.json"} and plan.params["d"] == [1]
    with pytest.raises(UsageError, match="--params"):
        parse_command(["lll-bound"])
    with pytest.raises(UsageError, match="unknown command"):
        parse_command(["frobnicate"])
    with pytest.raises(UsageError, match="--n"):
        parse_command(["wstate-report", "--n", "eight", "--delta", "0.1"])


def test_alias_and_threads_env(monkeypatch):
    assert parse_command(["wstate", "report", "--n", "8", "--delta", "0.1"]).command == "wstate-report"
    monkeypatch.setenv("AQEC_LLL_THREADS", "3")
    assert parse_command(["wstate-report", "--n", "8", "--delta", "0.1"]).threads == 3
    assert parse_command(["wstate-report", "--n", "8", "--delta", "0.1", "--threads", "1"]).threads == 1


def test_help_exits_success(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    for name in ("lll-bound", "lsm-check", "mps-ring"):
        assert name in out


def test_wstate_report_json(tmp_path):
    code, text = run_cli(["wstate-report", "--n", "30", "--delta", "0.1", "--connectivity", "line"],
                         tmp_path / "r.json")
    assert code == 0
    assert '"t_min":10' in text
    assert json.loads(text)["inputs"]["params"]["n"] == 30


def test_reports_are_byte_identical(tmp_path):
    c = write(tmp_path / "code.json", {"n": 2, "k": 1, "basis": [
        {"amplitudes": io.encode_complex(np.eye(4)[0])}, {"amplitudes": io.encode_complex(np.eye(4)[3])}]})
    argv = ["code-variance", "--code", c, "--d", "1", "--random-samples", "50", "--seed", "5"]
    a = run_cli(argv, tmp_path / "a.json")
    b = run_cli(argv, tmp_path / "b.json")
    assert a == b and a[0] == 0
    assert json.loads(a[1])["variance"][0]["epsilon"] == pytest.approx(1.0, abs=1e-9)


def test_lll_bound_violation_exit_code(tmp_path):
    p = write(tmp_path / "p.json", {"mode": "symmetric", "p": 0.5, "d": 1, "n": 3})
    code, text = run_cli(["lll-bound", "--params", p], tmp_path / "r.json")
    assert code == 1
    assert json.loads(text)["status"] == "condition-violation"
    p = write(tmp_path / "q.json", {"mode": "symmetric", "p": 0.1, "d": 0, "n": 3})
    code, text = run_cli(["lll-bound", "--params", p], tmp_path / "s.json")
    assert code == 0 and json.loads(text)["value"] == pytest.approx(0.386101597507)


def test_lll_verify(tmp_path):
    d = write(tmp_path / "d.json", {"probs": [0.56, 0.24, 0.14, 0.06],
                                   "events": [{"name": "A", "outcomes": [2, 3]}, {"name": "B", "outcomes": [1, 3]}]})
    g = write(tmp_path / "g.json", {"gamma": [[], []]})
    code, text = run_cli(["lll-verify", "--dist", d, "--graph", g], tmp_path / "r.json")
    rep = json.loads(text)
    assert code == 0 and rep["dominated"]
    assert rep["exact_none"] == pytest.approx(0.56)


def test_code_certify_contradiction(tmp_path):
    c = write(tmp_path / "c.json", {"n": 3, "layers": []})
    s = write(tmp_path / "s.json", {"amplitudes": io.encode_complex(build_w(3))})
    code, text = run_cli(["code-certify", "--circuit", c, "--state", s], tmp_path / "r.json")
    assert code == 0 and json.loads(text)["status"] == "contradiction"


def test_code_distinguish(tmp_path):
    c1 = write(tmp_path / "a.json", {"n": 2, "layers": []})
    c2 = write(tmp_path / "b.json", {"n": 2, "layers": [[{"gate": "X", "qubits": [0]}, {"gate": "X", "qubits": [1]}]]})
    code, text = run_cli(["code-distinguish", "--circuit1", c1, "--circuit2", c2, "--delta", "0"],
                         tmp_path / "r.json")
    assert code == 0 and json.loads(text)["value"] == pytest.approx(2.0)
    code, _ = run_cli(["code-distinguish", "--circuit1", c1, "--circuit2", c1, "--delta", "0.5"], tmp_path / "s.json")
    assert code == 1


def test_mps_commands(tmp_path):
    m = write(tmp_path / "m.json", io.mps_to_dict(aklt_tensor()))
    code, text = run_cli(["mps-analyze", "--mps", m], tmp_path / "a.json")
    assert code == 0 and json.loads(text)["lambda2"] == pytest.approx(1 / 3)
    code, text = run_cli(["mps-ring", "--mps", m, "--L", "6,8", "--format", "csv"], tmp_path / "r.csv")
    assert code == 0 and text.splitlines()[0].startswith("L,")
    ghz = {"matrices": io.encode_complex(np.array([np.diag([1, 0]), np.diag([0, 1])]))}
    g = write(tmp_path / "g.json", ghz)
    code, text = run_cli(["mps-analyze", "--mps", g], tmp_path / "g.out")
    assert code == 1 and not json.loads(text)["is_normal"]


def test_lsm_check(tmp_path):
    code, text = run_cli(["lsm-check", "--L", "8", "--t", "2", "--delta", "0"], tmp_path / "r.json")
    rep = json.loads(text)
    assert code == 0 and rep["alpha"] == pytest.approx(2 * math.pi / 8)
    assert [row["size"] for row in rep["table"]] == [1, 2, 3, 4]
    s = write(tmp_path / "zero.json", {"amplitudes": io.encode_complex(np.eye(64)[0])})
    code, _ = run_cli(["lsm-check", "--L", "6", "--state", s], tmp_path / "z.json")
    assert code == 1


def test_input_errors_exit_2(tmp_path, capsys):
    assert main(["lll-bound", "--params", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["lll-bound", "--params", str(bad)]) == 2
    assert main(["wstate-report", "--n", "30", "--delta", "0.1", "--format", "csv"]) == 2
    assert "error" in capsys.readouterr().err


def test_run_accepts_plan(tmp_path):
    plan = parse_command(["wstate-report", "--n", "12", "--delta", "0.2", "--out", str(tmp_path / "x.json")])
    assert run(plan) == 0
    assert json.loads((tmp_path / "x.json").read_text())["t_min"] == 2
