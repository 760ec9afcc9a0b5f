import json
import subprocess
import sys

import pytest

from nctorus.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, **cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_verify_number_theory_default_passes(capsys):
    code, out, _ = run(capsys, "verify-number-theory")
    assert code == 0
    report = json.loads(out)
    assert {c["name"] for c in report["checks"]} >= {"trace_recursion", "congruence", "beta_limit", "gamma_partial_sum"}
    assert all(c["passed"] for c in report["checks"])


def test_verify_number_theory_failing_tolerance_exits_one(tmp_path, capsys):
    cfg = write_config(tmp_path, beta_tolerance="1e-60")
    code, out, _ = run(capsys, "verify-number-theory", "--config", cfg)
    assert code == 1
    assert any(not c["passed"] for c in json.loads(out)["checks"])


def test_invalid_matrix_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, matrix=[[1, 1], [0, 1]])
    code, _, err = run(capsys, "verify-number-theory", "--config", cfg)
    assert code == 2 and "error" in err


def test_invalid_residue_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, theta={"kind": "special", "ell": 0, "r": 5})
    code, _, err = run(capsys, "moments", "--config", cfg)
    assert code == 2 and "invalid residue index" in err


def test_unreadable_config_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "cluster", "--config", str(bad))[0] == 2


def test_json_report_roundtrip(tmp_path, capsys):
    first = tmp_path / "first.json"
    assert main(["verify-number-theory", "--out", str(first)]) == 0
    second = tmp_path / "second.json"
    assert main(["verify-number-theory", "--config", str(first), "--out", str(second)]) == 0
    assert json.loads(first.read_text()) == json.loads(second.read_text())


def test_correlate_csv(tmp_path, capsys):
    cfg = write_config(tmp_path, matrix=[[2, 1], [1, 1]], theta={"kind": "real", "source": "sqrt", "value": "137/1000"},
                       evaluators=["generic", "numeric"], tmax_avg=2000)
    code, out, _ = run(capsys, "correlate", "--config", cfg)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# nc-torus-lab v1"
    assert lines[1].startswith("word_id,evaluator,value_re")
    generic = next(line for line in lines if line.startswith("cancelling,generic"))
    assert generic.split(",")[2] == "1"
    spread = float(lines[-1].split(",")[5])
    assert spread < 0.05


def test_correlate_budget_is_reported(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NC_TORUS_BUDGET", "10")
    cfg = write_config(tmp_path, evaluators=["numeric"], theta={"kind": "rational", "value": "1/3"})
    code, out, _ = run(capsys, "correlate", "--config", cfg)
    assert code == 0 and "budget exceeded" in out


def test_moments_generic(tmp_path, capsys):
    cfg = write_config(tmp_path, theta={"kind": "generic"}, orders=[2, 4, 6], Ns=[2])
    code, out, _ = run(capsys, "moments", "--config", cfg)
    assert code == 0
    assert "inf,6,40,0,Semicircle,2,120,40" in out.splitlines()


def test_moments_not_centred_exits_one(tmp_path, capsys):
    cfg = write_config(tmp_path, theta={"kind": "generic"},
                       observable=[{"vector": [0, 0], "re": "1", "im": "0"}, {"vector": [1, 0], "re": "1", "im": "0"}])
    code, out, _ = run(capsys, "moments", "--config", cfg)
    assert code == 1 and "not centred" in out


def test_clt_rows(tmp_path, capsys):
    cfg = write_config(tmp_path, theta={"kind": "generic"}, orders=[4], Ns=[2, 4, 8])
    code, out, _ = run(capsys, "clt", "--config", cfg, "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert [float(r["finite"]) for r in rows] == [7.0, 7.5, 7.75]
    assert all(float(r["N_times_gap"]) == pytest.approx(2.0) for r in rows)


def test_cluster_verdicts(tmp_path, capsys):
    cfg = write_config(tmp_path, theta={"kind": "rational", "value": "1/3"}, scan={"m": [1, 0], "n": [0, 1], "t_range": [1, 40]})
    code, out, _ = run(capsys, "cluster", "--config", cfg)
    assert code == 0
    assert "# verdict strong not-converged" in out.splitlines()
    code, out, _ = run(capsys, "cluster", "--format", "json")
    assert json.loads(out)["verdicts"]["strong"] == "converged"


def test_equidistribution_seeded(tmp_path, capsys):
    cfg = write_config(tmp_path, equidistribution={"m": [1, 0], "n": [0, 1], "N": 500, "samples": 5, "harmonics": 1})
    a = run(capsys, "equidistribution", "--config", cfg, "--seed", "4")[1]
    b = run(capsys, "equidistribution", "--config", cfg, "--seed", "4")[1]
    assert a == b and a.startswith("# nc-torus-lab v1")


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "nctorus.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "nc-torus-lab" in res.stdout


def test_theta_out_of_range_exits_two(tmp_path, capsys):
    cfg = write_config(tmp_path, theta={"kind": "rational", "value": "4/3"})
    code, _, err = run(capsys, "cluster", "--config", cfg)
    assert code == 2 and "[0, 1)" in err
