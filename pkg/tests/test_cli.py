import json
import subprocess
import sys

import pytest

from qhyper import cli
from qhyper.errors import ConfigError
from qhyper.params import sample_generic, save


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("text,want", [("1", 1), ("-0.5", -0.5), ("0.5-0.25i", 0.5 - 0.25j), ("2i", 2j),
                                       ("1e-3+2E2i", 1e-3 + 200j), ("-.5i", -0.5j)])
def test_complex_literals(text, want):
    assert cli.parse_complex(text) == want


@pytest.mark.parametrize("text", ["0.5j", "1+i", "i", "1+2", "abc", "1+2i+3i", ""])
def test_bad_complex_literals(text):
    with pytest.raises(ConfigError):
        cli.parse_complex(text)


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "riemann", "--n", "2", "--ell", "1", "--seed", "1", "0")
    recs = json.loads(out)
    assert code == 0 and [r["seed"] for r in recs] == [0, 1]
    r = recs[0]
    assert r["pass"] and r["suite"] == "riemann" and r["parameters"]["n"] == 2
    for key in ("check_name", "parameters_digest", "max_abs_residual", "max_rel_residual", "tol", "elapsed"):
        assert key in r


def test_csv_carries_same_content(capsys):
    argv = ["verify", "--suite", "biorthogonality", "--n", "2", "--ell", "1", "2", "--seed", "0"]
    _, out_json, _ = run(capsys, *argv)
    _, out_csv, _ = run(capsys, *argv, "--format", "csv")
    a, b = json.loads(out_json), cli.read_csv_records(out_csv)
    assert len(a) == len(b) == 2
    for ra, rb in zip(a, b):
        for k in ("check_name", "n", "ell", "seed", "pass", "max_rel_residual", "parameters", "details"):
            assert ra[k] == rb[k], k


def test_failing_check_exits_1(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "qkz", "--n", "2", "--ell", "1", "--tol", "1e-30")
    assert code == 1 and not json.loads(out)[0]["pass"]


def test_numerical_failure_exits_3(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "riemann", "--n", "2", "--ell", "2", "--shell-max", "2")
    assert code == 3 and json.loads(out)[0]["error"].startswith("TailBoundError")


def test_config_errors_exit_2(capsys):
    assert run(capsys, "verify", "--suite", "bogus")[0] == 2
    code, out, err = run(capsys, "verify", "--n", "5", "--ell", "4")
    assert code == 2 and out == "" and "compositions" in err
    assert run(capsys, "eval-phi", "--a", "0.5j", "--p", "0.3", "--z", "0.1")[0] == 2


def test_params_file_used_verbatim(capsys, tmp_path):
    ps = sample_generic(2, 1, 11)
    path = tmp_path / "ps.json"
    save(ps, path)
    code, out, _ = run(capsys, "verify", "--suite", "determinants", "--params", str(path))
    recs = json.loads(out)
    assert code == 0 and len(recs) == 1 and recs[0]["parameters_digest"] == ps.digest()


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, err = run(capsys, "verify", "--suite", "onedim", "--n", "3", "--draws", "5", "--out", str(path))
    assert code == 0 and out == "" and "1/1" in err
    assert json.loads(path.read_text())[0]["check_name"] == "onedim"


def test_eval_phi(capsys):
    code, out, _ = run(capsys, "eval-phi", "--a", "0.5+0.1i", "--p", "0.3", "--z", "0.2-0.1i")
    lines = dict(line.split(" ", 1) for line in out.strip().splitlines())
    assert code == 0 and float(lines["difference"]) < 1e-13
    assert run(capsys, "eval-phi", "--a", "0.5", "0.2", "--b", "0.3", "--p", "0.3", "--z", "2")[0] == 3


def test_sample_and_check(capsys, tmp_path):
    path = tmp_path / "p.json"
    assert run(capsys, "sample-params", "--n", "2", "--ell", "2", "--restricted", "1,2", "--out", str(path))[0] == 0
    code, out, _ = run(capsys, "check-params", "--params", str(path))
    info = json.loads(out)
    assert code == 0 and info["mode"] == "restricted" and info["violations"] == []
    bad = json.loads(path.read_text())
    bad["flags"] = {}
    path.write_text(json.dumps(bad))
    code, out, _ = run(capsys, "check-params", "--params", str(path))
    assert code == 1 and json.loads(out)["violations"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qhyper", "sample-params", "--n", "1", "--ell", "1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["n"] == 1
