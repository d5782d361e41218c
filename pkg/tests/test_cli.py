import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from dmkh import cli
from dmkh import monopoles as M

FIXTURES = Path(__file__).parent / "fixtures"


def call(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, json.loads(capsys.readouterr().out)


def test_degree_report_shape(capsys):
    code, rep = call(capsys, "degree", FIXTURES / "example_a_even.dm")
    assert code == cli.EXIT_OK
    assert set(rep) == {"command", "input_digest", "result", "provenance", "diagnostics"}
    assert rep["result"]["degree"] == rep["result"]["closed_form"] == "-4/3"


def test_output_is_deterministic(capsys):
    outs = []
    for _ in range(2):
        cli.main(["classify", str(FIXTURES / "example_b.dm")])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


def test_missing_file_and_bad_manifest(capsys, tmp_path):
    code, rep = call(capsys, "degree", tmp_path / "absent.dm")
    assert code == cli.EXIT_INPUT and rep["diagnostics"][0].startswith("input error")
    bad = tmp_path / "bad.dm"
    bad.write_text("version = 1\nentity = difference_module\n[module]\nphi = [[b, 0, 1], [0, 1, 1]]\n")
    code, rep = call(capsys, "degree", bad)
    assert code == cli.EXIT_INPUT and "rank mismatch" in rep["diagnostics"][0]
    code, rep = call(capsys, "kms", FIXTURES / "example_b.dm")
    assert code == cli.EXIT_INPUT


def test_unspecified_singular_point_gets_weight_zero(capsys, tmp_path):
    f = tmp_path / "m.dm"
    f.write_text("version = 1\nentity = difference_module\n[module]\nphi = [[b (b - 1), 0], [0, 1]]\n"
                 "[place]\nat = 0\nweights = [1/2]\n")
    code, rep = call(capsys, "degree", f)
    assert code == cli.EXIT_OK
    assert any("weight 0" in d for d in rep["diagnostics"])
    assert {j["place"] for j in rep["result"]["jumps"]} == {"0", "1"}


def test_order_precedence(capsys, monkeypatch, tmp_path):
    path = FIXTURES / "connection_rank1.dm"
    bare = tmp_path / "bare.dm"
    bare.write_text(path.read_text().split("[options]")[0])
    monkeypatch.setenv("DMKH_ORDER", "3")
    _, env = call(capsys, "psi", bare)
    assert len(env["result"]["coefficients"]) == 3
    _, man = call(capsys, "psi", path)
    assert len(man["result"]["coefficients"]) == 6
    _, flag = call(capsys, "psi", path, "--order", "4")
    assert len(flag["result"]["coefficients"]) == 4


def test_psi_and_kms(capsys):
    code, rep = call(capsys, "psi", FIXTURES / "connection_rank1.dm")
    assert code == 0 and rep["result"]["round_trip"] and rep["result"]["rank1_closed_form_agrees"]
    code, rep = call(capsys, "kms", FIXTURES / "connection_nilpotent.dm")
    assert code == 0 and rep["result"]["a"] == "-3/2" and rep["result"]["alpha"] == "2 - 1/2 i"


@pytest.mark.parametrize("flags", [
    ["--family", "lp-ell", "--p", "2", "--ell", "1", "--lambda", "i"],
    ["--family", "frobenius", "--p", "2", "--frak-a", "1/2 w + 1/3 w^2", "--lambda", "1"],
    ["--family", "tame", "--a", "1/2", "--alpha", "i", "--lambda", "1"],
    ["--family", "gamma", "--gamma", "1/3 + 1/2 i"],
])
def test_verify_monopole_flags(capsys, flags):
    code, rep = call(capsys, "verify-monopole", "--samples", "16", *flags)
    assert code == cli.EXIT_OK, rep
    assert all(rep["result"]["checks"].values())


def test_verify_monopole_reports_failure(capsys, monkeypatch):
    monkeypatch.setattr(M, "global_degree", lambda model, weight=0: 0)
    code, rep = call(capsys, "verify-monopole", FIXTURES / "monopole_dirac.dm")
    assert code == cli.EXIT_VERIFY
    assert rep["result"]["global_degree"] != rep["result"]["expected"]


def test_verify_monopole_csv(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _ = call(capsys, "verify-monopole", FIXTURES / "monopole_tame.dm", "--samples", "8", "--csv", out)
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0][0] == "t" and len(rows) == 9


def test_bad_flag_value(capsys):
    code, rep = call(capsys, "verify-monopole", "--family", "tame", "--a", "[1, 2]")
    assert code == cli.EXIT_INPUT


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "dmkh.cli", "stability", str(FIXTURES / "diag_unstable.dm")],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0
    rep = json.loads(out.stdout)
    assert rep["result"]["status"] == "Unstable" and rep["result"]["witness"] == "e2"
