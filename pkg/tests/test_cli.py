"""Command line behavior: round trips, exit codes, deterministic sweeps."""

import contextlib
import io

import pytest

from riskroute import serialization as ser
from riskroute.cli import main


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def test_generate_solve_analyze_round_trip(tmp_path):
    ipath = tmp_path / "g2.txt"
    opath = tmp_path / "g2.oracle.txt"
    code, _, _ = _run(["generate", "--family", "recursive", "--level", "2",
                       "--out", str(ipath), "--oracle-out", str(opath)])
    assert code == 0
    inst = ser.read_instance(ipath)
    assert inst.vertices == 8
    oracle, meta = ser.read_oracle(opath)
    assert meta["level"] == "2"
    assert oracle.expected_pra == pytest.approx(5.0)

    code, out, _ = _run(["solve", "--in", str(ipath), "--mode", "both",
                         "--out", str(tmp_path / "res")])
    assert code == 0
    assert "rawe: converged=True" in out
    rawe = ser.read_result(tmp_path / "res.rawe.txt")
    assert rawe.converged
    assert rawe.common_cost == pytest.approx(5.0, rel=1e-6)

    code, out, _ = _run(["analyze", "--in", str(ipath), "--bound", "eta"])
    assert code == 0
    assert "TopologicalEta" in out and "[ok]" in out


def test_generate_writes_to_stdout_when_no_out():
    code, out, _ = _run(["generate", "--family", "braess"])
    assert code == 0
    assert out.startswith(ser.INSTANCE_HEADER)
    inst = ser.loads_instance(out)
    assert inst.vertices == 4


def test_generate_oracle_requires_recursive_family(tmp_path):
    code, _, err = _run(["generate", "--family", "braess",
                         "--oracle-out", str(tmp_path / "o.txt")])
    assert code == 2
    assert "recursive" in err


def test_missing_input_file_is_exit_2(tmp_path):
    code, _, err = _run(["solve", "--in", str(tmp_path / "nope.txt")])
    assert code == 2
    assert "error:" in err


def test_verify_passes_for_canonical_instances():
    code, out, _ = _run(["verify", "--level", "2", "--variant", "functional",
                         "--solve"])
    assert code == 0
    assert "closed_form_check: pass" in out
    assert "solver_pra" in out


def test_sweep_is_deterministic_across_jobs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    code, _, _ = _run(["sweep", "--what", "affine", "--count", "8",
                       "--jobs", "1", "--out", str(a)])
    assert code == 0
    code, _, _ = _run(["sweep", "--what", "affine", "--count", "8",
                       "--jobs", "3", "--out", str(b)])
    assert code == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "# riskroute sweep v1"
    assert lines[1].split(",") == ["instance_id", "n", "level", "gamma",
                                   "kappa", "eta", "mu", "pra", "bound",
                                   "slack", "kind"]
    # 8 seeds x 3 bound kinds for the affine batch
    assert len(lines) == 2 + 24


def test_sweep_search_conjecture_reports_tightest(tmp_path):
    code, _, err = _run(["sweep", "--what", "braess", "--count", "4",
                         "--search-conjecture", "--out",
                         str(tmp_path / "c.csv")])
    assert code == 0
    assert "tightest instance:" in err


def test_out_dir_env_var_resolves_relative_paths(tmp_path, monkeypatch):
    monkeypatch.setenv("RISKROUTE_OUT_DIR", str(tmp_path))
    code, _, _ = _run(["generate", "--family", "braess", "--out", "rel.txt"])
    assert code == 0
    assert (tmp_path / "rel.txt").exists()
