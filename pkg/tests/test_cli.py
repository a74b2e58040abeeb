import json
import os
import subprocess
import sys

import numpy as np
import pytest

from isolab import cli, documents as D
from isolab.holsztynski import CommutativeMap
from isolab.linmap import MatrixMap, Shape


def run_cli(args):
    return cli.main(args)


def _write_identity_doc(path, scale=1.0):
    t = MatrixMap.identity(Shape(2, 2)).scale(scale)
    D.dump_document(D.map_to_document(t), str(path))


def test_analyze_identity_exit_zero(tmp_path, capsys):
    doc = tmp_path / "id.json"
    _write_identity_doc(doc)
    assert run_cli(["analyze", str(doc)]) == 0
    out = capsys.readouterr().out
    assert "complete_isometry" in out


def test_analyze_contraction_exit_one(tmp_path):
    doc = tmp_path / "half.json"
    _write_identity_doc(doc, scale=0.5)
    assert run_cli(["analyze", str(doc)]) == 1


def test_analyze_machine_report_roundtrips(tmp_path):
    doc = tmp_path / "id.json"
    out = tmp_path / "report.json"
    _write_identity_doc(doc)
    assert run_cli(["analyze", str(doc), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    D.validate_document(report)
    assert report["verdict"] == "complete_isometry"
    assert report["certificates"]["p"] == D.matrix_to_lists(np.zeros((2, 2)))
    assert json.loads(json.dumps(report)) == report


def test_analyze_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(["analyze", str(bad)]) == 64
    assert "error" in capsys.readouterr().err


def test_analyze_wrong_kind_is_parse_error(tmp_path):
    doc = tmp_path / "comm.json"
    D.dump_document(D.commutative_to_document(
        CommutativeMap(np.eye(2, dtype=complex))), str(doc))
    assert run_cli(["analyze", str(doc)]) == 64


def test_holsztynski_commands(tmp_path, capsys):
    doc = tmp_path / "comm.json"
    cm = CommutativeMap(np.array([[1, 0], [0, -1], [0.5, 0.5]], dtype=complex))
    D.dump_document(D.commutative_to_document(cm), str(doc))
    assert run_cli(["holsztynski", str(doc)]) == 0
    out = capsys.readouterr().out
    assert "surjective: True" in out

    bad_mode = tmp_path / "matrix.json"
    _write_identity_doc(bad_mode)
    assert run_cli(["holsztynski", str(bad_mode)]) == 65


def test_holsztynski_negative_reports_uncovered(tmp_path, capsys):
    doc = tmp_path / "collapse.json"
    cm = CommutativeMap(np.array([[1, 0], [1, 0]], dtype=complex))
    D.dump_document(D.commutative_to_document(cm), str(doc))
    assert run_cli(["holsztynski", str(doc)]) == 1
    assert "uncovered_points" in capsys.readouterr().out


def test_nicex_defaults(capsys):
    assert run_cli(["nicex", "--samples", "50"]) == 0
    out = capsys.readouterr().out
    assert "surviving_count: 1" in out


def test_nicex_control(capsys):
    assert run_cli(["nicex", "--control", "--n", "2", "--levels", "2",
                    "--samples", "10"]) == 0
    out = capsys.readouterr().out
    assert "surviving_count: 16" in out


def test_gen_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["gen", "--m", "2", "--n", "2", "--r", "4", "--s", "4",
            "--scale", "0.5", "--seed", "5"]
    assert run_cli(args + ["--out", str(a)]) == 0
    assert run_cli(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_then_analyze_pipeline(tmp_path):
    doc = tmp_path / "gen.json"
    assert run_cli(["gen", "--kind", "complete_isometry", "--m", "2", "--n", "2",
                    "--r", "4", "--s", "5", "--scale", "0.4", "--seed", "6",
                    "--out", str(doc)]) == 0
    assert run_cli(["analyze", str(doc)]) == 0
    assert run_cli(["gen", "--kind", "noncontraction", "--m", "2", "--n", "2",
                    "--r", "4", "--s", "4", "--seed", "7", "--out", str(doc)]) == 0
    assert run_cli(["analyze", str(doc)]) == 1


def test_gen_shape_violation_exit(tmp_path):
    assert run_cli(["gen", "--m", "3", "--n", "3", "--r", "2", "--s", "2",
                    "--out", str(tmp_path / "x.json")]) == 64


def test_batch_directory(tmp_path, capsys):
    _write_identity_doc(tmp_path / "one.json")
    _write_identity_doc(tmp_path / "two.json", scale=0.5)
    code = run_cli(["analyze", "--dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 1
    assert "one.json: complete_isometry" in out
    assert "two.json: not_complete_isometry" in out


def test_env_var_tolerance(tmp_path, monkeypatch):
    doc = tmp_path / "id.json"
    _write_identity_doc(doc)
    monkeypatch.setenv("ISOLAB_TOL", "1e-7")
    assert run_cli(["analyze", str(doc)]) == 0
    monkeypatch.setenv("ISOLAB_TOL", "not-a-number")
    assert run_cli(["analyze", str(doc)]) == 64


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "isolab.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "isolab" in proc.stdout
