import json
import subprocess
import sys

import numpy as np
import pytest

from genprod.cli import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_REPLAY_MISMATCH,
    EXIT_VALIDATION,
    main,
)

RUNNING = [[0.9, 0.2], [0.1, 0.8]]


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def read_report(out_dir, name):
    return json.loads((out_dir / f"{name}.json").read_text())


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def test_classify_identity(tmp_path):
    cfg = write_config(tmp_path, "c.json", {
        "matrix": [[1.0, 0.0], [0.0, 1.0]],
        "norm": {"kind": "l1"},
        "seed": 1,
    })
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rep = read_report(tmp_path, "classify")
    assert rep["results"]["nonexpansive"]["kind"] == "certified"
    para = rep["results"]["paracontracting"]
    assert para["kind"] == "certified" and "vacuous" in para["note"]


def test_classify_with_audit_and_subspace(tmp_path):
    cfg = write_config(tmp_path, "c.json", {
        "matrix": RUNNING,
        "norm": {"kind": "l1"},
        "subspace": {"kind": "mean_zero", "n": 2},
        "audit": True,
        "seed": 3,
    })
    assert main(["classify", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rep = read_report(tmp_path, "classify")
    assert rep["results"]["h_contractor"]["kind"] == "certified"
    assert rep["results"]["h_contractor"]["certificate"]["k"] == pytest.approx(0.7)
    assert rep["results"]["paracontracting"]["kind"] == "falsified"
    assert rep["results"]["audit"]["agreement_ok"] is True


# ---------------------------------------------------------------------------
# ergodicity
# ---------------------------------------------------------------------------

def test_ergodicity_crossing_at_52(tmp_path):
    cfg = write_config(tmp_path, "e.json", {
        "name": "erg",
        "sequence": {"kind": "constant", "matrix": RUNNING},
        "schedules": [{"p": 0, "ordering": {"kind": "left"}}],
        "threshold": 1e-8,
        "max_r": 100,
        "seed": 5,
    })
    assert main(["ergodicity", "--config", str(cfg), "--out", str(tmp_path),
                 "--format", "csv"]) == EXIT_OK
    rep = read_report(tmp_path, "erg")
    assert rep["results"]["runs"][0]["crossed_at"] == 52
    csvs = list(tmp_path.glob("erg-*.csv"))
    assert len(csvs) == 1
    lines = csvs[0].read_text().splitlines()
    assert lines[0] == "r,omega"
    assert len(lines) == 53


def test_ergodicity_rejects_bad_columns(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.json", {
        "sequence": {"kind": "constant", "matrix": [[0.9, 0.3], [0.1, 0.8]]},
        "schedules": [{}],
        "threshold": 1e-4,
        "max_r": 10,
    })
    assert main(["ergodicity", "--config", str(cfg),
                 "--out", str(tmp_path)]) == EXIT_VALIDATION
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"]["type"] == "StochasticityError"
    assert err["error"]["detail"]["column"] == 1


# ---------------------------------------------------------------------------
# product
# ---------------------------------------------------------------------------

def test_product_run_with_conditions(tmp_path):
    cfg = write_config(tmp_path, "p.json", {
        "name": "prod",
        "sequence": {"kind": "scaled", "matrix": [[1.0, 0.0], [0.0, 1.0]],
                     "scale": {"kind": "constant", "value": 0.5}},
        "schedules": [{"ordering": {"kind": "left"}},
                      {"ordering": {"kind": "random", "seed": 2}}],
        "threshold": 1e-8,
        "max_r": 50,
    })
    assert main(["product", "--config", str(cfg), "--out", str(tmp_path),
                 "--format", "csv"]) == EXIT_OK
    rep = read_report(tmp_path, "prod")
    assert all(s["crossed_at"] == 27 for s in rep["results"]["schedules"])
    for csv_file in tmp_path.glob("prod-*.csv"):
        assert csv_file.read_text().splitlines()[0] == "r,mu,envelope"


def test_product_overflow_exits_numerical(tmp_path, capsys):
    cfg = write_config(tmp_path, "p.json", {
        "sequence": {"kind": "scaled", "matrix": [[1.0, 0.0], [0.0, 1.0]],
                     "scale": {"kind": "constant", "value": 10.0}},
        "schedules": [{}],
        "threshold": None,
        "max_r": 400,
    })
    assert main(["product", "--config", str(cfg),
                 "--out", str(tmp_path)]) == EXIT_NUMERICAL


def test_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path, "p.json", {
        "sequence": {"kind": "scaled", "matrix": [[1.0, 0.0], [0.0, 1.0]],
                     "scale": {"kind": "constant", "value": 0.5}},
        "schedules": [{}],
        "threshold": 1e-8,
        "max_r": 5,
    })
    assert main(["product", "--config", str(cfg), "--out", str(tmp_path),
                 "--max-r", "50", "--threshold", "1e-3"]) == EXIT_OK
    rep = read_report(tmp_path, "product")
    assert rep["config"]["max_r"] == 50
    assert rep["results"]["schedules"][0]["crossed_at"] == 10  # 2^-10 < 1e-3


# ---------------------------------------------------------------------------
# norm / spectral
# ---------------------------------------------------------------------------

def test_norm_subcommand(tmp_path):
    cfg = write_config(tmp_path, "n.json", {
        "matrix": RUNNING,
        "norm": {"kind": "l1"},
        "subspace": {"kind": "mean_zero", "n": 2},
        "vector": [1.0, -1.0],
    })
    assert main(["norm", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rep = read_report(tmp_path, "norm")
    assert rep["results"]["operator_norm"] == pytest.approx(1.0)
    assert rep["results"]["vector_norm"] == 2.0
    assert rep["results"]["partial_norm"]["value"] == pytest.approx(0.7)


def test_spectral_subcommand(tmp_path):
    cfg = write_config(tmp_path, "s.json", {
        "matrix": RUNNING,
        "eigenvalue": 1.0,
        "subspace": {"kind": "mean_zero", "n": 2},
        "high_modulus": True,
        "stochastic_simple_one": True,
    })
    assert main(["spectral", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    rep = read_report(tmp_path, "spectral")
    assert rep["results"]["multiplicities"]["algebraic"] == 1
    assert rep["results"]["bounds"]["algebraic_bound"]["lhs"] == 1
    assert rep["results"]["high_modulus"]["decided"] is True
    assert rep["results"]["simple_one"]["passed"] is True


def test_invalid_config_json(tmp_path, capsys):
    bad = tmp_path / "x.json"
    bad.write_text("{not json")
    assert main(["norm", "--config", str(bad)]) == EXIT_VALIDATION


def test_missing_required_key(tmp_path):
    cfg = write_config(tmp_path, "n.json", {"norm": {"kind": "l1"}})
    assert main(["norm", "--config", str(cfg),
                 "--out", str(tmp_path)]) == EXIT_VALIDATION


# ---------------------------------------------------------------------------
# determinism and replay
# ---------------------------------------------------------------------------

def test_identical_config_gives_identical_bytes(tmp_path):
    cfg = write_config(tmp_path, "e.json", {
        "sequence": {"kind": "constant", "matrix": RUNNING},
        "schedules": [{"ordering": {"kind": "random", "seed": 4}}],
        "threshold": 1e-6,
        "max_r": 60,
        "seed": 9,
    })
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["ergodicity", "--config", str(cfg), "--out", str(a),
                 "--format", "csv", "--name", "run"]) == EXIT_OK
    assert main(["ergodicity", "--config", str(cfg), "--out", str(b),
                 "--format", "csv", "--name", "run"]) == EXIT_OK
    assert (a / "run.json").read_bytes() == (b / "run.json").read_bytes()
    for fa in a.glob("run-*.csv"):
        fb = b / fa.name
        assert fa.read_bytes() == fb.read_bytes()


def test_replay_matches(tmp_path):
    cfg = write_config(tmp_path, "p.json", {
        "sequence": {"kind": "scaled", "matrix": [[1.0, 0.0], [0.0, 1.0]],
                     "scale": {"kind": "p_series", "amplitude": 0.5,
                               "exponent": 1.0, "side": "below"}},
        "schedules": [{"ordering": {"kind": "random", "seed": 3},
                       "permutation": {"kind": "block_shuffle", "block": 4,
                                       "seed": 1}}],
        "threshold": None,
        "max_r": 40,
        "seed": 2,
    })
    assert main(["product", "--config", str(cfg), "--out", str(tmp_path),
                 "--name", "pr"]) == EXIT_OK
    assert main(["replay", "--report", str(tmp_path / "pr.json")]) == EXIT_OK


def test_replay_detects_tampering(tmp_path, capsys):
    cfg = write_config(tmp_path, "e.json", {
        "sequence": {"kind": "constant", "matrix": RUNNING},
        "schedules": [{}],
        "threshold": 1e-4,
        "max_r": 40,
        "seed": 0,
    })
    assert main(["ergodicity", "--config", str(cfg), "--out", str(tmp_path),
                 "--name", "er"]) == EXIT_OK
    report_path = tmp_path / "er.json"
    doc = json.loads(report_path.read_text())
    trace_name = next(iter(doc["traces"]))
    doc["traces"][trace_name]["rows"][0][1] = 0.123456
    report_path.write_text(json.dumps(doc))
    assert main(["replay", "--report", str(report_path)]) == EXIT_REPLAY_MISMATCH


def test_replay_rejects_mismatched_config(tmp_path):
    cfg = write_config(tmp_path, "e.json", {
        "sequence": {"kind": "constant", "matrix": RUNNING},
        "schedules": [{}],
        "threshold": 1e-4,
        "max_r": 40,
        "seed": 0,
    })
    assert main(["ergodicity", "--config", str(cfg), "--out", str(tmp_path),
                 "--name", "er"]) == EXIT_OK
    other = write_config(tmp_path, "other.json", {
        "sequence": {"kind": "constant", "matrix": RUNNING},
        "schedules": [{"ordering": {"kind": "random", "seed": 1}}],
        "threshold": 1e-4,
        "max_r": 40,
        "seed": 0,
    })
    assert main(["replay", "--report", str(tmp_path / "er.json"),
                 "--config", str(other)]) == EXIT_VALIDATION


def test_replay_requires_complete_report(tmp_path):
    p = tmp_path / "r.json"
    p.write_text(json.dumps({"schema": "genprod.report/1"}))
    assert main(["replay", "--report", str(p)]) == EXIT_VALIDATION


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, "n.json", {"matrix": [[1.0]]})
    proc = subprocess.run(
        [sys.executable, "-m", "genprod", "norm", "--config", str(cfg),
         "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["subcommand"] == "norm"


def test_ergodicity_repair_option(tmp_path):
    # drift above the validation tolerance: rejected without repair
    drifted = [[0.9 + 3e-8, 0.2], [0.1, 0.8 - 2e-8]]
    cfg = write_config(tmp_path, "r.json", {
        "sequence": {"kind": "constant", "matrix": drifted},
        "schedules": [{}],
        "threshold": 1e-4,
        "max_r": 40,
        "repair_columns": True,
    })
    assert main(["ergodicity", "--config", str(cfg), "--out", str(tmp_path),
                 "--name", "rep"]) == EXIT_OK
    rep = read_report(tmp_path, "rep")
    assert rep["results"]["runs"][0]["crossed_at"] is not None
    # without repair the same input is rejected
    cfg2 = write_config(tmp_path, "r2.json", {
        "sequence": {"kind": "constant",
                     "matrix": [[0.9 + 3e-7, 0.2], [0.1, 0.8]]},
        "schedules": [{}],
        "threshold": 1e-4,
        "max_r": 40,
    })
    assert main(["ergodicity", "--config", str(cfg2),
                 "--out", str(tmp_path)]) == EXIT_VALIDATION
