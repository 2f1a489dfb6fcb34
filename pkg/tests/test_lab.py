"""
Experiment configs, sampling, experiment runs and the command line
"""
import json

import numpy as np
import pandas as pd
import pytest

from src.geometry.hamiltonian import hamiltonian_value
from src.lab import experiments
from src.lab import runner as runner_module
from src.lab.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main
from src.lab.runner import ExperimentFailed, run_experiment
from src.lab.sampling import sample_initial_conditions
from src.lab.schemas import parse_config
from src.lab.validation import (
    CheckResult,
    ValidationReport,
    check_constant_field_conjugate,
    check_derivative_oracle,
    check_field_conjugate_scan,
    check_flat_control,
    check_flow_map_oracle,
    check_linearized_oracle,
    check_measure,
    check_model_files,
    check_trace_inequality,
    check_twist_orientation,
    run_validate,
)
from src.storage.run_index import RunIndex
from src.storage.writers import read_csv
from src.utils.errors import ConfigInvalid, StepSizeCollapse


@pytest.fixture
def out(tmp_path):
    return tmp_path / "runs"


# configs

def test_config_defaults():
    config = parse_config({"kind": "conjugate-scan", "model": "m.json"})
    assert config.samples == 100
    assert config.t_max == 10.0
    assert not config.control


@pytest.mark.parametrize("data, field", [
    ({"kind": "integrate", "model": "m.json", "T": -1.0}, "T"),
    ({"kind": "integrate", "model": "m.json", "tol": 1e-2}, "tol"),
    ({"kind": "green-limit", "model": "m.json", "times": [10.0, 5.0]}, "times"),
    ({"kind": "sigma", "model": "m.json", "bogus": 1}, "bogus"),
    ({"kind": "explode", "model": "m.json"}, "kind"),
])
def test_config_diagnostics(data, field):
    with pytest.raises(ConfigInvalid) as info:
        parse_config(data)
    assert info.value.diagnostics[0]["field"] == field


def test_model_required():
    with pytest.raises(ConfigInvalid):
        parse_config({"kind": "sigma"})
    assert parse_config({"kind": "validate"}).model is None


# sampling

def test_sampling_is_seeded(conformal_n3):
    first = sample_initial_conditions(conformal_n3, 8, 42)
    second = sample_initial_conditions(conformal_n3, 8, 42)
    other = sample_initial_conditions(conformal_n3, 8, 43)
    assert np.array_equal(first.p, second.p)
    assert not np.array_equal(first.q, other.q)
    assert np.allclose(np.linalg.norm(first.directions, axis=1), 1.0)
    assert np.allclose(hamiltonian_value(conformal_n3, first.q, first.p, "H_tilde"), 0.5)
    assert len(first.points()) == 8


# experiments

def test_integrate_run(models_dir, out):
    record = run_experiment({
        "kind": "integrate", "model": str(models_dir / "flat_constant_b.json"),
        "T": 2 * np.pi, "samples_out": 5, "output_dir": str(out),
    })
    frame = read_csv(out / record.artifacts[0])
    assert list(frame.columns) == ["t", "q1", "q2", "p1", "p2", "H"]
    assert len(frame) == 5
    assert record.summary["max_energy_drift"] < 1e-9
    assert RunIndex(out).records()[0]["run_id"] == record.run_id


def test_integrate_reports_gauge_deviation(models_dir, out):
    record = run_experiment({
        "kind": "integrate", "model": str(models_dir / "conformal_n3.json"),
        "T": 5.0, "samples_out": 11, "output_dir": str(out),
    })
    assert record.summary["gauge_deviation"] < 1e-7


def test_conjugate_scan_with_control(models_dir, out):
    config = {
        "kind": "conjugate-scan", "model": str(models_dir / "flat_constant_b.json"),
        "samples": 2, "t_max": 7.0, "control": True, "output_dir": str(out),
    }
    record = run_experiment(config)
    assert record.summary["scan"]["found"] == 2
    assert record.summary["scan"]["t_conj_median"] == pytest.approx(2 * np.pi, abs=1e-6)
    assert record.summary["control"]["none"] == 2
    names = [path.split("/")[-1] for path in record.artifacts]
    assert names == ["conjugate_scan.csv", "conjugate_scan_control.csv"]
    frame = read_csv(out / record.artifacts[0])
    assert list(frame.columns) == ["id", "q0_1", "q0_2", "dir_1", "dir_2", "t_conj", "status"]


def test_conjugate_scan_is_reproducible(models_dir, out):
    config = {
        "kind": "conjugate-scan", "model": str(models_dir / "flat_constant_b.json"),
        "samples": 2, "t_max": 7.0, "dump_traces": True, "output_dir": str(out),
    }
    first = run_experiment(config)
    second = run_experiment(config)
    assert first.run_id != second.run_id
    assert len(first.artifacts) == 3
    for a, b in zip(first.artifacts, second.artifacts):
        assert (out / a).read_bytes() == (out / b).read_bytes()


def test_integrator_failure_is_an_error_status(monkeypatch, constant_field):
    def collapse(*args, **kwargs):
        raise StepSizeCollapse(1.0, 1e-13, 1e-12)

    monkeypatch.setattr(experiments, "scan_conjugate_time", collapse)
    initial = sample_initial_conditions(constant_field, 2, 0)
    results = experiments.scan_orbits(constant_field, initial, 7.0, 1e-10)
    assert [r["status"] for r in results] == [experiments.ERROR] * 2
    assert "fell below minimum" in results[0]["message"]
    summary = experiments.summarize_scan(results)
    assert summary["errors"] == 2
    assert summary["ambiguous"] == 0
    assert summary["fraction_found"] == 0.0
    assert list(experiments.scan_frame(initial, results)["status"]) == ["error", "error"]


def test_sigma_run(models_dir, out):
    record = run_experiment({
        "kind": "sigma", "model": str(models_dir / "conformal_eps01_n3.json"),
        "grid": 16, "sphere": 4, "output_dir": str(out),
    })
    report = json.loads((out / record.artifacts[0]).read_text())
    assert report["relative_discrepancy_closed_form"] < 1e-6
    assert report["model_hash"] == record.model_hash
    assert record.summary["converged"]


def test_green_limit_run(models_dir, out):
    record = run_experiment({
        "kind": "green-limit", "model": str(models_dir / "flat_free.json"),
        "times": [10.0, 20.0, 40.0], "output_dir": str(out),
    })
    assert record.summary["flagged"] == []
    assert record.summary["ratios"] == pytest.approx([0.5, 0.5], abs=1e-8)


def test_decompose_run(models_dir, out):
    record = run_experiment({"kind": "decompose", "model": str(models_dir / "flat_exact.json"),
                             "output_dir": str(out)})
    document = json.loads((out / record.artifacts[0]).read_text())
    assert document["reconstruction_residual"] < 1e-12
    assert document["gamma"] == [[0.0, 0.0], [0.0, 0.0]]
    assert document["potential"][1] == [{"k": [1, 0], "a": 0.0, "b": 1.0}]


def test_decompose_rejects_open_form(tmp_path, out):
    path = tmp_path / "open.json"
    path.write_text(json.dumps({
        "dimension": 3,
        "conformal_factor": [{"k": [0, 0, 0], "a": 1.0}],
        "magnetic_field": [{"i": 1, "j": 2, "modes": [{"k": [0, 0, 1], "a": 1.0}]}],
    }))
    with pytest.raises(ConfigInvalid) as info:
        run_experiment({"kind": "decompose", "model": str(path), "output_dir": str(out)})
    diagnostic = info.value.diagnostics[0]
    assert diagnostic["field"] == "model.magnetic_field"
    assert diagnostic["residual"] == pytest.approx(1.0)
    assert not out.exists() or not any(out.rglob("*"))


def test_failed_run_leaves_nothing(monkeypatch, models_dir, out):
    def explode(config, model, writer, model_hash=""):
        writer.csv("gauge_partial.csv", pd.DataFrame({"x": [1.0]}))
        raise RuntimeError("boom")

    monkeypatch.setattr(experiments, "run_decompose", explode)
    with pytest.raises(RuntimeError):
        run_experiment({"kind": "decompose", "model": str(models_dir / "flat_exact.json"),
                        "output_dir": str(out)})
    assert not any(path.is_file() for path in out.rglob("*"))
    assert RunIndex(out).records() == []


# validation

def test_individual_checks(models_dir):
    assert check_twist_orientation().passed
    result = check_model_files(models_dir.glob("*.json"))
    assert result.passed
    assert result.value == 7.0


def test_oracle_and_measure_checks():
    assert check_linearized_oracle(states=5).passed
    assert check_derivative_oracle(states=5).passed
    assert check_flow_map_oracle().passed
    assert check_trace_inequality().passed
    measure = check_measure()
    assert measure.passed and measure.threshold == 1e-10


def test_field_conjugate_scan_check():
    result = check_field_conjugate_scan(samples=10, repeats=2)
    assert result.passed
    assert "10/10 found" in result.detail


@pytest.mark.slow
def test_conjugate_checks_over_many_orbits():
    assert check_constant_field_conjugate().passed
    assert check_field_conjugate_scan().passed
    assert check_flat_control().passed


def test_run_validate_guards_exceptions(models_dir):
    def broken():
        raise ArithmeticError("nope")

    report = run_validate(models_dir, models_dir / "mixed.json", checks=[check_twist_orientation, broken])
    assert report.failures == ["broken"]
    assert [c.name for c in report.checks] == ["twist_orientation", "broken", "model_files", "model_construction"]
    assert "seconds" not in report.to_dict()["checks"][0]


# command line

def test_cli_decompose(models_dir, out, capsys):
    code = main(["decompose", "--model", str(models_dir / "flat_constant_b.json"), "--out", str(out)])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert '"reconstruction_residual"' in printed
    record = RunIndex(out).records()[0]
    assert record["kind"] == "decompose"
    assert record["status"] == "success"
    assert record["summary"]["gamma"] == [[0.0, 1.0], [-1.0, 0.0]]


def test_cli_conjugate_scan_horizon(models_dir, out):
    argv = ["conjugate-scan", "--model", str(models_dir / "flat_constant_b.json"), "--samples", "2", "-T", "7"]
    assert main(argv + ["--out", str(out)]) == EXIT_OK
    record = RunIndex(out).records()[0]
    assert record["config"]["t_max"] == 7.0
    assert record["summary"]["scan"]["found"] == 2


@pytest.mark.parametrize("argv", [
    ["sigma"],
    ["integrate", "--model", "data/models/flat_free.json", "-T", "-1"],
    ["integrate", "--config", "does-not-exist.json"],
])
def test_cli_configuration_errors(argv, out, capsys):
    assert main(argv + ["--out", str(out)]) == EXIT_CONFIG
    assert "Configuration error" in capsys.readouterr().err


def test_cli_missing_model_file(tmp_path, out):
    assert main(["decompose", "--model", str(tmp_path / "absent.json"), "--out", str(out)]) == EXIT_CONFIG


def test_cli_config_kind_mismatch(tmp_path, out):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"kind": "sigma", "model": "m.json"}))
    assert main(["decompose", "--config", str(path), "--out", str(out)]) == EXIT_CONFIG


def test_cli_config_file_with_override(tmp_path, models_dir, out):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"kind": "integrate", "model": str(models_dir / "flat_free.json"),
                                "T": 100.0, "samples_out": 3}))
    assert main(["integrate", "--config", str(path), "-T", "2", "--out", str(out)]) == EXIT_OK
    assert RunIndex(out).records()[0]["config"]["T"] == 2.0


def test_cli_failed_validation(monkeypatch, out):
    monkeypatch.setattr(runner_module, "run_validate",
                        lambda model=None: ValidationReport([CheckResult("forced", False, detail="forced")]))
    assert main(["validate", "--out", str(out)]) == EXIT_FAILED
    record = RunIndex(out).records()[0]
    assert record["status"] == "failed"
    assert record["summary"]["failures"] == ["forced"]
    assert len(record["artifacts"]) == 2


def test_failed_validation_record_raised(monkeypatch, out):
    monkeypatch.setattr(runner_module, "run_validate",
                        lambda model=None: ValidationReport([CheckResult("forced", False)]))
    with pytest.raises(ExperimentFailed) as info:
        run_experiment({"kind": "validate", "output_dir": str(out)})
    assert info.value.record.status == "failed"
