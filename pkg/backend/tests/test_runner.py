import json

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from app.core.exceptions import InvalidParameters, SingularMap
from app.models.bath import BathParams
from app.models.nonmarkov import PairName
from app.models.run import CommandType, OutputFormat, RunConfig, parse_state
from app.services import runner, verification
from app.services.runner import COLUMNS, frame_records, run, summary_path


def _config(tmp_path, command: CommandType, name: str = None, **kwargs) -> RunConfig:
    kwargs.setdefault("params", BathParams(N=4, alpha=0.1))
    kwargs.setdefault("t_max", 10.0)
    kwargs.setdefault("dt", 0.1)
    suffix = kwargs.get("format", OutputFormat.CSV)
    suffix = "json" if command == CommandType.VERIFY else OutputFormat(suffix).value
    return RunConfig(command=command, output=tmp_path / f"{name or command.value}.{suffix}", **kwargs)


def test_parse_state():
    assert parse_state("+").rho12 == pytest.approx(0.5)
    assert parse_state(" 0.1, 0.2, -0.3 ").bloch == pytest.approx((0.1, 0.2, -0.3))
    with pytest.raises(ValueError):
        parse_state("up")


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError):
        RunConfig(command=CommandType.TRACE, t_max=0.01, dt=0.01)
    with pytest.raises(ValidationError):
        RunConfig(command=CommandType.SWEEP)
    with pytest.raises(ValidationError):
        RunConfig(command=CommandType.THERMO, initial_state="2,0,0")
    with pytest.raises(InvalidParameters):
        RunConfig(command=CommandType.SWEEP, sweep_alpha=[float("nan")]).sweep_cells()
    config = RunConfig(command=CommandType.VERIFY, format=OutputFormat.CSV)
    assert config.output_path.name == "verify.json"
    assert RunConfig(command=CommandType.RATES).output_path.name == "rates.csv"


def test_sweep_cells_are_sorted():
    config = RunConfig(command=CommandType.SWEEP, sweep_alpha=[0.03, 0.01, 0.03], sweep_n=[8, 4])
    assert [(c.N, c.alpha) for c in config.sweep_cells()] == [(4, 0.01), (4, 0.03), (8, 0.01), (8, 0.03)]
    only_alpha = RunConfig(command=CommandType.SWEEP, params=BathParams(N=5, alpha=0.1), sweep_alpha=[0.2])
    assert [(c.N, c.alpha) for c in only_alpha.sweep_cells()] == [(5, 0.2)]


def test_uncoupled_trace_file(tmp_path):
    config = _config(tmp_path, CommandType.TRACE, params=BathParams(N=6, alpha=0.0))
    result = run(config)
    assert result.exit_code == 0
    assert result.outputs == [str(config.output_path)]
    frame = pd.read_csv(config.output_path)
    assert list(frame.columns) == COLUMNS[CommandType.TRACE]
    assert len(frame) == 101
    np.testing.assert_allclose(frame["A"], 1.0, atol=1e-12)
    np.testing.assert_allclose(frame["B"], 0.0, atol=1e-12)
    assert set(frame["flags"]) == {"ok"}
    assert not summary_path(config.output_path).exists()


def test_runs_are_deterministic(tmp_path):
    first = _config(tmp_path, CommandType.RATES, name="first")
    second = _config(tmp_path, CommandType.RATES, name="second")
    run(first)
    run(second)
    assert first.output_path.read_bytes() == second.output_path.read_bytes()
    assert not list(tmp_path.glob("*.part"))


def test_json_format(tmp_path):
    config = _config(tmp_path, CommandType.RATES, format=OutputFormat.JSON, t_max=1.0)
    run(config)
    rows = json.loads(config.output_path.read_text())
    assert len(rows) == 11
    assert list(rows[0]) == COLUMNS[CommandType.RATES]
    assert rows[0]["gamma_dis"] == pytest.approx(0.0, abs=1e-12)


def test_nonmarkov_run(tmp_path):
    config = _config(tmp_path, CommandType.NONMARKOV, params=BathParams(N=20, alpha=0.03), t_max=200.0, dt=0.05)
    result = run(config)
    frame = pd.read_csv(config.output_path)
    assert list(frame.columns) == COLUMNS[CommandType.NONMARKOV]
    assert frame["q"].min() >= 0.0
    assert (frame["q"] > 0).any()
    summary = json.loads(summary_path(config.output_path).read_text())
    assert summary["blp_pair_values"] == result.summary["blp_pair_values"]
    assert summary["eta"] > 0.0
    assert summary["g_measure"] == pytest.approx(summary["eta"] / (summary["eta"] + 1))
    assert summary["blp_pair"] in {"pm", "zo", "pmi"}
    assert summary["blp_lower_bound"] == max(summary["blp_pair_values"].values())


def test_single_pair_run(tmp_path):
    config = _config(tmp_path, CommandType.NONMARKOV, pair=PairName.PM)
    result = run(config)
    assert result.summary["blp_pair"] == "pm"
    assert list(result.summary["blp_pair_values"]) == ["pm"]


def test_thermo_run_flags_pure_start(tmp_path):
    config = _config(tmp_path, CommandType.THERMO, initial_state="1")
    result = run(config)
    frame = pd.read_csv(config.output_path)
    assert frame["flags"].iloc[0] == "pure_state"
    assert (frame["flags"].iloc[1:] == "ok").all()
    assert result.summary == {"pure_samples": 1}
    np.testing.assert_allclose(frame["kappa"], -frame["sigma"])


def test_frame_records_are_json_safe():
    frame = pd.DataFrame({"t": [0.0, 1.0], "sigma": [np.inf, np.nan]})
    assert frame_records(frame) == [{"t": 0.0, "sigma": None}, {"t": 1.0, "sigma": None}]


def test_sweep_rows_are_sorted(tmp_path):
    config = _config(tmp_path, CommandType.SWEEP, t_max=20.0, sweep_alpha=[0.05, 0.02], sweep_n=[6, 3])
    run(config)
    frame = pd.read_csv(config.output_path)
    assert list(zip(frame["N"], frame["alpha"])) == [(3, 0.02), (3, 0.05), (6, 0.02), (6, 0.05)]
    assert (frame["eta"] >= 0).all()
    assert (frame["phi"] >= 0).all()


def test_parallel_sweep_matches_serial(tmp_path):
    serial = _config(tmp_path, CommandType.SWEEP, name="serial", t_max=5.0, sweep_alpha=[0.1, 0.2], sweep_n=[2, 3])
    parallel = _config(tmp_path, CommandType.SWEEP, name="parallel", t_max=5.0, sweep_alpha=[0.1, 0.2],
                       sweep_n=[2, 3], workers=2)
    run(serial)
    run(parallel)
    assert serial.output_path.read_bytes() == parallel.output_path.read_bytes()


def test_failed_run_removes_its_outputs(tmp_path, monkeypatch):
    def broken(payload, path):
        raise OSError("disk full")

    monkeypatch.setattr(runner, "write_json", broken)
    config = _config(tmp_path, CommandType.NONMARKOV)
    with pytest.raises(OSError):
        run(config)
    assert list(tmp_path.iterdir()) == []


def test_verification_run(tmp_path):
    config = _config(tmp_path, CommandType.VERIFY, params=BathParams(N=6, alpha=0.1), t_max=50.0, dt=0.05, seed=7)
    result = run(config)
    report = json.loads(config.output_path.read_text())
    assert set(report["suites"]) == set(verification.SUITES)
    failed = [name for name, suite in report["suites"].items() if not suite["passed"]]
    assert failed == []
    assert result.exit_code == 0
    assert report["passed"] is True and report["seed"] == 7


def test_failed_verification_keeps_its_report(tmp_path, monkeypatch):
    def singular(params, times, rng):
        raise SingularMap(1.0, 0.0, "A-B")

    monkeypatch.setattr(verification, "SUITES", {
        "unitality": verification.unitality_suite,
        "broken": singular,
    })
    config = _config(tmp_path, CommandType.VERIFY, t_max=5.0)
    result = run(config)
    assert result.exit_code == 1
    report = json.loads(config.output_path.read_text())
    assert report["passed"] is False
    assert report["suites"]["unitality"]["passed"] is True
    assert report["suites"]["broken"]["error"]["error"] == "SingularMap"
