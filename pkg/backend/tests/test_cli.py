import json

import pandas as pd
import pytest

from app.cli import EXIT_INVALID, EXIT_OK, build_parser, config_from_args, main
from app.core.exceptions import InvalidParameters
from app.models.run import CommandType


def test_trace_command_writes_csv(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code = main(["trace", "--n-bath", "5", "--alpha", "0.05", "--t-max", "2", "--dt", "0.5", "--out", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame["t"]) == [0.0, 0.5, 1.0, 1.5, 2.0]
    printed = json.loads(capsys.readouterr().out)
    assert printed["command"] == "trace"
    assert printed["outputs"] == [str(out)]


def test_thermo_command_accepts_bloch_vector(tmp_path):
    out = tmp_path / "thermo.json"
    code = main(["thermo", "--n-bath", "3", "--t-max", "1", "--dt", "0.25", "--initial", "0.2,0.1,-0.4",
                 "--format", "json", "--out", str(out)])
    assert code == EXIT_OK
    rows = json.loads(out.read_text())
    assert len(rows) == 5
    assert all(row["flags"] == "ok" for row in rows)
    assert (tmp_path / "thermo.summary.json").exists()


def test_sweep_lists_are_parsed():
    args = build_parser().parse_args(["sweep", "--sweep-alpha", "0.01,0.03", "--sweep-n", "10,20", "--workers", "2"])
    config = config_from_args(args)
    assert config.command == CommandType.SWEEP
    assert config.sweep_alpha == [0.01, 0.03]
    assert config.sweep_n == [10, 20]
    assert config.workers == 2


def test_invalid_values_exit_with_usage_code(tmp_path, capsys):
    assert main(["rates", "--dt", "-0.1", "--out", str(tmp_path / "r.csv")]) == EXIT_INVALID
    assert "--dt" in capsys.readouterr().err
    assert main(["rates", "--n-bath", "0"]) == EXIT_INVALID
    assert "--n-bath" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


def test_validation_errors_name_the_flag():
    args = build_parser().parse_args(["thermo", "--initial", "1,1,1"])
    with pytest.raises(InvalidParameters, match="--initial"):
        config_from_args(args)


def test_unknown_choices_are_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["plot"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(["nonmarkov", "--pair", "xy"])
