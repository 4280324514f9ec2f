import numpy as np
import pytest

from gmdoa import NumericError, read_trace_rows
from gmdoa.cli import main


def test_run_writes_trace(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code = main(
        ["run", "--algorithm", "aecm", "--search", "golden",
         "--iters", "5", "--seed", "1", "--out", str(out)]
    )
    assert code == 0
    header, rows = read_trace_rows(out)
    assert len(rows) == 6
    assert "wrote" in capsys.readouterr().out


def test_run_with_config_file(tmp_path):
    config = tmp_path / "exp.yaml"
    config.write_text("iterations: 3\nseed: 7\n")
    out = tmp_path / "trace.csv"
    assert main(["run", "--config", str(config), "--out", str(out)]) == 0
    _, rows = read_trace_rows(out)
    assert len(rows) == 4


def test_run_flag_overrides_beat_config(tmp_path):
    config = tmp_path / "exp.yaml"
    config.write_text("iterations: 30\n")
    out = tmp_path / "trace.csv"
    assert main(
        ["run", "--config", str(config), "--iters", "2", "--out", str(out)]
    ) == 0
    _, rows = read_trace_rows(out)
    assert len(rows) == 3


def test_run_invalid_config_exits_1(tmp_path, capsys):
    config = tmp_path / "bad.yaml"
    config.write_text("initial:\n  doas: [0.0, 105.0]\n")
    out = tmp_path / "trace.csv"
    code = main(["run", "--config", str(config), "--out", str(out)])
    assert code == 1
    err = capsys.readouterr().err
    assert "initial.doas[0]" in err
    assert not out.exists()


def test_missing_required_flag_exits_1(capsys):
    assert main(["run"]) == 1
    assert "--out" in capsys.readouterr().err


def test_unknown_algorithm_exits_1(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code = main(["run", "--algorithm", "newton", "--out", str(out)])
    assert code == 1


def test_numeric_failure_exits_2(tmp_path, monkeypatch, capsys):
    import gmdoa.cli as cli_module

    def boom(config):
        raise NumericError("synthetic numeric failure")

    monkeypatch.setattr(cli_module, "run_experiment", boom)
    code = main(["run", "--out", str(tmp_path / "t.csv")])
    assert code == 2
    assert "numeric failure" in capsys.readouterr().err


def test_compare_writes_summary(tmp_path):
    out = tmp_path / "summary.csv"
    config = tmp_path / "exp.yaml"
    config.write_text("iterations: 6\n")
    code = main(
        ["compare", "--config", str(config), "--seeds", "2", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "0"
    assert lines[2].split(",")[0] == "1"


def test_compare_rejects_nonpositive_seeds(tmp_path):
    out = tmp_path / "summary.csv"
    assert main(["compare", "--seeds", "0", "--out", str(out)]) == 1


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_run_seed_changes_trace(tmp_path):
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["run", "--iters", "2", "--seed", "0", "--out", str(out_a)])
    main(["run", "--iters", "2", "--seed", "1", "--out", str(out_b)])
    _, rows_a = read_trace_rows(out_a)
    _, rows_b = read_trace_rows(out_b)
    assert not np.allclose(
        [r[1] for r in rows_a[1:]], [r[1] for r in rows_b[1:]]
    )
