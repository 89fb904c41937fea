import csv
import json

import numpy as np
import pytest

from nhms_memory.cli import OUTPUT_ENV, SERIES_COLUMNS, parse_values, run_command
from nhms_memory.config import ConfigError

FAST_CONFIG = """
scenario: fig2a
params: {t_end: 150}
grid: {n_z: 60, dt: 0.02, t_end: 150}
"""


def read_series(path):
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    header = lines[len(comments)].split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=len(comments) + 1)
    return comments, header, data


@pytest.fixture
def fast_config(tmp_path):
    path = tmp_path / "fast.yaml"
    path.write_text(FAST_CONFIG)
    return path


def test_run_preset_writes_outputs(tmp_path, capsys):
    assert run_command(["run", "--preset", "fig2a", "--out", str(tmp_path)]) == 0
    out = tmp_path / "fig2a"
    assert capsys.readouterr().out.strip() == str(out)
    comments, header, data = read_series(out / "series.csv")
    assert comments[0] == "# format_version: 1"
    assert tuple(header) == SERIES_COLUMNS
    assert data.shape == (3000, len(SERIES_COLUMNS))
    summary = json.loads((out / "summary.json").read_text())
    assert summary["scenario"] == "fig2a"
    assert len(summary["echoes"]) == 2
    assert summary["echoes"][1]["efficiency"] > 0
    assert (out / "config.yaml").read_text().startswith("schema: 1")


def test_rerun_is_byte_identical(tmp_path, fast_config):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_command(["run", "--config", str(fast_config), "--out", str(a)]) == 0
    assert run_command(["run", "--config", str(fast_config), "--out", str(b)]) == 0
    for name in ("series.csv", "summary.json", "config.yaml"):
        assert (a / "fig2a" / name).read_bytes() == (b / "fig2a" / name).read_bytes()


def test_saved_config_reproduces_run(tmp_path, fast_config):
    assert run_command(["run", "--config", str(fast_config), "--out", str(tmp_path / "a")]) == 0
    saved = tmp_path / "a" / "fig2a" / "config.yaml"
    assert run_command(["run", "--config", str(saved), "--out", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "fig2a" / "series.csv").read_bytes()
    assert (tmp_path / "b" / "fig2a" / "series.csv").read_bytes() == first


def test_output_directory_from_environment(tmp_path, fast_config, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert run_command(["run", "--config", str(fast_config)]) == 0
    assert (tmp_path / "env" / "fig2a" / "series.csv").exists()


def test_model_override(tmp_path, fast_config):
    assert run_command(["run", "--config", str(fast_config), "--model", "full", "--no-decay", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "fig2a" / "summary.json").read_text())
    assert summary["model"] == "full" and summary["decay"] is False


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    [],
    ["run"],
    ["run", "--preset", "fig2a", "--config", "x.yaml"],
    ["run", "--preset", "fig9"],
    ["run", "--config", "/nonexistent.yaml"],
    ["sweep", "--preset", "fig2a", "--param", "params.xi", "--values", "1:2"],
    ["sweep", "--preset", "fig2a", "--param", "params.colour", "--values", "1,2"],
])
def test_usage_and_config_errors_exit_2(argv, capsys):
    assert run_command(argv) == 2
    assert capsys.readouterr().err


def test_config_error_lists_field_path(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("scenario: fig2a\ntarget: {resonant_thickness: -1}\n")
    assert run_command(["run", "--config", str(path)]) == 2
    assert "target.resonant_thickness" in capsys.readouterr().err


def test_presets_lists_scenarios(capsys):
    assert run_command(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("fig2a", "fig2b", "fig3_compress", "fig5_xi24_phasepi", "fig6"):
        assert name in out


def test_sweep(tmp_path, fast_config):
    argv = ["sweep", "--config", str(fast_config), "--param", "target.resonant_thickness",
            "--values", "8,16", "--out", str(tmp_path)]
    assert run_command(argv) == 0
    root = tmp_path / "sweep_fig2a"
    with open(root / "sweep.csv") as f:
        rows = [r for r in csv.reader(f) if not r[0].startswith("#")]
    assert rows[0][:4] == ["value", "window", "energy", "efficiency"]
    values = sorted({float(r[0]) for r in rows[1:]})
    assert values == [8.0, 16.0]
    summary = json.loads((root / "summary.json").read_text())
    assert len(set(summary["config_hashes"])) == 2


def test_validate_exit_code_matches_report(capsys):
    code = run_command(["validate", "--quick"])
    lines = capsys.readouterr().out.splitlines()
    failed = any(ln.startswith("FAIL") for ln in lines)
    assert code == (1 if failed else 0)
    assert lines[-1].endswith("checks passed")


def test_optimize_writes_history(tmp_path, monkeypatch, capsys):
    import nhms_memory.cli as cli
    from nhms_memory.experiments import OptimizeResult

    monkeypatch.setattr(cli, "optimize_thickness",
                        lambda bounds, tol, t, decay: OptimizeResult(18.0, 0.53, 3, [(17.0, 0.5), (18.0, 0.53), (19.0, 0.52)]))
    assert run_command(["optimize", "--out", str(tmp_path)]) == 0
    assert "xi* = 18.0000" in capsys.readouterr().out
    data = json.loads((tmp_path / "optimize.json").read_text())
    assert data["evaluations"] == 3 and len(data["history"]) == 3


def test_parse_values():
    assert parse_values("2:10:4") == [2.0, 6.0, 10.0]
    assert parse_values("0, 1.5") == [0.0, 1.5]
    assert parse_values("pi,0.5pi") == pytest.approx([np.pi, 0.5 * np.pi])
    with pytest.raises(ConfigError):
        parse_values("1:2:0")
    with pytest.raises(ConfigError):
        parse_values("a,b")
