import subprocess

import pytest

from pathclass.cli import main, read_csv
from pathclass.config import ExperimentConfig


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_invalid_config_exits_1_without_output(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["paradox", "--config", _write(tmp_path, "n_x = 0\n"), "--out", str(out)]) == 1
    assert "validation error" in capsys.readouterr().out
    assert not out.exists()


def test_unknown_key_exits_1(tmp_path):
    assert main(["oracle", "--config", _write(tmp_path, "colour = red\n"), "--out", str(tmp_path / "o")]) == 1


def test_scenario_mismatch_exits_1(tmp_path):
    assert main(["oracle", "--config", _write(tmp_path, "scenario = zeno\n"), "--out", str(tmp_path / "o")]) == 1


def test_oracle_csv_layout(tmp_path):
    out = tmp_path / "o"
    code = main(["oracle", "--config", _write(tmp_path, "K = 6\nseeds = 0, 1\n"), "--out", str(out)])
    # the continuum tolerance is not reached at this K, so the run reports a failed check
    assert code == 2
    path = out / "oracle.csv"
    lines = path.read_text().splitlines()
    cfg = ExperimentConfig(scenario="oracle", K=6, seeds=(0, 1))
    n_keys = len(list(cfg.items()))
    assert all(line.startswith("# ") for line in lines[: n_keys + 1])
    assert lines[n_keys] == f"# config_hash={cfg.digest}"
    echo, header, data = read_csv(path)
    assert echo["K"] == "6" and echo["scenario"] == "oracle"
    assert header[:4] == ["seed", "max_abs_diff", "max_abs_diff_trotter", "completeness_error"]
    assert data.shape == (2, 5)
    assert data[:, 2].max() < 1e-10


def test_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, "K = 6\n")
    main(["oracle", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["oracle", "--config", cfg, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "oracle.csv").read_bytes() == (tmp_path / "b" / "oracle.csv").read_bytes()


def test_plot_writes_svg(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "o"
    main(["oracle", "--config", _write(tmp_path, "K = 6\nseeds = 0, 1\n"), "--out", str(out), "--plot"])
    assert (out / "oracle.svg").exists()


def test_paradox_run(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["paradox", "--config", _write(tmp_path, "alpha = 1\n"), "--out", str(out)]) == 0
    _, header, data = read_csv(out / "paradox.csv")
    row = dict(zip(header, data[0]))
    assert row["total_probability"] == pytest.approx(2.0, abs=0.02)
    assert row["filtered_total"] == pytest.approx(1.0, abs=1e-6)
    assert "PASS  two-class total" in capsys.readouterr().out


def test_console_script(tmp_path):
    res = subprocess.run(["pathclass", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "scenario" in res.stdout
