import numpy as np
import pytest

from geoclip.accountant import PrivacySpec, epsilon_of
from geoclip.cli import main
from geoclip.harness import DataConfig, PrivacyConfig, RunConfig, SweepConfig, write_run_config
from geoclip.io import load_csv


@pytest.fixture
def small_config(tmp_path):
    config = RunConfig(
        name="cli",
        learning_rate=0.1,
        batch_size=50,
        iterations=4,
        seeds=(0, 1),
        data=DataConfig(source="synthetic_regression", n=500, p=4, corr_block=2),
        strategy={"kind": "geoclip_full", "h2": 1.0},
        strategy_kinds={"vanilla": {"clip_norm": 1.0}},
        privacy=PrivacyConfig(sigma=1.0),
        sweep=SweepConfig(strategies=("geoclip_full", "vanilla"), sigmas=(1.0,)),
        output_dir=str(tmp_path / "output"),
    )
    return write_run_config(config, tmp_path / "cli.ini")


def test_accountant_prints_epsilon(capsys):
    assert main(["accountant", "1.1", "0.01", "100", "1e-5"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("epsilon = ")
    expected = epsilon_of(PrivacySpec(1.1, 0.01, 100, 1e-5))
    assert float(out.split("=")[1]) == pytest.approx(expected, rel=1e-5)


def test_accountant_curve(tmp_path):
    path = tmp_path / "curve.csv"
    assert main(["accountant", "2", "0.05", "20", "1e-5", "--curve", str(path)]) == 0
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "step,epsilon" and len(lines) == 22


def test_accountant_custom_orders(capsys):
    assert main(["accountant", "1", "1", "1", "1e-5", "--orders", "2"]) == 0
    out = capsys.readouterr().out
    assert float(out.split("=")[1]) == pytest.approx(1.0 + np.log(1e5), rel=1e-5)


def test_accountant_rejects_bad_rate(capsys):
    assert main(["accountant", "1", "1.5", "10", "1e-5"]) == 1
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["accountant", "1"], ["frobnicate"], ["accountant", "x", "0.1", "1", "1e-5"]])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_bad_log_level_exits_2(capsys, global_config):
    assert main(["--log-level", "LOUD", "accountant", "1", "0.1", "1", "1e-5"]) == 2
    assert "LOUD" in capsys.readouterr().err


def test_run_writes_metrics(small_config, tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["run", str(small_config), "--out", str(out), "--set", "strategy.kind=vanilla", "--seed", "3"]
    assert main(argv) == 0
    rows = (out / "metrics_3.csv").read_text(encoding="utf-8").splitlines()
    assert rows[0] == "step,loss,metric,epsilon"
    assert len(rows) == 1 + 5
    assert (out / "summary.csv").exists()
    assert "seed 3: mse=" in capsys.readouterr().out


def test_run_defaults_to_config_output_dir(small_config, tmp_path):
    assert main(["run", str(small_config)]) == 0
    assert (tmp_path / "output" / "cli" / "metrics_0.csv").exists()
    assert (tmp_path / "output" / "cli" / "metrics_1.csv").exists()


def test_run_reports_config_errors(small_config, tmp_path, capsys):
    assert main(["run", str(small_config), "--set", "run.speed=3"]) == 1
    assert "speed" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini")]) == 1


def test_sweep_writes_cells(small_config, tmp_path, capsys):
    out = tmp_path / "sweep"
    assert main(["sweep", str(small_config), "--out", str(out), "--seeds", "0", "--no-tune"]) == 0
    assert (out / "geoclip_full_sigma1" / "metrics_0.csv").exists()
    assert (out / "vanilla_sigma1" / "metrics_0.csv").exists()
    summary = (out / "summary.csv").read_text(encoding="utf-8").splitlines()
    assert len(summary) == 3
    assert "vanilla" in capsys.readouterr().out


def test_gen_data_bundled(tmp_path):
    out = tmp_path / "diabetes.csv"
    assert main(["gen-data", "diabetes", str(out)]) == 0
    data = load_csv(out, out.with_suffix(".schema"))
    assert (data.n, data.p) == (442, 10)


def test_gen_data_generator(tmp_path):
    out = tmp_path / "reg.csv"
    assert main(["gen-data", "synthetic_regression", str(out), "--n", "200", "--p", "4", "--seed", "2"]) == 0
    data = load_csv(out, out.with_suffix(".schema"))
    assert (data.n, data.p) == (200, 4)


def test_gen_data_from_config(small_config, tmp_path):
    out = tmp_path / "from_config.csv"
    assert main(["gen-data", str(small_config), str(out)]) == 0
    assert load_csv(out, out.with_suffix(".schema")).n == 500


def test_gen_data_unknown_spec(tmp_path, capsys):
    assert main(["gen-data", "iris", str(tmp_path / "iris.csv")]) == 1
    assert "unknown dataset spec" in capsys.readouterr().err
