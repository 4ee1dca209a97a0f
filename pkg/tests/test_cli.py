import json

import pytest

from storage_dqn.cli import main
from storage_dqn.config import DEFAULTS, RunConfig, parse_capacities
from storage_dqn.agent import ConfigError

SMALL = ["--set", "data.days=3", "--set", "data.train_days=2", "--set", "data.test_days=1",
         "--set", "agent.epochs=2", "--set", "agent.warmup_transitions=32",
         "--set", "agent.trunk_sizes=8", "--set", "agent.stream_sizes=4"]


def test_config_round_trip(tmp_path):
    cfg = RunConfig().override(["agent.epochs=7", "tariff.name=tata", "sweep.cross=false"])
    path = tmp_path / "c.cfg"
    path.write_text(cfg.dump())
    assert RunConfig.load(path) == cfg
    assert set(cfg) == set(DEFAULTS)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig().override(["agent.epochs=many"])
    with pytest.raises(ConfigError):
        RunConfig().override(["nope.key=1"])
    with pytest.raises(FileNotFoundError):
        RunConfig.load(tmp_path / "missing.cfg")


def test_parse_capacities():
    assert parse_capacities("5000..30000 step 5000") == [5000, 10000, 15000, 20000, 25000, 30000]
    assert parse_capacities("0, 900") == [0, 900]
    with pytest.raises(ConfigError):
        parse_capacities("lots")


def test_train_eval_explain(tmp_path):
    run = tmp_path / "run"
    assert main(["train", *SMALL, "--out", str(run)]) == 0
    manifest = json.loads((run / "manifest.json").read_text())
    assert [c["epoch"] for c in manifest["checkpoints"]] == [0, 2]
    ckpt = run / manifest["checkpoints"][-1]["file"]
    assert main(["eval", *SMALL, "--checkpoint", str(ckpt), "--out", str(tmp_path / "ev")]) == 0
    summary = json.loads((tmp_path / "ev" / "summary.json").read_text())
    assert summary["oracle_savings_pct"] >= summary["savings_pct"]
    assert main(["explain", *SMALL, "--run", str(run), "--out", str(tmp_path / "ex")]) == 0
    assert len(list((tmp_path / "ex" / "histograms").iterdir())) == 2


def test_oracle_and_env_out(tmp_path, monkeypatch):
    monkeypatch.setenv("STORAGE_DQN_OUT", str(tmp_path / "env"))
    assert main(["oracle", *SMALL]) == 0
    assert (tmp_path / "env" / "summary.json").exists()


def test_gen_data(tmp_path, capsys):
    out = tmp_path / "l.csv"
    assert main(["gen-data", "--days", "2", "--seed", "5", "--output", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 49


def test_user_errors_exit_2(tmp_path):
    assert main(["train", "--set", "data.csv=" + str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 2
    assert main(["gen-data", "--days", "0", "--output", str(tmp_path / "x.csv")]) == 2
    assert main(["eval", *SMALL, "--checkpoint", str(tmp_path / "no.ckpt")]) == 2


def test_help_lists_keys(capsys):
    with pytest.raises(SystemExit):
        main(["sweep", "--help"])
    text = capsys.readouterr().out
    assert "sweep.capacities" in text and "agent.batch_size" in text
