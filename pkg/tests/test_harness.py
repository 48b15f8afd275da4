import json

import pytest

from cycleplanner import cli
from cycleplanner.harness import (
    ConfigError, RunConfig, aggregate_rewards, evaluate, read_train_log, run_compare, run_eval, run_train,
)

TINY_DDPG = {"actor_hidden": [8], "critic_hidden": [8], "batch_size": 8}


def cfg(tmp_path, **kw):
    base = {"out": str(tmp_path / "run"), "horizon": 600}
    base.update(kw)
    return RunConfig.from_dict(base)


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"controller": "magic"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"d_total": 18})
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_dict({"cycle": 60})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"roadnet": "r.json"})
    c = RunConfig.from_dict({"ddpg": TINY_DDPG, "grid": {"rows": 2}})
    assert RunConfig.from_dict(c.to_dict()) == c


def test_eval_on_empty_flow(tmp_path):
    (tmp_path / "flow.json").write_text("[]")
    cli.main(["scenario", str(tmp_path / "sc")])
    c = cfg(tmp_path, roadnet=str(tmp_path / "sc" / "roadnet.json"), flow=str(tmp_path / "flow.json"))
    m = evaluate(c)
    assert m["avg_travel_time"] == 0 and m["throughput"] == 0


@pytest.mark.parametrize("controller", ["fixed", "sotl", "maxpressure", "dhcp"])
def test_metrics_files_are_deterministic(tmp_path, controller):
    texts = []
    for k in range(2):
        c = cfg(tmp_path, controller=controller, out=str(tmp_path / f"r{k}"), ddpg=TINY_DDPG)
        run_eval(c)
        texts.append(((tmp_path / f"r{k}" / "metrics.csv").read_text(),
                      (tmp_path / f"r{k}" / "cycle_rewards.csv").read_text()))
    assert texts[0] == texts[1]
    assert len(texts[0][1].splitlines()) == 1 + 600 // 60


def test_train_writes_log_and_checkpoints(tmp_path):
    c = cfg(tmp_path, controller="dhcp", episodes=1, ddpg=TINY_DDPG)
    logs = run_train(c)
    assert len(logs) == 1
    assert len(read_train_log(tmp_path / "run" / "train_log.csv")) == 1
    assert (tmp_path / "run" / "checkpoints" / "final" / "high_actor.json").exists()
    assert (tmp_path / "run" / "checkpoints" / "best" / "low_critic.json").exists()
    with pytest.raises(ConfigError):
        run_train(cfg(tmp_path, controller="fixed", episodes=1))


def test_resume_continues_the_log(tmp_path):
    c = cfg(tmp_path, controller="dhcp", episodes=3, ddpg=TINY_DDPG)
    run_train(c)
    run_train(c, resume=True)
    rows = read_train_log(tmp_path / "run" / "train_log.csv")
    assert [r["episode"] for r in rows] == list(range(6))


def test_eval_from_checkpoint(tmp_path):
    c = cfg(tmp_path, controller="dhcp", episodes=1, ddpg=TINY_DDPG)
    run_train(c)
    ck = str(tmp_path / "run" / "checkpoints" / "final")
    m = evaluate(cfg(tmp_path, controller="dhcp", ddpg=TINY_DDPG, checkpoint=ck))
    assert 0 <= m["mean_rho_ns"] <= 1
    with pytest.raises(FileNotFoundError):
        evaluate(cfg(tmp_path, controller="dhcp", ddpg=TINY_DDPG, checkpoint=str(tmp_path / "nope")))


def test_compare_rows(tmp_path):
    configs = [cfg(tmp_path, controller=n) for n in ("fixed", "maxpressure")]
    rows = run_compare(configs, seeds=[0, 1, 2], out=str(tmp_path / "cmp"))
    assert [r.controller for r in rows] == ["fixed", "maxpressure"]
    assert all(r.n == 3 and r.std == 0 for r in rows)  # baselines ignore the seed
    assert rows[1].mean < rows[0].mean
    assert len((tmp_path / "cmp" / "comparison.csv").read_text().splitlines()) == 3
    single = run_compare(configs, seeds=[0])
    assert all(r.std == 0 for r in single)
    with pytest.raises(ConfigError):
        run_compare(configs[:1])
    with pytest.raises(ConfigError):
        run_compare([configs[0], cfg(tmp_path, controller="sotl", horizon=1200)])


def test_aggregate_rewards():
    assert aggregate_rewards([1, 2, 3, 4, 5, 6, 7, 8, 9]) == [2.5, 6.5]


def test_cli_smoke(tmp_path, capsys):
    sc = tmp_path / "sc"
    assert cli.main(["scenario", str(sc), "--ns-interval", "4", "--ew-interval", "12"]) == 0
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"horizon": 600, "ddpg": TINY_DDPG}))
    out = str(tmp_path / "o")
    assert cli.main(["eval", "--config", str(config), "--scenario", str(sc), "--controller", "maxpressure",
                     "--out", out]) == 0
    assert "maxpressure: avg travel time" in capsys.readouterr().out
    assert cli.main(["train", "--config", str(config), "--scenario", str(sc), "--episodes", "1", "--out", out]) == 0
    assert cli.main(["compare", "--config", str(config), "--scenario", str(sc), "--controllers",
                     "fixed,maxpressure,dhcp", "--checkpoint", out + "/checkpoints/final", "--out", out]) == 0
    assert "dhcp" in capsys.readouterr().out
    assert cli.main(["eval", "--controller", "fixed", "--config", str(config), "--episodes", "0"]) == 2
