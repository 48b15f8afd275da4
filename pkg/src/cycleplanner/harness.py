"""Run configuration and experiment orchestration (train / eval / compare)."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import FixedTime, MaxPressure, Sotl
from .ddpg import DdpgConfig
from .dhcp import DhcpConfig, DhcpController, DhcpPlanner, EpisodeLog, train
from .episode import run_episode
from .microsim import Simulation
from .scenario import Scenario, build_grid, load_scenario, straight_flows
from .signalplan import YELLOW

log = logging.getLogger(__name__)

CONTROLLERS = ("fixed", "sotl", "maxpressure", "dhcp")
TRAIN_LOG_FIELDS = ["episode", "mean_episode_reward", "avg_travel_time", "mean_rho_ns"]


class ConfigError(ValueError):
    pass


@dataclass
class GridSpec:
    rows: int = 1
    cols: int = 1
    ns_length: float = 300.0
    ew_length: float = 300.0
    ns_interval: float = 4.0
    ew_interval: float = 12.0


@dataclass
class RunConfig:
    roadnet: str | None = None
    flow: str | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    controller: str = "fixed"
    d_total: int = 60
    d_min: int = 5
    yellow: int = YELLOW
    horizon: int = 3600
    normalize: bool = True
    include_right: bool = True
    reward: str = "queue"
    reward_average: bool = False
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)
    sotl_theta: float = 8.0
    sotl_g_min: float = 10.0
    episodes: int = 300
    seed: int = 0
    out: str = "runs/default"
    checkpoint: str | None = None

    def validate(self) -> None:
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.d_total < 4 * self.d_min:
            raise ConfigError("d_total must be at least 4 * d_min")
        if self.horizon <= 0 or self.horizon % self.d_total:
            raise ConfigError("horizon must be a positive multiple of d_total")
        if self.yellow != YELLOW:
            raise ConfigError(f"yellow is fixed at {YELLOW} s")
        if (self.roadnet is None) != (self.flow is None):
            raise ConfigError("roadnet and flow must be given together")
        if self.episodes < 1:
            raise ConfigError("episodes must be >= 1")
        if self.reward not in ("queue", "wave"):
            raise ConfigError("reward must be 'queue' or 'wave'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ddpg"] = self.ddpg.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "grid" in d:
            d["grid"] = GridSpec(**d["grid"])
        if "ddpg" in d:
            d["ddpg"] = DdpgConfig.from_dict(d["ddpg"])
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def scenario(self) -> Scenario:
        if self.roadnet is not None:
            return load_scenario(self.roadnet, self.flow)
        g = self.grid
        net = build_grid(g.rows, g.cols, g.ns_length, g.ew_length)
        return Scenario(net, straight_flows(net, g.ns_interval, g.ew_interval, 0.0, self.horizon))

    def dhcp_config(self) -> DhcpConfig:
        return DhcpConfig(self.d_total, self.d_min, self.normalize, self.include_right,
                          self.reward, self.reward_average, self.ddpg)

    def scenario_key(self) -> tuple:
        if self.roadnet is not None:
            return ("files", os.path.abspath(self.roadnet), os.path.abspath(self.flow))
        return ("grid", tuple(asdict(self.grid).items()), self.horizon)


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _csv_text(header, rows) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_manifest(cfg: RunConfig, out: Path, command: str) -> None:
    _write_atomic(out / "run.json", json.dumps({"command": command, "config": cfg.to_dict()}, indent=2))


def aggregate_rewards(rewards, group: int = 4) -> list[float]:
    """Average consecutive groups of ``group`` rewards (15 s rewards onto the 60 s cycle grid)."""
    r = np.asarray(rewards, dtype=float)
    n = len(r) // group
    return r[: n * group].reshape(n, group).mean(axis=1).tolist()


def make_controller(cfg: RunConfig, planner: DhcpPlanner | None = None):
    if cfg.controller == "fixed":
        return FixedTime(cfg.d_total, cfg.d_min)
    if cfg.controller == "maxpressure":
        return MaxPressure()
    if cfg.controller == "sotl":
        return Sotl(cfg.sotl_theta, cfg.sotl_g_min)
    if planner is None:
        planner = DhcpPlanner(cfg.dhcp_config(), cfg.seed)
        if cfg.checkpoint:
            if not Path(cfg.checkpoint).is_dir():
                raise FileNotFoundError(f"checkpoint directory {cfg.checkpoint} not found")
            planner.load(cfg.checkpoint)
    return DhcpController(planner, explore=False)


def evaluate(cfg: RunConfig, planner: DhcpPlanner | None = None, scenario: Scenario | None = None) -> dict:
    """One noise-free episode; returns the metrics record without writing files."""
    cfg.validate()
    scenario = scenario or cfg.scenario()
    sim = Simulation(scenario, cfg.horizon)
    ctrl = make_controller(cfg, planner)
    cycle_rewards = []
    inters = sim.network.intersections

    def sample(s):
        if s.t % cfg.d_total == 0 and inters:
            q = s.queues()
            cycle_rewards.append(-float(np.mean([q[list(ix.lanes)].sum() for ix in inters])))

    res = run_episode(sim, ctrl, cfg.horizon, on_tick=sample)
    return {
        "controller": cfg.controller,
        "seed": cfg.seed,
        "avg_travel_time": res.avg_travel_time,
        "throughput": res.throughput,
        "spawned": res.spawned,
        "mean_rho_ns": ctrl.mean_rho_ns if isinstance(ctrl, DhcpController) else float("nan"),
        "cycle_rewards": cycle_rewards,
    }


def run_eval(cfg: RunConfig) -> dict:
    metrics = evaluate(cfg)
    out = Path(cfg.out)
    write_manifest(cfg, out, "eval")
    keys = ["controller", "seed", "avg_travel_time", "throughput", "spawned", "mean_rho_ns"]
    _write_atomic(out / "metrics.csv", _csv_text(keys, [[repr(metrics[k]) if isinstance(metrics[k], float)
                                                         else metrics[k] for k in keys]]))
    _write_atomic(out / "cycle_rewards.csv",
                  _csv_text(["cycle", "reward"], [[i, repr(r)] for i, r in enumerate(metrics["cycle_rewards"])]))
    return metrics


def read_train_log(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return [{k: float(v) if k != "episode" else int(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def run_train(cfg: RunConfig, resume: bool = False, callback=None) -> list[EpisodeLog]:
    """Train DHCP, appending to ``<out>/train_log.csv`` and refreshing final/best checkpoints."""
    cfg.validate()
    if cfg.controller != "dhcp":
        raise ConfigError("train requires controller 'dhcp'")
    out = Path(cfg.out)
    log_path = out / "train_log.csv"
    final_dir, best_dir = out / "checkpoints" / "final", out / "checkpoints" / "best"
    previous = read_train_log(log_path) if resume else []
    start = len(previous)
    seed = cfg.seed if start == 0 else int(np.random.SeedSequence([cfg.seed, start]).generate_state(1)[0])
    planner = DhcpPlanner(cfg.dhcp_config(), seed)
    if start:
        planner.load(final_dir)
    best = max((r["mean_episode_reward"] for r in previous), default=-np.inf)
    write_manifest(cfg, out, "train")
    rows = [[r["episode"], repr(r["mean_episode_reward"]), repr(r["avg_travel_time"]), repr(r["mean_rho_ns"])]
            for r in previous]

    def on_episode(entry: EpisodeLog):
        nonlocal best
        rows.append([entry.episode, repr(entry.mean_episode_reward), repr(entry.avg_travel_time),
                     repr(entry.mean_rho_ns)])
        _write_atomic(log_path, _csv_text(TRAIN_LOG_FIELDS, rows))
        if entry.mean_episode_reward > best:
            best = entry.mean_episode_reward
            planner.save(best_dir)
        if callback is not None:
            callback(entry)

    logs = train(planner, cfg.scenario(), cfg.episodes, cfg.horizon, start, on_episode)
    planner.save(final_dir)
    return logs


@dataclass
class CompareRow:
    controller: str
    mean: float
    std: float
    n: int


def _eval_member(args):
    cfg, seed = args
    c = RunConfig.from_dict({**cfg.to_dict(), "seed": seed})
    return evaluate(c)["avg_travel_time"]


def run_compare(configs: list[RunConfig], seeds=(0,), out: str | None = None, jobs: int = 1) -> list[CompareRow]:
    """Mean and population std of average travel time over ``seeds`` per config, in input order."""
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    keys = {c.scenario_key() for c in configs}
    if len(keys) != 1:
        raise ConfigError("compared configs must share one scenario")
    tasks = [(c, s) for c in configs for s in seeds]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            values = list(pool.map(_eval_member, tasks))
    else:
        values = [_eval_member(t) for t in tasks]
    rows = []
    n = len(seeds)
    for i, c in enumerate(configs):
        v = np.array(values[i * n:(i + 1) * n])
        rows.append(CompareRow(c.controller, float(v.mean()), float(v.std()), n))
    if out is not None:
        _write_atomic(Path(out) / "comparison.csv",
                      _csv_text(["controller", "mean_avg_travel_time", "std_avg_travel_time", "n_seeds"],
                                [[r.controller, repr(r.mean), repr(r.std), r.n] for r in rows]))
    return rows
