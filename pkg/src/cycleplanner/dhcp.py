"""Hierarchical cycle planner: an NS/EW splitter on top of a shared straight/left splitter.

One high-level agent and one low-level agent serve every intersection.  The
low-level agent is used for both the NS and the EW direction, and all
intersections feed the same two replay buffers during training.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .ddpg import DdpgAgent, DdpgConfig
from .microsim import Simulation
from .scenario import APPROACHES, Intersection, Movement, Scenario
from .signalplan import (
    D_MIN, D_TOTAL, CycleController, CyclePlan, GreenMask, SignalState, advance,
    allocate_high, allocate_low, round_durations,
)

log = logging.getLogger(__name__)

DIRECTIONS = {"NS": ("N", "S"), "EW": ("E", "W")}


@dataclass
class DhcpConfig:
    d_total: int = D_TOTAL
    d_min: int = D_MIN
    normalize: bool = True
    include_right: bool = True
    reward: str = "queue"  # or "wave"
    reward_average: bool = False
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ddpg"] = self.ddpg.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DhcpConfig":
        d = dict(d)
        if "ddpg" in d:
            d["ddpg"] = DdpgConfig.from_dict(d["ddpg"])
        return cls(**d)


@dataclass
class Decision:
    """Everything one intersection's planner produced for one cycle."""

    s_h: np.ndarray
    a_h: float
    d_ns: float
    d_ew: float
    s_ns: np.ndarray
    a_ns: float
    s_ew: np.ndarray
    a_ew: float
    plan: CyclePlan

    @property
    def rho_ns(self) -> float:
        return (self.a_h + 1.0) / 2.0


class DhcpPlanner:
    def __init__(self, config: DhcpConfig | None = None, seed: int = 0):
        self.config = cfg = config or DhcpConfig()
        if cfg.d_total < 4 * cfg.d_min:
            raise ValueError("d_total must be at least 4 * d_min")
        ss_high, ss_low = np.random.SeedSequence(seed).spawn(2)
        self.high = DdpgAgent(self.high_dim, 1, cfg.ddpg, ss_high)
        self.low = DdpgAgent(self.low_dim, 1, cfg.ddpg, ss_low)

    @property
    def high_dim(self) -> int:
        return 24 if self.config.include_right else 16

    @property
    def low_dim(self) -> int:
        return 9

    # -- observations -------------------------------------------------------

    def _high_slots(self, ix: Intersection) -> list[int]:
        movs = (Movement.STRAIGHT, Movement.LEFT, Movement.RIGHT)
        if not self.config.include_right:
            movs = movs[:2]
        return [ix.lane(a, m) for a in APPROACHES for m in movs]

    def _sensor_pairs(self, lanes, sim: Simulation) -> np.ndarray:
        lanes = np.asarray(lanes)
        w = sim.waves()[lanes].astype(float)
        q = sim.queues()[lanes].astype(float)
        if self.config.normalize:
            cap = sim.lane_cap[lanes]
            w, q = w / cap, q / cap
        return np.column_stack([w, q]).reshape(-1)

    def high_state(self, ix: Intersection, sim: Simulation) -> np.ndarray:
        return self._sensor_pairs(self._high_slots(ix), sim)

    def low_state(self, ix: Intersection, direction: str, d_dir: float, sim: Simulation) -> np.ndarray:
        lanes = [ix.lane(a, m) for a in DIRECTIONS[direction] for m in (Movement.STRAIGHT, Movement.LEFT)]
        d = d_dir / self.config.d_total if self.config.normalize else d_dir
        return np.append(self._sensor_pairs(lanes, sim), d)

    def rewards(self, ix: Intersection, sim: Simulation) -> tuple[float, float, float]:
        vals = sim.waves() if self.config.reward == "wave" else sim.queues()
        high = self._high_slots(ix)
        r_h = -float(vals[high].sum())
        r_dir = []
        for d in ("NS", "EW"):
            lanes = [ix.lane(a, m) for a in DIRECTIONS[d] for m in (Movement.STRAIGHT, Movement.LEFT)]
            r_dir.append(-float(vals[lanes].sum()))
        return r_h, r_dir[0], r_dir[1]

    # -- acting -------------------------------------------------------------

    def high_action(self, s_h, explore: bool) -> tuple[float, float, float]:
        a_h = float(self.high.act(s_h, explore)[0])
        d_ns, d_ew = allocate_high(a_h, self.config.d_total, self.config.d_min)
        return a_h, d_ns, d_ew

    def low_decision(self, ix, sim, a_h, d_ns, d_ew, s_h, explore: bool) -> Decision:
        cfg = self.config
        s_ns = self.low_state(ix, "NS", d_ns, sim)
        a_ns = float(self.low.act(s_ns, explore)[0])
        nss, nsl = allocate_low(a_ns, d_ns, cfg.d_min)
        s_ew = self.low_state(ix, "EW", d_ew, sim)
        a_ew = float(self.low.act(s_ew, explore)[0])
        ews, ewl = allocate_low(a_ew, d_ew, cfg.d_min)
        plan = round_durations((nss, nsl, ews, ewl), cfg.d_total, cfg.d_min)
        return Decision(s_h, a_h, d_ns, d_ew, s_ns, a_ns, s_ew, a_ew, plan)

    def decide(self, ix: Intersection, sim: Simulation, explore: bool = False) -> Decision:
        s_h = self.high_state(ix, sim)
        a_h, d_ns, d_ew = self.high_action(s_h, explore)
        return self.low_decision(ix, sim, a_h, d_ns, d_ew, s_h, explore)

    def plan_cycle(self, ix: Intersection, sim: Simulation, explore: bool = False) -> CyclePlan:
        return self.decide(ix, sim, explore).plan

    # -- checkpoints --------------------------------------------------------

    def save(self, directory) -> None:
        self.high.save(directory, "high")
        self.low.save(directory, "low")

    def load(self, directory) -> None:
        self.high.load(directory, "high")
        self.low.load(directory, "low")


class DhcpController(CycleController):
    """Runs a planner's deterministic policy (or its exploring policy) as a signal controller."""

    def __init__(self, planner: DhcpPlanner, explore: bool = False):
        super().__init__(planner.config.d_total, planner.config.d_min)
        self.planner = planner
        self.explore = explore

    def reset(self, network):
        super().reset(network)
        self.decisions: list[list[Decision]] = []

    def plans_for(self, sim):
        ds = [self.planner.decide(ix, sim, self.explore) for ix in self.network.intersections]
        self.decisions.append(ds)
        return [d.plan for d in ds]

    @property
    def mean_rho_ns(self) -> float:
        rhos = [d.rho_ns for cycle in self.decisions for d in cycle]
        return float(np.mean(rhos)) if rhos else float("nan")


@dataclass
class EpisodeLog:
    episode: int
    mean_episode_reward: float
    avg_travel_time: float
    mean_rho_ns: float
    high_transitions: int
    low_transitions: int


def _cycle_rewards(planner, network, sim, acc, ticks):
    if planner.config.reward_average:
        return [tuple(v / ticks for v in a) for a in acc]
    return [planner.rewards(ix, sim) for ix in network.intersections]


def train_episode(planner: DhcpPlanner, sim: Simulation, episode: int = 0) -> EpisodeLog:
    """One training episode following the pipeline loop: act, simulate a cycle, store, update."""
    cfg = planner.config
    net = sim.network
    inters = net.intersections
    if sim.horizon % cfg.d_total:
        raise ValueError("horizon must be a multiple of the cycle length")
    sim.reset()
    masks = GreenMask(net)
    high_before = planner.high.buffer.total_added
    low_before = planner.low.buffer.total_added

    pending = []
    for ix in inters:
        s_h = planner.high_state(ix, sim)
        pending.append((s_h, *planner.high_action(s_h, True)))

    ep_reward = np.zeros(len(inters))
    rhos = []
    for _ in range(sim.horizon // cfg.d_total):
        decisions = [planner.low_decision(ix, sim, a_h, d_ns, d_ew, s_h, True)
                     for ix, (s_h, a_h, d_ns, d_ew) in zip(inters, pending)]
        rhos.extend(d.rho_ns for d in decisions)
        states = [SignalState() for _ in inters]
        acc = [np.zeros(3) for _ in inters]
        for tick in range(cfg.d_total):
            if tick:
                states = [advance(s, d.plan) for s, d in zip(states, decisions)]
            sim.step(masks.build([s.active for s in states]))
            if cfg.reward_average:
                for i, ix in enumerate(inters):
                    acc[i] += planner.rewards(ix, sim)
        rewards = _cycle_rewards(planner, net, sim, acc, cfg.d_total)

        pending = []
        for i, (ix, d, (r_h, r_ns, r_ew)) in enumerate(zip(inters, decisions, rewards)):
            s_h2 = planner.high_state(ix, sim)
            a_h2, d_ns2, d_ew2 = planner.high_action(s_h2, True)
            planner.high.store(d.s_h, [d.a_h], r_h, s_h2)
            planner.low.store(d.s_ns, [d.a_ns], r_ns, planner.low_state(ix, "NS", d_ns2, sim))
            planner.low.store(d.s_ew, [d.a_ew], r_ew, planner.low_state(ix, "EW", d_ew2, sim))
            pending.append((s_h2, a_h2, d_ns2, d_ew2))
            ep_reward[i] += r_h
        planner.high.maybe_update()
        planner.low.maybe_update()

    return EpisodeLog(
        episode=episode,
        mean_episode_reward=float(ep_reward.mean()) if len(inters) else 0.0,
        avg_travel_time=sim.average_travel_time(),
        mean_rho_ns=float(np.mean(rhos)) if rhos else float("nan"),
        high_transitions=planner.high.buffer.total_added - high_before,
        low_transitions=planner.low.buffer.total_added - low_before,
    )


def train(planner: DhcpPlanner, scenario: Scenario, episodes: int, horizon: int = 3600,
          start_episode: int = 0, callback=None) -> list[EpisodeLog]:
    """Train for ``episodes`` episodes; ``callback(log)`` runs after each one."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    sim = Simulation(scenario, horizon)
    logs = []
    for ep in range(start_episode, start_episode + episodes):
        entry = train_episode(planner, sim, ep)
        log.info("episode %d reward %.1f att %.1f rho_ns %.3f", ep, entry.mean_episode_reward,
                 entry.avg_travel_time, entry.mean_rho_ns)
        logs.append(entry)
        if callback is not None:
            callback(entry)
    return logs
