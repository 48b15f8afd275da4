"""Classical comparison controllers: FixedTime, SOTL and MaxPressure.

Phase-choice controllers are consulted every 15 s of green; a change of
phase inserts a 3 s yellow before the new phase turns green.  Per-intersection
sensor vectors follow the canonical 12-lane order (N, E, S, W approaches;
Straight, Left, Right within each).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import APPROACHES, Movement, RoadNetwork
from .signalplan import (
    D_MIN, D_TOTAL, PERMITTED, YELLOW, CycleController, CyclePlan, Phase, round_durations,
)

DECISION_INTERVAL = 15
SOTL_THETA = 8
SOTL_G_MIN = 10


def _slot(approach: str, movement: Movement) -> int:
    return APPROACHES.index(approach) * 3 + int(movement)


PHASE_SLOTS = {p: [_slot(a, m) for a, m in sorted(movs)] for p, movs in PERMITTED.items()}
SIGNALIZED_SLOTS = sorted(s for slots in PHASE_SLOTS.values() for s in slots)


def fixed_time_plan(d_total: int = D_TOTAL, d_min: int = D_MIN) -> CyclePlan:
    return round_durations([d_total / 4.0] * 4, d_total, d_min)


def max_pressure_choose(upstream, downstream) -> Phase:
    """Phase with the largest summed (upstream - downstream) queue; ties go to the earlier phase."""
    up = np.asarray(upstream, dtype=float)
    down = np.asarray(downstream, dtype=float)
    best, best_p = None, Phase.NSS
    for p in Phase:
        s = PHASE_SLOTS[p]
        pressure = float(np.sum(up[s] - down[s]))
        if best is None or pressure > best:
            best, best_p = pressure, p
    return best_p


def sotl_choose(phase: Phase, elapsed_green: float, queues, theta: float = SOTL_THETA,
                g_min: float = SOTL_G_MIN) -> bool:
    """True when SOTL switches to the next phase in round-robin order."""
    if theta <= 0 or g_min <= 0:
        raise ValueError("theta and g_min must be positive")
    if elapsed_green < g_min:
        return False
    q = np.asarray(queues, dtype=float)
    green = set(PHASE_SLOTS[Phase(phase)])
    red_total = sum(q[s] for s in SIGNALIZED_SLOTS if s not in green)
    return red_total >= theta


def downstream_lanes(net: RoadNetwork, ix) -> np.ndarray:
    """Lane each incoming lane's movement feeds (same movement on the exit road); -1 at boundary exits."""
    out = np.full(12, -1, dtype=np.int64)
    for a in APPROACHES:
        for m in Movement:
            road = net.road(ix.feeds[(a, m)])
            if net.node_by_id[road.end].signalized:
                out[_slot(a, m)] = net.lane_index(road.id, m)
    return out


class FixedTime(CycleController):
    def plans_for(self, sim):
        plan = fixed_time_plan(self.d_total, self.d_min)
        return [plan] * len(self.network.intersections)


@dataclass
class _PhaseState:
    phase: Phase | None = None
    green: int = 0
    since_decision: int = 0
    yellow_left: int = 0
    target: Phase | None = None


class PhaseChoiceController:
    kind = "phase"

    def __init__(self, interval: int = DECISION_INTERVAL, yellow: int = YELLOW):
        self.interval = interval
        self.yellow = yellow

    def reset(self, network: RoadNetwork) -> None:
        self.network = network
        self.states = [_PhaseState() for _ in network.intersections]
        self.decisions = 0

    def choose(self, i: int, st: _PhaseState, sim) -> Phase:
        raise NotImplementedError

    def actives(self, sim) -> list[Phase | None]:
        out = []
        for i, st in enumerate(self.states):
            if st.yellow_left:
                st.yellow_left -= 1
                if st.yellow_left == 0:
                    st.phase, st.target, st.green, st.since_decision = st.target, None, 0, 0
                out.append(None)
                continue
            if st.phase is None or st.since_decision >= self.interval:
                self.decisions += 1
                choice = self.choose(i, st, sim)
                if st.phase is None:
                    st.phase = choice
                elif choice != st.phase:
                    st.target = choice
                    st.yellow_left = self.yellow - 1
                    if st.yellow_left == 0:
                        st.phase, st.target, st.green = choice, None, 0
                    st.since_decision = 0
                    out.append(None)
                    continue
                st.since_decision = 0
            st.green += 1
            st.since_decision += 1
            out.append(st.phase)
        return out


class MaxPressure(PhaseChoiceController):
    def reset(self, network):
        super().reset(network)
        self._down = [downstream_lanes(network, ix) for ix in network.intersections]
        self._up = [np.array(ix.lanes) for ix in network.intersections]

    def choose(self, i, st, sim):
        q = sim.queues()
        down_idx = self._down[i]
        down = np.where(down_idx >= 0, q[np.maximum(down_idx, 0)], 0)
        return max_pressure_choose(q[self._up[i]], down)


class Sotl(PhaseChoiceController):
    def __init__(self, theta: float = SOTL_THETA, g_min: float = SOTL_G_MIN, **kw):
        super().__init__(**kw)
        self.theta = theta
        self.g_min = g_min

    def choose(self, i, st, sim):
        if st.phase is None:
            return Phase.NSS
        q = sim.queues()[list(self.network.intersections[i].lanes)]
        if sotl_choose(st.phase, st.green, q, self.theta, self.g_min):
            return st.phase.next()
        return st.phase
