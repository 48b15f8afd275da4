"""Fixed-cycle round-robin signal plans.

Phases run NSS -> NSL -> EWS -> EWL.  Every phase change inserts a 3 s
yellow carved from the tail of the outgoing phase, so a plan's four
durations always add up to the cycle length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .scenario import Intersection, Movement

YELLOW = 3
D_TOTAL = 60
D_MIN = 5


class Phase(IntEnum):
    NSS = 0
    NSL = 1
    EWS = 2
    EWL = 3

    def next(self) -> "Phase":
        return Phase((self + 1) % 4)


PERMITTED = {
    Phase.NSS: frozenset({("N", Movement.STRAIGHT), ("S", Movement.STRAIGHT)}),
    Phase.NSL: frozenset({("N", Movement.LEFT), ("S", Movement.LEFT)}),
    Phase.EWS: frozenset({("E", Movement.STRAIGHT), ("W", Movement.STRAIGHT)}),
    Phase.EWL: frozenset({("E", Movement.LEFT), ("W", Movement.LEFT)}),
}
RIGHT_TURNS = frozenset((a, Movement.RIGHT) for a in "NESW")


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class CyclePlan:
    d_nss: int
    d_nsl: int
    d_ews: int
    d_ewl: int

    def __iter__(self):
        return iter((self.d_nss, self.d_nsl, self.d_ews, self.d_ewl))

    def __getitem__(self, phase) -> int:
        return tuple(self)[int(phase)]

    @property
    def total(self) -> int:
        return sum(self)

    def validate(self, d_total: int = D_TOTAL, d_min: int = D_MIN) -> None:
        if self.total != d_total:
            raise PlanError(f"plan {tuple(self)} sums to {self.total}, expected {d_total}")
        if min(self) < d_min:
            raise PlanError(f"plan {tuple(self)} has a phase shorter than {d_min}")


def permitted_movements(phase: Phase | None) -> frozenset:
    """Signalized movements a phase serves plus the always-permitted right turns.

    ``None`` stands for yellow, during which only right turns proceed.
    """
    if phase is None:
        return RIGHT_TURNS
    return PERMITTED[Phase(phase)] | RIGHT_TURNS


def allocate_high(a_h: float, d_total: float = D_TOTAL, d_min: float = D_MIN) -> tuple[float, float]:
    """Split the cycle between NS and EW from a score in [-1, 1]."""
    if d_total < 4 * d_min:
        raise PlanError(f"cycle {d_total} s cannot hold four phases of {d_min} s")
    rho = (min(1.0, max(-1.0, float(a_h))) + 1.0) / 2.0
    slack = d_total - 4 * d_min
    return 2 * d_min + rho * slack, 2 * d_min + (1.0 - rho) * slack


def allocate_low(a_l: float, d_dir: float, d_min: float = D_MIN) -> tuple[float, float]:
    """Split a direction's duration between its straight and left phases."""
    if d_dir < 2 * d_min - 1e-9:
        raise PlanError(f"direction duration {d_dir} below 2*D_min")
    rho = (min(1.0, max(-1.0, float(a_l))) + 1.0) / 2.0
    slack = max(0.0, d_dir - 2 * d_min)
    return d_min + rho * slack, d_min + (1.0 - rho) * slack


def round_durations(reals, d_total: int = D_TOTAL, d_min: int = D_MIN) -> CyclePlan:
    """Largest-remainder rounding to integers that keep the exact total.

    Ties among equal fractional parts go to the earlier phase; fractions are
    compared at 1e-9 resolution so float noise cannot reorder a true tie.
    """
    x = [float(v) for v in reals]
    if len(x) != 4:
        raise PlanError("need exactly four durations")
    if abs(sum(x) - d_total) > 1e-6:
        raise PlanError(f"durations {x} do not sum to {d_total}")
    if min(x) < d_min - 1e-9:
        raise PlanError(f"durations {x} violate D_min={d_min}")
    floors = [math.floor(v + 1e-9) for v in x]
    frac = [v - f for v, f in zip(x, floors)]
    extra = d_total - sum(floors)
    order = sorted(range(4), key=lambda i: (-round(frac[i], 9), i))
    for i in order[:extra]:
        floors[i] += 1
    return CyclePlan(*floors)


def compose_plan(a_h: float, a_ns: float, a_ew: float,
                 d_total: int = D_TOTAL, d_min: int = D_MIN) -> CyclePlan:
    d_ns, d_ew = allocate_high(a_h, d_total, d_min)
    nss, nsl = allocate_low(a_ns, d_ns, d_min)
    ews, ewl = allocate_low(a_ew, d_ew, d_min)
    return round_durations((nss, nsl, ews, ewl), d_total, d_min)


@dataclass
class SignalState:
    phase: Phase = Phase.NSS
    elapsed: int = 0
    in_yellow: bool = False
    yellow_elapsed: int = 0

    @property
    def active(self) -> Phase | None:
        """Phase whose movements are green right now, or None during yellow."""
        return None if self.in_yellow else self.phase


def advance(signal: SignalState, plan: CyclePlan, dt: int = 1) -> SignalState:
    """State one tick later under ``plan``: green for d-3 s, then 3 s yellow, then the next phase."""
    if min(plan) < YELLOW + 1:
        raise PlanError(f"plan {tuple(plan)} leaves a phase with under 1 s of green")
    s = SignalState(signal.phase, signal.elapsed, signal.in_yellow, signal.yellow_elapsed)
    for _ in range(dt):
        s.elapsed += 1
        d = plan[s.phase]
        if s.elapsed >= d:
            s.phase, s.elapsed, s.in_yellow, s.yellow_elapsed = s.phase.next(), 0, False, 0
        elif s.elapsed >= d - YELLOW:
            s.in_yellow = True
            s.yellow_elapsed = s.elapsed - (d - YELLOW)
    return s


def phase_lane_masks(ix: Intersection) -> dict[Phase | None, np.ndarray]:
    """Per-phase arrays of the intersection's lane indices that are green."""
    out = {}
    for phase in (None, *Phase):
        movs = permitted_movements(phase)
        out[phase] = np.array([ix.lane(a, m) for a, m in sorted(movs)], dtype=np.int64)
    return out


class GreenMask:
    """Builds the per-lane discharge mask the simulator consumes each tick.

    Lanes not entering a signalized intersection are always green.
    """

    def __init__(self, network):
        self.base = np.ones(network.n_lanes, dtype=np.uint8)
        self.phase_lanes = []
        for ix in network.intersections:
            self.base[list(ix.lanes)] = 0
            self.phase_lanes.append(phase_lane_masks(ix))

    def build(self, actives) -> np.ndarray:
        mask = self.base.copy()
        for lanes, phase in zip(self.phase_lanes, actives):
            mask[lanes[phase]] = 1
        return mask


class CycleController:
    """Base for controllers that commit to a whole CyclePlan per intersection each cycle."""

    kind = "cycle"

    def __init__(self, d_total: int = D_TOTAL, d_min: int = D_MIN):
        if d_total < 4 * d_min:
            raise PlanError(f"cycle {d_total} s cannot hold four phases of {d_min} s")
        self.d_total = d_total
        self.d_min = d_min

    def reset(self, network) -> None:
        self.network = network
        self.states = [SignalState() for _ in network.intersections]
        self.plans: list[CyclePlan] = []

    def plans_for(self, sim) -> list[CyclePlan]:
        raise NotImplementedError

    def actives(self, sim) -> list[Phase | None]:
        if sim.t % self.d_total == 0:
            plans = self.plans_for(sim)
            for p in plans:
                p.validate(self.d_total, self.d_min)
            self.plans = plans
            self.states = [SignalState() for _ in plans]
        else:
            self.states = [advance(s, p) for s, p in zip(self.states, self.plans)]
        return [s.active for s in self.states]
