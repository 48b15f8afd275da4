"""Deterministic 1 Hz lane-based spatial-queue simulator.

Vehicles advance at free speed until they close to jam spacing behind their
leader or reach the stop line.  A head vehicle crosses instantaneously when
its lane is green, the lane's discharge headway has elapsed, and the next lane
on its route has room at its entrance.

Tick order for the interval [t, t+1): spawns scheduled at ``t`` join their
entry lane's pending queue and the head of every pending queue tries to
enter; then every lane moves front-to-back; then stop-line departures and
network exits are resolved in lane-index order.  Events are stamped ``t+1``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .scenario import Scenario

V_MAX = 16.67
VEHICLE_LENGTH = 5.0
MIN_GAP = 2.5
JAM_SPACING = VEHICLE_LENGTH + MIN_GAP
SAT_HEADWAY = 2.0
QUEUE_SPEED = 0.1


@dataclass
class VehicleRecord:
    id: int
    route: tuple[str, ...]
    route_index: int
    lane: int | None
    position: float
    speed: float
    spawn_time: float
    finish_time: float | None


@dataclass
class Events:
    spawned: list[int] = field(default_factory=list)
    transfers: list[tuple[int, int, int]] = field(default_factory=list)
    finished: list[int] = field(default_factory=list)


def average_travel_time(spawn_times, finish_times, horizon: float) -> float:
    """Mean trip time; unfinished trips are truncated at ``horizon``.

    ``finish_times`` uses NaN for vehicles that have not left the network
    (including those still waiting to enter).
    """
    spawn = np.asarray(spawn_times, dtype=float)
    if spawn.size == 0:
        return 0.0
    finish = np.asarray(finish_times, dtype=float)
    end = np.where(np.isnan(finish), float(horizon), finish)
    return float(np.mean(end - spawn))


class Simulation:
    def __init__(self, scenario: Scenario, horizon: int = 3600, *, v_max: float = V_MAX,
                 jam_spacing: float = JAM_SPACING, headway: float = SAT_HEADWAY, kernel=None):
        self.scenario = scenario
        self.network = net = scenario.network
        self.horizon = int(horizon)
        self.v_max = float(v_max)
        self.jam = float(jam_spacing)
        self.headway = float(headway)
        self._tick = kernel or _kernel.tick

        n = net.n_lanes
        self.lane_len = np.array([net.lane_length(k) for k in range(n)], dtype=np.float64)
        self.lane_cap = np.floor(self.lane_len / self.jam + 1e-9).astype(np.int32)
        if (self.lane_cap < 1).any():
            raise ValueError("every road must fit at least one vehicle at jam spacing")
        self._max_cap = int(self.lane_cap.max())

        self._route_cache: dict[tuple[str, ...], list[int]] = {}
        self._schedule = [(t, r) for t, r in scenario.schedule(self.horizon) if t < self.horizon]
        for _, r in self._schedule:
            self._lanes_for(r)
        self.reset()

    def _lanes_for(self, route) -> list[int]:
        route = tuple(route)
        if route not in self._route_cache:
            self._route_cache[route] = self.network.route_lanes(route)
        return self._route_cache[route]

    # -- state --------------------------------------------------------------

    def reset(self) -> None:
        n = self.network.n_lanes
        self.t = 0
        self.lane_count = np.zeros(n, dtype=np.int32)
        self.lane_slots = np.full((n, self._max_cap), -1, dtype=np.int32)
        self.lane_timer = np.full(n, 1e9, dtype=np.float64)
        self._nveh = 0
        self._alloc(max(16, len(self._schedule)))
        self._routes: list[tuple[str, ...]] = []
        self._route_flat = np.zeros(0, dtype=np.int32)
        self._route_len = 0
        self._next_sched = 0
        self.pending: dict[int, deque] = {}
        self.n_pending = 0
        self.n_finished = 0
        self.n_in_network = 0
        self._out_moves = np.zeros((n, 3), dtype=np.int32)
        self._out_fin = np.zeros(n, dtype=np.int32)
        self._queues = None

    _VEH_ARRAYS = {
        "veh_pos": (0.0, np.float64),
        "veh_speed": (0.0, np.float64),
        "veh_lane": (-1, np.int32),
        "veh_spawn": (0.0, np.float64),
        "veh_finish": (np.nan, np.float64),
        "route_ptr": (0, np.int32),
        "route_end": (0, np.int32),
    }

    def _alloc(self, cap: int) -> None:
        old = self._nveh
        for name, (fill, dtype) in self._VEH_ARRAYS.items():
            arr = np.full(cap, fill, dtype=dtype)
            if old:
                arr[:old] = getattr(self, name)[:old]
            setattr(self, name, arr)
        self._veh_cap = cap

    def _new_vehicle(self, route, spawn_time: float) -> int:
        vid = self._nveh
        if vid >= self._veh_cap:
            self._alloc(2 * self._veh_cap)
        lanes = self._lanes_for(route)
        start, end = self._route_len, self._route_len + len(lanes)
        if end > self._route_flat.shape[0]:
            grown = np.zeros(max(2 * self._route_flat.shape[0], end, 64), dtype=np.int32)
            grown[:start] = self._route_flat[:start]
            self._route_flat = grown
        self._route_flat[start:end] = lanes
        self._route_len = end
        self.route_ptr[vid] = start
        self.route_end[vid] = end
        self._routes.append(tuple(route))
        self.veh_spawn[vid] = spawn_time
        self._nveh += 1
        return vid

    def _first_lane(self, vid: int) -> int:
        return int(self._route_flat[self.route_ptr[vid]])

    def _has_room(self, lane: int) -> bool:
        m = self.lane_count[lane]
        if m >= self.lane_cap[lane]:
            return False
        return m == 0 or self.veh_pos[self.lane_slots[lane, m - 1]] >= self.jam - 1e-9

    def _enter(self, vid: int, lane: int, position: float = 0.0, speed: float = 0.0) -> None:
        m = self.lane_count[lane]
        self.lane_slots[lane, m] = vid
        self.lane_count[lane] = m + 1
        self.veh_pos[vid] = position
        self.veh_speed[vid] = speed
        self.veh_lane[vid] = lane
        self.n_in_network += 1

    def insert_vehicle(self, route, position: float = 0.0, speed: float = 0.0,
                       spawn_time: float | None = None) -> int:
        """Place a vehicle directly on the first lane of ``route``, behind its current tail.

        Meant for constructing test situations; scheduled demand goes through
        the pending queues instead.
        """
        lanes = self._lanes_for(route)
        lane = lanes[0]
        m = self.lane_count[lane]
        if not 0 <= position <= self.lane_len[lane]:
            raise ValueError("position outside lane")
        if m >= self.lane_cap[lane]:
            raise ValueError("lane is full")
        if m > 0 and self.veh_pos[self.lane_slots[lane, m - 1]] - position < self.jam - 1e-9:
            raise ValueError("vehicle would overlap the current tail of the lane")
        vid = self._new_vehicle(route, self.t if spawn_time is None else spawn_time)
        self._enter(vid, lane, position, speed)
        self._queues = None
        return vid

    # -- stepping -----------------------------------------------------------

    def step(self, green: np.ndarray) -> Events:
        """Advance one second.  ``green[k]`` is nonzero when lane ``k`` may discharge."""
        ev = Events()
        t = self.t
        sched = self._schedule
        while self._next_sched < len(sched) and sched[self._next_sched][0] <= t:
            st, route = sched[self._next_sched]
            self._next_sched += 1
            vid = self._new_vehicle(route, float(st))
            self.pending.setdefault(self._first_lane(vid), deque()).append(vid)
            self.n_pending += 1
        for lane in sorted(self.pending):
            q = self.pending[lane]
            if q and self._has_room(lane):
                vid = q.popleft()
                self._enter(vid, lane, 0.0, 0.0)
                self.n_pending -= 1
                ev.spawned.append(vid)
            if not q:
                del self.pending[lane]

        n_moves, n_fin = self._tick(
            float(t + 1), green, self.lane_len, self.lane_cap, self.lane_count, self.lane_slots,
            self.lane_timer, self.veh_pos, self.veh_speed, self.veh_lane, self._route_flat,
            self.route_ptr, self.route_end, self.veh_finish, self.v_max, self.jam, self.headway, 1.0,
            self._out_moves, self._out_fin,
        )
        if n_moves:
            ev.transfers = [tuple(row) for row in self._out_moves[:n_moves].tolist()]
        if n_fin:
            ev.finished = self._out_fin[:n_fin].tolist()
            self.n_finished += n_fin
            self.n_in_network -= n_fin
        self.t = t + 1
        self._queues = None
        return ev

    # -- sensors ------------------------------------------------------------

    @property
    def n_spawned(self) -> int:
        """Vehicles whose scheduled (or manual) entry time has been reached."""
        return self._nveh

    def waves(self) -> np.ndarray:
        return self.lane_count.astype(np.int64)

    def queues(self) -> np.ndarray:
        if self._queues is None:
            n = self._nveh
            lanes = self.veh_lane[:n]
            mask = (lanes >= 0) & (self.veh_speed[:n] < QUEUE_SPEED)
            self._queues = np.bincount(lanes[mask], minlength=self.network.n_lanes).astype(np.int64)
        return self._queues

    def _check_lane(self, lane: int) -> None:
        if not 0 <= lane < self.network.n_lanes:
            raise KeyError(f"unknown lane {lane}")

    def wave(self, lane: int) -> int:
        self._check_lane(lane)
        return int(self.lane_count[lane])

    def queue(self, lane: int) -> int:
        self._check_lane(lane)
        return int(self.queues()[lane])

    def lane_vehicles(self, lane: int) -> list[int]:
        """Vehicle ids on ``lane``, stop line first."""
        self._check_lane(lane)
        return self.lane_slots[lane, : self.lane_count[lane]].tolist()

    def vehicle(self, vid: int) -> VehicleRecord:
        if not 0 <= vid < self._nveh:
            raise KeyError(f"unknown vehicle {vid}")
        lane = int(self.veh_lane[vid])
        route = self._routes[vid]
        fin = self.veh_finish[vid]
        start = self.route_ptr[vid] - (self.route_end[vid] - len(route))
        return VehicleRecord(
            id=vid, route=route, route_index=int(start), lane=None if lane < 0 else lane,
            position=float(self.veh_pos[vid]), speed=float(self.veh_speed[vid]),
            spawn_time=float(self.veh_spawn[vid]), finish_time=None if math.isnan(fin) else float(fin),
        )

    def min_spacing(self) -> float:
        """Smallest gap between consecutive vehicles on any lane (inf if none)."""
        best = math.inf
        for k in np.nonzero(self.lane_count > 1)[0]:
            pos = self.veh_pos[self.lane_slots[k, : self.lane_count[k]]]
            best = min(best, float(np.min(pos[:-1] - pos[1:])))
        return best

    def conserved(self) -> bool:
        return self.n_spawned == self.n_in_network + self.n_finished + self.n_pending

    @property
    def spawn_times(self) -> np.ndarray:
        return self.veh_spawn[: self._nveh].copy()

    @property
    def finish_times(self) -> np.ndarray:
        return self.veh_finish[: self._nveh].copy()

    def average_travel_time(self, horizon: float | None = None) -> float:
        return average_travel_time(self.spawn_times, self.finish_times,
                                   self.horizon if horizon is None else horizon)
