"""Drive one simulated episode under a signal controller."""

from __future__ import annotations

from dataclasses import dataclass

from .microsim import Simulation
from .signalplan import GreenMask


@dataclass
class EpisodeResult:
    avg_travel_time: float
    throughput: int
    spawned: int


def run_episode(sim: Simulation, controller, horizon: int | None = None, on_tick=None) -> EpisodeResult:
    """Reset ``sim`` and ``controller`` and simulate ``horizon`` ticks.

    ``on_tick(sim)`` runs after every tick, when given.
    """
    horizon = sim.horizon if horizon is None else int(horizon)
    sim.reset()
    controller.reset(sim.network)
    masks = GreenMask(sim.network)
    for _ in range(horizon):
        sim.step(masks.build(controller.actives(sim)))
        if on_tick is not None:
            on_tick(sim)
    return EpisodeResult(sim.average_travel_time(horizon), sim.n_finished, sim.n_spawned)
