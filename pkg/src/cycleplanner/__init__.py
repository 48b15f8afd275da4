"""Hierarchical fixed-cycle traffic signal planning with DDPG.

Modules: ``scenario`` (networks and demand), ``microsim`` (lane-based
simulator), ``signalplan`` (cycle plans and phase machine), ``baselines``
(FixedTime, SOTL, MaxPressure), ``neural`` / ``ddpg`` (learning stack),
``dhcp`` (the hierarchical planner) and ``harness`` (experiments).
"""

from ._kernel import BACKEND as SIM_BACKEND

__version__ = "0.1.0"
__all__ = ["SIM_BACKEND", "__version__"]
