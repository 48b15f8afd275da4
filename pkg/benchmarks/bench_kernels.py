"""Compare the compiled and pure-Python simulator kernels on identical episodes.

    python3 benchmarks/bench_kernels.py [--rows 2 --cols 2 --horizon 3600 --repeat 3]
"""

import argparse
import time

import numpy as np

from cycleplanner import _kernel
from cycleplanner.baselines import MaxPressure
from cycleplanner.episode import run_episode
from cycleplanner.microsim import Simulation
from cycleplanner.scenario import asymmetric_scenario


def bench(kernel, scenario, horizon, repeat):
    best, sim = np.inf, None
    for _ in range(repeat):
        sim = Simulation(scenario, horizon, kernel=kernel)
        t0 = time.perf_counter()
        run_episode(sim, MaxPressure())
        best = min(best, time.perf_counter() - t0)
    return best, sim


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=2)
    ap.add_argument("--cols", type=int, default=2)
    ap.add_argument("--horizon", type=int, default=3600)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    sc = asymmetric_scenario(2.0, 4.0, rows=args.rows, cols=args.cols)
    results = {}
    for name, kernel in _kernel.KERNELS.items():
        results[name] = bench(kernel, sc, args.horizon, args.repeat)
        secs, sim = results[name]
        print(f"{name:<8} {secs:8.3f} s/episode  {args.horizon / secs:10.0f} ticks/s  "
              f"{sim.n_spawned} vehicles, avg travel time {sim.average_travel_time():.2f} s")
    if len(results) == 2:
        (tp, sp), (tc, sc_) = results["python"], results["cython"]
        same = np.array_equal(sp.finish_times, sc_.finish_times, equal_nan=True)
        print(f"speedup {tp / tc:.1f}x, identical finish times: {same}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
