"""Command line entry point: ``cycleplanner {train,eval,compare,scenario}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import _kernel
from .harness import CONTROLLERS, ConfigError, RunConfig, run_compare, run_eval, run_train
from .scenario import build_grid, save_flows, save_roadnet, straight_flows


def _base_config(args) -> dict:
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.scenario:
        d = Path(args.scenario)
        data["roadnet"] = str(d / "roadnet.json")
        data["flow"] = str(d / "flow.json")
    for key in ("controller", "episodes", "seed", "out", "checkpoint"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    return data


def _add_common(p: argparse.ArgumentParser, controller: bool = True) -> None:
    p.add_argument("--config", help="JSON run config; flags override its values")
    p.add_argument("--scenario", help="directory holding roadnet.json and flow.json")
    if controller:
        p.add_argument("--controller", choices=CONTROLLERS)
    p.add_argument("--episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cycleplanner", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the hierarchical planner")
    _add_common(p)
    p.add_argument("--resume", action="store_true", help="continue from <out>/checkpoints/final")

    p = sub.add_parser("eval", help="run one noise-free episode and write metrics")
    _add_common(p)
    p.add_argument("--checkpoint", help="planner checkpoint directory (dhcp only)")

    p = sub.add_parser("compare", help="average travel time per controller over seeds")
    _add_common(p, controller=False)
    p.add_argument("--controllers", default="fixed,sotl,maxpressure")
    p.add_argument("--seeds", default="0")
    p.add_argument("--checkpoint", help="planner checkpoint directory for dhcp rows")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("scenario", help="write a synthetic grid scenario to a directory")
    p.add_argument("out")
    p.add_argument("--rows", type=int, default=1)
    p.add_argument("--cols", type=int, default=1)
    p.add_argument("--ns-length", type=float, default=300.0)
    p.add_argument("--ew-length", type=float, default=300.0)
    p.add_argument("--ns-interval", type=float, default=4.0)
    p.add_argument("--ew-interval", type=float, default=12.0)
    p.add_argument("--horizon", type=float, default=3600.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).info("simulator kernel: %s", _kernel.BACKEND)
    try:
        if args.command == "scenario":
            net = build_grid(args.rows, args.cols, args.ns_length, args.ew_length)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            save_roadnet(net, out / "roadnet.json")
            save_flows(straight_flows(net, args.ns_interval, args.ew_interval, 0.0, args.horizon),
                       out / "flow.json")
            print(f"wrote {out / 'roadnet.json'} and {out / 'flow.json'}")
        elif args.command == "train":
            data = _base_config(args)
            data.setdefault("controller", "dhcp")
            cfg = RunConfig.from_dict(data)
            logs = run_train(cfg, resume=args.resume,
                             callback=lambda e: print(f"episode {e.episode}: reward {e.mean_episode_reward:.1f} "
                                                      f"att {e.avg_travel_time:.1f} rho_ns {e.mean_rho_ns:.3f}"))
            print(f"trained {len(logs)} episodes; log and checkpoints in {cfg.out}")
        elif args.command == "eval":
            cfg = RunConfig.from_dict(_base_config(args))
            m = run_eval(cfg)
            rho = "" if math.isnan(m["mean_rho_ns"]) else f" rho_ns {m['mean_rho_ns']:.3f}"
            print(f"{m['controller']}: avg travel time {m['avg_travel_time']:.2f} s, "
                  f"throughput {m['throughput']}/{m['spawned']}{rho}")
        elif args.command == "compare":
            data = _base_config(args)
            configs = []
            for name in args.controllers.split(","):
                d = dict(data, controller=name.strip())
                if name.strip() == "dhcp" and args.checkpoint:
                    d["checkpoint"] = args.checkpoint
                configs.append(RunConfig.from_dict(d))
            seeds = [int(s) for s in args.seeds.split(",")]
            rows = run_compare(configs, seeds, out=data.get("out", "runs/default"), jobs=args.jobs)
            print(f"{'controller':<12} {'avg travel time':>22}")
            for r in rows:
                print(f"{r.controller:<12} {r.mean:>12.2f} +/- {r.std:<7.2f}")
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
