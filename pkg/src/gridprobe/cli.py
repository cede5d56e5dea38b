"""Command-line entry points.

Subcommands mirror the pipeline stages: validate a feeder file, reduce a
feeder to its probed equivalent, simulate a probing record, recover a
grid from a record, and run Monte Carlo sweeps. Data errors exit 1 with
a JSON message on stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import fileio
from .errors import ConfigError, GridProbeError
from .experiments import ExperimentConfig, run_experiment, write_results
from .grouping import assemble_families, group_column_exact, group_column_noisy
from .probing import (NoiseModel, ProbingPlan, estimate_resistances,
                      simulate_probing)
from .recovery import recover_full, recover_partial
from .reduction import reduce_grid


def _parse_bus_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(b) for b in text.replace(" ", "").split(",") if b)
    except ValueError:
        raise ConfigError(f"bad bus list {text!r}") from None


def _cmd_validate(args) -> int:
    g = fileio.load_feeder(args.feeder)
    print(json.dumps({
        "buses": len(g.nodes),
        "edges": len(g.edges),
        "leaves": sorted(g.leaves),
        "depth": g.tree_depth,
        "r_min": min(r for _, _, r, _ in g.edges),
        "has_reactances": all(x is not None for _, _, _, x in g.edges),
    }, sort_keys=True))
    return 0


def _cmd_reduce(args) -> int:
    g = fileio.load_feeder(args.feeder)
    probing = (sorted(g.leaves) if args.all_leaves
               else _parse_bus_list(args.probing))
    rg = reduce_grid(g, probing)
    if args.out:
        fileio.save_feeder(rg, args.out,
                           comment=f"reduced from {args.feeder}, probing "
                                   f"{','.join(map(str, probing))}")
    else:
        print(f"# root {rg.root}, upstream resistance {rg.root_upstream_r!r}")
        for u, v, r in rg.edges:
            print(f"{u},{v},{r!r}")
    return 0


def _cmd_probe(args) -> int:
    raw = fileio.load_config(args.config)
    cfg = ExperimentConfig.from_dict(raw, base_dir=os.path.dirname(args.config)
                                     or ".")
    g = fileio.load_feeder(cfg.feeder_path)
    buses = cfg.probing_buses(g)
    delta = cfg.delta_map(buses)
    periods = args.periods if args.periods else max(cfg.periods)
    plan = ProbingPlan.blocks(buses, delta, periods)
    seed = cfg.seed if args.seed is None else args.seed
    noise = NoiseModel(sigma_p=cfg.noise.sigma_p, sigma_q=cfg.noise.sigma_q,
                       sigma_w=cfg.noise.sigma_w, seed=seed)
    record = simulate_probing(g, plan, noise, mode=cfg.mode)
    fileio.save_record(record, args.out)
    print(json.dumps({"out": args.out, "mode": cfg.mode,
                      "buses": len(buses), "periods_per_bus": periods}))
    return 0


def _cmd_recover(args) -> int:
    record = fileio.load_record(args.record)
    estimate = estimate_resistances(record)
    buses = list(estimate.col_nodes)
    if args.r_min is None:
        groupings = [group_column_exact(estimate.column(m), m,
                                        mode=record.mode) for m in buses]
        tol = 1e-9
    else:
        groupings = [group_column_noisy(estimate.column(m), m, args.r_min,
                                        mode=record.mode) for m in buses]
        tol = args.r_min / 2
    families = assemble_families(groupings, value_tol=tol)
    report = (recover_full(families) if record.mode == "complete"
              else recover_partial(families))
    if args.out:
        fileio.save_report(report, args.out)
        print(json.dumps({"out": args.out, "mode": report.mode,
                          "edges": len(report.graph.edges)}))
    else:
        edges = report.graph.edges
        for edge in edges:
            u, v, r = edge[0], edge[1], edge[2]
            print(f"{u},{v},{r!r}")
    return 0


def _cmd_montecarlo(args) -> int:
    raw = fileio.load_config(args.config)
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = ExperimentConfig.from_dict(raw, base_dir=os.path.dirname(args.config)
                                     or ".")
    result = run_experiment(cfg)
    write_results(result, args.out)
    print("T_m,error_pct,mpe_pct")
    for row in result.rows:
        mpe = "" if row["mpe_pct"] is None else f"{row['mpe_pct']:.4f}"
        print(f"{row['periods']},{row['error_pct']:.4f},{mpe}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridprobe",
        description="Identify feeder topology and line resistances from "
                    "inverter probing data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a feeder file")
    p.add_argument("feeder")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("reduce", help="reduce a feeder to its probed grid")
    p.add_argument("feeder")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--probing", help="comma-separated bus ids")
    group.add_argument("--all-leaves", action="store_true")
    p.add_argument("--out", help="output feeder CSV path")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("probe", help="simulate probing, write a record")
    p.add_argument("feeder", nargs="?", help="unused when the config "
                   "names the feeder; kept for symmetry")
    p.add_argument("--config", required=True)
    p.add_argument("--periods", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("recover", help="recover a grid from a record")
    p.add_argument("record")
    p.add_argument("--r-min", type=float, dest="r_min",
                   help="noisy grouping threshold; omit for exact grouping")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_recover)

    p = sub.add_parser("montecarlo", help="run a Monte Carlo sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_montecarlo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GridProbeError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
