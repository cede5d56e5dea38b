"""Monte Carlo experiment driver for probing-based feeder identification.

An experiment sweeps the per-bus probing duration over a list of values
and, for each one, repeatedly simulates probing on a known feeder,
runs the full recovery pipeline and scores the result against ground
truth. Trials that raise any pipeline error count as topology errors;
per-trial seeds are derived from (seed, periods, trial) so results do not
depend on execution order.
"""

from __future__ import annotations

import csv
import json
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .errors import ConfigError, GridProbeError
from .feeder import FeederGraph
from .grouping import assemble_families, group_column_noisy
from .probing import (NoiseModel, ProbingPlan, estimate_resistances,
                      simulate_probing)
from .recovery import compare_graphs, recover_full, recover_partial
from .reduction import reduce_grid

PROBING_POLICIES = ("all-buses", "all-leaves")


@dataclass(frozen=True)
class ExperimentConfig:
    feeder_path: str
    mode: str
    probing: str | tuple[int, ...]
    periods: tuple[int, ...]
    noise: NoiseModel
    r_min: float
    trials: int
    seed: int
    s_base_kva: float
    loads_kw: dict[int, float] = field(default_factory=dict)
    delta_policy: str = "rated"
    delta_multiple: float = 1.0
    delta_default_kw: float | None = None
    delta_value_pu: float | None = None

    def __post_init__(self):
        if self.mode not in ("complete", "partial"):
            raise ConfigError(f"mode must be complete or partial, "
                              f"got {self.mode!r}")
        if isinstance(self.probing, str):
            if self.probing not in PROBING_POLICIES:
                raise ConfigError(f"unknown probing policy {self.probing!r}")
        elif not self.probing:
            raise ConfigError("explicit probing list is empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.periods:
            raise ConfigError("periods sweep is empty")
        if any(int(t) != t or t < 1 for t in self.periods):
            raise ConfigError("periods must be positive integers")
        if self.r_min <= 0:
            raise ConfigError("r_min must be positive")
        if self.delta_policy not in ("rated", "fixed"):
            raise ConfigError(f"unknown delta policy {self.delta_policy!r}")
        if self.delta_policy == "fixed" and not self.delta_value_pu:
            raise ConfigError("fixed delta policy needs value_pu")
        if self.delta_policy == "rated" and self.s_base_kva <= 0:
            raise ConfigError("s_base_kva must be positive")

    @staticmethod
    def from_dict(raw: dict, base_dir: str = ".") -> "ExperimentConfig":
        """Build a config from a parsed YAML mapping.

        Relative feeder paths resolve against base_dir (normally the
        directory the config file came from).
        """
        try:
            feeder = raw["feeder"]
            mode = raw["mode"]
            periods = tuple(int(t) for t in raw["periods"])
            nd = raw.get("noise", {})
            noise = NoiseModel(sigma_p=float(nd.get("sigma_p", 0.0)),
                               sigma_q=float(nd.get("sigma_q", 0.0)),
                               sigma_w=float(nd.get("sigma_w", 0.0)),
                               seed=raw.get("seed"))
            probing = raw.get("probing", "all-leaves")
            if not isinstance(probing, str):
                probing = tuple(int(b) for b in probing)
            dd = raw.get("delta", {})
            loads = {int(b): float(kw)
                     for b, kw in raw.get("loads_kw", {}).items()}
            cfg = ExperimentConfig(
                feeder_path=os.path.join(base_dir, feeder),
                mode=mode,
                probing=probing,
                periods=periods,
                noise=noise,
                r_min=float(raw["r_min"]),
                trials=int(raw.get("trials", 1000)),
                seed=int(raw.get("seed", 0)),
                s_base_kva=float(raw.get("s_base_kva", 1.0)),
                loads_kw=loads,
                delta_policy=dd.get("policy", "rated"),
                delta_multiple=float(dd.get("multiple", 1.0)),
                delta_default_kw=(None if dd.get("default_kw") is None
                                  else float(dd["default_kw"])),
                delta_value_pu=(None if dd.get("value_pu") is None
                                else float(dd["value_pu"])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad experiment config: {exc!r}") from None
        return cfg

    def probing_buses(self, g: FeederGraph) -> tuple[int, ...]:
        if self.mode == "complete":
            if self.probing not in ("all-buses",) and not isinstance(
                    self.probing, tuple):
                raise ConfigError("complete mode probes every bus; set "
                                  "probing: all-buses")
            if isinstance(self.probing, tuple) and set(self.probing) != set(
                    g.bus_order):
                raise ConfigError("complete mode needs every non-substation "
                                  "bus in the probing list")
            return tuple(g.bus_order)
        if self.probing == "all-buses":
            raise ConfigError("partial mode cannot probe the full bus set; "
                              "use all-leaves or an explicit list")
        if self.probing == "all-leaves":
            return tuple(sorted(g.leaves))
        return tuple(sorted(self.probing))

    def delta_map(self, buses: tuple[int, ...]) -> dict[int, float]:
        if self.delta_policy == "fixed":
            return {m: self.delta_value_pu for m in buses}
        out = {}
        for m in buses:
            kw = self.loads_kw.get(m, self.delta_default_kw)
            if kw is None or kw <= 0:
                raise ConfigError(f"bus {m} has no rated load and no "
                                  f"default_kw is set")
            out[m] = self.delta_multiple * kw / self.s_base_kva
        return out


@dataclass(frozen=True)
class ExperimentResult:
    mode: str
    rows: tuple[dict, ...]  # one per sweep value, in sweep order
    provenance: dict

    def row(self, periods: int) -> dict:
        for r in self.rows:
            if r["periods"] == periods:
                return r
        raise KeyError(periods)


def _single_trial(g, truth, cfg, buses, delta, periods, trial):
    rng = np.random.default_rng((cfg.seed, periods, trial))
    plan = ProbingPlan.blocks(buses, delta, periods)
    record = simulate_probing(g, plan, cfg.noise, mode=cfg.mode, rng=rng)
    estimate = estimate_resistances(record)
    groupings = [group_column_noisy(estimate.column(m), m, cfg.r_min,
                                    mode=cfg.mode)
                 for m in buses]
    families = assemble_families(groupings, value_tol=cfg.r_min / 2)
    if cfg.mode == "complete":
        report = recover_full(families)
    else:
        report = recover_partial(families)
    return compare_graphs(report.graph, truth, buses)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the configured sweep and aggregate error statistics.

    Ground truth is the feeder itself in complete mode and its reduced
    grid in partial mode. Every raised pipeline error marks the trial as
    a topology error; only exact topology matches contribute to the MPE.
    """
    g = fileio.load_feeder(config.feeder_path)
    buses = config.probing_buses(g)
    delta = config.delta_map(buses)
    truth = g if config.mode == "complete" else reduce_grid(g, buses)

    rows = []
    for periods in config.periods:
        t0 = time.perf_counter()
        correct = 0
        mpes = []
        for trial in range(config.trials):
            try:
                outcome = _single_trial(g, truth, config, buses, delta,
                                        periods, trial)
            except GridProbeError:
                continue
            if outcome.topology_correct:
                correct += 1
                mpes.append(outcome.resistance_mpe)
        rows.append({
            "periods": periods,
            "error_pct": 100.0 * (config.trials - correct) / config.trials,
            "mpe_pct": float(np.mean(mpes)) if mpes else None,
            # Standard error of the MPE mean, for trend checks within
            # Monte Carlo bands. Needs at least two correct trials.
            "mpe_se": (float(np.std(mpes, ddof=1) / np.sqrt(len(mpes)))
                       if len(mpes) > 1 else None),
            "trials": config.trials,
            "seconds": time.perf_counter() - t0,
        })

    provenance = {
        "feeder": os.path.basename(config.feeder_path),
        "mode": config.mode,
        "probing_buses": list(buses),
        "delta_pu": {str(m): delta[m] for m in buses},
        "periods_sweep": list(config.periods),
        "noise": {"sigma_p": config.noise.sigma_p,
                  "sigma_q": config.noise.sigma_q,
                  "sigma_w": config.noise.sigma_w},
        "r_min": config.r_min,
        "trials": config.trials,
        "seed": config.seed,
        "trial_seed_rule": "numpy default_rng((seed, periods, trial))",
        "noise_redraw": "non-probed injection deviations are redrawn every "
                        "period, not held fixed per trial",
        "numpy": np.__version__,
        "python": platform.python_version(),
    }
    return ExperimentResult(mode=config.mode, rows=tuple(rows),
                            provenance=provenance)


def write_results(result: ExperimentResult, out_dir: str | os.PathLike) -> None:
    """Emit results.csv (with timing) and results.json (timing-free).

    The JSON file is byte-stable for a fixed config and seed; the CSV
    repeats the same statistics plus a wall-time column.
    """
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["T_m", "error_pct", "mpe_pct", "trials", "seconds"])
        for row in result.rows:
            mpe = "" if row["mpe_pct"] is None else repr(row["mpe_pct"])
            w.writerow([row["periods"], repr(row["error_pct"]), mpe,
                        row["trials"], f"{row['seconds']:.3f}"])
    payload = {
        "provenance": result.provenance,
        "results": [{k: row[k] for k in
                     ("periods", "error_pct", "mpe_pct", "mpe_se", "trials")}
                    for row in result.rows],
    }
    with open(os.path.join(out_dir, "results.json"), "w",
              encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
