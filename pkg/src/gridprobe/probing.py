"""Probing simulation and resistance-matrix estimation.

A probing campaign perturbs the active-power output of inverters one bus
at a time and records the resulting bus voltage deviations. Under the
linearized flow model the noiseless deviations are R_P @ D, where R_P
holds the probed columns of the bus resistance matrix and D is the
probing-injection matrix, so R_P is estimated by right-inverting D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    NonpositiveRmin,
    RankDeficientProbing,
    UnknownProbingBus,
)
from .feeder import FeederGraph, reactance_matrix, resistance_matrix

RANK_TOL = 1e-10


@dataclass(frozen=True)
class NoiseModel:
    """Per-period deviation model for probing data.

    sigma_p / sigma_q: standard deviation of active/reactive injection
    deviations at non-actuated buses; sigma_w: voltage measurement noise.
    All in per unit, all i.i.d. zero-mean Gaussian across buses and periods.
    """

    sigma_p: float = 0.0
    sigma_q: float = 0.0
    sigma_w: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if min(self.sigma_p, self.sigma_q, self.sigma_w) < 0:
            raise ConfigError("noise deviations must be nonnegative")

    @property
    def silent(self) -> bool:
        return self.sigma_p == self.sigma_q == self.sigma_w == 0.0


def noise_bound(noise: NoiseModel, rho_r: float, rho_x: float) -> float:
    """Deviation bound per voltage-difference entry.

    Combines the injection noise, amplified at worst by the spectral radii
    of the resistance and reactance matrices, with the measurement noise.
    """
    return math.sqrt((noise.sigma_p * rho_r) ** 2
                     + (noise.sigma_q * rho_x) ** 2
                     + noise.sigma_w ** 2)


@dataclass(frozen=True)
class ProbingPlan:
    """Which buses probe, how hard, and for how many periods.

    Block plans actuate one bus at a time: bus i injects delta[i] for
    periods[i] consecutive periods while all other inverters hold. General
    plans supply an explicit injection matrix (one row per probing bus, one
    column per period) instead.
    """

    buses: tuple[int, ...]
    delta: tuple[float, ...] | None = None
    periods: tuple[int, ...] | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(set(self.buses)) != len(self.buses):
            raise ConfigError("probing buses must be distinct")
        if self.matrix is None:
            if self.delta is None or self.periods is None:
                raise ConfigError("block plans need delta and periods")
            if len(self.delta) != len(self.buses) or len(self.periods) != len(self.buses):
                raise ConfigError("delta/periods must align with buses")
            if any(d <= 0 for d in self.delta):
                raise ConfigError("probing magnitudes must be positive")
            if any(t < 1 or int(t) != t for t in self.periods):
                raise ConfigError("probing periods must be positive integers")
        else:
            if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.buses):
                raise ConfigError("injection matrix needs one row per probing bus")
            self.matrix.setflags(write=False)

    @staticmethod
    def blocks(buses: Sequence[int], delta: Mapping[int, float] | Sequence[float],
               periods: int | Mapping[int, int] | Sequence[int]) -> "ProbingPlan":
        buses = tuple(int(b) for b in buses)
        if isinstance(delta, Mapping):
            delta = [delta[b] for b in buses]
        if isinstance(periods, int):
            periods = [periods] * len(buses)
        elif isinstance(periods, Mapping):
            periods = [periods[b] for b in buses]
        return ProbingPlan(buses=buses, delta=tuple(float(d) for d in delta),
                           periods=tuple(int(t) for t in periods))

    @staticmethod
    def general(buses: Sequence[int], matrix: np.ndarray) -> "ProbingPlan":
        return ProbingPlan(buses=tuple(int(b) for b in buses),
                           matrix=np.array(matrix, dtype=float))

    @property
    def is_block(self) -> bool:
        return self.matrix is None

    @property
    def total_periods(self) -> int:
        if self.matrix is not None:
            return self.matrix.shape[1]
        return sum(self.periods)

    def windows(self) -> list[tuple[int, int]]:
        """Per-bus [start, stop) period ranges of a block plan."""
        if not self.is_block:
            raise ConfigError("general plans have no per-bus windows")
        out = []
        t = 0
        for length in self.periods:
            out.append((t, t + length))
            t += length
        return out

    def injections(self) -> np.ndarray:
        """Dense probing-injection matrix, one row per bus."""
        if self.matrix is not None:
            return self.matrix
        m = np.zeros((len(self.buses), self.total_periods))
        for i, (a, b) in enumerate(self.windows()):
            m[i, a:b] = self.delta[i]
        return m


def design_plan(r_min: float, sigma: float,
                delta: Mapping[int, float]) -> ProbingPlan:
    """Size each bus's probing window so level-set recovery is reliable.

    Picks the smallest integer period count with delta * sqrt(T) at least
    16 * sigma / r_min, which confines estimate deviations within a quarter
    of the smallest resistance separating two level sets, with probability
    better than 99.99% per entry.
    """
    if r_min <= 0:
        raise NonpositiveRmin(f"r_min must be positive, got {r_min}")
    if sigma < 0:
        raise ConfigError("sigma must be nonnegative")
    buses = tuple(sorted(delta))
    periods = []
    for b in buses:
        d = float(delta[b])
        if d <= 0:
            raise ConfigError(f"probing magnitude for bus {b} must be positive")
        need = (16.0 * sigma / (r_min * d)) ** 2
        periods.append(max(1, math.ceil(need - 1e-12)))
    return ProbingPlan.blocks(buses, delta, periods)


@dataclass(frozen=True)
class ProbingRecord:
    """Voltage-deviation measurements produced by one probing campaign."""

    mode: str
    row_nodes: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    plan: ProbingPlan = field(repr=False)
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in ("complete", "partial"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.values.shape != (len(self.row_nodes), self.plan.total_periods):
            raise ConfigError("measurement shape does not match plan")
        self.values.setflags(write=False)


def simulate_probing(g: FeederGraph, plan: ProbingPlan, noise: NoiseModel,
                     mode: str = "complete",
                     rng: np.random.Generator | None = None) -> ProbingRecord:
    """Generate the voltage-deviation record of a probing campaign.

    Complete mode reports all non-substation buses; partial mode reports
    probing buses only. Injection deviations at non-probing buses and
    measurement noise are redrawn independently every period.
    """
    order = g.bus_order
    pos = {b: i for i, b in enumerate(order)}
    for b in plan.buses:
        if b not in pos:
            raise UnknownProbingBus(f"bus {b} cannot probe")
    if mode not in ("complete", "partial"):
        raise ConfigError(f"unknown mode {mode!r}")

    rmat = resistance_matrix(g)
    dmat = plan.injections()
    cols = [pos[b] for b in plan.buses]
    v = rmat.values[:, cols] @ dmat

    if not noise.silent:
        if rng is None:
            rng = np.random.default_rng(noise.seed)
        n, t = len(order), plan.total_periods
        if noise.sigma_p > 0:
            shake = rng.standard_normal((n, t))
            shake[cols, :] = 0.0
            v = v + noise.sigma_p * (rmat.values @ shake)
        if noise.sigma_q > 0:
            xmat = reactance_matrix(g)
            shake = rng.standard_normal((n, t))
            shake[cols, :] = 0.0
            v = v + noise.sigma_q * (xmat.values @ shake)
        if noise.sigma_w > 0:
            v = v + noise.sigma_w * rng.standard_normal((n, t))

    if mode == "partial":
        rows = [pos[b] for b in plan.buses]
        return ProbingRecord(mode=mode, row_nodes=plan.buses,
                             values=v[rows, :], plan=plan, seed=noise.seed)
    return ProbingRecord(mode=mode, row_nodes=order, values=v,
                         plan=plan, seed=noise.seed)


@dataclass(frozen=True)
class ResistanceEstimate:
    """Estimated probed columns of the bus resistance matrix."""

    row_nodes: tuple[int, ...]
    col_nodes: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values.setflags(write=False)

    def column(self, n: int) -> dict[int, float]:
        j = self.col_nodes.index(n)
        return {m: float(self.values[i, j]) for i, m in enumerate(self.row_nodes)}


def estimate_resistances(record: ProbingRecord) -> ResistanceEstimate:
    """Recover probed resistance-matrix columns from a probing record.

    Block plans average each probing window and divide by its injection,
    which coincides with the right pseudo-inverse of the block injection
    matrix. General plans right-invert explicitly and refuse to proceed
    when the injection matrix is row-rank deficient.
    """
    plan = record.plan
    if plan.is_block:
        est = np.empty((len(record.row_nodes), len(plan.buses)))
        for j, (a, b) in enumerate(plan.windows()):
            est[:, j] = record.values[:, a:b].sum(axis=1) / (
                plan.delta[j] * plan.periods[j])
    else:
        dmat = plan.injections()
        if dmat.shape[1] < dmat.shape[0]:
            raise RankDeficientProbing(
                "fewer probing periods than probing buses")
        svals = np.linalg.svd(dmat, compute_uv=False)
        if svals[0] == 0 or svals[-1] <= RANK_TOL * svals[0]:
            raise RankDeficientProbing(
                "injection matrix is rank deficient; no right inverse")
        est = record.values @ np.linalg.pinv(dmat, rcond=RANK_TOL)
    return ResistanceEstimate(row_nodes=record.row_nodes,
                              col_nodes=plan.buses, values=est)
