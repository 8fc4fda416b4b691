"""Monte Carlo experiment driver.

Builds worlds from a scenario config, runs them over a fixed number of
reservation intervals, and aggregates per-RRI collision probability
(colliding transmissions over total transmissions) across seeds. Paired
baseline/ledger runs share random decisions by construction: every vehicle
draws from a stream keyed by (seed, vehicle id), so the two policies see
identical initial selections and counter draws and their traces agree
exactly until the first end-of-period decision can take effect.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

from . import capacity
from .engine import CollisionEvent, World

MODES = ("baseline", "ledger", "both")


class ConfigError(ValueError):
    """Scenario configuration violates a capacity or validity constraint."""


@dataclass(frozen=True)
class SimConfig:
    """One experiment scenario.

    ``payload_bytes`` drives the grid dimensioning for every mode in the
    scenario so that paired runs compare policies on identical grids.
    """

    num_vehicles: int = 100
    rri_ms: int = 100
    numerology: int = 0
    payload_bytes: int = 350
    mcs_index: int = 1
    num_rris: int = 100
    seeds: tuple[int, ...] = tuple(range(30))
    mode: str = "both"
    keep_probability: float = 0.8
    allow_overload: bool = False
    subchannel_mode: str = "exact"
    phy: capacity.PhyConfig = field(default_factory=capacity.PhyConfig)
    mcs_table: str | None = None

    def __post_init__(self) -> None:
        if self.num_vehicles < 1:
            raise ConfigError("num_vehicles must be >= 1")
        if self.num_rris < 15:
            raise ConfigError("num_rris must be >= 15 (one maximal SPS period)")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.keep_probability <= 1.0:
            raise ConfigError("keep_probability must be in [0, 1]")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.subchannel_mode not in capacity.SUBCHANNEL_MODES:
            raise ConfigError(
                f"subchannel_mode must be one of {capacity.SUBCHANNEL_MODES}"
            )

    def report(self) -> capacity.CapacityReport:
        """Dimensioning for this scenario's package."""
        mcs = capacity.mcs_entry(self.mcs_index, self.mcs_table)
        num = capacity.numerology(self.numerology)
        rep = capacity.capacity_report(
            self.payload_bytes, mcs, num, self.rri_ms, self.phy, self.subchannel_mode
        )
        if rep.subchannels_per_slot is None:
            raise ConfigError("payload produces an empty package; nothing to schedule")
        return rep

    def check_capacity(self) -> capacity.CapacityReport:
        rep = self.report()
        if self.num_vehicles > rep.max_vehicles and not self.allow_overload:
            raise ConfigError(
                f"{self.num_vehicles} vehicles exceed the {rep.max_vehicles}-vehicle "
                "capacity; set allow_overload to run anyway"
            )
        return rep


@dataclass
class RunTrace:
    """Metrics from a single (config, seed, mode) run."""

    mode: str
    seed: int
    collision_probability: list[float]
    colliding_tx: list[int]
    total_tx: list[int]
    collision_events: list[CollisionEvent]
    awareness_us: dict[tuple[int, int, int], int]
    decodable_tx: list[tuple[int, int]]
    reselections: list[tuple[int, int]]
    rri_us: int

    @property
    def convergence_rri(self) -> int | None:
        return convergence_rri(self.collision_probability)


@dataclass
class MetricsTrace:
    """Seed-averaged metrics for one mode, with per-seed traces retained."""

    mode: str
    per_rri_collision_probability: list[float]
    min_probability: list[float]
    max_probability: list[float]
    per_seed_convergence_rri: list[int | None]
    n_seeds: int
    per_seed: list[RunTrace]


def convergence_rri(trace: Iterable[float]) -> int | None:
    """Smallest index from which the trace is zero through the end; None if
    the trace never settles at zero."""
    values = list(trace)
    k = len(values)
    while k > 0 and values[k - 1] == 0:
        k -= 1
    if k == len(values):
        return None
    return k


def _single_mode(mode: str) -> str:
    if mode not in ("baseline", "ledger"):
        raise ConfigError(f"a run needs a single mode, got {mode!r}")
    return mode


def run(config: SimConfig, seed: int, mode: str | None = None) -> RunTrace:
    """Run one seed to completion; deterministic for fixed inputs."""
    run_mode = _single_mode(mode if mode is not None else config.mode)
    rep = config.check_capacity()
    world = World(
        num_vehicles=config.num_vehicles,
        subchannels_per_slot=rep.subchannels_per_slot,
        rri_ms=config.rri_ms,
        num=config.numerology,
        mode=run_mode,
        keep_probability=config.keep_probability,
        seed=seed,
    )
    probs: list[float] = []
    colliding: list[int] = []
    totals: list[int] = []
    for _ in range(config.num_rris):
        c, t = world.run_rri()
        colliding.append(c)
        totals.append(t)
        probs.append(c / t if t else 0.0)
    return RunTrace(
        mode=run_mode,
        seed=seed,
        collision_probability=probs,
        colliding_tx=colliding,
        total_tx=totals,
        collision_events=world.collision_events,
        awareness_us=world.awareness_us,
        decodable_tx=world.decodable_tx,
        reselections=world.reselections,
        rri_us=world.rri_us,
    )


def run_ensemble(config: SimConfig, mode: str | None = None) -> MetricsTrace:
    """Run every seed in the config and average the traces per RRI."""
    run_mode = _single_mode(mode if mode is not None else config.mode)
    traces = [run(config, seed, run_mode) for seed in config.seeds]
    n = len(traces)
    mean = [
        sum(t.collision_probability[i] for t in traces) / n
        for i in range(config.num_rris)
    ]
    lo = [min(t.collision_probability[i] for t in traces) for i in range(config.num_rris)]
    hi = [max(t.collision_probability[i] for t in traces) for i in range(config.num_rris)]
    return MetricsTrace(
        mode=run_mode,
        per_rri_collision_probability=mean,
        min_probability=lo,
        max_probability=hi,
        per_seed_convergence_rri=[t.convergence_rri for t in traces],
        n_seeds=n,
        per_seed=traces,
    )


def run_paired(config: SimConfig) -> tuple[MetricsTrace, MetricsTrace]:
    """Baseline and ledger ensembles over the same seeds and grid, with
    common random numbers per vehicle."""
    if config.mode != "both":
        config = replace(config, mode="both")
    baseline = run_ensemble(config, "baseline")
    ledger = run_ensemble(config, "ledger")
    return baseline, ledger
