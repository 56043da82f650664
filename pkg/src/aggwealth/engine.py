"""Simulation loop, observable sampling and series export."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .kernels import EventLog, MigrationKernelSpec, MoneyKernelSpec
from .model import ConfigError, MacroInvariants, SizeInitSpec, SystemState, init_state
from .stats import entropy_money, entropy_size

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one run.

    A step applies ``transactions_per_step`` money exchanges followed by
    ``migrations_per_step`` aggregate exchanges. Observables are recorded at
    step 0 and then every ``sample_every`` steps. ``entropy_bin_width=None``
    means ``total_money / (n_aggregates * 20)``.
    """

    invariants: MacroInvariants
    size_spec: SizeInitSpec = field(default_factory=SizeInitSpec)
    wealth_per_agent: float = 100.0
    money_kernel: MoneyKernelSpec = field(default_factory=MoneyKernelSpec)
    migration_kernel: MigrationKernelSpec = field(default_factory=MigrationKernelSpec)
    steps: int = 1000
    transactions_per_step: int = 1
    migrations_per_step: int = 1
    sample_every: int = 10
    entropy_bin_width: float | None = None
    remove_empty: bool = False
    seed: int = 0
    # extras: pooled equilibrium snapshots and the optional event stream
    snapshot_after: int | None = None
    event_log: str | None = None

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps!r}")
        if self.sample_every < 1 or self.sample_every > self.steps:
            raise ConfigError(f"sample_every must lie in [1, steps], got {self.sample_every!r}")
        if self.transactions_per_step < 1:
            raise ConfigError("transactions_per_step must be positive")
        if self.migrations_per_step < 0:
            raise ConfigError("migrations_per_step must be non-negative")
        if self.entropy_bin_width is not None and not self.entropy_bin_width > 0:
            raise ConfigError("entropy_bin_width must be positive")
        if self.invariants.n_agents < 2:
            raise ConfigError("a run needs at least two agents")

    @property
    def bin_width(self) -> float:
        if self.entropy_bin_width is not None:
            return float(self.entropy_bin_width)
        return self.invariants.total_money / (self.invariants.n_aggregates * 20)


@dataclass
class ObservableSeries:
    times: np.ndarray
    entropy_money: np.ndarray
    entropy_size: np.ndarray
    active_aggregates: np.ndarray
    bin_width: float
    snapshot_sizes: list[np.ndarray] = field(default_factory=list)
    snapshot_wealths: list[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return self.times.size

    def pooled_sizes(self) -> np.ndarray:
        return np.concatenate(self.snapshot_sizes) if self.snapshot_sizes else np.empty(0, dtype=np.int64)

    def pooled_wealths(self) -> np.ndarray:
        return np.concatenate(self.snapshot_wealths) if self.snapshot_wealths else np.empty(0)

    def to_csv(self, path: str | Path, header: str | None = None) -> Path:
        path = Path(path)
        lines = [header] if header else []
        lines.append("step,S_m,S_d,n_active_aggregates")
        for t, sm, sd, na in zip(self.times, self.entropy_money, self.entropy_size, self.active_aggregates):
            lines.append(f"{int(t)},{float(sm)!r},{float(sd)!r},{int(na)}")
        path.write_text("\n".join(lines) + "\n")
        return path


def equilibrium_snapshot(state: SystemState, include_removed: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Per-aggregate sizes and wealth totals.

    With ``include_removed=False`` only aggregates still in the active set are
    returned (relevant when empty aggregates are removed).
    """
    sizes = state.roster_sizes.copy()
    wealths = np.bincount(state.agent_aggregate, weights=state.agent_wealth, minlength=sizes.size)
    if not include_removed:
        ids = np.sort(state.active_ids[: state.n_active])
        return sizes[ids], wealths[ids]
    return sizes, wealths


def _observe(state: SystemState, bin_width: float, remove_empty: bool):
    sizes, wealths = equilibrium_snapshot(state, include_removed=not remove_empty)
    return entropy_money(wealths, bin_width), entropy_size(sizes), int((state.roster_sizes > 0).sum()), sizes, wealths


def _step_with_log(state, config, rng, n_steps, events: EventLog):
    money, migration = config.money_kernel, config.migration_kernel
    for _ in range(n_steps):
        state.step_count += 1
        for _ in range(config.transactions_per_step):
            events.transaction(state.step_count, kernels.monetary_exchange(state, money, rng))
        for _ in range(config.migrations_per_step):
            events.migration(
                state.step_count, kernels.aggregate_exchange(state, migration, rng, remove_empty=config.remove_empty)
            )


def advance(state: SystemState, config: RunConfig, rng: np.random.Generator, n_steps: int):
    """Apply ``n_steps`` steps of the configured kernels in place."""
    mechanism, n_hat0, gamma, overflow = config.migration_kernel.codes()
    money = config.money_kernel
    state.n_active = int(
        kernels._advance(
            state.agent_wealth, state.agent_aggregate, state.roster_buffers, state.roster_sizes,
            state.active_ids, state.n_active, int(n_steps),
            int(config.transactions_per_step), int(config.migrations_per_step),
            money.p_in_code, kernels.EXCHANGE_RULES[money.rule], money.discrete,
            mechanism, n_hat0, gamma, overflow, config.remove_empty, rng,
        )
    )
    state.step_count += int(n_steps)


def run(config: RunConfig, state: SystemState | None = None) -> tuple[SystemState, ObservableSeries]:
    """Execute a full run; identical config and seed give identical output.

    The initial state is drawn from the same generator as the dynamics, so
    ``seed`` alone fixes everything. Passing ``state`` skips initialisation.
    """
    rng = np.random.default_rng(config.seed)
    if state is None:
        state = init_state(config.invariants, config.size_spec, config.wealth_per_agent, rng)
        state.seed = config.seed

    bin_width = config.bin_width
    snapshot_after = config.snapshot_after
    times, s_m, s_d, active = [], [], [], []
    snap_sizes, snap_wealths = [], []

    def record():
        sm, sd, na, sizes, wealths = _observe(state, bin_width, config.remove_empty)
        times.append(state.step_count)
        s_m.append(sm)
        s_d.append(sd)
        active.append(na)
        if snapshot_after is not None and state.step_count >= snapshot_after:
            snap_sizes.append(sizes)
            snap_wealths.append(wealths)

    events = EventLog(config.event_log) if config.event_log else None
    try:
        record()
        done = 0
        while done < config.steps:
            chunk = min(config.sample_every, config.steps - done)
            if events is None:
                advance(state, config, rng, chunk)
            else:
                _step_with_log(state, config, rng, chunk, events)
            done += chunk
            if done % config.sample_every == 0 or done == config.steps:
                record()
    finally:
        if events is not None:
            events.close()

    series = ObservableSeries(
        times=np.asarray(times, dtype=np.int64),
        entropy_money=np.asarray(s_m),
        entropy_size=np.asarray(s_d),
        active_aggregates=np.asarray(active, dtype=np.int64),
        bin_width=bin_width,
        snapshot_sizes=snap_sizes,
        snapshot_wealths=snap_wealths,
    )
    log.debug("run finished: %d steps, %d samples", config.steps, len(series))
    return state, series
