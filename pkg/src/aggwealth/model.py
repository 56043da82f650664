"""Economy state and the conservation laws it must obey.

The state is array-backed so the jitted kernels can mutate it in place:

* ``agent_wealth[a]``     wealth of agent ``a`` (float64, never negative)
* ``agent_aggregate[a]``  aggregate id of agent ``a``
* ``roster_buffers[g]``   capacity buffer whose first ``roster_sizes[g]``
                          entries are the members of aggregate ``g``
* ``active_ids[:n_active]`` aggregates that can still take part in
                          migrations (all of them unless empties are removed)
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba.typed import List


class ConfigError(ValueError):
    """Raised for configurations that cannot describe a valid economy."""


@dataclass(frozen=True)
class MacroInvariants:
    """The conserved triple: aggregate count, agent count, total money."""

    n_aggregates: int
    n_agents: int
    total_money: float

    def __post_init__(self):
        if int(self.n_aggregates) != self.n_aggregates or self.n_aggregates < 1:
            raise ConfigError(f"n_aggregates must be a positive integer, got {self.n_aggregates!r}")
        if int(self.n_agents) != self.n_agents or self.n_agents < 1:
            raise ConfigError(f"n_agents must be a positive integer, got {self.n_agents!r}")
        if not self.total_money > 0:
            raise ConfigError(f"total_money must be positive, got {self.total_money!r}")

    @property
    def mean_size(self) -> float:
        return self.n_agents / self.n_aggregates

    @property
    def mean_aggregate_wealth(self) -> float:
        return self.total_money / self.n_aggregates

    @property
    def mean_agent_wealth(self) -> float:
        return self.total_money / self.n_agents


@dataclass(frozen=True)
class SizeInitSpec:
    """How initial aggregate sizes are drawn.

    ``kind="fixed"`` gives every aggregate ``mean`` agents. ``kind="normal"``
    draws sizes from Normal(mean, sigma_d), rounds, clamps to >= 1 and then
    repairs the total round-robin so it equals the agent count exactly.
    """

    kind: str = "fixed"
    mean: float = 100.0
    sigma_d: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "normal"):
            raise ConfigError(f"size kind must be 'fixed' or 'normal', got {self.kind!r}")
        if not self.mean > 0:
            raise ConfigError(f"mean size must be positive, got {self.mean!r}")
        if self.sigma_d < 0:
            raise ConfigError(f"sigma_d must be non-negative, got {self.sigma_d!r}")


@dataclass
class SystemState:
    agent_wealth: np.ndarray
    agent_aggregate: np.ndarray
    roster_buffers: List
    roster_sizes: np.ndarray
    active_ids: np.ndarray
    n_active: int
    step_count: int = 0
    # read-only bookkeeping for snapshot metadata
    seed: int | None = field(default=None, compare=False)

    @property
    def n_agents(self) -> int:
        return self.agent_wealth.size

    @property
    def n_aggregates(self) -> int:
        return self.roster_sizes.size

    @property
    def aggregate_rosters(self) -> list[np.ndarray]:
        """Member ids of every aggregate (copies, in roster order)."""
        return [self.roster_buffers[g][: self.roster_sizes[g]].copy() for g in range(self.n_aggregates)]

    def copy(self) -> "SystemState":
        buffers = List()
        for buf in self.roster_buffers:
            buffers.append(buf.copy())
        return SystemState(
            self.agent_wealth.copy(),
            self.agent_aggregate.copy(),
            buffers,
            self.roster_sizes.copy(),
            self.active_ids.copy(),
            self.n_active,
            self.step_count,
            self.seed,
        )

    # numba typed lists do not pickle; workers receive plain arrays instead
    def __getstate__(self):
        state = self.__dict__.copy()
        state["roster_buffers"] = self.aggregate_rosters
        return state

    def __setstate__(self, state):
        buffers = List()
        for members in state["roster_buffers"]:
            buffers.append(np.asarray(members, dtype=np.int64).copy())
        state["roster_buffers"] = buffers
        self.__dict__.update(state)


def sample_sizes(invariants: MacroInvariants, size_spec: SizeInitSpec, rng: np.random.Generator) -> np.ndarray:
    """Initial roster sizes summing to exactly ``n_agents``."""
    na, big_d = invariants.n_aggregates, invariants.n_agents
    if size_spec.kind == "fixed":
        if size_spec.mean * na != big_d or int(size_spec.mean) != size_spec.mean:
            raise ConfigError(
                f"fixed size {size_spec.mean} x {na} aggregates does not equal {big_d} agents"
            )
        return np.full(na, int(size_spec.mean), dtype=np.int64)

    if abs(size_spec.mean * na - big_d) > 0.5 * size_spec.mean or big_d < na:
        raise ConfigError(
            f"mean size {size_spec.mean} x {na} aggregates cannot be reconciled to {big_d} agents"
        )
    sizes = np.rint(rng.normal(size_spec.mean, size_spec.sigma_d, na)).astype(np.int64)
    np.maximum(sizes, 1, out=sizes)
    residual = big_d - int(sizes.sum())
    g = 0
    while residual != 0:
        if residual > 0:
            sizes[g] += 1
            residual -= 1
        elif sizes[g] > 1:
            sizes[g] -= 1
            residual += 1
        g = (g + 1) % na
    return sizes


def state_from_sizes(sizes: np.ndarray, wealth_per_agent: float, seed: int | None = None) -> SystemState:
    """Build a state with agents numbered contiguously by aggregate."""
    sizes = np.asarray(sizes, dtype=np.int64)
    big_d = int(sizes.sum())
    agent_aggregate = np.repeat(np.arange(sizes.size, dtype=np.int64), sizes)
    buffers = List()
    offset = 0
    for n in sizes:
        # head room so early migrations rarely reallocate
        buf = np.empty(max(2 * int(n), 8), dtype=np.int64)
        buf[:n] = np.arange(offset, offset + n, dtype=np.int64)
        buffers.append(buf)
        offset += n
    return SystemState(
        agent_wealth=np.full(big_d, float(wealth_per_agent)),
        agent_aggregate=agent_aggregate,
        roster_buffers=buffers,
        roster_sizes=sizes.copy(),
        active_ids=np.arange(sizes.size, dtype=np.int64),
        n_active=int(sizes.size),
        seed=seed,
    )


def init_state(
    invariants: MacroInvariants,
    size_spec: SizeInitSpec,
    wealth_per_agent: float,
    seed: int | np.random.Generator,
) -> SystemState:
    """Uniform-wealth initial economy.

    Every agent starts with ``wealth_per_agent``; ``wealth_per_agent * n_agents``
    must equal ``total_money``. Deterministic for a given integer seed.
    """
    if not wealth_per_agent > 0:
        raise ConfigError(f"wealth_per_agent must be positive, got {wealth_per_agent!r}")
    if not np.isclose(wealth_per_agent * invariants.n_agents, invariants.total_money, rtol=1e-12):
        raise ConfigError(
            f"wealth_per_agent {wealth_per_agent} x {invariants.n_agents} agents "
            f"does not equal total_money {invariants.total_money}"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sizes = sample_sizes(invariants, size_spec, rng)
    return state_from_sizes(sizes, wealth_per_agent, seed=None if isinstance(seed, np.random.Generator) else seed)


def validate_invariants(state: SystemState, invariants: MacroInvariants, rtol: float = 1e-6) -> dict[str, bool]:
    """Check every conservation law without touching the state."""
    wealth = state.agent_wealth
    sizes = state.roster_sizes
    report = {
        "money_conserved": bool(abs(wealth.sum() - invariants.total_money) <= rtol * invariants.total_money),
        "non_negative_wealth": bool((wealth >= 0).all()),
        "agents_conserved": bool(wealth.size == invariants.n_agents and int(sizes.sum()) == invariants.n_agents),
        "aggregate_count": bool(sizes.size == invariants.n_aggregates),
    }

    membership_ok = True
    seen = np.zeros(wealth.size, dtype=np.int64)
    for g in range(sizes.size):
        members = state.roster_buffers[g][: sizes[g]]
        if members.size and (members.min() < 0 or members.max() >= wealth.size):
            membership_ok = False
            break
        seen[members] += 1
        if (state.agent_aggregate[members] != g).any():
            membership_ok = False
            break
    report["membership_consistent"] = bool(membership_ok and (seen == 1).all())
    return report


def write_snapshot(state: SystemState, invariants: MacroInvariants, path: str | Path, header: str | None = None) -> Path:
    """Write ``agent_id,aggregate_id,wealth`` CSV plus a ``.meta.json`` sidecar."""
    path = Path(path)
    lines = []
    if header:
        lines.append(header)
    lines.append("agent_id,aggregate_id,wealth")
    lines.extend(
        f"{a},{g},{w!r}" for a, (g, w) in enumerate(zip(state.agent_aggregate.tolist(), state.agent_wealth.tolist()))
    )
    path.write_text("\n".join(lines) + "\n")
    meta = {
        "seed": state.seed,
        "step_count": state.step_count,
        "n_aggregates": invariants.n_aggregates,
        "n_agents": invariants.n_agents,
        "total_money": invariants.total_money,
    }
    meta_path = path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_snapshot(path: str | Path) -> tuple[np.ndarray, np.ndarray, dict]:
    """Return ``(agent_aggregate, agent_wealth, meta)`` from a snapshot CSV."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows or rows[0] != ["agent_id", "aggregate_id", "wealth"]:
        raise ValueError(f"{path} is not a snapshot file")
    body = np.array(rows[1:], dtype=object).reshape(-1, 3)
    order = body[:, 0].astype(np.int64)
    agg = np.empty(order.size, dtype=np.int64)
    wealth = np.empty(order.size)
    agg[order] = body[:, 1].astype(np.int64)
    wealth[order] = body[:, 2].astype(float)
    meta_path = path.with_suffix(".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return agg, wealth, meta
