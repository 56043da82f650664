"""Stochastic interaction kernels: money exchange and agent migration.

Each kernel exists twice: a jitted core working on raw arrays (used by the
engine's inner loop) and a thin Python wrapper taking a ``SystemState`` and
returning a record. Both draw from the same ``numpy.random.Generator`` so a
run is one deterministic stream. Draw order per operation:

    money:     payer, partner category (only when locality is on), partner, amount
    migration: source, destination, delta_n, migrant indices
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .model import ConfigError, SystemState

# exchange rules
PAIR_UNIFORM = 0
PAYER_FRACTION = 1
EXCHANGE_RULES = {"pair_uniform": PAIR_UNIFORM, "payer_fraction": PAYER_FRACTION}

# partner categories in transaction records
UNIFORM = 0
INTRA = 1
EXTRA = 2

# migration mechanisms
BASE = 0
LINEAR = 1
SUBLINEAR = 2
MECHANISMS = {"base": BASE, "linear": LINEAR, "sublinear": SUBLINEAR}

# overflow policies for the base mechanism
VOID = 0
CLAMP = 1
OVERFLOW_POLICIES = {"void": VOID, "clamp": CLAMP}

# migration status codes
MOVED = 0
SKIPPED = 1
VOIDED = 2


@dataclass(frozen=True)
class MoneyKernelSpec:
    """Partner selection and transfer rule for money exchange.

    ``p_in`` is the probability the partner is drawn from the payer's own
    aggregate (otherwise from everyone outside it). ``None`` disables locality:
    the partner is uniform over all other agents.

    ``rule="pair_uniform"`` redraws the pair's combined wealth uniformly, i.e.
    the transfer is uniform on ``[-m_j, m_i]``; its stationary law is the
    exponential one. ``rule="payer_fraction"`` transfers a uniform amount in
    ``[0, m_i]`` from the payer.
    """

    p_in: float | None = None
    rule: str = "pair_uniform"
    discrete: bool = False

    def __post_init__(self):
        if self.p_in is not None and not 0.0 <= self.p_in <= 1.0:
            raise ConfigError(f"p_in must lie in [0, 1], got {self.p_in!r}")
        if self.rule not in EXCHANGE_RULES:
            raise ConfigError(f"unknown exchange rule {self.rule!r}; expected one of {sorted(EXCHANGE_RULES)}")

    @property
    def p_in_code(self) -> float:
        return -1.0 if self.p_in is None else float(self.p_in)


@dataclass(frozen=True)
class MigrationKernelSpec:
    """Rule for the number of agents moved per aggregate interaction."""

    mechanism: str = "base"
    n_hat0: int | None = 100
    gamma: float | None = 0.9
    overflow: str = "void"

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"unknown mechanism {self.mechanism!r}; expected one of {sorted(MECHANISMS)}")
        if self.mechanism == "base" and (self.n_hat0 is None or self.n_hat0 < 1):
            raise ConfigError("base mechanism requires a positive integer n_hat0")
        if self.mechanism == "sublinear" and (self.gamma is None or not 0.0 < self.gamma <= 1.0):
            raise ConfigError(f"sublinear mechanism requires gamma in (0, 1], got {self.gamma!r}")
        if self.overflow not in OVERFLOW_POLICIES:
            raise ConfigError(f"unknown overflow policy {self.overflow!r}")

    def codes(self) -> tuple[int, int, float, int]:
        return (
            MECHANISMS[self.mechanism],
            int(self.n_hat0 or 0),
            float(self.gamma or 1.0),
            OVERFLOW_POLICIES[self.overflow],
        )


class Transaction(NamedTuple):
    payer: int
    receiver: int
    amount: float
    category: int
    fallback: bool


class Migration(NamedTuple):
    source: int
    destination: int
    delta_n: int
    status: int


# ---------------------------------------------------------------------------
# jitted cores


@njit(cache=True)
def _exchange_money(wealth, agent_aggregate, roster_buffers, roster_sizes, p_in, rule, discrete, rng):
    big_d = wealth.size
    i = rng.integers(0, big_d)
    g = agent_aggregate[i]
    own = roster_sizes[g]
    fallback = False

    if p_in < 0.0:
        category = UNIFORM
    else:
        category = INTRA if rng.random() < p_in else EXTRA
        if category == INTRA and own < 2:
            category = EXTRA
            fallback = True
        elif category == EXTRA and own == big_d:
            category = INTRA
            fallback = True

    if category == UNIFORM:
        j = rng.integers(0, big_d - 1)
        if j >= i:
            j += 1
    elif category == INTRA:
        members = roster_buffers[g]
        j = i
        while j == i:
            j = members[rng.integers(0, own)]
    else:
        j = i
        while agent_aggregate[j] == g:
            j = rng.integers(0, big_d)

    mi = wealth[i]
    mj = wealth[j]
    if rule == PAIR_UNIFORM:
        total = mi + mj
        if discrete:
            new_i = float(rng.integers(0, np.int64(total) + 1))
        else:
            new_i = rng.random() * total
        wealth[i] = new_i
        wealth[j] = total - new_i
        amount = mi - new_i
    else:
        if discrete:
            amount = float(rng.integers(0, np.int64(mi) + 1))
        else:
            amount = rng.random() * mi
        wealth[i] = mi - amount
        wealth[j] = mj + amount
    return i, j, amount, category, fallback


@njit(cache=True)
def _draw_delta_n(mechanism, n_hat0, gamma, overflow, n_source, rng):
    if mechanism == BASE:
        dn = rng.integers(0, n_hat0 + 1)
        if dn > n_source:
            if overflow == VOID:
                return 0, VOIDED
            return n_source, MOVED
        return dn, MOVED
    if mechanism == LINEAR:
        return rng.integers(0, n_source + 1), MOVED
    top = np.int64(np.floor(n_source**gamma + 0.5))
    dn = rng.integers(0, top + 1)
    return min(dn, n_source), MOVED


@njit(cache=True)
def _exchange_agents(
    agent_aggregate, roster_buffers, roster_sizes, active_ids, n_active,
    mechanism, n_hat0, gamma, overflow, remove_empty, rng,
):
    if n_active < 2:
        return -1, -1, 0, SKIPPED, n_active
    a = rng.integers(0, n_active)
    b = rng.integers(0, n_active - 1)
    if b >= a:
        b += 1
    src = active_ids[a]
    dst = active_ids[b]
    ns = roster_sizes[src]
    dn, status = _draw_delta_n(mechanism, n_hat0, gamma, overflow, ns, rng)
    if dn == 0:
        return src, dst, 0, status, n_active

    # partial Fisher-Yates: the chosen migrants end up in the roster tail
    members = roster_buffers[src]
    for k in range(dn):
        r = rng.integers(0, ns - k)
        last = ns - 1 - k
        tmp = members[r]
        members[r] = members[last]
        members[last] = tmp

    nd = roster_sizes[dst]
    target = roster_buffers[dst]
    if nd + dn > target.size:
        grown = np.empty(max(2 * target.size, nd + dn), dtype=np.int64)
        grown[:nd] = target[:nd]
        roster_buffers[dst] = grown
        target = grown
    for k in range(dn):
        agent = members[ns - dn + k]
        target[nd + k] = agent
        agent_aggregate[agent] = dst
    roster_sizes[src] = ns - dn
    roster_sizes[dst] = nd + dn

    if remove_empty and ns == dn:
        active_ids[a] = active_ids[n_active - 1]
        active_ids[n_active - 1] = src
        n_active -= 1
    return src, dst, dn, status, n_active


@njit(cache=True)
def _advance(
    wealth, agent_aggregate, roster_buffers, roster_sizes, active_ids, n_active, n_steps,
    transactions_per_step, migrations_per_step,
    p_in, rule, discrete,
    mechanism, n_hat0, gamma, overflow, remove_empty, rng,
):
    for _ in range(n_steps):
        for _ in range(transactions_per_step):
            _exchange_money(wealth, agent_aggregate, roster_buffers, roster_sizes, p_in, rule, discrete, rng)
        for _ in range(migrations_per_step):
            out = _exchange_agents(
                agent_aggregate, roster_buffers, roster_sizes, active_ids, n_active,
                mechanism, n_hat0, gamma, overflow, remove_empty, rng,
            )
            n_active = out[4]
    return n_active


# ---------------------------------------------------------------------------
# Python-facing operations


def monetary_exchange(state: SystemState, spec: MoneyKernelSpec, rng: np.random.Generator) -> Transaction:
    """One payer/receiver transfer; mutates ``state`` and returns the record."""
    if state.n_agents < 2:
        raise ConfigError("money exchange needs at least two agents")
    i, j, amount, category, fallback = _exchange_money(
        state.agent_wealth, state.agent_aggregate, state.roster_buffers, state.roster_sizes,
        spec.p_in_code, EXCHANGE_RULES[spec.rule], spec.discrete, rng,
    )
    return Transaction(int(i), int(j), float(amount), int(category), bool(fallback))


def draw_delta_n(spec: MigrationKernelSpec, n_source: int, rng: np.random.Generator) -> int:
    """Number of agents to move out of an aggregate of size ``n_source``.

    A voided base-mechanism draw (drawn value above ``n_source``) returns 0.
    """
    mechanism, n_hat0, gamma, overflow = spec.codes()
    dn, _ = _draw_delta_n(mechanism, n_hat0, gamma, overflow, int(n_source), rng)
    return int(dn)


def aggregate_exchange(
    state: SystemState, spec: MigrationKernelSpec, rng: np.random.Generator, remove_empty: bool = False
) -> Migration:
    """Move a random block of agents, with their wealth, between two aggregates."""
    mechanism, n_hat0, gamma, overflow = spec.codes()
    src, dst, dn, status, n_active = _exchange_agents(
        state.agent_aggregate, state.roster_buffers, state.roster_sizes, state.active_ids, state.n_active,
        mechanism, n_hat0, gamma, overflow, remove_empty, rng,
    )
    state.n_active = int(n_active)
    return Migration(int(src), int(dst), int(dn), int(status))


class EventLog:
    """CSV stream of kernel events: ``step,kind,a,b,amount``."""

    def __init__(self, path, header: str | None = None):
        self._fh = open(path, "w", newline="")
        if header:
            self._fh.write(header + "\n")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(["step", "kind", "a", "b", "amount"])

    def transaction(self, step: int, rec: Transaction):
        self._writer.writerow([step, "money", rec.payer, rec.receiver, repr(rec.amount)])

    def migration(self, step: int, rec: Migration):
        kind = {MOVED: "migrate", SKIPPED: "migrate_skipped", VOIDED: "migrate_void"}[rec.status]
        self._writer.writerow([step, kind, rec.source, rec.destination, rec.delta_n])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
