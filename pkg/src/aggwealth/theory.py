"""Closed-form equilibrium laws for aggregate size and wealth.

Two regimes are covered:

* many aggregates: the maximum-entropy law
  ``p(m, d) = C * binom(m+d-1, d-1) * exp(-beta*m) * exp(-alpha*(d-1))``
  over integer wealth ``m >= 0`` and size ``d >= 1``, with constants fixed by
  (n_aggregates, n_agents, total_money);
* finitely many aggregates: all weak compositions of the agents over the
  aggregates equally likely, and aggregate wealth given size distributed as
  ``total_money * Beta(d, n_agents - d)``.

Everything is vectorised over ``m``/``d`` and computed in log space.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import betainc, gammaln, xlog1py, xlogy

from .model import MacroInvariants

_ORACLE_LIMIT = 20_000


class DomainError(ValueError):
    """Parameters outside the region where a law is defined."""


def log_binom(n, k):
    """``ln C(n, k)`` for real arrays, via log-gamma."""
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


@dataclass(frozen=True)
class EquilibriumConstants:
    c: float
    alpha: float
    beta: float

    @property
    def x(self) -> float:
        """``exp(-alpha)``"""
        return math.exp(-self.alpha)

    @property
    def y(self) -> float:
        """``exp(-beta)``"""
        return math.exp(-self.beta)

    def convergence_gap(self) -> float:
        """``1 - C - exp(-alpha) - exp(-beta)``; zero for consistent constants."""
        return 1.0 - self.c - self.x - self.y


def equilibrium_constants(inv: MacroInvariants) -> EquilibriumConstants:
    na, big_d, big_m = inv.n_aggregates, inv.n_agents, float(inv.total_money)
    if big_d <= na:
        raise DomainError(f"alpha is undefined unless n_agents > n_aggregates (got D={big_d}, Na={na})")
    denom = big_d + big_m
    return EquilibriumConstants(
        c=na / denom,
        alpha=-math.log((big_d - na) / denom),
        beta=-math.log(big_m / denom),
    )


def joint_pmf_large_na(m, d, k: EquilibriumConstants):
    """Joint law of integer wealth ``m >= 0`` and size ``d >= 1``."""
    m = np.asarray(m, dtype=float)
    d = np.asarray(d, dtype=float)
    logp = math.log(k.c) + log_binom(m + d - 1, d - 1) - k.beta * m - k.alpha * (d - 1)
    return np.exp(logp)


def _size_ratio(k: EquilibriumConstants) -> float:
    # exp(-alpha) / (1 - exp(-beta)), computed without cancellation
    return math.exp(-k.alpha - math.log(-math.expm1(-k.beta)))


def _wealth_ratio(k: EquilibriumConstants) -> float:
    return math.exp(-k.beta - math.log(-math.expm1(-k.alpha)))


def size_marginal_large_na(d, k: EquilibriumConstants):
    """Geometric size law ``C e^alpha e^{-alpha d} / (1 - e^{-beta})^d``."""
    if _size_ratio(k) >= 1.0:
        raise DomainError("size series diverges: exp(-alpha) / (1 - exp(-beta)) >= 1")
    d = np.asarray(d, dtype=float)
    log1m_y = math.log(-math.expm1(-k.beta))
    return np.exp(math.log(k.c) + k.alpha - k.alpha * d - d * log1m_y)


def wealth_marginal_large_na(m, k: EquilibriumConstants):
    """Geometric wealth law ``C e^beta e^{-beta (m+1)} / (1 - e^{-alpha})^(m+1)``."""
    if _wealth_ratio(k) >= 1.0:
        raise DomainError("wealth series diverges: exp(-beta) / (1 - exp(-alpha)) >= 1")
    m = np.asarray(m, dtype=float)
    log1m_x = math.log(-math.expm1(-k.alpha))
    return np.exp(math.log(k.c) + k.beta - k.beta * (m + 1) - (m + 1) * log1m_x)


def size_pmf_finite(d, na: int, big_d: int, variant: str = "corrected"):
    """Probability that a given aggregate holds ``d`` of ``big_d`` agents.

    ``variant="corrected"`` counts weak compositions of the remaining
    ``big_d - d`` agents over the other ``na - 1`` aggregates and normalises.
    ``variant="printed"`` is the printed form ``C(D-d+Na-1, Na-1) / C(D+Na-1, Na-1)``,
    which does not sum to one.
    """
    if na < 2:
        raise DomainError("the finite size law needs at least two aggregates")
    d = np.asarray(d, dtype=float)
    inside = (d >= 0) & (d <= big_d)
    dd = np.where(inside, d, 0.0)
    log_total = log_binom(big_d + na - 1, na - 1)
    if variant == "corrected":
        logp = log_binom(big_d - dd + na - 2, na - 2) - log_total
    elif variant == "printed":
        logp = log_binom(big_d - dd + na - 1, na - 1) - log_total
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return np.where(inside, np.exp(logp), 0.0)


def size_pmf_finite_exact(d: int, na: int, big_d: int, variant: str = "corrected") -> Fraction:
    """Rational version of :func:`size_pmf_finite`."""
    if not 0 <= d <= big_d:
        return Fraction(0)
    total = math.comb(big_d + na - 1, na - 1)
    if variant == "corrected":
        return Fraction(math.comb(big_d - d + na - 2, na - 2), total)
    if variant == "printed":
        return Fraction(math.comb(big_d - d + na - 1, na - 1), total)
    raise ValueError(f"unknown variant {variant!r}")


def check_normalisation(na: int, big_d: int, variant: str) -> float:
    """Sum of the finite size law over ``d = 0..big_d``."""
    return float(size_pmf_finite(np.arange(big_d + 1), na, big_d, variant).sum())


def wealth_density_given_size(m, d: int, big_d: int, big_m: float):
    """Density of aggregate wealth ``m`` for an aggregate of ``d`` agents.

    ``m / big_m ~ Beta(d, big_d - d)``; defined for ``1 <= d <= big_d - 1``.
    """
    if not 1 <= d <= big_d - 1:
        raise DomainError(f"size {d} outside [1, {big_d - 1}]: Beta({d}, {big_d - d}) is undefined")
    x = np.asarray(m, dtype=float) / big_m
    inside = (x >= 0) & (x <= 1)
    xc = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (
            gammaln(big_d) - gammaln(d) - gammaln(big_d - d)
            + xlogy(d - 1, xc) + xlog1py(big_d - d - 1, -xc)
        )
    return np.where(inside, np.exp(logpdf) / big_m, 0.0)


def wealth_cdf_given_size(m, d: int, big_d: int, big_m: float):
    """CDF counterpart of :func:`wealth_density_given_size`; d=0 and d=D are point masses."""
    x = np.clip(np.asarray(m, dtype=float) / big_m, 0.0, 1.0)
    if d == 0:
        return np.where(np.asarray(m) >= 0, 1.0, 0.0)
    if d == big_d:
        return np.where(np.asarray(m) >= big_m, 1.0, 0.0)
    return betainc(d, big_d - d, x)


def joint_finite(m, d: int, na: int, big_d: int, big_m: float, variant: str = "corrected"):
    """Joint density of wealth and size for one aggregate (finite regime)."""
    return size_pmf_finite(d, na, big_d, variant) * wealth_density_given_size(m, d, big_d, big_m)


def _mixture_weights(na: int, big_d: int, cutoff: float):
    d = np.arange(big_d + 1)
    w = size_pmf_finite(d, na, big_d)
    keep = w > cutoff
    return d[keep], w[keep]


def wealth_mixture_cdf(m, na: int, big_d: int, big_m: float, cutoff: float = 1e-16):
    """Pooled aggregate-wealth CDF ``sum_d p(d) * F(m | d)``.

    Sizes with weight below ``cutoff`` are dropped.
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    ds, ws = _mixture_weights(na, big_d, cutoff)
    out = np.zeros(m.shape)
    for d, w in zip(ds, ws):
        out += w * wealth_cdf_given_size(m, int(d), big_d, big_m)
    return np.clip(out, 0.0, 1.0)


def wealth_mixture_density(m, na: int, big_d: int, big_m: float, cutoff: float = 1e-16):
    """Continuous part of the pooled wealth law (empty/full aggregates excluded)."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    ds, ws = _mixture_weights(na, big_d, cutoff)
    out = np.zeros(m.shape)
    for d, w in zip(ds, ws):
        if 1 <= d <= big_d - 1:
            out += w * wealth_density_given_size(m, int(d), big_d, big_m)
    return out


def wealth_mixture_cdf_interp(na: int, big_d: int, big_m: float, n_grid: int = 4000):
    """Fast callable approximating :func:`wealth_mixture_cdf` by interpolation.

    The grid spans ``[0, q]`` where ``q`` is where the CDF exceeds ``1 - 1e-12``.
    """
    mean = big_m / na
    hi = min(big_m, mean * 60.0)
    grid = np.linspace(0.0, hi, n_grid)
    values = wealth_mixture_cdf(grid, na, big_d, big_m)
    while values[-1] < 1 - 1e-12 and hi < big_m:
        hi = min(big_m, hi * 2)
        grid = np.linspace(0.0, hi, n_grid)
        values = wealth_mixture_cdf(grid, na, big_d, big_m)

    def cdf(m):
        return np.interp(np.asarray(m, dtype=float), grid, values, left=0.0, right=1.0)

    return cdf


def enumerate_compositions_oracle(na: int, big_d: int) -> dict[int, Fraction]:
    """Exact law of the first part over all weak compositions of ``big_d`` into ``na`` parts."""
    n_compositions = math.comb(big_d + na - 1, na - 1)
    if n_compositions > _ORACLE_LIMIT:
        raise ValueError(
            f"{n_compositions} compositions exceed the enumeration limit of {_ORACLE_LIMIT}"
        )
    counts: dict[int, int] = {}
    # stars and bars: choose na-1 bar positions among big_d + na - 1 slots
    for bars in itertools.combinations(range(big_d + na - 1), na - 1):
        first = bars[0] if bars else big_d
        counts[first] = counts.get(first, 0) + 1
    return {d: Fraction(c, n_compositions) for d, c in sorted(counts.items())}


def log_multiplicity(occupation, na: int) -> float:
    """``ln W`` for an occupation table ``{(m, d): n_md}``.

    ``W = na! / prod(n_md!) * prod(C(m+d-1, d-1) ** n_md)``, evaluated exactly
    through log-gamma (no Stirling approximation).
    """
    items = occupation.items() if hasattr(occupation, "items") else occupation
    cells = [(int(m), int(d), int(n)) for (m, d), n in items if n]
    if sum(n for _, _, n in cells) != na:
        raise DomainError("occupation numbers must sum to the number of aggregates")
    result = float(gammaln(na + 1))
    for m, d, n in cells:
        if d < 1 or m < 0:
            raise DomainError(f"cell (m={m}, d={d}) is outside m >= 0, d >= 1")
        result += -float(gammaln(n + 1)) + n * float(log_binom(m + d - 1, d - 1))
    return result


def limit_gap(na: int, mean_size: int, d_max_factor: float = 5.0) -> float:
    """Max |finite - large-Na| size probability over ``d in [1, factor * mean]``."""
    big_d = na * mean_size
    k = equilibrium_constants(MacroInvariants(na, big_d, float(big_d)))
    d = np.arange(1, int(d_max_factor * mean_size) + 1)
    return float(np.abs(size_pmf_finite(d, na, big_d) - size_marginal_large_na(d, k)).max())
