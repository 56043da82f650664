"""Simulation-versus-theory comparisons."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps
from scipy.special import betainc

from . import theory
from .stats import gof_distance


@dataclass
class Check:
    name: str
    statistic: float
    threshold: float | None
    kind: str
    note: str = ""

    @property
    def passed(self) -> bool | None:
        if self.threshold is None:
            return None
        return bool(np.isfinite(self.statistic) and self.statistic <= self.threshold)

    def line(self) -> str:
        verdict = {True: "PASS", False: "FAIL", None: "INFO"}[self.passed]
        limit = "" if self.threshold is None else f" (threshold {self.threshold:g})"
        note = f"  [{self.note}]" if self.note else ""
        return f"{verdict} {self.name}: {self.kind} = {self.statistic:.5f}{limit}{note}"


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "kind": c.kind, "statistic": c.statistic, "threshold": c.threshold,
                 "passed": c.passed, "note": c.note}
                for c in self.checks
            ],
        }


def default_size_bin(na: int, big_d: int) -> int:
    return max(1, int(round(big_d / na / 10)))


def size_vs_finite(sizes, na: int, big_d: int, bin_width: int | None = None) -> float:
    """Total variation between observed sizes and the finite composition law."""
    bin_width = default_size_bin(na, big_d) if bin_width is None else bin_width
    pmf = theory.size_pmf_finite(np.arange(big_d + 1), na, big_d)
    return gof_distance(np.asarray(sizes, dtype=np.int64), pmf, "total_variation", bin_width=bin_width)


def size_vs_large_na(sizes, na: int, big_d: int, big_m: float, bin_width: int | None = None) -> float:
    bin_width = default_size_bin(na, big_d) if bin_width is None else bin_width
    k = theory.equilibrium_constants(theory.MacroInvariants(na, big_d, big_m))
    d = np.arange(0, big_d + 1)
    pmf = np.where(d >= 1, theory.size_marginal_large_na(np.maximum(d, 1), k), 0.0)
    return gof_distance(np.asarray(sizes, dtype=np.int64), pmf, "total_variation", bin_width=bin_width)


def wealth_vs_mixture(wealths, na: int, big_d: int, big_m: float) -> float:
    """KS distance of pooled aggregate wealth to ``sum_d p(d) * Beta`` law."""
    cdf = theory.wealth_mixture_cdf_interp(na, big_d, big_m)
    return gof_distance(wealths, cdf, "ks")


def conditional_pit(sizes, wealths, big_d: int, big_m: float) -> np.ndarray:
    """Probability-integral transform of each wealth under its own size's Beta law.

    Empty and all-inclusive aggregates carry no information and are skipped.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    wealths = np.asarray(wealths, dtype=float)
    ok = (sizes >= 1) & (sizes <= big_d - 1)
    return betainc(sizes[ok], big_d - sizes[ok], np.clip(wealths[ok] / big_m, 0, 1))


def wealth_vs_conditional(sizes, wealths, big_d: int, big_m: float) -> float:
    u = conditional_pit(sizes, wealths, big_d, big_m)
    return float(sps.kstest(u, "uniform").statistic)


def agent_vs_exponential(agent_wealth, mean: float) -> float:
    return float(sps.kstest(np.asarray(agent_wealth, dtype=float), "expon", args=(0, mean)).statistic)


def aggregate_wealth_vs_large_na(wealths, na: int, big_d: int, big_m: float, bin_width: int | None = None) -> float:
    """TV of integer aggregate wealth against the large-Na geometric wealth law."""
    k = theory.equilibrium_constants(theory.MacroInvariants(na, big_d, big_m))
    m = np.arange(0, int(big_m) + 1)
    pmf = theory.wealth_marginal_large_na(m, k)
    bin_width = bin_width or max(1, int(round(big_m / na / 10)))
    return gof_distance(np.rint(wealths).astype(np.int64), pmf, "total_variation", bin_width=bin_width)


def validate(
    sizes,
    wealths,
    na: int,
    big_d: int,
    big_m: float,
    agent_wealth=None,
    tv_threshold: float = 0.02,
    ks_threshold: float = 0.03,
    agent_ks_threshold: float = 0.02,
    size_bin: int | None = None,
    discrete: bool = False,
) -> Report:
    """Run every applicable comparison and collect pass/fail lines."""
    report = Report()
    sizes = np.asarray(sizes, dtype=np.int64)
    wealths = np.asarray(wealths, dtype=float)
    n = sizes.size
    if na >= 2:
        sb = default_size_bin(na, big_d) if size_bin is None else size_bin
        report.checks.append(Check(
            "size vs finite law", size_vs_finite(sizes, na, big_d, sb), tv_threshold,
            "total_variation", f"{n} samples, bin {sb}",
        ))
        if big_d > na:
            report.checks.append(Check(
                "size vs large-Na law", size_vs_large_na(sizes, na, big_d, big_m, sb), None,
                "total_variation", f"bin {sb}",
            ))
        report.checks.append(Check(
            "pooled wealth vs Beta mixture", wealth_vs_mixture(wealths, na, big_d, big_m), ks_threshold, "ks",
        ))
        report.checks.append(Check(
            "wealth given size vs Beta law", wealth_vs_conditional(sizes, wealths, big_d, big_m), ks_threshold,
            "ks", "probability integral transform",
        ))
        if discrete and big_d > na:
            report.checks.append(Check(
                "discrete wealth vs large-Na law", aggregate_wealth_vs_large_na(wealths, na, big_d, big_m), None,
                "total_variation",
            ))
    if agent_wealth is not None:
        report.checks.append(Check(
            "agent wealth vs exponential", agent_vs_exponential(agent_wealth, big_m / big_d), agent_ks_threshold, "ks",
            f"mean {big_m / big_d:g}",
        ))
    return report
