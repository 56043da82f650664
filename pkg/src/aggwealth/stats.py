"""Observables and fits: entropies, CCDF tail transform, slope and
stretched-exponential fitting, goodness-of-fit distances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.total


def histogram(values, bin_width: float, origin: float = 0.0) -> Histogram:
    """Fixed-width histogram starting at ``origin`` and covering every value."""
    if not bin_width > 0:
        raise StatsError("bin_width must be positive")
    values = np.asarray(values, dtype=float)
    idx = np.floor((values - origin) / bin_width).astype(np.int64)
    if idx.size and idx.min() < 0:
        raise StatsError("values below the histogram origin")
    counts = np.bincount(idx, minlength=1)
    edges = origin + bin_width * np.arange(counts.size + 1)
    return Histogram(edges, counts, int(values.size))


def shannon_entropy(probs) -> float:
    """Natural-log entropy; zero probabilities contribute nothing."""
    p = np.asarray(probs, dtype=float)
    if (p < 0).any():
        raise StatsError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise StatsError(f"probabilities sum to {p.sum()!r}, not 1")
    nz = p[p > 0]
    return float(max(0.0, -(nz * np.log(nz)).sum()))


def _counts_entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    counts = counts[counts > 0]
    n = counts.sum()
    return float(max(0.0, math.log(n) - (counts * np.log(counts)).sum() / n))


def entropy_money(wealths, bin_width: float) -> float:
    """Entropy of aggregate wealth binned from zero with width ``bin_width``."""
    return _counts_entropy(histogram(wealths, bin_width).counts)


def entropy_size(sizes) -> float:
    """Entropy of the exact size frequencies (sizes are already discrete)."""
    _, counts = np.unique(np.asarray(sizes), return_counts=True)
    return _counts_entropy(counts)


def relative_to_plateau(series, tail_fraction: float = 0.2) -> np.ndarray:
    """Series divided by the mean of its last ``tail_fraction`` of samples."""
    series = np.asarray(series, dtype=float)
    k = max(1, int(round(tail_fraction * series.size)))
    level = series[-k:].mean()
    return series / level if level > 0 else np.zeros_like(series)


# ---------------------------------------------------------------------------
# tail exponent


@dataclass(frozen=True)
class SlopeFit:
    beta: float
    intercept: float
    r2: float
    fit_range: tuple[float, float]
    n_points: int

    @property
    def x0(self) -> float:
        """Scale ``x0`` in ``exp(-(x/x0)**beta)``."""
        return math.exp(-self.intercept / self.beta)


def loglog_transform(x, ccdf):
    """``(ln x, ln(-ln ccdf))`` keeping only points with ``0 < ccdf < 1`` and ``x > 0``."""
    x = np.asarray(x, dtype=float)
    ccdf = np.asarray(ccdf, dtype=float)
    ok = (ccdf > 0) & (ccdf < 1) & (x > 0)
    return np.log(x[ok]), np.log(-np.log(ccdf[ok]))


def loglog_ccdf(samples):
    """Empirical ``(ln x, ln(-ln CCDF))`` with plotting positions ``rank/(n+1)``.

    Tied values share the CCDF of their highest rank. Samples must be positive.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 10:
        raise StatsError("need at least 10 samples")
    if x[0] <= 0:
        raise StatsError("samples must be positive; drop empty aggregates first")
    if x[0] == x[-1]:
        raise StatsError("all samples are equal; the CCDF is degenerate")
    values, last = np.unique(x[::-1], return_index=True)
    rank = n - last  # highest 1-based rank of each distinct value
    ccdf = 1.0 - rank / (n + 1.0)
    return loglog_transform(values, ccdf)


def _central_range(lx, fraction=0.8):
    lo, hi = float(lx.min()), float(lx.max())
    trim = 0.5 * (1 - fraction) * (hi - lo)
    return lo + trim, hi - trim


def fit_slope(lx, ly, fit_range: tuple[float, float] | None = None) -> SlopeFit:
    """Least-squares line through the transformed points.

    ``fit_range`` bounds ``ln x``; by default the central 80% of its span.
    """
    lx = np.asarray(lx, dtype=float)
    ly = np.asarray(ly, dtype=float)
    if fit_range is None:
        fit_range = _central_range(lx)
    sel = (lx >= fit_range[0]) & (lx <= fit_range[1])
    if sel.sum() < 5:
        raise StatsError(f"only {int(sel.sum())} points inside the fit range; need 5")
    xs, ys = lx[sel], ly[sel]
    xm, ym = xs.mean(), ys.mean()
    sxx = ((xs - xm) ** 2).sum()
    slope = ((xs - xm) * (ys - ym)).sum() / sxx
    intercept = ym - slope * xm
    sst = ((ys - ym) ** 2).sum()
    sse = ((ys - intercept - slope * xs) ** 2).sum()
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), float(min(1.0, max(0.0, r2))), tuple(map(float, fit_range)), int(sel.sum()))


def tail_exponent(samples, fit_range=None) -> SlopeFit:
    """Tail slope of the positive samples; zeros (empty aggregates) are dropped."""
    samples = np.asarray(samples, dtype=float)
    lx, ly = loglog_ccdf(samples[samples > 0])
    return fit_slope(lx, ly, fit_range)


# ---------------------------------------------------------------------------
# stretched exponential


@dataclass(frozen=True)
class StretchedExpFit:
    a: float
    tau: float
    xi: float
    rss: float
    r2: float
    converged: bool
    grid_rss: float

    def __call__(self, t):
        return stretched_exponential(t, self.a, self.tau, self.xi)


def stretched_exponential(t, a, tau, xi):
    """``a * (1 - exp(-(t/tau)**xi))``"""
    t = np.asarray(t, dtype=float)
    return a * -np.expm1(-((t / tau) ** xi))


def _profile(t, y, log_tau, log_xi):
    shape = -np.expm1(-np.exp(np.exp(log_xi) * (np.log(t) - log_tau)))
    gg = shape @ shape
    a = (shape @ y) / gg if gg > 0 else 0.0
    r = y - a * shape
    return a, float(r @ r)


def fit_stretched_exponential(times, values, n_tau: int = 60, n_xi: int = 40, rtol: float = 1e-4) -> StretchedExpFit:
    """Least-squares fit of ``a * (1 - exp(-(t/tau)**xi))``.

    A log-spaced grid over ``(tau, xi)`` is searched with ``a`` solved in
    closed form at each node; the best node is refined with Nelder-Mead on the
    profiled residual and then polished jointly in all three parameters. If
    refinement does not beat the grid the grid optimum is returned with
    ``converged=False``. Points at ``t <= 0`` are ignored.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = t > 0
    t, y = t[keep], y[keep]
    if t.size < 10:
        raise StatsError("need at least 10 points with t > 0")

    dt = np.diff(np.sort(t))
    t_lo = max(dt[dt > 0].min() if (dt > 0).any() else t.min(), 1e-12) * 0.05
    taus = np.geomspace(t_lo, t.max() * 20, n_tau)
    xis = np.geomspace(0.1, 5.0, n_xi)
    log_t = np.log(t)
    best = (np.inf, 0.0, 0.0, 0.0)
    for tau in taus:
        z = log_t - math.log(tau)
        for xi in xis:
            shape = -np.expm1(-np.exp(xi * z))
            gg = shape @ shape
            a = (shape @ y) / gg if gg > 0 else 0.0
            r = y - a * shape
            rss = float(r @ r)
            if rss < best[0]:
                best = (rss, a, tau, xi)
    grid_rss, a0, tau0, xi0 = best

    objective = lambda p: _profile(t, y, p[0], p[1])[1]
    res = optimize.minimize(
        objective, [math.log(tau0), math.log(xi0)], method="Nelder-Mead",
        bounds=[(math.log(taus[0]) - 5, math.log(taus[-1]) + 5), (math.log(0.01), math.log(50.0))],
        options={"xatol": rtol * 0.1, "fatol": 0.0, "maxiter": 4000, "maxfev": 8000},
    )
    a1, rss1 = _profile(t, y, *res.x)
    tau1, xi1 = math.exp(res.x[0]), math.exp(res.x[1])

    # joint polish; scale-free parametrisation keeps the Jacobian well conditioned
    def resid(p):
        return p[0] * -np.expm1(-np.exp(math.exp(p[2]) * (log_t - p[1]))) - y

    polished = False
    try:
        pol = optimize.least_squares(
            resid, [a1, math.log(tau1), math.log(xi1)], method="lm", xtol=1e-12, ftol=1e-14, gtol=1e-14
        )
        rss2 = float(pol.fun @ pol.fun)
        if np.all(np.isfinite(pol.x)) and rss2 <= rss1:
            a1, tau1, xi1, rss1 = float(pol.x[0]), math.exp(pol.x[1]), math.exp(pol.x[2]), rss2
            polished = bool(pol.success)
    except (ValueError, OverflowError):
        pass

    converged = (bool(res.success) or polished) and rss1 <= grid_rss
    if rss1 > grid_rss:
        a1, tau1, xi1, rss1 = a0, tau0, xi0, grid_rss
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss1 / tss if tss > 0 else 0.0
    return StretchedExpFit(float(a1), float(tau1), float(xi1), float(rss1), float(r2), converged, float(grid_rss))


# ---------------------------------------------------------------------------
# goodness of fit


def ks_distance(samples, cdf) -> float:
    """``sup |F_n - F|`` comparing both right values and left limits.

    Unlike the textbook formula this stays exact when ``cdf`` has atoms
    (e.g. empty aggregates holding exactly zero wealth).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise StatsError("no samples")
    values, first = np.unique(x, return_index=True)
    below = first / n
    upto = np.append(first[1:], n) / n
    f_right = np.asarray(cdf(values), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(values, -np.inf)), dtype=float)
    return float(max(np.abs(upto - f_right).max(), np.abs(below - f_left).max()))


def _as_pmf(reference) -> dict:
    if isinstance(reference, dict):
        return {int(k): float(v) for k, v in reference.items()}
    ref = np.asarray(reference, dtype=float)
    if ref.ndim != 1:
        raise StatsError("a discrete reference must be a 1-d pmf over 0..K or a dict")
    return {int(k): float(v) for k, v in enumerate(ref) if v != 0}


def _empirical(samples) -> dict:
    s = np.asarray(samples)
    if not np.issubdtype(s.dtype, np.integer):
        if not np.all(np.mod(s, 1) == 0):
            raise StatsError("discrete distances need integer-valued samples")
        s = s.astype(np.int64)
    values, counts = np.unique(s, return_counts=True)
    return {int(v): c / s.size for v, c in zip(values, counts)}


def _group(pmf: dict, bin_width: int) -> dict:
    out: dict = {}
    for k, v in pmf.items():
        out[k // bin_width] = out.get(k // bin_width, 0.0) + v
    return out


def gof_distance(samples, reference, kind: str = "ks", bin_width: int | None = None) -> float:
    """Distance between a sample and a reference law.

    ``kind="ks"`` needs a callable CDF. ``"total_variation"`` and
    ``"chi_square"`` need a discrete pmf (array over ``0..K`` or dict) and
    integer samples; ``bin_width`` groups consecutive integers first.
    ``chi_square`` is Pearson's statistic divided by the sample size (so it is
    0 for exact agreement) and refuses samples outside the reference support.
    """
    if kind == "ks":
        if not callable(reference):
            raise StatsError("Kolmogorov-Smirnov needs a callable CDF reference")
        return ks_distance(samples, reference)
    if callable(reference):
        raise StatsError(f"{kind} needs a discrete pmf reference, not a CDF")

    emp = _empirical(samples)
    ref = _as_pmf(reference)
    if bin_width is not None and bin_width > 1:
        emp, ref = _group(emp, bin_width), _group(ref, bin_width)
    if kind == "total_variation":
        keys = emp.keys() | ref.keys()
        return 0.5 * float(sum(abs(emp.get(k, 0.0) - ref.get(k, 0.0)) for k in keys))
    if kind == "chi_square":
        outside = [k for k in emp if ref.get(k, 0.0) <= 0.0]
        if outside:
            raise StatsError(f"samples fall outside the reference support at {outside[:5]}")
        return float(sum((emp.get(k, 0.0) - p) ** 2 / p for k, p in ref.items() if p > 0))
    raise StatsError(f"unknown distance kind {kind!r}")


def block_means(series, window: int) -> np.ndarray:
    """Means over consecutive non-overlapping windows (trailing remainder dropped)."""
    series = np.asarray(series, dtype=float)
    n = series.size // window
    return series[: n * window].reshape(n, window).mean(axis=1)
