"""Parameter sweeps over initial size heterogeneity or locality."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import SweepSpec
from .engine import ObservableSeries, RunConfig, run
from .stats import StretchedExpFit, fit_stretched_exponential

log = logging.getLogger(__name__)


@dataclass
class SweepRun:
    axis_value: float
    seed: int
    series: ObservableSeries | None
    fit: StretchedExpFit | None
    error: str | None = None


@dataclass
class SweepRow:
    axis_value: float
    tau: float
    tau_stderr: float
    xi: float
    a: float
    rss: float
    n_runs: int


def _one(args) -> tuple[ObservableSeries | None, StretchedExpFit | None, str | None]:
    config, observable = args
    try:
        _, series = run(config)
        y = series.entropy_size if observable == "S_d" else series.entropy_money
        return series, fit_stretched_exponential(series.times, y), None
    except Exception as exc:  # a failed run must not stop the sweep
        return None, None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRun]:
    """Run every (value, replicate) pair; results ordered by (value, seed)."""
    jobs = [
        (value, spec.config_for(value, r))
        for value in spec.values
        for r in range(spec.replicates)
    ]
    payload = [(cfg, spec.observable) for _, cfg in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, payload))
    else:
        results = [_one(p) for p in payload]
    runs = [
        SweepRun(value, cfg.seed, series, fit, err)
        for (value, cfg), (series, fit, err) in zip(jobs, results)
    ]
    for r in runs:
        if r.error:
            log.warning("run %s=%g seed=%d failed: %s", spec.axis, r.axis_value, r.seed, r.error)
    return sorted(runs, key=lambda r: (r.axis_value, r.seed))


def summarize(runs: list[SweepRun]) -> list[SweepRow]:
    rows = []
    for value in sorted({r.axis_value for r in runs}):
        fits = [r.fit for r in runs if r.axis_value == value and r.fit is not None]
        if not fits:
            rows.append(SweepRow(value, np.nan, np.nan, np.nan, np.nan, np.nan, 0))
            continue
        taus = np.array([f.tau for f in fits])
        stderr = taus.std(ddof=1) / np.sqrt(taus.size) if taus.size > 1 else np.nan
        rows.append(SweepRow(
            value, float(taus.mean()), float(stderr),
            float(np.mean([f.xi for f in fits])), float(np.mean([f.a for f in fits])),
            float(np.mean([f.rss for f in fits])), len(fits),
        ))
    return rows


def tau_trend(rows: list[SweepRow]) -> dict:
    """Linear regression of mean tau on the axis value."""
    x = np.array([r.axis_value for r in rows])
    y = np.array([r.tau for r in rows])
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < 2:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan"),
                "strictly_increasing": False, "strictly_decreasing": False}
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    sst = ((y - y.mean()) ** 2).sum()
    r2 = 1 - (resid @ resid) / sst if sst > 0 else 0.0
    diffs = np.diff(y)
    return {
        "slope": float(slope),
        "intercept": float(intercept),
        "r2": float(r2),
        "strictly_increasing": bool((diffs > 0).all()),
        "strictly_decreasing": bool((diffs < 0).all()),
    }
