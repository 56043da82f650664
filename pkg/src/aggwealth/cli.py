"""Command line: ``aggwealth {run,sweep,theory,validate}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, theory
from .config import (
    config_hash, dump_config, load_run_config, load_sweep_spec, run_config_to_dict, SchemaError,
)
from .engine import RunConfig, equilibrium_snapshot, run
from .model import ConfigError, MacroInvariants, read_snapshot, validate_invariants, write_snapshot
from .stats import StatsError, fit_stretched_exponential, loglog_ccdf, fit_slope
from .sweep import run_sweep, summarize, tau_trend
from .validation import validate

log = logging.getLogger("aggwealth")

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _header(seed, digest) -> str:
    return f"# aggwealth {__version__} seed={seed} config={digest}"


def _write_csv(path: Path, header: str, columns: list[str], rows) -> None:
    lines = [header, ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=float) + "\n")


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    config = load_run_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.print_config:
        sys.stdout.write(dump_config(run_config_to_dict(config)))
        return EXIT_OK

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(config)
    header = _header(config.seed, digest)
    if config.event_log:
        config = dataclasses.replace(config, event_log=str(out / config.event_log))

    state, series = run(config)
    inv = config.invariants
    series.to_csv(out / "series.csv", header=header)
    write_snapshot(state, inv, out / "snapshot.csv", header=header)

    if series.snapshot_sizes:
        rows = []
        sample_times = [t for t in series.times if config.snapshot_after is not None and t >= config.snapshot_after]
        for t, sizes, wealths in zip(sample_times, series.snapshot_sizes, series.snapshot_wealths):
            rows.extend((t, g, int(s), float(w)) for g, (s, w) in enumerate(zip(sizes, wealths)))
        _write_csv(out / "aggregates.csv", header, ["step", "aggregate_id", "size", "wealth"], rows)

    conservation = validate_invariants(state, inv)
    summary = {
        "version": __version__,
        "seed": config.seed,
        "config_hash": digest,
        "steps": config.steps,
        "final_S_m": float(series.entropy_money[-1]),
        "final_S_d": float(series.entropy_size[-1]),
        "entropy_bin_width": series.bin_width,
        "n_active_aggregates": int(series.active_aggregates[-1]),
        "conservation": conservation,
    }
    summary.update(_fits(series, state, out, header))
    _json(out / "summary.json", summary)

    for name, ok in conservation.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"final S_m={summary['final_S_m']:.6f} S_d={summary['final_S_d']:.6f} -> {out}")
    return EXIT_OK if all(conservation.values()) else EXIT_FAILED_CHECK


def _fits(series, state, out: Path, header: str) -> dict:
    result = {}
    rows = []
    fits = {}
    for name, y in (("S_m", series.entropy_money), ("S_d", series.entropy_size)):
        try:
            fits[name] = fit_stretched_exponential(series.times, y)
            f = fits[name]
            result[f"fit_{name}"] = {"a": f.a, "tau": f.tau, "xi": f.xi, "rss": f.rss, "r2": f.r2,
                                     "converged": f.converged}
        except StatsError as exc:
            result[f"fit_{name}"] = {"error": str(exc)}
    for i, t in enumerate(series.times):
        row = [int(t)]
        for name, y in (("S_m", series.entropy_money), ("S_d", series.entropy_size)):
            row += [float(y[i]), float(fits[name](t)) if name in fits else float("nan")]
        rows.append(row)
    _write_csv(out / "fit_entropy.csv", header, ["step", "S_m", "S_m_fit", "S_d", "S_d_fit"], rows)

    wealths = series.pooled_wealths() if series.snapshot_wealths else equilibrium_snapshot(state)[1]
    wealths = wealths[wealths > 0]
    try:
        lx, ly = loglog_ccdf(wealths)
        slope = fit_slope(lx, ly)
        _write_csv(out / "ccdf.csv", header, ["ln_x", "ln_neg_ln_ccdf", "fit"],
                   zip(lx, ly, slope.beta * lx + slope.intercept))
        result["tail"] = {"beta": slope.beta, "intercept": slope.intercept, "r2": slope.r2,
                          "fit_range": list(slope.fit_range)}
    except StatsError as exc:
        result["tail"] = {"error": str(exc)}
    return result


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, base_config=dataclasses.replace(spec.base_config, seed=args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = _header(spec.base_config.seed, config_hash(spec.base_config))

    runs = run_sweep(spec, workers=args.workers)
    for r in runs:
        if r.series is not None:
            r.series.to_csv(out / f"series_{spec.axis}={r.axis_value:g}_seed={r.seed}.csv", header=header)
    _write_csv(
        out / "sweep_runs.csv", header,
        [spec.axis, "seed", "tau", "xi", "a", "rss", "r2", "status"],
        [
            (r.axis_value, r.seed, r.fit.tau, r.fit.xi, r.fit.a, r.fit.rss, r.fit.r2, "ok")
            if r.fit else (r.axis_value, r.seed, "nan", "nan", "nan", "nan", "nan", "failed")
            for r in runs
        ],
    )
    rows = summarize(runs)
    _write_csv(
        out / "sweep_table.csv", header,
        [spec.axis, "tau", "tau_stderr", "xi", "a", "rss", "n_runs"],
        [(r.axis_value, r.tau, r.tau_stderr, r.xi, r.a, r.rss, r.n_runs) for r in rows],
    )
    trend = tau_trend(rows)
    failures = [r for r in runs if r.error]
    _json(out / "sweep_summary.json", {
        "axis": spec.axis, "observable": spec.observable, "trend": trend,
        "failed_runs": [{"value": r.axis_value, "seed": r.seed, "error": r.error} for r in failures],
    })
    for r in rows:
        print(f"{spec.axis}={r.axis_value:g}: tau={r.tau:.4g} +/- {r.tau_stderr:.2g} (xi={r.xi:.3g}, n={r.n_runs})")
    print(f"tau vs {spec.axis}: slope={trend['slope']:.4g} R^2={trend['r2']:.3f}")
    if failures:
        print(f"{len(failures)} of {len(runs)} runs failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# theory


def _invariants_from_args(args) -> MacroInvariants:
    if args.config:
        return load_run_config(args.config).invariants
    if None in (args.n_aggregates, args.n_agents, args.total_money):
        raise ConfigError("give --config or all of --n-aggregates, --n-agents, --total-money")
    return MacroInvariants(args.n_aggregates, args.n_agents, args.total_money)


def cmd_theory(args) -> int:
    inv = _invariants_from_args(args)
    na, big_d, big_m = inv.n_aggregates, inv.n_agents, inv.total_money
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = f"# aggwealth {__version__} theory Na={na} D={big_d} M={big_m!r}"
    d_max = args.d_max or int(min(big_d, 8 * big_d / na))

    if args.large_na and big_d <= na and na >= 2:
        print(f"note: large-Na laws need n_agents > n_aggregates; skipped for D={big_d}, Na={na}",
              file=sys.stderr)
    elif args.large_na:
        k = theory.equilibrium_constants(inv)
        d = np.arange(1, d_max + 1)
        _write_csv(out / "size_large_na.csv", header, ["d", "p"], zip(d, theory.size_marginal_large_na(d, k)))
        m = np.unique(np.rint(np.linspace(0, min(big_m, 8 * big_m / na), args.points)).astype(np.int64))
        _write_csv(out / "wealth_large_na.csv", header, ["m", "p"], zip(m, theory.wealth_marginal_large_na(m, k)))
        _json(out / "constants.json", {"C": k.c, "alpha": k.alpha, "beta": k.beta,
                                       "convergence_gap": k.convergence_gap()})
        mean = float((d * theory.size_marginal_large_na(d, k)).sum())
        print(f"large-Na constants: C={k.c:.6g} alpha={k.alpha:.6g} beta={k.beta:.6g}; "
              f"size mean over d<={d_max}: {mean:.6g}")

    if na >= 2:
        d = np.arange(0, min(big_d, d_max) + 1)
        columns, cols = ["d"], [d]
        if args.variant in ("corrected", "both"):
            columns.append("p_corrected")
            cols.append(theory.size_pmf_finite(d, na, big_d, "corrected"))
        if args.variant in ("printed", "both"):
            columns.append("p_printed")
            cols.append(theory.size_pmf_finite(d, na, big_d, "printed"))
            total = theory.check_normalisation(na, big_d, "printed")
            warn = f"# warning: printed-form size law sums to {total!r} over d=0..{big_d}, not 1"
            print(warn.lstrip("# "), file=sys.stderr)
            header_f = header + "\n" + warn
        else:
            header_f = header
        _write_csv(out / "size_finite.csv", header_f, columns, zip(*cols))

        sizes = args.sizes or sorted({max(1, int(round(f * big_d / na))) for f in (0.5, 1, 2)})
        m = np.linspace(0, min(big_m, 8 * big_m / na), args.points)
        rows = []
        for s in sizes:
            if 1 <= s <= big_d - 1:
                rows.extend(zip(m, [s] * m.size, theory.wealth_density_given_size(m, s, big_d, big_m)))
        _write_csv(out / "wealth_given_size.csv", header, ["m", "d", "density"], rows)

    if args.oracle:
        exact = theory.enumerate_compositions_oracle(na, big_d)
        rows = []
        worst = 0.0
        for d_val in range(big_d + 1):
            p_oracle = float(exact.get(d_val, 0))
            p_formula = float(theory.size_pmf_finite(d_val, na, big_d)) if na >= 2 else float(d_val == big_d)
            worst = max(worst, abs(p_oracle - p_formula))
            rows.append((d_val, str(exact.get(d_val, 0)), p_oracle, p_formula))
        _write_csv(out / "oracle.csv", header, ["d", "p_exact", "p_oracle", "p_corrected"], rows)
        print(f"enumeration oracle vs corrected law: max |diff| = {worst:.3g}")
    print(f"theory curves -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    run_dir = Path(args.run_dir)
    snapshot = run_dir / "snapshot.csv"
    if not snapshot.exists():
        raise FileNotFoundError(f"missing run artifact {snapshot}")
    agent_agg, agent_wealth, meta = read_snapshot(snapshot)
    na = int(meta.get("n_aggregates", agent_agg.max() + 1))
    big_d = int(meta.get("n_agents", agent_agg.size))
    big_m = float(meta.get("total_money", agent_wealth.sum()))

    pooled = run_dir / "aggregates.csv"
    if pooled.exists() and not args.final_only:
        data = np.loadtxt(pooled, delimiter=",", comments="#", skiprows=2)
        data = np.atleast_2d(data)
        sizes, wealths = data[:, 2].astype(np.int64), data[:, 3]
        source = f"{pooled.name} ({sizes.size} aggregate samples)"
    else:
        sizes = np.bincount(agent_agg, minlength=na)
        wealths = np.bincount(agent_agg, weights=agent_wealth, minlength=na)
        source = f"{snapshot.name} ({na} aggregates)"

    check_agents = args.agents or na == 1
    report = validate(
        sizes, wealths, na, big_d, big_m,
        agent_wealth=agent_wealth if check_agents else None,
        tv_threshold=args.tv_threshold, ks_threshold=args.ks_threshold,
        agent_ks_threshold=args.agent_ks_threshold, size_bin=args.size_bin,
        discrete=bool(np.all(np.mod(agent_wealth, 1) == 0)),
    )
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    result = report.as_dict()
    result["source"] = source
    _json(out / "gof_report.json", result)
    print(f"validating {source}")
    for c in report.checks:
        print(c.line())
    if not report.passed:
        print("VALIDATION FAILED", file=sys.stderr)
        return EXIT_FAILED_CHECK
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--workers", type=int, default=1, help="parallel runs (sweep only)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aggwealth", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate one configuration")
    p.add_argument("config", help="YAML run config")
    p.add_argument("--print-config", action="store_true", help="echo the effective config and exit")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="sweep sigma_d or p_in and fit convergence times")
    p.add_argument("spec", help="YAML sweep spec")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("theory", parents=[common], help="tabulate the analytic laws")
    p.add_argument("--config", help="take invariants from a run config")
    p.add_argument("--n-aggregates", type=int)
    p.add_argument("--n-agents", type=int)
    p.add_argument("--total-money", type=float)
    p.add_argument("--d-max", type=int, default=None)
    p.add_argument("--points", type=int, default=401, help="wealth grid points")
    p.add_argument("--sizes", type=int, nargs="*", help="sizes for the conditional wealth densities")
    p.add_argument("--variant", choices=("corrected", "printed", "both"), default="both",
                   help="finite size law variant(s) to emit")
    p.add_argument("--no-large-na", dest="large_na", action="store_false", help="skip the large-Na laws")
    p.add_argument("--oracle", action="store_true", help="also enumerate compositions (tiny systems)")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("validate", parents=[common], help="compare run artifacts to theory")
    p.add_argument("run_dir", help="directory written by 'run'")
    p.add_argument("--tv-threshold", type=float, default=0.02)
    p.add_argument("--ks-threshold", type=float, default=0.03)
    p.add_argument("--agent-ks-threshold", type=float, default=0.02)
    p.add_argument("--size-bin", type=int, default=None, help="size bin width for total variation")
    p.add_argument("--agents", action="store_true", help="also test agent wealth against the exponential law")
    p.add_argument("--final-only", action="store_true", help="ignore pooled aggregates.csv samples")
    p.set_defaults(func=cmd_validate, out=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, theory.DomainError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
