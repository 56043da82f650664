import numpy as np
import pytest

from aggwealth import theory, validation
from aggwealth.config import SweepSpec
from aggwealth.engine import RunConfig
from aggwealth.model import MacroInvariants, SizeInitSpec
from aggwealth.sweep import SweepRow, run_sweep, summarize, tau_trend


def exact_sample(na, big_d, big_m, n, seed):
    """Independent draws from the finite law: a Dirichlet-multinomial composition."""
    rng = np.random.default_rng(seed)
    sizes = []
    wealths = []
    for _ in range(n // na):
        # uniform weak composition via random bar positions
        bars = np.sort(rng.choice(big_d + na - 1, na - 1, replace=False))
        parts = np.diff(np.r_[-1, bars, big_d + na - 1]) - 1
        shares = rng.dirichlet(np.ones(big_d))
        owner = np.repeat(np.arange(na), parts)
        sizes.append(parts)
        wealths.append(np.bincount(owner, weights=shares * big_m, minlength=na))
    return np.concatenate(sizes), np.concatenate(wealths)


def test_exact_samples_pass_every_check():
    sizes, wealths = exact_sample(20, 400, 4000.0, 40_000, seed=0)
    report = validation.validate(sizes, wealths, 20, 400, 4000.0)
    assert report.passed, [c.line() for c in report.checks]


def test_equal_sizes_fail():
    sizes = np.full(1000, 20)
    wealths = np.full(1000, 200.0)
    report = validation.validate(sizes, wealths, 20, 400, 4000.0)
    assert not report.passed
    assert report.as_dict()["passed"] is False


def test_agent_exponential_check():
    w = np.random.default_rng(1).exponential(50.0, 10_000)
    assert validation.agent_vs_exponential(w, 50.0) < 0.02
    assert validation.agent_vs_exponential(w, 70.0) > 0.05


def test_conditional_pit_is_uniform_for_beta_draws():
    rng = np.random.default_rng(2)
    d = rng.integers(1, 99, 5000)
    m = 1000.0 * rng.beta(d, 100 - d)
    u = validation.conditional_pit(d, m, 100, 1000.0)
    assert abs(u.mean() - 0.5) < 0.02


def test_check_line_format():
    c = validation.Check("x", 0.01, 0.02, "ks")
    assert c.line().startswith("PASS x: ks = 0.01000")
    assert validation.Check("y", 0.5, None, "ks").line().startswith("INFO")
    assert validation.Check("z", float("nan"), 1.0, "ks").passed is False


def test_size_vs_large_na_on_geometric_draws():
    na, big_d = 100, 10_000
    k = theory.equilibrium_constants(MacroInvariants(na, big_d, 1e6))
    p = 1 - k.x / (1 - k.y)
    sizes = np.random.default_rng(3).geometric(p, 400_000)
    assert validation.size_vs_large_na(sizes, na, big_d, 1e6) < 0.01


# sweep -----------------------------------------------------------------------


def test_tau_trend():
    rows = [SweepRow(v, t, 0.1, 1.0, 1.0, 0.0, 3) for v, t in [(0, 10.0), (1, 12.0), (2, 14.1), (3, 15.9)]]
    trend = tau_trend(rows)
    assert trend["strictly_increasing"] and not trend["strictly_decreasing"]
    assert trend["r2"] > 0.99
    assert trend["slope"] == pytest.approx(1.97, abs=0.01)


def test_small_sweep_runs_and_summarises():
    base = RunConfig(MacroInvariants(50, 1000, 10_000.0), SizeInitSpec("fixed", 20), 10.0,
                     steps=60, transactions_per_step=200, migrations_per_step=2, sample_every=2, seed=5)
    spec = SweepSpec("p_in", (0.0, 0.9), base, replicates=2)
    runs = run_sweep(spec, workers=1)
    assert [(r.axis_value, r.seed) for r in runs] == [(0.0, 5), (0.0, 6), (0.9, 5), (0.9, 6)]
    assert all(r.fit is not None and r.error is None for r in runs)
    rows = summarize(runs)
    assert [r.n_runs for r in rows] == [2, 2]
    assert np.isfinite(rows[0].tau_stderr)
