# coding: utf-8

# # Equilibration time against heterogeneity and locality
#
# Wider initial size spread shortens the time S_d needs to settle; keeping
# trade inside aggregates (larger p_in) lengthens the time for S_m.

# In[1]:

from pathlib import Path

from aggwealth.config import load_sweep_spec
from aggwealth.sweep import run_sweep, summarize, tau_trend

ROOT = Path(__file__).resolve().parents[1]

for name in ("sweep_sigma_d", "sweep_p_in"):
    spec = load_sweep_spec(ROOT / "configs" / f"{name}.yaml")
    rows = summarize(run_sweep(spec, workers=2))
    for r in rows:
        print(f"{spec.axis}={r.axis_value:g}: tau = {r.tau:.2f} +/- {r.tau_stderr:.2f}")
    trend = tau_trend(rows)
    print(f"slope {trend['slope']:.3g}, R^2 {trend['r2']:.3f}\n")
