# coding: utf-8

# # How fast the entropies settle
#
# Starting from identical aggregates, the entropies of aggregate wealth (S_m)
# and size (S_d) rise and level off. A stretched exponential
# a(1 - exp(-(t/tau)^xi)) summarises each curve.

# In[1]:

from pathlib import Path

import numpy as np

from aggwealth.config import load_run_config
from aggwealth.engine import run
from aggwealth.stats import block_means, fit_stretched_exponential, relative_to_plateau

ROOT = Path(__file__).resolve().parents[1]
cfg = load_run_config(ROOT / "configs" / "baseline.yaml")
_, series = run(cfg)


# In[2]:

for name, y in (("S_m", series.entropy_money), ("S_d", series.entropy_size)):
    fit = fit_stretched_exponential(series.times, y)
    rel = relative_to_plateau(y)
    reached = series.times[np.argmax(rel >= 0.95)]
    print(f"{name}: a={fit.a:.3f} tau={fit.tau:.0f} xi={fit.xi:.2f} r2={fit.r2:.4f}; 95% of plateau at step {reached}")


# Block means over 10 samples show the rise without the sampling jitter.

# In[3]:

print(np.round(block_means(series.entropy_size, 10)[:12], 3))
