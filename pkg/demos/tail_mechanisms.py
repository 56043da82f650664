# coding: utf-8

# # Wealth tails under three migration rules
#
# ln(-ln CCDF) against ln x is a straight line of slope beta for a
# stretched-exponential tail. Moving a size-independent block of agents
# (base), a block proportional to the source size (linear), or one
# proportional to size^0.9 (sublinear) changes beta.

# In[1]:

import dataclasses
from pathlib import Path

from aggwealth.config import load_run_config
from aggwealth.engine import run
from aggwealth.stats import tail_exponent

ROOT = Path(__file__).resolve().parents[1]
cfg = load_run_config(ROOT / "configs" / "desk_tail.yaml")


# In[2]:

for mechanism in ("linear", "base", "sublinear"):
    betas = []
    for seed in (1, 2, 3):
        c = dataclasses.replace(cfg, seed=seed,
                                migration_kernel=dataclasses.replace(cfg.migration_kernel, mechanism=mechanism))
        _, series = run(c)
        fit = tail_exponent(series.pooled_wealths())
        betas.append(fit.beta)
    print(f"{mechanism:9s} beta = " + ", ".join(f"{b:.3f}" for b in betas))
