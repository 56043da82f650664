# coding: utf-8

# # Sizes and wealths after equilibration
#
# 100 aggregates of 100 agents exchange money and members for 10^4 steps.
# Snapshots pooled after step 2000 are compared with the finite laws.

# In[1]:

from pathlib import Path

import numpy as np

from aggwealth import theory, validation
from aggwealth.config import load_run_config
from aggwealth.engine import run

ROOT = Path(__file__).resolve().parents[1]
cfg = load_run_config(ROOT / "configs" / "desk_equilibrium.yaml")
inv = cfg.invariants
state, series = run(cfg)
sizes, wealths = series.pooled_sizes(), series.pooled_wealths()
print(sizes.size, "aggregate samples; empty fraction", (sizes == 0).mean())


# In[2]:

report = validation.validate(sizes, wealths, inv.n_aggregates, inv.n_agents, inv.total_money)
for check in report.checks:
    print(check.line())


# Observed against predicted size frequencies, in bins of 50 agents.

# In[3]:

edges = np.arange(0, 501, 50)
p = theory.size_pmf_finite(np.arange(inv.n_agents + 1), inv.n_aggregates, inv.n_agents)
for lo, hi in zip(edges[:-1], edges[1:]):
    print(f"{lo:3d}-{hi - 1:3d}  observed {((sizes >= lo) & (sizes < hi)).mean():.4f}  "
          f"predicted {p[lo:hi].sum():.4f}")
