# coding: utf-8

# # One aggregate: the exponential money law
#
# With a single aggregate and no migration the model reduces to pairwise
# random exchange among D agents. Agent wealth should relax to an
# exponential law with mean M/D.

# In[1]:

from pathlib import Path

import numpy as np

from aggwealth.config import load_run_config
from aggwealth.engine import run
from aggwealth.stats import tail_exponent
from aggwealth.validation import agent_vs_exponential

ROOT = Path(__file__).resolve().parents[1]
cfg = load_run_config(ROOT / "configs" / "single_aggregate.yaml")
state, series = run(cfg)
w = state.agent_wealth


# In[2]:

print("mean wealth", w.mean(), "median", np.median(w), "(exponential: 100 and", 100 * np.log(2), ")")
print("KS distance to exponential:", agent_vs_exponential(w, 100.0))
print("tail slope (1 for an exponential):", tail_exponent(w).beta)


# The payer-fraction rule (payer hands over a uniform share of its own wealth)
# does not give the exponential law; it piles up mass near zero.

# In[3]:

import dataclasses

alt = dataclasses.replace(cfg, money_kernel=dataclasses.replace(cfg.money_kernel, rule="payer_fraction"))
state_alt, _ = run(alt)
print("payer_fraction KS:", agent_vs_exponential(state_alt.agent_wealth, 100.0))
