# coding: utf-8

# # Equilibrium laws for aggregate size and wealth
#
# Closed forms for an economy of Na aggregates, D agents and M units of money,
# checked against brute-force counting on a system small enough to enumerate.

# In[1]:

import numpy as np

from aggwealth import theory
from aggwealth.model import MacroInvariants

inv = MacroInvariants(1000, 100_000, 1e7)
k = theory.equilibrium_constants(inv)
print(f"C = {k.c:.6g}, alpha = {k.alpha:.6g}, beta = {k.beta:.6g}")
print(f"1 - C - e^-alpha - e^-beta = {k.convergence_gap():.1e}")


# Many aggregates: sizes are geometric with mean D/Na and wealths geometric with mean M/Na.

# In[2]:

d = np.arange(1, 6001)
p_d = theory.size_marginal_large_na(d, k)
m = np.arange(0, 2_000_001)
p_m = theory.wealth_marginal_large_na(m, k)
print("size law:   total", p_d.sum(), "mean", (d * p_d).sum())
print("wealth law: total", p_m.sum(), "mean", (m * p_m).sum())


# A finite number of aggregates: every way of placing D agents into Na labelled
# aggregates is equally likely. Enumerating them for Na=3, D=4 gives (5 - d)/15.

# In[3]:

exact = theory.enumerate_compositions_oracle(3, 4)
for size, prob in exact.items():
    print(size, prob, float(theory.size_pmf_finite(size, 3, 4)))


# The printed closed form uses Na-1 where Na-2 belongs; it double counts and
# at Na=2, D=2 sums to 2.

# In[4]:

print("printed form:", theory.check_normalisation(2, 2, "printed"))
print("corrected:   ", theory.check_normalisation(2, 2, "corrected"))


# With Na growing at fixed mean size the finite law approaches the geometric one.

# In[5]:

for na in (10, 100, 1000):
    print(na, theory.limit_gap(na, 20))


# Given its size, an aggregate's share of the money is Beta(d, D - d).

# In[6]:

grid = np.linspace(0, 30_000, 7)
print(theory.wealth_density_given_size(grid, 100, 100_000, 1e7))
