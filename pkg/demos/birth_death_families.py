"""
Birth, death and migration families
===================================

Closed-form sufficient conditions for a few metapopulation families,
compared with the general window check.
"""

from fractions import Fraction as F

from ipsorder.comparability import check_attractive, check_model_comparability
from ipsorder.models import (
    BDMModel,
    allee_params,
    binomial_params,
    check_allee_attractive,
    check_bdm_attractive,
    check_msdc_attractive,
    msdc_params,
)

# binomial migration: each migrant survives the trip with probability p
for lam, p in [(1, F(1, 2)), (2, F(3, 10))]:
    params = binomial_params(lam, p, N=3, M=3)
    print(f"binomial lam={lam} p={p}: closed form {check_bdm_attractive(params).holds},"
          f" general {check_attractive(BDMModel(params)).holds}")

# %%
# Mass migration with catastrophes: flocks of size i leave at rate lam_i.

for lams in ([1, 1], [1, 2], [2, 1]):
    params = msdc_params(lams, [1, 1], N=2, M=2)
    print(f"msdc lams={lams}: closed form {check_msdc_attractive(params).holds},"
          f" general {check_attractive(BDMModel(params)).holds}")

# %%
# Allee effect: small colonies (at most A individuals) die out faster.

for lam_a, mu_a in [(F(1, 4), F(1, 2)), (1, F(1, 2))]:
    closed = check_allee_attractive([1, 1], [1, 1], lam_a, mu_a).holds
    general = check_attractive(BDMModel(allee_params([1, 1], [1, 1], lam_a, mu_a, A=2, N=2, M=2))).holds
    print(f"allee lam_A={lam_a} mu_A={mu_a}: closed form {closed}, general {general}")

# %%
# Two different processes need not be ordered either way: here the binomial
# process has more migration but the flock process loses whole flocks.

fast = binomial_params(1, F(1, 2), N=2, M=2)
slow = msdc_params([F(1, 2), 0], [F(1, 2), 0], N=2, M=2)
print("fast below slow:", check_model_comparability(BDMModel(fast), BDMModel(slow)).holds)
print("slow below fast:", check_model_comparability(BDMModel(slow), BDMModel(fast)).holds)
