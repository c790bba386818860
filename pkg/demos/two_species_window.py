"""
Coupling two copies of a two-species exclusion process
======================================================

A site holds nothing, a first-class particle (1) or a second-class
particle (2).  We check that the process is attractive and then build the
joint moves that keep one copy below the other on a small window.
"""

from fractions import Fraction as F

from ipsorder import coupling as cp
from ipsorder.comparability import check_attractive
from ipsorder.core import LocalConfiguration
from ipsorder.models import two_species_rates

# jump rates: 2 into an empty site, 1 into a 1-site, 1 past a 1, 2 swapping, and a swap-jump
m = two_species_rates(r1=1, r2=1, r3=F(3, 2), r4=F(3, 2), r5=1)
verdict = check_attractive(m)
print("attractive:", verdict.holds, f"({verdict.evaluated} ordered windows checked)")

# %%
# An ordered pair of windows around the origin

eta = LocalConfiguration.line([0, 2, 0, 1, 2], 2)
xi = LocalConfiguration.line([1, 2, 1, 1, 2], 2)
print("eta:", eta, " xi:", xi)

# %%
# Site flow at the origin.  Each arc pairs an upper move with a lower move
# whose results stay ordered.

sol = cp.solve_px(m, m, eta, xi, (0,))
for (b, a), value in sorted(sol.inner().items(), key=lambda kv: str(kv[0])):
    print(f"  {sol.cls.result(b)}  covers  {sol.cls.result(a)}   rate {value}")

# %%
# Every move touching the origin, joint or single, and the validation report

table = cp.moves_involving(m, m, eta, xi, (0,))
for e in table.coupled():
    print(f"  together: {cp.format_change(e.effect1):>14} | {cp.format_change(e.effect2):<14} {e.rate}")
report = cp.validate_coupling(table, m, m, sites=[(0,), (-1,), (1,)], touching=(0,))
print(report)

# %%
# Lowering r4 below r1 breaks attractiveness; the certificate names the window.

broken = two_species_rates(1, 1, F(3, 2), F(1, 2), 1)
out = check_attractive(broken)
c = out.certificate
print("r4 = 1/2:", out.holds, c["condition"], c["eta"], c["xi"], c["lhs"], ">", c["rhs"])
