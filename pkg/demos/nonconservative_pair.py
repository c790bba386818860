"""
A pair of nonconservative processes that cannot be coupled
==========================================================

The lower process has catastrophes and migrations, the upper one adds
arrivals.  The pair looks ordered at a glance but fails the comparability
conditions, and a coupled run shows the order breaking.
"""

from fractions import Fraction as F

import numpy as np

from ipsorder import sim
from ipsorder.comparability import check_model_comparability, replay
from ipsorder.core import Lattice
from ipsorder.coupling import LocalCoupler
from ipsorder.models import nonconservative_example_rates

m1, m2 = nonconservative_example_rates(mu1=1, mu2=F(3, 2), gamma1=1, gamma2=2,
                                       alpha1=1, alpha2=4, beta=F(3, 2), N=5)

out = check_model_comparability(m1, m2)
c = out.certificate
print("comparable:", out.holds)
print("failing window:", c["eta"], "<=", c["xi"], "condition", c["condition"])
print("changes of the upper process:", c["subset"])
print("their rate", c["lhs"], "exceeds what the lower process can follow,", c["rhs"])
print("certificate replays:", replay(c, m1, m2))

# %%
# Coupled run on a ring.  Where no coupling exists the two processes move
# independently, so order violations are counted rather than raised.

L, T = 10, 20
lat = Lattice(1, L)
init1 = sim.torus_config(lat, [1] * L, 5)
init2 = sim.torus_config(lat, [2] * L, 5)
coupler = LocalCoupler(m1, m2)
violations = []
for seed in range(3):
    traj = sim.simulate_coupled(m1, m2, init1, init2, T, seed, on_infeasible="independent",
                                coupler=coupler, count_violations=True)
    violations.append(traj.violations)
    print(f"seed {seed}: {traj.events} events, {traj.violations} order violations, "
          f"{traj.independent_steps} independent steps")

# %%
# The first marginal of the coupled run should still look like the lower
# process on its own.  Catastrophes make single runs noisy, so average over seeds.

n = 12
coupled = np.array([sim.simulate_coupled(m1, m2, init1, init2, T, s, on_infeasible="independent",
                                         coupler=coupler, count_violations=True).occupation[0].mean()
                    for s in range(n)])
alone = np.array([sim.simulate_single(m1, init1, T, 1000 + s).occupation[0].mean() for s in range(n)])
for name, x in (("coupled", coupled), ("alone", alone)):
    print(f"mean occupation of the lower process, {name}: {x.mean():.3f} +- {x.std(ddof=1) / np.sqrt(n):.3f}")
