import math
from fractions import Fraction as F

import numpy as np
import pytest

from ipsorder import sim
from ipsorder.core import Lattice
from ipsorder.errors import OrderViolation, WindowTooSmall
from ipsorder.models import LocalTableModel, TableEntry, ZeroModel, two_species_rates


def attractive():
    return two_species_rates(1, 1, 2, 2, 1)


def config(values, N=2):
    lat = Lattice(1, len(values))
    return sim.torus_config(lat, values, N)


def test_zero_model_never_moves():
    init = config([1, 0, 2, 1, 0, 1, 2, 0])
    traj = sim.simulate_single(ZeroModel(2), init, 10, seed=1)
    assert traj.events == 0
    assert traj.final[0] == init
    assert np.allclose(traj.occupation[0], init.values)


def test_same_seed_same_run():
    init = config([1, 0, 2, 1, 0, 1, 2, 0])
    a = sim.simulate_single(attractive(), init, 5, seed=42)
    b = sim.simulate_single(attractive(), init, 5, seed=42)
    c = sim.simulate_single(attractive(), init, 5, seed=43)
    assert a.export() == b.export()
    assert a.export() != c.export()


def test_seed_is_required():
    with pytest.raises(ValueError):
        sim.simulate_single(attractive(), config([0] * 8), 1, seed=None)


def test_two_species_moves_conserve_the_total():
    init = config([1, 0, 2, 1, 0, 1, 2, 0])
    traj = sim.simulate_single(attractive(), init, 5, seed=7)
    assert traj.events > 0
    assert sum(traj.final[0].values) == sum(init.values)
    for _, _, change, _, _ in traj.log:
        assert change.kind == "mig" and change.k == change.l


def test_pure_death_occupation():
    # each site empties after an exponential time; mean occupation is (1 - e^{-mu T}) / (mu T)
    mu, T, L = 1, 2.0, 10
    m = LocalTableModel([TableEntry("dep", 1, 0, (1,), F(mu))], 1)
    samples = []
    for seed in range(30):
        traj = sim.simulate_single(m, config([1] * L, 1), T, seed)
        samples.extend(traj.occupation[0])
    samples = np.asarray(samples)
    want = (1 - math.exp(-mu * T)) / (mu * T)
    se = samples.std(ddof=1) / math.sqrt(len(samples))
    assert abs(samples.mean() - want) < 3 * se


def test_equal_start_stays_equal():
    m = attractive()
    init = config([1, 0, 2, 1, 0, 1, 2, 0])
    traj = sim.simulate_coupled(m, m, init, init, 5, seed=3)
    assert traj.events > 0
    assert traj.final[0] == traj.final[1]
    assert traj.violations == 0
    assert all(e1 == e2 for _, _, e1, e2, _ in traj.log)


def test_coupled_runs_keep_the_order():
    m = attractive()
    init1 = config([0, 0, 1, 1, 0, 1, 0, 0])
    init2 = config([1, 2, 2, 1, 0, 1, 2, 1])
    a = sim.simulate_coupled(m, m, init1, init2, 5, seed=11)
    b = sim.simulate_coupled(m, m, init1, init2, 5, seed=11)
    assert a.violations == 0 and a.infeasible_states == 0
    assert a.export() == b.export()


def test_event_rates_match_a_scratch_solve():
    m = attractive()
    s = sim.CoupledSimulator(m, m, config([0, 0, 1, 1, 0, 1, 0, 0]), config([1, 2, 2, 1, 0, 1, 2, 1]))
    rng = sim._rng(5)
    for _ in range(6):
        assert s.total_rate() == sim.scratch_total(m, m, s.eta, s.xi)
        for _ in range(4):
            e1, e2, _ = s.draw(rng)
            s.apply(e1, e2)


def test_injected_violation_is_reported():
    m = attractive()
    init = config([1, 0, 2, 1, 0, 1, 2, 0])
    with pytest.raises(OrderViolation):
        sim.simulate_coupled(m, m, init, init, 5, seed=3, inject_violation_at=2)
    traj = sim.simulate_coupled(m, m, init, init, 5, seed=3, inject_violation_at=2, count_violations=True)
    assert traj.violations >= 1


def test_unordered_start_is_rejected():
    m = attractive()
    with pytest.raises(ValueError):
        sim.simulate_coupled(m, m, config([1] * 8), config([0] * 8), 1, seed=1)


def test_small_torus_is_rejected():
    # rates read only the two sites of a jump: single runs need L > 2, coupled runs L > 4
    m = attractive()
    with pytest.raises(WindowTooSmall):
        sim.simulate_single(m, config([0] * 2), 1, seed=1)
    sim.simulate_single(m, config([0] * 3), 1, seed=1)
    with pytest.raises(WindowTooSmall):
        sim.simulate_coupled(m, m, config([0] * 4), config([0] * 4), 1, seed=1)
    sim.simulate_coupled(m, m, config([0] * 5), config([0] * 5), 1, seed=1)
    with pytest.raises(ValueError):
        sim._check_torus(Lattice(1), 1)
