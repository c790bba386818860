import random
from dataclasses import replace
from fractions import Fraction as F

import pytest
from hypothesis import given

from ipsorder import coupling as cp
from ipsorder.changesets import Node
from ipsorder.core import Departure, Lattice, LocalConfiguration, Migration, leq
from ipsorder.errors import Infeasible
from ipsorder.models import BDMModel, binomial_params, nonconservative_example_rates, two_species_rates
from ipsorder.sim import torus_config

from helpers import seeds

v = (0,)
AROUND = [(-1,), (0,), (1,)]


def line(text, N):
    return LocalConfiguration.line([int(t) for t in text.split()], N)


def two_species(r4=F(3, 2)):
    return two_species_rates(1, 1, F(3, 2), r4, 1)


def flows_by_result(sol):
    cls = sol.cls
    return {(cls.result(b), cls.result(a)): val for (b, a), val in sol.inner().items()}


def test_two_species_site_flow():
    m = two_species()
    eta, xi = line("0 2 0 1 2", 2), line("1 2 1 1 2", 2)
    sol = cp.solve_px(m, m, eta, xi, v)
    got = flows_by_result(sol)
    # the single crossing change is covered by the one dominating upper move
    assert got[(line("1 1 2 1 2", 2), line("0 0 2 1 2", 2))] == 1
    assert cp.table2_violations(sol) == []
    assert cp.forced_zero_violations(sol) == []
    assert cp.audit_bundle(cp.build_bundle(m, m, eta, xi, [v])) == []


def test_nonconservative_site_flow():
    m1, m2 = nonconservative_example_rates(1, F(3, 2), 1, 2, 1, 4, F(3, 2), N=5)
    eta, xi = line("1 1 2 1 1", 5), line("1 2 3 1 1", 5)
    sol = cp.solve_px(m1, m2, eta, xi, v)
    # flows are not unique; the catastrophe's whole rate must leave through dominated changes
    catastrophe = Node(2, Departure(v, 2))
    out = {a: val for (b, a), val in sol.inner().items() if b == catastrophe}
    assert sum(out.values()) == F(3, 2)
    assert all(sol.cls.below(a, catastrophe) for a in out)
    assert flows_by_result(sol)[(line("1 2 1 1 1", 5), line("1 1 0 1 1", 5))] > 0
    assert cp.table2_violations(sol) == []
    assert cp.forced_zero_violations(sol) == []


def test_infeasible_site_problem_raises():
    m = two_species(F(1, 2))
    with pytest.raises(Infeasible):
        cp.solve_px(m, m, line("0 2 0 1 2", 2), line("1 2 1 1 2", 2), v)


def test_coupled_moves_of_the_two_species_window():
    m = two_species()
    eta, xi = line("0 2 0 1 2", 2), line("1 2 1 1 2", 2)
    table = cp.moves_involving(m, m, eta, xi, v)
    assert cp.validate_coupling(table, m, m, sites=AROUND, touching=v).ok
    assert table.coupled()
    for e in table.coupled():
        assert leq(eta.try_apply(e.effect1), xi.try_apply(e.effect2))


def test_tampered_rate_is_caught():
    m = two_species()
    eta, xi = line("0 2 0 1 2", 2), line("1 2 1 1 2", 2)
    table = cp.moves_involving(m, m, eta, xi, v)
    first = table.entries[0]
    table.entries[0] = replace(first, rate=first.rate + 1)
    report = cp.validate_coupling(table, m, m, sites=AROUND, touching=v)
    assert not report.ok
    named = cp.format_change(first.effect1 or first.effect2)
    problems = report.checks["V3 marginal-1"] + report.checks["V3' marginal-2"]
    assert any(named in p for p in problems)


def test_order_breaking_entry_is_caught():
    m = two_species()
    eta, xi = line("0 2 0 1 2", 2), line("1 2 1 1 2", 2)
    table = cp.moves_involving(m, m, eta, xi, v)
    table.entries.append(cp.CouplingEntry(Migration((-1,), v, 2, 2), None, F(1), "gen1"))
    assert cp.validate_coupling(table, m, m, sites=AROUND, touching=v).checks["V2 order"]


def test_csv_round_trip():
    m = two_species()
    eta, xi = line("0 2 0 1 2", 2), line("1 2 1 1 2", 2)
    table = cp.moves_involving(m, m, eta, xi, v)
    text = table.to_csv()
    back = cp.read_csv(text, eta, xi, table.sites)
    assert [(e.effect1, e.effect2, e.rate, e.term) for e in back.entries] == \
        [(e.effect1, e.effect2, e.rate, e.term) for e in table.entries]
    assert back.to_csv() == text
    with pytest.raises(ValueError):
        cp.read_csv("a,b\n", eta, xi)
    with pytest.raises(ValueError):
        cp.parse_change("jump:0:1")


def test_change_descriptors():
    c = Migration((0,), (-1,), 1, 2)
    assert cp.format_change(c) == "mig:0:-1:1:2"
    assert cp.parse_change("mig:0:-1:1:2") == c
    assert cp.parse_change("dep:3:2") == Departure((3,), 2)
    assert cp.parse_change("-") is None


def test_equal_configurations_move_together():
    m = two_species()
    w = line("0 1 2 1 0 2 1", 2)
    bundle = cp.build_bundle(m, m, w, w, AROUND)
    table = cp.assemble_generator(m, m, w, w, bundle, AROUND)
    assert cp.validate_coupling(table, m, m).ok
    for e in table.entries:
        assert e.effect1 == e.effect2


def _key(e):
    return cp.format_change(e.effect1), cp.format_change(e.effect2), e.rate


def test_local_coupler_matches_direct_solve():
    m = two_species()
    lat = Lattice(1, 9)
    rng = random.Random(3)
    for _ in range(5):
        eta = [rng.randint(0, 2) for _ in range(9)]
        xi = [rng.randint(u, 2) for u in eta]
        e, x = torus_config(lat, eta, 2), torus_config(lat, xi, 2)
        coupler = cp.LocalCoupler(m, m)
        for site in [(0,), (4,), (8,)]:
            direct = cp.entries_at(site, cp.build_bundle(m, m, e, x, [site]), lat)
            cached = coupler.entries(e, x, site)
            assert sorted(map(_key, direct)) == sorted(map(_key, cached))
    assert coupler.misses > 0


def test_forced_zero_detects_an_injected_arc():
    m1, m2 = nonconservative_example_rates(1, F(3, 2), 1, 2, 1, 4, F(3, 2), N=5)
    eta, xi = line("1 1 2 1 1", 5), line("1 2 3 1 1", 5)
    sol = cp.solve_px(m1, m2, eta, xi, v)
    cls = sol.cls
    forbidden = [(ib.node, ia.node) for ib in cls.side2 for ia in cls.side1
                 if cp._forced_zero(ib, ia) is not None]
    assert forbidden
    assert cp.forced_zero_violations(sol) == []
    sol.flow[forbidden[0]] = F(1)
    assert [(b, a) for b, a, _ in cp.forced_zero_violations(sol)] == [forbidden[0]]


# ---------------------------------------------------------------- properties


def _attractive_model(rng):
    if rng.random() < 0.5:
        return two_species_rates(*(F(x) for x in (1, 1, 2, 2, 1)))
    N = rng.randint(1, 2)
    return BDMModel(binomial_params(rng.choice([F(1, 2), F(1), F(2)]), F(rng.randint(1, 9), 10), N, N))


@given(seeds)
def test_assembled_generator_validates(seed):
    rng = random.Random(seed)
    m = _attractive_model(rng)
    N = m.N
    eta = [rng.randint(0, N) for _ in range(9)]
    xi = [rng.randint(u, N) for u in eta]
    e, x = LocalConfiguration.line(eta, N), LocalConfiguration.line(xi, N)
    bundle = cp.build_bundle(m, m, e, x, AROUND)
    assert cp.audit_bundle(bundle) == []
    for s in bundle.sites.values():
        assert cp.forced_zero_violations(s) == []
        assert cp.table2_violations(s) == []
    for h in bundle.halves.values():
        assert cp.half_zero_violations(h) == []
    table = cp.assemble_generator(m, m, e, x, bundle, AROUND)
    report = cp.validate_coupling(table, m, m)
    assert report.ok, str(report)
