import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ipsorder.comparability import check_attractive
from ipsorder.core import Arrival, Departure, Lattice, LocalConfiguration, Migration, enumerate_changes_at
from ipsorder.errors import ModelFileError, NotDiagonal, ParameterMismatch
from ipsorder.models import (
    BDMModel,
    BDMParams,
    ExclusionModel,
    ExclusionParams,
    ZeroModel,
    allee_params,
    as_fraction,
    bdm_rate,
    binomial_params,
    check_allee_attractive,
    check_bdm_attractive,
    check_bdm_comparability,
    check_exclusion_attractive,
    check_gs_conservative,
    check_msdc,
    check_msdc_attractive,
    closed_form,
    conservative_table_model,
    loads,
    msdc_params,
    nonconservative_example_rates,
    two_species_gamma,
    two_species_rates,
)

from helpers import RATES, random_msdc_model, random_table_model

v, left, right = (0,), (-1,), (1,)


def line(values, N):
    return LocalConfiguration.line(values, N)


def test_as_fraction_is_exact():
    assert as_fraction("3/2") == F(3, 2)
    assert as_fraction(2) == 2
    with pytest.raises(TypeError):
        as_fraction(0.5)
    with pytest.raises(TypeError):
        as_fraction(True)


def test_binomial_entries():
    p = binomial_params(1, F(1, 2), N=5, M=5)
    assert p.lam[1][0] == F(1, 2)  # two leave, one arrives
    assert p.mu[1] == F(1, 2)  # both die on the way, d = 1
    assert p.lam[0][1] == 0  # cannot arrive with more than left


def test_birth_at_capacity_is_zero():
    p = binomial_params(1, F(1, 2), N=3, M=3)
    assert bdm_rate(p, Arrival(v, 1), line([0, 3, 0], 3)) == 0
    assert bdm_rate(p, Arrival(v, 1), line([0, 2, 0], 3)) == 2


def test_bdm_death_and_catastrophe():
    p = BDMParams(N=3, N_A=1, M=2, phi=2, phi_A=F(1, 2), mu=[F(1, 3), 1],
                  lam=[[0, 0, 0], [0, 0, 0]])
    # z = 3 > N_A: z * phi, plus mu_1 since 3 > N - M
    assert bdm_rate(p, Departure(v, 1), line([0, 3, 0], 3)) == 3 * 2 + F(1, 3)
    # z = 1 <= N_A, and z - 1 = 0 < N - M
    assert bdm_rate(p, Departure(v, 1), line([0, 1, 0], 3)) == F(1, 2)
    assert bdm_rate(p, Departure(v, 2), line([0, 3, 0], 3)) == 1
    assert bdm_rate(p, Departure(v, 2), line([0, 2, 0], 3)) == 0


def test_two_species_table():
    r = [F(1), F(2), F(3), F(4), F(5)]
    m = two_species_rates(*r)
    r1, r2, r3, r4, r5 = r
    w = lambda a, b: LocalConfiguration.line([a, b], 2, start=0)  # noqa: E731
    x, y = (0,), (1,)
    assert m.rate(Migration(x, y, 1, 1), w(1, 0)) == r3
    assert m.rate(Migration(x, y, 2, 2), w(2, 0)) == r1
    assert m.rate(Migration(x, y, 1, 1), w(1, 1)) == r2
    assert m.rate(Migration(x, y, 1, 1), w(2, 1)) == r4
    assert m.rate(Migration(x, y, 1, 1), w(2, 0)) == r5
    assert m.rate(Migration(y, x, 1, 1), w(0, 1)) == r3  # other direction
    for k in (1, 2):
        assert m.rate(Migration(x, y, k, k), w(0, 0)) == 0
    assert m.rate(Migration(x, y, 1, 1), w(1, 2)) == 0


def test_nonconservative_tables():
    mu1, mu2, g1, g2, a1, a2, b = map(F, (1, 2, 3, 4, 5, 6, 7))
    first, second = nonconservative_example_rates(mu1, mu2, g1, g2, a1, a2, b, N=5)
    w = line([1, 1, 1], 5)
    assert first.rate(Migration(v, right, 1, 2), w) == g2
    assert first.rate(Migration(v, right, 1, 1), w) == g1
    assert first.rate(Departure(v, 2), line([0, 2, 0], 5)) == mu2
    assert second.rate(Arrival(v, 2), w) == a2
    assert second.rate(Arrival(v, 1), w) == a1
    assert second.rate(Migration(v, right, 1, 2), w) == 0
    assert second.rate(Migration(v, right, 1, 1), w) == b


def test_bdm_comparability_examples():
    p = binomial_params(1, F(1, 2), N=5, M=5)
    assert check_bdm_comparability(p, p).holds
    low = [[F(1), 0], [0, 0]]
    high = [[F(2), 0], [0, 0]]
    p1 = BDMParams(2, 0, 2, 1, 1, [1, 1], high)
    p2 = BDMParams(2, 0, 2, 1, 1, [1, 1], low)
    out = check_bdm_comparability(p1, p2)
    assert not out.holds
    c = out.certificate
    assert (c["condition"], c["m"], c["k"], c["j"]) == ("b", 1, 1, 1)
    z = BDMParams(3, 0, 0, 2, 2, [], [])
    assert check_bdm_comparability(z, BDMParams(3, 0, 0, 1, 1, [], [])).holds
    with pytest.raises(ParameterMismatch):
        check_bdm_comparability(p, z)


def test_msdc_examples():
    flat = msdc_params([1, 1], [2, 2], N=3, M=2)
    assert check_msdc_attractive(flat).holds
    growing = msdc_params([1, 2], [2, 2], N=3, M=2)
    out = check_msdc_attractive(growing)
    assert not out.holds
    assert (out.certificate["i"], out.certificate["j"]) == (1, 2)
    with pytest.raises(NotDiagonal):
        check_msdc(binomial_params(1, F(1, 2), 3, 2), flat)


def test_allee_example():
    assert check_allee_attractive([1, 1], [1, 1], F(1, 4), F(1, 2)).holds
    assert not check_allee_attractive([1, 1], [1, 1], F(1, 2), F(1, 2)).holds
    p = allee_params([1, 1], [1, 1], F(1, 4), F(1, 2), A=2, N=2, M=2)
    assert check_attractive(BDMModel(p)).holds


def test_allee_violation_is_seen_by_the_general_checker():
    # 2 d lam_A > mu_A with the threshold separating neighbour vectors
    p = allee_params([1], [1], 2, F(1, 2), A=1, N=1, M=1)
    assert not check_attractive(BDMModel(p)).holds


def test_exclusion_examples():
    q = {(0, 1): 1, (1, 0): 2, (1, 2): F(1, 2), (2, 1): 1, (2, 0): 3, (0, 2): 0}
    assert check_exclusion_attractive(ExclusionParams.simple(q, 3)).holds
    assert check_exclusion_attractive(ExclusionParams.simple({}, 3)).holds

    # a jump 0 -> 1 that only happens when site 2 is empty
    def rule(eta, x, y):
        return 1 if (x, y) == (0, 1) and eta[2] == 0 else 0

    out = check_exclusion_attractive(ExclusionParams.from_rule(rule, 3))
    assert not out.holds
    assert not check_attractive(ExclusionModel(ExclusionParams.from_rule(rule, 3))).holds


def test_exclusion_rates_vanish_off_pattern():
    p = ExclusionParams.simple({(0, 1): 1}, 3)
    assert p.gamma((0, 0, 0), 0, 1) == 0
    assert p.gamma((1, 1, 0), 0, 1) == 0
    assert p.gamma((1, 0, 0), 0, 1) == 1


def test_gs_conservative_examples():
    good = two_species_gamma(1, 1, F(3, 2), F(3, 2), 1)
    assert check_gs_conservative(good, N=2).holds
    bad = two_species_gamma(1, 1, F(1, 2), F(3, 2), 1)
    assert not check_gs_conservative(bad, N=2).holds
    assert check_gs_conservative({}, N=2).holds


def test_zero_model():
    assert check_attractive(ZeroModel(2)).holds


# ---------------------------------------------------------------- properties


def _all_models(seed):
    rng = random.Random(seed)
    N = rng.randint(1, 3)
    M = rng.randint(1, N)
    return [
        random_table_model(rng, N),
        random_msdc_model(rng, N, M),
        BDMModel(binomial_params(rng.choice(RATES[1:]), F(rng.randint(1, 9), 10), N, M)),
        two_species_rates(*(rng.choice(RATES) for _ in range(5))),
        *nonconservative_example_rates(*(rng.choice(RATES) for _ in range(7)), N=N),
    ]


@given(st.integers(0, 10**6), st.lists(st.integers(0, 3), min_size=5, max_size=5))
def test_rates_vanish_outside_the_domain(seed, values):
    for m in _all_models(seed):
        w = line([min(u, m.N) for u in values], m.N)
        for c in enumerate_changes_at(v, Lattice(1), m.k_max, m.l_max):
            r = m.rate(c, w)
            assert r >= 0
            if w.try_apply(c) is None:
                assert r == 0


@given(st.integers(1, 12), st.integers(1, 9), st.integers(1, 4), st.data())
def test_binomial_always_attractive(lam_num, p_num, N, data):
    M = data.draw(st.integers(1, N))
    params = binomial_params(F(lam_num, 4), F(p_num, 10), N, M)
    assert check_bdm_attractive(params).holds


@given(st.integers(0, 10**6))
def test_gs_conservative_matches_general(seed):
    rng = random.Random(seed)
    N = rng.randint(1, 3)
    gamma = {(k, a, b): rng.choice(RATES) for k in range(1, N + 1)
             for a in range(k, N + 1) for b in range(0, N - k + 1)}
    closed = check_gs_conservative(gamma, N).holds
    assert closed == check_attractive(conservative_table_model(gamma, N)).holds


# ---------------------------------------------------------------- model files


def test_spec_two_species():
    spec = loads("family: two-species-exclusion\nr1: 1\nr2: 1\nr3: 3/2\nr4: 3/2\nr5: 1\n")
    assert spec.model.N == 2
    assert closed_form(spec).holds
    bad = loads("family: two-species-exclusion\nr1: 1\nr2: 1\nr3: 1/2\nr4: 3/2\nr5: 1\n")
    assert not closed_form(bad).holds


def test_spec_bdm_families():
    spec = loads("family: bdm-binomial\nN: 3\nM: 3\nlam: 1\np: 3/10\n")
    assert closed_form(spec).holds
    spec = loads("family: msdc\nN: 2\nM: 2\nlams: [1, 2]\nmus: [1, 1]\n")
    assert not closed_form(spec).holds
    spec = loads("family: allee\nN: 2\nM: 2\nlams: [1, 1]\nmus: [1, 1]\nlam_A: 1/4\nmu_A: 1/2\nA: 2\n")
    assert closed_form(spec).holds
    spec = loads("""
family: bdm
N: 2
M: 1
phi: {"0 0": 1, "0 1": 1, "0 2": 1, "1 0": 1, "1 1": 1, "1 2": 1, "2 0": 1, "2 1": 1, "2 2": 2}
mu: [1]
lam: [[1, 0]]
""")
    assert spec.model.radius == 1


def test_spec_other_families():
    spec = loads("family: general-exclusion\nn: 3\nq: {\"0 1\": 1, \"1 0\": 1}\n")
    assert closed_form(spec).holds
    # a jump that stops once the source fills up is not monotone
    spec = loads("family: gs-conservative\nN: 2\ngamma:\n  - {k: 1, from: 1, to: 0, rate: 1}\n")
    assert closed_form(spec).certificate["condition"] == "GSC1"
    assert not check_attractive(spec.model).holds
    spec = loads("family: custom-table\nN: 2\nentries:\n  - {kind: arr, k: 1, rate: 1/2}\n")
    assert spec.model.rate(Arrival(v, 1), line([0, 0, 0], 2)) == F(1, 2)
    assert closed_form(spec) is None
    spec = loads("family: nonconservative-pair\nmu1: 1\nmu2: 3/2\ngamma1: 1\ngamma2: 2\n"
                 "alpha1: 1\nalpha2: 4\nbeta: 3/2\nmember: second\n")
    assert spec.model.rate(Arrival(v, 2), line([0, 0, 0], 5)) == 4


@pytest.mark.parametrize("text", [
    "family: nope\n",
    "family: two-species-exclusion\nr1: 1\n",
    "family: two-species-exclusion\nr1: 0.5\nr2: 1\nr3: 1\nr4: 1\nr5: 1\n",
    "family: bdm-binomial\nN: 3\nM: 3\nlam: 1\np: 2\n",
    "family: msdc\nN: 2\nM: 3\nlams: [1, 1, 1]\nmus: [1, 1, 1]\n",
    "family: custom-table\nN: 2\nentries:\n  - {kind: jump, k: 1, rate: 1}\n",
    "[unbalanced",
    "- a list\n",
])
def test_bad_model_files(text):
    with pytest.raises(ModelFileError):
        loads(text)
