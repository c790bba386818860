"""Random instances shared by the acceptance sweeps and the property tests."""

import random
from fractions import Fraction as F

from hypothesis import strategies as st

from ipsorder.core import LocalConfiguration
from ipsorder.models import LocalTableModel, TableEntry, msdc_params, BDMModel
from ipsorder.models.bdm import neighbor_vectors
from ipsorder.netflow import FlowNetwork

RATES = [F(0), F(1, 2), F(1), F(3, 2), F(2), F(1, 3), F(5, 2)]


def random_rate(rng, zero_weight=0.3):
    if rng.random() < zero_weight:
        return F(0)
    return rng.choice(RATES[1:])


def random_table_model(rng, N, k_max=2, l_max=2):
    """Arrivals, departures and migrations with rates keyed on a few local values."""
    entries = []
    for kind in ("arr", "dep", "mig"):
        for k in range(1, k_max + 1):
            for l in (range(1, l_max + 1) if kind == "mig" else [0]):
                width = 2 if kind == "mig" else 1
                for _ in range(rng.randint(0, 2)):
                    pattern = tuple(rng.choice([None, *range(N + 1)]) for _ in range(width))
                    entries.append(TableEntry(kind, k, l, pattern, random_rate(rng)))
                entries.append(TableEntry(kind, k, l, (None,) * width, random_rate(rng, 0.5)))
    return LocalTableModel(entries, N)


def random_msdc_model(rng, N, M):
    """Diagonal flock migrations and catastrophes whose rates read the neighbour vector."""
    def vec():
        return [random_rate(rng, 0.2) for _ in range(M)]
    lams = {r: vec() for r in neighbor_vectors(N, 2)}
    mus = {r: vec() for r in neighbor_vectors(N, 2)}
    phi = {r: rng.choice(RATES[1:]) for r in neighbor_vectors(N, 2)}
    return BDMModel(msdc_params(lams, mus, N, M, phi=phi))


def random_ordered_window(rng, N, n_sites=5):
    eta = [rng.randint(0, N) for _ in range(n_sites)]
    xi = [rng.randint(v, N) for v in eta]
    return LocalConfiguration.line(eta, N), LocalConfiguration.line(xi, N)


def random_network(rng, n_inner, arc_prob=0.35, inf_prob=0.5):
    """A network with O, Z and up to ``n_inner`` inner nodes and rational bounds."""
    net = FlowNetwork()
    inner = [f"n{i}" for i in range(n_inner)]
    for v in inner:
        net.add_node(v)
    pairs = [("O", v) for v in inner] + [(v, "Z") for v in inner]
    pairs += [(u, v) for u in inner for v in inner if u != v]
    pairs.append(("O", "Z"))
    for u, v in pairs:
        if rng.random() > arc_prob:
            continue
        lo = rng.choice([F(0), F(0), F(0), F(0), F(1, 2), F(1)])
        if rng.random() < inf_prob:
            up = None
        else:
            up = lo + rng.choice([F(0), F(1, 3), F(1), F(3, 2)])
        net.add_arc(u, v, lo, up)
    return net


# ---------------------------------------------------------------- hypothesis

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def windows(draw, N=2, n_sites=5):
    eta = draw(st.lists(st.integers(0, N), min_size=n_sites, max_size=n_sites))
    xi = [draw(st.integers(v, N)) for v in eta]
    return LocalConfiguration.line(eta, N), LocalConfiguration.line(xi, N)


@st.composite
def table_models(draw, N=2):
    return random_table_model(random.Random(draw(seeds)), N)


@st.composite
def networks(draw, max_inner=6):
    n = draw(st.integers(0, max_inner))
    return random_network(random.Random(draw(seeds)), n)
