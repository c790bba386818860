import pytest
from hypothesis import given
from hypothesis import strategies as st

from ipsorder.core import (
    Arrival,
    Departure,
    Lattice,
    LocalConfiguration,
    Migration,
    apply_change,
    box_window,
    changes_owned_by,
    enumerate_changes_at,
    gain_at,
    leq,
    loss_at,
    translate_config,
)
from ipsorder.errors import DomainError, WindowMismatch, WindowTooSmall

from helpers import windows


def line(text, N=5):
    return LocalConfiguration.line([int(t) for t in text.split()], N)


def test_migration_example():
    # one leaves v, two arrive at v-1
    eta = line("1 1 2 1 1")
    assert apply_change(Migration((0,), (-1,), 1, 2), eta) == line("1 3 1 1 1")


def test_departure_below_zero_is_a_domain_error():
    w = line("0 0 1 0 0")
    with pytest.raises(DomainError):
        apply_change(Departure((0,), 2), w)
    assert w.try_apply(Departure((0,), 2)) is None


def test_arrival_then_departure_is_identity():
    w = line("0 2 1 0 4")
    c = (0,)
    assert apply_change(Departure(c, 1), apply_change(Arrival(c, 1), w)) == w


def test_arrival_above_capacity():
    w = line("0 0 2 0 0", N=2)
    assert not w.admits(Arrival((0,), 1))


def test_leq_examples():
    assert leq(line("0 2 0 1 2", 2), line("1 2 1 1 2", 2))
    assert not leq(line("0 0 2 1 2", 2), line("1 2 2 0 2", 2))
    w = line("3 1 4 1 5")
    assert leq(w, w)


def test_leq_needs_same_window():
    a = LocalConfiguration.line([0, 1, 2], 2)
    b = LocalConfiguration.line([0, 1, 2], 2, start=0)
    with pytest.raises(WindowMismatch):
        leq(a, b)


def test_outside_window_is_an_error():
    w = line("1 1 1")
    with pytest.raises(WindowTooSmall):
        w[(5,)]
    with pytest.raises(WindowTooSmall):
        w.try_apply(Migration((1,), (2,), 1, 1))


def test_values_checked_on_construction():
    with pytest.raises(DomainError):
        LocalConfiguration.line([0, 3], 2)


def test_enumeration_counts():
    lat = Lattice(1)
    assert len(enumerate_changes_at((0,), lat, 1, 1)) == 6
    assert len(enumerate_changes_at((0,), lat, 2, 2)) == 20
    assert len(enumerate_changes_at((0, 0), Lattice(2), 1, 1)) == 2 + 8


def test_canonical_migration_appears_once():
    x, y = (0,), (1,)
    assert gain_at(x, y, 2, 1) == Migration(y, x, 1, 2)
    assert loss_at(y, x, 1, 2) == gain_at(x, y, 2, 1)
    changes = enumerate_changes_at(x, Lattice(1), 2, 2)
    assert len(set(changes)) == len(changes)
    assert changes.count(gain_at(x, y, 2, 1)) == 1


def test_bad_amounts_rejected():
    with pytest.raises(ValueError):
        Arrival((0,), 0)
    with pytest.raises(ValueError):
        Migration((0,), (0,), 1, 1)
    with pytest.raises(ValueError):
        enumerate_changes_at((0,), Lattice(1), 0, 1)


def test_torus_wraps():
    lat = Lattice(1, 5)
    assert lat.wrap((7,)) == (2,)
    assert lat.distance((0,), (4,)) == 1
    assert set(lat.neighbors((0,))) == {(1,), (4,)}
    with pytest.raises(ValueError):
        Lattice(1, 0)


def test_translate_config_recentres():
    lat = Lattice(1, 6)
    w = LocalConfiguration(box_window(lat, (0,), 3), [0, 1, 2, 3, 4, 5], 5)
    local = translate_config(w, (5,), 1)
    assert local.values == (w[(4,)], w[(5,)], w[(0,)])


@given(windows(N=3), windows(N=3), windows(N=3))
def test_leq_is_a_partial_order(p, q, r):
    a, b, c = p[0], q[0], r[0]
    assert leq(a, a)
    if leq(a, b) and leq(b, a):
        assert a == b
    if leq(a, b) and leq(b, c):
        assert leq(a, c)


@given(windows(N=3), st.integers(0, 19))
def test_apply_then_reverse(pair, index):
    w = pair[0]
    c = enumerate_changes_at((0,), w.lattice, 2, 2)[index]
    out = w.try_apply(c)
    if out is None:
        assert any(not 0 <= w[s] + d <= w.N for s, d in c.deltas)
        return
    back = out.replace({s: out[s] - d for s, d in c.deltas})
    assert back == w
    assert all(0 <= v <= w.N for v in out.values)


@given(st.integers(2, 4), st.integers(-6, 6), st.integers(-6, 6))
def test_no_migrations_between_non_neighbours(k, a, b):
    lat = Lattice(1, None, 1)
    x, y = (a,), (b,)
    if lat.distance(x, y) <= 1:
        return
    common = set(enumerate_changes_at(x, lat, k, k)) & set(enumerate_changes_at(y, lat, k, k))
    assert not [c for c in common if c.kind == "mig"]


@given(st.integers(5, 9))
def test_every_change_has_one_owner(L):
    lat = Lattice(1, L)
    seen = {}
    for x in lat.all_sites():
        for c in changes_owned_by(x, lat, 2, 1):
            assert c not in seen
            seen[c] = x
    for x in lat.all_sites():
        for c in enumerate_changes_at(x, lat, 2, 1):
            assert c in seen
