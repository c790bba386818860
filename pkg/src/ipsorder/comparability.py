"""Conditions (c1)/(c2) at a site, and whole-model comparability by window enumeration.

At a site ``x`` and an ordered pair ``eta <= xi``, (c1) asks that every set
``D1`` of order-breaking changes of the lower process be outweighed by the
changes of the upper process that dominate some member of ``D1``; (c2) is
the mirror image.  Both families of subset inequalities are decided at once
by a transportation feasibility test (Hall/Gale form), and an independent
brute-force oracle evaluates them literally.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from itertools import combinations, product

from .changesets import ChangeClassification, down_set, up_set
from .core import ZERO, Lattice, LocalConfiguration, box_window, leq, make_window
from .errors import ExplosionGuard, ParameterMismatch, TooLarge
from .netflow import CutCertificate, FlowNetwork, solve_feasible
from .verdict import Verdict, passed

BRUTE_FORCE_LIMIT = 20
DEFAULT_BUDGET = 5_000_000


def _sum_rates(cls, nodes):
    return sum((cls.rate(n) for n in nodes), ZERO)


def _up_total(cls, D1):
    return _sum_rates(cls, up_set(D1, cls))


def c1_network(cls: ChangeClassification) -> FlowNetwork:
    """Upper-process supplies feeding the exact demands of ``R1``."""
    net = FlowNetwork()
    demands = cls.R1
    suppliers = [i.node for i in cls.side2]
    for b in suppliers:
        net.add_arc("O", b, 0, cls.rate(b))
    for b in suppliers:
        for a in demands:
            if cls.below(a, b):
                net.add_arc(b, a, 0, None)
    for a in demands:
        c = cls.rate(a)
        net.add_arc(a, "Z", c, c)
    return net


def c2_network(cls: ChangeClassification) -> FlowNetwork:
    """Exact supplies of ``R2`` drained by dominated lower-process changes."""
    net = FlowNetwork()
    sources = cls.R2
    sinks = [i.node for i in cls.side1]
    for b in sources:
        c = cls.rate(b)
        net.add_arc("O", b, c, c)
    for b in sources:
        for a in sinks:
            if cls.below(a, b):
                net.add_arc(b, a, 0, None)
    for a in sinks:
        net.add_arc(a, "Z", 0, cls.rate(a))
    return net


def _certificate(cls, side, subset, lhs, rhs, cut=None):
    return {
        "condition": side,
        "x": cls.x,
        "eta": cls.eta,
        "xi": cls.xi,
        "subset": tuple(subset),
        "lhs": lhs,
        "rhs": rhs,
        "cut": cut,
    }


def _c1_from_cut(cls, cut: CutCertificate):
    D1 = [a for a in cls.R1 if a not in cut.inside]
    return D1, _sum_rates(cls, D1), _up_total(cls, D1)


def _c2_from_cut(cls, cut: CutCertificate):
    D2 = [b for b in cls.R2 if b in cut.inside]
    return D2, _sum_rates(cls, D2), _sum_rates(cls, down_set(D2, cls))


def check_classification(cls: ChangeClassification) -> Verdict:
    if cls.R1:
        out = solve_feasible(c1_network(cls))
        if isinstance(out, CutCertificate):
            D1, lhs, rhs = _c1_from_cut(cls, out)
            return Verdict(False, _certificate(cls, "c1", D1, lhs, rhs, out), 1)
    if cls.R2:
        out = solve_feasible(c2_network(cls))
        if isinstance(out, CutCertificate):
            D2, lhs, rhs = _c2_from_cut(cls, out)
            return Verdict(False, _certificate(cls, "c2", D2, lhs, rhs, out), 1)
    return passed(1)


def check_c1_c2_at(m1, m2, eta: LocalConfiguration, xi: LocalConfiguration, x) -> Verdict:
    """Flow-based decision of (c1) and (c2) at ``x``; a failing verdict names the subset."""
    if not leq(eta, xi):
        raise ValueError("check_c1_c2_at needs eta <= xi")
    return check_classification(ChangeClassification(m1, m2, eta, xi, x))


def check_c1_c2_bruteforce(m1, m2, eta: LocalConfiguration, xi: LocalConfiguration, x) -> Verdict:
    """Evaluate every subset inequality literally."""
    cls = ChangeClassification(m1, m2, eta, xi, x)
    R1, R2 = cls.R1, cls.R2
    if len(R1) > BRUTE_FORCE_LIMIT or len(R2) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"|R1|={len(R1)}, |R2|={len(R2)} exceed {BRUTE_FORCE_LIMIT}")
    count = 0
    for size in range(len(R1) + 1):
        for D1 in combinations(R1, size):
            count += 1
            lhs = _sum_rates(cls, D1)
            rhs = _up_total(cls, D1)
            if lhs > rhs:
                return Verdict(False, _certificate(cls, "c1", D1, lhs, rhs), count)
    for size in range(len(R2) + 1):
        for D2 in combinations(R2, size):
            count += 1
            lhs = _sum_rates(cls, D2)
            rhs = _sum_rates(cls, down_set(D2, cls))
            if lhs > rhs:
                return Verdict(False, _certificate(cls, "c2", D2, lhs, rhs), count)
    return passed(count)


def replay(certificate: dict, m1, m2) -> bool:
    """Recompute a failing certificate's inequality from scratch."""
    cls = ChangeClassification(m1, m2, certificate["eta"], certificate["xi"], certificate["x"])
    subset = list(certificate["subset"])
    if certificate["condition"] == "c1":
        lhs = _sum_rates(cls, subset)
        rhs = _up_total(cls, subset)
    else:
        lhs = _sum_rates(cls, subset)
        rhs = _sum_rates(cls, down_set(subset, cls))
    return lhs == certificate["lhs"] and rhs == certificate["rhs"] and lhs > rhs


def ordered_pairs(n_sites: int, N: int):
    """All ``(eta, xi)`` value tuples with ``eta <= xi``, lexicographic in ``(eta, xi)``."""
    for eta in product(range(N + 1), repeat=n_sites):
        ranges = [range(v, N + 1) for v in eta]
        for xi in product(*ranges):
            yield eta, xi


def count_ordered_pairs(n_sites: int, N: int) -> int:
    return ((N + 1) * (N + 2) // 2) ** n_sites


def default_radius(m1, m2) -> int:
    """Radius covering every site a rate of a change at the centre can read."""
    return m1.lattice.delta + max(m1.radius, m2.radius)


def _check_same_shape(m1, m2):
    if m1.N != m2.N:
        raise ParameterMismatch(f"N differs: {m1.N} vs {m2.N}")
    if m1.lattice.d != m2.lattice.d or m1.lattice.delta != m2.lattice.delta:
        raise ParameterMismatch("lattice dimension or interaction range differs")
    if m1.translation_invariant != m2.translation_invariant:
        raise ParameterMismatch("one model is tied to a finite torus, the other is not")
    if not m1.translation_invariant and m1.lattice != m2.lattice:
        raise ParameterMismatch("finite models live on different tori")


def _local_chunk(args):
    m1, m2, radius, eta_prefixes = args
    lattice = Lattice(m1.lattice.d, None, m1.lattice.delta)
    window = box_window(lattice, (0,) * lattice.d, radius)
    return _scan(m1, m2, window, [(0,) * lattice.d], eta_prefixes)


def _scan(m1, m2, window, sites, eta_filter=None):
    N = m1.N
    count = 0
    for eta_vals, xi_vals in ordered_pairs(len(window), N):
        if eta_filter is not None and eta_vals[0] not in eta_filter:
            continue
        eta = LocalConfiguration._trusted(window, eta_vals, N)
        xi = LocalConfiguration._trusted(window, xi_vals, N)
        for x in sites:
            count += 1
            verdict = check_classification(ChangeClassification(m1, m2, eta, xi, x))
            if not verdict.holds:
                verdict.evaluated = count
                return verdict
    return passed(count)


def check_model_comparability(m1, m2, window_radius: int | None = None,
                              budget: int = DEFAULT_BUDGET, threads: int = 1) -> Verdict:
    """(c1)/(c2) over every ordered pair on a window around a generic site.

    Translation-invariant models are examined at the origin of Z^d with the
    window of the given radius (default: interaction range plus dependency
    radius, which covers every rate the conditions read).  Models tied to a
    finite torus are examined at every site of the torus over all ordered
    pairs of full configurations.
    """
    _check_same_shape(m1, m2)
    N = m1.N
    if m1.translation_invariant:
        radius = default_radius(m1, m2) if window_radius is None else window_radius
        if radius < default_radius(m1, m2):
            raise ValueError("window radius is smaller than the dependency range")
        lattice = Lattice(m1.lattice.d, None, m1.lattice.delta)
        window = box_window(lattice, (0,) * lattice.d, radius)
        sites = [(0,) * lattice.d]
    else:
        lattice = m1.lattice
        window = make_window(lattice, lattice.all_sites())
        sites = list(window.sites)
    total = count_ordered_pairs(len(window), N) * len(sites)
    if total > budget:
        raise ExplosionGuard(f"{total} evaluations exceed the budget of {budget}")
    if threads > 1 and m1.translation_invariant:
        # split on the value of the first window site; first failure in scan order wins
        chunks = [(m1, m2, radius, {v}) for v in range(N + 1)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_local_chunk, chunks))
        count = 0
        for res in results:
            if not res.holds:
                res.evaluated += count
                return res
            count += res.evaluated
        return passed(count)
    return _scan(m1, m2, window, sites)


def check_attractive(m, window_radius: int | None = None, budget: int = DEFAULT_BUDGET,
                     threads: int = 1) -> Verdict:
    return check_model_comparability(m, m, window_radius, budget, threads)
