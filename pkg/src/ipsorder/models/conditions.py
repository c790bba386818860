"""Closed-form sufficient (or exact) conditions for comparability and attractiveness.

Every checker scans its quantifiers in lexicographic order and returns the
first violation as the certificate.
"""

from __future__ import annotations

from itertools import product

from ..core import ZERO
from ..errors import NotDiagonal, ParameterMismatch
from ..verdict import Verdict, failed, passed
from .base import ExclusionParams, as_fraction
from .bdm import BDMParams, binomial_params


def _ordered_pairs(p1: BDMParams, p2: BDMParams):
    """All (r, s) with r <= s that can make a difference for the two parameter sets."""
    if not (p1.depends_on_r or p2.depends_on_r):
        yield None, None
        return
    vectors = list(product(range(p1.N + 1), repeat=2 * p1.d))
    for r in vectors:
        for s in vectors:
            if all(a <= b for a, b in zip(r, s)):
                yield r, s


def _same_shape(p1: BDMParams, p2: BDMParams):
    for name in ("N", "N_A", "M", "d"):
        if getattr(p1, name) != getattr(p2, name):
            raise ParameterMismatch(f"{name} differs: {getattr(p1, name)} vs {getattr(p2, name)}")


def _phi_violation(p1, p2, r, s):
    if p1.phi_at(r) < p2.phi_at(s):
        return {"condition": "a", "parameter": "phi", "r": r, "s": s,
                "lhs": p1.phi_at(r), "rhs": p2.phi_at(s)}
    if p1.phi_A_at(r) < p2.phi_A_at(s):
        return {"condition": "a", "parameter": "phi_A", "r": r, "s": s,
                "lhs": p1.phi_A_at(r), "rhs": p2.phi_A_at(s)}
    return None


def check_bdm_comparability(p1: BDMParams, p2: BDMParams) -> Verdict:
    """Sufficient conditions for the BDM process with ``p1`` to lie below the one with ``p2``.

    (a) death parameters decrease, (b) partial column sums of the migration
    matrix increase, (c) partial row sums, with the catastrophe rate spread
    over the ``2d`` directions as column zero, decrease; all for ``r <= s``.
    """
    _same_shape(p1, p2)
    N, M, two_d = p1.N, p1.M, 2 * p1.d
    count = 0
    for r, s in _ordered_pairs(p1, p2):
        count += 1
        bad = _phi_violation(p1, p2, r, s)
        if bad:
            return failed(count, **bad)
        lam1, lam2 = p1.lam_at(r), p2.lam_at(s)
        for m in range(1, M + 1):
            for k in range(1, N + 1):
                for j in range(k, N + 1):
                    lhs = sum((lam1[i][j - 1] for i in range(m)), ZERO)
                    rhs = sum((lam2[i][k - 1] for i in range(m)), ZERO)
                    if lhs > rhs:
                        return failed(count, condition="b", r=r, s=s, m=m, k=k, j=j, lhs=lhs, rhs=rhs)
        ext1 = [[p1.mu_at(r)[i] / two_d, *lam1[i]] for i in range(M)]
        ext2 = [[p2.mu_at(s)[i] / two_d, *lam2[i]] for i in range(M)]
        for n in range(N + 1):
            for i in range(1, M + 1):
                for l in range(i, M + 1):
                    lhs = sum(ext1[i - 1][: n + 1], ZERO)
                    rhs = sum(ext2[l - 1][: n + 1], ZERO)
                    if lhs < rhs:
                        return failed(count, condition="c", r=r, s=s, n=n, i=i, l=l, lhs=lhs, rhs=rhs)
    return passed(count)


def check_bdm_attractive(p: BDMParams) -> Verdict:
    return check_bdm_comparability(p, p)


def _diagonal(p: BDMParams, r):
    return [p.lam_at(r)[k][k] for k in range(p.M)]


def check_msdc(p1: BDMParams, p2: BDMParams) -> Verdict:
    """Conditions for flock-size dependent migrations with catastrophes (diagonal migration matrix).

    (a) as for BDM; (b) ``lam1_j(r) <= lam2_k(s)`` for ``k <= j``;
    (c) ``mu1_i(r) >= mu2_l(s)`` and ``mu1_i + 2d lam1_i >= mu2_l + 2d lam2_l`` for ``i <= l``.
    """
    _same_shape(p1, p2)
    for p in (p1, p2):
        if not p.is_diagonal():
            raise NotDiagonal("migration matrix has off-diagonal entries")
    M, two_d = p1.M, 2 * p1.d
    count = 0
    for r, s in _ordered_pairs(p1, p2):
        count += 1
        bad = _phi_violation(p1, p2, r, s)
        if bad:
            return failed(count, **bad)
        lam1, lam2 = _diagonal(p1, r), _diagonal(p2, s)
        mu1, mu2 = p1.mu_at(r), p2.mu_at(s)
        for k in range(1, M + 1):
            for j in range(k, M + 1):
                if lam1[j - 1] > lam2[k - 1]:
                    return failed(count, condition="b", r=r, s=s, i=k, j=j,
                                  lhs=lam1[j - 1], rhs=lam2[k - 1])
        for i in range(1, M + 1):
            for l in range(i, M + 1):
                if mu1[i - 1] < mu2[l - 1]:
                    return failed(count, condition="c", r=r, s=s, i=i, l=l,
                                  lhs=mu1[i - 1], rhs=mu2[l - 1])
                lhs = mu1[i - 1] + two_d * lam1[i - 1]
                rhs = mu2[l - 1] + two_d * lam2[l - 1]
                if lhs < rhs:
                    return failed(count, condition="c'", r=r, s=s, i=i, l=l, lhs=lhs, rhs=rhs)
    return passed(count)


def check_msdc_attractive(p: BDMParams) -> Verdict:
    """Attractiveness of one MSDC process: the two-process conditions with both sides equal."""
    return check_msdc(p, p)


def check_allee_attractive(lams, mus, lam_A, mu_A, d: int = 1) -> Verdict:
    """Parameter-level conditions for the Allee-effect model.

    (a) ``2d lam_A <= mu_A``; (b) ``lam_j <= lam_k`` for ``k <= j``;
    (c) ``mu_i >= mu_l`` and ``mu_i + 2d lam_i >= mu_l + 2d lam_l`` for ``i <= l``.
    """
    lams = [as_fraction(v) for v in lams]
    mus = [as_fraction(v) for v in mus]
    lam_A, mu_A = as_fraction(lam_A), as_fraction(mu_A)
    if 2 * d * lam_A > mu_A:
        return failed(1, condition="a", lhs=2 * d * lam_A, rhs=mu_A)
    M = len(lams)
    for k in range(1, M + 1):
        for j in range(k, M + 1):
            if lams[j - 1] > lams[k - 1]:
                return failed(1, condition="b", i=k, j=j, lhs=lams[j - 1], rhs=lams[k - 1])
    for i in range(1, M + 1):
        for l in range(i, M + 1):
            if mus[i - 1] < mus[l - 1]:
                return failed(1, condition="c", i=i, l=l, lhs=mus[i - 1], rhs=mus[l - 1])
            lhs = mus[i - 1] + 2 * d * lams[i - 1]
            rhs = mus[l - 1] + 2 * d * lams[l - 1]
            if lhs < rhs:
                return failed(1, condition="c'", i=i, l=l, lhs=lhs, rhs=rhs)
    return passed(1)


def check_exclusion_attractive(p: ExclusionParams, sites=None) -> Verdict:
    """Exact attractiveness test for an exclusion process on a finite ring.

    For every ``eta <= xi`` and site ``x``: when ``xi(x) = 0`` the excess
    rate at which ``eta`` fills ``x`` must be covered by jumps of ``xi`` into
    ``x`` from sites where only ``xi`` is occupied; when ``eta(x) = 1`` the
    mirrored statement for jumps out of ``x``.
    """
    n = p.n
    sites = list(range(n)) if sites is None else list(sites)
    count = 0
    for eta in product((0, 1), repeat=n):
        for xi in product((0, 1), repeat=n):
            if any(a > b for a, b in zip(eta, xi)):
                continue
            for x in sites:
                count += 1
                if xi[x] == 0:
                    lhs = sum((max(p.gamma(eta, y, x) - p.gamma(xi, y, x), ZERO)
                               for y in range(n) if y != x and eta[y] == 1), ZERO)
                    rhs = sum((p.gamma(xi, y, x) for y in range(n)
                               if y != x and xi[y] == 1 and eta[y] == 0), ZERO)
                    if lhs > rhs:
                        return failed(count, condition="gs1", x=x, eta=eta, xi=xi, lhs=lhs, rhs=rhs)
                if eta[x] == 1:
                    lhs = sum((max(p.gamma(xi, x, y) - p.gamma(eta, x, y), ZERO)
                               for y in range(n) if y != x and xi[y] == 0), ZERO)
                    rhs = sum((p.gamma(eta, x, y) for y in range(n)
                               if y != x and xi[y] == 1 and eta[y] == 0), ZERO)
                    if lhs > rhs:
                        return failed(count, condition="gs2", x=x, eta=eta, xi=xi, lhs=lhs, rhs=rhs)
    return passed(count)


def check_gs_conservative(gamma: dict, N: int, M: int | None = None) -> Verdict:
    """Tail-sum conditions for symmetric conservative batch migrations.

    ``gamma[(k, alpha, beta)]`` is the rate of moving ``k`` individuals from a
    site with ``alpha`` to a neighbour with ``beta``.  For all ``alpha <= c``,
    ``beta <= e`` and ``l, k >= 0``:

        sum_{k' > e - beta + l} G^{k'}_{alpha beta} <= sum_{l' > l} G^{l'}_{c e}
        sum_{k' > k} G^{k'}_{alpha beta} >= sum_{l' > c - alpha + k} G^{l'}_{c e}

    Entries that would leave ``{0..N}`` are treated as zero.
    """
    M = N if M is None else M

    def rate(k, a, b):
        if k < 1 or k > M or a < k or b + k > N:
            return ZERO
        return as_fraction(gamma.get((k, a, b), 0))

    def tail(a, b, above):
        return sum((rate(k, a, b) for k in range(max(above + 1, 1), M + 1)), ZERO)

    count = 0
    for alpha, c in product(range(N + 1), repeat=2):
        if alpha > c:
            continue
        for beta, e in product(range(N + 1), repeat=2):
            if beta > e:
                continue
            for l in range(0, N + 1):
                count += 1
                lhs, rhs = tail(alpha, beta, e - beta + l), tail(c, e, l)
                if lhs > rhs:
                    return failed(count, condition="GSC1", alpha=alpha, beta=beta, gamma=c,
                                  delta=e, l=l, lhs=lhs, rhs=rhs)
            for k in range(0, N + 1):
                count += 1
                lhs, rhs = tail(alpha, beta, k), tail(c, e, c - alpha + k)
                if lhs < rhs:
                    return failed(count, condition="GSC2", alpha=alpha, beta=beta, gamma=c,
                                  delta=e, k=k, lhs=lhs, rhs=rhs)
    return passed(count)


def binomial_closed_form(lam, p, N: int, M: int, d: int = 1) -> Verdict:
    """Closed-form attractiveness verdict for binomial flock migration."""
    return check_bdm_attractive(binomial_params(lam, p, N, M, d=d))


__all__ = [
    "binomial_closed_form",
    "check_allee_attractive",
    "check_bdm_attractive",
    "check_bdm_comparability",
    "check_exclusion_attractive",
    "check_gs_conservative",
    "check_msdc",
    "check_msdc_attractive",
]
