"""Births, deaths, catastrophes and non-conservative flock migrations (model BDM).

Every parameter may depend on the neighbour vector ``r`` of the site that
loses individuals.  Such parameters are given as lookup tables keyed by
``r`` (a tuple ordered by neighbour offset); a plain value means the
parameter does not depend on ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb

from ..core import ZERO, Lattice
from .base import RateModel, as_fraction


def _frac_matrix(rows, M, N):
    rows = [[as_fraction(v) for v in row] for row in rows]
    if len(rows) != M or any(len(row) != N for row in rows):
        raise ValueError(f"migration matrix must be {M} x {N}")
    return tuple(tuple(row) for row in rows)


def _frac_vector(vals, M):
    vals = tuple(as_fraction(v) for v in vals)
    if len(vals) != M:
        raise ValueError(f"catastrophe vector must have length {M}")
    return vals


def neighbor_vectors(N: int, width: int):
    return list(product(range(N + 1), repeat=width))


@dataclass(frozen=True)
class BDMParams:
    """Parameter vector (phi, phi_A, mu, Lambda, N, N_A, M) of model BDM.

    ``mu`` has length ``M`` (``mu[k-1]`` is the rate of losing ``k``);
    ``lam`` is ``M x N`` (``lam[k-1][l-1]`` moves ``k`` out and ``l`` in).
    Each of the four may instead be a dict mapping neighbour vectors to
    such values.
    """

    N: int
    N_A: int
    M: int
    phi: object
    phi_A: object
    mu: object
    lam: object
    d: int = 1

    def __post_init__(self):
        if not (0 <= self.N_A <= self.N and 0 <= self.M <= self.N):
            raise ValueError("need N_A <= N and M <= N")
        width = 2 * self.d
        conv = {
            "phi": as_fraction,
            "phi_A": as_fraction,
            "mu": lambda v: _frac_vector(v, self.M),
            "lam": lambda v: _frac_matrix(v, self.M, self.N),
        }
        for name, fn in conv.items():
            value = getattr(self, name)
            if isinstance(value, dict):
                table = {tuple(r): fn(v) for r, v in value.items()}
                missing = [r for r in neighbor_vectors(self.N, width) if r not in table]
                if missing:
                    raise ValueError(f"{name} table misses neighbour vector {missing[0]}")
                object.__setattr__(self, name, table)
            else:
                object.__setattr__(self, name, fn(value))
        for r in self.r_values():
            vals = [self.phi_at(r), self.phi_A_at(r), *self.mu_at(r)]
            vals += [v for row in self.lam_at(r) for v in row]
            if any(v < 0 for v in vals):
                raise ValueError("BDM parameters must be non-negative")

    @property
    def depends_on_r(self) -> bool:
        return any(isinstance(getattr(self, n), dict) for n in ("phi", "phi_A", "mu", "lam"))

    def r_values(self):
        """Neighbour vectors worth distinguishing (one dummy when nothing depends on r)."""
        if not self.depends_on_r:
            return [None]
        return neighbor_vectors(self.N, 2 * self.d)

    def _at(self, name, r):
        value = getattr(self, name)
        return value[r] if isinstance(value, dict) else value

    def phi_at(self, r):
        return self._at("phi", r)

    def phi_A_at(self, r):
        return self._at("phi_A", r)

    def mu_at(self, r):
        return self._at("mu", r)

    def lam_at(self, r):
        return self._at("lam", r)

    def is_diagonal(self) -> bool:
        for r in self.r_values():
            lam = self.lam_at(r)
            for k in range(self.M):
                for l in range(self.N):
                    if k != l and lam[k][l] != 0:
                        return False
        return True


class BDMModel(RateModel):
    """Rate rule of model BDM on the nearest-neighbour lattice of dimension ``d``."""

    def __init__(self, params: BDMParams, name="bdm"):
        self.params = params
        self.N = params.N
        self.lattice = Lattice(params.d, None, 1)
        self.radius = 1 if params.depends_on_r else 0
        self.k_max = max(params.M, 1)
        self.l_max = params.N
        self.name = name

    def _rate(self, change, config):
        return _admissible_rate(self.params, change, config)


def bdm_rate(p: BDMParams, change, config) -> Fraction:
    """Rate of ``change`` from ``config`` under model BDM (zero when not admissible)."""
    if not config.admits(change):
        return ZERO
    return _admissible_rate(p, change, config)


def _admissible_rate(p, change, config):
    x = change.site
    z = config[x]
    N, M = p.N, p.M
    r = tuple(config[y] for y in config.lattice.neighbors(x)) if p.depends_on_r else None
    if change.kind == "arr":
        return Fraction(z) if change.k == 1 and z < N else ZERO
    if change.kind == "dep":
        k = change.k
        rate = ZERO
        if k == 1:
            rate += z * (p.phi_A_at(r) if z <= p.N_A else p.phi_at(r))
        if k <= M and z - k >= N - M:
            rate += p.mu_at(r)[k - 1]
        return rate
    k, l = change.k, change.l
    if k > M or l > N:
        return ZERO
    if z - k >= N - M and config[change.to] + l <= N:
        return p.lam_at(r)[k - 1][l - 1]
    return ZERO


def binomial_params(lam, p, N: int, M: int, phi=1, phi_A=None, N_A=0, d: int = 1) -> BDMParams:
    """Flock migrations where each migrant survives the trip with probability ``p``.

    ``lambda_kl = lam * C(k, l) p^l (1-p)^(k-l)`` and the catastrophe rate
    ``mu_k = 2 d lam (1-p)^k`` accounts for flocks that die out en route.
    """
    lam, p = as_fraction(lam), as_fraction(p)
    matrix = [
        [lam * comb(k, l) * p ** l * (1 - p) ** (k - l) if l <= k else ZERO for l in range(1, N + 1)]
        for k in range(1, M + 1)
    ]
    mu = [2 * d * lam * (1 - p) ** k for k in range(1, M + 1)]
    phi = as_fraction(phi)
    phi_A = phi if phi_A is None else as_fraction(phi_A)
    return BDMParams(N, N_A, M, phi, phi_A, mu, matrix, d)


def _diag(values, M, N):
    return [[values[k] if k == l else ZERO for l in range(N)] for k in range(M)]


def msdc_params(lams, mus, N: int, M: int, phi=1, phi_A=None, N_A=0, d: int = 1) -> BDMParams:
    """Flock-size dependent migrations with catastrophes.

    ``lams``/``mus`` are length-``M`` lists, or dicts from neighbour vectors
    to such lists.
    """
    phi = phi if isinstance(phi, dict) else as_fraction(phi)
    phi_A = phi if phi_A is None else phi_A
    if isinstance(lams, dict):
        lam = {r: _diag([as_fraction(v) for v in vals], M, N) for r, vals in lams.items()}
    else:
        lam = _diag([as_fraction(v) for v in lams], M, N)
    return BDMParams(N, N_A, M, phi, phi_A, mus, lam, d)


def allee_params(lams, mus, lam_A, mu_A, A: int, N: int, M: int, phi=1, phi_A=None,
                 N_A=0, d: int = 1) -> BDMParams:
    """Migration boosted by ``lam_A`` and catastrophes by ``mu_A`` around a crowding threshold ``A``.

    With ``S(r)`` the neighbourhood total, migration rates are
    ``lams[j] + lam_A * [S(r) >= A]`` and catastrophe rates
    ``mus[j] + mu_A * [S(r) < A]``.
    """
    lam_A, mu_A = as_fraction(lam_A), as_fraction(mu_A)
    lams = [as_fraction(v) for v in lams]
    mus = [as_fraction(v) for v in mus]
    lam_table, mu_table = {}, {}
    for r in neighbor_vectors(N, 2 * d):
        crowded = sum(r) >= A
        lam_table[r] = [v + (lam_A if crowded else ZERO) for v in lams]
        mu_table[r] = [v + (ZERO if crowded else mu_A) for v in mus]
    return msdc_params(lam_table, mu_table, N, M, phi, phi_A, N_A, d)
