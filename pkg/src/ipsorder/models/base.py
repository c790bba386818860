"""Rate models: the rule assigning a rate to each (change, configuration) pair."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from ..core import ZERO, Change, Lattice, LocalConfiguration, enumerate_changes_at


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and ``"p/q"`` strings; floats are rejected to keep arithmetic exact."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rates")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {value!r}")


class RateModel:
    """Base class.  Subclasses implement :meth:`_rate` for admissible changes.

    Attributes:
        lattice: template lattice; only ``d`` and ``delta`` matter for
            translation-invariant models.
        N: maximal occupation.
        radius: dependency radius; a rate only reads sites within this
            distance of the sites the change touches.
        k_max, l_max: bounds on the amounts of the changes the model uses.
        translation_invariant: when False the model is tied to a finite
            torus and every site must be examined.
    """

    lattice: Lattice = Lattice(1)
    N: int = 1
    radius: int = 0
    k_max: int = 1
    l_max: int = 1
    translation_invariant: bool = True
    name: str = "model"

    def rate(self, change: Change, config: LocalConfiguration) -> Fraction:
        if not config.admits(change):
            return ZERO
        return self._rate(change, config)

    def _rate(self, change: Change, config: LocalConfiguration) -> Fraction:
        raise NotImplementedError

    def changes_at(self, x, lattice: Lattice | None = None) -> tuple:
        return enumerate_changes_at(x, lattice or self.lattice, self.k_max, self.l_max)

    def compatible(self, other: "RateModel") -> bool:
        return (
            self.N == other.N
            and self.lattice.d == other.lattice.d
            and self.lattice.delta == other.lattice.delta
        )

    def scaled(self, factor) -> "RateModel":
        return ScaledModel(self, as_fraction(factor))


class ScaledModel(RateModel):
    """Every rate of ``base`` multiplied by a constant."""

    def __init__(self, base: RateModel, factor: Fraction):
        self.base = base
        self.factor = factor
        self.lattice = base.lattice
        self.N = base.N
        self.radius = base.radius
        self.k_max = base.k_max
        self.l_max = base.l_max
        self.translation_invariant = base.translation_invariant
        self.name = f"{factor}*{base.name}"

    def _rate(self, change, config):
        return self.factor * self.base._rate(change, config)


class ZeroModel(RateModel):
    def __init__(self, N=1, lattice=Lattice(1)):
        self.N = N
        self.lattice = lattice
        self.name = "zero"

    def _rate(self, change, config):
        return ZERO


@dataclass(frozen=True)
class TableEntry:
    """One row of a local rate table.

    ``pattern`` lists the required values at the touched sites (the site
    itself, or source then destination for migrations); ``None`` matches
    anything.  ``direction`` optionally restricts a migration to one offset.
    """

    kind: str
    k: int
    l: int
    pattern: tuple
    rate: Fraction
    direction: tuple | None = None

    def matches(self, change: Change, config: LocalConfiguration) -> bool:
        for want, site in zip(self.pattern, change.touched):
            if want is not None and config[site] != want:
                return False
        if self.direction is not None:
            return config.lattice.difference(change.to, change.site) == self.direction
        return True


class LocalTableModel(RateModel):
    """Rates read off a table keyed by the values at the touched sites.

    The first matching entry wins; unmatched changes have rate zero.  Used
    for the custom-table family, the two-species exclusion and the
    constant-rate examples.
    """

    def __init__(self, entries, N: int, lattice: Lattice = Lattice(1), name="table"):
        self.N = N
        self.lattice = lattice
        self.name = name
        self.entries = tuple(entries)
        self._index = {}
        for e in self.entries:
            if e.rate < 0:
                raise ValueError("rates must be non-negative")
            self._index.setdefault((e.kind, e.k, e.l), []).append(e)
        self.k_max = max([e.k for e in self.entries] + [1])
        self.l_max = max([e.l for e in self.entries if e.kind == "mig"] + [1])
        self.radius = 0

    def _rate(self, change, config):
        for e in self._index.get((change.kind, change.k, change.l), ()):
            if e.matches(change, config):
                return e.rate
        return ZERO


def constant_entry(kind, k, rate, l=0) -> TableEntry:
    width = 2 if kind == "mig" else 1
    return TableEntry(kind, k, l, (None,) * width, as_fraction(rate))


def conservative_table_model(gamma: dict, N: int, name="conservative") -> LocalTableModel:
    """Symmetric conservative migrations: ``gamma[(k, alpha, beta)]`` moves ``k`` individuals
    from a site holding ``alpha`` to a neighbour holding ``beta``."""
    entries = []
    for (k, alpha, beta), rate in sorted(gamma.items()):
        rate = as_fraction(rate)
        if rate > 0 and alpha >= k and beta + k <= N:
            entries.append(TableEntry("mig", k, k, (alpha, beta), rate))
    return LocalTableModel(entries, N, name=name)


@dataclass(frozen=True)
class ExclusionParams:
    """Jump rates of an exclusion process on a ring of ``n`` sites.

    ``Gamma_eta(x, y) = table[(eta, x, y)]`` when present, else ``q[(x, y)]``;
    it is forced to zero unless ``x`` is occupied and ``y`` empty.
    """

    n: int
    q: dict
    table: dict

    def gamma(self, eta: tuple, x: int, y: int) -> Fraction:
        if eta[x] != 1 or eta[y] != 0:
            return ZERO
        key = (tuple(eta), x, y)
        if key in self.table:
            return self.table[key]
        return self.q.get((x, y), ZERO)

    @classmethod
    def simple(cls, q: dict, n: int) -> "ExclusionParams":
        return cls(n, {k: as_fraction(v) for k, v in q.items()}, {})

    @classmethod
    def from_rule(cls, rule, n: int) -> "ExclusionParams":
        """Tabulate ``rule(eta, x, y)`` over every configuration of the ring."""
        table = {}
        for eta in product((0, 1), repeat=n):
            for x in range(n):
                for y in range(n):
                    if x != y and eta[x] == 1 and eta[y] == 0:
                        table[(eta, x, y)] = as_fraction(rule(eta, x, y))
        return cls(n, {}, table)


class ExclusionModel(RateModel):
    """Exclusion process on a ring where every pair of sites interacts."""

    translation_invariant = False

    def __init__(self, params: ExclusionParams, name="exclusion"):
        self.params = params
        n = params.n
        self.N = 1
        self.lattice = Lattice(1, n, max(1, n // 2))
        self.radius = n
        self.k_max = 1
        self.l_max = 1
        self.name = name

    def _rate(self, change, config):
        if change.kind != "mig" or change.k != 1 or change.l != 1:
            return ZERO
        eta = tuple(config[(i,)] for i in range(self.params.n))
        return self.params.gamma(eta, change.site[0], change.to[0])
