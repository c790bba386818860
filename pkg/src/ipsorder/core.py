"""Lattices, local configurations and the canonical local change maps.

Sites are integer tuples of length ``d``.  A :class:`Lattice` either wraps
coordinates modulo ``L`` (a torus) or, with ``L=None``, is the infinite
lattice used for translation-invariant local analysis.  Configurations live
on explicit site windows; asking for a site outside the window raises
:class:`~ipsorder.errors.WindowTooSmall` instead of silently reading zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterable, Sequence

from .errors import DomainError, WindowMismatch, WindowTooSmall

Site = tuple

ZERO = Fraction(0)


@dataclass(frozen=True)
class Lattice:
    """The site set: Z^d (``L=None``) or the torus (Z/LZ)^d.

    ``delta`` is the interaction range: ``y ~ x`` iff ``0 < |y - x|_1 <= delta``
    (torus distance when ``L`` is set).
    """

    d: int = 1
    L: int | None = None
    delta: int = 1

    def __post_init__(self):
        if self.d < 1 or self.delta < 1:
            raise ValueError("d and delta must be positive")
        if self.L is not None and self.L < 1:
            raise ValueError("L must be positive")

    def wrap(self, site: Site) -> Site:
        if self.L is None:
            return tuple(site)
        return tuple(c % self.L for c in site)

    def shift(self, site: Site, offset: Site) -> Site:
        moved = tuple(a + b for a, b in zip(site, offset))
        return self.wrap(moved) if self.L is not None else moved

    def difference(self, y: Site, x: Site) -> Site:
        """Offset ``y - x``, reduced to the representative of least norm on a torus."""
        diff = [a - b for a, b in zip(y, x)]
        if self.L is not None:
            half = self.L // 2
            diff = [((c + half) % self.L) - half for c in diff]
        return tuple(diff)

    def distance(self, x: Site, y: Site) -> int:
        return sum(abs(c) for c in self.difference(y, x))

    @cached_property
    def offsets(self) -> tuple:
        """Non-zero offsets within the interaction range, lexicographic."""
        rng = range(-self.delta, self.delta + 1)
        out = [o for o in product(rng, repeat=self.d) if 0 < sum(map(abs, o)) <= self.delta]
        return tuple(sorted(out))

    def neighbors(self, x: Site) -> tuple:
        """Neighbours of ``x`` ordered by offset; duplicates from wrapping are dropped."""
        return _neighbors(self, tuple(x))

    def is_neighbor(self, x: Site, y: Site) -> bool:
        return x != y and self.distance(x, y) <= self.delta

    def box(self, center: Site, radius: int) -> tuple:
        """Sites of the box of the given radius around ``center``, ordered by offset."""
        rng = range(-radius, radius + 1)
        sites = []
        seen = set()
        for off in product(rng, repeat=self.d):
            s = self.shift(center, off)
            if s not in seen:
                seen.add(s)
                sites.append(s)
        return tuple(sites)

    def all_sites(self) -> tuple:
        if self.L is None:
            raise ValueError("the infinite lattice has no finite site list")
        return tuple(product(range(self.L), repeat=self.d))


@lru_cache(maxsize=None)
def _neighbors(lattice: Lattice, x: Site) -> tuple:
    out = []
    for off in lattice.offsets:
        y = lattice.shift(x, off)
        if y != x and y not in out:
            out.append(y)
    return tuple(out)


class Window:
    """An ordered list of sites on a lattice, with a site -> position index."""

    __slots__ = ("lattice", "sites", "index", "_hash")

    def __init__(self, lattice: Lattice, sites: Iterable[Site]):
        self.lattice = lattice
        self.sites = tuple(lattice.wrap(s) for s in sites)
        self.index = {s: i for i, s in enumerate(self.sites)}
        if len(self.index) != len(self.sites):
            raise ValueError("window lists a site twice")
        self._hash = hash((lattice, self.sites))

    def __eq__(self, other):
        return (
            isinstance(other, Window)
            and self._hash == other._hash
            and self.sites == other.sites
            and self.lattice == other.lattice
        )

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.sites)

    def __contains__(self, site):
        return site in self.index

    def __repr__(self):
        return f"Window({list(self.sites)})"


@lru_cache(maxsize=4096)
def make_window(lattice: Lattice, sites: tuple) -> Window:
    return Window(lattice, sites)


def box_window(lattice: Lattice, center: Site, radius: int) -> Window:
    return make_window(lattice, lattice.box(tuple(center), radius))


class LocalConfiguration:
    """Occupation numbers in ``{0..N}`` on a window of sites."""

    __slots__ = ("window", "values", "N", "_hash")

    def __init__(self, window: Window, values: Sequence[int], N: int):
        values = tuple(int(v) for v in values)
        if len(values) != len(window):
            raise ValueError("one value per window site is required")
        for v in values:
            if v < 0 or v > N:
                raise DomainError(f"value {v} outside [0, {N}]")
        self.window = window
        self.values = values
        self.N = N
        self._hash = None

    @classmethod
    def _trusted(cls, window, values, N):
        obj = cls.__new__(cls)
        obj.window = window
        obj.values = values
        obj.N = N
        obj._hash = None
        return obj

    @classmethod
    def line(cls, values: Sequence[int], N: int, start: int | None = None,
             lattice: Lattice | None = None) -> "LocalConfiguration":
        """A one-dimensional window; by default centred so the middle site is 0."""
        lattice = lattice or Lattice(1)
        if start is None:
            start = -(len(values) // 2)
        sites = tuple((start + i,) for i in range(len(values)))
        return cls(make_window(lattice, sites), values, N)

    @classmethod
    def from_mapping(cls, lattice: Lattice, mapping: dict, N: int) -> "LocalConfiguration":
        sites = tuple(sorted(mapping))
        return cls(make_window(lattice, sites), [mapping[s] for s in sites], N)

    @property
    def lattice(self) -> Lattice:
        return self.window.lattice

    @property
    def sites(self) -> tuple:
        return self.window.sites

    def __getitem__(self, site: Site) -> int:
        i = self.window.index.get(site)
        if i is None:
            raise WindowTooSmall(f"site {site} is outside the window")
        return self.values[i]

    def __contains__(self, site):
        return site in self.window.index

    def as_dict(self) -> dict:
        return dict(zip(self.window.sites, self.values))

    def replace(self, updates: dict) -> "LocalConfiguration":
        vals = list(self.values)
        for s, v in updates.items():
            i = self.window.index.get(s)
            if i is None:
                raise WindowTooSmall(f"site {s} is outside the window")
            vals[i] = v
        return LocalConfiguration(self.window, vals, self.N)

    def try_apply(self, change: "Change"):
        """Result of ``change``, or ``None`` when the change is not admissible."""
        idx = self.window.index
        vals = list(self.values)
        for site, delta in change.deltas:
            i = idx.get(site)
            if i is None:
                raise WindowTooSmall(f"{change} touches {site}, outside the window")
            v = vals[i] + delta
            if v < 0 or v > self.N:
                return None
            vals[i] = v
        return LocalConfiguration._trusted(self.window, tuple(vals), self.N)

    def admits(self, change: "Change") -> bool:
        idx = self.window.index
        for site, delta in change.deltas:
            i = idx.get(site)
            if i is None:
                raise WindowTooSmall(f"{change} touches {site}, outside the window")
            v = self.values[i] + delta
            if v < 0 or v > self.N:
                return False
        return True

    def restrict(self, window: Window) -> "LocalConfiguration":
        return LocalConfiguration._trusted(window, tuple(self[s] for s in window.sites), self.N)

    def __eq__(self, other):
        return (
            isinstance(other, LocalConfiguration)
            and self.values == other.values
            and self.window == other.window
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.window, self.values))
        return self._hash

    def __repr__(self):
        return "(" + " ".join(map(str, self.values)) + ")"


@dataclass(frozen=True, slots=True)
class Change:
    """A canonical local map.

    ``kind`` is ``"arr"``, ``"dep"`` or ``"mig"``.  Arrivals and departures
    act on ``site`` by ``k``; a migration removes ``k`` individuals from
    ``site`` and adds ``l`` at ``to``.
    """

    kind: str
    site: Site
    k: int
    to: Site | None = None
    l: int = 0
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.kind, self.site, self.k, self.to, self.l)))

    def __hash__(self):
        return self._hash

    @property
    def deltas(self) -> tuple:
        if self.kind == "arr":
            return ((self.site, self.k),)
        if self.kind == "dep":
            return ((self.site, -self.k),)
        return ((self.site, -self.k), (self.to, self.l))

    @property
    def touched(self) -> tuple:
        return (self.site,) if self.to is None else (self.site, self.to)

    @property
    def owner(self) -> Site:
        """The site that loses individuals (migrations, departures) or gains them (arrivals)."""
        return self.site

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.site, self.to or (), self.k, self.l)

    def moved(self, lattice: Lattice, offset: Site) -> "Change":
        to = None if self.to is None else lattice.shift(self.to, offset)
        return Change(self.kind, lattice.shift(self.site, offset), self.k, to, self.l)

    def __repr__(self):
        if self.kind == "arr":
            return f"Arrival({_fmt_site(self.site)}, {self.k})"
        if self.kind == "dep":
            return f"Departure({_fmt_site(self.site)}, {self.k})"
        return f"Migration({_fmt_site(self.site)}, {_fmt_site(self.to)}, {self.k}, {self.l})"


_KIND_ORDER = {"arr": 0, "dep": 1, "mig": 2}


def _fmt_site(site):
    return str(site[0]) if len(site) == 1 else str(tuple(site))


def Arrival(x: Site, k: int) -> Change:
    if k < 1:
        raise ValueError("k must be at least 1")
    return Change("arr", tuple(x), k)


def Departure(x: Site, k: int) -> Change:
    if k < 1:
        raise ValueError("k must be at least 1")
    return Change("dep", tuple(x), k)


def Migration(src: Site, dst: Site, k: int, l: int) -> Change:
    """``k`` individuals leave ``src`` and ``l`` arrive at ``dst``."""
    if k < 1 or l < 1:
        raise ValueError("k and l must be at least 1")
    if tuple(src) == tuple(dst):
        raise ValueError("a migration needs two distinct sites")
    return Change("mig", tuple(src), k, tuple(dst), l)


def gain_at(x: Site, y: Site, k: int, l: int) -> Change:
    """``x`` gains ``k`` while its neighbour ``y`` loses ``l``."""
    return Migration(y, x, l, k)


def loss_at(x: Site, y: Site, k: int, l: int) -> Change:
    """``x`` loses ``k`` while its neighbour ``y`` gains ``l``."""
    return Migration(x, y, k, l)


def apply_change(change: Change, config: LocalConfiguration) -> LocalConfiguration:
    out = config.try_apply(change)
    if out is None:
        raise DomainError(f"{change} is not admissible from {config}")
    return out


def leq(a: LocalConfiguration, b: LocalConfiguration) -> bool:
    if a.window != b.window:
        raise WindowMismatch("configurations live on different windows")
    return all(u <= v for u, v in zip(a.values, b.values))


def enumerate_changes_at(x: Site, lattice: Lattice, k_max: int, l_max: int) -> tuple:
    """All canonical changes involving ``x`` with amounts bounded by ``k_max``/``l_max``.

    Order: arrivals, departures, then for each neighbour (by offset) the
    outgoing migrations followed by the incoming ones.
    """
    if k_max < 1 or l_max < 1:
        raise ValueError("k_max and l_max must be at least 1")
    return _changes_at(lattice, lattice.wrap(tuple(x)), k_max, l_max)


@lru_cache(maxsize=65536)
def _changes_at(lattice, x, k_max, l_max):
    out = [Arrival(x, k) for k in range(1, k_max + 1)]
    out += [Departure(x, k) for k in range(1, k_max + 1)]
    for y in lattice.neighbors(x):
        out += [Migration(x, y, k, l) for k in range(1, k_max + 1) for l in range(1, l_max + 1)]
        out += [Migration(y, x, k, l) for k in range(1, k_max + 1) for l in range(1, l_max + 1)]
    return tuple(out)


def changes_owned_by(x: Site, lattice: Lattice, k_max: int, l_max: int) -> tuple:
    """Changes whose ``owner`` is ``x``: every change on the lattice is owned by exactly one site."""
    return tuple(c for c in enumerate_changes_at(x, lattice, k_max, l_max) if c.site == x)


def translate_config(config: LocalConfiguration, center: Site, radius: int,
                     local_lattice: Lattice | None = None) -> LocalConfiguration:
    """Copy the box of ``radius`` around ``center`` onto Z^d, with ``center`` at the origin."""
    lat = config.lattice
    local_lattice = local_lattice or Lattice(lat.d, None, lat.delta)
    origin = (0,) * lat.d
    window = box_window(local_lattice, origin, radius)
    vals = tuple(config[lat.shift(center, off)] for off in window.sites)
    return LocalConfiguration._trusted(window, vals, config.N)
