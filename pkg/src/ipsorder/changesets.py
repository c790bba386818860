"""Structural sets of changes at a site ``x`` for an ordered pair ``eta <= xi``.

Side 1 holds the changes of the lower process (admissible from ``eta``),
side 2 those of the upper process (admissible from ``xi``).  A change is
*good* when applying it keeps the pair ordered and *bad* otherwise.  Each
change is filed by how it moves the value at ``x``:

    ``+x``   arrival at x            ``-x``   departure from x
    ``+xy``  migration y -> x        ``-xy``  migration x -> y

The ``R`` sets are the changes that alone would break the order at ``x``;
the ``S`` sets are those that move the value at ``x`` away from the other
process.  ``T = S | R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import Change, LocalConfiguration, Site
from .errors import WindowMismatch


@dataclass(frozen=True, slots=True)
class Node:
    """A change together with the process it belongs to (side 1 or 2)."""

    side: int
    change: Change
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.side, self.change)))

    def __hash__(self):
        return self._hash

    def sort_key(self):
        return (self.side, self.change.sort_key())

    def __repr__(self):
        return f"{self.side}:{self.change!r}"


@dataclass(slots=True)
class ChangeInfo:
    node: Node
    rate: Fraction
    updates: dict  # site -> value after the change
    sign: int  # +1 when the value at x goes up, -1 when it goes down
    partner: Site | None
    good: bool
    region: str | None  # "R", "S" or None

    @property
    def change(self) -> Change:
        return self.node.change

    @property
    def side(self) -> int:
        return self.node.side

    @property
    def cell(self) -> str:
        base = "+x" if self.sign > 0 else "-x"
        return base if self.partner is None else base + "y"

    @property
    def label(self) -> str:
        status = "G" if self.good else "B"
        return f"{status}{self.side}{self.cell}"


def _result_updates(config: LocalConfiguration, change: Change):
    """Values at the touched sites after ``change``, or ``None`` if not admissible."""
    out = {}
    N = config.N
    for site, delta in change.deltas:
        v = config[site] + delta
        if v < 0 or v > N:
            return None
        out[site] = v
    return out


class ChangeClassification:
    """All rate-positive changes in ``C^x`` for both processes, filed into the structural sets."""

    def __init__(self, m1, m2, eta: LocalConfiguration, xi: LocalConfiguration, x: Site):
        if eta.window != xi.window:
            raise WindowMismatch("eta and xi must share a window")
        lattice = eta.lattice
        x = lattice.wrap(tuple(x))
        self.x = x
        self.eta = eta
        self.xi = xi
        self.m1 = m1
        self.m2 = m2
        self.info = {}
        self.admissible2 = {}
        self.side1 = []
        self.side2 = []
        for change in m1.changes_at(x, lattice):
            updates = _result_updates(eta, change)
            if updates is None:
                continue
            rate = m1._rate(change, eta)
            if rate <= 0:
                continue
            good = all(v <= xi[s] for s, v in updates.items())
            sign, partner = _orientation(change, x)
            if updates[x] > xi[x]:
                region = "R"
            elif sign < 0:
                region = "S"
            else:
                region = None
            node = Node(1, change)
            info = ChangeInfo(node, rate, updates, sign, partner, good, region)
            self.info[node] = info
            self.side1.append(info)
        for change in m2.changes_at(x, lattice):
            updates = _result_updates(xi, change)
            if updates is None:
                continue
            rate = m2._rate(change, xi)
            node = Node(2, change)
            sign, partner = _orientation(change, x)
            good = all(eta[s] <= v for s, v in updates.items())
            if updates[x] < eta[x]:
                region = "R"
            elif sign > 0:
                region = "S"
            else:
                region = None
            info = ChangeInfo(node, rate, updates, sign, partner, good, region)
            self.admissible2[node] = info
            if rate <= 0:
                continue
            self.info[node] = info
            self.side2.append(info)

    def _region(self, side, region):
        infos = self.side1 if side == 1 else self.side2
        return [i.node for i in infos if i.region == region]

    @property
    def R1(self):
        return self._region(1, "R")

    @property
    def S1(self):
        return self._region(1, "S")

    @property
    def T1(self):
        return [i.node for i in self.side1 if i.region is not None]

    @property
    def R2(self):
        return self._region(2, "R")

    @property
    def S2(self):
        return self._region(2, "S")

    @property
    def T2(self):
        return [i.node for i in self.side2 if i.region is not None]

    def rate(self, node: Node) -> Fraction:
        return self.info[node].rate

    def select(self, side: int, status: str | None = None, sign: int | None = None,
               partner="any") -> list:
        """Nodes of one side filtered by good/bad status, direction at x and partner site.

        ``partner`` is ``"any"``, ``None`` (pure arrivals/departures), ``"*"``
        (any migration) or a specific neighbour.
        """
        infos = self.side1 if side == 1 else self.side2
        out = []
        for i in infos:
            if status is not None and (i.good != (status == "G")):
                continue
            if sign is not None and i.sign != sign:
                continue
            if partner == "*":
                if i.partner is None:
                    continue
            elif partner != "any" and i.partner != partner:
                continue
            out.append(i.node)
        return out

    def cell(self, label: str, y: Site | None = None) -> list:
        """Nodes of a cell named like ``"G1+x"``, ``"B2-xy"`` or ``"G1-x*"`` (all migrations)."""
        status, side, rest = label[0], int(label[1]), label[2:]
        sign = 1 if rest[0] == "+" else -1
        if rest.endswith("*"):
            partner = "*"
        elif rest.endswith("y"):
            if y is None:
                raise ValueError("a partner site is needed for an xy cell")
            partner = y
        else:
            partner = None
        return self.select(side, status, sign, partner)

    def below(self, a: Node, b: Node) -> bool:
        """``eta_a <= xi_b``; either may be ``None`` for "no change"."""
        ua = self.info[a].updates if a is not None else {}
        ub = (self.info.get(b) or self.admissible2[b]).updates if b is not None else {}
        return dominated(self.eta, self.xi, ua, ub)

    def lookup(self, node: Node) -> ChangeInfo:
        return self.info.get(node) or self.admissible2[node]

    def result(self, node: Node) -> LocalConfiguration:
        base = self.eta if node.side == 1 else self.xi
        info = self.info.get(node) or self.admissible2[node]
        return base.replace(info.updates)


def dominated(eta, xi, ua: dict, ub: dict) -> bool:
    """Whether ``eta`` updated by ``ua`` lies below ``xi`` updated by ``ub``.

    Only sites touched by one of the two updates can break the order.
    """
    for s, v in ua.items():
        if v > ub.get(s, xi[s]):
            return False
    for s, v in ub.items():
        if s not in ua and eta[s] > v:
            return False
    return True


def _orientation(change: Change, x: Site):
    if change.kind == "arr":
        return 1, None
    if change.kind == "dep":
        return -1, None
    if change.site == x:
        return -1, change.to
    return 1, change.site


def classify(m1, m2, eta, xi, x) -> ChangeClassification:
    return ChangeClassification(m1, m2, eta, xi, x)


def up_set(D1, cls: ChangeClassification) -> list:
    """Rate-positive side-2 changes that dominate some member of ``D1``.

    Zero-rate changes would add nothing to the sums in (c1), so they are left out.
    """
    D1 = list(D1)
    return [i.node for i in cls.side2 if any(cls.below(a, i.node) for a in D1)]


def down_set(D2, cls: ChangeClassification) -> list:
    """Side-1 changes (rate-positive, admissible from ``eta``) dominated by some member of ``D2``."""
    D2 = list(D2)
    return [i.node for i in cls.side1 if any(cls.below(i.node, b) for b in D2)]
