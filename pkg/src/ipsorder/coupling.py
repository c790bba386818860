"""Order-preserving Markovian coupling assembled from flow solutions.

For a fixed ordered pair ``eta <= xi`` the construction solves one flow
problem per site (``P^x``), then one problem per ordered pair of
neighbours (the half problem ``P2^{xy+}``, which pairs the moves of the
lower process out of ``x`` with moves of the upper process from ``x`` to
``y`` and into ``y``).  The flows become the rates of coupled moves; what
is left of each rate moves one component alone.

Every generator entry belongs to a *generator site* ``x``: the terms
gen1, gen10, gen2, gen11, gen3, gen5 at ``x`` and gen4, gen6, genx at
``(x, y)`` for every neighbour ``y``.  The entries of ``x`` depend on the
two configurations within distance ``2 delta + rho`` of ``x``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .changesets import ChangeClassification, Node, dominated
from .core import (
    ZERO,
    Change,
    Lattice,
    LocalConfiguration,
    box_window,
    enumerate_changes_at,
    leq,
)
from .errors import Infeasible, NegativeResidual
from .netflow import CutCertificate, Flow, FlowNetwork, audit, solve_feasible

TERMS = ("gen1", "gen10", "gen2", "gen11", "gen3", "gen5", "gen4", "gen6", "genx")
UNCOUPLED = {"gen1": 1, "gen2": 1, "gen10": 2, "gen11": 2}


def _total(values):
    return sum(values, ZERO)


# ---------------------------------------------------------------- P^x


@dataclass
class SiteSolution:
    """A solution ``f^x`` of ``P^x`` with no flow between the two S sets."""

    x: tuple
    cls: ChangeClassification
    network: FlowNetwork
    flow: Flow

    def f(self, b, a) -> Fraction:
        return self.flow.get((b, a), ZERO)

    def into(self, bs, a) -> Fraction:
        return _total(self.f(b, a) for b in bs)

    def out_of(self, b, as_) -> Fraction:
        return _total(self.f(b, a) for a in as_)

    def inner(self):
        """Positive flows on arcs between the two sides."""
        return {arc: v for arc, v in self.flow.items()
                if v > 0 and arc[0] != self.network.source and arc[1] != self.network.sink}


def px_network(cls: ChangeClassification) -> FlowNetwork:
    """Bounds of ``P^x``: exact amounts on R nodes, caps on S nodes, free arcs where ordered."""
    net = FlowNetwork()
    R2, S2, R1, S1 = set(cls.R2), set(cls.S2), set(cls.R1), set(cls.S1)
    T2 = [i.node for i in cls.side2 if i.node in R2 or i.node in S2]
    T1 = [i.node for i in cls.side1 if i.node in R1 or i.node in S1]
    for b in T2:
        c = cls.rate(b)
        net.add_arc("O", b, c if b in R2 else 0, c)
    for b in T2:
        for a in T1:
            if cls.below(a, b):
                net.add_arc(b, a, 0, None)
    for a in T1:
        c = cls.rate(a)
        net.add_arc(a, "Z", c if a in R1 else 0, c)
    return net


def recompute_terminals(network: FlowNetwork, inner: dict) -> Flow:
    """Complete inner arc values to a flow by setting O and Z arcs to row and column sums."""
    flow = Flow(network=network)
    o, z = network.source, network.sink
    for arc in network.arcs:
        flow[arc] = ZERO
    for (b, a), v in inner.items():
        if b == o or a == z:
            continue
        flow[(b, a)] = flow.get((b, a), ZERO) + v
        if (o, b) in network.arcs:
            flow[(o, b)] += v
        if (a, z) in network.arcs:
            flow[(a, z)] += v
    return flow


def tilde_fix(cls: ChangeClassification, network: FlowNetwork, flow: Flow) -> Flow:
    S1, S2 = set(cls.S1), set(cls.S2)
    inner = {}
    for (b, a), v in flow.items():
        if b == network.source or a == network.sink:
            continue
        inner[(b, a)] = ZERO if (b in S2 and a in S1) else v
    return recompute_terminals(network, inner)


def solve_px(m1, m2, eta, xi, x, cls: ChangeClassification | None = None) -> SiteSolution:
    cls = cls or ChangeClassification(m1, m2, eta, xi, x)
    net = px_network(cls)
    out = solve_feasible(net)
    if isinstance(out, CutCertificate):
        raise Infeasible(f"P^x is infeasible at x={cls.x} for {eta} <= {xi}", out)
    return SiteSolution(cls.x, cls, net, tilde_fix(cls, net, out))


def table2_violations(sol: SiteSolution) -> list:
    """Positive flows that the zero pattern of a tilde-fixed ``f^x`` forbids."""
    cls = sol.cls
    bad = []
    for (b, a), v in sol.inner().items():
        ib, ia = cls.info[b], cls.info[a]
        if not cls.below(a, b):
            bad.append((b, a, "order"))
            continue
        lb, la = ib.label, ia.label
        if lb == "B2-x":
            ok = la in ("G1-x", "G1-xy")
        elif lb == "B2-xy":
            ok = la in ("G1-x", "G1-xy") or (la == "B1-xy" and ia.partner == ib.partner)
        elif lb == "B2+xy":
            ok = la == "B1+xy" and ia.partner == ib.partner
        elif lb in ("G2+x", "G2+xy"):
            ok = la in ("B1+x", "B1+xy")
        else:
            ok = False
        if not ok:
            bad.append((b, a, f"{lb}->{la}"))
    return bad


def _forced_zero(ib, ia) -> str | None:
    """Which structural rule, if any, forbids flow from ``ib`` (side 2) to ``ia`` (side 1)."""
    bad1 = not ia.good
    bad2 = not ib.good
    r1, r2 = ia.region == "R", ib.region == "R"
    s1, s2 = ia.region == "S", ib.region == "S"
    if s2 and s1:
        return "S2->S1"
    if bad1 and ia.sign > 0 and ia.partner is None:
        if r2 or (bad2 and ib.sign > 0 and ib.partner is not None):
            return "into pure bad arrival"
    if bad2 and ib.sign < 0 and ib.partner is None:
        if r1 or (bad1 and ia.sign < 0 and ia.partner is not None):
            return "out of pure bad departure"
    if bad2 and ib.sign < 0 and ib.partner is not None and bad1 and ia.sign > 0 and ia.partner is not None:
        return "bad departure-migration to bad arrival-migration"
    if bad1 and ia.sign > 0 and ia.partner is not None:
        if r2 or (bad2 and ib.sign > 0 and ib.partner is not None and ib.partner != ia.partner):
            return "into bad arrival-migration from elsewhere"
    if bad2 and ib.sign < 0 and ib.partner is not None:
        if r1 or (bad1 and ia.sign < 0 and ia.partner is not None and ia.partner != ib.partner):
            return "out of bad departure-migration to elsewhere"
    return None


def forced_zero_violations(sol: SiteSolution) -> list:
    """Positive flows of ``f^x`` on arcs that every solution of ``P^x`` leaves empty.

    Checked cell by cell from the classification alone, without consulting
    the order relation, so it is independent of :func:`table2_violations`.
    """
    bad = []
    for (b, a), v in sol.inner().items():
        rule = _forced_zero(sol.cls.info[b], sol.cls.info[a])
        if rule is not None:
            bad.append((b, a, rule))
    return bad


def half_zero_violations(half: "HalfSolution") -> list:
    """Positive good-to-good flows left in a half solution."""
    good1, good2 = set(half.groups["G1"]), set(half.groups["G2"])
    return [(b, a) for (b, a), v in half.flow.items() if v and b in good2 and a in good1]


# ---------------------------------------------------------------- P^{xy}


class _Roles:
    """Node roles of a pair problem, relative to the ordered pair ``(x, y)``."""

    def __init__(self):
        self.role = {}
        self.info = {}

    def add(self, node, role, info):
        self.role[node] = role
        self.info[node] = info


def _g1_minus(cls):
    return cls.select(1, "G", -1)


def _g2_plus(cls):
    return cls.select(2, "G", 1)


def _half_nodes(sx: SiteSolution, sy: SiteSolution):
    """Node groups of the half problem ``P2^{xy+}``."""
    cx, cy, y = sx.cls, sy.cls, sy.x
    return {
        "G1": _g1_minus(cx),
        "B1": cx.cell("B1-xy", y),
        "G2": _g2_plus(cy),
        "B2": cx.cell("B2-xy", y),
    }


def _half_bounds(sx: SiteSolution, sy: SiteSolution, groups):
    """Terminal bounds of the half problem; zero-capacity good nodes are dropped."""
    cx = sx.cls
    supply, demand = [], []
    for b in groups["G2"]:
        cap = sy.out_of(b, groups["B1"])
        if cap > 0:
            supply.append((b, ZERO, cap))
    for b in groups["B2"]:
        c = cx.rate(b)
        supply.append((b, c, c))
    for a in groups["B1"]:
        c = cx.rate(a)
        demand.append((a, c, c))
    for a in groups["G1"]:
        cap = sx.into(groups["B2"], a)
        if cap > 0:
            demand.append((a, ZERO, cap))
    return supply, demand


def _build(supply, demand, eta, xi, infos, net=None):
    net = net or FlowNetwork()
    for b, lo, up in supply:
        net.add_arc("O", b, lo, up)
    for b, _, _ in supply:
        for a, _, _ in demand:
            if dominated(eta, xi, infos[a].updates, infos[b].updates):
                net.add_arc(b, a, 0, None)
    for a, lo, up in demand:
        net.add_arc(a, "Z", lo, up)
    return net


@dataclass
class HalfSolution:
    """Solution of ``P2^{xy+}`` with good-to-good arcs zeroed."""

    x: tuple
    y: tuple
    network: FlowNetwork
    flow: Flow
    groups: dict

    def f(self, b, a) -> Fraction:
        return self.flow.get((b, a), ZERO)


def _infos(*classifications):
    out = {}
    for cls in classifications:
        out.update(cls.admissible2)
        out.update(cls.info)
    return out


def p2_network(sx: SiteSolution, sy: SiteSolution, eta=None, xi=None):
    """Half problem network; ``eta``/``xi`` default to the configurations ``sx`` was solved on."""
    groups = _half_nodes(sx, sy)
    supply, demand = _half_bounds(sx, sy, groups)
    infos = _infos(sx.cls, sy.cls)
    eta = sx.cls.eta if eta is None else eta
    xi = sx.cls.xi if xi is None else xi
    return _build(supply, demand, eta, xi, infos), groups


def solve_p2(sx: SiteSolution, sy: SiteSolution, eta=None, xi=None) -> HalfSolution:
    net, groups = p2_network(sx, sy, eta, xi)
    out = solve_feasible(net)
    if isinstance(out, CutCertificate):
        raise Infeasible(f"P2 is infeasible for the pair {sx.x}, {sy.x}", out)
    good1, good2 = set(groups["G1"]), set(groups["G2"])
    inner = {}
    for (b, a), v in out.items():
        if b == net.source or a == net.sink:
            continue
        inner[(b, a)] = ZERO if (b in good2 and a in good1) else v
    return HalfSolution(sx.x, sy.x, net, recompute_terminals(net, inner), groups)


def p1_plus_restriction(sx: SiteSolution, y):
    """``P1^{xy+}`` with the restriction of ``f^x`` as its solution.

    Nodes: lower-process moves out of ``x`` that keep the order, the bad
    moves from ``x`` to ``y``, and the bad upper-process moves from ``x`` to ``y``.
    """
    cls = sx.cls
    B2 = cls.cell("B2-xy", y)
    G1 = _g1_minus(cls)
    B1 = cls.cell("B1-xy", y)
    net = FlowNetwork()
    for b in B2:
        c = cls.rate(b)
        net.add_arc("O", b, c, c)
    for b in B2:
        for a in G1 + B1:
            if cls.below(a, b):
                net.add_arc(b, a, 0, None)
    for a in G1:
        net.add_arc(a, "Z", 0, sx.into(B2, a))
    for a in B1:
        net.add_arc(a, "Z", 0, cls.rate(a))
    inner = {(b, a): sx.f(b, a) for (b, a) in net.arcs if b != "O" and a != "Z"}
    return net, recompute_terminals(net, inner)


def p1_minus_restriction(sx: SiteSolution, y):
    """``P1^{xy-}``: mirror image of :func:`p1_plus_restriction` for moves into ``x``."""
    cls = sx.cls
    B1 = cls.cell("B1+xy", y)
    B2 = cls.cell("B2+xy", y)
    G2 = _g2_plus(cls)
    net = FlowNetwork()
    for b in B2:
        net.add_arc("O", b, 0, cls.rate(b))
    for b in G2:
        net.add_arc("O", b, 0, sx.out_of(b, B1))
    for b in B2 + G2:
        for a in B1:
            if cls.below(a, b):
                net.add_arc(b, a, 0, None)
    for a in B1:
        c = cls.rate(a)
        net.add_arc(a, "Z", c, c)
    inner = {(b, a): sx.f(b, a) for (b, a) in net.arcs if b != "O" and a != "Z"}
    return net, recompute_terminals(net, inner)


@dataclass
class PairSolution:
    """``f^{xy}`` on the full pair problem, merged from the two half problems."""

    x: tuple
    y: tuple
    network: FlowNetwork
    flow: Flow
    roles: dict
    halves: dict


def pxy_network(sx: SiteSolution, sy: SiteSolution):
    """Full pair problem for ``{x, y}``; returns the network and each node's role."""
    plus, minus = _half_nodes(sx, sy), _half_nodes(sy, sx)
    sp, dp = _half_bounds(sx, sy, plus)
    sm, dm = _half_bounds(sy, sx, minus)
    roles = {}
    for group, role in (("G1", "G1-x"), ("B1", "B1-xy"), ("G2", "G2+y"), ("B2", "B2-xy")):
        for n in plus[group]:
            roles[n] = role
    for group, role in (("G1", "G1-y"), ("B1", "B1+xy"), ("G2", "G2+x"), ("B2", "B2+xy")):
        for n in minus[group]:
            roles[n] = role
    infos = _infos(sx.cls, sy.cls)
    net = _build(sp + sm, dp + dm, sx.cls.eta, sx.cls.xi, infos)
    return net, roles


def solve_pxy(m1, m2, eta, xi, x, y, fx: SiteSolution | None = None,
              fy: SiteSolution | None = None) -> PairSolution:
    fx = fx or solve_px(m1, m2, eta, xi, x)
    fy = fy or solve_px(m1, m2, eta, xi, y)
    plus, minus = solve_p2(fx, fy), solve_p2(fy, fx)
    net, roles = pxy_network(fx, fy)
    inner = {}
    for half in (plus, minus):
        for (b, a), v in half.flow.items():
            if b != "O" and a != "Z" and v:
                inner[(b, a)] = v
    flow = recompute_terminals(net, inner)
    return PairSolution(fx.x, fy.x, net, flow, roles, {(fx.x, fy.x): plus, (fy.x, fx.x): minus})


_TABLE5 = {
    "G2+x": {"B1+xy"},
    "G2+y": {"B1-xy"},
    "B2-xy": {"G1-x", "B1-xy"},
    "B2+xy": {"G1-y", "B1+xy"},
}


def table5_violations(pair: PairSolution) -> list:
    """Positive flows of ``f^{xy}`` outside the allowed pattern (good-to-good is always zero)."""
    bad = []
    for (b, a), v in pair.flow.items():
        if v == 0 or b == pair.network.source or a == pair.network.sink:
            continue
        rb, ra = pair.roles[b], pair.roles[a]
        if ra not in _TABLE5[rb]:
            bad.append((b, a, f"{rb}->{ra}"))
    return bad


def inherited_bound_violations(pair: PairSolution, fx: SiteSolution) -> list:
    """``f^{xy}(B2^{-xy}, a) <= f^x(B2^{-xy}, a)`` for lower-process good moves out of ``x``."""
    B2 = [n for n, r in pair.roles.items() if r == "B2-xy"]
    bad = []
    for a, r in pair.roles.items():
        if r != "G1-x":
            continue
        lhs = _total(pair.flow.get((b, a), ZERO) for b in B2)
        if lhs > fx.into(B2, a):
            bad.append(a)
    return bad


# ---------------------------------------------------------------- generator


@dataclass(frozen=True)
class CouplingEntry:
    effect1: Change | None
    effect2: Change | None
    rate: Fraction
    term: str
    site: tuple | None = None


@dataclass
class FlowBundle:
    """Site flows and half-problem flows needed by a set of generator sites."""

    sites: dict = field(default_factory=dict)
    halves: dict = field(default_factory=dict)

    def pair(self, x, y) -> dict:
        """Merged inner flows of ``f^{xy}``."""
        out = {}
        for key in ((x, y), (y, x)):
            out.update({arc: v for arc, v in self.halves[key].flow.items() if v})
        return out


def build_bundle(m1, m2, eta, xi, sites, site_solver=None, half_solver=None) -> FlowBundle:
    """Solve the site problems and half problems the generator sites need.

    ``site_solver(x)`` and ``half_solver(x, y, fx, fy)`` may replace the
    direct solves (the memoizing coupler passes cached versions).
    """
    lattice = eta.lattice
    sites = [lattice.wrap(tuple(s)) for s in sites]
    needed = list(dict.fromkeys(sites + [y for x in sites for y in lattice.neighbors(x)]))
    site_solver = site_solver or (lambda x: solve_px(m1, m2, eta, xi, x))
    half_solver = half_solver or (lambda x, y, fx, fy: solve_p2(fx, fy, eta, xi))
    bundle = FlowBundle()
    for x in needed:
        bundle.sites[x] = site_solver(x)
    for x in sites:
        for y in lattice.neighbors(x):
            for key in ((x, y), (y, x)):
                if key not in bundle.halves:
                    a, b = key
                    bundle.halves[key] = half_solver(a, b, bundle.sites[a], bundle.sites[b])
    return bundle


def entries_at(x, bundle: FlowBundle, lattice: Lattice, coupled_only: bool = False) -> list:
    """Generator entries of site ``x`` (terms gen1 to genx) from the bundle's flows.

    With ``coupled_only`` the single-process terms are skipped and pair
    problems missing from the bundle are ignored, so a partial bundle can
    still list the joint moves it determines.
    """
    sx = bundle.sites[x]
    cls = sx.cls
    out = []

    def emit(a, b, rate, term):
        if rate < 0:
            raise NegativeResidual(f"{term} at {x}: rate {rate} for {a} / {b}")
        if rate > 0:
            out.append(CouplingEntry(a and a.change, b and b.change, rate, term, x))

    G1m = _g1_minus(cls)
    G2p = _g2_plus(cls)
    B2x = cls.cell("B2-x")
    B1x = cls.cell("B1+x")
    nbrs = lattice.neighbors(x)
    if coupled_only:
        halves_out = {y: bundle.halves[(x, y)] for y in nbrs if (x, y) in bundle.halves}
    else:
        halves_out = {y: bundle.halves[(x, y)] for y in nbrs}
        halves_in = {y: bundle.halves[(y, x)] for y in nbrs}

    for a in ([] if coupled_only else cls.cell("G1+x")):
        emit(a, None, cls.rate(a), "gen1")
    for b in ([] if coupled_only else cls.cell("G2-x")):
        emit(None, b, cls.rate(b), "gen10")
    for a in ([] if coupled_only else G1m):
        used = sx.into(B2x, a)
        for y, h in halves_out.items():
            used += _total(h.f(b, a) for b in h.groups["B2"])
        emit(a, None, cls.rate(a) - used, "gen2")
    for b in ([] if coupled_only else G2p):
        used = sx.out_of(b, B1x)
        for y, h in halves_in.items():
            used += _total(h.f(b, a) for a in h.groups["B1"])
        emit(None, b, cls.rate(b) - used, "gen11")
    for b in B2x:
        for a in G1m:
            emit(a, b, sx.f(b, a), "gen3")
    for a in B1x:
        for b in G2p:
            emit(a, b, sx.f(b, a), "gen5")
    for y, h in halves_out.items():
        g = h.groups
        for b in g["B2"]:
            for a in g["G1"]:
                emit(a, b, h.f(b, a), "gen4")
        for a in g["B1"]:
            for b in g["G2"]:
                emit(a, b, h.f(b, a), "gen6")
        for a in g["B1"]:
            for b in g["B2"]:
                emit(a, b, h.f(b, a), "genx")
    return out


@dataclass
class CouplingTable:
    eta: LocalConfiguration
    xi: LocalConfiguration
    sites: tuple
    entries: list

    def total_rate(self) -> Fraction:
        return _total(e.rate for e in self.entries)

    def coupled(self):
        return [e for e in self.entries if e.effect1 is not None and e.effect2 is not None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["effect1", "effect2", "rate", "term"])
        for e in self.entries:
            w.writerow([format_change(e.effect1), format_change(e.effect2), _q(e.rate), e.term])
        return buf.getvalue()


def assemble_generator(m1, m2, eta, xi, bundle: FlowBundle | None = None, sites=None) -> CouplingTable:
    lattice = eta.lattice
    if sites is None:
        sites = sorted(bundle.halves and {k[0] for k in bundle.halves} or bundle.sites)
    sites = tuple(lattice.wrap(tuple(s)) for s in sites)
    bundle = bundle or build_bundle(m1, m2, eta, xi, sites)
    entries = []
    for x in sites:
        entries.extend(entries_at(x, bundle, lattice))
    return CouplingTable(eta, xi, sites, entries)


def couple(m1, m2, eta, xi, sites) -> CouplingTable:
    """Solve every flow problem the generator sites need and assemble their entries."""
    return assemble_generator(m1, m2, eta, xi, build_bundle(m1, m2, eta, xi, sites), sites)


def moves_involving(m1, m2, eta, xi, v) -> CouplingTable:
    """Every generator entry that moves site ``v``: joint moves from the terms at ``v``
    and its neighbours, completed by the single-process remainder.

    The table is meant to be validated with ``sites = [v, *neighbours]`` and
    ``touching = v``.
    """
    lattice = eta.lattice
    v = lattice.wrap(tuple(v))
    around = [v, *lattice.neighbors(v)]
    bundle = build_bundle(m1, m2, eta, xi, [v])
    joint = []
    for x in around:
        joint += [e for e in entries_at(x, bundle, lattice, coupled_only=True)
                  if v in _moved_sites(e)]
    table = CouplingTable(eta, xi, tuple(around), joint)
    return complete_with_remainder(table, m1, m2, around, touching=v)


def _moved_sites(e: CouplingEntry) -> set:
    out = set()
    for c in (e.effect1, e.effect2):
        if c is not None:
            out.update(c.touched)
    return out


# ---------------------------------------------------------------- validation


def _after(config, change):
    if change is None:
        return config
    return config.try_apply(change)


def owner_sites(side: int, change: Change, eta, xi) -> frozenset:
    """Generator sites whose terms can carry ``change`` for the given side."""
    lattice = eta.lattice
    if side == 1 or change.kind == "dep":
        return frozenset([change.site])
    updates = {s: xi[s] + d for s, d in change.deltas}
    if change.kind == "mig" and not all(eta[s] <= v for s, v in updates.items()):
        return frozenset([change.site])
    target = change.site if change.kind == "arr" else change.to
    return frozenset([target, *lattice.neighbors(target)])


@dataclass
class ValidationReport:
    checks: dict  # name -> list of problems (empty means pass)

    @property
    def ok(self) -> bool:
        return all(not v for v in self.checks.values())

    def lines(self):
        for name, problems in self.checks.items():
            status = "pass" if not problems else "FAIL"
            yield f"{name}: {status}" + ("" if not problems else f" ({problems[0]})")

    def __str__(self):
        return "\n".join(self.lines())


def _candidates(m, x, lattice):
    return enumerate_changes_at(x, lattice, m.k_max, m.l_max)


def validate_coupling(table: CouplingTable, m1, m2, eta=None, xi=None, sites=None,
                      touching=None) -> ValidationReport:
    """V1 positivity, V2 order, V3/V3' marginals, V4 total-rate bound.

    Marginals are checked for every change whose generator sites all lie in
    ``sites``; ``touching`` further restricts them to changes involving one site.
    """
    eta = eta if eta is not None else table.eta
    xi = xi if xi is not None else table.xi
    lattice = eta.lattice
    sites = tuple(lattice.wrap(tuple(s)) for s in (sites if sites is not None else table.sites))
    scope = set(sites)
    checks = {"V1 positivity": [], "V2 order": [], "V3 marginal-1": [], "V3' marginal-2": [],
              "V4 total rate": []}

    sums = ({}, {})
    for e in table.entries:
        if e.rate <= 0:
            checks["V1 positivity"].append(f"non-positive rate {e.rate} ({e.term})")
        if e.term not in TERMS:
            checks["V1 positivity"].append(f"unknown term {e.term}")
        a, b = _after(eta, e.effect1), _after(xi, e.effect2)
        if a is None or b is None:
            checks["V2 order"].append(f"inadmissible effect in {format_change(e.effect1)},"
                                      f"{format_change(e.effect2)}")
        elif not leq(a, b):
            checks["V2 order"].append(f"{format_change(e.effect1)},{format_change(e.effect2)}"
                                      f" -> {a} !<= {b}")
        if e.effect1 is not None:
            sums[0][e.effect1] = sums[0].get(e.effect1, ZERO) + e.rate
        if e.effect2 is not None:
            sums[1][e.effect2] = sums[1].get(e.effect2, ZERO) + e.rate

    bound = ZERO
    seen = set()
    for x in sites:
        for side, m, config in ((1, m1, eta), (2, m2, xi)):
            for c in _candidates(m, x, lattice):
                if not config.admits(c):
                    continue
                r = m.rate(c, config)
                bound += r
                seen.add((side, c))
    for side in (1, 2):
        for c in sums[side - 1]:
            seen.add((side, c))
    for side, c in sorted(seen, key=lambda t: (t[0], t[1].sort_key())):
        if touching is not None and lattice.wrap(tuple(touching)) not in c.touched:
            continue
        m, config = (m1, eta) if side == 1 else (m2, xi)
        if not config.admits(c):
            continue
        if not owner_sites(side, c, eta, xi) <= scope:
            continue
        want = m.rate(c, config)
        got = sums[side - 1].get(c, ZERO)
        name = "V3 marginal-1" if side == 1 else "V3' marginal-2"
        if want != got:
            checks[name].append(f"{format_change(c)}: entries sum to {got}, rate is {want}")
        elif want - got < 0:
            checks["V1 positivity"].append(f"negative residual for {format_change(c)}")
    total = table.total_rate()
    if total > bound:
        checks["V4 total rate"].append(f"total {total} exceeds {bound}")
    return ValidationReport(checks)


def complete_with_remainder(table: CouplingTable, m1, m2, sites, touching=None) -> CouplingTable:
    """Add uncoupled entries for whatever rate the coupled entries leave unused.

    The scope is the same as in :func:`validate_coupling`.
    """
    eta, xi = table.eta, table.xi
    lattice = eta.lattice
    scope = set(lattice.wrap(tuple(s)) for s in sites)
    used = ({}, {})
    for e in table.entries:
        if e.effect1 is not None:
            used[0][e.effect1] = used[0].get(e.effect1, ZERO) + e.rate
        if e.effect2 is not None:
            used[1][e.effect2] = used[1].get(e.effect2, ZERO) + e.rate
    extra = []
    done = set()
    for x in scope:
        for side, m, config in ((1, m1, eta), (2, m2, xi)):
            for c in _candidates(m, x, lattice):
                if (side, c) in done or not config.admits(c):
                    continue
                done.add((side, c))
                if touching is not None and lattice.wrap(tuple(touching)) not in c.touched:
                    continue
                if not owner_sites(side, c, eta, xi) <= scope:
                    continue
                rest = m.rate(c, config) - used[side - 1].get(c, ZERO)
                if rest > 0:
                    if side == 1:
                        term = "gen1" if c.kind == "arr" else "gen2"
                        extra.append(CouplingEntry(c, None, rest, term))
                    else:
                        term = "gen10" if c.kind == "dep" else "gen11"
                        extra.append(CouplingEntry(None, c, rest, term))
    return CouplingTable(eta, xi, tuple(sorted(scope)), list(table.entries) + extra)


# ---------------------------------------------------------------- serialization


def _q(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _site_str(site) -> str:
    return ";".join(str(c) for c in site)


def _site_parse(text) -> tuple:
    return tuple(int(c) for c in text.split(";"))


def format_change(c: Change | None) -> str:
    if c is None:
        return "-"
    if c.kind == "mig":
        return f"mig:{_site_str(c.site)}:{_site_str(c.to)}:{c.k}:{c.l}"
    return f"{c.kind}:{_site_str(c.site)}:{c.k}"


def parse_change(text: str, lattice: Lattice | None = None) -> Change | None:
    text = text.strip()
    if text == "-":
        return None
    parts = text.split(":")
    wrap = lattice.wrap if lattice is not None else tuple
    if parts[0] == "mig" and len(parts) == 5:
        return Change("mig", wrap(_site_parse(parts[1])), int(parts[3]), wrap(_site_parse(parts[2])),
                      int(parts[4]))
    if parts[0] in ("arr", "dep") and len(parts) == 3:
        return Change(parts[0], wrap(_site_parse(parts[1])), int(parts[2]))
    raise ValueError(f"cannot parse change descriptor {text!r}")


def read_csv(text: str, eta, xi, sites=()) -> CouplingTable:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["effect1", "effect2", "rate", "term"]:
        raise ValueError("coupling CSV must have header effect1,effect2,rate,term")
    lattice = eta.lattice
    entries = []
    for row in reader:
        entries.append(CouplingEntry(
            parse_change(row["effect1"], lattice),
            parse_change(row["effect2"], lattice),
            Fraction(row["rate"]),
            row["term"],
        ))
    return CouplingTable(eta, xi, tuple(sites), entries)


# ---------------------------------------------------------------- memoized local coupler


class LocalCoupler:
    """Generator entries per site on a torus, memoized by the surrounding window contents.

    For translation-invariant models the entries of site ``x`` are computed
    on Z^d around the origin from the two configurations within distance
    ``2 delta + rho`` of ``x`` and shifted back.  Identical windows therefore
    always yield identical flows, which keeps neighbouring sites consistent.
    Site problems are cached separately, keyed by their position in the
    local frame and the values within ``delta + rho`` of it, and half
    problems by the pair of site keys; both repeat far more often than
    whole windows.
    """

    def __init__(self, m1, m2, radius: int | None = None):
        self.m1, self.m2 = m1, m2
        delta = m1.lattice.delta
        self.site_radius = delta + max(m1.radius, m2.radius)
        self.radius = radius if radius is not None else delta + self.site_radius
        self.local = Lattice(m1.lattice.d, None, delta)
        self.origin = (0,) * m1.lattice.d
        self.window = box_window(self.local, self.origin, self.radius)
        self.cache = {}
        self.site_cache = {}
        self.half_cache = {}
        self.hits = 0
        self.misses = 0

    def entries(self, eta, xi, x) -> list:
        local, shift = self.local_entries(eta, xi, x)
        if shift is None:
            return local
        return [_shift_entry(e, eta.lattice, shift) for e in local]

    def local_entries(self, eta, xi, x):
        """``(entries, offset)``: entries in the local frame and the offset that moves them to ``x``.

        The offset is ``None`` when the entries are already in torus coordinates.
        """
        lattice = eta.lattice
        if not self.m1.translation_invariant:
            key = (x, eta.values, xi.values)
            local = self._lookup(key, lambda: entries_at(
                x, build_bundle(self.m1, self.m2, eta, xi, [x]), lattice))
            return local, None
        offs = self.window.sites
        ev = tuple(eta[lattice.shift(x, o)] for o in offs)
        xv = tuple(xi[lattice.shift(x, o)] for o in offs)

        def compute():
            le = LocalConfiguration._trusted(self.window, ev, eta.N)
            lx = LocalConfiguration._trusted(self.window, xv, xi.N)
            keys = {}

            def site(y):
                box = box_window(self.local, y, self.site_radius)
                se, sx = le.restrict(box), lx.restrict(box)
                key = (y, se.values, sx.values)
                keys[y] = key
                sol = self.site_cache.get(key)
                if sol is None:
                    sol = self.site_cache[key] = solve_px(self.m1, self.m2, se, sx, y)
                return sol

            def half(a, b, fa, fb):
                key = (keys[a], keys[b])
                h = self.half_cache.get(key)
                if h is None:
                    h = self.half_cache[key] = solve_p2(fa, fb, le, lx)
                return h

            bundle = build_bundle(self.m1, self.m2, le, lx, [self.origin], site, half)
            return entries_at(self.origin, bundle, self.local)

        return self._lookup((ev, xv), compute), x

    def _lookup(self, key, compute):
        """Cached value or exception; failures are remembered like results."""
        hit = self.cache.get(key)
        if hit is None:
            self.misses += 1
            try:
                hit = compute()
            except (Infeasible, NegativeResidual) as exc:
                hit = exc
            self.cache[key] = hit
        else:
            self.hits += 1
        if isinstance(hit, Exception):
            raise hit
        return hit


def _shift_entry(e: CouplingEntry, lattice, x) -> CouplingEntry:
    return CouplingEntry(
        None if e.effect1 is None else e.effect1.moved(lattice, x),
        None if e.effect2 is None else e.effect2.moved(lattice, x),
        e.rate,
        e.term,
        x,
    )


def audit_bundle(bundle: FlowBundle) -> list:
    """Bound and conservation audit of every flow in a bundle."""
    problems = []
    for x, s in bundle.sites.items():
        problems += [f"f^{x}: {p}" for p in audit(s.network, s.flow)]
    for key, h in bundle.halves.items():
        problems += [f"f2^{key}: {p}" for p in audit(h.network, h.flow)]
    return problems
