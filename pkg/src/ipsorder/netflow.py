"""Feasible flows with lower and upper arc bounds, in exact rational arithmetic.

A network has a source ``O`` without in-arcs and a sink ``Z`` without
out-arcs; any amount may leave ``O``.  Feasibility is decided by the usual
reduction to a maximum-flow problem: add a return arc ``Z -> O``, move the
lower bounds into node excesses, connect a super source to the nodes with
surplus and the nodes with deficit to a super sink, and run
Edmonds-Karp.  When the super arcs cannot all be saturated, the nodes
reachable from the super source in the residual graph give a cut ``X``
with ``l(X^c, X) > u(X, X^c)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import lcm

from .errors import Infeasible, MalformedNetwork

ZERO = Fraction(0)
INF = None


def _fmt(q) -> str:
    if q is None:
        return "inf"
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


class FlowNetwork:
    """Nodes kept in insertion order; at most one arc per ordered node pair."""

    def __init__(self, source="O", sink="Z"):
        self.source = source
        self.sink = sink
        self.nodes = []
        self._index = {}
        self.arcs = {}
        self.add_node(source)
        self.add_node(sink)

    def add_node(self, node):
        if node not in self._index:
            self._index[node] = len(self.nodes)
            self.nodes.append(node)
        return node

    def add_arc(self, origin, destination, lower=0, upper=INF):
        if type(lower) is not Fraction:
            lower = Fraction(lower)
        if upper is not None and type(upper) is not Fraction:
            upper = Fraction(upper)
        if origin == destination:
            raise MalformedNetwork("self-loops are not allowed")
        if destination == self.source:
            raise MalformedNetwork("the source cannot have in-arcs")
        if origin == self.sink:
            raise MalformedNetwork("the sink cannot have out-arcs")
        if lower < 0 or (upper is not None and lower > upper):
            raise MalformedNetwork(f"bad bounds [{lower}, {upper}] on {origin}->{destination}")
        if (origin, destination) in self.arcs:
            raise MalformedNetwork(f"duplicate arc {origin}->{destination}")
        self.add_node(origin)
        self.add_node(destination)
        self.arcs[(origin, destination)] = (lower, upper)

    def lower(self, arc):
        return self.arcs[arc][0]

    def upper(self, arc):
        return self.arcs[arc][1]

    def position(self, node) -> int:
        return self._index[node]

    def inner_nodes(self):
        return [n for n in self.nodes if n not in (self.source, self.sink)]

    def cut_sums(self, inside):
        """``(l(X^c, X), u(X, X^c))`` for ``X = inside``; the upper sum is ``None`` if infinite."""
        inside = set(inside)
        low_in = ZERO
        up_out = ZERO
        for (u, v), (lo, up) in self.arcs.items():
            if u not in inside and v in inside:
                low_in += lo
            elif u in inside and v not in inside:
                if up is None:
                    up_out = None
                elif up_out is not None:
                    up_out += up
        return low_in, up_out

    def validate(self):
        for (u, v), (lo, up) in self.arcs.items():
            if v == self.source or u == self.sink:
                raise MalformedNetwork("terminal arc orientation violated")
            if lo < 0 or (up is not None and lo > up):
                raise MalformedNetwork(f"bad bounds on {u}->{v}")


class Flow(dict):
    """Arc -> amount.  Arcs not listed carry zero."""

    def __init__(self, *args, network=None, **kw):
        super().__init__(*args, **kw)
        self.network = network

    def get_flow(self, origin, destination) -> Fraction:
        return self.get((origin, destination), ZERO)

    def value(self, source="O") -> Fraction:
        return sum((f for (u, _), f in self.items() if u == source), ZERO)

    def positive(self):
        return {a: f for a, f in self.items() if f != 0}


@dataclass
class CutCertificate:
    """A node set ``X`` (``inside``) with ``l(X^c, X) > u(X, X^c)``; O and Z on the same side."""

    inside: frozenset
    outside: frozenset
    lower_in: Fraction
    upper_out: Fraction

    def replay(self, network: FlowNetwork) -> bool:
        low, up = network.cut_sums(self.inside)
        return low == self.lower_in and up == self.upper_out and up is not None and low > up


def infinity_cap(network: FlowNetwork) -> Fraction:
    """A finite stand-in for +inf that no feasible flow needs to exceed on any arc."""
    total = Fraction(1)
    for lo, up in network.arcs.values():
        total += lo
        if up is not None:
            total += up
    return total


class _Residual:
    def __init__(self, n):
        self.adj = [[] for _ in range(n)]

    def add(self, u, v, cap):
        fwd = [v, cap, None]
        back = [u, 0, fwd]
        fwd[2] = back
        self.adj[u].append(fwd)
        self.adj[v].append(back)
        return fwd

    def sort(self):
        for edges in self.adj:
            edges.sort(key=lambda e: e[0])

    def max_flow(self, s, t) -> int:
        total = 0
        n = len(self.adj)
        while True:
            parent = [None] * n
            parent[s] = s
            queue = deque([s])
            while queue and parent[t] is None:
                u = queue.popleft()
                for e in self.adj[u]:
                    if e[1] > 0 and parent[e[0]] is None:
                        parent[e[0]] = e
                        queue.append(e[0])
            if parent[t] is None:
                return total
            push = None
            v = t
            while v != s:
                e = parent[v]
                push = e[1] if push is None else min(push, e[1])
                v = e[2][0]
            v = t
            while v != s:
                e = parent[v]
                e[1] -= push
                e[2][1] += push
                v = e[2][0]
            total += push

    def reachable(self, s):
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.adj[u]:
                if e[1] > 0 and e[0] not in seen:
                    seen.add(e[0])
                    queue.append(e[0])
        return seen


def _common_denominator(network: FlowNetwork, cap: Fraction | None) -> int:
    scale = 1 if cap is None else cap.denominator
    for lo, up in network.arcs.values():
        scale = lcm(scale, lo.denominator)
        if up is not None:
            scale = lcm(scale, up.denominator)
    return scale


def _scaled(q: Fraction, scale: int) -> int:
    return q.numerator * (scale // q.denominator)


def solve_feasible(network: FlowNetwork, cap: Fraction | None = None):
    """Return a :class:`Flow` meeting every bound, or a :class:`CutCertificate`.

    Bounds are scaled to integers by their common denominator before the
    augmenting-path search; the result is scaled back, so nothing is rounded.
    """
    network.validate()
    cap = None if cap is None else Fraction(cap)
    scale = _common_denominator(network, cap)
    if cap is None:
        # same stand-in for +inf as infinity_cap, computed on the scaled integers
        big = scale
        for lo, up in network.arcs.values():
            big += _scaled(lo, scale)
            if up is not None:
                big += _scaled(up, scale)
    else:
        big = _scaled(cap, scale)
    nodes = network.nodes
    idx = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    s_star, t_star = n, n + 1
    res = _Residual(n + 2)
    excess = [0] * n
    handles = {}
    widths = {}
    for (u, v), (lo, up) in network.arcs.items():
        lo_i = _scaled(lo, scale)
        width = (big if up is None else _scaled(up, scale)) - lo_i
        widths[(u, v)] = (lo_i, width)
        handles[(u, v)] = res.add(idx[u], idx[v], width)
        excess[idx[v]] += lo_i
        excess[idx[u]] -= lo_i
    o, z = idx[network.source], idx[network.sink]
    res.add(z, o, big)
    need = 0
    for i, ex in enumerate(excess):
        if ex > 0:
            res.add(s_star, i, ex)
            need += ex
        elif ex < 0:
            res.add(i, t_star, -ex)
    res.sort()
    got = res.max_flow(s_star, t_star)
    if got == need:
        flow = Flow(network=network)
        for arc, edge in handles.items():
            lo_i, width = widths[arc]
            flow[arc] = Fraction(lo_i + width - edge[1], scale)
        return flow
    reach = res.reachable(s_star)
    inside = {nodes[i] for i in reach if i < n}
    if network.source in inside:
        inside.add(network.sink)
    low, up = network.cut_sums(inside)
    if up is None or low <= up:
        raise AssertionError("residual cut does not certify infeasibility")
    outside = frozenset(nodes) - frozenset(inside)
    return CutCertificate(frozenset(inside), outside, low, up)


def require_flow(network: FlowNetwork) -> Flow:
    out = solve_feasible(network)
    if isinstance(out, CutCertificate):
        raise Infeasible("flow problem is infeasible", out)
    return out


def audit(network: FlowNetwork, flow: dict) -> list:
    """Independent check of bounds and conservation; returns a list of problems."""
    problems = []
    for arc in flow:
        if arc not in network.arcs and flow[arc] != 0:
            problems.append(f"flow on non-arc {arc}")
    balance = {node: ZERO for node in network.nodes}
    for arc, (lo, up) in network.arcs.items():
        f = Fraction(flow.get(arc, ZERO))
        if f < lo:
            problems.append(f"{arc}: flow {f} below lower bound {lo}")
        if up is not None and f > up:
            problems.append(f"{arc}: flow {f} above upper bound {up}")
        balance[arc[0]] -= f
        balance[arc[1]] += f
    for node, b in balance.items():
        if node in (network.source, network.sink):
            continue
        if b != 0:
            problems.append(f"conservation fails at {node}: net inflow {b}")
    if balance[network.source] + balance[network.sink] != 0:
        problems.append("source outflow differs from sink inflow")
    return problems


def violating_partition(network: FlowNetwork):
    """Exhaustive search for ``X`` (O, Z on one side) with ``l(X^c, X) > u(X, X^c)``.

    Exponential in the number of inner nodes; an oracle for small networks.
    """
    inner = network.inner_nodes()
    terminals = (network.source, network.sink)
    for size in range(len(inner) + 1):
        for subset in combinations(inner, size):
            for with_terminals in (False, True):
                inside = set(subset) | (set(terminals) if with_terminals else set())
                low, up = network.cut_sums(inside)
                if up is not None and low > up:
                    return frozenset(inside)
    return None


def transport_initial(supplies, demands, adjacency=None, dummy="slack") -> Flow:
    """Northwest-corner style greedy assignment for a transportation problem.

    ``supplies`` and ``demands`` are sequences of ``(name, amount)``;
    ``adjacency`` is a set of allowed ``(supply, demand)`` pairs (``None``
    allows all).  Demands are served in order, each from the earliest
    supplies with capacity left; leftover supply goes to the dummy demand.
    The returned flow lives on the matching network O -> supply -> demand -> Z.
    """
    supplies = [(s, Fraction(a)) for s, a in supplies]
    demands = [(d, Fraction(a)) for d, a in demands]
    left = {s: a for s, a in supplies}
    net = FlowNetwork()
    for s, a in supplies:
        net.add_arc("O", ("supply", s), 0, a)
    for d, a in demands:
        net.add_arc(("demand", d), "Z", a, a)
    net.add_arc(("demand", dummy), "Z", 0, INF)
    for s, _ in supplies:
        for d, _ in demands:
            if adjacency is None or (s, d) in adjacency:
                net.add_arc(("supply", s), ("demand", d), 0, INF)
        net.add_arc(("supply", s), ("demand", dummy), 0, INF)
    flow = Flow({arc: ZERO for arc in net.arcs}, network=net)
    for d, need in demands:
        for s, _ in supplies:
            if need == 0:
                break
            if adjacency is not None and (s, d) not in adjacency:
                continue
            take = min(need, left[s])
            if take > 0:
                flow[(("supply", s), ("demand", d))] += take
                left[s] -= take
                need -= take
        if need > 0:
            raise Infeasible(f"greedy scan cannot serve demand {d!r}")
        flow[(("demand", d), "Z")] = dict(demands)[d]
    for s, a in supplies:
        flow[(("supply", s), ("demand", dummy))] = left[s]
        flow[("O", ("supply", s))] = a
    flow[(("demand", dummy), "Z")] = sum(left.values(), ZERO)
    return flow


def dump(network: FlowNetwork, flow: dict | None = None) -> str:
    """Plain-text arc list ``origin destination lower upper flow``."""
    lines = []
    for (u, v), (lo, up) in network.arcs.items():
        f = ZERO if flow is None else flow.get((u, v), ZERO)
        lines.append(f"{_label(u)} {_label(v)} {_fmt(lo)} {_fmt(up)} {_fmt(f)}")
    return "\n".join(lines) + "\n"


def _label(node) -> str:
    return str(node).replace(" ", "")
