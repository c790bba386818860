"""Worked windows: published flows re-entered as data, audited against this build.

Each data file fixes two models, a pair ``eta <= xi`` on the five sites
``v-2 .. v+2`` and, for the three site problems and the two pair problems
around ``v``, the bound tables and one solution.  Nodes are written as the
configuration the change produces; rates are small arithmetic expressions
in the model's symbols.
"""

from __future__ import annotations

import ast
import operator
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import yaml

from . import coupling as cp
from .changesets import ChangeClassification
from .core import ZERO, LocalConfiguration
from .netflow import audit
from .models import nonconservative_example_rates, two_species_rates

EXAMPLES = {"two-species": "two_species_window.yaml", "nonconservative": "nonconservative_window.yaml"}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def evaluate(expr, values: dict) -> Fraction | None:
    """Exact value of a rate expression such as ``"2*(beta-gamma1)"``; ``"inf"`` gives ``None``."""
    text = str(expr).strip()
    if text == "inf":
        return None

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return Fraction(node.value)
        if isinstance(node, ast.Name):
            return Fraction(values[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -walk(node.operand)
        raise ValueError(f"unsupported expression {text!r}")

    return walk(ast.parse(text, mode="eval"))


def load(example: str) -> dict:
    name = EXAMPLES[example]
    return yaml.safe_load(resources.files("ipsorder.data").joinpath(name).read_text())


def models_for(data: dict, values: dict):
    v = {k: Fraction(x) for k, x in values.items()}
    if data["family"] == "two-species":
        m = two_species_rates(*(v[s] for s in data["symbols"]))
        return m, m
    return nonconservative_example_rates(v["mu1"], v["mu2"], v["gamma1"], v["gamma2"],
                                         v["alpha1"], v["alpha2"], v["beta"], N=data["N"])


def _config(text, N):
    return LocalConfiguration.line([int(t) for t in text.split()], N)


def _key(config) -> str:
    return " ".join(map(str, config.values))


class NodeNames:
    """Two-way map between nodes and the configurations they produce, one map per side."""

    def __init__(self, classifications):
        self.by_name = ({}, {})
        self.name = {}
        for cls in classifications:
            for node, info in list(cls.info.items()) + list(cls.admissible2.items()):
                text = _key(cls.result(node))
                table = self.by_name[node.side - 1]
                if table.get(text, node) != node:
                    raise ValueError(f"two changes of side {node.side} produce {text}")
                table[text] = node
                self.name[node] = text

    def node(self, side, text):
        return self.by_name[side - 1][" ".join(str(text).split())]

    def label(self, n):
        return n if n in ("O", "Z") else self.name[n]


def _endpoints(names: NodeNames, o, d):
    if o == "O":
        return "O", names.node(2, d)
    if d == "Z":
        return names.node(1, o), "Z"
    return names.node(2, o), names.node(1, d)


def _rows_to_arcs(names, rows, values):
    out = {}
    for row in rows:
        arc = _endpoints(names, row[0], row[1])
        out[arc] = tuple(evaluate(r, values) for r in row[2:])
    return out


def compare_bounds(network, names, rows, values, terminal_only=False) -> list:
    """Differences between a built network and a bound table (arc sets and both bounds)."""
    listed = {a: (lo, up) for a, (lo, up) in _rows_to_arcs(names, rows, values).items()}
    built = dict(network.arcs)
    if terminal_only:
        built = {a: b for a, b in built.items() if a[0] == "O" or a[1] == "Z"}
    problems = []
    for arc in sorted(set(listed) | set(built), key=lambda a: tuple(map(str, map(names.label, a)))):
        shown = f"{names.label(arc[0])} -> {names.label(arc[1])}"
        if arc not in built:
            problems.append(f"{shown}: listed but not built")
        elif arc not in listed:
            problems.append(f"{shown}: built but not listed")
        elif built[arc] != listed[arc]:
            problems.append(f"{shown}: built {built[arc]}, listed {listed[arc]}")
    return problems


@dataclass
class Check:
    name: str
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


@dataclass
class WorkedResult:
    example: str
    values: dict
    checks: list
    own_tables: dict
    fixture_tables: dict
    coupled_fixture: list
    coupled_built: list
    listed: object = None  # the published joint moves as a coupling table
    own_table: object = None  # this build's generator at v

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def check(self, name) -> Check:
        return next(c for c in self.checks if c.name == name)


def _flow_from_rows(network, names, rows, values, listed_terminals):
    arcs = _rows_to_arcs(names, rows, values)
    inner = {a: v[0] for a, v in arcs.items() if a[0] != "O" and a[1] != "Z"}
    flow = cp.recompute_terminals(network, inner)
    for a, v in inner.items():
        if a not in network.arcs:
            flow[a] = v
    problems = []
    if listed_terminals:
        for a, v in arcs.items():
            if (a[0] == "O" or a[1] == "Z") and flow.get(a, ZERO) != v[0]:
                problems.append(f"{names.label(a[0])} -> {names.label(a[1])}: listed {v[0]},"
                                f" row/column sum {flow.get(a, ZERO)}")
    return flow, problems


def _half_from_pair(sx, sy, pair_flow):
    net, groups = cp.p2_network(sx, sy)
    inner = {a: v for a, v in pair_flow.items() if a in net.arcs and a[0] != "O" and a[1] != "Z"}
    return cp.HalfSolution(sx.x, sy.x, net, cp.recompute_terminals(net, inner), groups)


def _entry_key(names, e: cp.CouplingEntry, eta, xi, with_term):
    a = _key(eta.try_apply(e.effect1)) if e.effect1 is not None else _key(eta)
    b = _key(xi.try_apply(e.effect2)) if e.effect2 is not None else _key(xi)
    return (a, b, e.rate, e.term) if with_term else (a, b, e.rate)


def _table_text(network, flow, names):
    lines = []
    for (u, v), (lo, up) in network.arcs.items():
        f = flow.get((u, v), ZERO) if flow is not None else ZERO
        up_s = "inf" if up is None else str(up)
        lines.append(f"{names.label(u):>11} -> {names.label(v):<11} [{lo}, {up_s}]  {f}")
    return lines


SITES = ((-1,), (0,), (1,))
PAIRS = (((-1,), (0,)), ((0,), (1,)))


def run(example: str, values: dict | None = None, data: dict | None = None) -> WorkedResult:
    """Audit the published flows of one worked window and rebuild everything from scratch."""
    data = data or load(example)
    values = {k: Fraction(v) for k, v in (values or data["values"]).items()}
    m1, m2 = models_for(data, values)
    N = data["N"]
    eta, xi = _config(data["eta"], N), _config(data["xi"], N)
    lattice = eta.lattice
    full = data["inner_arcs_listed"]
    cls = {x: ChangeClassification(m1, m2, eta, xi, x) for x in SITES}
    names = NodeNames(cls.values())
    checks = []
    own_tables, fixture_tables = {}, {}

    # site problems: bound tables against this build's networks, then the published flows
    fixture_sites = {}
    for x in SITES:
        net = cp.px_network(cls[x])
        rows = data["site_bounds"][x[0]]
        checks.append(Check(f"site {x[0]:+d} bounds", compare_bounds(net, names, rows, values, not full)))
        flow, extra = _flow_from_rows(net, names, data["site_flows"][x[0]], values, full)
        sol = cp.SiteSolution(x, cls[x], net, flow)
        fixture_sites[x] = sol
        checks.append(Check(f"site {x[0]:+d} published flow audit", audit(net, flow) + extra))
        checks.append(Check(f"site {x[0]:+d} published flow zero pattern",
                            [str(v) for v in cp.table2_violations(sol) + cp.forced_zero_violations(sol)]))
        fixture_tables[f"site {x[0]:+d}"] = _table_text(net, flow, names)

    # pair problems, built from the published site flows
    halves = {}
    for x, y in PAIRS:
        tag = f"{x[0]} {y[0]}"
        net, roles = cp.pxy_network(fixture_sites[x], fixture_sites[y])
        checks.append(Check(f"pair {tag} bounds",
                            compare_bounds(net, names, data["pair_bounds"][tag], values, not full)))
        flow, extra = _flow_from_rows(net, names, data["pair_flows"][tag], values, full)
        pair = cp.PairSolution(x, y, net, flow, roles, {})
        checks.append(Check(f"pair {tag} published flow audit", audit(net, flow) + extra))
        pattern = [str(v) for v in cp.table5_violations(pair)]
        pattern += [f"inherited bound at {a}" for a in cp.inherited_bound_violations(pair, fixture_sites[x])]
        pattern += [f"inherited bound at {a}" for a in
                    cp.inherited_bound_violations(_mirror(pair), fixture_sites[y])]
        checks.append(Check(f"pair {tag} published flow zero pattern", pattern))
        fixture_tables[f"pair {tag}"] = _table_text(net, flow, names)
        halves[(x, y)] = _half_from_pair(fixture_sites[x], fixture_sites[y], flow)
        halves[(y, x)] = _half_from_pair(fixture_sites[y], fixture_sites[x], flow)

    bundle = cp.FlowBundle(fixture_sites, halves)
    checks.append(Check("published half flows audit", cp.audit_bundle(bundle)))
    v = (0,)
    table = cp.assemble_generator(m1, m2, eta, xi, bundle, [v])
    checks.append(Check("generator at v from published flows: V1-V4",
                        _report_problems(cp.validate_coupling(table, m1, m2))))

    coupled = []
    for x in SITES:
        coupled += [e for e in cp.entries_at(x, bundle, lattice, coupled_only=True) if v in _touched(e)]
    with_term = any(len(r) > 3 for r in data["coupled"])
    got = Counter(_entry_key(names, e, eta, xi, with_term) for e in coupled)
    want = Counter()
    listed_entries = []
    for row in data["coupled"]:
        a_text, b_text, rate = " ".join(row[0].split()), " ".join(row[1].split()), evaluate(row[2], values)
        want[(a_text, b_text, rate, row[3]) if with_term else (a_text, b_text, rate)] += 1
        a, b = names.node(1, a_text).change, names.node(2, b_text).change
        listed_entries.append(cp.CouplingEntry(a, b, rate, row[3] if len(row) > 3 else _term_of(coupled, a, b)))
    diff = [f"missing {k}" for k in (want - got)] + [f"extra {k}" for k in (got - want)]
    checks.append(Check("joint moves involving v from published flows", diff))

    listed = cp.CouplingTable(eta, xi, SITES, listed_entries)
    completed = cp.complete_with_remainder(listed, m1, m2, SITES, touching=v)
    checks.append(Check("listed joint moves plus remainder: V1-V4",
                        _report_problems(cp.validate_coupling(completed, m1, m2, sites=SITES, touching=v))))

    # this build, bare window, generator site v
    own = cp.build_bundle(m1, m2, eta, xi, [v])
    own_problems = cp.audit_bundle(own)
    for x, s in own.sites.items():
        own_problems += [f"zero pattern at {x}: {p}" for p in cp.table2_violations(s)]
        own_problems += [f"forced zero at {x}: {p}" for p in cp.forced_zero_violations(s)]
        own_tables[f"site {x[0]:+d}"] = _table_text(s.network, s.flow, names)
    for key, h in own.halves.items():
        own_problems += [f"good-to-good flow in half {key}: {p}" for p in cp.half_zero_violations(h)]
    for x, y in PAIRS:
        pair = cp.solve_pxy(m1, m2, eta, xi, x, y, own.sites[x], own.sites[y])
        own_problems += audit(pair.network, pair.flow)
        own_problems += [str(p) for p in cp.table5_violations(pair)]
        own_tables[f"pair {x[0]} {y[0]}"] = _table_text(pair.network, pair.flow, names)
    checks.append(Check("own flows: audits and zero patterns", own_problems))
    own_table = cp.moves_involving(m1, m2, eta, xi, v)
    checks.append(Check("own moves involving v plus remainder: V1-V4", _report_problems(
        cp.validate_coupling(own_table, m1, m2, sites=SITES, touching=v))))

    # this build on a padded window, generator sites v-1, v, v+1
    pe, px = (LocalConfiguration.line([int(t) for t in data["padded"][k].split()], N) for k in ("eta", "xi"))
    padded = cp.build_bundle(m1, m2, pe, px, SITES)
    pad_table = cp.assemble_generator(m1, m2, pe, px, padded, SITES)
    pad_problems = cp.audit_bundle(padded)
    for x, s in padded.sites.items():
        pad_problems += [f"zero pattern at {x}: {p}" for p in cp.table2_violations(s)]
    pad_problems += _report_problems(cp.validate_coupling(pad_table, m1, m2))
    checks.append(Check("own generator at v-1, v, v+1 on the padded window: V1-V4", pad_problems))

    built = [e for x in SITES for e in cp.entries_at(x, own, lattice, coupled_only=True)
             if v in _touched(e)]
    return WorkedResult(example, values, checks, own_tables, fixture_tables,
                        sorted(want.elements(), key=str), sorted(
                            (_entry_key(names, e, eta, xi, True) for e in built), key=str),
                        listed, own_table)


def _touched(e):
    return set((e.effect1.touched if e.effect1 else ()) + (e.effect2.touched if e.effect2 else ()))


def _mirror(pair: cp.PairSolution) -> cp.PairSolution:
    swap = {"G1-x": "G1-y", "G1-y": "G1-x", "B1-xy": "B1+xy", "B1+xy": "B1-xy",
            "G2+x": "G2+y", "G2+y": "G2+x", "B2-xy": "B2+xy", "B2+xy": "B2-xy"}
    return cp.PairSolution(pair.y, pair.x, pair.network, pair.flow,
                           {n: swap[r] for n, r in pair.roles.items()}, pair.halves)


def _term_of(entries, a, b):
    for e in entries:
        if e.effect1 == a and e.effect2 == b:
            return e.term
    return "gen3"


def _report_problems(report: cp.ValidationReport) -> list:
    return [f"{name}: {p}" for name, ps in report.checks.items() for p in ps]


def perturbed(example: str) -> dict:
    """A copy of the data with the first listed flow value of site ``v-1`` raised by 1/2."""
    data = load(example)
    row = data["site_flows"][-1][0]
    for i, r in enumerate(data["site_flows"][-1]):
        if r[0] != "O" and r[1] != "Z":
            row = r
            break
    row[2] = f"({row[2]})+1/2"
    return data


def report_lines(result: WorkedResult):
    yield f"worked window: {result.example}"
    yield "values: " + ", ".join(f"{k}={v}" for k, v in result.values.items())
    for c in result.checks:
        yield f"  {'pass' if c.ok else 'FAIL'}  {c.name}"
        for p in c.problems[:5]:
            yield f"        {p}"
    yield "joint moves involving v, published vs this build:"
    width = max([len(str(r)) for r in result.coupled_fixture] + [10])
    rows = max(len(result.coupled_fixture), len(result.coupled_built))
    for i in range(rows):
        left = str(_fmt_row(result.coupled_fixture[i])) if i < len(result.coupled_fixture) else ""
        right = str(_fmt_row(result.coupled_built[i])) if i < len(result.coupled_built) else ""
        yield f"  {left:<{width}}  |  {right}"
    for name in result.own_tables:
        yield f"problem {name}: published | this build"
        left = result.fixture_tables.get(name, [])
        right = result.own_tables[name]
        for i in range(max(len(left), len(right))):
            lt = left[i] if i < len(left) else ""
            rt = right[i] if i < len(right) else ""
            yield f"  {lt:<48} | {rt}"


def _fmt_row(row):
    parts = [f"({row[0]})", f"({row[1]})", str(row[2])]
    if len(row) > 3:
        parts.append(row[3])
    return " ".join(parts)
