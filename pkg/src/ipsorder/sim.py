"""Gillespie simulation of one process, or of two processes through the coupling, on a torus.

Rates are kept exact per site and converted to floats only for sampling.
After an event only the sites whose rates can have changed are refreshed:
for a single process those within ``delta + rho`` of the touched sites, for
the coupled process those within ``2 delta + rho``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import ZERO, Lattice, LocalConfiguration, changes_owned_by, leq, make_window, translate_config
from .coupling import CouplingEntry, LocalCoupler, _shift_entry, build_bundle, entries_at, format_change
from .errors import Infeasible, NegativeResidual, OrderViolation, WindowMismatch, WindowTooSmall

INDEPENDENT = ("ind1", "ind2")


def torus_config(lattice: Lattice, values, N: int) -> LocalConfiguration:
    window = make_window(lattice, lattice.all_sites())
    vals = np.asarray(values, dtype=int).reshape(-1)
    return LocalConfiguration(window, [int(v) for v in vals], N)


def _check_torus(lattice: Lattice, reach: int):
    """Windows of radius ``reach`` must not wrap onto themselves."""
    if lattice.L is None:
        raise ValueError("simulation needs a finite torus")
    if lattice.L <= 2 * reach:
        raise WindowTooSmall(f"torus side {lattice.L} must exceed {2 * reach}")


def _site_text(site) -> str:
    return ";".join(str(c) for c in site)


@dataclass
class Trajectory:
    """Event log, final state and time-weighted occupation averages."""

    T: float
    seed: int
    log: list = field(default_factory=list)  # (t, sites, effect1, effect2, term)
    final: tuple = ()
    occupation: np.ndarray | None = None  # shape (components, sites)
    counts: dict = field(default_factory=dict)
    end_time: float = 0.0
    violations: int = 0
    independent_steps: int = 0
    infeasible_states: int = 0

    @property
    def events(self) -> int:
        return len(self.log)

    def lines(self):
        for t, sites, e1, e2, term in self.log:
            yield f"{t!r},{'|'.join(map(_site_text, sites))},{format_change(e1)},{format_change(e2)},{term}"

    def export(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def summary(self) -> str:
        out = io.StringIO()
        out.write(f"horizon: {self.T}\nseed: {self.seed}\nevents: {self.events}\n")
        out.write(f"last event time: {self.end_time!r}\n")
        out.write(f"order violations: {self.violations}\n")
        out.write(f"states without a coupling: {self.infeasible_states}\n")
        out.write(f"events drawn from independent evolution: {self.independent_steps}\n")
        for term in sorted(self.counts):
            out.write(f"count {term}: {self.counts[term]}\n")
        for i, row in enumerate(self.occupation):
            out.write(f"mean occupation {i + 1}: " + " ".join(f"{v:.6f}" for v in row) + "\n")
        return out.getvalue()


class _RateTable:
    """Per-site event lists with exact totals and a float copy for sampling."""

    def __init__(self, sites):
        self.sites = sites
        self.index = {s: i for i, s in enumerate(sites)}
        self.events = [[] for _ in sites]
        self.exact = [ZERO] * len(sites)
        self.weights = np.zeros(len(sites))

    def set(self, site, events):
        i = self.index[site]
        self.events[i] = events
        total = sum((e[1] for e in events), ZERO)
        self.exact[i] = total
        self.weights[i] = float(total)

    def total(self) -> Fraction:
        return sum(self.exact, ZERO)

    def draw(self, rng):
        """Pick an event proportionally to its rate; returns ``(site, event)``."""
        w = self.weights
        total = w.sum()
        u = rng.random() * total
        cum = np.cumsum(w)
        i = int(np.searchsorted(cum, u, side="right"))
        i = min(i, len(w) - 1)
        while w[i] == 0:
            i -= 1
        u -= cum[i] - w[i]
        evs = self.events[i]
        acc = 0.0
        for ev in evs:
            acc += float(ev[1])
            if u < acc:
                return self.sites[i], ev
        return self.sites[i], evs[-1]


def _rng(seed):
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.Philox(int(seed)))


def _affected(lattice, touched, radius):
    out = []
    for s in lattice.all_sites():
        if any(lattice.distance(s, t) <= radius for t in touched):
            out.append(s)
    return out


def _single_events(m, config, x):
    evs = []
    for c in changes_owned_by(x, config.lattice, m.k_max, m.l_max):
        r = m.rate(c, config)
        if r > 0:
            evs.append((c, r))
    return evs


class _SingleRates:
    """Rate-positive changes owned by a site, memoized by the window of radius ``delta + rho``."""

    def __init__(self, m):
        self.m = m
        self.radius = m.lattice.delta + m.radius
        self.cache = {}

    def __call__(self, config, x):
        if not self.m.translation_invariant:
            return _single_events(self.m, config, x)
        local = translate_config(config, x, self.radius)
        evs = self.cache.get(local.values)
        if evs is None:
            evs = self.cache[local.values] = _single_events(self.m, local, (0,) * len(x))
        lattice = config.lattice
        return [(c.moved(lattice, x), r) for c, r in evs]


def simulate_single(m, init: LocalConfiguration, T, seed) -> Trajectory:
    """Exponential-clock simulation of one process up to time ``T``."""
    rng = _rng(seed)
    lattice = init.lattice
    _check_torus(lattice, lattice.delta + m.radius)
    sites = lattice.all_sites()
    config = init
    table = _RateTable(sites)
    rates = _SingleRates(m)
    for x in sites:
        table.set(x, rates(config, x))
    radius = lattice.delta + m.radius
    traj = Trajectory(float(T), seed)
    occ = np.zeros((1, len(sites)))
    t = 0.0
    while True:
        total = table.weights.sum()
        if total <= 0:
            break
        dt = rng.exponential(1.0 / total)
        if t + dt > T:
            break
        occ[0] += dt * np.asarray(config.values, dtype=float)
        t += dt
        x, (change, _) = table.draw(rng)
        config = config.try_apply(change)
        traj.log.append((t, change.touched, change, None, "single"))
        traj.counts["single"] = traj.counts.get("single", 0) + 1
        for s in _affected(lattice, change.touched, radius):
            table.set(s, rates(config, s))
    occ[0] += (T - t) * np.asarray(config.values, dtype=float)
    traj.occupation = occ / T
    traj.final = (config,)
    traj.end_time = t
    return traj


class CoupledSimulator:
    """State of a coupled run: both configurations and the generator entries of every site.

    ``on_infeasible`` decides what happens when no coupling exists at the
    current pair: ``"raise"`` stops with :class:`Infeasible`; ``"independent"``
    lets the two processes move independently until a coupling exists again.
    Order violations raise :class:`OrderViolation` unless ``count_violations``.
    """

    def __init__(self, m1, m2, init1, init2, coupler: LocalCoupler | None = None,
                 on_infeasible="raise", count_violations=False):
        if init1.window != init2.window:
            raise WindowMismatch("initial configurations live on different windows")
        if not leq(init1, init2):
            raise ValueError("the initial pair must be ordered")
        if on_infeasible not in ("raise", "independent"):
            raise ValueError("on_infeasible must be 'raise' or 'independent'")
        self.m1, self.m2 = m1, m2
        self.eta, self.xi = init1, init2
        self.lattice = init1.lattice
        _check_torus(self.lattice, 2 * self.lattice.delta + max(m1.radius, m2.radius))
        self.sites = self.lattice.all_sites()
        self.coupler = coupler or LocalCoupler(m1, m2)
        self.rates1, self.rates2 = _SingleRates(m1), _SingleRates(m2)
        self.on_infeasible = on_infeasible
        self.count_violations = count_violations
        self.radius = 2 * self.lattice.delta + max(m1.radius, m2.radius)
        self.coupled = _RateTable(self.sites)
        self.single = _RateTable(self.sites)
        self.failed = set()
        self.unordered = set()
        # tables are filled lazily: coupled entries only while they can be used,
        # single-process events only when the run falls back to them
        self.shifts = {}
        self.coupled_dirty = set(self.sites)
        self.single_dirty = set(self.sites)
        self._settle()

    def _couple(self, x):
        self.coupled_dirty.discard(x)
        try:
            entries, shift = self.coupler.local_entries(self.eta, self.xi, x)
        except (Infeasible, NegativeResidual) as exc:
            if self.on_infeasible == "raise":
                raise exc
            self.coupled.set(x, [])
            self.failed.add(x)
            return
        # entries stay in the coupler's local frame; only the drawn one is moved
        self.shifts[x] = shift
        self.coupled.set(x, [(e, e.rate) for e in entries])

    def _global(self, x, e: CouplingEntry) -> CouplingEntry:
        shift = self.shifts.get(x)
        return e if shift is None else _shift_entry(e, self.lattice, shift)

    def draw(self, rng):
        """Draw the next event as ``(effect1, effect2, term)`` in torus coordinates."""
        table = self.table()
        x, (ev, _) = table.draw(rng)
        if table is self.single:
            return ev
        e = self._global(x, ev)
        return e.effect1, e.effect2, e.term

    def _settle(self):
        """Bring the coupled table up to date until a site without coupling is found."""
        if self.unordered:
            return
        for x in sorted(self.coupled_dirty):
            if self.failed:
                return
            self._couple(x)

    def _single_table(self) -> _RateTable:
        for x in sorted(self.single_dirty):
            evs = [((c, None, "ind1"), r) for c, r in self.rates1(self.eta, x)]
            evs += [((None, c, "ind2"), r) for c, r in self.rates2(self.xi, x)]
            self.single.set(x, evs)
        self.single_dirty.clear()
        return self.single

    @property
    def independent(self) -> bool:
        """Whether some site has no coupling (or the pair is unordered) in the current state."""
        return bool(self.failed) or bool(self.unordered)

    def table(self) -> _RateTable:
        return self._single_table() if self.independent else self.coupled

    def total_rate(self) -> Fraction:
        return self.table().total()

    def entries(self) -> list:
        """Current generator entries of every site, as coupling entries."""
        table = self.table()
        out = []
        for x, evs in zip(self.sites, table.events):
            if table is self.single:
                out += [CouplingEntry(e1, e2, r, term, x) for (e1, e2, term), r in evs]
            else:
                out += [self._global(x, e) for e, _ in evs]
        return out

    def apply(self, e1, e2):
        touched = set()
        if e1 is not None:
            self.eta = self.eta.try_apply(e1)
            touched.update(e1.touched)
        if e2 is not None:
            self.xi = self.xi.try_apply(e2)
            touched.update(e2.touched)
        self._after(touched)
        return touched

    def _after(self, touched):
        for s in touched:
            if self.eta[s] > self.xi[s]:
                self.unordered.add(s)
            else:
                self.unordered.discard(s)
        stale = _affected(self.lattice, touched, self.radius)
        self.single_dirty.update(stale)
        self.coupled_dirty.update(stale)
        self.failed.difference_update(stale)
        self._settle()

    def force(self, site, eta_value, xi_value):
        """Overwrite both values at one site (test hook)."""
        self.eta = self.eta.replace({site: eta_value})
        self.xi = self.xi.replace({site: xi_value})
        self._after({site})


def simulate_coupled(m1, m2, init1, init2, T, seed, on_infeasible="raise", coupler=None,
                     count_violations=False, inject_violation_at=None) -> Trajectory:
    """Coupled run driven by the assembled generator entries; order is checked after every event."""
    rng = _rng(seed)
    sim = CoupledSimulator(m1, m2, init1, init2, coupler, on_infeasible, count_violations)
    sites = sim.sites
    traj = Trajectory(float(T), seed)
    occ = np.zeros((2, len(sites)))
    if sim.failed:
        traj.infeasible_states += 1
    t = 0.0
    while True:
        total = sim.table().weights.sum()
        if total <= 0:
            break
        dt = rng.exponential(1.0 / total)
        if t + dt > T:
            break
        occ[0] += dt * np.asarray(sim.eta.values, dtype=float)
        occ[1] += dt * np.asarray(sim.xi.values, dtype=float)
        t += dt
        was_independent = sim.independent
        e1, e2, term = sim.draw(rng)
        touched = sim.apply(e1, e2)
        if inject_violation_at is not None and len(traj.log) == inject_violation_at:
            site = sites[0]
            sim.force(site, sim.eta.N, 0)
            touched.add(site)
        traj.log.append((t, tuple(sorted(touched)), e1, e2, term))
        traj.counts[term] = traj.counts.get(term, 0) + 1
        if was_independent:
            traj.independent_steps += 1
        if not was_independent and sim.failed and not sim.unordered:
            traj.infeasible_states += 1
        bad = [s for s in touched if sim.eta[s] > sim.xi[s]]
        if bad:
            traj.violations += 1
            if not count_violations:
                raise OrderViolation(f"order broken at {bad} by {format_change(e1)},"
                                     f"{format_change(e2)} ({term})", time=t, event=(e1, e2, term))
    occ[0] += (T - t) * np.asarray(sim.eta.values, dtype=float)
    occ[1] += (T - t) * np.asarray(sim.xi.values, dtype=float)
    traj.occupation = occ / T
    traj.final = (sim.eta, sim.xi)
    traj.end_time = t
    return traj


def scratch_total(m1, m2, eta, xi) -> Fraction:
    """Total generator rate of the coupled process, solved directly on the torus without memo."""
    lattice = eta.lattice
    sites = lattice.all_sites()
    bundle = build_bundle(m1, m2, eta, xi, sites)
    return sum((e.rate for x in sites for e in entries_at(x, bundle, lattice)), ZERO)
