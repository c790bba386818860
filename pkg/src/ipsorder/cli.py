"""Command line: ``ipsorder check|couple|simulate|reproduce``.

Exit codes: 0 success (comparable, coupling valid, no order violation, all
audits pass), 1 a negative answer, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import coupling as cp
from . import sim, worked
from .comparability import DEFAULT_BUDGET, check_model_comparability, default_radius
from .core import Lattice, LocalConfiguration, box_window
from .errors import IPSError, Infeasible, ModelFileError, NegativeResidual, OrderViolation
from .models import specfile

OK, NO, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _values(text, what):
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError as exc:
        raise UsageError(f"{what}: expected a comma-separated list of integers, got {text!r}") from exc


def _models(args, count=None):
    paths = args.model or []
    if count is not None and len(paths) not in count:
        raise UsageError(f"expected {' or '.join(map(str, count))} model files, got {len(paths)}")
    return [specfile.load(p) for p in paths]


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ check


def _describe(verdict) -> list:
    if verdict.holds:
        return ["holds"]
    lines = ["fails"]
    for k, v in (verdict.certificate or {}).items():
        if k in ("cut",):
            continue
        if k == "subset":
            v = "{" + ", ".join(repr(n) for n in v) + "}"
        lines.append(f"  {k}: {v}")
    return lines


def cmd_check(args) -> int:
    specs = _models(args, (1, 2))
    if args.attractive:
        if len(specs) != 1:
            raise UsageError("--attractive takes exactly one model")
        first, second = specs[0], None
    else:
        if len(specs) != 2:
            raise UsageError("give two models, or one model with --attractive")
        first, second = specs
    m1 = first.model
    m2 = m1 if second is None else second.model
    lines = []
    question = "attractive" if second is None else "first below second"
    lines.append(f"question: {question}")
    lines.append("models: " + ", ".join(s.family for s in ([first] if second is None else [first, second])))
    closed = specfile.closed_form(first, second)
    if closed is None:
        lines.append("closed-form: not available for this family")
    else:
        lines.append("closed-form: " + "\n".join(_describe(closed)))
    verdict = check_model_comparability(m1, m2, args.radius, args.budget, args.threads)
    radius = args.radius if args.radius is not None else default_radius(m1, m2)
    where = f"window radius {radius}" if m1.translation_invariant else "whole ring"
    lines.append(f"general ({where}, {verdict.evaluated} site evaluations): " + "\n".join(_describe(verdict)))
    if closed is not None and closed.holds and not verdict.holds:
        lines.append("disagreement: closed-form sufficient condition holds, general condition fails")
    elif closed is not None and not closed.holds and verdict.holds:
        lines.append("note: closed-form sufficient condition fails, general condition holds")
    _emit(args, "\n".join(lines) + "\n")
    return OK if verdict.holds else NO


# ------------------------------------------------------------------ couple


def _windows(args, N):
    if args.eta is None or args.xi is None:
        raise UsageError("--eta and --xi are required")
    ev, xv = _values(args.eta, "--eta"), _values(args.xi, "--xi")
    if len(ev) != len(xv) or not ev:
        raise UsageError("--eta and --xi must have the same positive length")
    if any(v < 0 or v > N for v in ev + xv):
        raise UsageError(f"window values must lie in 0..{N}")
    if any(a > b for a, b in zip(ev, xv)):
        raise UsageError("need eta <= xi site by site")
    return LocalConfiguration.line(ev, N), LocalConfiguration.line(xv, N)


def generator_sites(m1, m2, eta) -> list:
    """Window sites whose generator entries the window determines completely."""
    reach = 2 * m1.lattice.delta + max(m1.radius, m2.radius)
    inside = set(eta.window.sites)
    return [x for x in eta.window.sites
            if set(box_window(eta.lattice, x, reach).sites) <= inside]


def cmd_couple(args) -> int:
    """Coupled moves involving the centre of the window, with their validation report."""
    first, second = _models(args, (1, 2)) if not args.attractive else (_models(args, (1,)) * 2)
    m1, m2 = first.model, second.model
    if m1.lattice.d != 1 or not m1.translation_invariant:
        raise UsageError("couple works on one-dimensional translation-invariant models")
    eta, xi = _windows(args, m1.N)
    centre = (0,)
    if centre not in generator_sites(m1, m2, eta):
        raise UsageError("the window is too short to determine the generator at its centre")
    around = [centre, *eta.lattice.neighbors(centre)]
    if args.validate_only:
        try:
            table = cp.read_csv(Path(args.validate_only).read_text(), eta, xi, around)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read coupling table: {exc}") from exc
        if all(e.effect1 is not None and e.effect2 is not None for e in table.entries):
            # only joint moves listed: the single-process remainder fills in the rest
            table = cp.complete_with_remainder(table, m1, m2, around, touching=centre)
        report = cp.validate_coupling(table, m1, m2, sites=around, touching=centre)
        _emit(args, _text(report))
        return OK if report.ok else NO
    try:
        table = cp.moves_involving(m1, m2, eta, xi, centre)
    except (Infeasible, NegativeResidual) as exc:
        sys.stdout.write(f"no coupling at this window: {exc}\n")
        return NO
    report = cp.validate_coupling(table, m1, m2, sites=around, touching=centre)
    if args.out:
        Path(args.out).write_text(table.to_csv())
        Path(args.out + ".report").write_text(_text(report))
        sys.stdout.write(_text(report))
    else:
        sys.stdout.write(table.to_csv())
        sys.stderr.write(_text(report))
    return OK if report.ok else NO


def _text(report) -> str:
    text = str(report)
    return text if text.endswith("\n") else text + "\n"


# ------------------------------------------------------------------ simulate


def _init(text, L, N, what):
    vals = _values(text, what)
    if len(vals) == 1:
        vals = vals * L
    if len(vals) != L:
        raise UsageError(f"{what} needs 1 or {L} values")
    if any(v < 0 or v > N for v in vals):
        raise UsageError(f"{what} values must lie in 0..{N}")
    return vals


def cmd_simulate(args) -> int:
    specs = _models(args, (1, 2))
    if args.seed is None:
        raise UsageError("--seed is required")
    if args.length is None or args.length < 1:
        raise UsageError("--length must be a positive integer")
    if args.time is None or args.time <= 0:
        raise UsageError("--time must be positive")
    m1 = specs[0].model
    lattice = Lattice(1, args.length, m1.lattice.delta)
    init1 = sim.torus_config(lattice, _init(args.init, args.length, m1.N, "--init"), m1.N)
    if len(specs) == 1:
        traj = sim.simulate_single(m1, init1, args.time, args.seed)
    else:
        m2 = specs[1].model
        init2 = sim.torus_config(lattice, _init(args.init2 or args.init, args.length, m2.N, "--init2"), m2.N)
        try:
            traj = sim.simulate_coupled(m1, m2, init1, init2, args.time, args.seed,
                                        on_infeasible=args.on_infeasible, count_violations=True,
                                        inject_violation_at=args.inject_violation)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        except Infeasible as exc:
            sys.stdout.write(f"no coupling in a visited state: {exc}\n")
            return NO
    if args.out:
        Path(args.out).write_text(traj.export())
        Path(args.out + ".summary").write_text(traj.summary())
    sys.stdout.write(traj.summary())
    return OK if traj.violations == 0 else NO


# ------------------------------------------------------------------ reproduce


def cmd_reproduce(args) -> int:
    data = worked.perturbed(args.example) if args.perturb else None
    result = worked.run(args.example, data=data)
    _emit(args, "\n".join(worked.report_lines(result)) + "\n")
    return OK if result.ok else NO


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ipsorder", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-m", "--model", action="append", help="model specification file (repeatable)")
        sp.add_argument("--out", help="output file")
        sp.add_argument("--threads", type=int, default=1)

    c = sub.add_parser("check", help="decide comparability or attractiveness")
    common(c)
    c.add_argument("--attractive", action="store_true")
    c.add_argument("--radius", type=int)
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    k = sub.add_parser("couple", help="coupling generator on a window")
    common(k)
    k.add_argument("--attractive", action="store_true", help="couple a single model with itself")
    k.add_argument("--eta")
    k.add_argument("--xi")
    k.add_argument("--validate-only", metavar="CSV")

    s = sub.add_parser("simulate", help="simulate one process or a coupled pair on a ring")
    common(s)
    s.add_argument("--seed", type=int)
    s.add_argument("--length", type=int)
    s.add_argument("--time", type=float)
    s.add_argument("--init", default="0")
    s.add_argument("--init2")
    s.add_argument("--on-infeasible", choices=("raise", "independent"), default="independent")
    s.add_argument("--inject-violation", type=int, help=argparse.SUPPRESS)

    r = sub.add_parser("reproduce", help="audit a worked window and rebuild its flows")
    r.add_argument("--example", required=True, choices=("two-species", "nonconservative"))
    r.add_argument("--out")
    r.add_argument("--perturb", action="store_true", help=argparse.SUPPRESS)
    return p


COMMANDS = {"check": cmd_check, "couple": cmd_couple, "simulate": cmd_simulate, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    if getattr(args, "budget", 1) is not None and getattr(args, "budget", 1) <= 0:
        sys.stderr.write("error: --budget must be positive\n")
        return USAGE
    if getattr(args, "threads", 1) < 1:
        sys.stderr.write("error: --threads must be positive\n")
        return USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ModelFileError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE
    except OrderViolation as exc:
        sys.stderr.write(f"order violation: {exc}\n")
        return NO
    except IPSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
