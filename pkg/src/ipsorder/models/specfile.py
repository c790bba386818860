"""Model specification files (YAML).

A file names a ``family`` and gives its parameters; rationals may be
written as ``"p/q"`` strings.  Example::

    family: two-species-exclusion
    r1: 1
    r2: 1
    r3: 3/2
    r4: 3/2
    r5: 1

Families and their keys:

``bdm``                  N, M, N_A, d, phi, phi_A, mu (length M), lam (M x N)
``bdm-binomial``         N, M, N_A, d, lam, p, phi, phi_A
``msdc``                 N, M, N_A, d, lams, mus, phi, phi_A
``allee``                N, M, N_A, d, lams, mus, lam_A, mu_A, A, phi, phi_A
``two-species-exclusion`` r1 .. r5
``general-exclusion``    n, q (``"x y": rate``), optional rules
                         (list of ``{eta: "1 0 1", from: x, to: y, rate}``)
``gs-conservative``      N, M, gamma (list of ``{k, from, to, rate}``)
``custom-table``         N, d, entries (list of ``{kind, k, l, pattern, rate, direction}``)
``nonconservative-pair`` mu1, mu2, gamma1, gamma2, alpha1, alpha2, beta, N, member (first | second)

For BDM-type families a parameter that depends on the neighbour vector is
given as a mapping from ``"r1 r2 ..."`` to the value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..core import Lattice
from ..errors import ModelFileError
from ..verdict import Verdict
from .base import (
    ExclusionModel,
    ExclusionParams,
    LocalTableModel,
    TableEntry,
    as_fraction,
    conservative_table_model,
)
from .bdm import BDMModel, BDMParams, allee_params, binomial_params, msdc_params
from .conditions import (
    check_allee_attractive,
    check_bdm_comparability,
    check_exclusion_attractive,
    check_gs_conservative,
    check_msdc,
)
from .zoo import nonconservative_example_rates, two_species_attractive, two_species_rates

FAMILIES = (
    "bdm", "bdm-binomial", "msdc", "allee", "two-species-exclusion",
    "general-exclusion", "gs-conservative", "custom-table", "nonconservative-pair",
)


@dataclass
class ModelSpec:
    """A parsed specification: the family, its raw parameters and the built model."""

    family: str
    raw: dict
    model: object
    params: object = None
    extra: dict = field(default_factory=dict)


def _frac(value, what):
    try:
        return as_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ModelFileError(f"{what}: cannot read {value!r} as a rational") from exc


def _int(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ModelFileError(f"missing field {key!r}")
        return default
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelFileError(f"{key} must be an integer")
    return value


def _need(raw, key):
    if key not in raw:
        raise ModelFileError(f"missing field {key!r}")
    return raw[key]


def _r_key(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).replace(",", " ").split())


def _maybe_table(value, conv, what):
    """A plain value, or a neighbour-vector table of values."""
    if isinstance(value, dict):
        return {_r_key(r): conv(v, f"{what}[{r}]") for r, v in value.items()}
    return conv(value, what)


def _vector(value, what):
    if not isinstance(value, (list, tuple)):
        raise ModelFileError(f"{what} must be a list")
    return [_frac(v, what) for v in value]


def _matrix(value, what):
    if not isinstance(value, (list, tuple)):
        raise ModelFileError(f"{what} must be a list of rows")
    return [_vector(row, what) for row in value]


def _bdm_common(raw):
    return dict(N=_int(raw, "N"), M=_int(raw, "M"), N_A=_int(raw, "N_A", 0), d=_int(raw, "d", 1))


def _build_bdm(raw):
    c = _bdm_common(raw)
    phi = _maybe_table(raw.get("phi", 1), _frac, "phi")
    phi_A = _maybe_table(raw.get("phi_A", raw.get("phi", 1)), _frac, "phi_A")
    mu = _maybe_table(_need(raw, "mu"), _vector, "mu")
    lam = _maybe_table(_need(raw, "lam"), _matrix, "lam")
    return BDMParams(c["N"], c["N_A"], c["M"], phi, phi_A, mu, lam, c["d"])


def _build_binomial(raw):
    c = _bdm_common(raw)
    phi = _frac(raw.get("phi", 1), "phi")
    phi_A = _frac(raw["phi_A"], "phi_A") if "phi_A" in raw else None
    lam, p = _frac(_need(raw, "lam"), "lam"), _frac(_need(raw, "p"), "p")
    if lam <= 0 or not 0 < p < 1:
        raise ModelFileError("bdm-binomial needs lam > 0 and 0 < p < 1")
    return binomial_params(lam, p, c["N"], c["M"], phi, phi_A, c["N_A"], c["d"])


def _build_msdc(raw):
    c = _bdm_common(raw)
    phi = _frac(raw.get("phi", 1), "phi")
    phi_A = _frac(raw["phi_A"], "phi_A") if "phi_A" in raw else None
    lams = _maybe_table(_need(raw, "lams"), _vector, "lams")
    mus = _maybe_table(_need(raw, "mus"), _vector, "mus")
    return msdc_params(lams, mus, c["N"], c["M"], phi, phi_A, c["N_A"], c["d"])


def _build_allee(raw):
    c = _bdm_common(raw)
    phi = _frac(raw.get("phi", 1), "phi")
    phi_A = _frac(raw["phi_A"], "phi_A") if "phi_A" in raw else None
    return allee_params(_vector(_need(raw, "lams"), "lams"), _vector(_need(raw, "mus"), "mus"),
                        _frac(_need(raw, "lam_A"), "lam_A"), _frac(_need(raw, "mu_A"), "mu_A"),
                        _int(raw, "A"), c["N"], c["M"], phi, phi_A, c["N_A"], c["d"])


def _exclusion_params(raw):
    n = _int(raw, "n")
    q = {}
    for pair, rate in (raw.get("q") or {}).items():
        x, y = _r_key(pair)
        q[(x, y)] = _frac(rate, f"q[{pair}]")
    table = {}
    for rule in raw.get("rules") or ():
        eta = _r_key(_need(rule, "eta"))
        if len(eta) != n:
            raise ModelFileError(f"rule configuration {eta} does not have {n} sites")
        table[(eta, _int(rule, "from"), _int(rule, "to"))] = _frac(_need(rule, "rate"), "rule rate")
    return ExclusionParams(n, q, table)


def _gamma_table(raw):
    gamma = {}
    for row in _need(raw, "gamma"):
        key = (_int(row, "k"), _int(row, "from"), _int(row, "to"))
        gamma[key] = _frac(_need(row, "rate"), f"gamma{key}")
    return gamma


def _table_entries(raw):
    entries = []
    for row in _need(raw, "entries"):
        kind = _need(row, "kind")
        if kind not in ("arr", "dep", "mig"):
            raise ModelFileError(f"unknown change kind {kind!r}")
        width = 2 if kind == "mig" else 1
        pattern = tuple(row.get("pattern") or (None,) * width)
        if len(pattern) != width:
            raise ModelFileError(f"pattern for {kind} needs {width} entries")
        direction = row.get("direction")
        entries.append(TableEntry(kind, _int(row, "k"), _int(row, "l", 0) if kind == "mig" else 0,
                                  pattern, _frac(_need(row, "rate"), "rate"),
                                  None if direction is None else tuple(direction)))
    return entries


def build_spec(raw: dict) -> ModelSpec:
    if not isinstance(raw, dict):
        raise ModelFileError("a model file must be a mapping")
    family = raw.get("family")
    if family not in FAMILIES:
        raise ModelFileError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    try:
        if family in ("bdm", "bdm-binomial", "msdc", "allee"):
            builder = {"bdm": _build_bdm, "bdm-binomial": _build_binomial,
                       "msdc": _build_msdc, "allee": _build_allee}[family]
            params = builder(raw)
            return ModelSpec(family, raw, BDMModel(params, name=family), params)
        if family == "two-species-exclusion":
            r = [_frac(_need(raw, f"r{i}"), f"r{i}") for i in range(1, 6)]
            return ModelSpec(family, raw, two_species_rates(*r), tuple(r))
        if family == "general-exclusion":
            params = _exclusion_params(raw)
            return ModelSpec(family, raw, ExclusionModel(params), params)
        if family == "gs-conservative":
            gamma, N = _gamma_table(raw), _int(raw, "N")
            M = _int(raw, "M", N)
            if any(k > M for k, _, _ in gamma):
                raise ModelFileError("gamma lists a batch larger than M")
            return ModelSpec(family, raw, conservative_table_model(gamma, N), gamma, {"N": N, "M": M})
        if family == "custom-table":
            N, d = _int(raw, "N"), _int(raw, "d", 1)
            lattice = Lattice(d, None, _int(raw, "delta", 1))
            return ModelSpec(family, raw, LocalTableModel(_table_entries(raw), N, lattice))
        names = ("mu1", "mu2", "gamma1", "gamma2", "alpha1", "alpha2", "beta")
        vals = [_frac(_need(raw, n), n) for n in names]
        member = raw.get("member", "first")
        if member not in ("first", "second"):
            raise ModelFileError("member must be 'first' or 'second'")
        pair = nonconservative_example_rates(*vals, N=_int(raw, "N", 5))
        return ModelSpec(family, raw, pair[0] if member == "first" else pair[1], tuple(vals))
    except ModelFileError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ModelFileError(f"{family}: {exc}") from exc


def loads(text: str) -> ModelSpec:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelFileError(f"not valid YAML: {exc}") from exc
    return build_spec(raw)


def load(path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc}") from exc
    return loads(text)


def closed_form(spec1: ModelSpec, spec2: ModelSpec | None = None) -> Verdict | None:
    """The family's closed-form verdict for ``spec1 <= spec2`` (attractiveness when ``spec2`` is None).

    Returns ``None`` when the families have no closed form for this question.
    """
    attractive = spec2 is None
    spec2 = spec1 if attractive else spec2
    f1, f2 = spec1.family, spec2.family
    bdm_like = ("bdm", "bdm-binomial", "msdc", "allee")
    if f1 in bdm_like and f2 in bdm_like:
        p1, p2 = spec1.params, spec2.params
        if attractive and f1 == "allee":
            raw = spec1.raw
            return check_allee_attractive(_vector(raw["lams"], "lams"), _vector(raw["mus"], "mus"),
                                          _frac(raw["lam_A"], "lam_A"), _frac(raw["mu_A"], "mu_A"),
                                          p1.d)
        if p1.is_diagonal() and p2.is_diagonal() and "msdc" in (f1, f2):
            return check_msdc(p1, p2)
        return check_bdm_comparability(p1, p2)
    if not attractive:
        return None
    if f1 == "two-species-exclusion":
        ok = two_species_attractive(*spec1.params)
        if ok:
            return Verdict(True, None, 1)
        return Verdict(False, {"condition": "r1 v r2 <= r3 ^ r4 <= r3 v r4 <= r1 + r5"}, 1)
    if f1 == "general-exclusion":
        return check_exclusion_attractive(spec1.params)
    if f1 == "gs-conservative":
        return check_gs_conservative(spec1.params, spec1.extra["N"], spec1.extra["M"])
    return None
