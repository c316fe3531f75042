"""Closed-form affine generators per case, their verification and repair.

Every case lists one generator per free constant of its printed closed form
(that constant set to 1, the others to 0). The printed form is only a
starting ansatz: each generator is checked against the affine equation, and
failures go through the repair procedure

1. sign flips, y<->z and t<->x swaps inside one component, and swaps of
   the (X^0, X^1) or (X^2, X^3) pair;
2. otherwise the hand-derived correction stored with the entry.

A repaired field must pass the affine test and be linearly independent of
the generators already accepted. Each repair (and each rejection) produces a
:class:`DiscrepancyRecord`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .classifier import CaseLabel, CaseReport
from .exprcore import (
    DEFAULT_DOMAIN,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    Const,
    Expr,
    SampleSet,
    as_expr,
    differentiate,
    div,
    neg,
    substitute,
)
from .geometry import DIM, MetricFamily, VectorField, lie_derivative_metric
from .symmetry import RESIDUAL_TOL, FieldClass, SymmetryVerdict, classify_field

INDEPENDENCE_POINTS = 4


@dataclass(frozen=True)
class CatalogEntry:
    constant: str
    form: str
    printed: VectorField
    corrected: VectorField | None = None


@dataclass(frozen=True)
class GeneratorRecord:
    constant: str
    form: str
    printed: VectorField
    field: VectorField | None
    status: str  # verified | repaired | rejected
    method: str
    verdict: SymmetryVerdict | None

    @property
    def accepted(self) -> bool:
        return self.field is not None


@dataclass(frozen=True)
class DiscrepancyRecord:
    case: str
    form: str
    constant: str
    original: VectorField
    corrected: VectorField | None
    residual: float
    method: str

    def format(self) -> str:
        def comps(X: VectorField | None) -> str:
            if X is None:
                return "none"
            return "; ".join(f"X{a}={X[a]}" for a in range(DIM))

        return "\n".join(
            [
                f"case: {self.case}",
                f"form: {self.form}",
                f"constant: {self.constant}",
                f"original: {comps(self.original)}",
                f"corrected: {comps(self.corrected)}",
                f"residual: {self.residual:.6e}",
                f"method: {self.method}",
            ]
        )


@dataclass(frozen=True)
class AffineBasis:
    label: CaseLabel
    generators: tuple[GeneratorRecord, ...]
    discrepancies: tuple[DiscrepancyRecord, ...] = field(default=())
    metric: MetricFamily | None = field(default=None, repr=False)
    sample_set: SampleSet | None = field(default=None, repr=False, compare=False)

    @property
    def fields(self) -> list[VectorField]:
        return [g.field for g in self.generators if g.field is not None]

    @property
    def accepted(self) -> list[GeneratorRecord]:
        return [g for g in self.generators if g.accepted]


@dataclass(frozen=True)
class AlgebraSummary:
    dim_total: int
    dim_killing: int
    dim_homothetic_extra: int
    dim_proper_affine_extra: int


def format_discrepancy_log(records) -> str:
    return "\n\n".join(r.format() for r in records) + ("\n" if records else "")


# --- closed forms -------------------------------------------------------------


def _vf(*comps: str, **consts: float | Expr) -> VectorField:
    return VectorField(tuple(substitute(as_expr(c), consts) for c in comps))


def _linear_yz(form: str) -> list[CatalogEntry]:
    """(c1 y + c2 z + c3) d/dy + (c4 y + c5 z + c6) d/dz."""
    forms = {
        "c1": ("0", "0", "y", "0"),
        "c2": ("0", "0", "z", "0"),
        "c3": ("0", "0", "1", "0"),
        "c4": ("0", "0", "0", "y"),
        "c5": ("0", "0", "0", "z"),
        "c6": ("0", "0", "0", "1"),
    }
    return [CatalogEntry(k, form, _vf(*v)) for k, v in forms.items()]


def _case_a1(k: Mapping[str, float]) -> list[CatalogEntry]:
    a, b = k["a"], k["b"]
    e = dict(a=a, b=b)
    ex = "(1/a)*exp(-a*x - b)"
    return [
        CatalogEntry(
            "c2",
            "A1",
            _vf("0", "y", f"{ex} + (a/4)*(z^2 - y^2)", f"{ex} - (a/2)*y*z", **e),
            _vf("0", "y", f"{ex} + (a/4)*(z^2 - y^2)", "-(a/2)*y*z", **e),
        ),
        CatalogEntry(
            "c3",
            "A1",
            _vf("0", "0", "-(a/2)*y*z", "(a/4)*(y^2 - z^2)", **e),
            _vf("0", "z", "-(a/2)*y*z", f"{ex} + (a/4)*(y^2 - z^2)", **e),
        ),
        CatalogEntry(
            "c4",
            "A1",
            _vf("0", "z", "-(a/2)*y", "-(a/2)*z", **e),
            _vf("0", "1", "-(a/2)*y", "-(a/2)*z", **e),
        ),
        CatalogEntry("c5", "A1", _vf("0", "1", "z", "-y"), _vf("0", "0", "z", "-y")),
        CatalogEntry("c6", "A1", _vf("0", "0", "1", "0")),
        CatalogEntry("c7", "A1", _vf("0", "0", "0", "1")),
        CatalogEntry("c8", "A1", _vf("t", "0", "0", "0")),
        CatalogEntry("c9", "A1", _vf("1", "0", "0", "0")),
    ]


def _case_a2i(k) -> list[CatalogEntry]:
    return [
        CatalogEntry("c1", "A2i", _vf("0", "0", "-z", "y")),
        CatalogEntry("c2", "A2i", _vf("0", "0", "0", "1")),
        CatalogEntry("c3", "A2i", _vf("0", "0", "1", "0")),
        CatalogEntry("c8", "A2i time", _vf("t", "0", "0", "0")),
        CatalogEntry("c9", "A2i time", _vf("1", "0", "0", "0")),
    ]


def _case_a2ii(k) -> list[CatalogEntry]:
    a, b = k["a"], k["b"]
    return [
        CatalogEntry("c1", "A2ii", _vf("0", "0", "-z", "y")),
        CatalogEntry("c2", "A2ii", _vf("0", "0", "0", "1")),
        CatalogEntry("c3", "A2ii", _vf("0", "0", "1", "0")),
        CatalogEntry("c4", "A2ii", _vf("t", "0", "0", "0")),
        CatalogEntry("c5", "A2ii", _vf("x", "0", "0", "0")),
        CatalogEntry("c6", "A2ii", _vf("1", "0", "0", "0")),
        CatalogEntry("c7", "A2ii", _vf("0", "t", "0", "0")),
        CatalogEntry("c8", "A2ii", _vf("0", "x", "0", "0"), _vf("0", "x + b/a", "0", "0", a=a, b=b)),
    ]


def _antiderivative_exp_minus_nu(m: MetricFamily, c: float) -> Expr:
    # nu'' e^nu = c makes nu'/c an antiderivative of e^{-nu}
    return div(differentiate(m.nu, "x"), Const(c))


def _case_b1_trig(k, m: MetricFamily) -> list[CatalogEntry]:
    c = k["c"]
    w = math.sqrt(c / 2.0)
    integ = _antiderivative_exp_minus_nu(m, c)
    return [
        CatalogEntry("c7", "B1i", _vf("w*cos(w*t)*I", "sin(w*t)", "0", "0", w=w, I=integ)),
        CatalogEntry("c8", "B1i", _vf("-w*sin(w*t)*I", "cos(w*t)", "0", "0", w=w, I=integ)),
        CatalogEntry("c9", "B1i", _vf("1", "0", "0", "0")),
    ] + _linear_yz("B1i")


def _case_b1_hyp(k, m: MetricFamily) -> list[CatalogEntry]:
    c = k["c"]
    w = math.sqrt(k["N"] / 2.0)
    integ = _antiderivative_exp_minus_nu(m, c)
    return [
        CatalogEntry("c7", "B1ii", _vf("w*cosh(w*t)*I", "sinh(w*t)", "0", "0", w=w, I=integ)),
        CatalogEntry("c8", "B1ii", _vf("w*sinh(w*t)*I", "cosh(w*t)", "0", "0", w=w, I=integ)),
        CatalogEntry("c9", "B1ii", _vf("1", "0", "0", "0")),
    ] + _linear_yz("B1ii")


def _case_b1_lin(k) -> list[CatalogEntry]:
    e = dict(a=k["a"], b=k["b"])
    return [
        CatalogEntry(
            "c7",
            "B1iii",
            _vf("-(1/a)*exp(-(a*x + b))", "t", "0", "0", **e),
            _vf("-(1/a)*exp(-(a*x + b)) - (a/4)*t^2", "t", "0", "0", **e),
        ),
        CatalogEntry("c8", "B1iii", _vf("0", "1", "0", "0"), _vf("-(a/2)*t", "1", "0", "0", **e)),
        CatalogEntry("c9", "B1iii", _vf("1", "0", "0", "0")),
    ] + _linear_yz("B1iii")


def _case_b2(k) -> list[CatalogEntry]:
    return [CatalogEntry("c7", "B2", _vf("1", "0", "0", "0"))] + _linear_yz("B2")


def _case_c_distinct(k) -> list[CatalogEntry]:
    return [
        CatalogEntry("c2", "C_distinct", _vf("1", "0", "0", "0")),
        CatalogEntry("c3", "C_distinct", _vf("0", "0", "z", "-y")),
        CatalogEntry("c4", "C_distinct", _vf("0", "0", "1", "0")),
        CatalogEntry("c5", "C_distinct", _vf("0", "0", "0", "1")),
    ]


def _case_c_equal(k) -> list[CatalogEntry]:
    a, b = k["a"], k["b"]
    return [
        CatalogEntry("c1", "C_equal", _vf("y", "0", "t", "0")),
        CatalogEntry("c2", "C_equal", _vf("z", "0", "0", "t")),
        CatalogEntry("c3", "C_equal", _vf("1", "0", "0", "0")),
        CatalogEntry("c4", "C_equal", _vf("0", "0", "-z", "z"), _vf("0", "0", "-z", "y")),
        CatalogEntry("c5", "C_equal", _vf("0", "0", "1", "0")),
        CatalogEntry("c6", "C_equal", _vf("0", "0", "0", "1")),
        CatalogEntry("c7", "C_equal", _vf("0", "x", "0", "0"), _vf("0", "x + 2*b/a", "0", "0", a=a, b=b)),
    ]


def _case_generic(k) -> list[CatalogEntry]:
    return [
        CatalogEntry("c1", "Killing", _vf("1", "0", "0", "0")),
        CatalogEntry("c2", "Killing", _vf("0", "0", "1", "0")),
        CatalogEntry("c3", "Killing", _vf("0", "0", "-z", "y")),
        CatalogEntry("c4", "Killing", _vf("0", "0", "0", "1")),
    ]


def catalog_entries(report: CaseReport) -> list[CatalogEntry]:
    """Printed closed form for the detected case, instantiated with its constants."""
    k = report.constants
    m = report.metric
    label = report.label
    if label is CaseLabel.Flat:
        raise ValueError("flat metrics are outside the catalog")
    builders = {
        CaseLabel.A1: lambda: _case_a1(k),
        CaseLabel.A2i: lambda: _case_a2i(k),
        CaseLabel.A2ii: lambda: _case_a2ii(k),
        CaseLabel.B1i: lambda: _case_b1_trig(k, m),
        CaseLabel.B1ii: lambda: _case_b1_hyp(k, m),
        CaseLabel.B1iii: lambda: _case_b1_lin(k),
        CaseLabel.B2: lambda: _case_b2(k),
        CaseLabel.C_distinct: lambda: _case_c_distinct(k),
        CaseLabel.C_equal: lambda: _case_c_equal(k),
        CaseLabel.GenericNoSpecial: lambda: _case_generic(k),
    }
    try:
        return builders[label]()
    except KeyError as exc:
        raise ValueError(f"case parameter {exc} was not recovered for {label}") from None


# --- repair ---------------------------------------------------------------------


def _swap(e: Expr, p: str, q: str) -> Expr:
    from .exprcore import Var

    return substitute(e, {p: Var(q), q: Var(p)})


def repair_variants(X: VectorField) -> Iterator[tuple[str, VectorField]]:
    """Small edits of a failing ansatz, in a fixed order."""
    seen = {X}
    comps = list(X)

    def emit(desc: str, new: list[Expr]):
        V = VectorField(tuple(new))
        if V not in seen:
            seen.add(V)
            return desc, V
        return None

    cands = []
    for a in range(DIM):
        if comps[a].is_const(0.0):
            continue
        cands.append((f"negate X{a}", [neg(c) if i == a else c for i, c in enumerate(comps)]))
    for a in range(DIM):
        for p, q in (("y", "z"), ("t", "x")):
            new = list(comps)
            new[a] = _swap(comps[a], p, q)
            cands.append((f"swap {p}<->{q} in X{a}", new))
    cands.append(("swap X2<->X3", [comps[0], comps[1], comps[3], comps[2]]))
    cands.append(("swap X0<->X1", [comps[1], comps[0], comps[2], comps[3]]))
    for desc, new in cands:
        got = emit(desc, new)
        if got is not None:
            yield got


def _field_matrix(fields: list[VectorField], S: SampleSet) -> np.ndarray:
    rows = []
    for X in fields:
        rows.append(np.concatenate([S.values(X[a]) for a in range(DIM)]))
    return np.array(rows) if rows else np.zeros((0, DIM * S.size))


def independent(fields: list[VectorField], S: SampleSet, rtol: float = 1e-9) -> bool:
    """Linear independence of the fields as functions, from point values."""
    if not fields:
        return True
    M = _field_matrix(fields, S)
    if not np.all(np.isfinite(M)):
        return False
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms == 0):
        return False
    s = np.linalg.svd(M / norms[:, None], compute_uv=False)
    return bool(s[-1] > rtol * s[0]) and len(fields) <= M.shape[1]


def _independence_points(domain, params, seed) -> SampleSet:
    return SampleSet.draw(domain, params, INDEPENDENCE_POINTS, seed + 1)


def generator_catalog(
    report: CaseReport,
    domain: Mapping[str, tuple[float, float]] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> AffineBasis:
    m = report.metric
    dom = dict(DEFAULT_DOMAIN)
    dom.update(domain or {})
    S = SampleSet.draw(dom, m.bindings, samples, seed)
    P = _independence_points(dom, m.bindings, seed)
    entries = catalog_entries(report)

    verdicts: dict[int, SymmetryVerdict] = {}
    accepted: dict[int, tuple[VectorField, str, str, SymmetryVerdict]] = {}
    for i, ent in enumerate(entries):
        v = classify_field(m, ent.printed, sample_set=S)
        verdicts[i] = v
        current = [f for f, *_ in accepted.values()]
        if v.is_affine and independent(current + [ent.printed], P):
            accepted[i] = (ent.printed, "verified", "as printed", v)

    discrepancies = []
    for i, ent in enumerate(entries):
        if i in accepted:
            continue
        current = [f for f, *_ in accepted.values()]
        found = None
        for desc, V in repair_variants(ent.printed):
            v = classify_field(m, V, sample_set=S)
            if v.is_affine and independent(current + [V], P):
                found = (V, desc, v)
                break
        if found is None and ent.corrected is not None:
            v = classify_field(m, ent.corrected, sample_set=S)
            if v.is_affine and independent(current + [ent.corrected], P):
                found = (ent.corrected, "catalogued correction", v)
        if found is None:
            reason = "not affine" if not verdicts[i].is_affine else "dependent on accepted generators"
            discrepancies.append(
                DiscrepancyRecord(
                    str(report.label), ent.form, ent.constant, ent.printed, None,
                    verdicts[i].affine_residual, f"rejected ({reason}); no repair passed",
                )
            )
            continue
        V, desc, v = found
        accepted[i] = (V, "repaired", desc, v)
        discrepancies.append(
            DiscrepancyRecord(
                str(report.label), ent.form, ent.constant, ent.printed, V, v.affine_residual, desc
            )
        )

    records = []
    for i, ent in enumerate(entries):
        if i in accepted:
            V, status, method, v = accepted[i]
            records.append(GeneratorRecord(ent.constant, ent.form, ent.printed, V, status, method, v))
        else:
            records.append(
                GeneratorRecord(ent.constant, ent.form, ent.printed, None, "rejected", "", verdicts[i])
            )
    return AffineBasis(report.label, tuple(records), tuple(discrepancies), m, S)


def _nullity(A: np.ndarray, tol: float) -> int:
    if A.shape[1] == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return A.shape[1] - int(np.sum(s > tol))


def algebra_summary(basis: AffineBasis) -> AlgebraSummary:
    """Dimensions of the Killing and homothetic subalgebras of the span.

    A generator-by-generator count would depend on the basis (a rotation
    may only appear as a combination of two proper affine generators), so
    the conditions L_X g = 0 and L_X g = 2c g are solved over the span.
    """
    fields = basis.fields
    n = len(fields)
    if basis.metric is None or n == 0:
        counts = {c: 0 for c in FieldClass}
        for g in basis.accepted:
            counts[g.verdict.classification] += 1
        return AlgebraSummary(
            n, counts[FieldClass.Killing], counts[FieldClass.ProperHomothetic], counts[FieldClass.ProperAffine]
        )
    m = basis.metric
    S = basis.sample_set or SampleSet.draw(params=m.bindings)
    # rows scaled by 1 + largest intermediate magnitude, as in the zero test
    cols, mags = [], []
    for X in fields:
        h = lie_derivative_metric(m, X)
        cols.append(S.tensor(h).reshape(-1))
        mags.append(np.array([S.magnitudes(e) for e in h.flat]).reshape(-1))
    scale = 1.0 + np.nanmax(np.array(mags), axis=0)
    H = np.nan_to_num(np.array(cols).T / scale[:, None])
    G = np.nan_to_num(S.tensor(m.g).reshape(-1) / scale)[:, None]
    tol = RESIDUAL_TOL * math.sqrt(H.shape[0])
    killing = _nullity(H, tol)
    homothetic = _nullity(np.hstack([H, -2.0 * G]), tol)
    return AlgebraSummary(n, killing, homothetic - killing, n - homothetic)


__all__ = [
    "CatalogEntry",
    "GeneratorRecord",
    "DiscrepancyRecord",
    "AffineBasis",
    "AlgebraSummary",
    "catalog_entries",
    "generator_catalog",
    "algebra_summary",
    "repair_variants",
    "independent",
    "format_discrepancy_log",
]
