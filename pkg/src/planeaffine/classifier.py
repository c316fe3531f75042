"""Case detection for the static plane symmetric family.

The decision tree runs on randomised zero tests of the profile derivatives:

0. every alpha vanishes                      -> Flat
1. nu' = 0   (constant nu)                   -> A1 / A2i / A2ii
2. mu' = 0   (constant mu)                   -> B1i / B1ii / B1iii / B2
3. 2nu'' + nu'^2 = 0 and 2mu'' + mu'^2 = 0   -> C_distinct / C_equal
4. anything else                             -> GenericNoSpecial
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .curvmatrix import (
    ConstantField,
    KernelBasis,
    RiemannMatrix6,
    assemble6,
    covariantly_constant_vectors,
    curvature_kernel,
    generic_rank,
    holonomy_hint,
)
from .exprcore import (
    DEFAULT_DOMAIN,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    Const,
    Expr,
    IndeterminateError,
    SampleSet,
    add,
    differentiate,
    evaluate,
    exp,
    mul,
)
from .geometry import MetricFamily, riemann

SIGN_TOL = 1e-9
MATCH_TOL = 1e-8


class CaseLabel(str, Enum):
    Flat = "Flat"
    A1 = "A1"
    A2i = "A2i"
    A2ii = "A2ii"
    B1i = "B1i"
    B1ii = "B1ii"
    B1iii = "B1iii"
    B2 = "B2"
    C_distinct = "C_distinct"
    C_equal = "C_equal"
    GenericNoSpecial = "GenericNoSpecial"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CaseReport:
    label: CaseLabel
    rank: int
    alphas: tuple[Expr, Expr, Expr, Expr]
    alphas_zero: tuple[bool, bool, bool, bool]
    constants: dict[str, float]
    kernel: KernelBasis
    constant_fields: tuple[ConstantField, ...]
    holonomy: str
    metric: MetricFamily = field(repr=False)
    matrix: RiemannMatrix6 = field(repr=False)


@dataclass(frozen=True)
class CaseExpectation:
    rank: int | None  # None: only the bound rank_max is known
    rank_max: int
    dim: int | None
    proper_affine_min: int
    proper_affine_exact: bool
    note: str = ""


_EXPECTATIONS = {
    CaseLabel.A1: CaseExpectation(3, 3, 8, 1, True),
    CaseLabel.A2i: CaseExpectation(3, 3, 5, 1, True),
    CaseLabel.A2ii: CaseExpectation(1, 1, 8, 2, False),
    CaseLabel.B1i: CaseExpectation(1, 1, 9, 1, False),
    CaseLabel.B1ii: CaseExpectation(1, 1, 9, 1, False),
    CaseLabel.B1iii: CaseExpectation(1, 1, 9, 1, False),
    CaseLabel.B2: CaseExpectation(1, 1, 7, 1, False),
    CaseLabel.C_distinct: CaseExpectation(3, 3, 4, 0, True),
    CaseLabel.C_equal: CaseExpectation(3, 3, 7, 1, False),
    CaseLabel.GenericNoSpecial: CaseExpectation(None, 3, 4, 0, True, "Killing fields only"),
    CaseLabel.Flat: CaseExpectation(0, 0, None, 0, False, "out of scope"),
}


def case_expectations(label: CaseLabel | str) -> CaseExpectation:
    """Rank, algebra dimension and proper affine count claimed for a case."""
    return _EXPECTATIONS[CaseLabel(label)]


def _fit_affine(f: Expr, params: Mapping[str, float], x1: float, x2: float) -> tuple[float, float]:
    """Slope and intercept of ``f`` assumed affine in x, from two points."""
    f1 = evaluate(f, {**params, "x": x1})
    f2 = evaluate(f, {**params, "x": x2})
    slope = (f2 - f1) / (x2 - x1)
    return slope, f1 - slope * x1


def classify(
    m: MetricFamily,
    domain: Mapping[str, tuple[float, float]] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> CaseReport:
    dom = dict(DEFAULT_DOMAIN)
    dom.update(domain or {})
    S = SampleSet.draw(dom, m.bindings, samples, seed)
    curv = riemann(m)
    mat = assemble6(curv, S)
    alphas = mat.alphas
    alphas_zero = tuple(S.is_zero(a) for a in alphas)
    rank = generic_rank(mat, sample_set=S)
    kernel = curvature_kernel(curv, m, sample_set=S)
    ccvs = tuple(covariantly_constant_vectors(m, sample_set=S))
    hint = holonomy_hint(kernel, list(ccvs))

    d = differentiate
    nu1, mu1 = d(m.nu, "x"), d(m.mu, "x")
    nu2, mu2 = d(nu1, "x"), d(mu1, "x")
    two = Const(2.0)
    lo, hi = dom["x"]
    x1, x2 = lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)
    params = m.bindings
    consts: dict[str, float] = {}

    if all(alphas_zero):
        label = CaseLabel.Flat
    elif S.is_zero(nu1):
        if S.is_zero(mu2):
            label = CaseLabel.A1
            a = evaluate(mu1, {**params, "x": x1})
            consts = {"a": a, "b": evaluate(m.mu, {**params, "x": x1}) - a * x1}
        elif S.is_zero(add(mul(two, mu2), mul(mu1, mu1))):
            label = CaseLabel.A2ii
            a, b = _fit_affine(exp(mul(Const(0.5), m.mu)), params, x1, x2)
            consts = {"a": a, "b": b}
        else:
            label = CaseLabel.A2i
    elif S.is_zero(mu1):
        q = mul(nu2, exp(m.nu))
        if S.is_zero(d(q, "x")):
            vals = S.values(q)
            c = float(np.mean(vals[~np.isnan(vals)]))
            if c > SIGN_TOL:
                label = CaseLabel.B1i
                consts = {"c": c}
            elif c < -SIGN_TOL:
                label = CaseLabel.B1ii
                consts = {"c": c, "N": -c}
            else:
                label = CaseLabel.B1iii
                a = evaluate(nu1, {**params, "x": x1})
                consts = {"c": 0.0, "a": a, "b": evaluate(m.nu, {**params, "x": x1}) - a * x1}
        else:
            label = CaseLabel.B2
    elif S.is_zero(add(mul(two, nu2), mul(nu1, nu1))) and S.is_zero(add(mul(two, mu2), mul(mu1, mu1))):
        half = Const(0.5)
        sa, b = _fit_affine(exp(mul(half, m.nu)), params, x1, x2)
        sc, dd = _fit_affine(exp(mul(half, m.mu)), params, x1, x2)
        consts = {"a": 2.0 * sa, "b": b, "c": 2.0 * sc, "d": dd}
        same = abs(consts["a"] - consts["c"]) <= MATCH_TOL * (1 + abs(consts["a"])) and abs(
            b - dd
        ) <= MATCH_TOL * (1 + abs(b))
        label = CaseLabel.C_equal if same else CaseLabel.C_distinct
    else:
        label = CaseLabel.GenericNoSpecial

    return CaseReport(
        label=label,
        rank=rank,
        alphas=alphas,
        alphas_zero=alphas_zero,
        constants=consts,
        kernel=kernel,
        constant_fields=ccvs,
        holonomy=hint,
        metric=m,
        matrix=mat,
    )


__all__ = [
    "CaseLabel",
    "CaseReport",
    "CaseExpectation",
    "classify",
    "case_expectations",
    "IndeterminateError",
]
