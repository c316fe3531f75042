"""Killing / homothetic / affine tests for vector fields.

A field X is affine when X_{a;bc} = R_{abcd} X^d. Splitting
X_{a;b} = h_{ab}/2 + F_{ab}, X is homothetic when h = 2c g for a constant c
(Killing when c = 0) and proper affine when it is affine but not homothetic.

Residuals are normalised per component and point by ``1 + m`` where ``m`` is
the largest intermediate magnitude met while evaluating the residual, the
same scaling the zero test uses.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Mapping

import numpy as np

from .exprcore import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    Const,
    IndeterminateError,
    SampleSet,
    add,
    mul,
    sub,
)
from .geometry import (
    DIM,
    MetricFamily,
    VectorField,
    contract_riemann,
    coordinate_field,
    covariant_derivative_tensor2,
    covariant_derivative_vector,
    lie_bracket,
    zeros,
)

RESIDUAL_TOL = 1e-8
CALIBRATION_TOL = 1e-9
CLOSURE_TOL = 1e-6


class FieldClass(str, Enum):
    Killing = "Killing"
    ProperHomothetic = "ProperHomothetic"
    ProperAffine = "ProperAffine"
    NotAffine = "NotAffine"

    def __str__(self) -> str:
        return self.value


class ConventionError(RuntimeError):
    """Known Killing fields fail the affine equation: the curvature convention is broken."""


def plane_killing_fields() -> list[VectorField]:
    """d/dt, d/dy, d/dz and the rotation y d/dz - z d/dy."""
    return [
        coordinate_field(0),
        coordinate_field(2),
        coordinate_field(3),
        VectorField.of("0", "0", "-z", "y"),
    ]


def _normalised_max(S: SampleSet, exprs) -> tuple[float, float]:
    """(max absolute value, max normalised value) over expressions and points."""
    abs_max = 0.0
    norm_max = 0.0
    evaluated = False
    for e in exprs:
        if e.is_const(0.0):
            evaluated = True
            continue
        val = S.values(e)
        mag = S.magnitudes(e)
        ok = ~np.isnan(val)
        if not ok.any():
            raise IndeterminateError(f"every sample point failed for '{e}'")
        evaluated = True
        a = np.abs(val[ok])
        abs_max = max(abs_max, float(a.max()))
        norm_max = max(norm_max, float((a / (1.0 + mag[ok])).max()))
    if not evaluated:
        return 0.0, 0.0
    return abs_max, norm_max


def _affine_difference(m: MetricFamily, X: VectorField, slots=(0, 1, 2, 3), sign: int = 1) -> np.ndarray:
    second = covariant_derivative_tensor2(m, covariant_derivative_vector(m, X))
    rx = contract_riemann(m, X, slots)
    out = zeros(3)
    for idx in np.ndindex(out.shape):
        out[idx] = sub(second[idx], rx[idx]) if sign > 0 else add(second[idx], rx[idx])
    return out


def calibration_metric() -> MetricFamily:
    return MetricFamily.from_strings("x^2", "0.3*x^2 + x")


@lru_cache(maxsize=1)
def affine_convention() -> tuple[tuple[int, int, int, int], int]:
    """Index slots and sign for the curvature term of the affine equation.

    Chosen as the first variant under which the four plane symmetric Killing
    fields satisfy X_{a;bc} = sign * R_{slots(a,b,c,d)} X^d on a reference
    metric with every curvature component non-zero.
    """
    m = calibration_metric()
    S = SampleSet.draw(params=m.bindings)
    fields = plane_killing_fields()
    for slots in itertools.permutations(range(4)):
        for sign in (1, -1):
            if all(
                _normalised_max(S, _affine_difference(m, X, slots, sign).flat)[1] < CALIBRATION_TOL
                for X in fields
            ):
                return slots, sign
    raise ConventionError("no index ordering makes the Killing fields affine")


def affine_difference(m: MetricFamily, X: VectorField) -> np.ndarray:
    """Symbolic X_{a;bc} - R_{abcd} X^d under the calibrated convention."""
    slots, sign = affine_convention()
    return _affine_difference(m, X, slots, sign)


def _samples(m, domain, params, samples, seed, sample_set) -> SampleSet:
    if sample_set is not None:
        return sample_set
    binds = dict(m.bindings)
    binds.update(params or {})
    return SampleSet.draw(domain, binds, samples, seed)


def affine_residual(
    m: MetricFamily,
    X: VectorField,
    domain: Mapping[str, tuple[float, float]] | None = None,
    params: Mapping[str, float] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    sample_set: SampleSet | None = None,
) -> float:
    """Largest normalised component of X_{a;bc} - R_{abcd} X^d."""
    S = _samples(m, domain, params, samples, seed, sample_set)
    return _normalised_max(S, affine_difference(m, X).flat)[1]


@dataclass(frozen=True)
class HFDecomposition:
    h: np.ndarray
    F: np.ndarray
    h_parallel_residual: float  # h_{ab;c}
    f_curvature_residual: float  # F_{ab;c} - R_{abcd} X^d
    f_transport_residual: float  # F_{ab;c} X^c
    h_parallel: bool
    f_curvature: bool
    f_transport: bool

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.h_parallel:
            out.append("h_{ab;c} = 0")
        if not self.f_curvature:
            out.append("F_{ab;c} = R_{abcd} X^d")
        return out


def split_hF(m: MetricFamily, X: VectorField) -> tuple[np.ndarray, np.ndarray]:
    nab = covariant_derivative_vector(m, X)
    h = zeros(2)
    F = zeros(2)
    half = Const(0.5)
    for a in range(DIM):
        for b in range(DIM):
            h[a, b] = add(nab[a, b], nab[b, a])
            F[a, b] = mul(half, sub(nab[a, b], nab[b, a]))
    return h, F


def decompose_hF(
    m: MetricFamily,
    X: VectorField,
    domain: Mapping[str, tuple[float, float]] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    sample_set: SampleSet | None = None,
    tol: float = RESIDUAL_TOL,
) -> HFDecomposition:
    """Split X_{a;b} into h/2 + F and check the equivalent first-order system.

    The transport condition F_{ab;c} X^c = 0 is only reported.
    """
    S = _samples(m, domain, None, samples, seed, sample_set)
    h, F = split_hF(m, X)
    dh = covariant_derivative_tensor2(m, h)
    dF = covariant_derivative_tensor2(m, F)
    slots, sign = affine_convention()
    rx = contract_riemann(m, X, slots)
    fcurv = zeros(3)
    ftrans = zeros(2)
    for idx in np.ndindex(fcurv.shape):
        fcurv[idx] = sub(dF[idx], rx[idx]) if sign > 0 else add(dF[idx], rx[idx])
    for a in range(DIM):
        for b in range(DIM):
            acc = Const(0.0)
            for c in range(DIM):
                acc = add(acc, mul(dF[a, b, c], X[c]))
            ftrans[a, b] = acc
    r1 = _normalised_max(S, dh.flat)[1]
    r2 = _normalised_max(S, fcurv.flat)[1]
    r3 = _normalised_max(S, ftrans.flat)[1]
    return HFDecomposition(h, F, r1, r2, r3, r1 < tol, r2 < tol, r3 < tol)


@dataclass(frozen=True)
class SymmetryVerdict:
    killing_residual: float
    homothetic_residual: float
    homothetic_constant: float
    affine_residual: float
    classification: FieldClass
    h: np.ndarray
    F: np.ndarray

    @property
    def is_affine(self) -> bool:
        return self.classification is not FieldClass.NotAffine


def _fit_homothety(S: SampleSet, m: MetricFamily, h: np.ndarray) -> tuple[float, float]:
    """Least-squares c in h_aa = 2 c g_aa, and the normalised residual of h - 2cg."""
    hv = S.tensor(h)
    gv = S.tensor(m.g)
    hmag = np.empty_like(hv)
    for idx in np.ndindex(h.shape):
        hmag[idx] = S.magnitudes(h[idx])
    if np.isnan(hv).all():
        raise IndeterminateError("every sample point failed while evaluating L_X g")
    num = den = 0.0
    for a in range(DIM):
        ok = ~np.isnan(hv[a, a]) & ~np.isnan(gv[a, a])
        num += float(np.sum(hv[a, a][ok] * gv[a, a][ok]))
        den += float(np.sum(gv[a, a][ok] ** 2))
    c = num / (2.0 * den) if den > 0 else 0.0
    diff = np.abs(hv - 2.0 * c * gv)
    scale = 1.0 + np.fmax(hmag, np.abs(2.0 * c * gv))
    res = np.nanmax(diff / scale)
    return c, float(res)


def classify_field(
    m: MetricFamily,
    X: VectorField,
    domain: Mapping[str, tuple[float, float]] | None = None,
    params: Mapping[str, float] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    sample_set: SampleSet | None = None,
    tol: float = RESIDUAL_TOL,
) -> SymmetryVerdict:
    S = _samples(m, domain, params, samples, seed, sample_set)
    h, F = split_hF(m, X)
    killing = _normalised_max(S, h.flat)[1]
    c, homothetic = _fit_homothety(S, m, h)
    affine = _normalised_max(S, affine_difference(m, X).flat)[1]
    if killing < tol:
        c = 0.0
        homothetic = killing
    affine_ok = affine < tol
    if (killing < tol or homothetic < tol) and not affine_ok:
        raise ConventionError(
            f"field {X} passes the homothety test (residual {homothetic:.3e}) "
            f"but fails the affine equation (residual {affine:.3e})"
        )
    if not affine_ok:
        cls = FieldClass.NotAffine
    elif killing < tol:
        cls = FieldClass.Killing
    elif homothetic < tol:
        cls = FieldClass.ProperHomothetic
    else:
        cls = FieldClass.ProperAffine
    return SymmetryVerdict(killing, homothetic, c, affine, cls, h, F)


def bracket_residual(
    m: MetricFamily, X: VectorField, Y: VectorField, sample_set: SampleSet
) -> float:
    return affine_residual(m, lie_bracket(X, Y), sample_set=sample_set)


def residual_matrix(m: MetricFamily, fields: list[VectorField], sample_set: SampleSet) -> np.ndarray:
    """Columns are the affine residual tensors of each field over the samples,
    each entry divided by 1 + the largest intermediate magnitude in its row.

    The affine equation is linear in X, so the null space of this matrix is
    the set of affine combinations of ``fields`` (up to sampling).
    """
    cols, mags = [], []
    for X in fields:
        diff = affine_difference(m, X)
        cols.append(sample_set.tensor(diff).reshape(-1))
        mags.append(np.array([sample_set.magnitudes(e) for e in diff.flat]).reshape(-1))
    if not cols:
        return np.zeros((0, 0))
    scale = 1.0 + np.nanmax(np.array(mags), axis=0)
    return np.nan_to_num(np.array(cols).T / scale[:, None])


def affine_span(
    m: MetricFamily,
    fields: list[VectorField],
    sample_set: SampleSet,
    tol: float = RESIDUAL_TOL,
) -> np.ndarray:
    """Coefficient vectors (rows) spanning the affine combinations of
    ``fields``. Independent of any printed closed form."""
    A = residual_matrix(m, fields, sample_set)
    # columns scaled by the size of the field itself, never by the residual
    size = np.array(
        [1.0 + max(float(np.nanmax(np.abs(sample_set.values(c)))) for c in X) for X in fields]
    )
    _, s, vt = np.linalg.svd(A / size, full_matrices=True)
    rank = int(np.sum(s > tol))
    null = vt[rank:]
    return null / size


__all__ = [
    "RESIDUAL_TOL",
    "CLOSURE_TOL",
    "FieldClass",
    "ConventionError",
    "SymmetryVerdict",
    "HFDecomposition",
    "plane_killing_fields",
    "affine_convention",
    "calibration_metric",
    "affine_difference",
    "affine_residual",
    "split_hF",
    "decompose_hF",
    "classify_field",
    "bracket_residual",
    "residual_matrix",
    "affine_span",
]
