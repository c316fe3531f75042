"""The curvature tensor as a symmetric operator on bivectors, its rank, the
kernel of k -> R_{abcd} k^d and covariantly constant vector fields."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .exprcore import (
    COORDS,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    Const,
    Expr,
    IndeterminateError,
    SampleSet,
    differentiate,
    exp,
    mul,
    sub,
)
from .geometry import (
    DIM,
    CurvatureData,
    MetricFamily,
    VectorField,
    coordinate_field,
    covariant_derivative_vector,
)

BIVECTOR_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
BIVECTOR_LABELS = tuple(f"{a}{b}" for a, b in BIVECTOR_PAIRS)

RANK_RTOL = 1e-8
# singular values below this are treated as zero whatever the largest one is
RANK_ATOL = 1e-9
KERNEL_TOL = 1e-8

HOLONOMY_LABELS = ("R2", "R4", "R10", "R13", "R7", "general", "flat", "undetermined")


class CurvatureStructureError(ValueError):
    """The 6x6 matrix does not have the plane symmetric static pattern."""


@dataclass(frozen=True)
class RiemannMatrix6:
    entries: np.ndarray  # 6x6 object array, entry (I, J) = R^{ab}_{cd}

    @property
    def alphas(self) -> tuple[Expr, Expr, Expr, Expr]:
        e = self.entries
        return (e[0, 0], e[1, 1], e[3, 3], e[5, 5])


def assemble6(c: CurvatureData, samples: SampleSet | None = None) -> RiemannMatrix6:
    """Bivector matrix of R^{ab}_{cd} in the order 01, 02, 03, 12, 13, 23.

    With ``samples`` given, the diagonal pattern (a1, a2, a2, a3, a3, a4)
    and the vanishing of every off-diagonal entry are checked.
    """
    mixed = c.riemann_mixed2
    if mixed is None:
        raise ValueError("curvature data lacks R^{ab}_{cd}")
    ent = np.empty((6, 6), dtype=object)
    for i, (a, b) in enumerate(BIVECTOR_PAIRS):
        for j, (p, q) in enumerate(BIVECTOR_PAIRS):
            ent[i, j] = mixed[a, b, p, q]
    mat = RiemannMatrix6(ent)
    if samples is not None:
        for i in range(6):
            for j in range(6):
                if i != j and not samples.is_zero(ent[i, j]):
                    raise CurvatureStructureError(
                        f"off-diagonal entry ({BIVECTOR_LABELS[i]},{BIVECTOR_LABELS[j]}) is not zero"
                    )
        for i, j in ((1, 2), (3, 4)):
            if not samples.is_zero(sub(ent[i, i], ent[j, j])):
                raise CurvatureStructureError(
                    f"diagonal entries {BIVECTOR_LABELS[i]} and {BIVECTOR_LABELS[j]} differ"
                )
    return mat


def numerical_rank(mat: np.ndarray, rtol: float = RANK_RTOL, atol: float = RANK_ATOL) -> int:
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] <= atol:
        return 0
    return int(np.sum(s > max(rtol * s[0], atol)))


def generic_rank(
    mat: RiemannMatrix6,
    domain: Mapping[str, tuple[float, float]] | None = None,
    params: Mapping[str, float] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    sample_set: SampleSet | None = None,
) -> int:
    """Maximum numerical rank over the sample points."""
    S = sample_set or SampleSet.draw(domain, params, samples, seed)
    vals = S.tensor(mat.entries)
    best = None
    for i in range(S.size):
        m = vals[:, :, i]
        if not np.all(np.isfinite(m)):
            continue
        r = numerical_rank(m)
        best = r if best is None else max(best, r)
    if best is None:
        raise IndeterminateError("no sample point gave a finite curvature matrix")
    return best


@dataclass(frozen=True)
class KernelBasis:
    vectors: tuple[tuple[float, ...], ...]
    tags: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.vectors)


def causal_tag(g_diag: np.ndarray, v: np.ndarray, tol: float = 1e-10) -> str:
    norm = float(np.sum(g_diag * v * v))
    scale = float(np.sum(np.abs(g_diag) * v * v))
    if abs(norm) <= tol * max(scale, 1.0):
        return "null"
    return "timelike" if norm < 0 else "spacelike"


def _canonical_basis(B: np.ndarray) -> np.ndarray:
    """Rows spanning the column space of ``B``: reduced row echelon form,
    then Gram-Schmidt in order (coordinate-aligned subspaces stay aligned)."""
    if B.shape[1] == 0:
        return np.zeros((0, DIM))
    rows = B.T.copy()
    r = 0
    for col in range(DIM):
        if r == rows.shape[0]:
            break
        piv = r + int(np.argmax(np.abs(rows[r:, col])))
        if abs(rows[piv, col]) < 1e-10:
            continue
        rows[[r, piv]] = rows[[piv, r]]
        rows[r] /= rows[r, col]
        for k in range(rows.shape[0]):
            if k != r:
                rows[k] -= rows[k, col] * rows[r]
        r += 1
    rows = rows[:r]
    out = []
    for v in rows:
        w = v.copy()
        for u in out:
            w -= np.dot(u, w) * u
        w /= np.linalg.norm(w)
        w[np.abs(w) < 1e-14] = 0.0
        out.append(w)
    return np.array(out)


def curvature_kernel(
    c: CurvatureData,
    m: MetricFamily,
    domain: Mapping[str, tuple[float, float]] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    sample_set: SampleSet | None = None,
    tol: float = KERNEL_TOL,
) -> KernelBasis:
    """Common solutions k of R_{abcd} k^d = 0 over all sample points.

    The candidate subspace starts as R^4 and is cut down point by point by
    projecting out each point's row space.
    """
    S = sample_set or SampleSet.draw(domain, m.bindings, samples, seed)
    down = S.tensor(c.riemann_down)
    B = np.eye(DIM)
    used = 0
    for i in range(S.size):
        rows = np.array([down[a, b, cc, :, i] for a, b in BIVECTOR_PAIRS for cc in range(DIM)])
        if not np.all(np.isfinite(rows)):
            continue
        used += 1
        if B.shape[1] == 0:
            break
        A = rows @ B
        _, s, vt = np.linalg.svd(A)
        scale = max(float(s[0]) if s.size else 0.0, 1.0)
        rank = int(np.sum(s > tol * scale))
        null = vt[rank:].T
        B = B @ null
        if B.shape[1]:
            q, _ = np.linalg.qr(B)
            B = q
    if used == 0:
        raise IndeterminateError("no sample point gave finite curvature")
    basis = _canonical_basis(B)
    g_diag = np.array([S.values(m.g[a, a])[0] for a in range(DIM)])
    tags = tuple(causal_tag(g_diag, v) for v in basis)
    return KernelBasis(tuple(tuple(float(x) for x in v) for v in basis), tags)


@dataclass(frozen=True)
class ConstantField:
    field: VectorField
    tag: str
    direction: str


def covariantly_constant_vectors(
    m: MetricFamily,
    domain: Mapping[str, tuple[float, float]] | None = None,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    sample_set: SampleSet | None = None,
) -> list[ConstantField]:
    """Coordinate-aligned fields X with X_{a;b} = 0 on the samples.

    Candidates per direction are the unit-normalised coordinate field when
    the relevant profile is constant, then the plain coordinate field; the
    first that passes is kept.
    """
    S = sample_set or SampleSet.draw(domain, m.bindings, samples, seed)
    nu_const = S.is_zero(differentiate(m.nu, "x"))
    mu_const = S.is_zero(differentiate(m.mu, "x"))
    half = Const(-0.5)
    candidates: list[tuple[int, list[VectorField]]] = [
        (0, ([coordinate_field(0, exp(mul(half, m.nu)))] if nu_const else []) + [coordinate_field(0)]),
        (1, [coordinate_field(1)]),
        (2, ([coordinate_field(2, exp(mul(half, m.mu)))] if mu_const else []) + [coordinate_field(2)]),
        (3, ([coordinate_field(3, exp(mul(half, m.mu)))] if mu_const else []) + [coordinate_field(3)]),
    ]
    found = []
    for a, fields in candidates:
        for X in fields:
            nab = covariant_derivative_vector(m, X)
            if all(S.is_zero(nab[idx]) for idx in np.ndindex(nab.shape)):
                tag = "timelike" if a == 0 else "spacelike"
                found.append(ConstantField(X, tag, COORDS[a]))
                break
    return found


def holonomy_hint(kernel: KernelBasis, ccvs: list[ConstantField]) -> str:
    """Holonomy type suggested by the parallel vector fields.

    Only a hint: the decomposable forms behind each label are not proven.
    """
    if kernel.dim == DIM:
        return "flat"
    timelike = sum(1 for c in ccvs if c.tag == "timelike")
    spacelike = sum(1 for c in ccvs if c.tag == "spacelike")
    if timelike == 1 and spacelike == 0:
        return "R13"
    if timelike == 0 and spacelike == 1:
        return "R10"
    if timelike == 1 and spacelike == 1:
        return "R4"
    if timelike == 0 and spacelike == 2:
        return "R2"
    if not ccvs:
        return "general" if kernel.dim == 0 else "undetermined"
    return "undetermined"


def hint_wording(label: str) -> str:
    if label in ("flat", "general", "undetermined"):
        return label
    return f"consistent with type {label}"


__all__ = [
    "BIVECTOR_PAIRS",
    "BIVECTOR_LABELS",
    "RiemannMatrix6",
    "KernelBasis",
    "ConstantField",
    "CurvatureStructureError",
    "assemble6",
    "numerical_rank",
    "generic_rank",
    "curvature_kernel",
    "covariantly_constant_vectors",
    "holonomy_hint",
    "hint_wording",
    "causal_tag",
]
