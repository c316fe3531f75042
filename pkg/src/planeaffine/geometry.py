"""Christoffel symbols, curvature and covariant derivatives for the static
plane symmetric family

    ds^2 = -e^{nu(x)} dt^2 + dx^2 + e^{mu(x)} (dy^2 + dz^2)

All tensors are dense numpy object arrays of :class:`Expr`, indexed in the
coordinate order (t, x, y, z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .exprcore import (
    COORDS,
    ONE,
    ZERO,
    Const,
    Expr,
    Var,
    add,
    as_expr,
    differentiate,
    exp,
    mul,
    neg,
    sub,
)

DIM = 4


def zeros(rank: int) -> np.ndarray:
    arr = np.empty((DIM,) * rank, dtype=object)
    arr.fill(ZERO)
    return arr


@dataclass(frozen=True)
class MetricFamily:
    """Diagonal metric built from the two profile functions nu(x), mu(x).

    ``params`` binds the named constants appearing in the profiles.
    """

    nu: Expr
    mu: Expr
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nu", as_expr(self.nu))
        object.__setattr__(self, "mu", as_expr(self.mu))
        params = self.params
        if isinstance(params, Mapping):
            params = tuple(sorted((str(k), float(v)) for k, v in params.items()))
        object.__setattr__(self, "params", tuple(params))
        names = dict(self.params)
        for label, prof in (("nu", self.nu), ("mu", self.mu)):
            stray = prof.free_symbols & {"t", "y", "z"}
            if stray:
                raise ValueError(f"{label} must depend on x only, found {sorted(stray)}")
            unbound = prof.free_symbols - {"x"} - names.keys()
            if unbound:
                raise ValueError(f"{label} uses unbound parameter(s) {sorted(unbound)}")

    @classmethod
    def from_strings(cls, nu: str, mu: str, params: Mapping[str, float] | None = None) -> "MetricFamily":
        return cls(as_expr(nu), as_expr(mu), tuple(sorted((params or {}).items())))

    @property
    def bindings(self) -> dict[str, float]:
        return dict(self.params)

    @property
    def g(self) -> np.ndarray:
        return _metric_arrays(self)[0]

    @property
    def g_inv(self) -> np.ndarray:
        return _metric_arrays(self)[1]

    def lower(self, X: "VectorField") -> list[Expr]:
        g = self.g
        return [mul(g[a, a], X[a]) for a in range(DIM)]


@lru_cache(maxsize=128)
def _metric_arrays(m: MetricFamily) -> tuple[np.ndarray, np.ndarray]:
    g = zeros(2)
    ginv = zeros(2)
    e_nu, e_mu = exp(m.nu), exp(m.mu)
    diag = [neg(e_nu), ONE, e_mu, e_mu]
    inv = [neg(exp(neg(m.nu))), ONE, exp(neg(m.mu)), exp(neg(m.mu))]
    for a in range(DIM):
        g[a, a] = diag[a]
        ginv[a, a] = inv[a]
    return g, ginv


@dataclass(frozen=True)
class VectorField:
    """Contravariant components X^0..X^3 as expressions."""

    components: tuple[Expr, Expr, Expr, Expr]

    def __post_init__(self):
        comps = tuple(as_expr(c) for c in self.components)
        if len(comps) != DIM:
            raise ValueError("a vector field needs exactly four components")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components) -> "VectorField":
        return cls(tuple(components))

    def __getitem__(self, a: int) -> Expr:
        return self.components[a]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(add(p, q) for p, q in zip(self, other)))

    def scale(self, k) -> "VectorField":
        k = as_expr(k)
        return VectorField(tuple(mul(k, c) for c in self))

    @property
    def free_symbols(self) -> frozenset[str]:
        return frozenset().union(*(c.free_symbols for c in self))

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self) + ")"


def coordinate_field(a: int, factor: Expr | float = 1.0) -> VectorField:
    comps = [ZERO] * DIM
    comps[a] = as_expr(factor)
    return VectorField(tuple(comps))


@dataclass(frozen=True)
class CurvatureData:
    christoffel: np.ndarray
    riemann_updown: np.ndarray | None = field(default=None, repr=False)
    riemann_down: np.ndarray | None = field(default=None, repr=False)
    riemann_mixed2: np.ndarray | None = field(default=None, repr=False)


def _d(e: Expr, a: int) -> Expr:
    return differentiate(e, COORDS[a])


def _sum(terms) -> Expr:
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


@lru_cache(maxsize=128)
def christoffel(m: MetricFamily) -> CurvatureData:
    """Gamma^a_{bc} = 1/2 g^{ad} (g_{db,c} + g_{dc,b} - g_{bc,d})."""
    g, ginv = m.g, m.g_inv
    dg = np.empty((DIM,) * 3, dtype=object)  # dg[d, b, c] = g_{bc,d}
    for d in range(DIM):
        for b in range(DIM):
            for c in range(DIM):
                dg[d, b, c] = _d(g[b, c], d)
    gam = zeros(3)
    half = Const(0.5)
    for a in range(DIM):
        for b in range(DIM):
            for c in range(b, DIM):
                val = _sum(
                    mul(ginv[a, d], add(dg[c, d, b], sub(dg[b, d, c], dg[d, b, c])))
                    for d in range(DIM)
                    if not ginv[a, d].is_const(0.0)
                )
                val = mul(half, val)
                gam[a, b, c] = val
                gam[a, c, b] = val
    return CurvatureData(christoffel=gam)


@lru_cache(maxsize=128)
def riemann(m: MetricFamily) -> CurvatureData:
    """All index placements of the curvature tensor.

    R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
                + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
    """
    gam = christoffel(m).christoffel
    g, ginv = m.g, m.g_inv
    up = zeros(4)
    for a in range(DIM):
        for b in range(DIM):
            for c in range(DIM):
                for d in range(c + 1, DIM):
                    val = sub(_d(gam[a, d, b], c), _d(gam[a, c, b], d))
                    quad = _sum(
                        sub(mul(gam[a, c, e], gam[e, d, b]), mul(gam[a, d, e], gam[e, c, b]))
                        for e in range(DIM)
                    )
                    val = add(val, quad)
                    up[a, b, c, d] = val
                    up[a, b, d, c] = neg(val)
    down = zeros(4)
    mixed = zeros(4)
    for idx in np.ndindex(up.shape):
        a, b, c, d = idx
        down[idx] = _sum(mul(g[a, e], up[(e, b, c, d)]) for e in range(DIM) if not g[a, e].is_const(0.0))
        mixed[idx] = _sum(mul(ginv[b, e], up[(a, e, c, d)]) for e in range(DIM) if not ginv[b, e].is_const(0.0))
    return CurvatureData(christoffel=gam, riemann_updown=up, riemann_down=down, riemann_mixed2=mixed)


def covariant_derivative_vector(m: MetricFamily, X: VectorField) -> np.ndarray:
    """``out[a, b]`` is X_{a;b} = d_b X_a - Gamma^c_{ab} X_c."""
    gam = christoffel(m).christoffel
    low = m.lower(X)
    out = zeros(2)
    for a in range(DIM):
        for b in range(DIM):
            out[a, b] = sub(_d(low[a], b), _sum(mul(gam[c, a, b], low[c]) for c in range(DIM)))
    return out


def covariant_derivative_tensor2(m: MetricFamily, T: np.ndarray) -> np.ndarray:
    """``out[a, b, c]`` is T_{ab;c}."""
    gam = christoffel(m).christoffel
    out = zeros(3)
    for a in range(DIM):
        for b in range(DIM):
            for c in range(DIM):
                corr = _sum(
                    add(mul(gam[d, c, a], T[d, b]), mul(gam[d, c, b], T[a, d])) for d in range(DIM)
                )
                out[a, b, c] = sub(_d(T[a, b], c), corr)
    return out


def lie_derivative_metric(m: MetricFamily, X: VectorField) -> np.ndarray:
    """(L_X g)_{ab} = X_{a;b} + X_{b;a}."""
    nab = covariant_derivative_vector(m, X)
    out = zeros(2)
    for a in range(DIM):
        for b in range(a, DIM):
            out[a, b] = out[b, a] = add(nab[a, b], nab[b, a])
    return out


def lie_derivative_metric_coordinate(m: MetricFamily, X: VectorField) -> np.ndarray:
    """Coordinate formula X^c g_{ab,c} + g_{cb} X^c_{,a} + g_{ac} X^c_{,b}.

    Independent of the Christoffel symbols; used to cross-check
    :func:`lie_derivative_metric`.
    """
    g = m.g
    out = zeros(2)
    for a in range(DIM):
        for b in range(DIM):
            terms = [mul(X[c], _d(g[a, b], c)) for c in range(DIM)]
            terms += [mul(g[c, b], _d(X[c], a)) for c in range(DIM)]
            terms += [mul(g[a, c], _d(X[c], b)) for c in range(DIM)]
            out[a, b] = _sum(terms)
    return out


def contract_riemann(m: MetricFamily, X: VectorField, slots: Sequence[int] = (0, 1, 2, 3)) -> np.ndarray:
    """``out[a, b, c] = R_{...}X^d`` with (a, b, c, d) placed into the index
    slots given by ``slots`` (default R_{abcd} X^d)."""
    down = riemann(m).riemann_down
    out = zeros(3)
    for a in range(DIM):
        for b in range(DIM):
            for c in range(DIM):
                terms = []
                for d in range(DIM):
                    if X[d].is_const(0.0):
                        continue
                    free = (a, b, c, d)
                    idx = [0] * 4
                    for pos, slot in enumerate(slots):
                        idx[slot] = free[pos]
                    terms.append(mul(down[tuple(idx)], X[d]))
                out[a, b, c] = _sum(terms)
    return out


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^a = X^b d_b Y^a - Y^b d_b X^a."""
    comps = []
    for a in range(DIM):
        comps.append(
            _sum(sub(mul(X[b], _d(Y[a], b)), mul(Y[b], _d(X[a], b))) for b in range(DIM))
        )
    return VectorField(tuple(comps))


def euler_field() -> VectorField:
    return VectorField(tuple(Var(c) for c in COORDS))


__all__ = [
    "DIM",
    "MetricFamily",
    "VectorField",
    "CurvatureData",
    "christoffel",
    "riemann",
    "covariant_derivative_vector",
    "covariant_derivative_tensor2",
    "lie_derivative_metric",
    "lie_derivative_metric_coordinate",
    "contract_riemann",
    "lie_bracket",
    "coordinate_field",
    "euler_field",
    "zeros",
]
