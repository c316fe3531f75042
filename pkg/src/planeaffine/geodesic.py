"""Geodesics and vector-field flows by fixed-step RK4, and a numerical test
that a flow maps affinely parametrised geodesics to affinely parametrised
geodesics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .exprcore import COORDS, compile_exprs
from .geometry import DIM, MetricFamily, VectorField, christoffel

DEFAULT_STEP = 1e-3
DEFAULT_TAU_SPAN = (0.0, 1.0)
DEVIATION_TOL = 1e-4
FIT_TOL = 1e-4


@dataclass(frozen=True)
class Trajectory:
    taus: np.ndarray  # (N,)
    positions: np.ndarray  # (N, 4)
    velocities: np.ndarray  # (N, 4)
    step: float
    metric: MetricFamily = field(repr=False)
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.taus)

    def norms(self) -> np.ndarray:
        """g(v, v) at every sample."""
        g = _metric_diag(self.metric)
        return _norm(g, self.positions.T, self.velocities.T)

    def norm_drift(self) -> float:
        n = self.norms()
        return float(np.max(np.abs(n - n[0])))


class DomainExit(RuntimeError):
    """An integral curve left the region where the fields are defined."""


@lru_cache(maxsize=64)
def _acceleration(m: MetricFamily):
    gam = christoffel(m).christoffel
    flat = [gam[a, b, c] for a in range(DIM) for b in range(DIM) for c in range(DIM)]
    fn = compile_exprs(flat, COORDS, m.bindings)

    def accel(pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            vals = np.array(fn(*pos)).reshape((DIM, DIM, DIM) + np.shape(pos)[1:])
        return -np.einsum("abc...,b...,c...->a...", vals, vel, vel)

    return accel


@lru_cache(maxsize=64)
def _metric_diag(m: MetricFamily):
    g = m.g
    return compile_exprs([g[a, a] for a in range(DIM)], COORDS, m.bindings)


def _norm(gfn, pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        gd = np.array(gfn(*pos))
    return np.sum(gd * vel * vel, axis=0)


def _vector_fn(m: MetricFamily, X: VectorField):
    return compile_exprs(list(X), COORDS, m.bindings)


def _outside(pos: np.ndarray, x_domain) -> bool:
    if not np.all(np.isfinite(pos)):
        return True
    if x_domain is None:
        return False
    lo, hi = x_domain
    return bool(np.any(pos[1] < lo) or np.any(pos[1] > hi))


def integrate_geodesic(
    m: MetricFamily,
    x0: Sequence[float],
    v0: Sequence[float],
    tau_span: tuple[float, float] = DEFAULT_TAU_SPAN,
    step: float = DEFAULT_STEP,
    x_domain: tuple[float, float] | None = None,
) -> Trajectory:
    """RK4 on x' = v, v'^a = -Gamma^a_{bc} v^b v^c.

    The step is shrunk slightly so that it divides the span. Leaving
    ``x_domain`` (or producing non-finite values) stops the integration and
    marks the trajectory truncated.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    t0, t1 = map(float, tau_span)
    if t1 <= t0:
        raise ValueError("tau_span must be increasing")
    pos = np.asarray(x0, dtype=float).copy()
    vel = np.asarray(v0, dtype=float).copy()
    if pos.shape != (DIM,) or vel.shape != (DIM,):
        raise ValueError("x0 and v0 need four components each")
    if _outside(pos, x_domain):
        raise DomainExit(f"start point {pos.tolist()} is outside the domain")
    n = max(1, math.ceil((t1 - t0) / step - 1e-9))
    h = (t1 - t0) / n
    acc = _acceleration(m)
    taus, ps, vs = [t0], [pos.copy()], [vel.copy()]
    truncated = False
    for i in range(n):
        k1x, k1v = vel, acc(pos, vel)
        k2x, k2v = vel + 0.5 * h * k1v, acc(pos + 0.5 * h * k1x, vel + 0.5 * h * k1v)
        k3x, k3v = vel + 0.5 * h * k2v, acc(pos + 0.5 * h * k2x, vel + 0.5 * h * k2v)
        k4x, k4v = vel + h * k3v, acc(pos + h * k3x, vel + h * k3v)
        new_pos = pos + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        new_vel = vel + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if _outside(new_pos, x_domain) or not np.all(np.isfinite(new_vel)):
            truncated = True
            break
        pos, vel = new_pos, new_vel
        taus.append(t0 + (i + 1) * h)
        ps.append(pos.copy())
        vs.append(vel.copy())
    return Trajectory(np.array(taus), np.array(ps), np.array(vs), h, m, truncated)


def flow(
    m: MetricFamily,
    X: VectorField,
    p: Sequence[float] | np.ndarray,
    s: float,
    step: float = DEFAULT_STEP,
) -> np.ndarray:
    """Point(s) reached by following X for parameter ``s`` (RK4).

    ``p`` is a 4-vector or a (4, N) array of starting points.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    pos = np.array(p, dtype=float)
    if pos.shape[0] != DIM:
        raise ValueError("points need four coordinates")
    if s == 0:
        return pos
    fn = _vector_fn(m, X)

    def vec(q):
        with np.errstate(all="ignore"):
            return np.array(fn(*q))

    n = max(1, math.ceil(abs(s) / step - 1e-9))
    h = s / n
    for _ in range(n):
        k1 = vec(pos)
        k2 = vec(pos + 0.5 * h * k1)
        k3 = vec(pos + 0.5 * h * k2)
        k4 = vec(pos + h * k3)
        pos = pos + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(pos)):
            raise DomainExit(f"flow of {X} left the region where it is defined")
    return pos


@dataclass(frozen=True)
class AffineMapReport:
    deviation: float
    alpha: float
    beta: float
    fit_residual: float
    norm_ratio_spread: float
    passed: bool
    samples: int
    reference_truncated: bool = False

    def as_dict(self) -> dict:
        return {
            "deviation": self.deviation,
            "alpha": self.alpha,
            "beta": self.beta,
            "fit_residual": self.fit_residual,
            "norm_ratio_spread": self.norm_ratio_spread,
            "passed": self.passed,
            "samples": self.samples,
            "reference_truncated": self.reference_truncated,
        }


def affine_map_check(
    m: MetricFamily,
    X: VectorField,
    traj: Trajectory,
    s: float,
    step: float | None = None,
    x_domain: tuple[float, float] | None = None,
    deviation_tol: float = DEVIATION_TOL,
    fit_tol: float = FIT_TOL,
) -> AffineMapReport:
    """Flow every sample of ``traj`` by ``s`` and compare with a geodesic.

    The reference geodesic starts at the first flowed point with a
    second-order one-sided difference velocity from the first three flowed
    points. The affine parameter of the image is recovered as
    tau' = int sigma dtau with sigma^2 = |g(v', v')| / |g(v, v)| and fitted by
    alpha tau + beta.
    """
    if len(traj) < 3:
        raise ValueError("trajectory needs at least three samples")
    h = traj.step if step is None else step
    moved = flow(m, X, traj.positions.T, s, h)  # (4, N)
    if _outside(moved, x_domain):
        raise DomainExit("flowed trajectory leaves the domain")
    taus = traj.taus
    dt = taus[1] - taus[0]
    v0 = (-3 * moved[:, 0] + 4 * moved[:, 1] - moved[:, 2]) / (2 * dt)
    ref = integrate_geodesic(m, moved[:, 0], v0, (taus[0], taus[-1]), dt, x_domain)
    n = min(len(ref), moved.shape[1])
    deviation = float(np.max(np.abs(ref.positions[:n].T - moved[:, :n])))

    gfn = _metric_diag(m)
    vel_moved = np.gradient(moved, taus, axis=1, edge_order=2)
    before = np.abs(_norm(gfn, traj.positions.T, traj.velocities.T))
    after = np.abs(_norm(gfn, moved, vel_moved))
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = np.sqrt(after / before)
    if not np.all(np.isfinite(sigma)):
        raise ValueError("the check needs a non-null geodesic")
    tau_new = np.concatenate([[0.0], np.cumsum(0.5 * (sigma[1:] + sigma[:-1]) * np.diff(taus))])
    A = np.vstack([taus, np.ones_like(taus)]).T
    (alpha, beta), *_ = np.linalg.lstsq(A, tau_new, rcond=None)
    fit_residual = float(np.max(np.abs(A @ np.array([alpha, beta]) - tau_new)))
    spread = float((sigma.max() - sigma.min()) / max(sigma.mean(), 1e-300))
    passed = deviation < deviation_tol and fit_residual < fit_tol and not ref.truncated
    return AffineMapReport(
        deviation, float(alpha), float(beta), fit_residual, spread, passed, n, ref.truncated
    )


__all__ = [
    "Trajectory",
    "AffineMapReport",
    "DomainExit",
    "integrate_geodesic",
    "flow",
    "affine_map_check",
    "DEFAULT_STEP",
]
