"""Example metrics per case, a seeded generator of random profiles, and a
finite-difference curvature oracle that never touches symbolic derivatives."""

from __future__ import annotations

import numpy as np

from planeaffine.exprcore import COORDS, compile_exprs
from planeaffine.geometry import DIM, MetricFamily

CASE_PROFILES = {
    "Flat": ("0", "0", {}),
    "A1": ("0", "a*x + b", {"a": 1.0, "b": 0.0}),
    "A2i": ("0", "x^2", {}),
    "A2ii": ("0", "log((a*x + b)^2)", {"a": 1.0, "b": 1.0}),
    "B1i": ("log(cosh(x)^2)", "0", {}),
    "B1ii": ("log(sinh(x)^2)", "0", {}),
    "B1iii": ("a*x + b", "0", {"a": 1.0, "b": 0.0}),
    "B2": ("x^2", "0", {}),
    "C_distinct": ("log((0.5*x + 1)^2)", "log((1.5*x + 2)^2)", {}),
    "C_equal": ("log((0.5*x + 1)^2)", "log((0.5*x + 1)^2)", {}),
    "GenericNoSpecial": ("x^2", "x", {}),
}

AFFINE_CASES = [k for k in CASE_PROFILES if k not in ("Flat", "GenericNoSpecial")]


def case_metric(label: str) -> MetricFamily:
    nu, mu, params = CASE_PROFILES[label]
    return MetricFamily.from_strings(nu, mu, params)


_TEMPLATES = (
    "{p}*x^2 + {q}*x",
    "{p}*sin({q}*x) + x",
    "{p}*log(x + {q})",
    "{p}*exp({q}*x/3)",
    "{p}*x^3/4 + {q}",
    "{p}*cosh({q}*x/2)",
    "{p}*sqrt(x + {q})",
)


def random_profiles(count: int = 20, seed: int = 7) -> list[MetricFamily]:
    """Profiles with both functions non-constant and no special relation."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        pair = []
        for _ in range(2):
            tmpl = _TEMPLATES[rng.integers(len(_TEMPLATES))]
            p = round(float(rng.uniform(0.3, 1.5)) * float(rng.choice([-1, 1])), 3)
            q = round(float(rng.uniform(0.5, 1.5)), 3)
            pair.append(tmpl.format(p=p, q=q))
        out.append(MetricFamily.from_strings(*pair))
    return out


class FDCurvature:
    """Christoffel symbols and curvature by central differences of g."""

    def __init__(self, m: MetricFamily, inner: float = 1e-4, outer: float = 1e-3):
        g = m.g
        self._gfun = compile_exprs([g[a, b] for a in range(DIM) for b in range(DIM)], COORDS, m.bindings)
        self.inner = inner
        self.outer = outer

    def metric(self, p) -> np.ndarray:
        return np.array(self._gfun(*p), dtype=float).reshape(DIM, DIM)

    def christoffel(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        h = self.inner
        dg = np.empty((DIM, DIM, DIM))  # dg[c, a, b] = g_{ab,c}
        for c in range(DIM):
            e = np.zeros(DIM)
            e[c] = h
            dg[c] = (self.metric(p + e) - self.metric(p - e)) / (2 * h)
        ginv = np.linalg.inv(self.metric(p))
        low = np.empty((DIM, DIM, DIM))  # Gamma_{dbc}
        for d in range(DIM):
            for b in range(DIM):
                for c in range(DIM):
                    low[d, b, c] = 0.5 * (dg[c, d, b] + dg[b, d, c] - dg[d, b, c])
        return np.einsum("ad,dbc->abc", ginv, low)

    def riemann(self, p) -> np.ndarray:
        """R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}."""
        p = np.asarray(p, dtype=float)
        h = self.outer
        dgam = np.empty((DIM, DIM, DIM, DIM))  # dgam[c, a, b, d] = d_c Gamma^a_{bd}
        for c in range(DIM):
            e = np.zeros(DIM)
            e[c] = h
            dgam[c] = (self.christoffel(p + e) - self.christoffel(p - e)) / (2 * h)
        gam = self.christoffel(p)
        riem = np.empty((DIM,) * 4)
        for a in range(DIM):
            for b in range(DIM):
                for c in range(DIM):
                    for d in range(DIM):
                        riem[a, b, c, d] = (
                            dgam[c, a, d, b]
                            - dgam[d, a, c, b]
                            + gam[a, c, :] @ gam[:, d, b]
                            - gam[a, d, :] @ gam[:, c, b]
                        )
        return riem
