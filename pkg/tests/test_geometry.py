import numpy as np
import pytest

from planeaffine.exprcore import SampleSet, evaluate, parse
from planeaffine.geometry import (
    DIM,
    MetricFamily,
    VectorField,
    christoffel,
    covariant_derivative_tensor2,
    lie_bracket,
    lie_derivative_metric,
    lie_derivative_metric_coordinate,
    riemann,
)
from profiles import FDCurvature, case_metric, random_profiles

ORACLE_PROFILES = random_profiles(6, seed=11) + [case_metric(k) for k in ("A1", "B1i", "C_distinct")]


def _points(m, count=8, seed=5):
    S = SampleSet.draw(params=m.bindings, samples=count, seed=seed)
    return S, [tuple(S.columns[c][i] for c in "txyz") for i in range(count)]


@pytest.mark.parametrize("m", ORACLE_PROFILES, ids=lambda m: f"{m.nu}|{m.mu}")
def test_symbolic_curvature_matches_finite_differences(m):
    fd = FDCurvature(m)
    S, pts = _points(m)
    gam = S.tensor(christoffel(m).christoffel)
    riem = S.tensor(riemann(m).riemann_updown)
    for i, p in enumerate(pts):
        g_fd = fd.christoffel(p)
        r_fd = fd.riemann(p)
        g_scale = max(1.0, np.abs(gam[..., i]).max())
        r_scale = max(1.0, np.abs(riem[..., i]).max())
        assert np.abs(gam[..., i] - g_fd).max() <= 1e-4 * g_scale
        assert np.abs(riem[..., i] - r_fd).max() <= 1e-4 * r_scale


def test_frozen_curvature_values():
    # nu = x^2, mu = x at x = 1:
    #   R^{01}_{01} = -(2nu'' + nu'^2)/4 = -2,  R^{02}_{02} = -nu'mu'/4 = -1/2
    #   R^{12}_{12} = -(2mu'' + mu'^2)/4 = -1/4, R^{23}_{23} = -mu'^2/4 = -1/4
    m = MetricFamily.from_strings("x^2", "x")
    mixed = riemann(m).riemann_mixed2
    at = {"t": 0.2, "x": 1.0, "y": 0.3, "z": -0.4}
    assert evaluate(mixed[0, 1, 0, 1], at) == pytest.approx(-2.0, rel=1e-13)
    assert evaluate(mixed[0, 2, 0, 2], at) == pytest.approx(-0.5, rel=1e-13)
    assert evaluate(mixed[1, 2, 1, 2], at) == pytest.approx(-0.25, rel=1e-13)
    assert evaluate(mixed[2, 3, 2, 3], at) == pytest.approx(-0.25, rel=1e-13)


def test_christoffel_known_entries():
    # Gamma^0_{01} = nu'/2, Gamma^1_{00} = nu' e^nu / 2, Gamma^1_{22} = -mu' e^mu / 2
    m = MetricFamily.from_strings("x^2", "x")
    gam = christoffel(m).christoffel
    x = 1.3
    at = {"x": x}
    assert evaluate(gam[0, 0, 1], at) == pytest.approx(x, rel=1e-14)
    assert evaluate(gam[1, 0, 0], at) == pytest.approx(x * np.exp(x * x), rel=1e-14)
    assert evaluate(gam[1, 2, 2], at) == pytest.approx(-0.5 * np.exp(x), rel=1e-14)
    assert evaluate(gam[2, 1, 2], at) == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("m", random_profiles(5, seed=3), ids=lambda m: f"{m.nu}|{m.mu}")
def test_riemann_symmetries_and_bianchi(m):
    S = SampleSet.draw(params=m.bindings)
    riem = S.tensor(riemann(m).riemann_down)
    scale = 1.0 + np.abs(riem).max()
    tol = 1e-9 * scale
    assert np.abs(riem + riem.transpose(1, 0, 2, 3, 4)).max() <= tol
    assert np.abs(riem + riem.transpose(0, 1, 3, 2, 4)).max() <= tol
    assert np.abs(riem - riem.transpose(2, 3, 0, 1, 4)).max() <= tol
    cyc = riem + riem.transpose(0, 2, 3, 1, 4) + riem.transpose(0, 3, 1, 2, 4)
    assert np.abs(cyc).max() <= tol


@pytest.mark.parametrize("m", random_profiles(3, seed=4), ids=lambda m: f"{m.nu}|{m.mu}")
def test_metric_compatibility(m):
    S = SampleSet.draw(params=m.bindings)
    dg = covariant_derivative_tensor2(m, m.g)
    assert all(S.is_zero(e) for e in dg.flat)


def test_lie_derivative_two_ways():
    m = MetricFamily.from_strings("x^2", "sin(x) + x")
    X = VectorField.of("t*x", "y^2", "exp(z)*x", "t")
    S = SampleSet.draw()
    a = lie_derivative_metric(m, X)
    b = lie_derivative_metric_coordinate(m, X)
    for i in range(DIM):
        for j in range(DIM):
            assert S.is_zero(a[i, j] - b[i, j])


def test_lie_bracket_coordinates():
    X = VectorField.of("1", "0", "0", "0")
    Y = VectorField.of("t", "0", "0", "0")
    assert [str(c) for c in lie_bracket(X, Y)] == ["1", "0", "0", "0"]
    rot = VectorField.of("0", "0", "-z", "y")
    dy = VectorField.of("0", "0", "1", "0")
    br = lie_bracket(dy, rot)
    assert [evaluate(c, {}) for c in br] == [0.0, 0.0, 0.0, 1.0]


def test_metric_rejects_bad_profiles():
    with pytest.raises(ValueError):
        MetricFamily.from_strings("t*x", "0")
    with pytest.raises(ValueError):
        MetricFamily.from_strings("a*x", "0")
    m = MetricFamily.from_strings("a*x", "0", {"a": 2.0})
    assert m.bindings == {"a": 2.0}
    assert m.nu == parse("a*x")
