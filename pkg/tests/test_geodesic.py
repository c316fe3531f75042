import math

import numpy as np
import pytest

from planeaffine.catalog import generator_catalog
from planeaffine.classifier import classify
from planeaffine.geodesic import DomainExit, affine_map_check, flow, integrate_geodesic
from planeaffine.geometry import MetricFamily, VectorField, euler_field
from planeaffine.symmetry import FieldClass
from profiles import case_metric

FLAT = MetricFamily.from_strings("0", "0")
STATIC = MetricFamily.from_strings("0", "x^2")
T_DT = VectorField.of("t", "0", "0", "0")
X_DOMAIN = (0.5, 3.0)


def test_flat_geodesic_is_straight():
    tr = integrate_geodesic(FLAT, [0, 0, 0, 0], [1, 0.5, 0, 0])
    expected = tr.taus[:, None] * np.array([1, 0.5, 0, 0])
    assert np.abs(tr.positions - expected).max() < 1e-14
    assert not tr.truncated


def test_time_is_affine_when_nu_constant():
    tr = integrate_geodesic(STATIC, [0, 1, 0.2, -0.1], [1.5, 0.3, 0.4, 0.2])
    assert np.abs(tr.velocities[:, 0] - 1.5).max() < 1e-12


def test_norm_conserved_on_case_c():
    m = case_metric("C_distinct")
    tr = integrate_geodesic(m, [0, 1.5, 0, 0], [0.5, 0.1, 0.2, 0.1], x_domain=X_DOMAIN)
    assert tr.norm_drift() < 1e-6


def test_fourth_order_convergence():
    m = case_metric("C_distinct")
    drift = [
        integrate_geodesic(m, [0, 1.5, 0, 0], [0.5, 0.1, 0.2, 0.1], (0, 1), h).norm_drift() for h in (0.04, 0.02)
    ]
    assert drift[0] / drift[1] > 8


def test_truncation_flag():
    tr = integrate_geodesic(FLAT, [0, 1, 0, 0], [0, -1, 0, 0], (0, 1), 1e-2, x_domain=X_DOMAIN)
    assert tr.truncated
    assert tr.positions[-1, 1] >= X_DOMAIN[0]
    with pytest.raises(DomainExit):
        integrate_geodesic(FLAT, [0, 0, 0, 0], [1, 0, 0, 0], x_domain=X_DOMAIN)


def test_flow_examples():
    p = np.array([0.3, 1.2, 0.1, 0.4])
    assert np.allclose(flow(STATIC, VectorField.of("1", "0", "0", "0"), p, 2.0), p + [2, 0, 0, 0], atol=1e-14)
    doubled = flow(STATIC, T_DT, [1, 1, 0, 0], math.log(2))
    assert doubled[0] == pytest.approx(2.0, rel=1e-12)
    assert np.array_equal(flow(STATIC, VectorField.of("0", "0", "0", "0"), p, 0.7), p)


@pytest.mark.parametrize("s", [1.0, 0.5, -0.3])
def test_flow_inverse(s):
    X = VectorField.of("0", "x*y", "z", "t")
    p = np.array([0.3, 1.2, 0.1, 0.4])
    back = flow(STATIC, X, flow(STATIC, X, p, s), -s)
    assert np.abs(back - p).max() < 1e-8


def test_flow_vectorised():
    pts = np.array([[0.0, 1.0, 0.5], [1.0, 1.5, 2.0], [0, 0, 0], [0, 0, 0]])
    out = flow(STATIC, T_DT, pts, 0.5)
    assert np.allclose(out[0], pts[0] * math.exp(0.5), rtol=1e-12)


def test_euler_homothety_on_flat():
    tr = integrate_geodesic(FLAT, [0, 1, 0, 0], [1, 0.5, 0.2, 0])
    rep = affine_map_check(FLAT, euler_field(), tr, 0.3)
    assert rep.passed
    assert rep.alpha == pytest.approx(math.exp(0.3), rel=1e-9)


def test_proper_affine_field_maps_geodesics():
    tr = integrate_geodesic(STATIC, [0, 1, 0.2, -0.1], [1.5, 0.3, 0.4, 0.2], x_domain=X_DOMAIN)
    rep = affine_map_check(STATIC, T_DT, tr, 0.5, x_domain=X_DOMAIN)
    assert rep.passed
    assert rep.deviation < 1e-4 and rep.fit_residual < 1e-4


def test_non_affine_field_fails():
    m = MetricFamily.from_strings("x", "0")
    tr = integrate_geodesic(m, [0, 1.5, 0.2, -0.1], [1.0, 0.3, 0.4, 0.2], x_domain=X_DOMAIN)
    rep = affine_map_check(m, T_DT, tr, 0.5, x_domain=X_DOMAIN)
    assert not rep.passed


@pytest.mark.parametrize(
    "label, v0",
    [("A1", [1.0, 0.1, 0.2, 0.1]), ("B2", [0.02, 0.1, 0.2, 0.1]), ("C_distinct", [1.0, 0.1, 0.2, 0.1])],
)
def test_killing_generators_pass(label, v0):
    m = case_metric(label)
    basis = generator_catalog(classify(m))
    tr = integrate_geodesic(m, [0, 1.8, 0.1, -0.1], v0, (0, 0.5), 1e-3, X_DOMAIN)
    assert not tr.truncated
    killing = [g.field for g in basis.accepted if g.verdict.classification is FieldClass.Killing]
    assert killing
    for X in killing:
        rep = affine_map_check(m, X, tr, 0.2, x_domain=X_DOMAIN)
        assert rep.passed, (str(X), rep)
