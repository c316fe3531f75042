import numpy as np
import pytest

from planeaffine.curvmatrix import (
    CurvatureStructureError,
    KernelBasis,
    assemble6,
    causal_tag,
    covariantly_constant_vectors,
    curvature_kernel,
    generic_rank,
    hint_wording,
    holonomy_hint,
    numerical_rank,
)
from planeaffine.exprcore import SampleSet, evaluate
from planeaffine.geometry import CurvatureData, riemann, zeros
from profiles import case_metric, random_profiles


def test_numerical_rank_thresholds():
    assert numerical_rank(np.zeros((6, 6))) == 0
    assert numerical_rank(np.diag([1.0, 1e-3, 0, 0, 0, 0])) == 2
    assert numerical_rank(np.diag([1.0, 1e-10, 0, 0, 0, 0])) == 1
    # absolute floor: a uniformly tiny matrix is numerically zero
    assert numerical_rank(np.diag([1e-12, 1e-12, 0, 0, 0, 0])) == 0
    with pytest.raises(ValueError):
        numerical_rank(np.full((6, 6), np.nan))


@pytest.mark.parametrize("m", random_profiles(5, seed=9), ids=lambda m: f"{m.nu}|{m.mu}")
def test_matrix_pattern(m):
    S = SampleSet.draw(params=m.bindings)
    mat = assemble6(riemann(m), S)
    e = S.tensor(mat.entries)
    off = e.copy()
    for i in range(6):
        off[i, i] = 0
    assert np.abs(off).max() <= 1e-9
    assert np.allclose(e[1, 1], e[2, 2], rtol=1e-12, atol=1e-12)
    assert np.allclose(e[3, 3], e[4, 4], rtol=1e-12, atol=1e-12)


def test_alpha_formulas():
    m = case_metric("GenericNoSpecial")  # nu = x^2, mu = x
    a1, a2, a3, a4 = assemble6(riemann(m)).alphas
    x = 2.0
    assert evaluate(a1, {"x": x}) == pytest.approx(-(4 + 16) / 4)
    assert evaluate(a2, {"x": x}) == pytest.approx(-(2 * x) / 4)
    assert evaluate(a3, {"x": x}) == pytest.approx(-0.25)
    assert evaluate(a4, {"x": x}) == pytest.approx(-0.25)


def test_structure_violation_detected():
    c = riemann(case_metric("GenericNoSpecial"))
    mixed = c.riemann_mixed2.copy()
    mixed[0, 1, 0, 2] = mixed[0, 1, 0, 1]
    bad = CurvatureData(c.christoffel, riemann_mixed2=mixed)
    with pytest.raises(CurvatureStructureError):
        assemble6(bad, SampleSet.draw())


@pytest.mark.parametrize(
    "label, rank",
    [("Flat", 0), ("A1", 3), ("A2i", 3), ("A2ii", 1), ("B1i", 1), ("B2", 1), ("C_distinct", 3), ("C_equal", 3)],
)
def test_rank_per_case(label, rank):
    m = case_metric(label)
    assert generic_rank(assemble6(riemann(m)), params=m.bindings) == rank


def test_kernel_a2ii_two_dimensional():
    m = case_metric("A2ii")
    k = curvature_kernel(riemann(m), m)
    assert k.dim == 2
    assert sorted(k.tags) == ["spacelike", "timelike"]
    np.testing.assert_allclose(np.abs(np.array(k.vectors)), [[1, 0, 0, 0], [0, 1, 0, 0]], atol=1e-12)


def test_kernel_case_c_spacelike_not_constant():
    m = case_metric("C_distinct")
    k = curvature_kernel(riemann(m), m)
    assert k.dim == 1 and k.tags == ("spacelike",)
    np.testing.assert_allclose(np.abs(k.vectors[0]), [0, 1, 0, 0], atol=1e-12)
    assert covariantly_constant_vectors(m) == []


def test_covariantly_constant_fields():
    a = covariantly_constant_vectors(case_metric("A2i"))
    assert [(c.direction, c.tag) for c in a] == [("t", "timelike")]
    b = covariantly_constant_vectors(case_metric("B1i"))
    assert [(c.direction, c.tag) for c in b] == [("y", "spacelike"), ("z", "spacelike")]


def test_causal_tag():
    g = np.array([-1.0, 1.0, 1.0, 1.0])
    assert causal_tag(g, np.array([1.0, 0, 0, 0])) == "timelike"
    assert causal_tag(g, np.array([0, 0, 1.0, 0])) == "spacelike"
    assert causal_tag(g, np.array([1.0, 1.0, 0, 0])) == "null"


def test_holonomy_hints():
    empty = KernelBasis((), ())
    assert holonomy_hint(empty, []) == "general"
    flat = KernelBasis(tuple(tuple(r) for r in np.eye(4)), ("timelike",) + ("spacelike",) * 3)
    assert holonomy_hint(flat, []) == "flat"
    m = case_metric("B1i")
    c = riemann(m)
    assert holonomy_hint(curvature_kernel(c, m), covariantly_constant_vectors(m)) == "R2"
    assert hint_wording("R2") == "consistent with type R2"
    assert hint_wording("general") == "general"


def test_rank_zero_for_zero_tensor():
    c = CurvatureData(zeros(3), riemann_mixed2=zeros(4))
    assert generic_rank(assemble6(c)) == 0
