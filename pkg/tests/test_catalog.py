import itertools

import numpy as np
import pytest

from planeaffine.catalog import (
    algebra_summary,
    catalog_entries,
    format_discrepancy_log,
    generator_catalog,
    independent,
    repair_variants,
)
from planeaffine.classifier import classify
from planeaffine.exprcore import SampleSet
from planeaffine.geometry import VectorField, coordinate_field
from planeaffine.symmetry import FieldClass, affine_span, bracket_residual, decompose_hF
from profiles import AFFINE_CASES, case_metric

# dimensions of the affine algebra established by an independent null-space
# solve over a polynomial/exponential ansatz (see test_independent_dimension)
VERIFIED_DIM = {
    "A1": 8,
    "A2i": 5,
    "A2ii": 6,
    "B1i": 9,
    "B1ii": 9,
    "B1iii": 9,
    "B2": 7,
    "C_distinct": 4,
    "C_equal": 7,
    "GenericNoSpecial": 4,
}

SUMMARY = {
    "A1": (8, 7, 0, 1),
    "A2i": (5, 4, 0, 1),
    "A2ii": (6, 4, 1, 1),
    "B1i": (9, 6, 0, 3),
    "B1ii": (9, 6, 0, 3),
    "B1iii": (9, 6, 0, 3),
    "B2": (7, 4, 0, 3),
    "C_distinct": (4, 4, 0, 0),
    "C_equal": (7, 6, 1, 0),
    "GenericNoSpecial": (4, 4, 0, 0),
}

_BASES = {}


def basis_for(label):
    if label not in _BASES:
        _BASES[label] = generator_catalog(classify(case_metric(label)))
    return _BASES[label]


@pytest.mark.parametrize("label", sorted(VERIFIED_DIM))
def test_summary(label):
    s = algebra_summary(basis_for(label))
    assert (s.dim_total, s.dim_killing, s.dim_homothetic_extra, s.dim_proper_affine_extra) == SUMMARY[label]


@pytest.mark.parametrize("label", sorted(VERIFIED_DIM))
def test_accepted_generators_are_affine_and_independent(label):
    b = basis_for(label)
    assert all(g.verdict.is_affine for g in b.accepted)
    S = SampleSet.draw(params=case_metric(label).bindings, samples=4, seed=43)
    assert independent(b.fields, S)
    for g in b.accepted:
        if g.verdict.classification is not FieldClass.NotAffine:
            d = decompose_hF(case_metric(label), g.field)
            assert d.h_parallel


@pytest.mark.parametrize("label", AFFINE_CASES)
def test_closure(label):
    b = basis_for(label)
    m = case_metric(label)
    S = SampleSet.draw(params=m.bindings)
    for X, Y in itertools.combinations(b.fields, 2):
        assert bracket_residual(m, X, Y, S) < 1e-6


def test_flat_is_rejected():
    with pytest.raises(ValueError):
        catalog_entries(classify(case_metric("Flat")))


def test_printed_forms_that_verify_unchanged():
    b = basis_for("A2i")
    assert [g.status for g in b.generators] == ["verified"] * 5
    assert b.discrepancies == ()


def test_b1iii_corrections_logged():
    b = basis_for("B1iii")
    fixed = {d.constant: d for d in b.discrepancies}
    assert set(fixed) == {"c7", "c8"}
    assert str(fixed["c8"].corrected) == "((-0.5)*t, 1, 0, 0)"
    assert fixed["c7"].residual < 1e-9


def test_c_equal_rotation_repaired_by_variable_swap():
    b = basis_for("C_equal")
    d = {r.constant: r for r in b.discrepancies}["c4"]
    assert d.method == "swap y<->z in X3"
    assert [str(c) for c in d.corrected] == ["0", "0", "-z", "y"]


def test_a2ii_rejects_non_affine_boosts():
    b = basis_for("A2ii")
    rejected = [g.constant for g in b.generators if g.status == "rejected"]
    assert rejected == ["c5", "c7"]


def test_discrepancy_log_format():
    text = format_discrepancy_log(basis_for("B1iii").discrepancies)
    first = text.split("\n\n")[0].splitlines()
    assert [line.split(":")[0] for line in first] == [
        "case",
        "form",
        "constant",
        "original",
        "corrected",
        "residual",
        "method",
    ]
    assert format_discrepancy_log([]) == ""


def test_repair_variants_are_distinct():
    X = VectorField.of("y", "0", "t", "z")
    seen = [v for _, v in repair_variants(X)]
    assert len(seen) == len(set(seen))
    assert X not in seen


def test_independence_check():
    S = SampleSet.draw(samples=4, seed=43)
    a, b = coordinate_field(0), VectorField.of("t", "0", "0", "0")
    assert independent([a, b], S)
    assert not independent([a, b, VectorField.of("2 + 3*t", "0", "0", "0")], S)


def _ansatz(m, label):
    """Broad polynomial ansatz with the case's exponential factors."""
    mono = ["1", "t", "x", "y", "z", "t^2", "t*x", "t*y", "t*z", "x*y", "x*z", "y^2", "y*z", "z^2"]
    extra = []
    k = classify(m).constants
    if label == "A1":
        extra = [f"exp(-{k['a']}*x)"]
    if label == "B1iii":
        extra = [f"exp(-{k['a']}*x)"]
    if label in ("B1i", "B1ii"):
        extra = ["cos(t)*tanh", "sin(t)*tanh", "cosh(t)*coth", "sinh(t)*coth", "cos(t)", "sin(t)", "cosh(t)", "sinh(t)"]
    out = []
    for a in range(4):
        for e in mono + extra:
            e = e.replace("*tanh", "*sinh(x)/cosh(x)").replace("*coth", "*cosh(x)/sinh(x)")
            comps = ["0"] * 4
            comps[a] = e
            out.append(VectorField.of(*comps))
    return out


@pytest.mark.parametrize("label", ["A1", "A2i", "A2ii", "B1iii", "B2", "C_distinct", "C_equal", "GenericNoSpecial"])
def test_independent_dimension(label):
    """Null-space solve over an ansatz wide enough to hold every generator."""
    m = case_metric(label)
    S = SampleSet.draw(params=m.bindings, samples=24, seed=3)
    null = affine_span(m, _ansatz(m, label), S)
    assert null.shape[0] == VERIFIED_DIM[label]


def test_independent_dimension_b1_trig():
    # B1i on nu = log(cosh(x)^2): the t-dependence is cos/sin(t) for c = 2
    m = case_metric("B1i")
    S = SampleSet.draw(params=m.bindings, samples=24, seed=3)
    null = affine_span(m, _ansatz(m, "B1i"), S)
    assert null.shape[0] == 9
    assert np.all(np.isfinite(null))
