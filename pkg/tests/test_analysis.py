import math
from dataclasses import replace
from fractions import Fraction

import pytest

from gptent.analysis import find_concavity_violation, verify_witness, witness_report
from gptent.catalog import firefly_space, pentagon, square_prism, tetrahedron, unit_square
from gptent.core_model import make_functional
from gptent.geometry import enumerate_vertices, mixing_entropy, polytope_from_vertices
from gptent.models import ConcavityWitness, NotApplicable, NotApplicableReason

F = Fraction


class TestUnitSquare:
    def test_witness(self, square):
        witness = find_concavity_violation(square)
        assert isinstance(witness, ConcavityWitness)
        assert witness.rho == (F(1, 4), F(1, 4))
        assert [p for p, _ in witness.mixture] == [F(1, 2), F(1, 2)]
        assert witness.s_rho == pytest.approx(0.8112781244591328, abs=1e-9)
        assert witness.mixture_avg == pytest.approx(1.0, abs=1e-9)
        assert witness.gap == pytest.approx(0.1887218755408672, abs=1e-9)

    def test_trace(self, square):
        trace = find_concavity_violation(square).trace
        assert trace.facet_1 == (0, 1)
        assert trace.facet_2 == (0, 2)
        assert trace.apex == 3
        assert trace.rho_1 == (F(1, 2), F(0))
        assert trace.rho_2 == (F(0), F(1, 2))
        assert trace.rho_3 == (F(0), F(0))
        assert trace.segment == ((F(0), F(0)), (F(1, 4), F(1, 4)))
        assert trace.case == "ii"
        assert trace.recursed_into == ()

    def test_verified(self, square):
        assert verify_witness(square, find_concavity_violation(square))


@pytest.mark.parametrize("build", [unit_square, pentagon, square_prism, lambda: enumerate_vertices(firefly_space())])
def test_non_simplicial_polytopes_get_verified_witnesses(build):
    poly = build()
    witness = find_concavity_violation(poly)
    assert isinstance(witness, ConcavityWitness)
    assert witness.gap > 1e-9
    assert sum(p for p, _ in witness.mixture) == 1
    assert verify_witness(poly, witness)


@pytest.mark.parametrize("build", [unit_square, pentagon, square_prism, lambda: enumerate_vertices(firefly_space())])
def test_facet_and_ridge_barycenters(build):
    poly = build()
    trace = find_concavity_violation(poly).trace
    d = len(trace.facet_1)
    assert len(trace.facet_2) == d
    assert mixing_entropy(poly, trace.rho_1).bits == pytest.approx(math.log2(d), abs=1e-9)
    assert mixing_entropy(poly, trace.rho_2).bits == pytest.approx(math.log2(d), abs=1e-9)
    assert mixing_entropy(poly, trace.rho_3).bits == pytest.approx(math.log2(d - 1), abs=1e-9)


def test_firefly_barycenters_of_triangular_facets():
    poly = enumerate_vertices(firefly_space())
    trace = find_concavity_violation(poly).trace
    assert trace.recursed_into == ()
    assert len(trace.facet_1) == 3
    assert mixing_entropy(poly, trace.rho_1).bits == pytest.approx(math.log2(3), abs=1e-9)
    assert mixing_entropy(poly, trace.rho_3).bits == pytest.approx(1.0, abs=1e-9)


def test_prism_recurses_into_a_square_face():
    witness = find_concavity_violation(square_prism())
    assert len(witness.trace.recursed_into) == 1
    assert len(witness.trace.recursed_into[0]) == 4


@pytest.mark.parametrize(
    "build, reason",
    [
        (tetrahedron, NotApplicableReason.SIMPLEX),
        (lambda: polytope_from_vertices(("x",), [(0,), (1,)]), NotApplicableReason.SIMPLEX),
        (lambda: polytope_from_vertices(("x", "y"), [(0, 0)]), NotApplicableReason.DEGENERATE),
        (lambda: polytope_from_vertices(("x", "y"), [(0, 0), (1, 0), (0, 1)]), NotApplicableReason.SIMPLEX),
    ],
)
def test_simplices_are_not_applicable(build, reason):
    result = find_concavity_violation(build())
    assert isinstance(result, NotApplicable)
    assert result.reason is reason


class TestVerifyWitness:
    def test_tampered_weights_fail(self, square):
        witness = find_concavity_violation(square)
        tampered = replace(witness, mixture=((F(1, 3), witness.mixture[0][1]), (F(2, 3), witness.mixture[1][1])))
        assert not verify_witness(square, tampered)

    def test_wrong_rho_fails(self, square):
        witness = find_concavity_violation(square)
        assert not verify_witness(square, replace(witness, rho=(F(1, 2), F(1, 2))))

    def test_point_outside_fails(self, square):
        witness = find_concavity_violation(square)
        outside = replace(witness, rho=(F(2), F(2)), mixture=((F(1), (F(2), F(2))),))
        assert not verify_witness(square, outside)

    def test_renyi_functional(self, square):
        witness = find_concavity_violation(square)
        assert verify_witness(square, witness, make_functional("renyi", 2))


class TestReport:
    def test_applicable(self, square):
        report = witness_report(square, find_concavity_violation(square))
        assert report.applicable
        assert report.verified
        assert report.rho == ["1/4", "1/4"]
        assert report.case == "ii"
        assert report.trace["apex"] == 3
        assert report.mixture[0] == {"p": "1/2", "point": ["1/2", "0"]}

    def test_not_applicable(self):
        report = witness_report(tetrahedron(), find_concavity_violation(tetrahedron()))
        assert not report.applicable
        assert report.reason.startswith("simplex")
        assert report.verified is None
