from fractions import Fraction

import pytest

from gptent.catalog import (
    bit_space,
    classical_space,
    classical_states,
    pr_parties,
    squit_space,
)
from gptent.composite import (
    adaptive_product,
    adaptive_tests,
    available_tests,
    brute_force_entropy,
    cartesian_product,
    composite_test_space,
    conditional,
    fr_product,
    is_nonsignaling,
    joint_measurement_entropy,
    marginal,
    product_state,
    product_tests,
    resolve_subset,
    validate_conditionals,
    validate_joint_state,
)
from gptent.errors import ModelError, SignalingError, StateValidationError
from gptent.models import CompositeMode, CompositeSystem, JointState, State

F = Fraction


# Alice's marginal on a1 depends on Bob's test choice
_SIGNALING_CELLS = {("a1", "b1"), ("a2", "b1"), ("a1'", "b2"), ("a2", "b2")}


def _squit_pair():
    return squit_space("A"), squit_space("B", ("c", "c'"), ("d", "d'"))


class TestTestFamilies:
    def test_fr_squit_squit_has_twelve_tests(self):
        a, b = _squit_pair()
        assert len(list(adaptive_tests(fr_product(a, b)))) == 12

    def test_fr_bit_squit_has_four_tests(self):
        _, b = _squit_pair()
        assert len(list(adaptive_tests(fr_product(bit_space(), b)))) == 4

    def test_cartesian_has_only_product_tests(self):
        a, b = _squit_pair()
        system = cartesian_product(a, b)
        assert len(available_tests(system)) == 4
        assert all(len(t.leaves) == 4 for t in available_tests(system))

    def test_product_tests_are_in_the_fr_family(self):
        a, b = _squit_pair()
        system = fr_product(a, b)
        family = set(adaptive_tests(system))
        assert set(product_tests(system)) <= family

    def test_every_test_covers_each_branch(self):
        a, b = _squit_pair()
        for test in adaptive_tests(fr_product(a, b)):
            assert len(test.leaf_set) == 4
            assert sum(1 for leaf in test.leaves if leaf[0] in ("a", "a'")) in (0, 2, 4)

    def test_fr_needs_two_components(self):
        with pytest.raises(ModelError):
            CompositeSystem(components=(bit_space(), bit_space(), bit_space()), mode=CompositeMode.FOULIS_RANDALL)

    def test_duplicate_component_names_fall_back_to_letters(self):
        system = adaptive_product([bit_space(), bit_space(), bit_space()])
        assert system.names == ("A", "B", "C")

    def test_composite_test_space(self):
        a, b = _squit_pair()
        space = composite_test_space(fr_product(a, b))
        assert len(space.tests) == 12
        assert len(space.outcomes) == 16
        assert "a,c" in space.outcomes

    def test_resolve_subset(self, example4):
        assert resolve_subset(example4.system, "C,A") == (0, 2)
        assert resolve_subset(example4.system, 1) == (1,)
        assert resolve_subset(example4.system, ["B", "2"]) == (1, 2)
        with pytest.raises(ModelError):
            resolve_subset(example4.system, "D")


class TestJointStates:
    def test_pr_box_is_nonsignaling(self, pr_joint):
        assert is_nonsignaling(pr_joint) is None
        assert set(pr_joint.values) == {F(0), F(1, 2)}

    def test_signaling_state_is_rejected(self):
        a, b = pr_parties()
        system = fr_product(a, b, names=("A", "B"))
        with pytest.raises(SignalingError) as info:
            validate_joint_state(system, {cell: int(cell in _SIGNALING_CELLS) for cell in system.cells})
        violation = info.value.violation
        assert violation.subset == (0,)
        assert violation.sums[0] != violation.sums[1]

    def test_normalization_is_checked_per_product_test(self):
        system = fr_product(bit_space("A"), bit_space("B"))
        with pytest.raises(StateValidationError) as info:
            validate_joint_state(system, {"0,0": "1/2", "0,1": "1/2", "1,0": "1/2", "1,1": 0})
        assert [v.kind for v in info.value.violations] == ["normalization"]

    def test_missing_cell(self):
        system = fr_product(bit_space("A"), bit_space("B"))
        with pytest.raises(StateValidationError) as info:
            validate_joint_state(system, {"0,0": 1, "0,1": 0, "1,0": 0})
        assert info.value.violations[0].kind == "missing"

    def test_string_and_tuple_keys_agree(self):
        system = fr_product(bit_space("A"), bit_space("B"))
        by_string = validate_joint_state(system, {"0,0": "1/2", "0,1": 0, "1,0": 0, "1,1": "1/2"})
        by_tuple = validate_joint_state(system, {("0", "0"): F(1, 2), ("0", "1"): 0, ("1", "0"): 0, ("1", "1"): F(1, 2)})
        assert by_string == by_tuple

    def test_product_state(self, squit_named):
        joint = product_state([squit_named["alpha1"], squit_named["mixed"]], names=("A", "B"))
        assert joint.system.mode is CompositeMode.FOULIS_RANDALL
        assert joint[("a", "b")] == F(1, 2)
        assert joint[("a'", "a")] == 0
        assert is_nonsignaling(joint) is None


class TestMarginalsAndConditionals:
    def test_marginals_of_pr_box_are_uniform(self, pr_joint):
        alice = marginal(pr_joint, "A")
        assert isinstance(alice, State)
        assert set(alice.values) == {F(1, 2)}

    def test_full_marginal_is_the_state(self, pr_joint):
        assert marginal(pr_joint, "A,B") is pr_joint

    def test_two_component_marginal_of_tripartite_state(self, example4):
        reduced = marginal(example4, "A,C")
        assert isinstance(reduced, JointState)
        assert reduced.system.names == ("A", "C")
        assert reduced[("0", "e")] == F(1, 2)
        assert reduced[("0", "e'")] == 0

    def test_conditional(self, example4):
        view = conditional(example4, "A", "0")
        assert view.probability == F(1, 2)
        assert not view.is_null
        assert isinstance(view.result, JointState)
        assert view.result[("0", "e")] == F(1, 2)

    def test_conditional_on_impossible_outcome(self, squit_named):
        space = classical_space(2)
        delta = classical_states(space)["delta0"]
        joint = product_state([delta, squit_named["mixed"]])
        view = conditional(joint, 0, "1")
        assert view.is_null
        assert view.result is None
        assert set(view.values) == {F(0)}

    def test_conditional_unknown_outcome(self, pr_joint):
        with pytest.raises(ModelError):
            conditional(pr_joint, "A", "zz")

    def test_conditionals_of_builtins_are_valid(self, pr_joint, example4):
        assert validate_conditionals(pr_joint) == []
        assert validate_conditionals(example4) == []


class TestJointEntropy:
    def test_pr_box(self, pr_joint):
        result = joint_measurement_entropy(pr_joint)
        assert result.bits == pytest.approx(1.0, abs=1e-9)
        assert result.witness.leaf_set

    def test_dp_matches_brute_force_on_pr_box(self, pr_joint):
        expected = brute_force_entropy(pr_joint, list(adaptive_tests(pr_joint.system))).bits
        assert joint_measurement_entropy(pr_joint).bits == pytest.approx(expected, abs=1e-12)

    def test_dp_matches_brute_force_on_products(self, squit_named):
        for first in ("mixed", "quarter", "edge"):
            for second in ("mixed", "alpha2", "quarter"):
                joint = product_state([squit_named[first], squit_named[second]])
                expected = brute_force_entropy(joint, list(adaptive_tests(joint.system))).bits
                assert joint_measurement_entropy(joint).bits == pytest.approx(expected, abs=1e-12)

    def test_example4_joint_entropy(self, example4):
        assert joint_measurement_entropy(example4).bits == pytest.approx(2.0, abs=1e-9)

    def test_cartesian_mode_uses_product_tests(self, squit_named):
        joint = product_state([squit_named["edge"], squit_named["edge"]], mode=CompositeMode.CARTESIAN)
        assert joint_measurement_entropy(joint).bits == 0.0

    def test_signaling_input_is_rejected(self):
        a, b = pr_parties()
        system = fr_product(a, b, names=("A", "B"))
        joint = JointState(system=system, values=tuple(F(1) if cell in _SIGNALING_CELLS else F(0) for cell in system.cells))
        with pytest.raises(SignalingError):
            joint_measurement_entropy(joint)
