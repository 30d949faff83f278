"""Seeded property suites for the entropy inequalities and the polytope construction."""

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from gptent import linalg
from gptent.analysis import find_concavity_violation, verify_witness
from gptent.catalog import (
    classical_space,
    firefly_space,
    pentagon,
    pr_box_state,
    pr_parties,
    square_prism,
    squit_space,
    squit_states,
    tetrahedron,
    unit_square,
)
from gptent.composite import (
    adaptive_product,
    fr_product,
    joint_measurement_entropy,
    product_state,
    validate_joint_state,
)
from gptent.core_model import certainty_witness, measurement_entropy, mix_states, shannon_entropy
from gptent.geometry import barycenter, enumerate_vertices, mixing_entropy, point_to_state, polytope_from_vertices
from gptent.infotheory import chain_rule_entropy, conditional_entropy, entropy_of, mutual_information, ssa_report
from gptent.models import ConcavityWitness, JointState, NotApplicable, TestSpace

F = Fraction
TOL = 1e-9
TRIALS = 1000

PROPERTY_SETTINGS = settings(
    max_examples=TRIALS,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)


def _random_test_space(rng, index):
    """Equal-size tests in a chain or loop; neighbours may share an outcome, so the uniform state exists."""
    count, size = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    labels = (f"o{i}" for i in itertools.count())
    tests = []
    for i in range(count):
        start = tests[-1][-1] if i and rng.random() < 0.6 else next(labels)
        tests.append([start] + [next(labels) for _ in range(size - 1)])
    if count >= 3 and rng.random() < 0.5:
        tests[-1][-1] = tests[0][0]
    return TestSpace.from_tests(f"random{index}", tests)


@lru_cache(maxsize=None)
def _systems():
    rng = np.random.default_rng(11)
    spaces = [squit_space(), firefly_space(), classical_space(3)]
    spaces += [_random_test_space(rng, i) for i in range(6)]
    return [(space, enumerate_vertices(space)) for space in spaces]


@st.composite
def vertex_weights(draw, n, sparse=False):
    """Integer weights on ``n`` vertices, normalized to a rational distribution."""
    if sparse:
        support = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=2, unique=True))
        raw = [draw(st.integers(1, 8)) if i in support else 0 for i in range(n)]
    else:
        raw = draw(st.lists(st.integers(0, 8), min_size=n, max_size=n).filter(any))
    total = sum(raw)
    return [F(w, total) for w in raw]


@st.composite
def states_on_a_system(draw, count=1, sparse=False):
    space, poly = draw(st.sampled_from(_systems()))
    states = []
    for _ in range(count):
        weights = draw(vertex_weights(len(poly.vertices), sparse=sparse))
        states.append(point_to_state(space, poly, linalg.combine(weights, poly.vertices)))
    return states


# ---------------------------------------------------------------------------
# Single systems
# ---------------------------------------------------------------------------


@PROPERTY_SETTINGS
@given(pair=states_on_a_system(count=2), t=st.fractions(0, 1, max_denominator=12))
def test_measurement_entropy_is_concave(pair, t):
    alpha, beta = pair
    mixed = mix_states([t, 1 - t], [alpha, beta])
    average = float(t) * measurement_entropy(alpha).bits + float(1 - t) * measurement_entropy(beta).bits
    assert measurement_entropy(mixed).bits >= average - TOL


@PROPERTY_SETTINGS
@given(states=states_on_a_system(sparse=True))
def test_zero_entropy_iff_certain_outcome(states):
    (state,) = states
    is_zero = measurement_entropy(state).bits <= 1e-12
    assert is_zero == (certainty_witness(state) is not None)


# ---------------------------------------------------------------------------
# Composites
# ---------------------------------------------------------------------------


def _rational_distribution(rng, n):
    raw = [int(x) for x in rng.integers(0, 9, size=n)]
    while not any(raw):
        raw = [int(x) for x in rng.integers(0, 9, size=n)]
    total = sum(raw)
    return [F(w, total) for w in raw]


def _random_squit_values(rng, space):
    a, a_, b, b_ = space.outcomes
    p = F(int(rng.integers(0, 9)), 8)
    q = F(int(rng.integers(0, 9)), 8)
    return {a: p, a_: 1 - p, b: q, b_: 1 - q}


@lru_cache(maxsize=None)
def _local_boxes():
    alice, bob = pr_parties()
    vertices_a = [s for key, s in squit_states(alice).items() if key.startswith("alpha")]
    vertices_b = [s for key, s in squit_states(bob).items() if key.startswith("alpha")]
    boxes = [product_state([a, b], names=("A", "B")) for a in vertices_a for b in vertices_b]
    return boxes + [pr_box_state()]


def _random_box(rng):
    boxes = _local_boxes()
    weights = _rational_distribution(rng, len(boxes))
    system = boxes[0].system
    values = tuple(
        sum((w * box.values[i] for w, box in zip(weights, boxes)), F(0)) for i in range(len(system.cells))
    )
    return JointState(system=system, values=values)


def _classical_squit_state(rng, k):
    """ω = Σ_x p(x) δ_x ⊗ β_x on a k-outcome register and a squit."""
    register = classical_space(k, name="X")
    squit = squit_space("S")
    system = fr_product(register, squit, names=("X", "S"))
    p = _rational_distribution(rng, k)
    betas = {x: _random_squit_values(rng, squit) for x in register.outcomes}
    if rng.random() < 0.2:
        betas = {x: betas[register.outcomes[0]] for x in register.outcomes}
    values = {(x, s): p[i] * betas[x][s] for i, x in enumerate(register.outcomes) for s in squit.outcomes}
    return validate_joint_state(system, values)


def test_subadditivity_and_nonnegative_mutual_information():
    rng = np.random.default_rng(0)
    for trial in range(TRIALS):
        joint = _random_box(rng) if trial % 2 == 0 else _classical_squit_state(rng, 2 + trial % 3)
        a, b = joint.system.names
        h_ab = joint_measurement_entropy(joint).bits
        h_a = entropy_of(joint, a).bits
        h_b = entropy_of(joint, b).bits
        assert h_ab <= h_a + h_b + TOL
        assert mutual_information(joint, a, b) >= -TOL


def test_chain_rule_for_a_classical_register():
    rng = np.random.default_rng(1)
    for trial in range(TRIALS):
        joint = _classical_squit_state(rng, 2 + trial % 3)
        total = entropy_of(joint, "X,S").bits
        assert chain_rule_entropy(joint, "X") == pytest.approx(total, abs=TOL)
        # H(S|X) >= 0 whenever X is classical
        assert conditional_entropy(joint, "S", "X") >= -TOL


def test_conditioning_on_a_classical_system_is_strongly_subadditive():
    """A and C classical, B a squit: H(A|BC) <= H(A|C), so I(A:B|C) >= 0."""
    rng = np.random.default_rng(2)
    first = classical_space(2, name="A")
    middle = squit_space("B")
    last = classical_space(2, name="C")
    system = adaptive_product([first, middle, last], names=("A", "B", "C"))
    for _ in range(TRIALS):
        p = _rational_distribution(rng, 4)
        values = {}
        for i, (x, z) in enumerate((x, z) for x in first.outcomes for z in last.outcomes):
            beta = _random_squit_values(rng, middle)
            for y in middle.outcomes:
                values[(x, y, z)] = p[i] * beta[y]
        joint = validate_joint_state(system, values)
        assert conditional_entropy(joint, "A", "B,C") <= conditional_entropy(joint, "A", "C") + TOL
        report = ssa_report(joint, "A", "B", "C")
        assert report.satisfied
        assert report.forms_agree


# ---------------------------------------------------------------------------
# Random polytopes
# ---------------------------------------------------------------------------


def _random_polytope(rng, dim, want_simplex):
    labels = ("x", "y", "z")[:dim]
    while True:
        count = dim + 1 if want_simplex else int(rng.integers(dim + 2, dim + 5))
        points = [tuple(int(c) for c in rng.integers(0, 10, size=dim)) for _ in range(count)]
        poly = polytope_from_vertices(labels, points, name=f"random{dim}d")
        if poly.dim == dim and poly.is_simplex == want_simplex:
            return poly


@lru_cache(maxsize=None)
def _random_polytopes(seed, count, want_simplex):
    rng = np.random.default_rng(seed)
    return [_random_polytope(rng, 2 + i % 2, want_simplex) for i in range(count)]


@pytest.mark.parametrize("index", range(20))
def test_random_non_simplicial_polytopes_have_verified_witnesses(index):
    poly = _random_polytopes(3, 20, want_simplex=False)[index]
    witness = find_concavity_violation(poly)
    assert isinstance(witness, ConcavityWitness)
    assert witness.gap > TOL
    assert verify_witness(poly, witness)
    d = len(witness.trace.facet_1)
    assert mixing_entropy(poly, witness.trace.rho_1).bits == pytest.approx(math.log2(d), abs=TOL)
    assert mixing_entropy(poly, witness.trace.rho_2).bits == pytest.approx(math.log2(d), abs=TOL)
    assert mixing_entropy(poly, witness.trace.rho_3).bits == pytest.approx(math.log2(d - 1), abs=TOL)


@pytest.mark.parametrize("index", range(10))
def test_random_simplices_are_not_applicable(index):
    poly = _random_polytopes(4, 10, want_simplex=True)[index]
    assert isinstance(find_concavity_violation(poly), NotApplicable)
    assert mixing_entropy(poly, barycenter(poly)).bits == pytest.approx(math.log2(poly.dim + 1), abs=TOL)


def test_mixing_entropy_is_concave_on_simplices():
    rng = np.random.default_rng(8)
    simplices = _random_polytopes(4, 10, want_simplex=True)
    for trial in range(TRIALS):
        poly = simplices[trial % len(simplices)]
        n = len(poly.vertices)
        rho_1 = linalg.combine(_rational_distribution(rng, n), poly.vertices)
        rho_2 = linalg.combine(_rational_distribution(rng, n), poly.vertices)
        t = F(int(rng.integers(0, 9)), 8)
        mixed = linalg.combine([t, 1 - t], [rho_1, rho_2])
        average = float(t) * mixing_entropy(poly, rho_1).bits + float(1 - t) * mixing_entropy(poly, rho_2).bits
        assert mixing_entropy(poly, mixed).bits >= average - TOL


def test_simplex_mixing_entropy_is_shannon_of_barycentric_coordinates():
    rng = np.random.default_rng(5)
    for poly in _random_polytopes(6, 10, want_simplex=True):
        for _ in range(20):
            weights = _rational_distribution(rng, len(poly.vertices))
            point = linalg.combine(weights, poly.vertices)
            expected = -sum(float(w) * math.log2(float(w)) for w in weights if w > 0)
            assert mixing_entropy(poly, point).bits == pytest.approx(expected, abs=TOL)


# ---------------------------------------------------------------------------
# Random-search oracle
# ---------------------------------------------------------------------------


def _basic_decompositions(vertices, point, rng, objectives=200):
    """Vertices of {w >= 0 : Σ w_i v_i = ρ, Σ w_i = 1}.

    Every vertex has an affinely independent support of at most dim + 1
    points, so one round per small support (cost 1 off the support) finds
    them all; random Gaussian objectives are added on top.
    """
    from scipy.optimize import linprog

    n, dim = vertices.shape
    a_eq = np.vstack([vertices.T, np.ones(n)])
    b_eq = np.append(point, 1.0)
    costs = []
    for size in range(1, min(n, dim + 1) + 1):
        for support in itertools.combinations(range(n), size):
            cost = np.ones(n)
            cost[list(support)] = 0.0
            costs.append(cost)
    costs.extend(rng.standard_normal(n) for _ in range(objectives))
    found = []
    for cost in costs:
        result = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
        assert result.status == 0
        found.append(np.clip(result.x, 0.0, None))
    return np.unique(np.round(np.array(found), 12), axis=0)


def _affine_coordinates(vertices, point):
    """Coordinates in the affine hull of the vertices, so equality rows are independent."""
    origin = vertices[0]
    _, singular, vt = np.linalg.svd(vertices - origin)
    basis = vt[: int((singular > 1e-9).sum())]
    return (vertices - origin) @ basis.T, (point - origin) @ basis.T


def _shannon_rows(weights):
    safe = np.where(weights > 1e-15, weights, 1.0)
    return -(weights * np.log2(safe)).sum(axis=1)


@pytest.mark.slow
@pytest.mark.parametrize(
    "build",
    [
        unit_square,
        pentagon,
        square_prism,
        tetrahedron,
        lambda: enumerate_vertices(firefly_space()),
        lambda: _random_polytopes(7, 1, want_simplex=False)[0],
    ],
)
def test_mixing_entropy_matches_random_search(build, fresh_settings):
    poly = build()
    rng = np.random.default_rng(fresh_settings.seed)
    vertices = np.array([[float(x) for x in v] for v in poly.vertices])
    targets = [barycenter(poly)]
    for _ in range(3):
        targets.append(linalg.combine(_rational_distribution(rng, len(poly.vertices)), poly.vertices))

    for rho in targets:
        exact = mixing_entropy(poly, rho)
        coords, target = _affine_coordinates(vertices, np.array([float(x) for x in rho]))
        basis = _basic_decompositions(coords, target, rng)
        mixtures = rng.dirichlet(np.ones(len(basis)), size=fresh_settings.oracle_sample_count) @ basis
        samples = np.vstack([basis, mixtures])
        searched = float(_shannon_rows(samples).min())
        assert exact.bits - 1e-6 <= searched <= exact.bits + 1e-6
        # the minimizing decomposition attains S exactly
        assert shannon_entropy(exact.witness.weights) == pytest.approx(exact.bits, abs=TOL)
