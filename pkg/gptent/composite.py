"""Composite systems: products, non-signaling joint states and joint entropy.

Joint states live on the Cartesian cells (one outcome per component). The
test family is fixed by the system mode: product tests only, the bipartite
Foulis-Randall product, or the n-ary adaptive family where every test
choice may depend on all outcomes seen so far.
"""

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import structlog

from .core_model import shannon_entropy, validate_state
from .errors import ModelError, SignalingError, StateValidationError
from .models import (
    AdaptiveNode,
    AdaptiveTest,
    Cell,
    CompositeMode,
    CompositeSystem,
    ConditionalView,
    EntropyResult,
    JointState,
    SignalingViolation,
    State,
    SubsetSpec,
    Test,
    TestSpace,
    Violation,
    parse_rational,
)

logger = structlog.get_logger(__name__)

Table = Dict[Cell, Fraction]


# ---------------------------------------------------------------------------
# Systems and test families
# ---------------------------------------------------------------------------


def cartesian_product(a: TestSpace, b: TestSpace, names: Sequence[str] = ()) -> CompositeSystem:
    """A × B: only the product tests E × F."""
    return CompositeSystem(components=(a, b), mode=CompositeMode.CARTESIAN, names=tuple(names))


def fr_product(a: TestSpace, b: TestSpace, names: Sequence[str] = ()) -> CompositeSystem:
    """A ⊗ B: all A-first and B-first two-stage tests."""
    return CompositeSystem(components=(a, b), mode=CompositeMode.FOULIS_RANDALL, names=tuple(names))


def adaptive_product(components: Sequence[TestSpace], names: Sequence[str] = ()) -> CompositeSystem:
    """n-ary composite with the fully adaptive test family."""
    return CompositeSystem(components=tuple(components), mode=CompositeMode.ADAPTIVE, names=tuple(names))


def _constant_tree(system: CompositeSystem, order: Sequence[int], tests: Sequence[Test]) -> AdaptiveNode:
    """Measure ``tests[k]`` on ``order[k]`` regardless of earlier outcomes."""
    c, test = order[0], tests[0]
    child = _constant_tree(system, order[1:], tests[1:]) if len(order) > 1 else None
    return AdaptiveNode(component=c, test=test, branches=tuple((e, child) for e in test.outcomes))


def _trees(system: CompositeSystem, remaining: Tuple[int, ...]) -> Iterator[AdaptiveNode]:
    for c in remaining:
        rest = tuple(i for i in remaining if i != c)
        for test in system.components[c].tests:
            if not rest:
                yield AdaptiveNode(c, test, tuple((e, None) for e in test.outcomes))
                continue
            subtrees = list(_trees(system, rest))
            for choice in itertools.product(subtrees, repeat=len(test)):
                yield AdaptiveNode(c, test, tuple(zip(test.outcomes, choice)))


def adaptive_tests(system: CompositeSystem) -> Iterator[AdaptiveTest]:
    """Every adaptive test over the components, deduplicated by leaf set.

    Any measurement order is allowed and each test choice may depend on all
    prior outcomes. On two components this is the Foulis-Randall product.
    """
    seen = set()
    for root in _trees(system, tuple(range(len(system)))):
        test = AdaptiveTest(root=root, names=system.names)
        if test.leaf_set in seen:
            continue
        seen.add(test.leaf_set)
        yield test


def product_tests(system: CompositeSystem) -> List[AdaptiveTest]:
    order = tuple(range(len(system)))
    return [
        AdaptiveTest(root=_constant_tree(system, order, tests), names=system.names)
        for tests in system.product_tests()
    ]


def available_tests(system: CompositeSystem) -> List[AdaptiveTest]:
    """The tests available to ``system`` under its mode."""
    if system.mode is CompositeMode.CARTESIAN:
        return product_tests(system)
    return list(adaptive_tests(system))


def composite_test_space(system: CompositeSystem) -> TestSpace:
    """Materialize the test family as a TestSpace over joined labels ``"e,f"``."""
    family = available_tests(system)
    tests = tuple(
        Test(id=t.describe(), outcomes=tuple(",".join(leaf) for leaf in t.leaves)) for t in family
    )
    outcomes = tuple(",".join(cell) for cell in system.cells)
    return TestSpace(name=" ⊗ ".join(system.names), outcomes=outcomes, tests=tests)


def resolve_subset(system: CompositeSystem, spec: SubsetSpec) -> Tuple[int, ...]:
    """Component indices from an index, a name, ``"A,B"`` or a list of those."""
    if isinstance(spec, str):
        items: Sequence[Union[int, str]] = [s.strip() for s in spec.split(",") if s.strip()]
    elif isinstance(spec, int):
        items = [spec]
    else:
        items = list(spec)
    indices = tuple(sorted({system.component_index(item) for item in items}))
    if not indices:
        raise ModelError("empty component subset")
    return indices


# ---------------------------------------------------------------------------
# Joint states
# ---------------------------------------------------------------------------


def _parse_cell(key: Union[str, Sequence[str]]) -> Cell:
    if isinstance(key, str):
        return tuple(x.strip() for x in key.split(","))
    return tuple(key)


def find_joint_violations(system: CompositeSystem, candidate: Mapping[object, object]) -> List[Violation]:
    """Unknown or missing cells, bound violations and per-product-test normalization."""
    violations: List[Violation] = []
    parsed: Table = {}
    for key, raw in candidate.items():
        cell = _parse_cell(key)
        if cell not in system.cell_index:
            violations.append(Violation("unknown", ",".join(cell), "not a cell of the composite"))
            continue
        value = parse_rational(raw)
        parsed[cell] = value
        if value < 0 or value > 1:
            violations.append(Violation("bound", ",".join(cell), f"value {value} outside [0, 1]",
                                        -value if value < 0 else value - 1))
    for cell in system.cells:
        if cell not in parsed:
            violations.append(Violation("missing", ",".join(cell), "no value assigned"))
    if any(v.kind == "missing" for v in violations):
        return violations
    for tests in system.product_tests():
        total = sum(
            (parsed[cell] for cell in itertools.product(*(t.outcomes for t in tests))), Fraction(0)
        )
        if total != 1:
            subject = " × ".join(t.id for t in tests)
            violations.append(Violation("normalization", subject, f"sums to {total}", total - 1))
    return violations


def validate_joint_state(system: CompositeSystem, candidate: Mapping[object, object]) -> JointState:
    """Validate a raw cell → value map; keys are tuples or ``"e,f,g"`` strings.

    Raises:
        StateValidationError: on bound, coverage or normalization failures.
        SignalingError: when a marginal depends on the tests chosen elsewhere.
    """
    violations = find_joint_violations(system, candidate)
    if violations:
        raise StateValidationError("invalid joint state", violations)
    parsed = {_parse_cell(k): parse_rational(v) for k, v in candidate.items()}
    joint = JointState(system=system, values=tuple(parsed[cell] for cell in system.cells))
    violation = is_nonsignaling(joint)
    if violation is not None:
        raise SignalingError("joint state is signaling", violation)
    return joint


@lru_cache(maxsize=256)
def _signaling_violation(joint: JointState) -> Optional[SignalingViolation]:
    system = joint.system
    n = len(system)
    for size in range(1, n):
        for subset in itertools.combinations(range(n), size):
            outside = [i for i in range(n) if i not in subset]
            choices = list(itertools.product(*(system.components[i].tests for i in outside)))
            for outcome in itertools.product(*(system.components[i].outcomes for i in subset)):
                reference = None
                for tests in choices:
                    total = Fraction(0)
                    for rest in itertools.product(*(t.outcomes for t in tests)):
                        cell = [None] * n
                        for i, x in zip(subset, outcome):
                            cell[i] = x
                        for i, x in zip(outside, rest):
                            cell[i] = x
                        total += joint[tuple(cell)]
                    if reference is None:
                        reference = (tests, total)
                    elif total != reference[1]:
                        return SignalingViolation(
                            subset=subset,
                            outcome=outcome,
                            tests=(tuple(t.id for t in reference[0]), tuple(t.id for t in tests)),
                            sums=(reference[1], total),
                        )
    return None


def is_nonsignaling(joint: JointState) -> Optional[SignalingViolation]:
    """``None`` when every marginal is independent of the outside test choices.

    Otherwise the first violation: the subset, its outcome, the two outside
    test choices and the two differing sums.
    """
    if len(joint.values) != len(joint.system.cells):
        raise ModelError(
            f"incomplete value map: {len(joint.values)} values for {len(joint.system.cells)} cells"
        )
    return _signaling_violation(joint)


def _require_nonsignaling(joint: JointState) -> None:
    violation = is_nonsignaling(joint)
    if violation is not None:
        raise SignalingError("joint state is signaling", violation)


def _subsystem(system: CompositeSystem, keep: Tuple[int, ...]) -> CompositeSystem:
    mode = system.mode
    if mode is CompositeMode.FOULIS_RANDALL and len(keep) != 2:
        mode = CompositeMode.ADAPTIVE
    return CompositeSystem(
        components=tuple(system.components[i] for i in keep),
        mode=mode,
        names=tuple(system.names[i] for i in keep),
    )


def _marginal_values(joint: JointState, keep: Tuple[int, ...]) -> Tuple[Fraction, ...]:
    system = joint.system
    n = len(system)
    dropped = [i for i in range(n) if i not in keep]
    # any test per dropped component; non-signaling makes the choice irrelevant
    first_tests = [system.components[i].tests[0].outcomes for i in dropped]
    values = []
    for outcome in itertools.product(*(system.components[i].outcomes for i in keep)):
        total = Fraction(0)
        for rest in itertools.product(*first_tests):
            cell = [None] * n
            for i, x in zip(keep, outcome):
                cell[i] = x
            for i, x in zip(dropped, rest):
                cell[i] = x
            total += joint[tuple(cell)]
        values.append(total)
    return tuple(values)


def marginal(joint: JointState, keep: SubsetSpec) -> Union[State, JointState]:
    """ω restricted to the kept components: a State for one, a JointState otherwise.

    Raises:
        SignalingError: the marginal would depend on the discarded tests.
    """
    _require_nonsignaling(joint)
    keep = resolve_subset(joint.system, keep)
    if len(keep) == len(joint.system):
        return joint
    values = _marginal_values(joint, keep)
    if len(keep) == 1:
        return State(space=joint.system.components[keep[0]], values=values)
    return JointState(system=_subsystem(joint.system, keep), values=values)


def conditional(joint: JointState, on: Union[int, str], outcome: str) -> ConditionalView:
    """ω^{rest|e}: the slice at ``outcome`` of component ``on``, renormalized.

    A zero-probability outcome gives the all-zero assignment with
    ``is_null`` set.
    """
    _require_nonsignaling(joint)
    system = joint.system
    c = system.component_index(on)
    if outcome not in system.components[c].index:
        raise ModelError(f"{outcome!r} is not an outcome of component {system.names[c]}")
    probability = _marginal_values(joint, (c,))[system.components[c].index[outcome]]
    rest = tuple(i for i in range(len(system)) if i != c)
    slice_values = []
    for cell in itertools.product(*(system.components[i].outcomes for i in rest)):
        full = list(cell)
        full.insert(c, outcome)
        value = joint[tuple(full)]
        slice_values.append(value / probability if probability else Fraction(0))
    values = tuple(slice_values)
    result: Optional[Union[State, JointState]] = None
    if probability:
        if len(rest) == 1:
            result = State(space=system.components[rest[0]], values=values)
        else:
            result = JointState(system=_subsystem(system, rest), values=values)
    return ConditionalView(
        result=result,
        given=((c, outcome),),
        probability=probability,
        values=values,
        remaining=rest,
    )


def product_state(
    states: Sequence[State],
    mode: Optional[CompositeMode] = None,
    names: Sequence[str] = (),
) -> JointState:
    """ω = α₁ ⊗ α₂ ⊗ … on the Cartesian cells."""
    if len(states) < 2:
        raise ModelError("a product state needs at least two factors")
    if mode is None:
        mode = CompositeMode.FOULIS_RANDALL if len(states) == 2 else CompositeMode.ADAPTIVE
    system = CompositeSystem(
        components=tuple(s.space for s in states), mode=mode, names=tuple(names)
    )
    values = []
    for cell in system.cells:
        value = Fraction(1)
        for state, x in zip(states, cell):
            value *= state[x]
        values.append(value)
    return JointState(system=system, values=tuple(values))


# ---------------------------------------------------------------------------
# Joint measurement entropy
# ---------------------------------------------------------------------------


def leaf_distribution(joint: JointState, test: AdaptiveTest) -> Tuple[Fraction, ...]:
    """Outcome probabilities of an adaptive test, read off the Cartesian cells."""
    return tuple(joint[leaf] for leaf in test.leaves)


def brute_force_entropy(joint: JointState, tests: Sequence[AdaptiveTest]) -> EntropyResult:
    """Minimum Shannon entropy over an explicit list of tests (first wins ties)."""
    _require_nonsignaling(joint)
    best: Optional[EntropyResult] = None
    for test in tests:
        bits = shannon_entropy(leaf_distribution(joint, test))
        if best is None or bits < best.bits:
            best = EntropyResult(bits=bits, witness=test)
    return best


class _ChainRuleSearch:
    """Memoized minimization over adaptive trees via the Shannon chain rule.

    A subproblem is (remaining components, exact conditional table on them).
    """

    def __init__(self, system: CompositeSystem):
        self.system = system
        self.memo: Dict[Tuple[Tuple[int, ...], Tuple[Fraction, ...]], Tuple[float, AdaptiveNode]] = {}

    def cells(self, remaining: Tuple[int, ...]) -> List[Cell]:
        return list(itertools.product(*(self.system.components[i].outcomes for i in remaining)))

    def default_tree(self, remaining: Tuple[int, ...]) -> AdaptiveNode:
        return _constant_tree(
            self.system, remaining, [self.system.components[i].tests[0] for i in remaining]
        )

    def best(self, remaining: Tuple[int, ...], values: Tuple[Fraction, ...]) -> Tuple[float, AdaptiveNode]:
        key = (remaining, values)
        if key in self.memo:
            return self.memo[key]
        table = dict(zip(self.cells(remaining), values))
        best: Optional[Tuple[float, AdaptiveNode]] = None
        for pos, c in enumerate(remaining):
            rest = remaining[:pos] + remaining[pos + 1:]
            rest_cells = self.cells(rest)
            rest_tests = [self.system.components[i].tests[0].outcomes for i in rest]
            for test in self.system.components[c].tests:
                probabilities = []
                for e in test.outcomes:
                    total = Fraction(0)
                    for cell in itertools.product(*rest_tests):
                        total += table[cell[:pos] + (e,) + cell[pos:]]
                    probabilities.append(total)
                bits = shannon_entropy(probabilities)
                branches = []
                for e, p in zip(test.outcomes, probabilities):
                    if not rest:
                        branches.append((e, None))
                        continue
                    if p == 0:
                        branches.append((e, self.default_tree(rest)))
                        continue
                    cond = tuple(table[cell[:pos] + (e,) + cell[pos:]] / p for cell in rest_cells)
                    sub_bits, sub_tree = self.best(rest, cond)
                    bits += float(p) * sub_bits
                    branches.append((e, sub_tree))
                if best is None or bits < best[0]:
                    best = (bits, AdaptiveNode(component=c, test=test, branches=tuple(branches)))
        self.memo[key] = best
        return best


def joint_measurement_entropy(joint: JointState) -> EntropyResult:
    """H(ω): minimum Shannon entropy over the system's test family.

    Adaptive and Foulis-Randall families are searched exactly by dynamic
    programming over (remaining components, conditional state); the
    witness is an optimal adaptive test.

    Raises:
        SignalingError: for signaling input.
    """
    _require_nonsignaling(joint)
    system = joint.system
    if system.mode is CompositeMode.CARTESIAN:
        return brute_force_entropy(joint, product_tests(system))
    search = _ChainRuleSearch(system)
    bits, root = search.best(tuple(range(len(system))), joint.values)
    bits = bits if bits > 0 else 0.0
    logger.debug("joint_measurement_entropy", components=list(system.names), bits=bits,
                 subproblems=len(search.memo))
    return EntropyResult(bits=bits, witness=AdaptiveTest(root=root, names=system.names))


def validate_conditionals(joint: JointState) -> List[Violation]:
    """Check that every single-outcome conditional lies in its component's Ω(𝔄)."""
    violations: List[Violation] = []
    system = joint.system
    for c in range(len(system)):
        for outcome in system.components[c].outcomes:
            view = conditional(joint, c, outcome)
            if view.is_null or not isinstance(view.result, State):
                continue
            try:
                validate_state(view.result.space, view.result.as_dict())
            except StateValidationError as exc:
                violations.extend(exc.violations)
    return violations
