"""Domain models for gptent.

All types are immutable once built. Probabilities and coordinates are exact
``Fraction`` values; only entropies are floats.
"""

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import structlog

from .errors import InputError, ModelError

logger = structlog.get_logger(__name__)

Point = Tuple[Fraction, ...]
Cell = Tuple[str, ...]


class CompositeMode(enum.Enum):
    """Test family used for a composite system."""
    CARTESIAN = "cartesian"
    FOULIS_RANDALL = "fr"
    ADAPTIVE = "adaptive"


class PolytopeSource(enum.Enum):
    """Where a polytope's vertex list came from."""
    DERIVED = "derived"
    EXPLICIT = "explicit"


class FunctionalKind(enum.Enum):
    """Schur-concave functionals available to generalized entropies."""
    SHANNON = "shannon"
    RENYI = "renyi"
    TSALLIS = "tsallis"
    MIN_ENTROPY = "min_entropy"


class NotApplicableReason(enum.Enum):
    """Why the concavity construction does not apply."""
    SIMPLEX = "simplex"
    DEGENERATE = "degenerate"


def parse_rational(value: Union[str, int, Fraction]) -> Fraction:
    """Parse ``"p/q"`` strings and integers into exact fractions.

    Floats are rejected so that no binary rounding ever enters a state.
    """
    if isinstance(value, bool):
        raise InputError(f"expected a rational, got boolean {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a rational number: {value!r}")
    raise InputError(f"expected \"p/q\" string or integer, got {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    return str(value)


# ---------------------------------------------------------------------------
# Test spaces and states
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Test:
    """One measurement, identified with its (ordered) outcome list."""

    __test__ = False

    id: str
    outcomes: Tuple[str, ...]

    def __post_init__(self):
        if not self.outcomes:
            raise ModelError(f"test {self.id!r} has no outcomes")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ModelError(f"test {self.id!r} repeats an outcome: {list(self.outcomes)}")

    @classmethod
    def of(cls, outcomes: Sequence[str], test_id: Optional[str] = None) -> "Test":
        outcomes = tuple(outcomes)
        return cls(id=test_id or "{" + ",".join(outcomes) + "}", outcomes=outcomes)

    @cached_property
    def outcome_set(self) -> FrozenSet[str]:
        return frozenset(self.outcomes)

    def __eq__(self, other) -> bool:
        return isinstance(other, Test) and self.outcome_set == other.outcome_set

    def __hash__(self) -> int:
        return hash(self.outcome_set)

    def __len__(self) -> int:
        return len(self.outcomes)

    def __str__(self) -> str:
        return self.id


@dataclass(frozen=True)
class TestSpace:
    """A test space: outcome set X and the tests covering it."""

    __test__ = False

    name: str
    outcomes: Tuple[str, ...]
    tests: Tuple[Test, ...]

    def __post_init__(self):
        if not self.tests:
            raise ModelError(f"test space {self.name!r} has no tests")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ModelError(f"test space {self.name!r} lists an outcome twice")
        known = set(self.outcomes)
        covered = set()
        for test in self.tests:
            stray = test.outcome_set - known
            if stray:
                raise ModelError(
                    f"test {test.id} of {self.name!r} uses outcomes outside X: {sorted(stray)}"
                )
            covered |= test.outcome_set
        if covered != known:
            raise ModelError(
                f"outcomes of {self.name!r} not covered by any test: {sorted(known - covered)}"
            )
        if len(set(self.tests)) != len(self.tests):
            raise ModelError(f"test space {self.name!r} declares the same test twice")
        for test in self.tests:
            if len(test) == 1:
                # forces H = 0 for every state
                logger.warning("single_outcome_test", space=self.name, test=test.id)

    @classmethod
    def from_tests(
        cls,
        name: str,
        tests: Sequence[Sequence[str]],
        outcomes: Optional[Sequence[str]] = None,
    ) -> "TestSpace":
        """Build a test space; X defaults to the union of tests in first-seen order."""
        built = tuple(Test.of(t) for t in tests)
        if outcomes is None:
            outcomes = list(dict.fromkeys(x for t in built for x in t.outcomes))
        return cls(name=name, outcomes=tuple(outcomes), tests=built)

    @classmethod
    def classical(cls, outcomes: Sequence[str], name: str = "classical") -> "TestSpace":
        """The classical system ({E}, Δ(E))."""
        return cls.from_tests(name, [list(outcomes)])

    @property
    def is_classical(self) -> bool:
        return len(self.tests) == 1

    @cached_property
    def index(self) -> Dict[str, int]:
        return {x: i for i, x in enumerate(self.outcomes)}

    def test(self, key: Union[str, Test]) -> Test:
        """Look a test up by id, by outcome-set literal, or by equality."""
        for t in self.tests:
            if isinstance(key, Test):
                if t == key:
                    return t
            elif t.id == key:
                return t
        if isinstance(key, str):
            wanted = frozenset(x.strip() for x in key.strip("{}").split(",") if x.strip())
            for t in self.tests:
                if t.outcome_set == wanted:
                    return t
        raise ModelError(f"test {key} does not belong to {self.name!r}")

    def has_test(self, test: Test) -> bool:
        return test in self.tests


@dataclass(frozen=True)
class State:
    """A validated state α: X → [0, 1] normalized on every test."""

    space: TestSpace
    values: Tuple[Fraction, ...]

    def __getitem__(self, label: str) -> Fraction:
        return self.values[self.space.index[label]]

    def restrict(self, test: Test) -> Tuple[Fraction, ...]:
        """α|_E in the test's outcome order."""
        return tuple(self[x] for x in test.outcomes)

    def as_dict(self) -> Dict[str, Fraction]:
        return dict(zip(self.space.outcomes, self.values))

    @property
    def coordinates(self) -> Point:
        return self.values


@dataclass(frozen=True)
class Violation:
    """One violated bound or normalization condition, with its exact deficit."""

    kind: str
    subject: str
    detail: str
    deficit: Fraction = Fraction(0)

    def __str__(self) -> str:
        return f"{self.kind} {self.subject}: {self.detail}"


@dataclass(frozen=True)
class SchurConcaveFunctional:
    """A symmetric Schur-concave functional T on finite distributions."""

    kind: FunctionalKind = FunctionalKind.SHANNON
    parameter: Optional[float] = None

    @property
    def name(self) -> str:
        if self.parameter is None:
            return self.kind.value
        return f"{self.kind.value}({self.parameter:g})"


SHANNON = SchurConcaveFunctional()


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSpacePolytope:
    """Irredundant V-representation of a state space Ω."""

    labels: Tuple[str, ...]
    vertices: Tuple[Point, ...]
    dim: int
    source: PolytopeSource
    name: str = ""

    @property
    def ambient_dim(self) -> int:
        return len(self.labels)

    @property
    def is_simplex(self) -> bool:
        return len(self.vertices) == self.dim + 1


@dataclass(frozen=True)
class Decomposition:
    """A convex decomposition of ``target`` into polytope vertices."""

    terms: Tuple[Tuple[Fraction, int], ...]
    target: Point
    support: Tuple[int, ...] = ()

    @property
    def weights(self) -> Tuple[Fraction, ...]:
        return tuple(w for w, _ in self.terms)

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(i for _, i in self.terms)

    def describe(self) -> str:
        return " + ".join(f"{w}·v{i}" for w, i in self.terms)


@dataclass(frozen=True)
class Facet:
    """A facet with its supporting functional ``normal · x ≥ offset``."""

    vertices: Tuple[int, ...]
    normal: Point
    offset: Fraction
    dim: int
    simplicial: bool


@dataclass(frozen=True)
class SeparationCertificate:
    """Rational functional with ``normal · v ≥ offset`` on Ω and ``< offset`` at the point."""

    normal: Point
    offset: Fraction
    value: Fraction


@dataclass(frozen=True)
class MembershipResult:
    inside: bool
    decomposition: Optional[Decomposition] = None
    certificate: Optional[SeparationCertificate] = None


@dataclass(frozen=True)
class EntropyResult:
    """Entropy in bits with the test, tree or decomposition that attains it."""

    bits: float
    witness: object = None

    def describe_witness(self) -> str:
        if self.witness is None:
            return "-"
        if isinstance(self.witness, Decomposition):
            return self.witness.describe()
        if hasattr(self.witness, "describe"):
            return self.witness.describe()
        return str(self.witness)


# ---------------------------------------------------------------------------
# Composites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompositeSystem:
    """Ordered components and the test family that combines them."""

    components: Tuple[TestSpace, ...]
    mode: CompositeMode = CompositeMode.FOULIS_RANDALL
    names: Tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.components) < 2:
            raise ModelError("a composite needs at least two components")
        if self.mode is CompositeMode.FOULIS_RANDALL and len(self.components) != 2:
            raise ModelError(
                "the Foulis-Randall product is bipartite; use adaptive mode for "
                f"{len(self.components)} components"
            )
        if not self.names:
            object.__setattr__(
                self, "names", tuple(c.name for c in self.components)
                if len({c.name for c in self.components}) == len(self.components)
                else tuple(chr(ord("A") + i) for i in range(len(self.components)))
            )
        if len(self.names) != len(self.components) or len(set(self.names)) != len(self.names):
            raise ModelError(f"component names must be distinct, one per component: {self.names}")
        for space in self.components:
            for label in space.outcomes:
                # joint-state cells and protocol keys are joined with these
                if "," in label or "|" in label:
                    raise ModelError(f"outcome label {label!r} of {space.name!r} may not contain ',' or '|'")

    def __len__(self) -> int:
        return len(self.components)

    @cached_property
    def cells(self) -> Tuple[Cell, ...]:
        """All outcome tuples, one outcome per component, in product order."""
        return tuple(itertools.product(*(c.outcomes for c in self.components)))

    @cached_property
    def cell_index(self) -> Dict[Cell, int]:
        return {cell: i for i, cell in enumerate(self.cells)}

    def component_index(self, key: Union[int, str]) -> int:
        if isinstance(key, int):
            if 0 <= key < len(self.components):
                return key
        elif key in self.names:
            return self.names.index(key)
        elif key.isdigit() and int(key) < len(self.components):
            return int(key)
        raise ModelError(f"unknown component {key!r}; components are {list(self.names)}")

    def product_tests(self) -> Iterator[Tuple[Test, ...]]:
        return itertools.product(*(c.tests for c in self.components))


@dataclass(frozen=True)
class AdaptiveNode:
    """Measure ``test`` on ``component``; each outcome leads to a child or a leaf."""

    component: int
    test: Test
    branches: Tuple[Tuple[str, Optional["AdaptiveNode"]], ...]

    def child(self, outcome: str) -> Optional["AdaptiveNode"]:
        for e, node in self.branches:
            if e == outcome:
                return node
        raise KeyError(outcome)

    def paths(self) -> Iterator[Dict[int, str]]:
        for outcome, node in self.branches:
            if node is None:
                yield {self.component: outcome}
            else:
                for rest in node.paths():
                    yield {self.component: outcome, **rest}

    def describe(self, names: Sequence[str]) -> str:
        head = f"{names[self.component]}:{self.test.id}"
        subtrees = {}
        for outcome, node in self.branches:
            if node is not None:
                subtrees.setdefault(node.describe(names), []).append(outcome)
        if not subtrees:
            return head
        if len(subtrees) == 1:
            return f"{head} -> {next(iter(subtrees))}"
        parts = [f"{'|'.join(outs)}: {desc}" for desc, outs in subtrees.items()]
        return f"{head} -> [" + "; ".join(parts) + "]"


@dataclass(frozen=True, eq=False)
class AdaptiveTest:
    """Decision tree measuring every component exactly once on each path."""

    __test__ = False

    root: AdaptiveNode
    names: Tuple[str, ...]

    @cached_property
    def leaves(self) -> Tuple[Cell, ...]:
        """Leaf outcome tuples, ordered by component index."""
        order = sorted(range(len(self.names)))
        return tuple(tuple(path[c] for c in order) for path in self.root.paths())

    @cached_property
    def leaf_set(self) -> FrozenSet[Cell]:
        return frozenset(self.leaves)

    def __eq__(self, other) -> bool:
        return isinstance(other, AdaptiveTest) and self.leaf_set == other.leaf_set

    def __hash__(self) -> int:
        return hash(self.leaf_set)

    def describe(self) -> str:
        return self.root.describe(self.names)

    def __str__(self) -> str:
        return self.describe()


@dataclass(frozen=True)
class JointState:
    """Exact joint probabilities on the Cartesian cells of a composite."""

    system: CompositeSystem
    values: Tuple[Fraction, ...]

    def __getitem__(self, cell: Cell) -> Fraction:
        return self.values[self.system.cell_index[tuple(cell)]]

    def as_dict(self) -> Dict[Cell, Fraction]:
        return dict(zip(self.system.cells, self.values))

    @property
    def components(self) -> Tuple[TestSpace, ...]:
        return self.system.components


@dataclass(frozen=True)
class SignalingViolation:
    """Marginal on ``subset`` at ``outcome`` depends on the outside tests."""

    subset: Tuple[int, ...]
    outcome: Cell
    tests: Tuple[Tuple[str, ...], Tuple[str, ...]]
    sums: Tuple[Fraction, Fraction]

    def __str__(self) -> str:
        return (
            f"outcome {','.join(self.outcome)} on components {list(self.subset)}: "
            f"{self.sums[0]} under {list(self.tests[0])} but {self.sums[1]} under {list(self.tests[1])}"
        )


@dataclass(frozen=True)
class ConditionalView:
    """Renormalized slice of a joint state given outcomes on some components.

    ``result`` is ``None`` (and ``is_null`` set) when the conditioning outcome
    has probability zero; ``values`` then holds the all-zero assignment.
    """

    result: Optional[Union[State, JointState]]
    given: Tuple[Tuple[int, str], ...]
    probability: Fraction
    values: Tuple[Fraction, ...]
    remaining: Tuple[int, ...]

    @property
    def is_null(self) -> bool:
        return self.probability == 0


# ---------------------------------------------------------------------------
# Information theory and protocols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ensemble:
    """Weighted preparation ensemble {(p_x, β_x)} on one system."""

    entries: Tuple[Tuple[Fraction, State], ...]
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.entries:
            raise ModelError("ensemble is empty")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(self.entries))))

    @property
    def space(self) -> TestSpace:
        return self.entries[0][1].space


@dataclass(frozen=True)
class Box:
    """A bipartite non-signaling joint state used as a shared resource."""

    joint: JointState


@dataclass(frozen=True)
class ICProtocol:
    """An information-causality protocol given by explicit lookup tables.

    Keys: ``alice_tests[input]``, ``alice_messages[(input, outcome)]``,
    ``bob_tests[(k, message)]``, ``bob_guesses[(k, message, outcome)]``.
    Inputs and messages are bit strings; ``k`` counts from 1.
    """

    n_bits: int
    message_bits: int
    shared: Optional[JointState]
    alice_tests: Mapping[str, str] = field(default_factory=dict)
    alice_messages: Mapping[Tuple[str, str], str] = field(default_factory=dict)
    bob_tests: Mapping[Tuple[int, str], str] = field(default_factory=dict)
    bob_guesses: Mapping[Tuple[int, str, str], int] = field(default_factory=dict)
    name: str = ""


# ---------------------------------------------------------------------------
# Concavity analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstructionTrace:
    """Every intermediate object of the facet-pair construction."""

    facet_1: Tuple[int, ...] = ()
    facet_2: Tuple[int, ...] = ()
    apex: Optional[int] = None
    rho_1: Optional[Point] = None
    rho_2: Optional[Point] = None
    rho_3: Optional[Point] = None
    segment: Optional[Tuple[Point, Point]] = None
    case: str = ""
    recursed_into: Tuple[Tuple[int, ...], ...] = ()
    notes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ConcavityWitness:
    """ρ = Σ p_i ρ_i with S(ρ) < Σ p_i S(ρ_i)."""

    rho: Point
    mixture: Tuple[Tuple[Fraction, Point], ...]
    s_rho: float
    mixture_avg: float
    trace: ConstructionTrace

    @property
    def gap(self) -> float:
        return self.mixture_avg - self.s_rho


@dataclass(frozen=True)
class NotApplicable:
    reason: NotApplicableReason
    detail: str = ""


AnyState = Union[State, JointState]
Subset = Tuple[int, ...]
SubsetSpec = Union[int, str, Sequence[Union[int, str]]]
ComponentList = List[TestSpace]
