"""Builtin systems, states, polytopes and joint-state tables.

The tables are entered exactly as published (squit, firefly, PR box,
the tripartite SSA counterexample, the Holevo counterexample and the
averaged van Dam state) and validated on construction.
"""

import re
from functools import partial
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import structlog

from .bundle import ModelBundle
from .composite import validate_joint_state
from .core_model import validate_state
from .errors import ModelError
from .geometry import enumerate_vertices, polytope_from_vertices
from .infotheory import make_ensemble, record_state
from .models import (
    CompositeMode,
    CompositeSystem,
    Ensemble,
    JointState,
    PolytopeSource,
    State,
    StateSpacePolytope,
    TestSpace,
)

logger = structlog.get_logger(__name__)

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)
EIGHTH = Fraction(1, 8)


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------


def squit_space(name: str = "squit", first: Sequence[str] = ("a", "a'"),
                second: Sequence[str] = ("b", "b'")) -> TestSpace:
    """Two two-outcome tests; the state space is a square."""
    return TestSpace.from_tests(name, [list(first), list(second)])


def firefly_space() -> TestSpace:
    """Three three-outcome tests arranged in a triangle."""
    return TestSpace.from_tests(
        "firefly",
        [["a", "x", "b"], ["b", "y", "c"], ["c", "z", "a"]],
        outcomes=["a", "b", "c", "x", "y", "z"],
    )


def classical_space(n: int, name: Optional[str] = None) -> TestSpace:
    if n < 1:
        raise ModelError("a classical system needs at least one outcome")
    return TestSpace.classical([str(i) for i in range(n)], name=name or f"classical{n}")


def bit_space(name: str = "bit") -> TestSpace:
    return classical_space(2, name=name)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


def squit_states(space: TestSpace) -> Dict[str, State]:
    a, a_, b, b_ = space.tests[0].outcomes + space.tests[1].outcomes
    raw = {
        "mixed": {a: HALF, a_: HALF, b: HALF, b_: HALF},
        "alpha1": {a: 1, a_: 0, b: 1, b_: 0},
        "alpha2": {a: 1, a_: 0, b: 0, b_: 1},
        "alpha3": {a: 0, a_: 1, b: 1, b_: 0},
        "alpha4": {a: 0, a_: 1, b: 0, b_: 1},
        "edge": {a: 1, a_: 0, b: HALF, b_: HALF},
        "quarter": {a: QUARTER, a_: 1 - QUARTER, b: HALF, b_: HALF},
    }
    return {key: validate_state(space, values) for key, values in raw.items()}


def firefly_states(space: Optional[TestSpace] = None) -> Dict[str, State]:
    """α (pure, H = 1), β, γ and ω = ½β + ½γ (H = 0, S = 1)."""
    space = space or firefly_space()
    raw = {
        "alpha": {"a": HALF, "b": HALF, "c": HALF, "x": 0, "y": 0, "z": 0},
        "beta": {"a": 0, "b": 1, "c": 0, "x": 0, "y": 0, "z": 1},
        "gamma": {"a": 0, "b": 0, "c": 0, "x": 1, "y": 1, "z": 1},
        "omega": {"a": 0, "b": HALF, "c": 0, "x": HALF, "y": HALF, "z": 1},
    }
    return {key: validate_state(space, values) for key, values in raw.items()}


def classical_states(space: TestSpace) -> Dict[str, State]:
    n = len(space.outcomes)
    states = {
        f"delta{x}": validate_state(space, {y: int(x == y) for y in space.outcomes})
        for x in space.outcomes
    }
    states["uniform"] = validate_state(space, {y: Fraction(1, n) for y in space.outcomes})
    return states


# ---------------------------------------------------------------------------
# Explicit polytopes
# ---------------------------------------------------------------------------


def circle_point(t: Fraction) -> Tuple[Fraction, Fraction]:
    """Rational point on the unit circle at angle 2·atan(t)."""
    d = 1 + t * t
    return ((1 - t * t) / d, 2 * t / d)


def sphere_point(u: Fraction, v: Fraction) -> Tuple[Fraction, Fraction, Fraction]:
    """Rational point on the unit sphere by inverse stereographic projection."""
    d = 1 + u * u + v * v
    return (2 * u / d, 2 * v / d, (u * u + v * v - 1) / d)


def unit_square() -> StateSpacePolytope:
    return polytope_from_vertices(("x", "y"), [(0, 0), (1, 0), (0, 1), (1, 1)], name="square")


def pentagon() -> StateSpacePolytope:
    """Rational points on the unit circle within a degree of the regular angles."""
    ts = [Fraction(4, 25), Fraction(1), Fraction(63, 10), Fraction(-2), Fraction(-1, 2)]
    return polytope_from_vertices(("x", "y"), [circle_point(t) for t in ts], name="pentagon")


def square_prism() -> StateSpacePolytope:
    points = [(x, y, z) for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    return polytope_from_vertices(("x", "y", "z"), points, name="prism")


def tetrahedron() -> StateSpacePolytope:
    points = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    return polytope_from_vertices(("x", "y", "z"), points, name="tetrahedron")


def derived_polytope(space: TestSpace, name: str) -> StateSpacePolytope:
    poly = enumerate_vertices(space)
    return StateSpacePolytope(poly.labels, poly.vertices, poly.dim, PolytopeSource.DERIVED, name)


# ---------------------------------------------------------------------------
# Joint-state tables
# ---------------------------------------------------------------------------


PR_HALF_CELLS = (
    ("a1'", "b1"), ("a2'", "b1"),
    ("a1", "b1'"), ("a2", "b1'"),
    ("a1'", "b2"), ("a2", "b2"),
    ("a1", "b2'"), ("a2'", "b2'"),
)

# (E1, E2, F) -> nonzero B outcomes, each with probability 1/8
VAN_DAM_ROWS = {
    ("0", "0", "0"): ("b1", "b2"),
    ("0", "0", "1"): ("b1'", "b2'"),
    ("1", "1", "1"): ("b1", "b2"),
    ("1", "1", "0"): ("b1'", "b2'"),
    ("0", "1", "0"): ("b1", "b2'"),
    ("0", "1", "1"): ("b1'", "b2"),
    ("1", "0", "1"): ("b1", "b2'"),
    ("1", "0", "0"): ("b1'", "b2"),
}

# (A, B) -> C outcomes certain given that row, each row with weight 1/4
EXAMPLE4_ROWS = {
    ("0", "0"): ("e", "f"),
    ("0", "1"): ("e", "f'"),
    ("1", "0"): ("e'", "f"),
    ("1", "1"): ("e'", "f'"),
}


def pr_parties() -> Tuple[TestSpace, TestSpace]:
    return (
        squit_space("A", ("a1", "a1'"), ("a2", "a2'")),
        squit_space("B", ("b1", "b1'"), ("b2", "b2'")),
    )


def pr_box_state() -> JointState:
    """The maximally CHSH-violating box; every entry is 0 or 1/2."""
    alice, bob = pr_parties()
    system = CompositeSystem(components=(alice, bob), mode=CompositeMode.FOULIS_RANDALL, names=("A", "B"))
    values = {cell: (HALF if cell in PR_HALF_CELLS else 0) for cell in system.cells}
    return validate_joint_state(system, values)


def example4_system() -> CompositeSystem:
    return CompositeSystem(
        components=(bit_space("A"), bit_space("B"), squit_space("C", ("e", "e'"), ("f", "f'"))),
        mode=CompositeMode.ADAPTIVE,
        names=("A", "B", "C"),
    )


def example4_state() -> JointState:
    """Two uniform bits whose values fix the squit C; SSA fails with I(A:B|C) = −1."""
    system = example4_system()
    values = {}
    for a, b, c in system.cells:
        values[(a, b, c)] = QUARTER if c in EXAMPLE4_ROWS[(a, b)] else 0
    return validate_joint_state(system, values)


def example5_space() -> TestSpace:
    return squit_space("squit", ("f", "f'"), ("g", "g'"))


def example5_ensemble(space: Optional[TestSpace] = None) -> Ensemble:
    """½ (f:1, g:1) + ½ (f:1, g′:1): χ = 0 but one test reads the label."""
    space = space or example5_space()
    beta0 = validate_state(space, {"f": 1, "f'": 0, "g": 1, "g'": 0})
    beta1 = validate_state(space, {"f": 1, "f'": 0, "g": 0, "g'": 1})
    return make_ensemble([(HALF, beta0), (HALF, beta1)], labels=("0", "1"))


def van_dam_system() -> CompositeSystem:
    _, bob = pr_parties()
    return CompositeSystem(
        components=(bit_space("E1"), bit_space("E2"), bit_space("F"), bob),
        mode=CompositeMode.ADAPTIVE,
        names=("E1", "E2", "F", "B"),
    )


def vandam_efb_state() -> JointState:
    """E₁E₂FB after Alice's measurement, averaged over her outcome."""
    system = van_dam_system()
    values = {}
    for e1, e2, f, y in system.cells:
        values[(e1, e2, f, y)] = EIGHTH if y in VAN_DAM_ROWS[(e1, e2, f)] else 0
    return validate_joint_state(system, values)


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------


class BuiltinCatalog:
    """Named builtin bundles, built lazily and cached."""

    STATIC_NAMES = (
        "squit", "firefly", "bit", "square", "pentagon", "prism", "tetrahedron",
        "pr", "example4", "example5", "vandam",
    )

    def __init__(self):
        self._bundles: Dict[str, ModelBundle] = {}
        self._builders: Dict[str, Callable[[], ModelBundle]] = {
            "squit": self._squit,
            "firefly": self._firefly,
            "bit": lambda: self._classical(2, "bit"),
            "square": lambda: self._polytope("square", unit_square()),
            "pentagon": lambda: self._polytope("pentagon", pentagon()),
            "prism": lambda: self._polytope("prism", square_prism()),
            "tetrahedron": lambda: self._polytope("tetrahedron", tetrahedron()),
            "pr": self._pr,
            "example4": self._example4,
            "example5": self._example5,
            "vandam": self._vandam,
        }

    def names(self) -> List[str]:
        return list(self.STATIC_NAMES) + ["classical<N>"]

    def get(self, name: str) -> ModelBundle:
        """Bundle for a builtin name (``classical3`` etc. are accepted).

        Raises:
            ModelError: for unknown names.
        """
        key = name.strip().lower()
        if key not in self._bundles:
            match = re.fullmatch(r"classical(\d+)", key)
            if match:
                builder = partial(self._classical, int(match.group(1)), key)
            elif key in self._builders:
                builder = self._builders[key]
            else:
                raise ModelError(f"unknown builtin {name!r}; choose from {self.names()}")
            logger.debug("building_builtin", name=key)
            self._bundles[key] = builder()
        return self._bundles[key]

    def _squit(self) -> ModelBundle:
        space = squit_space()
        return ModelBundle(
            name="squit",
            systems={"squit": space},
            states=squit_states(space),
            polytopes={"squit": derived_polytope(space, "squit")},
        )

    def _firefly(self) -> ModelBundle:
        space = firefly_space()
        return ModelBundle(
            name="firefly",
            systems={"firefly": space},
            states=firefly_states(space),
            polytopes={"firefly": derived_polytope(space, "firefly")},
        )

    def _classical(self, n: int, key: str) -> ModelBundle:
        space = classical_space(n, name=key)
        return ModelBundle(
            name=key,
            systems={key: space},
            states=classical_states(space),
            polytopes={key: derived_polytope(space, key)},
        )

    def _polytope(self, key: str, poly: StateSpacePolytope) -> ModelBundle:
        return ModelBundle(name=key, polytopes={key: poly})

    def _pr(self) -> ModelBundle:
        joint = pr_box_state()
        alice, bob = joint.system.components
        return ModelBundle(
            name="pr",
            systems={"A": alice, "B": bob},
            composites={"AB": joint.system},
            joint_states={"pr": joint},
        )

    def _example4(self) -> ModelBundle:
        joint = example4_state()
        a, b, c = joint.system.components
        return ModelBundle(
            name="example4",
            systems={"A": a, "B": b, "C": c},
            composites={"ABC": joint.system},
            joint_states={"example4": joint},
        )

    def _example5(self) -> ModelBundle:
        space = example5_space()
        ensemble = example5_ensemble(space)
        joint = record_state(ensemble)
        beta0, beta1 = (state for _, state in ensemble.entries)
        return ModelBundle(
            name="example5",
            systems={"squit": space, "record": joint.system.components[0]},
            states={"beta0": beta0, "beta1": beta1},
            composites={"AB": joint.system},
            joint_states={"example5": joint},
            ensembles={"example5": ensemble},
        )

    def _vandam(self) -> ModelBundle:
        joint = vandam_efb_state()
        e1, e2, f, b = joint.system.components
        pr = pr_box_state()
        return ModelBundle(
            name="vandam",
            systems={"E1": e1, "E2": e2, "F": f, "B": b, "A": pr.system.components[0]},
            composites={"EFB": joint.system, "AB": pr.system},
            joint_states={"efb": joint, "pr": pr},
        )


_catalog: Optional[BuiltinCatalog] = None


def get_catalog() -> BuiltinCatalog:
    """Get the process-wide catalog instance."""
    global _catalog
    if _catalog is None:
        _catalog = BuiltinCatalog()
    return _catalog
