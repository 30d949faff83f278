"""Exact convex geometry of state spaces.

Vertices, facets, membership and convex decompositions are computed over
exact rationals; only the mixing entropy itself is a float.
"""

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from . import linalg
from .config import get_settings
from .core_model import evaluate_functional, measurement_entropy, state_from_point
from .errors import DimensionMismatchError, ModelError, OutsidePolytopeError
from .models import (
    SHANNON,
    Decomposition,
    EntropyResult,
    Facet,
    MembershipResult,
    Point,
    PolytopeSource,
    SchurConcaveFunctional,
    SeparationCertificate,
    State,
    StateSpacePolytope,
    TestSpace,
    format_rational,
    parse_rational,
)
from .reports import MonoentropicityReport, ScanWitness

logger = structlog.get_logger(__name__)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def affine_dimension(points: Sequence[Sequence[Fraction]]) -> int:
    """Dimension of the affine hull (-1 for an empty list)."""
    return linalg.affine_rank(points)


def enumerate_vertices(space: TestSpace) -> StateSpacePolytope:
    """All pure states of Ω(𝔄).

    A vertex is the unique solution of the test equalities together with
    ``|X| - rank`` active zero bounds. Every such zero set is tried; the
    non-negative solutions are deduplicated.

    Raises:
        ModelError: if the outcome set is too large or Ω(𝔄) is empty.
    """
    n = len(space.outcomes)
    limit = get_settings().max_outcomes
    if n > limit:
        raise ModelError(f"{space.name} has {n} outcomes; vertex enumeration is capped at {limit}")

    equalities = [
        tuple(Fraction(int(x in test.outcome_set)) for x in space.outcomes) for test in space.tests
    ]
    free_count = linalg.rank(equalities)
    ones = [Fraction(1)] * len(equalities)

    found = set()
    for zeros in itertools.combinations(range(n), n - free_count):
        free = [i for i in range(n) if i not in zeros]
        reduced = [tuple(row[i] for i in free) for row in equalities]
        solution = linalg.solve_unique(reduced, ones)
        if solution is None or any(v < 0 for v in solution):
            continue
        point = [Fraction(0)] * n
        for i, v in zip(free, solution):
            point[i] = v
        found.add(tuple(point))

    if not found:
        raise ModelError(f"state space of {space.name} is empty")
    vertices = tuple(sorted(found, reverse=True))
    poly = StateSpacePolytope(
        labels=space.outcomes,
        vertices=vertices,
        dim=linalg.affine_rank(vertices),
        source=PolytopeSource.DERIVED,
        name=space.name,
    )
    logger.debug("vertices_enumerated", space=space.name, count=len(vertices), dim=poly.dim)
    return poly


def polytope_from_vertices(
    labels: Sequence[str],
    points: Sequence[Sequence[object]],
    name: str = "",
    prune: bool = True,
) -> StateSpacePolytope:
    """Explicit polytope from a point list.

    Duplicates are dropped; with ``prune`` any point lying in the hull of
    the others is dropped with a warning so the V-representation is
    irredundant.
    """
    labels = tuple(labels)
    if not points:
        raise ModelError(f"polytope {name!r} has no vertices")
    unique: List[Point] = []
    for raw in points:
        if len(raw) != len(labels):
            raise DimensionMismatchError(
                f"vertex {list(raw)} has {len(raw)} coordinates, expected {len(labels)}"
            )
        point = tuple(parse_rational(x) for x in raw)
        if point not in unique:
            unique.append(point)

    if prune and len(unique) > 1:
        kept = list(unique)
        for point in unique:
            others = [p for p in kept if p != point]
            if not others:
                continue
            trial = StateSpacePolytope(
                labels, tuple(others), linalg.affine_rank(others), PolytopeSource.EXPLICIT, name
            )
            if _first_decomposition(trial, point) is not None:
                logger.warning("redundant_vertex_pruned", polytope=name,
                               point=[format_rational(x) for x in point])
                kept = others
        unique = kept

    vertices = tuple(unique)
    return StateSpacePolytope(
        labels=labels,
        vertices=vertices,
        dim=linalg.affine_rank(vertices),
        source=PolytopeSource.EXPLICIT,
        name=name,
    )


def sub_polytope(poly: StateSpacePolytope, indices: Sequence[int], name: str = "") -> StateSpacePolytope:
    """The face spanned by ``indices``, kept in the ambient coordinates."""
    vertices = tuple(poly.vertices[i] for i in indices)
    return StateSpacePolytope(
        labels=poly.labels,
        vertices=vertices,
        dim=linalg.affine_rank(vertices),
        source=PolytopeSource.EXPLICIT,
        name=name or f"{poly.name}[{','.join(map(str, indices))}]",
    )


def barycenter(poly: StateSpacePolytope, indices: Optional[Sequence[int]] = None) -> Point:
    if indices is None:
        indices = range(len(poly.vertices))
    return linalg.centroid([poly.vertices[i] for i in indices])


def state_coordinates(state: State, poly: StateSpacePolytope) -> Point:
    """Coordinates of ``state`` in the polytope's label order."""
    if set(poly.labels) != set(state.space.outcomes):
        raise ModelError(
            f"polytope {poly.name!r} and space {state.space.name!r} have different outcome labels"
        )
    return tuple(state[label] for label in poly.labels)


def point_to_state(space: TestSpace, poly: StateSpacePolytope, point: Sequence[Fraction]) -> State:
    """Inverse of :func:`state_coordinates`, validated against Ω(𝔄)."""
    if set(poly.labels) != set(space.outcomes):
        raise ModelError(
            f"polytope {poly.name!r} and space {space.name!r} have different outcome labels"
        )
    by_label = dict(zip(poly.labels, point))
    return state_from_point(space, [by_label[x] for x in space.outcomes])


# ---------------------------------------------------------------------------
# Decompositions and membership
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _supports(poly: StateSpacePolytope) -> Tuple[Tuple[Tuple[int, ...], Tuple[Point, ...]], ...]:
    """Affinely independent vertex subsets with the left inverse of [v; 1]."""
    lifted = [tuple(v) + (Fraction(1),) for v in poly.vertices]
    supports = []
    for size in range(1, poly.dim + 2):
        for subset in itertools.combinations(range(len(lifted)), size):
            inverse = linalg.left_inverse([lifted[i] for i in subset])
            if inverse is not None:
                supports.append((subset, inverse))
    return tuple(supports)


def _check_dimension(poly: StateSpacePolytope, point: Sequence[Fraction]) -> Point:
    if len(point) != poly.ambient_dim:
        raise DimensionMismatchError(
            f"point has {len(point)} coordinates, polytope {poly.name!r} lives in {poly.ambient_dim}"
        )
    return tuple(Fraction(x) for x in point)


def _decompositions(
    poly: StateSpacePolytope, point: Point, include_degenerate: bool
) -> Iterator[Decomposition]:
    lifted_point = point + (Fraction(1),)
    for subset, inverse in _supports(poly):
        weights = linalg.mat_vec(inverse, lifted_point)
        if any(w < 0 for w in weights):
            continue
        if not include_degenerate and any(w == 0 for w in weights):
            continue
        if sum(weights) != 1 or linalg.combine(weights, [poly.vertices[i] for i in subset]) != point:
            continue
        terms = tuple((w, i) for w, i in zip(weights, subset) if w > 0)
        yield Decomposition(terms=terms, target=point, support=subset)


def _first_decomposition(poly: StateSpacePolytope, point: Point) -> Optional[Decomposition]:
    return next(_decompositions(poly, point, include_degenerate=True), None)


def extreme_decompositions(
    poly: StateSpacePolytope,
    point: Sequence[Fraction],
    include_degenerate: bool = False,
) -> Iterator[Decomposition]:
    """Every decomposition of ``point`` over affinely independent vertices.

    By default only strictly positive weight vectors are yielded, so each
    decomposition appears once. With ``include_degenerate`` every
    affinely independent support containing the point is reported, zero
    weights included.

    Raises:
        OutsidePolytopeError: with a separating functional.
    """
    point = _check_dimension(poly, point)
    result = membership(poly, point)
    if not result.inside:
        raise OutsidePolytopeError(f"point lies outside {poly.name or 'the polytope'}", result.certificate)
    return _decompositions(poly, point, include_degenerate)


def _separate(poly: StateSpacePolytope, point: Point) -> SeparationCertificate:
    base = poly.vertices[0]
    offset_vec = linalg.vsub(point, base)
    directions = [linalg.vsub(v, base) for v in poly.vertices[1:]]
    # outside the affine hull: any orthogonal functional with nonzero value works
    for normal in linalg.nullspace(directions, poly.ambient_dim):
        value = linalg.dot(normal, offset_vec)
        if value != 0:
            normal = linalg.primitive(normal if value < 0 else linalg.vscale(Fraction(-1), normal))
            offset = linalg.dot(normal, base)
            return SeparationCertificate(normal, offset, linalg.dot(normal, point))
    for facet in enumerate_facets(poly):
        value = linalg.dot(facet.normal, point)
        if value < facet.offset:
            return SeparationCertificate(facet.normal, facet.offset, value)
    raise ModelError("no separating functional found for an exterior point")


def membership(poly: StateSpacePolytope, point: Sequence[Fraction]) -> MembershipResult:
    """Inside with one exact decomposition, or outside with a separating functional."""
    point = _check_dimension(poly, point)
    decomposition = _first_decomposition(poly, point)
    if decomposition is not None:
        return MembershipResult(inside=True, decomposition=decomposition)
    return MembershipResult(inside=False, certificate=_separate(poly, point))


# ---------------------------------------------------------------------------
# Facets
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _facets(poly: StateSpacePolytope) -> Tuple[Facet, ...]:
    k = poly.dim
    if k < 1:
        return ()
    vertices = poly.vertices
    base = vertices[0]
    span = linalg.row_basis([linalg.vsub(v, base) for v in vertices[1:]])
    seen = set()
    facets = []
    for subset in itertools.combinations(range(len(vertices)), k):
        anchor = vertices[subset[0]]
        rows = [
            tuple(linalg.dot(linalg.vsub(vertices[i], anchor), b) for b in span)
            for i in subset[1:]
        ]
        kernel = linalg.nullspace(rows, k)
        if len(kernel) != 1:
            continue
        normal = linalg.combine(kernel[0], span)
        offset = linalg.dot(normal, anchor)
        values = [linalg.dot(normal, v) for v in vertices]
        if all(v >= offset for v in values):
            pass
        elif all(v <= offset for v in values):
            normal = linalg.vscale(Fraction(-1), normal)
        else:
            continue
        on_face = tuple(i for i, v in enumerate(values) if v == offset)
        if on_face in seen:
            continue
        seen.add(on_face)
        normal = linalg.primitive(normal)
        facets.append(
            Facet(
                vertices=on_face,
                normal=normal,
                offset=linalg.dot(normal, anchor),
                dim=k - 1,
                simplicial=len(on_face) == k,
            )
        )
    return tuple(sorted(facets, key=lambda f: f.vertices))


def enumerate_facets(poly: StateSpacePolytope) -> List[Facet]:
    """All facets with supporting functionals ``normal · x ≥ offset``.

    Normals lie in the direction space of the polytope, so they are unique
    up to positive scaling; they are reported as coprime integer vectors.
    """
    return list(_facets(poly))


# ---------------------------------------------------------------------------
# Mixing entropy
# ---------------------------------------------------------------------------


def mixing_entropy(
    poly: StateSpacePolytope,
    point: Sequence[Fraction],
    functional: Optional[SchurConcaveFunctional] = None,
) -> EntropyResult:
    """S(ρ): minimum of T over the weights of every pure-state decomposition.

    T defaults to Shannon. Ties go to the lexicographically smallest
    support.
    """
    functional = functional or SHANNON
    best: Optional[EntropyResult] = None
    for decomposition in extreme_decompositions(poly, point):
        bits = evaluate_functional(decomposition.weights, functional)
        if (
            best is None
            or bits < best.bits
            or (bits == best.bits and decomposition.support < best.witness.support)
        ):
            best = EntropyResult(bits=bits, witness=decomposition)
    return best


def monoentropicity_scan(
    space: TestSpace,
    poly: StateSpacePolytope,
    sample_count: Optional[int] = None,
    seed: Optional[int] = None,
) -> MonoentropicityReport:
    """Compare H and S on vertices, edge midpoints, the barycenter and random mixtures.

    A clean scan is evidence of monoentropicity on the sampled points, not
    a proof.
    """
    settings = get_settings()
    sample_count = settings.scan_sample_count if sample_count is None else sample_count
    seed = settings.seed if seed is None else seed
    if set(poly.labels) != set(space.outcomes):
        raise ModelError(
            f"polytope {poly.name!r} does not share the outcome labels of {space.name!r}"
        )

    vertices = poly.vertices
    n = len(vertices)
    points: List[Tuple[str, Point]] = [(f"vertex {i}", v) for i, v in enumerate(vertices)]
    for i, j in itertools.combinations(range(n), 2):
        points.append((f"midpoint {i}-{j}", linalg.centroid([vertices[i], vertices[j]])))
    points.append(("barycenter", barycenter(poly)))

    rng = np.random.default_rng(seed)
    for s in range(sample_count):
        size = int(rng.integers(2, n + 1)) if n > 1 else 1
        chosen = sorted(int(i) for i in rng.choice(n, size=size, replace=False))
        raw = [int(w) for w in rng.integers(1, 17, size=size)]
        total = sum(raw)
        weights = [Fraction(w, total) for w in raw]
        points.append((f"sample {s}", linalg.combine(weights, [vertices[i] for i in chosen])))

    max_gap = 0.0
    witnesses: List[ScanWitness] = []
    for kind, point in points:
        state = point_to_state(space, poly, point)
        h = measurement_entropy(state)
        s = mixing_entropy(poly, point)
        gap = abs(h.bits - s.bits)
        max_gap = max(max_gap, gap)
        if gap > settings.tolerance:
            witnesses.append(
                ScanWitness(
                    kind=kind,
                    point={label: format_rational(x) for label, x in zip(poly.labels, point)},
                    measurement_entropy=h.bits,
                    mixing_entropy=s.bits,
                    minimizing_test=h.witness.id,
                    minimizing_decomposition=s.describe_witness(),
                )
            )
    logger.info("monoentropicity_scan", system=space.name, points=len(points),
                witnesses=len(witnesses), max_gap=max_gap)
    return MonoentropicityReport(
        system=space.name,
        seed=seed,
        points_evaluated=len(points),
        max_gap=max_gap,
        monoentropic_on_sample=not witnesses,
        witnesses=witnesses,
    )
