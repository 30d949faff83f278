"""Constructive non-concavity of the mixing entropy on non-simplicial polytopes.

If some facet is not a simplex the search recurses into it (a witness on a
face is a witness on the polytope, since decompositions of a point in a
face only use that face's vertices). Otherwise two facets F₁, F₂ sharing
d − 1 vertices and a vertex V outside both give a triangle T spanned by
the barycenters ρ₁, ρ₂ of F₁, F₂ and ρ₃ of F₁ ∩ F₂, and a simplex
H = conv(F₁ ∩ F₂, V). The segment T ∩ H starts at ρ₃; its far endpoint ρ
has a decomposition with fewer or less uniform weights than the mixture
of ρ₁, ρ₂, ρ₃ it is built from.
"""

import itertools
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import structlog

from . import linalg
from .config import get_settings
from .errors import ConstructionError, OutsidePolytopeError
from .geometry import barycenter, enumerate_facets, mixing_entropy, sub_polytope
from .models import (
    ConcavityWitness,
    ConstructionTrace,
    NotApplicable,
    NotApplicableReason,
    Point,
    SchurConcaveFunctional,
    StateSpacePolytope,
    format_rational,
)
from .reports import WitnessReport

logger = structlog.get_logger(__name__)

ConcavityResult = Union[ConcavityWitness, NotApplicable]


def find_concavity_violation(poly: StateSpacePolytope) -> ConcavityResult:
    """A verified-by-construction witness S(ρ) < Σ p_i S(ρ_i), or why none applies.

    Raises:
        ConstructionError: if an exact step of the construction fails; the
            partial trace is attached.
    """
    if poly.dim < 2:
        if poly.dim == 1:
            return NotApplicable(NotApplicableReason.SIMPLEX, "a segment is a 1-simplex")
        return NotApplicable(NotApplicableReason.DEGENERATE, f"dimension {poly.dim}")
    if poly.is_simplex:
        return NotApplicable(NotApplicableReason.SIMPLEX, f"{len(poly.vertices)} affinely independent vertices")
    return _construct(poly, tuple(range(len(poly.vertices))), ())


def _construct(
    poly: StateSpacePolytope,
    index_map: Tuple[int, ...],
    recursed: Tuple[Tuple[int, ...], ...],
) -> ConcavityWitness:
    facets = enumerate_facets(poly)
    for facet in facets:
        if not facet.simplicial:
            face = sub_polytope(poly, facet.vertices)
            original = tuple(index_map[i] for i in facet.vertices)
            logger.debug("concavity_recurse", polytope=poly.name, face=list(original), dim=face.dim)
            return _construct(face, original, recursed + (original,))

    d = poly.dim
    pair = None
    for f1, f2 in itertools.combinations(facets, 2):
        shared = tuple(sorted(set(f1.vertices) & set(f2.vertices)))
        if len(shared) == d - 1 and linalg.affine_rank([poly.vertices[i] for i in shared]) == d - 2:
            pair = (f1, f2, shared)
            break
    if pair is None:
        raise ConstructionError(
            "no pair of facets meets in a (d-2)-simplex",
            ConstructionTrace(recursed_into=recursed),
        )
    f1, f2, shared = pair
    outside = [i for i in range(len(poly.vertices)) if i not in f1.vertices and i not in f2.vertices]
    apex = outside[0]

    rho_1 = barycenter(poly, f1.vertices)
    rho_2 = barycenter(poly, f2.vertices)
    rho_3 = barycenter(poly, shared)
    trace = ConstructionTrace(
        facet_1=tuple(index_map[i] for i in f1.vertices),
        facet_2=tuple(index_map[i] for i in f2.vertices),
        apex=index_map[apex],
        rho_1=rho_1,
        rho_2=rho_2,
        rho_3=rho_3,
        recursed_into=recursed,
    )

    x = [poly.vertices[i] for i in shared]
    v = poly.vertices[apex]
    # unknowns (s, t, c_2..c_{d-1}, μ):
    # s(ρ₁−ρ₃) + t(ρ₂−ρ₃) − Σ c_j (x_j − x_1) − μ (V − x_1) = 0
    columns = [linalg.vsub(rho_1, rho_3), linalg.vsub(rho_2, rho_3)]
    columns += [linalg.vscale(Fraction(-1), linalg.vsub(xj, x[0])) for xj in x[1:]]
    columns.append(linalg.vscale(Fraction(-1), linalg.vsub(v, x[0])))
    rows = [tuple(col[r] for col in columns) for r in range(poly.ambient_dim)]
    kernel = linalg.nullspace(rows, len(columns))
    if len(kernel) != 1:
        raise ConstructionError(f"T ∩ H is not a segment (kernel dimension {len(kernel)})", trace)
    direction = kernel[0]
    s, t = direction[0], direction[1]
    if s + t < 0:
        direction = linalg.vscale(Fraction(-1), direction)
        s, t = -s, -t
    c, mu = direction[2:-1], direction[-1]
    if s < 0 or t < 0 or mu <= 0 or s + t == 0:
        raise ConstructionError(f"segment leaves the triangle or the simplex (s={s}, t={t}, μ={mu})", trace)

    # barycentric coordinates in H = (x_1, ..., x_{d-1}, V) along ρ₃ + τ·direction
    start = [Fraction(1, d - 1)] * (d - 1) + [Fraction(0)]
    step = [-sum(c, Fraction(0)) - mu] + list(c) + [mu]
    limits = [1 / (s + t)]
    limits += [b0 / -db for b0, db in zip(start, step) if db < 0]
    tau = min(limits)
    h_coords = [b0 + tau * db for b0, db in zip(start, step)]
    rho = linalg.vadd(
        rho_3,
        linalg.vadd(linalg.vscale(tau * s, linalg.vsub(rho_1, rho_3)),
                    linalg.vscale(tau * t, linalg.vsub(rho_2, rho_3))),
    )

    if any(b == 0 for b in h_coords):
        case = "i"
        weights = [(tau * s, rho_1), (tau * t, rho_2), (1 - tau * (s + t), rho_3)]
    else:
        case = "ii"
        weights = [(tau * s, rho_1), (tau * t, rho_2)]
    mixture = tuple((p, point) for p, point in weights if p > 0)
    trace = ConstructionTrace(
        facet_1=trace.facet_1,
        facet_2=trace.facet_2,
        apex=trace.apex,
        rho_1=rho_1,
        rho_2=rho_2,
        rho_3=rho_3,
        segment=(rho_3, rho),
        case=case,
        recursed_into=recursed,
        notes=(f"tau={tau}", "H coordinates: " + ", ".join(format_rational(b) for b in h_coords)),
    )
    if linalg.combine([p for p, _ in mixture], [q for _, q in mixture]) != rho:
        raise ConstructionError("mixture does not reconstruct ρ", trace)

    s_rho = mixing_entropy(poly, rho).bits
    average = sum(float(p) * mixing_entropy(poly, point).bits for p, point in mixture)
    witness = ConcavityWitness(rho=rho, mixture=mixture, s_rho=s_rho, mixture_avg=average, trace=trace)
    if witness.gap <= get_settings().tolerance:
        raise ConstructionError(f"construction produced no gap ({witness.gap:.3e})", trace)
    logger.info("concavity_witness", polytope=poly.name, case=case, gap=witness.gap)
    return witness


def verify_witness(
    poly: StateSpacePolytope,
    witness: ConcavityWitness,
    functional: Optional[SchurConcaveFunctional] = None,
) -> bool:
    """Recompute every entropy and check Σ p_i ρ_i = ρ exactly and a positive gap.

    With ``functional`` the mixing entropies use T in place of Shannon.
    """
    weights = [p for p, _ in witness.mixture]
    points = [q for _, q in witness.mixture]
    if not witness.mixture or any(p <= 0 for p in weights) or sum(weights) != 1:
        return False
    if linalg.combine(weights, points) != tuple(witness.rho):
        return False
    try:
        s_rho = mixing_entropy(poly, witness.rho, functional).bits
        average = sum(float(p) * mixing_entropy(poly, q, functional).bits for p, q in witness.mixture)
    except OutsidePolytopeError:
        return False
    return average - s_rho > get_settings().tolerance


def _points(points: Sequence[Point]) -> List[str]:
    return [format_rational(x) for x in points]


def witness_report(
    poly: StateSpacePolytope,
    result: ConcavityResult,
    functional: Optional[SchurConcaveFunctional] = None,
) -> WitnessReport:
    if isinstance(result, NotApplicable):
        return WitnessReport(applicable=False, reason=f"{result.reason.value}: {result.detail}")
    trace = result.trace
    return WitnessReport(
        applicable=True,
        rho=_points(result.rho),
        mixture=[{"p": format_rational(p), "point": _points(q)} for p, q in result.mixture],
        s_rho=result.s_rho,
        mixture_avg=result.mixture_avg,
        gap=result.gap,
        case=trace.case,
        trace={
            "facet_1": list(trace.facet_1),
            "facet_2": list(trace.facet_2),
            "apex": trace.apex,
            "rho_1": _points(trace.rho_1),
            "rho_2": _points(trace.rho_2),
            "rho_3": _points(trace.rho_3),
            "segment": [_points(p) for p in trace.segment],
            "recursed_into": [list(f) for f in trace.recursed_into],
            "notes": list(trace.notes),
        },
        verified=verify_witness(poly, result, functional),
    )
