"""Conditional entropy, mutual information, SSA and Holevo reports.

Every subset entropy is a measurement entropy of the corresponding
marginal, minimized over the same test family as the parent composite.
Negative values are returned as they are.
"""

import itertools
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple

import structlog

from .composite import (
    conditional,
    joint_measurement_entropy,
    marginal,
    resolve_subset,
)
from .config import get_settings
from .core_model import check_distribution, measurement_entropy, shannon_entropy
from .errors import InvalidDistributionError, ModelError, OverlappingSubsetsError
from .models import (
    CompositeMode,
    CompositeSystem,
    EntropyResult,
    Ensemble,
    JointState,
    State,
    SubsetSpec,
    TestSpace,
)
from .reports import HolevoReport, SSAReport

logger = structlog.get_logger(__name__)


def entropy_of(joint: JointState, subset: SubsetSpec) -> EntropyResult:
    """H of the marginal on ``subset``."""
    reduced = marginal(joint, subset)
    if isinstance(reduced, State):
        return measurement_entropy(reduced)
    return joint_measurement_entropy(reduced)


def _disjoint(joint: JointState, *specs: SubsetSpec) -> Tuple[Tuple[int, ...], ...]:
    subsets = tuple(resolve_subset(joint.system, s) for s in specs)
    for x, y in itertools.combinations(subsets, 2):
        shared = set(x) & set(y)
        if shared:
            names = [joint.system.names[i] for i in sorted(shared)]
            raise OverlappingSubsetsError(f"component subsets overlap on {names}")
    return subsets


class _SubsetEntropies:
    """Per-call cache of subset entropies keyed by sorted component indices."""

    def __init__(self, joint: JointState):
        self.joint = joint
        self.cache: Dict[Tuple[int, ...], float] = {}

    def __call__(self, *subsets: Tuple[int, ...]) -> float:
        key = tuple(sorted(set().union(*subsets)))
        if key not in self.cache:
            self.cache[key] = entropy_of(self.joint, key).bits
        return self.cache[key]


def conditional_entropy(joint: JointState, target: SubsetSpec, given: SubsetSpec) -> float:
    """H(A|B) = H(AB) − H(B); may be negative."""
    a, b = _disjoint(joint, target, given)
    h = _SubsetEntropies(joint)
    return h(a, b) - h(b)


def mutual_information(joint: JointState, a: SubsetSpec, b: SubsetSpec) -> float:
    """I(A:B) = H(A) + H(B) − H(AB)."""
    a, b = _disjoint(joint, a, b)
    h = _SubsetEntropies(joint)
    value = h(a) + h(b) - h(a, b)
    if value < -get_settings().tolerance:
        logger.warning("subadditivity_violated", a=list(a), b=list(b), value=value)
    return value


def conditional_mutual_information(
    joint: JointState, a: SubsetSpec, b: SubsetSpec, c: SubsetSpec
) -> float:
    """I(A:B|C) = H(AC) + H(BC) − H(ABC) − H(C)."""
    a, b, c = _disjoint(joint, a, b, c)
    h = _SubsetEntropies(joint)
    return h(a, c) + h(b, c) - h(a, b, c) - h(c)


def ssa_report(joint: JointState, a: SubsetSpec, b: SubsetSpec, c: SubsetSpec) -> SSAReport:
    """Evaluate the four equivalent forms of strong subadditivity.

    ``c`` is the conditioning system: form (d) is I(A:B|C), form (c) is
    H(ABC) − H(AC) − H(BC) + H(C) = −I(A:B|C). The state is strongly
    subadditive iff form (d) ≥ 0.
    """
    a, b, c = _disjoint(joint, a, b, c)
    tol = get_settings().tolerance
    h = _SubsetEntropies(joint)
    h_a, h_c, h_ac, h_bc, h_abc = h(a), h(c), h(a, c), h(b, c), h(a, b, c)

    mutual_a_bc = h_a + h_bc - h_abc
    mutual_a_c = h_a + h_c - h_ac
    form_a = mutual_a_bc - mutual_a_c
    form_b = (h_ac - h_c) - (h_abc - h_bc)
    form_c = h_abc - h_ac - h_bc + h_c
    form_d = (h_ac - h_c) + (h_bc - h_c) - (h_abc - h_c)

    flags = (form_a >= -tol, form_b >= -tol, form_c <= tol, form_d >= -tol)
    agree = (
        len(set(flags)) == 1
        and abs(form_a - form_d) <= tol
        and abs(form_b - form_d) <= tol
        and abs(form_c + form_d) <= tol
    )
    if not agree:
        logger.warning("ssa_forms_disagree", form_a=form_a, form_b=form_b, form_c=form_c, form_d=form_d)
    names = joint.system.names
    return SSAReport(
        subsets={
            "A": [names[i] for i in a],
            "B": [names[i] for i in b],
            "C": [names[i] for i in c],
        },
        h_a=h_a,
        h_c=h_c,
        h_ac=h_ac,
        h_bc=h_bc,
        h_abc=h_abc,
        form_a=form_a,
        form_b=form_b,
        form_c=form_c,
        form_d=form_d,
        satisfied_a=flags[0],
        satisfied_b=flags[1],
        satisfied_c=flags[2],
        satisfied_d=flags[3],
        forms_agree=agree,
    )


def chain_rule_entropy(joint: JointState, classical_component: SubsetSpec = 0) -> float:
    """H(A) + Σ_e p(e) H(rest | e) for a classical component A."""
    (c,) = resolve_subset(joint.system, classical_component)
    space = joint.system.components[c]
    if not space.is_classical:
        raise ModelError(f"component {joint.system.names[c]} is not classical")
    total = entropy_of(joint, (c,)).bits
    for outcome in space.outcomes:
        view = conditional(joint, c, outcome)
        if view.is_null:
            continue
        if isinstance(view.result, State):
            bits = measurement_entropy(view.result).bits
        else:
            bits = joint_measurement_entropy(view.result).bits
        total += float(view.probability) * bits
    return total


# ---------------------------------------------------------------------------
# Classical information and ensembles
# ---------------------------------------------------------------------------


def classical_mutual_information(table: Mapping[Tuple[object, object], Fraction]) -> float:
    """I(X:Y) of an exact joint distribution given as ``{(x, y): p}``."""
    check_distribution(list(table.values()))
    px: Dict[object, Fraction] = {}
    py: Dict[object, Fraction] = {}
    for (x, y), p in table.items():
        px[x] = px.get(x, Fraction(0)) + p
        py[y] = py.get(y, Fraction(0)) + p
    value = shannon_entropy(list(px.values())) + shannon_entropy(list(py.values()))
    value -= shannon_entropy(list(table.values()))
    return value if value > 0 else 0.0


def make_ensemble(
    entries: Sequence[Tuple[object, State]], labels: Sequence[str] = ()
) -> Ensemble:
    """Validate weights (positive, summing to one) and a common system."""
    weights = [Fraction(w) for w, _ in entries]
    if any(w <= 0 for w in weights):
        raise InvalidDistributionError("ensemble weights must be positive")
    check_distribution(weights)
    states = [s for _, s in entries]
    if any(s.space != states[0].space for s in states):
        raise ModelError("ensemble members live on different systems")
    return Ensemble(entries=tuple(zip(weights, states)), labels=tuple(labels))


def average_state(ensemble: Ensemble) -> State:
    space = ensemble.space
    values = tuple(
        sum((w * s.values[i] for w, s in ensemble.entries), Fraction(0))
        for i in range(len(space.outcomes))
    )
    return State(space=space, values=values)


def record_state(ensemble: Ensemble) -> JointState:
    """ω^{AB} = Σ_x p_x δ_x ⊗ β_x with A the classical record of x."""
    record = TestSpace.classical(ensemble.labels, name="record")
    space = ensemble.space
    system = CompositeSystem(
        components=(record, space),
        mode=CompositeMode.FOULIS_RANDALL,
        names=("A", "B"),
    )
    values = []
    for x, y in system.cells:
        weight, state = ensemble.entries[ensemble.labels.index(x)]
        values.append(weight * state[y])
    return JointState(system=system, values=tuple(values))


def holevo_quantity(ensemble: Ensemble) -> float:
    """χ = H(Σ p_x β_x) − Σ p_x H(β_x)."""
    chi = measurement_entropy(average_state(ensemble)).bits
    for weight, state in ensemble.entries:
        chi -= float(weight) * measurement_entropy(state).bits
    return chi


def holevo_report(ensemble: Ensemble) -> HolevoReport:
    """χ, I(A:B) of the record state, and the best classical I(E:F) over B's tests."""
    tol = get_settings().tolerance
    chi = holevo_quantity(ensemble)
    joint = record_state(ensemble)
    mutual = mutual_information(joint, 0, 1)
    matches = abs(chi - mutual) <= tol
    if not matches:
        logger.warning("holevo_identity_mismatch", chi=chi, mutual_ab=mutual)

    best: Optional[Tuple[float, str]] = None
    for test in ensemble.space.tests:
        table = {
            (x, f): weight * state[f]
            for x, (weight, state) in zip(ensemble.labels, ensemble.entries)
            for f in test.outcomes
        }
        info = classical_mutual_information(table)
        if best is None or info > best[0]:
            best = (info, test.id)
    return HolevoReport(
        chi=chi,
        mutual_ab=mutual,
        chi_matches_mutual=matches,
        max_product_info=best[0],
        attaining_tests=[joint.system.components[0].tests[0].id, best[1]],
        satisfied=best[0] <= chi + tol,
    )
