"""Test spaces, states, and local / measurement / generalized entropies."""

import math
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import structlog

from .config import get_settings
from .errors import FunctionalError, InvalidDistributionError, ModelError, StateValidationError
from .models import (
    SHANNON,
    EntropyResult,
    FunctionalKind,
    SchurConcaveFunctional,
    State,
    Test,
    TestSpace,
    Violation,
    parse_rational,
)

logger = structlog.get_logger(__name__)

Number = Union[Fraction, int, float]


def check_distribution(weights: Sequence[Number]) -> None:
    if not weights:
        raise InvalidDistributionError("empty distribution")
    exact = all(isinstance(w, (Fraction, int)) and not isinstance(w, bool) for w in weights)
    for w in weights:
        if w < 0:
            raise InvalidDistributionError(f"negative weight {w}")
    total = sum(weights)
    if exact:
        if total != 1:
            raise InvalidDistributionError(f"weights sum to {total}, not 1")
    elif abs(float(total) - 1.0) > get_settings().tolerance:
        raise InvalidDistributionError(f"weights sum to {float(total)!r}, not 1")


def _support(weights: Sequence[Number]) -> np.ndarray:
    # sorted so that permuted distributions give bit-identical entropies
    return np.array(sorted(float(w) for w in weights if w > 0))


def shannon_entropy(weights: Sequence[Number]) -> float:
    """Shannon entropy in bits, with 0·log 0 = 0.

    Args:
        weights: Probabilities; exact fractions are checked exactly,
            floats within the configured tolerance.

    Returns:
        −Σ p log₂ p (never negative).
    """
    check_distribution(weights)
    p = _support(weights)
    bits = float(-np.sum(p * np.log2(p)))
    return bits if bits > 0 else 0.0


def make_functional(name: str, parameter: Optional[float] = None) -> SchurConcaveFunctional:
    """Build a functional from its CLI/JSON name, checking the parameter."""
    try:
        kind = FunctionalKind(name.strip().lower().replace("-", "_"))
    except ValueError:
        raise FunctionalError(
            f"unknown functional {name!r}; expected one of {[k.value for k in FunctionalKind]}"
        )
    if kind in (FunctionalKind.RENYI, FunctionalKind.TSALLIS):
        if parameter is None:
            raise FunctionalError(f"{kind.value} needs a parameter")
        if kind is FunctionalKind.RENYI and parameter < 0:
            raise FunctionalError(f"renyi order must be >= 0, got {parameter}")
        if kind is FunctionalKind.TSALLIS and parameter <= 0:
            raise FunctionalError(f"tsallis index must be > 0, got {parameter}")
    elif parameter is not None:
        raise FunctionalError(f"{kind.value} takes no parameter")
    return SchurConcaveFunctional(kind=kind, parameter=parameter)


def is_strictly_schur_concave(functional: SchurConcaveFunctional) -> bool:
    if functional.kind is FunctionalKind.MIN_ENTROPY:
        return False
    if functional.kind is FunctionalKind.RENYI:
        return 0 < functional.parameter < math.inf
    return True


def evaluate_functional(weights: Sequence[Number], functional: SchurConcaveFunctional) -> float:
    """T(p) for a finite distribution p."""
    kind, a = functional.kind, functional.parameter
    if kind is FunctionalKind.SHANNON or (kind is FunctionalKind.RENYI and a == 1):
        return shannon_entropy(weights)
    check_distribution(weights)
    p = _support(weights)
    if kind is FunctionalKind.MIN_ENTROPY or (kind is FunctionalKind.RENYI and a == math.inf):
        value = float(-np.log2(p.max()))
    elif kind is FunctionalKind.RENYI:
        if a is None or a < 0:
            raise FunctionalError(f"undefined renyi order {a!r}")
        if a == 0:
            value = float(np.log2(len(p)))
        else:
            value = float(np.log2(np.sum(p ** a)) / (1.0 - a))
    elif kind is FunctionalKind.TSALLIS:
        if a is None or a <= 0:
            raise FunctionalError(f"undefined tsallis index {a!r}")
        if a == 1:
            # q → 1 limit, natural-log Shannon entropy
            value = shannon_entropy(weights) * math.log(2)
        else:
            value = float((1.0 - np.sum(p ** a)) / (a - 1.0))
    else:
        raise FunctionalError(f"unsupported functional {functional.name}")
    return value if value > 0 else 0.0


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


def find_violations(space: TestSpace, candidate: Mapping[str, object]) -> List[Violation]:
    """Every violated bound or normalization condition of a raw value map."""
    violations: List[Violation] = []
    values: Dict[str, Fraction] = {}
    for label in candidate:
        if label not in space.index:
            violations.append(Violation("unknown", label, f"not an outcome of {space.name}"))
    for label in space.outcomes:
        if label not in candidate:
            violations.append(Violation("missing", label, "no value assigned"))
            continue
        value = parse_rational(candidate[label])
        values[label] = value
        if value < 0:
            violations.append(Violation("bound", label, f"value {value} < 0", -value))
        elif value > 1:
            violations.append(Violation("bound", label, f"value {value} > 1", value - 1))
    for test in space.tests:
        if not all(x in values for x in test.outcomes):
            continue
        total = sum(values[x] for x in test.outcomes)
        if total != 1:
            violations.append(
                Violation("normalization", test.id, f"sums to {total}", total - 1)
            )
    return violations


def validate_state(space: TestSpace, candidate: Mapping[str, object]) -> State:
    """Validate a raw outcome → value map against Ω(𝔄).

    Raises:
        StateValidationError: carrying every violation found.
    """
    violations = find_violations(space, candidate)
    if violations:
        raise StateValidationError(f"invalid state on {space.name}", violations)
    return State(space=space, values=tuple(parse_rational(candidate[x]) for x in space.outcomes))


def state_from_point(space: TestSpace, point: Sequence[Fraction]) -> State:
    """Validate coordinates given in the space's outcome order."""
    if len(point) != len(space.outcomes):
        raise ModelError(f"expected {len(space.outcomes)} coordinates, got {len(point)}")
    return validate_state(space, dict(zip(space.outcomes, point)))


def deterministic_state(space: TestSpace, outcome: str) -> State:
    """The state of a classical system concentrated on ``outcome``."""
    if not space.is_classical:
        raise ModelError(f"{space.name} is not classical")
    return validate_state(space, {x: int(x == outcome) for x in space.outcomes})


def mix_states(weights: Sequence[Fraction], states: Sequence[State]) -> State:
    """Exact convex combination Σ w_i α_i of states on one space."""
    check_distribution(list(weights))
    space = states[0].space
    if any(s.space != space for s in states):
        raise ModelError("cannot mix states on different test spaces")
    values = tuple(
        sum((w * s.values[i] for w, s in zip(weights, states)), Fraction(0))
        for i in range(len(space.outcomes))
    )
    return State(space=space, values=values)


# ---------------------------------------------------------------------------
# Entropies
# ---------------------------------------------------------------------------


def local_entropy(state: State, test: Test) -> float:
    """H_E(α): Shannon entropy of α restricted to the test E."""
    if not state.space.has_test(test):
        raise ModelError(f"test {test.id} does not belong to {state.space.name}")
    return shannon_entropy(state.restrict(test))


def generalized_entropy(state: State, functional: SchurConcaveFunctional = SHANNON) -> EntropyResult:
    """min over tests E of T(α|_E); the first minimizing test is the witness."""
    best: Optional[EntropyResult] = None
    for test in state.space.tests:
        bits = evaluate_functional(state.restrict(test), functional)
        if best is None or bits < best.bits:
            best = EntropyResult(bits=bits, witness=test)
    return best


def measurement_entropy(state: State) -> EntropyResult:
    """H(α) = min_E H_E(α), attained on a finite test space."""
    result = generalized_entropy(state, SHANNON)
    logger.debug("measurement_entropy", space=state.space.name, bits=result.bits,
                 witness=result.witness.id)
    return result


def certainty_witness(state: State) -> Optional[str]:
    """Some outcome x with α(x) = 1, or ``None``; present iff H(α) = 0."""
    for label, value in zip(state.space.outcomes, state.values):
        if value == 1:
            return label
    return None
