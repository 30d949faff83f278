"""PR box, CHSH, the van Dam protocol and the information-causality sum.

Two-outcome tests encode outcomes as bits: unprimed labels are 0 (value
+1 in correlators), primed labels are 1 (value −1).
"""

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import structlog

from .catalog import VAN_DAM_ROWS, pr_box_state, van_dam_system, vandam_efb_state
from .composite import is_nonsignaling, validate_joint_state
from .config import get_settings
from .errors import ModelError, ProtocolError, SignalingError
from .infotheory import classical_mutual_information, conditional_mutual_information, entropy_of
from .models import Box, ICProtocol, JointState, Test
from .reports import ChshReport, ICReport, VanDamReport

logger = structlog.get_logger(__name__)

NO_OUTCOME = "-"
Settings = Tuple[Tuple[str, str], Tuple[str, str]]


def outcome_bit(label: str) -> int:
    return 1 if label.endswith("'") else 0


def pr_box() -> Box:
    return Box(joint=pr_box_state())


def make_box(joint: JointState) -> Box:
    """Wrap a bipartite joint state, rejecting signaling ones."""
    if len(joint.system) != 2:
        raise ModelError("a box is a bipartite joint state")
    violation = is_nonsignaling(joint)
    if violation is not None:
        raise SignalingError("box is signaling", violation)
    return Box(joint=joint)


# ---------------------------------------------------------------------------
# CHSH
# ---------------------------------------------------------------------------


def _two_outcome(box: Box, side: int, key: str) -> Test:
    test = box.joint.system.components[side].test(key)
    if len(test) != 2:
        raise ModelError(f"CHSH needs two-outcome tests; {test.id} has {len(test)}")
    return test


def _default_settings(box: Box) -> Settings:
    sides = []
    for space in box.joint.system.components:
        if len(space.tests) < 2:
            raise ModelError(f"{space.name} needs two tests for CHSH")
        sides.append((space.tests[0].id, space.tests[1].id))
    return (sides[0], sides[1])


def correlators(box: Box, settings: Optional[Settings] = None) -> Dict[Tuple[int, int], Fraction]:
    """E_ij = Σ (−1)^(a⊕b) ω(a, b) for Alice's test i and Bob's test j (1-based)."""
    settings = settings or _default_settings(box)
    result = {}
    for i, a_key in enumerate(settings[0], start=1):
        alice = _two_outcome(box, 0, a_key)
        for j, b_key in enumerate(settings[1], start=1):
            bob = _two_outcome(box, 1, b_key)
            value = Fraction(0)
            for a, b in itertools.product(alice.outcomes, bob.outcomes):
                sign = -1 if outcome_bit(a) ^ outcome_bit(b) else 1
                value += sign * box.joint[(a, b)]
            result[(i, j)] = value
    return result


def chsh_placements(box: Box, settings: Optional[Settings] = None) -> List[Fraction]:
    """S with the minus sign on E11, E12, E21 and E22 respectively."""
    e = correlators(box, settings)
    total = sum(e.values())
    return [total - 2 * e[key] for key in ((1, 1), (1, 2), (2, 1), (2, 2))]


def chsh_value(box: Box, settings: Optional[Settings] = None, placement: Optional[int] = None) -> float:
    """|E₁₁ + E₁₂ + E₂₁ − E₂₂|, maximized over sign placements unless one is given.

    ``placement`` 0..3 puts the minus sign on E11, E12, E21 or E22.
    """
    values = chsh_placements(box, settings)
    if placement is not None:
        return float(abs(values[placement]))
    return float(max(abs(v) for v in values))


def chsh_report(box: Box, settings: Optional[Settings] = None) -> ChshReport:
    settings = settings or _default_settings(box)
    e = correlators(box, settings)
    return ChshReport(
        settings=[list(settings[0]), list(settings[1])],
        correlators={f"E{i}{j}": float(v) for (i, j), v in e.items()},
        value=chsh_value(box, settings),
        placements=[float(v) for v in chsh_placements(box, settings)],
    )


# ---------------------------------------------------------------------------
# van Dam protocol
# ---------------------------------------------------------------------------


def _alice_test_key(e1: str, e2: str) -> str:
    return "{a1,a1'}" if e1 == e2 else "{a2,a2'}"


def _alice_message(e1: str, a: str) -> str:
    # complement of (outcome ⊕ E1); Bob reads E_k as F ⊕ b_k
    return str(outcome_bit(a) ^ int(e1) ^ 1)


def execute_van_dam(box: Box) -> JointState:
    """Run the protocol mechanically on ``box`` and average over Alice's outcome.

    Alice measures her first test when E₁ = E₂ and her second otherwise,
    then sends F. The result lives on E₁, E₂, F and Bob's system.
    """
    system = van_dam_system()
    bob = box.joint.system.components[1]
    if set(bob.outcomes) != set(system.components[3].outcomes):
        raise ModelError("the van Dam protocol expects Bob's outcomes b1, b1', b2, b2'")
    values: Dict[Tuple[str, ...], Fraction] = {cell: Fraction(0) for cell in system.cells}
    for e1, e2 in itertools.product("01", repeat=2):
        alice_test = box.joint.system.components[0].test(_alice_test_key(e1, e2))
        for a in alice_test.outcomes:
            f = _alice_message(e1, a)
            for y in bob.outcomes:
                values[(e1, e2, f, y)] += Fraction(1, 4) * box.joint[(a, y)]
    return validate_joint_state(system, values)


def van_dam_intermediate_state(box: Optional[Box] = None) -> Tuple[JointState, VanDamReport]:
    """The tabulated E₁E₂FB state with its entropy table.

    The stored table is checked against a mechanical run of the protocol
    on ``box`` (the PR box by default).
    """
    box = box or pr_box()
    joint = vandam_efb_state()
    executed = execute_van_dam(box)
    matches = executed == joint
    if not matches:
        logger.warning("van_dam_table_mismatch")
    table = {
        "".join(row): {y: str(Fraction(1, 8)) for y in outcomes} for row, outcomes in VAN_DAM_ROWS.items()
    }
    report = VanDamReport(
        table=table,
        matches_mechanical_execution=matches,
        h_e1_f_b=entropy_of(joint, "E1,F,B").bits,
        h_e2_f_b=entropy_of(joint, "E2,F,B").bits,
        h_f_b=entropy_of(joint, "F,B").bits,
        h_e1_e2_f_b=entropy_of(joint, "E1,E2,F,B").bits,
        cmi_e1_e2_given_fb=conditional_mutual_information(joint, "E1", "E2", "F,B"),
    )
    return joint, report


# ---------------------------------------------------------------------------
# Information causality
# ---------------------------------------------------------------------------


def van_dam_protocol(box: Optional[Box] = None) -> ICProtocol:
    """N = 2, m = 1 strategy that lets Bob learn either bit with certainty."""
    box = box or pr_box()
    alice_space = box.joint.system.components[0]
    alice_tests, alice_messages = {}, {}
    for e1, e2 in itertools.product("01", repeat=2):
        key = _alice_test_key(e1, e2)
        alice_tests[e1 + e2] = key
        for a in alice_space.test(key).outcomes:
            alice_messages[(e1 + e2, a)] = _alice_message(e1, a)
    bob_tests, bob_guesses = {}, {}
    for k, message in itertools.product((1, 2), "01"):
        test = f"{{b{k},b{k}'}}"
        bob_tests[(k, message)] = test
        for y in (f"b{k}", f"b{k}'"):
            bob_guesses[(k, message, y)] = int(message) ^ outcome_bit(y)
    return ICProtocol(
        n_bits=2,
        message_bits=1,
        shared=box.joint,
        alice_tests=alice_tests,
        alice_messages=alice_messages,
        bob_tests=bob_tests,
        bob_guesses=bob_guesses,
        name="vandam",
    )


def _inputs(n_bits: int) -> List[str]:
    return ["".join(bits) for bits in itertools.product("01", repeat=n_bits)]


def verbatim_protocol(n_bits: int = 2) -> ICProtocol:
    """No shared state; Alice sends E₁, Bob repeats it and guesses 0 otherwise."""
    messages = {(x, NO_OUTCOME): x[0] for x in _inputs(n_bits)}
    guesses = {
        (k, message, NO_OUTCOME): (int(message) if k == 1 else 0)
        for k in range(1, n_bits + 1)
        for message in "01"
    }
    return ICProtocol(n_bits=n_bits, message_bits=1, shared=None, alice_messages=messages,
                      bob_guesses=guesses, name="verbatim")


def null_protocol(n_bits: int = 2, message_bits: int = 1) -> ICProtocol:
    """Constant message, constant guess."""
    message = "0" * message_bits
    return ICProtocol(
        n_bits=n_bits,
        message_bits=message_bits,
        shared=None,
        alice_messages={(x, NO_OUTCOME): message for x in _inputs(n_bits)},
        bob_guesses={(k, message, NO_OUTCOME): 0 for k in range(1, n_bits + 1)},
        name="null",
    )


def _lookup(table, key, what: str):
    try:
        return table[key]
    except KeyError:
        raise ProtocolError(f"{what} is not defined for {key!r}")


def _branches(protocol: ICProtocol, x: str) -> List[Tuple[str, Optional[Test]]]:
    """Alice's outcomes for input ``x`` (a single placeholder without a shared state)."""
    if protocol.shared is None:
        return [(NO_OUTCOME, None)]
    space = protocol.shared.system.components[0]
    test = space.test(_lookup(protocol.alice_tests, x, "Alice's test"))
    return [(a, test) for a in test.outcomes]


def ic_lhs(protocol: ICProtocol) -> ICReport:
    """Σ_k I(E_k : b_k | G = k) for uniform inputs, computed exactly.

    The per-k joint of (E_k, guess) sums over Alice's outcome, her message
    and Bob's outcome. Bob's (message, outcome) pair before the guess map
    is reported as the readout information I(E_k : X_k).

    Raises:
        ProtocolError: strategy not total, or a message longer than m bits.
    """
    n = protocol.n_bits
    shared = protocol.shared
    if shared is not None and len(shared.system) != 2:
        raise ProtocolError("the shared state must be bipartite")
    weight = Fraction(1, 2 ** n)
    guess_tables = [dict() for _ in range(n)]
    readout_tables = [dict() for _ in range(n)]
    success = [Fraction(0)] * n

    for x in _inputs(n):
        for a, _ in _branches(protocol, x):
            message = _lookup(protocol.alice_messages, (x, a), "Alice's message")
            if len(message) > protocol.message_bits or set(message) - {"0", "1"}:
                raise ProtocolError(
                    f"message {message!r} is not a bit string of length <= {protocol.message_bits}"
                )
            for k in range(1, n + 1):
                if shared is None:
                    outcomes = [(NO_OUTCOME, Fraction(1))]
                else:
                    bob_test = shared.system.components[1].test(
                        _lookup(protocol.bob_tests, (k, message), "Bob's test")
                    )
                    outcomes = [(y, shared[(a, y)]) for y in bob_test.outcomes]
                for y, p in outcomes:
                    if p == 0:
                        continue
                    guess = _lookup(protocol.bob_guesses, (k, message, y), "Bob's guess")
                    p = weight * p
                    target = x[k - 1]
                    g_key = (target, str(guess))
                    guess_tables[k - 1][g_key] = guess_tables[k - 1].get(g_key, Fraction(0)) + p
                    r_key = (target, f"{message}|{y}")
                    readout_tables[k - 1][r_key] = readout_tables[k - 1].get(r_key, Fraction(0)) + p
                    if str(guess) == target:
                        success[k - 1] += p

    per_k = [classical_mutual_information(t) for t in guess_tables]
    readout = [classical_mutual_information(t) for t in readout_tables]
    lhs = sum(per_k)
    report = ICReport(
        protocol=protocol.name,
        n_bits=n,
        m=protocol.message_bits,
        per_k=per_k,
        per_k_readout=readout,
        success_probability=[str(s) for s in success],
        lhs=lhs,
        satisfied=lhs <= protocol.message_bits + get_settings().tolerance,
    )
    logger.info("ic_lhs", protocol=protocol.name, lhs=lhs, m=protocol.message_bits)
    return report
