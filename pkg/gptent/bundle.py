"""Model files: JSON schemas, loading and dumping of ModelBundles.

A model file holds any mix of systems, states, polytopes, composites,
joint states, ensembles and protocols. Singular keys (``system``,
``polytope``, ``composite``) declare a default object that bare state and
joint-state maps bind to. Every object is validated on load.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import structlog
from pydantic import BaseModel, ConfigDict, Field, StrictInt, ValidationError

from .composite import validate_joint_state
from .core_model import validate_state
from .errors import InputError, ModelError
from .geometry import polytope_from_vertices
from .infotheory import make_ensemble
from .models import (
    CompositeMode,
    CompositeSystem,
    Ensemble,
    ICProtocol,
    JointState,
    PolytopeSource,
    State,
    StateSpacePolytope,
    TestSpace,
    format_rational,
    parse_rational,
)

logger = structlog.get_logger(__name__)

RationalField = Union[StrictInt, str]


# ---------------------------------------------------------------------------
# File schemas
# ---------------------------------------------------------------------------


class SystemSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = None
    outcomes: Optional[List[str]] = None
    tests: List[List[str]]


class StateSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: str
    values: Dict[str, RationalField]


class PolytopeSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    labels: List[str]
    vertices: List[List[RationalField]]
    source: Literal["explicit", "derived"] = "explicit"


class CompositeSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    components: List[str]
    mode: Literal["cartesian", "fr", "adaptive"] = "fr"
    names: Optional[List[str]] = None


class JointStateSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    composite: str
    values: Dict[str, RationalField]


class EnsembleEntrySchema(BaseModel):
    weight: RationalField
    state: str


class EnsembleSchema(BaseModel):
    model_config = ConfigDict(extra="forbid")

    entries: List[EnsembleEntrySchema]
    labels: Optional[List[str]] = None


class AliceSchema(BaseModel):
    tests: Dict[str, str] = Field(default_factory=dict)
    messages: Dict[str, str]


class BobSchema(BaseModel):
    tests: Dict[str, str] = Field(default_factory=dict)
    guesses: Dict[str, StrictInt]


class ProtocolSchema(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    n_bits: int = Field(alias="N", ge=1)
    message_bits: int = Field(alias="m", ge=0)
    shared: Optional[str] = None
    alice: AliceSchema
    bob: BobSchema


class ModelFile(BaseModel):
    """Top-level layout of a model file."""

    model_config = ConfigDict(extra="forbid")

    system: Optional[SystemSchema] = None
    systems: Dict[str, SystemSchema] = Field(default_factory=dict)
    states: Dict[str, Union[StateSchema, Dict[str, RationalField]]] = Field(default_factory=dict)
    polytope: Optional[PolytopeSchema] = None
    polytopes: Dict[str, PolytopeSchema] = Field(default_factory=dict)
    composite: Optional[CompositeSchema] = None
    composites: Dict[str, CompositeSchema] = Field(default_factory=dict)
    joint_states: Dict[str, Union[JointStateSchema, Dict[str, RationalField]]] = Field(
        default_factory=dict
    )
    ensembles: Dict[str, EnsembleSchema] = Field(default_factory=dict)
    protocols: Dict[str, ProtocolSchema] = Field(default_factory=dict)


# ---------------------------------------------------------------------------
# Bundle
# ---------------------------------------------------------------------------


@dataclass
class ModelBundle:
    """Named, validated model objects from one file or builtin."""

    name: str = ""
    systems: Dict[str, TestSpace] = field(default_factory=dict)
    polytopes: Dict[str, StateSpacePolytope] = field(default_factory=dict)
    states: Dict[str, State] = field(default_factory=dict)
    composites: Dict[str, CompositeSystem] = field(default_factory=dict)
    joint_states: Dict[str, JointState] = field(default_factory=dict)
    ensembles: Dict[str, Ensemble] = field(default_factory=dict)
    protocols: Dict[str, ICProtocol] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelBundle):
            return NotImplemented
        return all(
            getattr(self, f) == getattr(other, f)
            for f in ("systems", "polytopes", "states", "composites", "joint_states",
                      "ensembles", "protocols")
        )

    def _pick(self, kind: str, name: Optional[str]):
        table = getattr(self, kind)
        if name is None:
            if len(table) == 1:
                return next(iter(table.values()))
            raise ModelError(
                f"{self.name or 'model'} has {len(table)} {kind}; name one of {sorted(table)}"
            )
        if name not in table:
            raise ModelError(f"no {kind[:-1].replace('_', ' ')} named {name!r}; known: {sorted(table)}")
        return table[name]

    def system(self, name: Optional[str] = None) -> TestSpace:
        return self._pick("systems", name)

    def polytope(self, name: Optional[str] = None) -> StateSpacePolytope:
        return self._pick("polytopes", name)

    def state(self, name: Optional[str] = None) -> State:
        return self._pick("states", name)

    def composite(self, name: Optional[str] = None) -> CompositeSystem:
        return self._pick("composites", name)

    def joint_state(self, name: Optional[str] = None) -> JointState:
        return self._pick("joint_states", name)

    def ensemble(self, name: Optional[str] = None) -> Ensemble:
        return self._pick("ensembles", name)

    def protocol(self, name: Optional[str] = None) -> ICProtocol:
        return self._pick("protocols", name)


def _default_name(table: Dict[str, Any], kind: str) -> str:
    if len(table) != 1:
        raise ModelError(f"bare {kind} maps need exactly one declared target, found {len(table)}")
    return next(iter(table))


def _build_system(name: str, schema: SystemSchema) -> TestSpace:
    return TestSpace.from_tests(schema.name or name, schema.tests, schema.outcomes)


def _build_protocol(name: str, schema: ProtocolSchema, bundle: ModelBundle) -> ICProtocol:
    shared = bundle.joint_state(schema.shared) if schema.shared else None

    def split(key: str, parts: int) -> tuple:
        items = key.split("|")
        if len(items) != parts:
            raise ModelError(f"protocol {name!r}: key {key!r} needs {parts} '|'-separated parts")
        return tuple(items)

    alice_messages = {split(k, 2): v for k, v in schema.alice.messages.items()}
    bob_tests = {}
    for key, test_id in schema.bob.tests.items():
        k, message = split(key, 2)
        bob_tests[(int(k), message)] = test_id
    bob_guesses = {}
    for key, bit in schema.bob.guesses.items():
        k, message, outcome = split(key, 3)
        bob_guesses[(int(k), message, outcome)] = bit
    return ICProtocol(
        n_bits=schema.n_bits,
        message_bits=schema.message_bits,
        shared=shared,
        alice_tests=dict(schema.alice.tests),
        alice_messages=alice_messages,
        bob_tests=bob_tests,
        bob_guesses=bob_guesses,
        name=name,
    )


def bundle_from_data(data: Any, name: str = "") -> ModelBundle:
    """Validate parsed JSON and build every object it declares.

    Raises:
        InputError: when the layout does not match the schema.
        ModelError / StateValidationError / SignalingError: on invalid content.
    """
    try:
        spec = ModelFile.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise InputError(f"schema error at {where or 'top level'}: {first['msg']}")

    bundle = ModelBundle(name=name)
    if spec.system is not None:
        key = spec.system.name or "system"
        bundle.systems[key] = _build_system(key, spec.system)
    for key, schema in spec.systems.items():
        bundle.systems[key] = _build_system(key, schema)

    for key, entry in spec.states.items():
        if isinstance(entry, StateSchema):
            space, values = bundle.system(entry.system), entry.values
        else:
            space, values = bundle.systems[_default_name(bundle.systems, "state")], entry
        bundle.states[key] = validate_state(space, values)

    polytopes = dict(spec.polytopes)
    if spec.polytope is not None:
        polytopes.setdefault("polytope", spec.polytope)
    for key, schema in polytopes.items():
        poly = polytope_from_vertices(schema.labels, schema.vertices, name=key)
        if schema.source == "derived":
            poly = StateSpacePolytope(poly.labels, poly.vertices, poly.dim, PolytopeSource.DERIVED, key)
        bundle.polytopes[key] = poly

    composites = dict(spec.composites)
    if spec.composite is not None:
        composites.setdefault("composite", spec.composite)
    for key, schema in composites.items():
        bundle.composites[key] = CompositeSystem(
            components=tuple(bundle.system(ref) for ref in schema.components),
            mode=CompositeMode(schema.mode),
            names=tuple(schema.names or ()),
        )

    for key, entry in spec.joint_states.items():
        if isinstance(entry, JointStateSchema):
            system, values = bundle.composite(entry.composite), entry.values
        else:
            system, values = bundle.composites[_default_name(bundle.composites, "joint state")], entry
        bundle.joint_states[key] = validate_joint_state(system, values)

    for key, schema in spec.ensembles.items():
        entries = [(parse_rational(e.weight), bundle.state(e.state)) for e in schema.entries]
        bundle.ensembles[key] = make_ensemble(entries, schema.labels or ())

    for key, schema in spec.protocols.items():
        bundle.protocols[key] = _build_protocol(key, schema, bundle)

    logger.info("bundle_loaded", name=name, systems=len(bundle.systems), states=len(bundle.states),
                polytopes=len(bundle.polytopes), joint_states=len(bundle.joint_states))
    return bundle


def load_model(path: Union[str, Path]) -> ModelBundle:
    """Read and validate a model file.

    Raises:
        InputError: unreadable file or invalid JSON (with line and column).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc.msg}", exc.lineno, exc.colno)
    return bundle_from_data(data, name=path.stem)


# ---------------------------------------------------------------------------
# Dumping
# ---------------------------------------------------------------------------


def _system_key(bundle: ModelBundle, space: TestSpace) -> str:
    for key, candidate in bundle.systems.items():
        if candidate == space:
            return key
    raise ModelError(f"system {space.name!r} is not part of the bundle")


def _state_key(bundle: ModelBundle, state: State) -> str:
    for key, candidate in bundle.states.items():
        if candidate == state:
            return key
    raise ModelError("ensemble member is not a named state of the bundle")


def _rational(value: Fraction) -> Union[int, str]:
    return int(value) if value.denominator == 1 else format_rational(value)


def dump_bundle(bundle: ModelBundle) -> Dict[str, Any]:
    """Serialize to the documented schema (plural, explicit forms only)."""
    data: Dict[str, Any] = {
        "systems": {
            key: {"name": s.name, "outcomes": list(s.outcomes), "tests": [list(t.outcomes) for t in s.tests]}
            for key, s in bundle.systems.items()
        },
        "states": {
            key: {
                "system": _system_key(bundle, s.space),
                "values": {x: _rational(v) for x, v in s.as_dict().items()},
            }
            for key, s in bundle.states.items()
        },
        "polytopes": {
            key: {
                "labels": list(p.labels),
                "vertices": [[_rational(x) for x in v] for v in p.vertices],
                "source": p.source.value,
            }
            for key, p in bundle.polytopes.items()
        },
        "composites": {
            key: {
                "components": [_system_key(bundle, c) for c in comp.components],
                "mode": comp.mode.value,
                "names": list(comp.names),
            }
            for key, comp in bundle.composites.items()
        },
        "joint_states": {},
        "ensembles": {
            key: {
                "entries": [
                    {"weight": _rational(w), "state": _state_key(bundle, s)} for w, s in ens.entries
                ],
                "labels": list(ens.labels),
            }
            for key, ens in bundle.ensembles.items()
        },
        "protocols": {},
    }
    for key, joint in bundle.joint_states.items():
        composite_key = next(
            (k for k, c in bundle.composites.items() if c == joint.system), None
        )
        if composite_key is None:
            raise ModelError(f"joint state {key!r} has no named composite in the bundle")
        data["joint_states"][key] = {
            "composite": composite_key,
            "values": {",".join(cell): _rational(v) for cell, v in joint.as_dict().items()},
        }
    for key, protocol in bundle.protocols.items():
        shared = None
        if protocol.shared is not None:
            shared = next(k for k, j in bundle.joint_states.items() if j == protocol.shared)
        data["protocols"][key] = {
            "N": protocol.n_bits,
            "m": protocol.message_bits,
            "shared": shared,
            "alice": {
                "tests": dict(protocol.alice_tests),
                "messages": {f"{x}|{a}": msg for (x, a), msg in protocol.alice_messages.items()},
            },
            "bob": {
                "tests": {f"{k}|{msg}": t for (k, msg), t in protocol.bob_tests.items()},
                "guesses": {f"{k}|{msg}|{y}": g for (k, msg, y), g in protocol.bob_guesses.items()},
            },
        }
    return data


def save_bundle(bundle: ModelBundle, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(dump_bundle(bundle), indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")
