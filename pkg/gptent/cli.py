"""Command-line interface with one handler per subcommand.

Exit codes: 0 success, 1 a check failed (or did not match ``--expect``),
2 bad input (unreadable model, invalid state, unknown flag).
"""

import argparse
import json
import sys
import textwrap
from typing import Any, Dict, List, Mapping, Optional, Sequence, TextIO, Union

import structlog
from pydantic import BaseModel

from .analysis import find_concavity_violation, witness_report
from .bundle import ModelBundle, load_model
from .catalog import get_catalog
from .composite import (
    adaptive_product,
    available_tests,
    cartesian_product,
    conditional,
    fr_product,
    is_nonsignaling,
    joint_measurement_entropy,
    marginal,
    product_state,
    validate_conditionals,
)
from .config import get_settings
from .core_model import generalized_entropy, make_functional, measurement_entropy
from .errors import ConstructionError, GptentError, InputError, SignalingError, StateValidationError
from .geometry import (
    enumerate_facets,
    enumerate_vertices,
    mixing_entropy,
    monoentropicity_scan,
    state_coordinates,
)
from .infotheory import conditional_mutual_information, holevo_report, mutual_information, ssa_report
from .logging_config import setup_logging
from .models import (
    CompositeMode,
    JointState,
    SchurConcaveFunctional,
    State,
    StateSpacePolytope,
    TestSpace,
    format_rational,
    parse_rational,
)
from .paper_suite import verify_paper
from .protocols import chsh_report, ic_lhs, make_box, null_protocol, pr_box, van_dam_protocol, verbatim_protocol
from .reports import EntropyReport, SignalingReport, SuiteReport, format_value

logger = structlog.get_logger(__name__)

Output = Union[BaseModel, Mapping[str, Any]]

BUNDLE_KINDS = ("systems", "states", "polytopes", "composites", "joint_states", "ensembles", "protocols")


def _inline(value: Any) -> str:
    if isinstance(value, dict):
        return ", ".join(f"{k}={_inline(v)}" for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_inline(v) for v in value) + "]"
    return format_value(value)


def render_table(data: Mapping[str, Any], width: int) -> str:
    """Key/value table; lists of rows are printed one row per line."""
    key_width = max((len(k) for k in data), default=0)
    lines = []
    for key, value in data.items():
        if isinstance(value, list) and value and isinstance(value[0], (dict, list)):
            lines.append(f"{key}:")
            for item in value:
                lines.append(textwrap.fill(_inline(item), width, initial_indent="  ", subsequent_indent="    "))
        else:
            lines.append(
                textwrap.fill(
                    _inline(value),
                    width,
                    initial_indent=f"{key:<{key_width}}  ",
                    subsequent_indent=" " * (key_width + 2),
                )
            )
    return "\n".join(lines)


def _joint_map(joint: JointState) -> Dict[str, str]:
    return {",".join(cell): format_rational(v) for cell, v in joint.as_dict().items()}


def _values_map(result: Union[State, JointState]) -> Dict[str, str]:
    if isinstance(result, State):
        return {x: format_rational(v) for x, v in result.as_dict().items()}
    return _joint_map(result)


def _parse_point(text: str) -> List:
    return [parse_rational(x) for x in text.split(",") if x.strip()]


class CommandHandlers:
    """CLI command handlers."""

    def __init__(self, out: Optional[TextIO] = None):
        """Initialize handlers."""
        self.settings = get_settings()
        self.catalog = get_catalog()
        self.out = out

    # ------------------------------------------------------------------
    # Plumbing
    # ------------------------------------------------------------------

    def load_bundle(self, args: argparse.Namespace) -> ModelBundle:
        """Bundle from ``--model`` or ``--builtin``.

        Raises:
            InputError: when neither is given.
        """
        if args.model:
            return load_model(args.model)
        if args.builtin:
            return self.catalog.get(args.builtin)
        raise InputError("pass --model FILE or --builtin NAME")

    def emit(self, args: argparse.Namespace, output: Output) -> None:
        """Print a report as JSON or as a table on stdout."""
        stream = self.out or sys.stdout
        if args.format == "json":
            data = output.model_dump(mode="json") if isinstance(output, BaseModel) else output
            stream.write(json.dumps(data, indent=2, ensure_ascii=False) + "\n")
            return
        data = output.model_dump() if isinstance(output, BaseModel) else output
        stream.write(render_table(data, self.settings.output_width) + "\n")

    def _functional(self, args: argparse.Namespace) -> Optional[SchurConcaveFunctional]:
        if args.functional is None:
            return None
        return make_functional(args.functional, args.parameter)

    def _polytope(self, bundle: ModelBundle, args: argparse.Namespace,
                  space: Optional[TestSpace] = None) -> StateSpacePolytope:
        """Named polytope, else one matching ``space``, else the one derived from a system."""
        name = getattr(args, "polytope", None)
        if name:
            return bundle.polytope(name)
        if space is None:
            system = getattr(args, "system", None)
            if bundle.polytopes and not system:
                return bundle.polytope()
            space = bundle.system(system)
        for poly in bundle.polytopes.values():
            if set(poly.labels) == set(space.outcomes):
                return poly
        return enumerate_vertices(space)

    def _expect(self, args: argparse.Namespace, satisfied: bool) -> int:
        wanted = args.expect == "satisfied"
        if satisfied != wanted:
            logger.info("expectation_not_met", command=args.command, expected=args.expect)
            return 1
        return 0

    # ------------------------------------------------------------------
    # Systems and geometry
    # ------------------------------------------------------------------

    def validate_command(self, args: argparse.Namespace) -> int:
        """Load a model; every object is validated on the way in."""
        bundle = self.load_bundle(args)
        conditionals = {
            key: [str(v) for v in validate_conditionals(joint)]
            for key, joint in bundle.joint_states.items()
        }
        bad = {key: v for key, v in conditionals.items() if v}
        summary: Dict[str, Any] = {"model": bundle.name, "valid": not bad}
        summary.update({kind: sorted(getattr(bundle, kind)) for kind in BUNDLE_KINDS})
        if bad:
            summary["conditional_violations"] = bad
        self.emit(args, summary)
        return 1 if bad else 0

    def vertices_command(self, args: argparse.Namespace) -> int:
        """Pure states of a system (or the vertices of an explicit polytope)."""
        bundle = self.load_bundle(args)
        if args.system or not bundle.polytopes:
            poly = enumerate_vertices(bundle.system(args.system))
        else:
            poly = self._polytope(bundle, args)
        self.emit(args, {
            "polytope": poly.name,
            "source": poly.source.value,
            "labels": list(poly.labels),
            "dim": poly.dim,
            "count": len(poly.vertices),
            "vertices": [[format_rational(x) for x in v] for v in poly.vertices],
        })
        return 0

    def facets_command(self, args: argparse.Namespace) -> int:
        bundle = self.load_bundle(args)
        poly = self._polytope(bundle, args)
        facets = enumerate_facets(poly)
        self.emit(args, {
            "polytope": poly.name,
            "dim": poly.dim,
            "count": len(facets),
            "simplicial": sum(1 for f in facets if f.simplicial),
            "facets": [
                {
                    "vertices": list(f.vertices),
                    "normal": [format_rational(x) for x in f.normal],
                    "offset": format_rational(f.offset),
                    "simplicial": f.simplicial,
                }
                for f in facets
            ],
        })
        return 0

    def entropy_command(self, args: argparse.Namespace) -> int:
        """Measurement, mixing or generalized entropy of a state, point or joint state."""
        bundle = self.load_bundle(args)
        kind = args.kind
        if kind in ("measurement", "mixing"):
            functional = self._functional(args)
            label = kind if functional is None else f"{kind}[{functional.name}]"
        else:
            functional = make_functional(kind, args.parameter)
            label = functional.name

        if args.joint is not None:
            if kind != "measurement" or functional is not None:
                raise InputError("joint states support the Shannon measurement entropy only")
            result = joint_measurement_entropy(bundle.joint_state(args.joint))
            subject = args.joint
        elif args.point is not None:
            if kind != "mixing":
                raise InputError("--point needs --kind mixing")
            poly = self._polytope(bundle, args)
            result = mixing_entropy(poly, _parse_point(args.point), functional)
            subject = f"{poly.name}({args.point})"
        else:
            state = bundle.state(args.state)
            subject = args.state or next(iter(bundle.states))
            if kind == "mixing":
                poly = self._polytope(bundle, args, space=state.space)
                result = mixing_entropy(poly, state_coordinates(state, poly), functional)
            elif functional is not None:
                result = generalized_entropy(state, functional)
            else:
                result = measurement_entropy(state)

        self.emit(args, EntropyReport(kind=label, subject=subject, bits=result.bits,
                                      witness=result.describe_witness()))
        return 0

    def monoentropic_scan_command(self, args: argparse.Namespace) -> int:
        bundle = self.load_bundle(args)
        space = bundle.system(args.system)
        poly = self._polytope(bundle, args, space=space)
        report = monoentropicity_scan(space, poly, sample_count=args.samples, seed=args.seed)
        self.emit(args, report)
        return 0

    # ------------------------------------------------------------------
    # Composites
    # ------------------------------------------------------------------

    def product_command(self, args: argparse.Namespace) -> int:
        """Test family of a product of named systems, optionally with a product state."""
        bundle = self.load_bundle(args)
        keys = [k.strip() for k in args.systems.split(",")] if args.systems else list(bundle.systems)
        spaces = [bundle.system(k) for k in keys]
        mode = CompositeMode(args.mode)
        if mode is CompositeMode.CARTESIAN:
            if len(spaces) != 2:
                raise InputError("cartesian products take exactly two systems")
            system = cartesian_product(spaces[0], spaces[1], names=keys)
        elif mode is CompositeMode.FOULIS_RANDALL:
            if len(spaces) != 2:
                raise InputError("the Foulis-Randall product takes exactly two systems")
            system = fr_product(spaces[0], spaces[1], names=keys)
        else:
            system = adaptive_product(spaces, names=keys)
        tests = available_tests(system)
        output: Dict[str, Any] = {
            "mode": mode.value,
            "components": keys,
            "cells": len(system.cells),
            "test_count": len(tests),
            "tests": [[t.describe()] for t in tests],
        }
        if args.states:
            states = [bundle.state(k.strip()) for k in args.states.split(",")]
            joint = product_state(states, mode=mode, names=keys)
            output["product_state_entropy"] = joint_measurement_entropy(joint).bits
        self.emit(args, output)
        return 0

    def nonsignaling_command(self, args: argparse.Namespace) -> int:
        try:
            bundle = self.load_bundle(args)
        except SignalingError as exc:
            self.emit(args, SignalingReport(nonsignaling=False, violation=str(exc.violation)))
            return 1
        violation = is_nonsignaling(bundle.joint_state(args.joint))
        report = SignalingReport(nonsignaling=violation is None,
                                 violation=None if violation is None else str(violation))
        self.emit(args, report)
        return 0 if report.nonsignaling else 1

    def marginal_command(self, args: argparse.Namespace) -> int:
        bundle = self.load_bundle(args)
        joint = bundle.joint_state(args.joint)
        result = marginal(joint, args.keep)
        entropy = (measurement_entropy(result) if isinstance(result, State)
                   else joint_measurement_entropy(result))
        self.emit(args, {"keep": args.keep, "values": _values_map(result), "entropy": entropy.bits})
        return 0

    def conditional_command(self, args: argparse.Namespace) -> int:
        bundle = self.load_bundle(args)
        joint = bundle.joint_state(args.joint)
        view = conditional(joint, args.on, args.outcome)
        output: Dict[str, Any] = {
            "on": args.on,
            "outcome": args.outcome,
            "probability": format_rational(view.probability),
            "null": view.is_null,
            "remaining": [joint.system.names[i] for i in view.remaining],
        }
        if view.result is not None:
            output["values"] = _values_map(view.result)
        self.emit(args, output)
        return 0

    # ------------------------------------------------------------------
    # Information quantities
    # ------------------------------------------------------------------

    def _joint_and_names(self, args: argparse.Namespace):
        bundle = self.load_bundle(args)
        joint = bundle.joint_state(args.joint)
        return joint, list(joint.system.names)

    def mutual_info_command(self, args: argparse.Namespace) -> int:
        joint, names = self._joint_and_names(args)
        a = args.a or names[0]
        b = args.b or ",".join(n for n in names if n not in a.split(","))
        value = mutual_information(joint, a, b)
        self.emit(args, {"quantity": f"I({a}:{b})", "bits": value})
        return 0

    def cmi_command(self, args: argparse.Namespace) -> int:
        joint, names = self._joint_and_names(args)
        if len(names) < 3 and not (args.a and args.b and args.c):
            raise InputError("cmi needs three disjoint subsets")
        a = args.a or names[0]
        b = args.b or names[1]
        c = args.c or ",".join(n for n in names if n not in (a.split(",") + b.split(",")))
        value = conditional_mutual_information(joint, a, b, c)
        self.emit(args, {"quantity": f"I({a}:{b}|{c})", "bits": value})
        return 0

    def ssa_command(self, args: argparse.Namespace) -> int:
        """Strong subadditivity; ``--c`` is the conditioning system."""
        joint, names = self._joint_and_names(args)
        if len(names) < 3 and not (args.a and args.b and args.c):
            raise InputError("ssa needs a joint state on at least three components")
        a = args.a or names[0]
        c = args.c or names[-1]
        used = a.split(",") + c.split(",")
        b = args.b or ",".join(n for n in names if n not in used)
        report = ssa_report(joint, a, b, c)
        self.emit(args, report)
        return self._expect(args, report.satisfied)

    def holevo_command(self, args: argparse.Namespace) -> int:
        bundle = self.load_bundle(args)
        report = holevo_report(bundle.ensemble(args.ensemble))
        self.emit(args, report)
        return self._expect(args, report.satisfied)

    # ------------------------------------------------------------------
    # Protocols and analysis
    # ------------------------------------------------------------------

    def chsh_command(self, args: argparse.Namespace) -> int:
        if args.box == "pr":
            box = pr_box()
        else:
            box = make_box(self.load_bundle(args).joint_state(args.joint))
        settings = None
        if args.alice_tests or args.bob_tests:
            if not (args.alice_tests and args.bob_tests):
                raise InputError("give both --alice-tests and --bob-tests")
            settings = (tuple(args.alice_tests), tuple(args.bob_tests))
        self.emit(args, chsh_report(box, settings))
        return 0

    def ic_command(self, args: argparse.Namespace) -> int:
        """Information-causality left-hand side for a builtin or file protocol."""
        if args.protocol == "vandam":
            box = None
            if args.joint:
                box = make_box(self.load_bundle(args).joint_state(args.joint))
            protocol = van_dam_protocol(box)
        elif args.protocol == "verbatim":
            protocol = verbatim_protocol(args.n_bits)
        elif args.protocol == "null":
            protocol = null_protocol(args.n_bits)
        else:
            protocol = self.load_bundle(args).protocol(args.protocol)
        report = ic_lhs(protocol)
        self.emit(args, report)
        return self._expect(args, report.satisfied)

    def concavity_command(self, args: argparse.Namespace) -> int:
        bundle = self.load_bundle(args)
        poly = self._polytope(bundle, args)
        try:
            result = find_concavity_violation(poly)
        except ConstructionError as exc:
            logger.error("construction_failed", polytope=poly.name, error=str(exc))
            sys.stderr.write(f"error: {exc}\n")
            return 1
        report = witness_report(poly, result, self._functional(args))
        self.emit(args, report)
        return 0 if not report.applicable or report.verified else 1

    def verify_paper_command(self, args: argparse.Namespace) -> int:
        try:
            report = verify_paper(args.filter)
        except KeyError as exc:
            raise InputError(str(exc.args[0]))
        if args.format == "json":
            self.emit(args, report)
        else:
            self._print_suite(report)
        return 0 if report.ok else 1

    def _print_suite(self, report: SuiteReport) -> None:
        stream = self.out or sys.stdout
        for check in report.checks:
            status = "PASS" if check.passed else "FAIL"
            stream.write(f"[{status}] {check.name}: expected {check.expected}, got {check.actual}\n")
        stream.write(f"{report.passed} passed, {report.failed} failed\n")

    # ------------------------------------------------------------------
    # Parser
    # ------------------------------------------------------------------

    def setup_parser(self) -> argparse.ArgumentParser:
        """Build the argument parser with one subparser per command."""
        common = argparse.ArgumentParser(add_help=False)
        source = common.add_mutually_exclusive_group()
        source.add_argument("--model", help="model file (JSON)")
        source.add_argument("--builtin", help=f"builtin model: {', '.join(self.catalog.names())}")
        common.add_argument("--format", choices=("table", "json"), default="table")
        common.add_argument("--seed", type=int, default=self.settings.seed, help="seed for sampling")

        functional = argparse.ArgumentParser(add_help=False)
        functional.add_argument("--functional", help="shannon, renyi, tsallis or min_entropy")
        functional.add_argument("--parameter", type=float, help="Renyi order or Tsallis index")

        expect = argparse.ArgumentParser(add_help=False)
        expect.add_argument("--expect", choices=("satisfied", "violated"), default="satisfied",
                            help="exit 1 unless the check comes out this way")

        parser = argparse.ArgumentParser(
            prog="gptent",
            description="Entropies, composites and information bounds in finite probabilistic theories.",
        )
        sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

        def command(name: str, handler, help_text: str, parents=()) -> argparse.ArgumentParser:
            p = sub.add_parser(name, help=help_text, parents=[common, *parents])
            p.set_defaults(handler=handler)
            return p

        command("validate", self.validate_command, "load and validate a model")

        p = command("vertices", self.vertices_command, "enumerate pure states")
        p.add_argument("--system")

        p = command("facets", self.facets_command, "enumerate facets")
        p.add_argument("--polytope")
        p.add_argument("--system")

        p = command("entropy", self.entropy_command, "measurement, mixing or generalized entropy",
                    parents=[functional])
        p.add_argument("--kind", default="measurement",
                       help="measurement, mixing, or a functional name (renyi, tsallis, min_entropy)")
        p.add_argument("--state")
        p.add_argument("--joint")
        p.add_argument("--point", help="comma-separated rational coordinates (with --kind mixing)")
        p.add_argument("--polytope")
        p.add_argument("--system")

        p = command("product", self.product_command, "build a composite system")
        p.add_argument("--mode", choices=[m.value for m in CompositeMode], default="fr")
        p.add_argument("--systems", help="comma-separated system names (default: all)")
        p.add_argument("--states", help="comma-separated state names for a product state")

        p = command("nonsignaling", self.nonsignaling_command, "check the non-signaling condition")
        p.add_argument("--joint")

        p = command("marginal", self.marginal_command, "marginal of a joint state")
        p.add_argument("--joint")
        p.add_argument("--keep", required=True, help="component names, comma-separated")

        p = command("conditional", self.conditional_command, "conditional state given an outcome")
        p.add_argument("--joint")
        p.add_argument("--on", required=True, help="conditioning component")
        p.add_argument("--outcome", required=True)

        for name, handler, help_text in (
            ("mutual-info", self.mutual_info_command, "I(A:B)"),
            ("cmi", self.cmi_command, "I(A:B|C)"),
        ):
            p = command(name, handler, help_text)
            p.add_argument("--joint")
            p.add_argument("--a")
            p.add_argument("--b")
            if name == "cmi":
                p.add_argument("--c", help="conditioning subset")

        p = command("ssa", self.ssa_command, "strong subadditivity report", parents=[expect])
        p.add_argument("--joint")
        p.add_argument("--a")
        p.add_argument("--b")
        p.add_argument("--c", help="conditioning subset (default: last component)")

        p = command("holevo", self.holevo_command, "Holevo quantity and bound", parents=[expect])
        p.add_argument("--ensemble")

        p = command("chsh", self.chsh_command, "CHSH value of a box")
        p.add_argument("--box", choices=("pr", "joint"), default="joint")
        p.add_argument("--joint")
        p.add_argument("--alice-tests", nargs=2, metavar="TEST")
        p.add_argument("--bob-tests", nargs=2, metavar="TEST")

        p = command("ic", self.ic_command, "information-causality sum", parents=[expect])
        p.add_argument("protocol", help="vandam, verbatim, null, or a protocol in the model")
        p.add_argument("--joint", help="shared box for the vandam protocol")
        p.add_argument("--n-bits", type=int, default=2)

        p = command("concavity", self.concavity_command, "mixing-entropy concavity witness",
                    parents=[functional])
        p.add_argument("--polytope")
        p.add_argument("--system")

        p = command("monoentropic-scan", self.monoentropic_scan_command, "compare H and S on sample points")
        p.add_argument("--system")
        p.add_argument("--polytope")
        p.add_argument("--samples", type=int, default=self.settings.scan_sample_count)

        p = command("verify-paper", self.verify_paper_command, "run the published-example checks")
        p.add_argument("--filter", help="comma-separated check groups")

        return parser


def create_handlers(out: Optional[TextIO] = None) -> CommandHandlers:
    """Create and return the handler instance."""
    return CommandHandlers(out)


def run_command(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    settings = get_settings()
    setup_logging(settings.log_level, settings.log_json, settings.color)
    handlers = create_handlers(out)
    parser = handlers.setup_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        return args.handler(args)
    except StateValidationError as exc:
        logger.error("invalid_state", error=str(exc))
        sys.stderr.write(f"error: {exc}\n")
        for violation in exc.violations:
            sys.stderr.write(f"  {violation}\n")
        return 2
    except GptentError as exc:
        logger.error("command_failed", command=args.command, error=str(exc))
        sys.stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:
    """Console entry point."""
    try:
        code = run_command()
    except KeyboardInterrupt:
        code = 130
    sys.exit(code)
