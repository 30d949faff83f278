import io
import json

import pytest

from gptent.cli import render_table, run_command

INVALID_STATE_MODEL = {
    "system": {"name": "squit", "tests": [["a", "a'"], ["b", "b'"]]},
    "states": {"bad": {"a": "1/2", "a'": "1/2", "b": "3/4", "b'": "3/4"}},
}


def run(*argv):
    out = io.StringIO()
    code = run_command(list(argv), out=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv, "--format", "json")
    return code, json.loads(text)


class TestEntropyCommands:
    def test_measurement_entropy_table(self):
        code, text = run("entropy", "--builtin", "firefly", "--state", "alpha", "--kind", "measurement")
        assert code == 0
        assert "1.000000000000" in text

    def test_mixing_entropy_of_omega(self):
        code, data = run_json("entropy", "--builtin", "firefly", "--state", "omega", "--kind", "mixing")
        assert code == 0
        assert data["bits"] == 1.0
        assert data["kind"] == "mixing"

    def test_mixing_entropy_at_a_point(self):
        code, data = run_json("entropy", "--builtin", "square", "--kind", "mixing", "--point", "1/4,1/4")
        assert code == 0
        assert data["bits"] == pytest.approx(0.811278124459, abs=1e-12)

    def test_generalized_entropy(self):
        code, data = run_json("entropy", "--builtin", "squit", "--state", "quarter", "--kind", "min_entropy")
        assert code == 0
        assert data["kind"] == "min_entropy"
        assert data["bits"] == pytest.approx(0.415037499279, abs=1e-12)

    def test_joint_entropy(self):
        code, data = run_json("entropy", "--builtin", "example4", "--joint", "example4")
        assert code == 0
        assert data["bits"] == 2.0

    def test_point_needs_mixing(self):
        code, _ = run("entropy", "--builtin", "square", "--point", "1/4,1/4")
        assert code == 2

    def test_monoentropic_scan(self):
        code, data = run_json("monoentropic-scan", "--builtin", "squit", "--samples", "4")
        assert code == 0
        assert not data["monoentropic_on_sample"]
        assert data["witnesses"]


class TestModelCommands:
    def test_validate_builtin(self):
        code, data = run_json("validate", "--builtin", "pr")
        assert code == 0
        assert data["valid"]
        assert data["joint_states"] == ["pr"]

    def test_invalid_state_exits_with_two(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(INVALID_STATE_MODEL), encoding="utf-8")
        code, _ = run("validate", "--model", str(path))
        assert code == 2
        assert "{b,b'}" in capsys.readouterr().err

    def test_missing_source(self):
        code, _ = run("vertices")
        assert code == 2

    def test_vertices(self):
        code, data = run_json("vertices", "--builtin", "squit")
        assert code == 0
        assert data["count"] == 4
        assert data["dim"] == 2

    def test_facets(self):
        code, data = run_json("facets", "--builtin", "prism")
        assert code == 0
        assert data["count"] == 6
        assert data["simplicial"] == 0

    def test_product(self):
        code, data = run_json("product", "--builtin", "pr", "--systems", "A,B", "--mode", "fr")
        assert code == 0
        assert data["test_count"] == 12

    def test_nonsignaling(self):
        code, data = run_json("nonsignaling", "--builtin", "pr")
        assert code == 0
        assert data["nonsignaling"]

    def test_marginal_and_conditional(self):
        code, data = run_json("marginal", "--builtin", "example4", "--keep", "A,C")
        assert code == 0
        assert data["values"]["0,e"] == "1/2"
        code, data = run_json("conditional", "--builtin", "example4", "--on", "A", "--outcome", "0")
        assert code == 0
        assert data["probability"] == "1/2"
        assert data["remaining"] == ["B", "C"]


class TestInformationCommands:
    def test_ssa_violation_exits_with_one(self):
        code, data = run_json("ssa", "--builtin", "example4")
        assert code == 1
        assert data["form_d"] == -1.0
        assert data["forms_agree"]
        assert data["subsets"] == {"A": ["A"], "B": ["B"], "C": ["C"]}

    def test_ssa_conditioning_on_a_bit_is_satisfied(self):
        code, data = run_json("ssa", "--builtin", "example4", "--a", "A", "--b", "C", "--c", "B")
        assert code == 0
        assert data["form_d"] == 0.0

    def test_ssa_expected_violation(self):
        code, _ = run("ssa", "--builtin", "example4", "--expect", "violated")
        assert code == 0

    def test_mutual_information(self):
        code, data = run_json("mutual-info", "--builtin", "pr")
        assert code == 0
        assert data["bits"] == pytest.approx(1.0, abs=1e-9)

    def test_cmi(self):
        code, data = run_json("cmi", "--builtin", "example4", "--a", "A", "--b", "B", "--c", "C")
        assert code == 0
        assert data["bits"] == pytest.approx(-1.0, abs=1e-9)

    def test_holevo(self):
        code, data = run_json("holevo", "--builtin", "example5")
        assert code == 1
        assert data["chi"] == 0.0
        assert data["max_product_info"] == 1.0


class TestProtocolCommands:
    def test_chsh(self):
        code, data = run_json("chsh", "--box", "pr")
        assert code == 0
        assert data["value"] == 4.0

    def test_chsh_from_joint_state(self):
        code, data = run_json("chsh", "--builtin", "pr", "--joint", "pr")
        assert code == 0
        assert data["value"] == 4.0

    def test_ic(self):
        assert run("ic", "vandam")[0] == 1
        assert run("ic", "vandam", "--expect", "violated")[0] == 0
        code, data = run_json("ic", "verbatim")
        assert code == 0
        assert data["lhs"] == 1.0


class TestConcavityCommand:
    def test_square(self):
        code, data = run_json("concavity", "--builtin", "square")
        assert code == 0
        assert data["applicable"]
        assert data["verified"]
        assert data["rho"] == ["1/4", "1/4"]

    def test_tetrahedron(self):
        code, data = run_json("concavity", "--builtin", "tetrahedron")
        assert code == 0
        assert not data["applicable"]


class TestVerifyPaper:
    def test_everything_passes(self):
        code, text = run("verify-paper")
        assert code == 0
        assert text.rstrip().endswith("0 failed")
        assert "[FAIL]" not in text

    def test_filter(self):
        code, data = run_json("verify-paper", "--filter", "firefly,squit")
        assert code == 0
        assert data["failed"] == 0
        assert all(c["name"].split(":")[0] in ("firefly", "squit") for c in data["checks"])

    def test_unknown_group(self):
        code, _ = run("verify-paper", "--filter", "nope")
        assert code == 2


def test_unknown_command_exits_with_two():
    code, _ = run("frobnicate")
    assert code == 2


def test_render_table_wraps_long_values():
    text = render_table({"key": "word " * 40, "rows": [{"a": 1}, {"a": 2}]}, width=40)
    lines = text.splitlines()
    assert all(len(line) <= 40 for line in lines)
    assert "rows:" in lines
