import json
from fractions import Fraction

import pytest

from gptent.bundle import bundle_from_data, dump_bundle, load_model, save_bundle
from gptent.catalog import get_catalog
from gptent.errors import InputError, ModelError, SignalingError, StateValidationError

SQUIT_FILE = {
    "system": {"name": "squit", "tests": [["a", "a'"], ["b", "b'"]]},
    "states": {
        "edge": {"a": 1, "a'": 0, "b": "1/2", "b'": "1/2"},
        "mixed": {"system": "squit", "values": {"a": "1/2", "a'": "1/2", "b": "1/2", "b'": "1/2"}},
    },
}


class TestLoading:
    def test_singular_system_binds_bare_states(self):
        bundle = bundle_from_data(SQUIT_FILE, name="squit")
        assert list(bundle.systems) == ["squit"]
        assert bundle.state("edge")["b"] == Fraction(1, 2)
        with pytest.raises(ModelError):
            bundle.state()

    def test_invalid_state_names_the_test(self):
        data = {
            "system": {"name": "squit", "tests": [["a", "a'"], ["b", "b'"]]},
            "states": {"bad": {"a": "1/2", "a'": "1/2", "b": "3/4", "b'": "3/4"}},
        }
        with pytest.raises(StateValidationError) as info:
            bundle_from_data(data)
        assert [v.subject for v in info.value.violations] == ["{b,b'}"]

    def test_unknown_key_is_a_schema_error(self):
        with pytest.raises(InputError) as info:
            bundle_from_data({"sytem": {}})
        assert "sytem" in str(info.value)

    def test_floats_are_rejected(self):
        data = {"system": {"tests": [["0", "1"]]}, "states": {"s": {"0": 0.5, "1": 0.5}}}
        with pytest.raises(InputError):
            bundle_from_data(data)

    def test_signaling_joint_state(self):
        data = {
            "systems": {
                "A": {"tests": [["a1", "a1'"], ["a2", "a2'"]]},
                "B": {"tests": [["b1", "b1'"], ["b2", "b2'"]]},
            },
            "composite": {"components": ["A", "B"], "names": ["A", "B"]},
            "joint_states": {
                "bad": {
                    "a1,b1": 1, "a2,b1": 1, "a1',b2": 1, "a2,b2": 1,
                    "a1,b1'": 0, "a1',b1": 0, "a1',b1'": 0, "a2,b1'": 0, "a2',b1": 0, "a2',b1'": 0,
                    "a1,b2": 0, "a1,b2'": 0, "a1',b2'": 0, "a2,b2'": 0, "a2',b2": 0, "a2',b2'": 0,
                }
            },
        }
        with pytest.raises(SignalingError):
            bundle_from_data(data)

    def test_unknown_reference(self):
        data = {"systems": {"A": {"tests": [["0", "1"]]}}, "composite": {"components": ["A", "Z"]}}
        with pytest.raises(ModelError):
            bundle_from_data(data)

    def test_json_syntax_error_has_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "system": {\n    "tests": [["a", "b"]\n  }\n}\n', encoding="utf-8")
        with pytest.raises(InputError) as info:
            load_model(path)
        assert info.value.line is not None
        assert info.value.column is not None
        assert "line" in str(info.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_model(tmp_path / "nowhere.json")

    def test_model_file_name_becomes_bundle_name(self, tmp_path):
        path = tmp_path / "my_squit.json"
        path.write_text(json.dumps(SQUIT_FILE), encoding="utf-8")
        assert load_model(path).name == "my_squit"


@pytest.mark.parametrize("name", ["squit", "firefly", "pentagon", "pr", "example4", "example5", "vandam"])
def test_builtins_survive_dump_and_reload(name, tmp_path):
    bundle = get_catalog().get(name)
    path = tmp_path / f"{name}.json"
    save_bundle(bundle, path)
    assert load_model(path) == bundle


def test_dump_uses_rational_strings():
    data = dump_bundle(get_catalog().get("firefly"))
    assert data["states"]["alpha"]["values"]["a"] == "1/2"
    assert data["states"]["beta"]["values"]["b"] == 1


def test_protocol_round_trip():
    data = {
        "systems": {"X": {"tests": [["0", "1"]]}},
        "protocols": {
            "copy": {
                "N": 1,
                "m": 1,
                "alice": {"messages": {"0|-": "0", "1|-": "1"}},
                "bob": {"guesses": {"1|0|-": 0, "1|1|-": 1}},
            }
        },
    }
    bundle = bundle_from_data(data)
    protocol = bundle.protocol("copy")
    assert protocol.alice_messages[("1", "-")] == "1"
    assert protocol.bob_guesses[(1, "1", "-")] == 1
    assert bundle_from_data(dump_bundle(bundle)) == bundle


class TestCatalog:
    def test_unknown_builtin(self):
        with pytest.raises(ModelError):
            get_catalog().get("nonsense")

    def test_classical_n(self):
        bundle = get_catalog().get("classical4")
        assert len(bundle.polytope().vertices) == 4
        assert "uniform" in bundle.states

    def test_names(self):
        names = get_catalog().names()
        assert "firefly" in names
        assert "classical<N>" in names
