import pytest
from hypothesis import given
from hypothesis import strategies as st

from polardimer.config import RunConfig, expand_fields, from_dict, load_config, validate

MORSE_RUN = {
    "curve": {"builtin": "morse", "mu": 12148.1, "morse": {"D_e": 0.026768, "a": 0.3834, "R_e": 6.93}},
    "grid": {"r_min": 4.0, "r_max": 20.0, "e_cut": 0.01, "n": 300},
    "basis": {"M": [0], "J_max": 2},
}


def diags(data, command="eigen", base="."):
    return validate(from_dict(data, base), command)


def test_defaults_are_valid():
    assert validate(RunConfig(), "eigen") == []
    assert diags(MORSE_RUN) == []


@pytest.mark.parametrize("patch,key", [
    ({"grid": {"r_min": 10.0, "r_max": 5.0}}, "grid"),
    ({"temperatures": [1e-5, 0.0]}, "temperatures"),
    ({"temperatures": [-1.0]}, "temperatures"),
    ({"cascade": {"J_max": 5, "M_max": 6}}, "cascade.M_max"),
    ({"fields": []}, "fields"),
    ({"fields": [0.0, -1e-5]}, "fields"),
    ({"fields": {"start": 0}}, "fields"),
    ({"grid": {"colour": 3}}, "grid.colour"),
    ({"nonsense": 1}, "nonsense"),
    ({"basis": {"M": [3], "J_max": 2}}, "basis.J_max"),
    ({"basis": {"M": [-1]}}, "basis.M"),
    ({"solver": {"method": "shift-invert"}}, "solver.method"),
    ({"solver": {"min_overlap": 1.5}}, "solver.min_overlap"),
    ({"targets": [[1, 0]]}, "targets"),
    ({"targets": [[1, 0, 1]]}, "targets"),
    ({"cascade": {"initial": [0, 1, 0]}}, "cascade.initial"),
    ({"cascade": {"final": [1, 0, 0]}}, "cascade.final"),
    ({"output": {"formats": ["hdf5"]}}, "output.formats"),
    ({"workers": 0}, "workers"),
    ({"curve": {"builtin": "h2"}}, "curve.builtin"),
    ({"curve": {"builtin": "morse", "morse": {"D_e": 0.1}}}, "curve.morse"),
    ({"curve": {"potential_file": "missing.csv", "dipole_file": "d.csv", "mu": 1.0}}, "curve.potential_file"),
    ({"grid": {"n": 20, "e_cut": 1e-2}}, "grid.n"),
    ({"grid": "wide"}, "grid"),
])
def test_field_level_diagnostics(patch, key):
    d = diags(patch)
    assert any(msg.startswith(key) for msg in d), d


@pytest.mark.parametrize("command,data,key", [
    ("scan", {}, "targets"),
    ("cross-section", {"targets": [[13, 0, 0]]}, "temperatures"),
    ("cascade", {}, "cascade.initial"),
    ("paths", {}, "cascade.initial"),
])
def test_command_requirements(command, data, key):
    assert any(msg.startswith(key) for msg in diags(data, command))


def test_tabulated_curve_files_resolved_relative_to_config(tmp_path):
    for name in ("p.csv", "d.csv"):
        (tmp_path / name).write_text("R,value\n3,0\n")
    d = diags({"curve": {"potential_file": "p.csv", "dipole_file": "d.csv", "mu": 1000.0}}, base=tmp_path)
    assert not any("file not found" in m for m in d)
    d = diags({"curve": {"potential_file": "p.csv", "dipole_file": "d.csv"}}, base=tmp_path)
    assert any(m.startswith("curve.mu") for m in d)


def test_yaml_loading_and_string_coercion(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("fields: [0, 1e-5]\ntemperatures: [1e-5]\ngrid: {e_cut: 1e-4}\n")
    cfg = load_config(p)
    assert cfg.field_values() == [0.0, 1e-5]
    assert cfg.temperatures == [1e-5] and cfg.grid.e_cut == 1e-4
    assert cfg.base_dir == str(tmp_path)
    p.write_text("fields: [0, 1\n")
    assert validate(load_config(p))[0].startswith("config: not valid YAML")
    p.write_text("- 1\n- 2\n")
    assert validate(load_config(p)) == ["config: top level must be a mapping"]
    p.write_text("")
    assert validate(load_config(p)) == []


def test_field_ranges():
    assert expand_fields({"start": 0, "stop": 1e-5, "num": 3}) == [0.0, 5e-6, 1e-5]
    assert expand_fields([1, 2]) == [1.0, 2.0]


def test_hash_is_stable_and_sensitive(tmp_path):
    a, b = from_dict(MORSE_RUN), from_dict(MORSE_RUN, base_dir=tmp_path)
    assert a.config_hash() == b.config_hash()
    assert a.seed() == int(a.config_hash()[:8], 16)
    changed = from_dict({**MORSE_RUN, "fields": [0.0, 1e-6]})
    assert changed.config_hash() != a.config_hash()


@given(st.lists(st.floats(0, 1e-3), min_size=1, max_size=5), st.integers(1, 4))
def test_hash_independent_of_key_order(fields, workers):
    data = {**MORSE_RUN, "fields": fields, "workers": workers}
    reordered = dict(reversed(list(data.items())))
    assert from_dict(data).config_hash() == from_dict(reordered).config_hash()
