import json

import pytest

from bltp.config import SCHEMA_VERSION, load_config, parse_config
from bltp.errors import ConfigInvalid

MINIMAL = {"schema_version": 1, "kappa": 2.0, "particles": [{"charge": 1.0, "mass": 1.0}]}


def test_minimal_config_gets_defaults():
    cfg = load_config(MINIMAL)
    assert cfg.solver.h == pytest.approx(0.005)
    assert cfg.solver.picard_tol == 1e-10
    assert cfg.particles[0].name == "p0"
    assert cfg.particles[0].force.model == "zero"
    assert cfg.data["diagnostics"]["flux_epsilons"] == [0.05, 0.025, 0.0125]
    assert cfg.data["schema_version"] == SCHEMA_VERSION


def test_input_is_not_mutated():
    raw = json.loads(json.dumps(MINIMAL))
    load_config(raw)
    assert raw == MINIMAL


def _errors(raw):
    with pytest.raises(ConfigInvalid) as info:
        load_config(raw)
    return dict(info.value.errors)


def test_negative_mass_names_field():
    raw = {**MINIMAL, "particles": [{"charge": 1.0, "mass": -1.0}]}
    assert "particles/0/mass" in _errors(raw)


def test_epsilons_must_decrease():
    raw = {**MINIMAL, "diagnostics": {"flux_epsilons": [0.1, 0.1, 0.05]}}
    assert "diagnostics/flux_epsilons" in _errors(raw)


def test_all_violations_reported():
    raw = {"schema_version": 2, "kappa": -1, "particles": [{"charge": "x", "mass": 0}], "bogus": 1}
    errs = _errors(raw)
    assert {"schema_version", "kappa", "particles/0/charge", "particles/0/mass"} <= set(errs)
    assert len(errs) >= 5


def test_missing_required_fields():
    errs = _errors({"schema_version": 1})
    assert {"kappa", "particles"} <= set(errs)


@pytest.mark.parametrize("patch, field", [
    ({"solver": {"h": 0.2, "delta": 0.25}}, "solver/h"),
    ({"scenario": {"A0": 1.0, "t_end": 0.5}}, "scenario/t_end"),
    ({"diagnostics": {"particle": "nobody"}}, "diagnostics/particle"),
    ({"particles": [{"charge": 1, "mass": 1, "force": {"model": "gaussian_pulse", "F": [1, 0, 0],
                                                       "t_center": 1.0, "width": 0.5}}]}, "particles/0/force"),
    ({"particles": [{"name": "a", "charge": 1, "mass": 1},
                    {"name": "a", "charge": 1, "mass": 1, "position": [1, 0, 0]}]}, "particles"),
    ({"particles": [{"charge": 1, "mass": 1}, {"charge": 1, "mass": 1}]}, "particles/1/position"),
])
def test_semantic_checks(patch, field):
    assert field in _errors({**MINIMAL, **patch})


def test_force_model_requires_parameters():
    raw = {**MINIMAL, "particles": [{"charge": 1, "mass": 1, "force": {"model": "gaussian_pulse"}}]}
    assert any(k.startswith("particles/0/force") for k in _errors(raw))


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(MINIMAL))
    assert parse_config(path).kappa == 2.0
    with pytest.raises(ConfigInvalid):
        parse_config(tmp_path / "missing.json")
    path.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        parse_config(path)
