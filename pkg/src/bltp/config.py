"""Run configuration: JSON schema, defaults and semantic validation.

All lengths and times are in natural units (c = 1).  Defaults that carry a
length scale are expressed through ``kappa``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .dynamics import ExternalForce, SolverConfig
from .errors import ConfigInvalid

SCHEMA_VERSION = 1

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pos = {"type": "number", "exclusiveMinimum": 0}
_decreasing = {"type": "array", "items": _pos, "minItems": 2}

_force = {
    "type": "object",
    "properties": {
        "model": {"enum": ["zero", "constant_window", "gaussian_pulse"]},
        "F": _vec3,
        "t_on": {"type": "number"},
        "t_off": {"type": "number"},
        "ramp": _pos,
        "t_center": {"type": "number"},
        "width": _pos,
        "cutoff": _pos,
    },
    "required": ["model"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"model": {"const": "gaussian_pulse"}}},
         "then": {"required": ["F", "t_center", "width"]}},
        {"if": {"properties": {"model": {"const": "constant_window"}}},
         "then": {"required": ["F", "t_on", "t_off", "ramp"]}},
    ],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "kappa", "particles"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kappa": _pos,
        "particles": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["charge", "mass"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "charge": {"type": "number"},
                    "mass": _pos,
                    "position": _vec3,
                    "force": _force,
                },
            },
        },
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "A0": {"type": "number"},
                "t_end": {"type": "number"},
                "prescribed": {
                    "type": ["object", "null"],
                    "additionalProperties": False,
                    "required": ["speed", "ramp"],
                    "properties": {
                        "particle": {"type": "string"},
                        "speed": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "ramp": _pos,
                        "direction": _vec3,
                        "t_kick": {"type": "number"},
                        "h": _pos,
                    },
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h": _pos,
                "delta": _pos,
                "picard_tol": _pos,
                "picard_max_iter": {"type": "integer", "minimum": 2},
                "tail_tol": _pos,
                "min_separation": _pos,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "string", "minLength": 1} for k in (
                "trajectory", "worldline", "report", "fields", "selfforce", "diagnostics", "bessel")},
        },
        "fields": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                      "minItems": 4, "maxItems": 4}},
                "line": {
                    "type": "object",
                    "required": ["start", "end", "n"],
                    "additionalProperties": False,
                    "properties": {
                        "start": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                        "end": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                        "n": {"type": "integer", "minimum": 1},
                    },
                },
                "tol": _pos,
            },
        },
        "selfforce": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_start": {"type": "number"},
                "t_end": {"type": "number"},
                "samples": {"type": "integer", "minimum": 1},
                "tol": _pos,
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "particle": {"type": "string"},
                "gauge": {"type": "boolean"},
                "gauge_points": {"type": "integer", "minimum": 1},
                "flux": {"type": "boolean"},
                "flux_epsilons": _decreasing,
                "flux_taus": {"type": "array", "items": {"type": "number"}},
                "divergence": {"type": "boolean"},
                "divergence_h": _decreasing,
                "divergence_points": {"type": "integer", "minimum": 1},
                "selfforce_samples": {"type": "integer", "minimum": 1},
                "tol": _pos,
            },
        },
    },
}


@dataclass(frozen=True)
class ParticleSpec:
    name: str
    charge: float
    mass: float
    position: tuple
    force: ExternalForce


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``data`` is the fully resolved JSON document."""

    data: dict
    kappa: float
    particles: tuple
    solver: SolverConfig

    def section(self, name):
        return self.data[name]

    def particle_index(self, name):
        return [p.name for p in self.particles].index(name)


def _defaults(data):
    k = data["kappa"]
    for i, p in enumerate(data["particles"]):
        p.setdefault("name", f"p{i}")
        p.setdefault("position", [0.0, 0.0, 0.0])
        p.setdefault("force", {"model": "zero"})
    sc = data.setdefault("scenario", {})
    sc.setdefault("A0", 0.0)
    sc.setdefault("t_end", sc["A0"] + 50.0 / k)
    sc.setdefault("prescribed", None)
    if sc["prescribed"] is not None:
        pr = sc["prescribed"]
        pr.setdefault("particle", data["particles"][0]["name"])
        pr.setdefault("direction", [1.0, 0.0, 0.0])
        pr.setdefault("t_kick", sc["A0"])
        pr.setdefault("h", 0.01 / k)
    so = data.setdefault("solver", {})
    so.setdefault("h", 0.01 / k)
    so.setdefault("delta", 0.25 / k)
    so.setdefault("picard_tol", 1e-10)
    so.setdefault("picard_max_iter", 50)
    so.setdefault("tail_tol", 1e-12)
    so.setdefault("min_separation", 1e-6 / k)
    out = data.setdefault("output", {})
    for key, name in (("trajectory", "trajectory.csv"), ("worldline", "worldline.csv"),
                      ("report", "report.json"), ("fields", "fields.csv"),
                      ("selfforce", "selfforce.csv"), ("diagnostics", "diagnostics.json"),
                      ("bessel", "bessel_selftest.json")):
        out.setdefault(key, name)
    fl = data.setdefault("fields", {})
    if "points" not in fl and "line" not in fl:
        a0 = sc["A0"]
        fl["line"] = {"start": [a0 + 10.0 / k, 0.1 / k, 0.0, 0.0],
                      "end": [a0 + 10.0 / k, 20.0 / k, 0.0, 0.0], "n": 200}
    fl.setdefault("tol", 1e-9)
    sf = data.setdefault("selfforce", {})
    sf.setdefault("t_start", sc["A0"])
    sf.setdefault("t_end", sc["t_end"])
    sf.setdefault("samples", 200)
    sf.setdefault("tol", 1e-11)
    dg = data.setdefault("diagnostics", {})
    dg.setdefault("particle", data["particles"][0]["name"])
    dg.setdefault("gauge", True)
    dg.setdefault("gauge_points", 20)
    dg.setdefault("flux", True)
    dg.setdefault("flux_epsilons", [0.1 / k, 0.05 / k, 0.025 / k])
    dg.setdefault("flux_taus", [1.0 / k, 2.0 / k, 3.0 / k, 4.0 / k, 5.0 / k])
    dg.setdefault("divergence", True)
    dg.setdefault("divergence_h", [0.2 / k, 0.1 / k, 0.05 / k])
    dg.setdefault("divergence_points", 10)
    dg.setdefault("selfforce_samples", 20)
    dg.setdefault("tol", 1e-9)
    return data


def _path(error):
    parts = [str(x) for x in error.absolute_path]
    if error.validator == "required":
        missing = error.message.split("'")[1]
        parts.append(missing)
    return "/".join(parts) or "<root>"


def _semantic(data):
    errors = []
    names = [p["name"] for p in data["particles"]]
    if len(set(names)) != len(names):
        errors.append(("particles", "particle names must be unique"))
    sc, so, dg = data["scenario"], data["solver"], data["diagnostics"]
    if sc["t_end"] <= sc["A0"]:
        errors.append(("scenario/t_end", "must exceed scenario/A0"))
    if so["h"] > so["delta"] / 4:
        errors.append(("solver/h", "must not exceed solver/delta / 4"))
    for i, p in enumerate(data["particles"]):
        try:
            f = ExternalForce(**{k: tuple(v) if k == "F" else v for k, v in p["force"].items()})
        except (TypeError, ValueError) as exc:
            errors.append((f"particles/{i}/force", str(exc)))
            continue
        if f.onset < sc["A0"]:
            errors.append((f"particles/{i}/force", "force must vanish before scenario/A0"))
    pos = np.array([p["position"] for p in data["particles"]], dtype=float)
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            if np.linalg.norm(pos[i] - pos[j]) < so["min_separation"]:
                errors.append((f"particles/{j}/position", f"closer to particles/{i} than solver/min_separation"))
    for key in ("flux_epsilons", "divergence_h"):
        seq = dg[key]
        if any(b >= a for a, b in zip(seq, seq[1:])):
            errors.append((f"diagnostics/{key}", "must be strictly decreasing"))
    if dg["particle"] not in names:
        errors.append(("diagnostics/particle", f"unknown particle {dg['particle']!r}"))
    pr = sc["prescribed"]
    if pr is not None:
        if pr["particle"] not in names:
            errors.append(("scenario/prescribed/particle", f"unknown particle {pr['particle']!r}"))
        if not np.any(pr["direction"]):
            errors.append(("scenario/prescribed/direction", "must be non-zero"))
        if pr["t_kick"] < sc["A0"]:
            errors.append(("scenario/prescribed/t_kick", "must not precede scenario/A0"))
    if data["selfforce"]["t_end"] < data["selfforce"]["t_start"]:
        errors.append(("selfforce/t_end", "must not precede selfforce/t_start"))
    return errors


def load_config(raw):
    """Validate a configuration mapping and fill in defaults.

    Raises
    ------
    ConfigInvalid
        Listing every violation found, each with its field path.
    """
    data = copy.deepcopy(raw)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        raise ConfigInvalid([(_path(e), e.message) for e in errors])
    data = _defaults(data)
    problems = _semantic(data)
    if problems:
        raise ConfigInvalid(problems)
    sc, so = data["scenario"], data["solver"]
    solver = SolverConfig(A0=sc["A0"], t_end=sc["t_end"], **so)
    particles = tuple(
        ParticleSpec(p["name"], float(p["charge"]), float(p["mass"]), tuple(map(float, p["position"])),
                     ExternalForce(**{k: tuple(v) if k == "F" else v for k, v in p["force"].items()}))
        for p in data["particles"])
    return RunConfig(data, float(data["kappa"]), particles, solver)


def parse_config(path):
    """Read and validate a JSON configuration file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigInvalid([("<file>", f"{path} does not exist")]) from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid([("<file>", f"not valid JSON: {exc}")]) from None
    return load_config(raw)
