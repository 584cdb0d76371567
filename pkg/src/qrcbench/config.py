"""JSON experiment configuration: schema, defaults and provenance hash."""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any

import jsonschema

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_unit = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_posint = {"type": "integer", "minimum": 1}


def _axis(item: dict) -> dict:
    return {"type": "array", "items": item, "minItems": 1}


_state = {
    "oneOf": [
        {"enum": ["mixed", "ground"]},
        {
            "type": "object",
            "properties": {"random": {"type": "integer", "minimum": 0}},
            "required": ["random"],
            "additionalProperties": False,
        },
    ]
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["channel"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variant", "n", "epsilon", "grid"],
            "properties": {
                "variant": {"enum": ["ptr", "rrr"]},
                "n": _posint,
                "epsilon": _pos,
                "r0": _unit,
                "r1": _unit,
                "base_seed": {"type": "integer", "minimum": 0},
                "grid": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "j_seed": _axis({"type": "integer", "minimum": 0}),
                        "gamma": _axis(_num),
                        "tau": _axis(_pos),
                        "alpha": _axis(_unit),
                        "sigma": _axis(_state),
                    },
                },
            },
            "allOf": [
                {
                    "if": {"properties": {"variant": {"const": "ptr"}}},
                    "then": {"properties": {"grid": {"required": ["j_seed", "gamma", "tau"]}}},
                },
                {
                    "if": {"properties": {"variant": {"const": "rrr"}}},
                    "then": {
                        "required": ["r0", "r1"],
                        "properties": {"grid": {"required": ["alpha", "sigma"]}},
                    },
                },
            ],
        },
        "readout": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["poly", "linear", "sm"]},
                "r_max": _posint,
                "c_max": {"type": "number", "minimum": 0},
                "ell_max": _posint,
            },
        },
        "process": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda_v": _unit,
                "lambda_y": _unit,
                "m_xi": _pos,
                "delay": {"type": "integer", "minimum": 0},
                "y_scale": _num,
                "independent_target": {"type": "boolean"},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m": _posint,
                "k": {"oneOf": [{"type": "integer", "minimum": 2}, _axis({"type": "integer", "minimum": 2})]},
                "mc_reps": {"type": "integer", "minimum": 2},
                "delta": _unit,
                "washout_tol": _pos,
                "seed": {"type": "integer", "minimum": 0},
                "n_mc": {"type": "integer", "minimum": 2},
                "loss": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"kind": {"enum": ["absolute", "huber"]}, "delta": _pos},
                },
                "e_loss_zero": {"type": "number", "minimum": 0},
                "e_loss_zero_samples": {"type": "integer", "minimum": 2},
                "c4_scope": {"enum": ["inner", "outer"]},
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pairs": _posint,
                "inputs": _posint,
                "cptp_inputs": _posint,
                "esp_pairs": _posint,
            },
        },
        "fault": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"base_r0": _pos},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis", "values"],
            "properties": {
                "axis": {"enum": ["n", "m", "k", "r_max", "epsilon", "alpha_min", "theta_size"]},
                "values": _axis(_num),
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string", "minLength": 1},
                "formats": _axis({"enum": ["json", "csv"]}),
            },
        },
    },
}

DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "channel": {"base_seed": 0},
    "readout": {"kind": "poly", "r_max": 1, "c_max": 1.0, "ell_max": 1},
    "process": {
        "lambda_v": 0.5,
        "lambda_y": 0.5,
        "m_xi": 1.0,
        "delay": 0,
        "y_scale": 1.0,
        "independent_target": False,
    },
    "run": {
        "m": 100,
        "k": [4, 16, 64],
        "mc_reps": 200,
        "delta": 0.1,
        "washout_tol": 1e-10,
        "seed": 0,
        "n_mc": 2000,
        "loss": {"kind": "absolute", "delta": 1.0},
        "e_loss_zero_samples": 100_000,
        "c4_scope": "inner",
    },
    "verify": {"pairs": 500, "inputs": 20, "cptp_inputs": 10, "esp_pairs": 10},
    "fault": {},
    "output": {"dir": "results", "formats": ["json", "csv"]},
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key not in ("grid",):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _json_path(error: jsonschema.ValidationError) -> str:
    path = "$"
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def validate(raw: Any) -> dict[str, Any]:
    """Schema-check a raw config and fill defaults; raises :class:`ConfigError`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(first.message, _json_path(first))
    cfg = _merge(DEFAULTS, raw)
    if cfg["readout"]["kind"] == "linear" and cfg["readout"]["r_max"] != 1:
        raise ConfigError("linear readouts have r_max = 1", "$.readout.r_max")
    if cfg["readout"]["kind"] == "sm" and cfg["channel"]["n"] % cfg["readout"]["ell_max"]:
        raise ConfigError("ell_max must divide n", "$.readout.ell_max")
    return cfg


def load(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    return validate(raw)


def canonical(cfg: Any) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: Any) -> str:
    """sha256 of the sorted-key serialisation; insensitive to key order."""
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()
