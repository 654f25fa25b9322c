"""Experiment configuration: YAML loading, schema validation, overrides and digests."""

import copy
import hashlib
import json
import os
from pathlib import Path

import jsonschema
import yaml

THREADS_ENV = "CONICHEAT_THREADS"

_NUM = {"type": "number"}
_NUM_LIST = {"type": "array", "items": _NUM, "minItems": 1}
_ANGLE = {"oneOf": [_NUM, _NUM_LIST]}
_POINT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["r"],
    "properties": {"r": _NUM, "y": _ANGLE},
}

GEOMETRY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["circle", "sphere", "file", "mock"]},
        "length": {"type": "number", "exclusiveMinimum": 0},
        "d": {"type": "integer", "minimum": 1},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "n": {"type": "integer", "minimum": 2},
        "cutoff": {"type": "number", "minimum": 0},
        "path": {"type": "string"},
        "volume": {"type": "number", "exclusiveMinimum": 0},
        "eigenvalues": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                        "minItems": 1},
        "multiplicities": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "circle"}}},
         "then": {"required": ["length"]}},
        {"if": {"properties": {"kind": {"const": "sphere"}}},
         "then": {"required": ["d"]}},
        {"if": {"properties": {"kind": {"const": "file"}}},
         "then": {"required": ["path", "n", "volume"]}},
        {"if": {"properties": {"kind": {"const": "mock"}}},
         "then": {"anyOf": [{"required": ["eigenvalues"]}, {"required": ["path"]}]}},
    ],
}

NUMERICS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "tail_tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "max_modes": {"type": "integer", "minimum": 1},
        "bessel_rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "delta_count": {"type": "integer", "minimum": 5},
        "t_lo": {"type": "number", "exclusiveMinimum": 0},
        "t_hi": {"type": "number", "exclusiveMinimum": 0},
        "trace_samples": {"type": "integer", "minimum": 5},
        "residue_tol": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
}

TASK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "t": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, _NUM_LIST]},
        "k": _NUM,
        "p": _POINT,
        "p2": _POINT,
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t": _NUM_LIST, "k": _NUM_LIST, "r": _NUM_LIST, "y": _NUM_LIST,
                           "r2": _NUM_LIST, "y2": _NUM_LIST},
        },
        "s": {"type": "array", "items": {"oneOf": [_NUM, {"type": "array", "items": _NUM,
                                                         "minItems": 2, "maxItems": 2}]}},
        "suite": {"enum": ["orders", "contour", "cutoffs", "bound", "matching", "index"]},
        "smooth_inner": {"type": "number", "exclusiveMinimum": 0},
        "smooth_outer": {"type": "number", "exclusiveMinimum": 0},
    },
}

OUTPUT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "dir": {"type": "string"},
        "prefix": {"type": "string"},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["geometry"],
    "properties": {
        "geometry": GEOMETRY_SCHEMA,
        "numerics": NUMERICS_SCHEMA,
        "task": TASK_SCHEMA,
        "output": OUTPUT_SCHEMA,
    },
}


class ConfigError(Exception):
    """Invalid or unreadable configuration."""


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    return data


def apply_overrides(cfg, overrides):
    """Apply ``section.key=value`` overrides; values are parsed as YAML scalars."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse override value {raw!r}: {exc}") from None
        node = cfg
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {item!r} descends into a non-mapping")
            node = nxt
        node[parts[-1]] = value
    return cfg


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema error at {where}: {exc.message}") from None
    return cfg


def config_digest(cfg):
    """sha256 of the canonical JSON form of the configuration."""
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode()).hexdigest()


def thread_count():
    """Worker threads from the environment; defaults to the machine's CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1
