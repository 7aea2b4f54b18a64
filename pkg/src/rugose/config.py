"""JSON experiment configuration: schema, defaults and object construction."""
from __future__ import annotations

import copy
import json
import os
from pathlib import Path

import jsonschema

from .errors import ConfigError, NonPositiveProfile
from .geometry import DomainSpec, Mode, profile_from_dict
from .solver import FluidParams, Shear, UniformRest

OUT_ENV = "RUGOSE_OUT"
DEFAULT_OUT = "rugose_out"
EXPERIMENTS = ("run", "sweep", "trace-check", "korn-check", "bogovskii-check", "geom")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["profile"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "profile": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["flat", "riblet", "eggcarton", "tabulated"]},
                "c0": _num,
                "c1": _num,
                "c2": _num,
                "table": {"type": "array"},
            },
        },
        "mode": {"enum": ["planar25d", "full3d"]},
        "epsilons": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cells_per_period": {"type": "integer", "minimum": 1},
                "nz": {"type": "integer", "minimum": 1},
                "nz_per_period": {"type": "integer", "minimum": 0},
            },
        },
        "fluid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"a": _pos, "gamma": _num, "mu": _pos, "eta": {"type": "number", "minimum": 0}},
        },
        "ic": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["uniform_rest", "shear"]},
                "rho0": _pos,
                "U1": _num,
                "U2": _num,
            },
        },
        "t_end": {"type": "number", "minimum": 0},
        "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.9},
        "record_dt": _pos,
        "out": {"type": "string"},
        "slip_field": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["layer", "mapped"]},
                "modes": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
            },
        },
        "korn": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"m": _pos, "M": _pos, "t_snapshot": {"type": "number", "minimum": 0}},
        },
        "bogovskii": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tolerance": _pos,
                "max_iterations": {"type": "integer", "minimum": 1},
                "epsilons": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
                "nz": {"type": "integer", "minimum": 2},
            },
        },
    },
}

DEFAULTS = {
    "experiment": "run",
    "mode": "planar25d",
    "epsilons": [0.25, 0.125, 0.0625, 0.03125],
    "grid": {"cells_per_period": 16, "nz": 32, "nz_per_period": 8},
    "fluid": {"a": 1.0, "gamma": 2.0, "mu": 0.002, "eta": 0.0},
    "ic": {"kind": "shear", "rho0": 1.0, "U1": 1.0, "U2": 1.0},
    "t_end": 1.0,
    "cfl": 0.4,
    "record_dt": 0.05,
    "slip_field": {"kind": "layer", "modes": [1, 2, 3]},
    "korn": {"m": 1e-3, "M": 1e6, "t_snapshot": 0.1},
    "bogovskii": {"tolerance": 1e-8, "max_iterations": 1000, "nz": 32},
}


def with_defaults(cfg):
    """Validate ``cfg`` and fill every missing entry from :data:`DEFAULTS`."""
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {path}: {exc.message}") from None
    out = copy.deepcopy(DEFAULTS)
    for key, val in cfg.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key].update(copy.deepcopy(val))
        else:
            out[key] = copy.deepcopy(val)
    if out["ic"]["kind"] == "uniform_rest":
        out["ic"] = {"kind": "uniform_rest", "rho0": out["ic"].get("rho0", 1.0)}
    else:
        out["ic"] = {"kind": "shear", "rho0": 1.0, "U1": 1.0, "U2": 1.0, **out["ic"]}
    eps = out["epsilons"]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("epsilons must be strictly decreasing")
    return out


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return with_defaults(raw)


def output_dir(cfg, override=None):
    """``--out`` beats the config's ``out``, which beats ``$RUGOSE_OUT``."""
    d = override or cfg.get("out") or os.environ.get(OUT_ENV) or DEFAULT_OUT
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def build_profile(cfg):
    try:
        return profile_from_dict(cfg["profile"])
    except (NonPositiveProfile, ValueError, TypeError) as exc:
        raise ConfigError(f"bad profile: {exc}") from None


def build_spec(cfg, epsilon, profile=None):
    profile = build_profile(cfg) if profile is None else profile
    try:
        return DomainSpec(epsilon, profile, Mode(cfg["mode"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_params(cfg):
    try:
        return FluidParams(**cfg["fluid"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_ic(cfg):
    ic = dict(cfg["ic"])
    kind = ic.pop("kind")
    return UniformRest(**ic) if kind == "uniform_rest" else Shear(**ic)


def grid_size(cfg, spec, vertical_layer=False):
    """``(nx, nz)`` from the per-period rule; ``vertical_layer`` also scales nz with 1/eps."""
    g = cfg["grid"]
    nx = int(round(g["cells_per_period"] * spec.periods))
    nz = g["nz"]
    if vertical_layer and g.get("nz_per_period"):
        nz = max(nz, int(round(g["nz_per_period"] * spec.periods)))
    return nx, nz
