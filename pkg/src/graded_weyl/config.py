"""Experiment configuration: a strict subset of TOML with a fixed schema.

Only tables, strings, numbers and arrays are accepted.  Unknown keys,
booleans and dates are schema errors; each error names the offending field
path, e.g. ``params.gamma``.
"""
from __future__ import annotations

import datetime
import hashlib
import json
import math
from dataclasses import dataclass

import tomli

from . import __version__

COMMANDS = ("trace", "weyl", "residue", "spectrum", "cover", "zeta", "signed")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# --- field checkers ------------------------------------------------------


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def number(positive=False, above=None):
    def check(v, path):
        if not _is_num(v) or not math.isfinite(v):
            raise ConfigError(path, "expected a finite number")
        if positive and v <= 0:
            raise ConfigError(path, "must be > 0")
        if above is not None and v <= above:
            raise ConfigError(path, f"must be > {above}")
        return float(v)

    return check


def integer(minimum=None):
    def check(v, path):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(path, "expected an integer")
        if minimum is not None and v < minimum:
            raise ConfigError(path, f"must be >= {minimum}")
        return int(v)

    return check


def string(choices=None):
    def check(v, path):
        if not isinstance(v, str):
            raise ConfigError(path, "expected a string")
        if choices is not None and v not in choices:
            raise ConfigError(path, f"must be one of {', '.join(choices)}")
        return v

    return check


def array(item, length=None, min_length=0):
    def check(v, path):
        if not isinstance(v, list):
            raise ConfigError(path, "expected an array")
        if length is not None and len(v) != length:
            raise ConfigError(path, f"expected {length} entries")
        if len(v) < min_length:
            raise ConfigError(path, f"expected at least {min_length} entries")
        return [item(x, f"{path}[{i}]") for i, x in enumerate(v)]

    return check


def scalar_or_array(item):
    def check(v, path):
        return array(item, min_length=1)(v, path) if isinstance(v, list) else item(v, path)

    return check


def table(fields: dict, required=()):
    """``fields`` maps key to ``(checker, default)``; ``None`` defaults are omitted."""

    def check(v, path):
        if not isinstance(v, dict):
            raise ConfigError(path, "expected a table")
        for k in v:
            if k not in fields:
                raise ConfigError(_join(path, k), "unknown key")
        out = {}
        for k, (chk, default) in fields.items():
            p = _join(path, k)
            if k in v:
                out[k] = chk(v[k], p)
            elif k in required:
                raise ConfigError(p, "missing required key")
            elif default is not None:
                out[k] = default
        return out

    return check


def _join(path, key):
    return f"{path}.{key}" if path else key


def number_or_table(tab):
    def check(v, path):
        return tab(v, path) if isinstance(v, dict) else number()(v, path)

    return check


# --- schema ----------------------------------------------------------------

_COEFF = table(
    {
        "kind": (string(("constant", "trig", "gaussian", "bump", "expr")), None),
        "expr": (string(), None),
        "value": (number(), None),
        "axis": (integer(0), None),
        "const": (number(), None),
        "cos": (array(number()), None),
        "sin": (array(number()), None),
        "center": (scalar_or_array(number()), None),
        "width": (scalar_or_array(number(positive=True)), None),
        "radius": (scalar_or_array(number(positive=True)), None),
        "amplitude": (number(), None),
    },
    required=("kind",),
)

_GROUP = table(
    {
        "family": (string(("abelian", "heisenberg", "filiform", "custom")), "abelian"),
        "dim": (integer(1), None),
        "layers": (array(integer(1), min_length=1), None),
        "n": (integer(1), None),
        "N": (integer(1), None),
        "brackets": (array(array(number(), length=4)), None),
        "labels": (array(string()), None),
    }
)

_TERM = table({"word": (array(integer(0)), None), "coeff": (number_or_table(_COEFF), 1.0)}, required=("word",))

_OPERATOR = table(
    {
        "kind": (string(("terms", "laplacian", "divergence")), "terms"),
        "terms": (array(_TERM), None),
        "generators": (array(integer(0)), None),
        "coeff": (number_or_table(_COEFF), None),
    }
)

_GRID = table(
    {
        "points": (scalar_or_array(integer(2)), None),
        "half_width": (scalar_or_array(number(positive=True)), None),
        "mode": (string(("fourier_periodic", "finite_difference_dirichlet")), "fourier_periodic"),
    },
    required=("points", "half_width"),
)

_REGION = table(
    {
        "lower": (array(number(), min_length=1), None),
        "upper": (array(number(), min_length=1), None),
        "spacing": (number(positive=True), None),
    },
    required=("lower", "upper", "spacing"),
)

_PARAMS = table(
    {
        "gamma": (number(positive=True), 2.0),
        "grid": (_GRID, None),
        "refine": (_GRID, None),
        "window": (array(integer(0), length=2), None),
        "K": (integer(1), None),
        "method": (string(("auto", "direct", "sphere", "gaussian", "aniso", "heisenberg")), "auto"),
        "s": (array(number(above=1.0), min_length=1), [2.0, math.e, 10.0]),
        "z": (array(number(), min_length=1), [3.0]),
        "eps": (number(positive=True), 1.0),
        "region": (_REGION, None),
        "level": (integer(0), None),
        "seed": (integer(0), 0),
        "tolerance": (number(positive=True), 1e-8),
        "plot": (string(("none", "svg")), "none"),
    }
)

_NEEDS = {
    "trace": ("group", "operator"),
    "weyl": ("group", "operator", "function", "params.grid"),
    "residue": ("group", "operator"),
    "spectrum": ("group", "operator", "function", "params.grid"),
    "cover": ("group", "params.region"),
    "zeta": ("group", "operator", "function", "params.grid"),
    "signed": ("group", "operator", "function", "params.grid"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    group: dict
    operator: dict | None
    function: dict | None
    params: dict

    def canonical(self) -> str:
        data = {
            "command": self.command,
            "group": self.group,
            "operator": self.operator,
            "function": self.function,
            "params": self.params,
        }
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.canonical().encode())
        h.update(__version__.encode())
        return h.hexdigest()[:16]


def _reject_non_strict(v, path):
    if isinstance(v, bool):
        raise ConfigError(path, "booleans are not allowed")
    if isinstance(v, (datetime.date, datetime.time, datetime.datetime)):
        raise ConfigError(path, "dates and times are not allowed")
    if isinstance(v, dict):
        for k, x in v.items():
            _reject_non_strict(x, _join(path, k))
    elif isinstance(v, list):
        for i, x in enumerate(v):
            _reject_non_strict(x, f"{path}[{i}]")


def validate(raw: dict, command: str) -> ExperimentConfig:
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
    _reject_non_strict(raw, "")
    top = table(
        {
            "command": (string(COMMANDS), None),
            "group": (_GROUP, None),
            "operator": (_OPERATOR, None),
            "function": (_COEFF, None),
            "params": (_PARAMS, None),
        }
    )(raw, "")
    if top.get("command", command) != command:
        raise ConfigError("command", f"config is for {top['command']!r}, not {command!r}")
    top.setdefault("params", _PARAMS({}, "params"))
    for need in _NEEDS[command]:
        head, _, tail = need.partition(".")
        if head not in top or (tail and tail not in top[head]):
            raise ConfigError(need, "missing required key")
    return ExperimentConfig(command, top.get("group", {}), top.get("operator"), top.get("function"), top["params"])


def load(path, command: str) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError("", f"TOML parse error: {exc}") from None
    return validate(raw, command)
