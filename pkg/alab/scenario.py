"""
Scenario files: a JSON document naming an operation and its inputs.

    {"version": 1, "operation": "purity", "inputs": {...}}

Inputs are validated against a per-operation JSON schema before anything is
decoded; unknown fields are rejected and errors name the JSON path of the
offending value. A bare inputs object (or, for snf, a bare matrix) is also
accepted.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

from jsonschema import Draft7Validator
from jsonschema.exceptions import best_match

from .errors import ScenarioError

logger = logging.getLogger(__name__)

SCENARIO_VERSION = 1

OPERATIONS = (
    "snf",
    "group",
    "purity",
    "closure",
    "heights",
    "type-eq",
    "gtype",
    "divhull",
    "solve",
    "probe",
    "chain",
    "amalgamate",
    "instability",
    "verify",
)

_INT = {"type": ["integer", "string"], "pattern": "^-?[0-9]+$"}
_RATIONAL = {"type": ["integer", "string"], "pattern": "^-?[0-9]+(/[0-9]+)?$"}
_HEIGHT = {"anyOf": [{"type": "integer", "minimum": 0}, {"enum": ["infinity", "inf"]}]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _INT}}
_INT_VECTOR = {"type": "array", "items": _INT}
_RATIONAL_ROWS = {"type": "array", "items": {"type": "array", "items": _RATIONAL}}
_COMPONENT = {"anyOf": [_RATIONAL, {"type": "array", "items": _INT}]}
_ELEMENT = {"type": "array", "items": _COMPONENT}
_POSITIVE = {"type": "integer", "minimum": 1}
_AT_LEAST_TWO = {"type": "integer", "minimum": 2}

_CHARACTERISTIC = {
    "type": "object",
    "properties": {
        "default": {"enum": ["zero", "infinity"]},
        "exceptions": {"type": "object", "additionalProperties": _HEIGHT},
    },
    "additionalProperties": False,
}

_ATOM = {
    "type": "object",
    "properties": {
        "atom": {"enum": ["Z", "Zmod", "Q", "Pruefer", "Loc", "Completion"]},
        "n": _POSITIVE,
        "p": _POSITIVE,
        "K": _POSITIVE,
        "w": _POSITIVE,
    },
    "required": ["atom"],
    "additionalProperties": False,
}

_FG_GROUP = {
    "type": "object",
    "properties": {
        "free_rank": {"type": "integer", "minimum": 0},
        "torsion": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    },
    "additionalProperties": False,
}

_RELATIONS_GROUP = {
    "type": "object",
    "properties": {"relations": _MATRIX, "generators": {"type": "integer", "minimum": 0}},
    "required": ["relations"],
    "additionalProperties": False,
}

_STRUCTURED_GROUP = {
    "type": "object",
    "properties": {"summands": {"type": "array", "items": _ATOM}},
    "required": ["summands"],
    "additionalProperties": False,
}

_CD_GROUP = {
    "type": "object",
    "properties": {"characteristics": {"type": "array", "items": _CHARACTERISTIC}},
    "required": ["characteristics"],
    "additionalProperties": False,
}

_FG = {"oneOf": [_FG_GROUP, _RELATIONS_GROUP]}
_GROUP = {"oneOf": [_FG_GROUP, _RELATIONS_GROUP, _STRUCTURED_GROUP, _CD_GROUP]}
_ATOMIC = {"oneOf": [_FG_GROUP, _RELATIONS_GROUP, _STRUCTURED_GROUP]}

_EQUATION = {
    "type": "object",
    "properties": {
        "coefficients": {"type": "object", "additionalProperties": {"type": "integer"}},
        "constant": _ELEMENT,
    },
    "required": ["coefficients", "constant"],
    "additionalProperties": False,
}

_STREAM = {
    "type": "object",
    "properties": {
        "family": {"enum": ["shift-recurrence", "height-ladder", "explicit"]},
        "p": {"type": "integer", "minimum": 2},
        "constants": {"anyOf": [{"const": "units"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}]},
        "equations": {"type": "array", "items": _EQUATION},
    },
    "required": ["family"],
    "additionalProperties": False,
}


def _inputs(properties: Dict[str, Any], required=()) -> Dict[str, Any]:
    return {"type": "object", "properties": properties, "required": list(required), "additionalProperties": False}


INPUT_SCHEMAS: Dict[str, Dict[str, Any]] = {
    "snf": _inputs({"matrix": _MATRIX}, ["matrix"]),
    "group": _inputs({"group": _GROUP, "element": _ELEMENT}, ["group"]),
    "purity": _inputs({"ambient": _FG, "generators": _MATRIX}, ["ambient", "generators"]),
    "closure": _inputs({"ambient": _FG, "generators": _MATRIX}, ["ambient", "generators"]),
    "heights": _inputs(
        {"group": _GROUP, "element": _ELEMENT, "primes": {"type": "array", "items": {"type": "integer", "minimum": 2}}},
        ["group", "element"],
    ),
    "type-eq": _inputs(
        {
            "ambient": _GROUP,
            "base": {"type": "array", "items": _ELEMENT},
            "a": _ELEMENT,
            "b": _ELEMENT,
            "rank_bound": _POSITIVE,
        },
        ["ambient", "base", "a", "b"],
    ),
    "gtype": _inputs(
        {
            "ambient": _FG,
            "subgroup": _MATRIX,
            "a": _INT_VECTOR,
            "b": _INT_VECTOR,
            "brute_force": {"type": "boolean"},
        },
        ["ambient", "subgroup", "a", "b"],
    ),
    "divhull": _inputs({"group": _ATOMIC}, ["group"]),
    "solve": _inputs({"group": _ATOMIC, "equations": {"type": "array", "items": _EQUATION}}, ["group", "equations"]),
    "probe": _inputs({"group": _ATOMIC, "stream": _STREAM, "N_max": _AT_LEAST_TWO}, ["group", "stream", "N_max"]),
    "chain": _inputs(
        {
            "class": {"enum": ["Kab", "Ktf", "kab", "ktf"]},
            "base": _ATOMIC,
            "steps": {"type": "integer"},
            "m": {"type": "integer"},
            "prime_bound": {"type": "integer"},
            "cofinality": {"enum": ["omega", "uncountable-proxy"]},
            "precision": _POSITIVE,
            "p": {"type": "integer", "minimum": 2},
            "probe": _inputs({"stage": {"type": "integer", "minimum": 0}, "extension": _STRUCTURED_GROUP}, ["stage", "extension"]),
        },
        ["class", "base", "steps"],
    ),
    "amalgamate": _inputs(
        {
            "base": _STRUCTURED_GROUP,
            "left": _GROUP,
            "right": _GROUP,
            "f1": _RATIONAL_ROWS,
            "f2": _RATIONAL_ROWS,
            "samples": _POSITIVE,
        },
        ["base", "left", "right", "f1", "f2"],
    ),
    "instability": _inputs({"group": _GROUP, "n": {"type": "integer"}}, ["n"]),
    "verify": _inputs({"certificate": {"type": "object"}}, ["certificate"]),
}

_SCENARIO = {
    "type": "object",
    "properties": {
        "version": {"const": SCENARIO_VERSION},
        "operation": {"enum": list(OPERATIONS)},
        "inputs": {"type": "object"},
    },
    "required": ["version", "operation", "inputs"],
    "additionalProperties": False,
}


def json_path(prefix: str, parts) -> str:
    path = prefix
    for part in parts:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def _validate(document: Any, schema: Mapping[str, Any], prefix: str) -> None:
    error = best_match(Draft7Validator(schema).iter_errors(document))
    if error is not None:
        raise ScenarioError(json_path(prefix, error.absolute_path), error.message, error)


@dataclass(frozen=True)
class ScenarioFile:
    """
    A validated scenario.

    Attributes:
        operation: Subcommand name
        inputs: Schema-checked inputs
        prefix: JSON path of the inputs object, used in later error messages
    """

    operation: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    version: int = SCENARIO_VERSION
    prefix: str = "$.inputs"

    def path(self, *parts) -> str:
        return json_path(self.prefix, parts)

    def get(self, key: str, default: Optional[Any] = None) -> Any:
        return self.inputs.get(key, default)

    def to_json(self) -> Dict[str, Any]:
        return {"version": self.version, "operation": self.operation, "inputs": self.inputs}


def validate_inputs(operation: str, inputs: Any, prefix: str = "$.inputs") -> ScenarioFile:
    """
    Raises:
        ScenarioError: If the operation is unknown or the inputs do not match its schema
    """
    if operation not in INPUT_SCHEMAS:
        raise ScenarioError("$.operation", f"unknown operation {operation!r}")
    _validate(inputs, INPUT_SCHEMAS[operation], prefix)
    return ScenarioFile(operation, dict(inputs), prefix=prefix)


def parse_scenario(document: Any, operation: str) -> ScenarioFile:
    """
    Validate a loaded document for `operation`.

    Raises:
        ScenarioError: On schema violations or an operation mismatch
    """
    if isinstance(document, dict) and "operation" in document:
        _validate(document, _SCENARIO, "$")
        if document["operation"] != operation:
            raise ScenarioError(
                "$.operation", f"scenario is for {document['operation']!r}, not {operation!r}"
            )
        return validate_inputs(operation, document["inputs"], "$.inputs")
    if isinstance(document, list) and operation == "snf":
        return validate_inputs(operation, {"matrix": document}, "$")
    if isinstance(document, dict):
        return validate_inputs(operation, document, "$")
    raise ScenarioError("$", "expected a JSON object")


def load_json(path: str) -> Any:
    """
    Raises:
        ScenarioError: If the file cannot be read or is not JSON
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise ScenarioError("$", f"cannot read {path}: {e.strerror or e}", e) from e
    except json.JSONDecodeError as e:
        raise ScenarioError("$", f"invalid JSON in {path}: {e.msg} (line {e.lineno})", e) from e


def load_scenario(path: str, operation: str) -> ScenarioFile:
    scenario = parse_scenario(load_json(path), operation)
    logger.debug(f"Loaded {operation} scenario from {path}")
    return scenario
