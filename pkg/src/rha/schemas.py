"""JSON Schemas (draft 2020-12) for the ``--json`` output of each subcommand.

Rationals are serialized as strings such as ``"5/4"`` so that no precision is lost.
"""

from __future__ import annotations

RATIONAL = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}

_VALUATION = {"type": "object", "additionalProperties": RATIONAL}

RUN = {
    "type": "object",
    "required": ["states", "steps", "duration"],
    "properties": {
        "states": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["loc", "val"],
                "properties": {"loc": {"type": "string"}, "val": _VALUATION},
            },
        },
        "steps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["delay", "rates", "edge"],
                "properties": {"delay": RATIONAL, "rates": _VALUATION, "edge": {"type": "string"}},
            },
        },
        "duration": RATIONAL,
    },
}

_CONSTRAINT = {
    "type": "object",
    "required": ["coeffs", "rel", "bound"],
    "properties": {
        "coeffs": _VALUATION,
        "rel": {"enum": ["<=", "<", "="]},
        "bound": RATIONAL,
    },
}

_POLYUNION = {"type": "array", "items": {"type": "array", "items": _CONSTRAINT}}

VALIDATE = {
    "type": "object",
    "required": ["name", "ok", "singular", "variables", "locations", "edges", "rmax", "cmax", "diagnostics"],
    "properties": {
        "name": {"type": "string"},
        "ok": {"type": "boolean"},
        "singular": {"type": "boolean"},
        "variables": {"type": "array", "items": {"type": "string"}},
        "locations": {"type": "integer", "minimum": 0},
        "edges": {"type": "integer", "minimum": 0},
        "rmax": RATIONAL,
        "cmax": RATIONAL,
        "diagnostics": {"type": "array", "items": {"type": "string"}},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

CHECK = {
    "type": "object",
    "required": ["verdict", "depth", "nodes", "completeness_depth", "path"],
    "properties": {
        "verdict": {"enum": ["YES", "NO", "DEPTH_EXHAUSTED"]},
        "depth": {"type": "integer", "minimum": 0},
        "nodes": {"type": "integer", "minimum": 0},
        "completeness_depth": {"type": "integer", "minimum": 0},
        "path": {"type": "array", "items": {"type": "string"}},
        "witness": RUN,
    },
}

REGION = {
    "type": "object",
    "required": ["variables", "regions", "polyhedra", "iterations", "stabilized"],
    "properties": {
        "variables": {"type": "array", "items": {"type": "string"}},
        "regions": {"type": "object", "additionalProperties": _POLYUNION},
        "polyhedra": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["loc", "constraints"],
                "properties": {"loc": {"type": "string"}, "constraints": {"type": "string"}},
            },
        },
        "iterations": {"type": "integer", "minimum": 0},
        "stabilized": {"type": "boolean"},
    },
}

CONTRACT = {
    "type": "object",
    "required": ["report", "input", "contracted"],
    "properties": {
        "report": {
            "type": "object",
            "required": ["length_before", "length_after", "type1_pieces", "type2_pieces", "bound_paper", "bound_internal",
                         "length_folded"],
            "properties": {
                "length_before": {"type": "integer", "minimum": 1},
                "length_after": {"type": "integer", "minimum": 1},
                "type1_pieces": {"type": "integer", "minimum": 0},
                "type2_pieces": {"type": "integer", "minimum": 0},
                "bound_paper": {"type": "integer", "minimum": 0},
                "bound_internal": {"type": "integer", "minimum": 0},
                "per_piece": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                "length_folded": {"type": "integer", "minimum": 1},
            },
        },
        "input": RUN,
        "contracted": RUN,
    },
}

REGIONIZE = {
    "type": "object",
    "required": ["locations", "edges", "location_bound", "init"],
    "properties": {
        "locations": {"type": "integer", "minimum": 0},
        "edges": {"type": "integer", "minimum": 0},
        "location_bound": {"type": "integer", "minimum": 0},
        "init": {"type": "array", "items": {"type": "string"}},
    },
}

TM_COMPILE = {
    "type": "object",
    "required": ["goal", "bound", "steps", "init", "locations", "edges"],
    "properties": {
        "goal": {"type": "string"},
        "bound": RATIONAL,
        "steps": {"type": "integer", "minimum": 1},
        "init": {"type": "string"},
        "locations": {"type": "integer"},
        "edges": {"type": "integer"},
        "verdict": {"enum": ["YES", "NO", "DEPTH_EXHAUSTED"]},
        "simulated": {"type": "boolean"},
    },
}

GOLDEN = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["name", "passed", "provenance", "report"],
        "properties": {
            "name": {"type": "string"},
            "passed": {"type": "boolean"},
            "provenance": {"type": "string"},
            "report": {"type": "string"},
        },
    },
}

SCHEMAS = {
    "validate": VALIDATE,
    "check": CHECK,
    "reach": REGION,
    "coreach": REGION,
    "contract": CONTRACT,
    "regionize": REGIONIZE,
    "tm-compile": TM_COMPILE,
    "golden": GOLDEN,
}
