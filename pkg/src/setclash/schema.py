"""JSON schema for scenario files."""

_vec = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_vecs = {"type": "array", "items": _vec}


def _set(type_, props, required):
    return {
        "type": "object",
        "properties": {"type": {"const": type_}, **props},
        "required": ["type", *required],
        "additionalProperties": False,
    }


_halfspace_body = {
    "type": "object",
    "properties": {"normal": _vec, "offset": {"type": "number"}},
    "required": ["normal", "offset"],
    "additionalProperties": False,
}

SET_SCHEMA = {
    "oneOf": [
        _set("halfspace", {"normal": _vec, "offset": {"type": "number"}}, ["normal", "offset"]),
        _set("hyperplane", {"normal": _vec, "offset": {"type": "number"}}, ["normal", "offset"]),
        _set("affine", {"point": _vec, "basis": _vecs}, ["point"]),
        _set("ball", {"center": _vec, "radius": {"type": "number", "minimum": 0}}, ["center", "radius"]),
        _set("box", {"lo": _vec, "hi": _vec}, ["lo", "hi"]),
        _set("polytope", {"halfspaces": {"type": "array", "items": _halfspace_body, "minItems": 1}},
             ["halfspaces"]),
        _set("abs_epigraph", {"shift": {"type": "number"}}, ["shift"]),
        _set("points", {"points": {"type": "array", "items": _vec, "minItems": 1}}, ["points"]),
        _set("translate", {"inner": {"$ref": "#/$defs/set"}, "by": _vec}, ["inner", "by"]),
        _set("ball_restriction",
             {"inner": {"$ref": "#/$defs/set"}, "center": _vec, "radius": {"type": "number", "minimum": 0}},
             ["inner", "center", "radius"]),
    ]
}

_region = {
    "type": "object",
    "properties": {"center": _vec, "radius": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["center", "radius"],
    "additionalProperties": False,
}

PARAMS_SCHEMA = {
    "type": "object",
    "properties": {
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "lam": {"type": "number", "exclusiveMinimum": 0},
        "eta": {"type": "number", "exclusiveMinimum": 0},
        "tau": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "rho": {"type": "number", "exclusiveMinimum": 0},
        "q": {"type": "number", "exclusiveMinimum": 0},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "delta": {"type": "number", "minimum": 0},
        "x0": _vec,
        "max_iter": {"type": "integer", "minimum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "grid_h": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "region": _region,
        "variant": {"enum": ["T12", "T14", "P16", "P21", "T17", "T19", "ZhNg"]},
        "method": {"enum": ["exact2", "grid", "cyclic"]},
        "weights": {"enum": ["uniform", "optimal"]},
        "budget": {"type": "integer", "minimum": 1},
        "count": {"type": "integer", "minimum": 1},
        "eps_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
    },
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1, "pattern": "^[A-Za-z0-9._-]+$"},
        "sets": {"type": "array", "items": {"$ref": "#/$defs/set"}, "minItems": 1},
        "shifts": _vecs,
        "common_point": _vec,
        "base_points": _vecs,
        "gauge": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["identity", "holder"]},
                "q": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "params": PARAMS_SCHEMA,
    },
    "required": ["name", "sets"],
    "additionalProperties": False,
    "$defs": {"set": SET_SCHEMA},
}
