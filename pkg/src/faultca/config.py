"""Experiment configuration: JSON in, validated canonical dict out.

A config names a lattice, a rule family, a fault specification, a simulation
plan and a seed.  ``parse_config`` fills every default and normalises the
fault rates, so ``parse_config(echo(c)) == c`` for any parsed ``c``.
"""

from __future__ import annotations

import copy
import json
from fractions import Fraction

import jsonschema

from .faults import ADVERSARIAL, MODELS, PURE, FaultError, FaultSpec, exact
from .transition import BooleanTable, RuleError, analyze_boolean
from .analysis import MODES
from .engine import BOUNDARY_POLICIES, CLAMP_TO_ERROR


class ConfigError(ValueError):
    pass


_prob = {"type": "number", "minimum": 0, "maximum": 1}
_pos = {"type": "integer", "minimum": 1}

LATTICE_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["kind", "q", "depth"],
         "properties": {"kind": {"const": "tree"}, "q": {"type": "integer", "minimum": 2},
                        "depth": {"type": "integer", "minimum": 0}}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "p", "q", "shells"],
         "properties": {"kind": {"const": "hyperbolic"}, "p": {"type": "integer", "minimum": 3},
                        "q": {"type": "integer", "minimum": 3}, "shells": {"type": "integer", "minimum": 0},
                        "max_vertices": _pos}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "tiling", "width", "height"],
         "properties": {"kind": {"const": "euclidean"}, "tiling": {"enum": ["square44", "tri36", "hex63"]},
                        "width": _pos, "height": _pos}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "width", "height"],
         "properties": {"kind": {"const": "toom"}, "width": _pos, "height": _pos}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "path"],
         "properties": {"kind": {"const": "file"}, "path": {"type": "string"}}},
    ]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lattice": LATTICE_SCHEMA,
        "rules": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["majority", "tree", "table"]},
                           "hex": {"type": "string"}, "arity": {"type": "integer", "minimum": 0}},
        },
        "faults": {
            "type": "object", "additionalProperties": False,
            "properties": {"alpha": _prob, "beta": _prob, "xi": {"type": "number", "minimum": 0, "maximum": 0.5},
                           "epsilon": _prob, "model": {"enum": list(MODELS)}, "a": {"enum": [0, 1]}},
        },
        "plan": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "horizon": {"type": "integer", "minimum": 0},
                "replicates": _pos,
                "root": {"type": "integer", "minimum": 0},
                "observe": {"oneOf": [{"enum": ["root", "all"]},
                                      {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}]},
                "boundary": {"enum": list(BOUNDARY_POLICIES)},
                "light_cone": {"type": "boolean"},
            },
        },
        "recursion": {
            "type": "object", "additionalProperties": False,
            "properties": {"d": _pos, "h": {"type": ["integer", "null"], "minimum": 0},
                           "m": {"type": "integer", "minimum": 0}, "mode": {"enum": list(MODES)},
                           "t_max": _pos, "delta": {"type": ["number", "null"], "exclusiveMinimum": 0,
                                                    "exclusiveMaximum": 0.5}},
        },
        "sweep": {
            "type": "object", "additionalProperties": False, "required": ["action", "grid"],
            "properties": {"action": {"enum": ["recurse", "simulate", "bounds"]},
                           "grid": {"type": "object", "minProperties": 1,
                                    "additionalProperties": {"type": "array", "minItems": 1}}},
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 128 - 1},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"prefix": {"type": "string", "minLength": 1}}},
    },
}

DEFAULT_PLAN = {"horizon": 10, "replicates": 1000, "root": 0, "observe": "root",
                "boundary": CLAMP_TO_ERROR, "light_cone": False}
DEFAULT_RECURSION = {"h": None, "m": 0, "mode": "paper_bound", "t_max": 1_000_000, "delta": None}
GRID_ALIASES = {"q": "recursion.d", "d": "recursion.d", "xi": "faults.xi"}


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def _canonical_faults(f: dict) -> dict:
    f = dict(f)
    model = f.get("model", ADVERSARIAL)
    a = f.get("a", 0)
    if "xi" in f:
        if "alpha" in f or "beta" in f:
            raise ConfigError("faults: give either xi or alpha/beta, not both")
        alpha = float(Fraction(1, 2) - exact(f["xi"]))
        beta = 0.0
    elif "alpha" in f:
        alpha = float(f["alpha"])
        beta = float(f.get("beta", 0.0))
    elif "epsilon" in f:
        alpha, beta = float(f["epsilon"]), 0.0
    else:
        raise ConfigError("faults: one of xi, alpha or epsilon is required")
    try:
        spec = FaultSpec(alpha, beta, model, a)
    except FaultError as exc:
        raise ConfigError(f"faults: {exc}") from None
    eps = spec.epsilon
    if "epsilon" in f and abs(float(f["epsilon"]) - eps) > 1e-12:
        raise ConfigError(f"faults: epsilon={f['epsilon']} disagrees with the rates (combined {eps})")
    if eps >= 0.5:
        raise ConfigError(f"faults: combined rate {eps} >= 1/2 leaves nothing to remember")
    return {"alpha": alpha, "beta": beta, "model": model, "a": a, "epsilon": eps}


def _check_rules(rules: dict, faults: dict) -> dict:
    rules = dict(rules)
    if rules["kind"] == "table":
        if "hex" not in rules or "arity" not in rules:
            raise ConfigError("rules: a table rule needs hex and arity")
        try:
            table = BooleanTable.from_hex(rules["hex"], rules["arity"])
        except RuleError as exc:
            raise ConfigError(f"rules: {exc}") from None
        rules["hex"] = table.to_hex()
        if faults["model"] == ADVERSARIAL and not analyze_boolean(table).monotone:
            raise ConfigError("rules: table is not monotone, so the adversarial model has no "
                              "optimal greedy adversary; use pure_probabilistic")
    elif "hex" in rules or "arity" in rules:
        raise ConfigError("rules: hex/arity only apply to table rules")
    return rules


def parse_config(text_or_dict) -> dict:
    """Validate and canonicalise a config (JSON text or an already-loaded dict)."""
    if isinstance(text_or_dict, str):
        try:
            doc = json.loads(text_or_dict)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    else:
        doc = copy.deepcopy(text_or_dict)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        msg = "; ".join(f"{_path(e)}: {e.message}" for e in errors[:5])
        raise ConfigError(f"config schema violation: {msg}")
    out = {"seed": doc.get("seed", 0)}
    if "lattice" in doc:
        out["lattice"] = doc["lattice"]
    out["faults"] = _canonical_faults(doc["faults"]) if "faults" in doc else None
    if "rules" in doc:
        if out["faults"] is None:
            raise ConfigError("rules need a faults section")
        out["rules"] = _check_rules(doc["rules"], out["faults"])
    elif "lattice" in doc:
        out["rules"] = {"kind": "majority"}
    if "plan" in doc or "lattice" in doc:
        out["plan"] = {**DEFAULT_PLAN, **doc.get("plan", {})}
    if "recursion" in doc:
        out["recursion"] = {**DEFAULT_RECURSION, **doc["recursion"]}
    if "sweep" in doc:
        grid = {GRID_ALIASES.get(k, k): v for k, v in doc["sweep"]["grid"].items()}
        out["sweep"] = {"action": doc["sweep"]["action"], "grid": grid}
    out["output"] = {"prefix": "run", **doc.get("output", {})}
    return {k: v for k, v in out.items() if v is not None}


def echo(config: dict) -> str:
    """Canonical JSON text; parsing it again gives the same config."""
    return json.dumps(config, indent=2, sort_keys=True) + "\n"


def fault_spec(config: dict) -> FaultSpec:
    f = config["faults"]
    return FaultSpec(f["alpha"], f["beta"], f["model"], f["a"])


def with_override(config: dict, dotted: str, value) -> dict:
    """Copy of the raw config with one dotted key replaced.

    Setting ``faults.xi`` drops any alpha/beta/epsilon so the point stays
    well-formed, and vice versa.
    """
    doc = copy.deepcopy(config)
    section, _, key = dotted.partition(".")
    if not key:
        doc[section] = value
        return doc
    sub = doc.setdefault(section, {})
    if section == "faults":
        if key == "xi":
            for k in ("alpha", "beta", "epsilon"):
                sub.pop(k, None)
        elif key in ("alpha", "beta", "epsilon"):
            sub.pop("xi", None)
            sub.pop("epsilon", None)
    sub[key] = value
    return doc
