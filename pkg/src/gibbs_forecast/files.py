"""JSON schemas and file formats (series CSV, specs, configs, parameter points)."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .experiment import ExperimentConfig
from .predictors import ModelCatalog, ParamPoint
from .selection import SCHEMA_VERSION
from .series_gen import ProcessSpec, TimeSeries


class SchemaError(ValueError):
    """A document failed validation; the message names the offending field path."""


_POS = {"type": "number", "exclusiveMinimum": 0}

INNOVATION_SCHEMA = {
    "oneOf": [
        {"type": "object", "required": ["kind", "sigma"], "additionalProperties": False,
         "properties": {"kind": {"const": "gaussian"}, "sigma": _POS}},
        {"type": "object", "required": ["kind", "rate"], "additionalProperties": False,
         "properties": {"kind": {"const": "mixture_dirac_exp"}, "rate": _POS}},
        {"type": "object", "required": ["kind", "prob"], "additionalProperties": False,
         "properties": {"kind": {"const": "bernoulli"},
                        "prob": {"type": "number", "minimum": 0, "maximum": 1},
                        "scale": {"type": "number"}}},
    ]
}

PROCESS_SCHEMA = {
    "oneOf": [
        {"type": "object", "required": ["kind", "innovation"], "additionalProperties": False,
         "properties": {"kind": {"const": "ar"},
                        "coeffs": {"type": "array", "items": {"type": "number"}},
                        "intercept": {"type": "number"},
                        "innovation": INNOVATION_SCHEMA}},
        {"type": "object", "required": ["kind", "coeffs", "innovation"],
         "additionalProperties": False,
         "properties": {"kind": {"const": "ma_truncated"},
                        "coeffs": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                        "innovation": INNOVATION_SCHEMA}},
        {"type": "object", "required": ["kind", "components", "noise_sigma"],
         "additionalProperties": False,
         "properties": {"kind": {"const": "additive_ar"},
                        "components": {"type": "array", "items": {"type": "string"},
                                       "minItems": 1},
                        "noise_sigma": _POS}},
        {"type": "object", "required": ["kind"], "additionalProperties": False,
         "properties": {"kind": {"const": "doubling_map"}}},
    ]
}

MODEL_SCHEMA = {
    "type": "object", "required": ["family", "p", "radius"],
    "properties": {
        "family": {"enum": ["linear", "neural", "fourier"]},
        "p": {"type": "integer", "minimum": 1},
        "ell": {"type": "integer", "minimum": 1},
        "radius": _POS, "lip_cap": _POS,
        "d": {"type": ["number", "null"], "minimum": 1},
    },
}

CATALOG_SCHEMA = {
    "type": "object", "required": ["n", "models"],
    "properties": {"n": {"type": "integer", "minimum": 4},
                   "models": {"type": "array", "items": MODEL_SCHEMA, "minItems": 1}},
}

PARAM_POINT_SCHEMA = {
    "type": "object", "required": ["model", "coords"],
    "properties": {"model": MODEL_SCHEMA,
                   "coords": {"type": "array", "items": {"type": "number"}}},
}

CATALOG_DESCRIPTOR_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {"family": {"enum": ["linear", "neural", "fourier"]},
                   "p_max": {"type": "integer", "minimum": 1},
                   "ell_max": {"type": "integer", "minimum": 1},
                   "radius": _POS, "lip_cap": {"type": ["number", "null"]},
                   "lip_of_risk": _POS},
}

CONFIG_SCHEMA = {
    "type": "object", "required": ["process"], "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "label": {"type": "string"},
        "process": PROCESS_SCHEMA,
        "n_train": {"type": "integer", "minimum": 4},
        "n_eval": {"type": "integer", "minimum": 4},
        "skip": {"type": "integer", "minimum": 0},
        "catalog": CATALOG_DESCRIPTOR_SCHEMA,
        "grid": {"enum": ["fixed", "theoretical"]},
        "mode": {"enum": ["practical", "theoretical"]},
        "K": _POS,
        "mc_samples": {"type": "integer", "minimum": 2},
        "repetitions": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0},
        "burn_in": {"type": ["integer", "null"], "minimum": 0},
        "max_proposals": {"type": "integer", "minimum": 1},
    },
}


def validate(doc: Any, schema: dict, what: str) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        while err.context:
            # oneOf: descend into the branch whose "kind" matched, if any
            branches: dict[Any, list] = {}
            for sub in err.context:
                branches.setdefault(sub.relative_schema_path[0], []).append(sub)
            matched = [errs for errs in branches.values()
                       if not any(e.validator == "const" for e in errs)]
            if len(matched) != 1:
                break
            err = min(matched[0], key=lambda e: -len(e.absolute_path))
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"{what}: invalid at {path}: {err.message}")


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, doc: Any) -> None:
    Path(path).write_text(dumps(doc))


def load_process(doc: dict) -> ProcessSpec:
    validate(doc, PROCESS_SCHEMA, "process spec")
    return ProcessSpec.from_dict(doc)


def load_catalog(doc: dict) -> ModelCatalog:
    validate(doc, CATALOG_SCHEMA, "model catalog")
    return ModelCatalog.from_dict(doc)


def load_param_point(doc: dict) -> ParamPoint:
    if "theta_hat" in doc:
        doc = doc["theta_hat"]
    validate(doc, PARAM_POINT_SCHEMA, "parameter point")
    return ParamPoint.from_dict(doc)


def load_config(doc: dict) -> ExperimentConfig:
    validate(doc, CONFIG_SCHEMA, "experiment config")
    return ExperimentConfig.from_dict(doc)


def series_to_csv(series: TimeSeries) -> str:
    header = {"schema_version": SCHEMA_VERSION, "origin": series.origin,
              "seed": series.seed, "burn_in": series.burn_in}
    lines = ["# " + json.dumps(header, sort_keys=True), "value"]
    lines.extend(repr(float(v)) for v in series.values)
    return "\n".join(lines) + "\n"


def write_series(path: str | Path, series: TimeSeries) -> None:
    Path(path).write_text(series_to_csv(series))


def read_series(path: str | Path) -> TimeSeries:
    """Read a single-column CSV, with or without the JSON comment header."""
    meta: dict[str, Any] = {}
    values = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            cell = row[0].strip()
            if cell.startswith("#"):
                text = ",".join(row).lstrip("#").strip()
                try:
                    meta = json.loads(text)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{lineno}: malformed header comment") from exc
                continue
            if len(row) != 1:
                raise SchemaError(f"{path}:{lineno}: expected a single column, got {len(row)}")
            try:
                values.append(float(cell))
            except ValueError:
                if values:
                    raise SchemaError(f"{path}:{lineno}: not a number: {cell!r}") from None
                # column header
    return TimeSeries(np.asarray(values), origin=meta.get("origin"), seed=meta.get("seed"),
                      burn_in=meta.get("burn_in") or 0)
