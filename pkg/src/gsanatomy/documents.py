"""JSON documents for designs, spending plans and boundary solutions.

Every document carries ``"version": 1`` and a ``"document"`` tag. Unknown
fields are rejected so that a misspelled key can never fall back to a
default silently.

Design document::

    {"version": 1, "document": "design", "K": 2, "stage_n": [25, 25],
     "boundaries": [2.178, 2.178], "sigma": 1.0, "theta0": 0.0,
     "theta1": 0.5, "solution": {...}}

``theta1`` and ``solution`` are optional. ``solution`` is written by the
``boundaries`` command and holds ``achieved_spending``, ``target_spending``,
``residuals`` and ``iterations``.

Plan document::

    {"version": 1, "document": "plan", "kind": "explicit",
     "alpha_total": 0.025, "increments": [0.0125, 0.0125], "K": 2,
     "stage_n": [25, 25], "sigma": 1.0, "theta0": 0.0}

``kind`` is ``"pocock_constant"`` (no ``increments``) or ``"explicit"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .boundaries import BoundarySolution, SpendingPlan
from .design import Hypotheses, SequentialDesign
from .errors import SchemaError

VERSION = 1

_DESIGN_FIELDS = {"version", "document", "K", "stage_n", "boundaries", "sigma", "theta0", "theta1", "solution"}
_DESIGN_REQUIRED = {"version", "document", "K", "stage_n", "boundaries"}
_SOLUTION_FIELDS = {"achieved_spending", "target_spending", "residuals", "iterations"}
_PLAN_FIELDS = {"version", "document", "kind", "alpha_total", "increments", "K", "stage_n", "sigma",
                "theta0", "theta1"}
_PLAN_REQUIRED = {"version", "document", "kind", "K", "stage_n"}


def _number(doc: dict, key: str, default=None) -> float:
    if key not in doc:
        if default is None:
            raise SchemaError(f"{key}: required field missing")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{key}: expected a number, got {type(v).__name__}")
    return float(v)


def _number_list(doc: dict, key: str, length: int, integer: bool = False) -> list:
    v = doc.get(key)
    if not isinstance(v, list):
        raise SchemaError(f"{key}: expected a list")
    if len(v) != length:
        raise SchemaError(f"{key}: expected {length} entries, got {len(v)}")
    out = []
    for i, item in enumerate(v):
        if item is None:
            out.append(math.nan)
            continue
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise SchemaError(f"{key}[{i}]: expected a number")
        if integer and (not float(item).is_integer()):
            raise SchemaError(f"{key}[{i}]: expected an integer")
        out.append(int(item) if integer else float(item))
    return out


def _header(doc: Any, kind: str, allowed: set, required: set) -> int:
    if not isinstance(doc, dict):
        raise SchemaError("document: expected a JSON object")
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise SchemaError(f"{unknown[0]}: unknown field")
    missing = sorted(required - set(doc))
    if missing:
        raise SchemaError(f"{missing[0]}: required field missing")
    if doc["version"] != VERSION:
        raise SchemaError(f"version: unsupported version {doc['version']!r} (expected {VERSION})")
    if doc["document"] != kind:
        raise SchemaError(f"document: expected {kind!r}, got {doc['document']!r}")
    k = doc["K"]
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise SchemaError("K: expected a positive integer")
    return k


def design_from_dict(doc: Any) -> tuple[SequentialDesign, Hypotheses | None, float]:
    """Parse a design document into ``(design, hypotheses or None, theta0)``."""
    k = _header(doc, "design", _DESIGN_FIELDS, _DESIGN_REQUIRED)
    stage_n = _number_list(doc, "stage_n", k, integer=True)
    boundaries = _number_list(doc, "boundaries", k)
    sigma = _number(doc, "sigma", 1.0)
    theta0 = _number(doc, "theta0", 0.0)
    if "solution" in doc:
        sol = doc["solution"]
        if not isinstance(sol, dict):
            raise SchemaError("solution: expected an object")
        unknown = sorted(set(sol) - _SOLUTION_FIELDS)
        if unknown:
            raise SchemaError(f"solution.{unknown[0]}: unknown field")
    hyp = None
    if "theta1" in doc:
        theta1 = _number(doc, "theta1")
        if not theta1 > theta0:
            raise SchemaError("theta1: must exceed theta0")
        hyp = Hypotheses(theta0, theta1)
    return SequentialDesign(stage_n, boundaries, sigma), hyp, theta0


def design_to_dict(design: SequentialDesign, theta0: float = 0.0, theta1: float | None = None,
                   solution: BoundarySolution | None = None) -> dict:
    doc: dict[str, Any] = {
        "version": VERSION,
        "document": "design",
        "K": design.K,
        "stage_n": list(design.stage_n),
        "boundaries": list(design.boundaries),
        "sigma": design.sigma,
        "theta0": theta0,
    }
    if theta1 is not None:
        doc["theta1"] = theta1
    if solution is not None:
        def clean(seq):
            return [None if isinstance(v, float) and math.isnan(v) else v for v in seq]
        doc["solution"] = {
            "achieved_spending": clean(solution.achieved_spending),
            "target_spending": clean(solution.target_spending),
            "residuals": clean(solution.residuals),
            "iterations": list(solution.iterations),
        }
    return doc


def plan_from_dict(doc: Any) -> tuple[SpendingPlan, SequentialDesign, float]:
    """Parse a plan document into ``(plan, template design, theta0)``."""
    k = _header(doc, "plan", _PLAN_FIELDS, _PLAN_REQUIRED)
    stage_n = _number_list(doc, "stage_n", k, integer=True)
    sigma = _number(doc, "sigma", 1.0)
    theta0 = _number(doc, "theta0", 0.0)
    kind = doc["kind"]
    if kind == "explicit":
        if "increments" not in doc:
            raise SchemaError("increments: required for an explicit plan")
        inc = _number_list(doc, "increments", k)
        total = _number(doc, "alpha_total", math.fsum(inc))
        if abs(total - math.fsum(inc)) > 1e-12:
            raise SchemaError("alpha_total: does not equal the sum of increments")
        plan = SpendingPlan.explicit(inc)
    elif kind == "pocock_constant":
        if "increments" in doc:
            raise SchemaError("increments: not allowed for a pocock_constant plan")
        plan = SpendingPlan.pocock(_number(doc, "alpha_total"), k)
    else:
        raise SchemaError(f"kind: expected 'explicit' or 'pocock_constant', got {kind!r}")
    return plan, SequentialDesign(stage_n, [0.0] * k, sigma), theta0


def plan_to_dict(plan: SpendingPlan, template: SequentialDesign, theta0: float = 0.0) -> dict:
    doc: dict[str, Any] = {
        "version": VERSION,
        "document": "plan",
        "kind": plan.kind,
        "alpha_total": plan.alpha_total,
        "K": plan.K,
        "stage_n": list(template.stage_n),
        "sigma": template.sigma,
        "theta0": theta0,
    }
    if plan.increments is not None:
        doc["increments"] = list(plan.increments)
    return doc


def load(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"document: not valid JSON ({exc})") from exc


def dump(doc: dict, path: str | Path | None = None) -> str:
    text = json.dumps(doc, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
