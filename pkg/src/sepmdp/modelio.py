"""Model-file persistence and report serialization.

Model files are JSON with explicit shapes: `r_state` (N), `r_action` (M),
`kernel_action` (M rows of N), optional `reward_perturb` (N rows of M) and
`kernel_perturb` (N x M rows of N), plus `epsilon`.  Floats survive a
round-trip exactly (shortest round-trip decimal text).  Reports are JSON
objects with sorted keys so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .model import SeparableSpec

MODEL_FIELDS = ("n_states", "n_actions", "r_state", "r_action", "kernel_action", "epsilon")


def spec_to_dict(spec: SeparableSpec) -> dict:
    return {
        "n_states": spec.n_states,
        "n_actions": spec.n_actions,
        "r_state": spec.r_state.tolist(),
        "r_action": spec.r_action.tolist(),
        "kernel_action": spec.kernel_action.tolist(),
        "epsilon": float(spec.epsilon),
        "reward_perturb": spec.reward_perturb.tolist(),
        "kernel_perturb": spec.kernel_perturb.tolist(),
    }


def spec_from_dict(data: dict) -> SeparableSpec:
    """Build a SeparableSpec from parsed JSON, with per-field shape messages."""
    problems = []
    for key in MODEL_FIELDS:
        if key not in data:
            problems.append(f"missing required field '{key}'")
    if problems:
        raise ValueError("; ".join(problems))
    n, m = data["n_states"], data["n_actions"]
    checks = [
        ("r_state", (n,)),
        ("r_action", (m,)),
        ("kernel_action", (m, n)),
        ("reward_perturb", (n, m)),
        ("kernel_perturb", (n, m, n)),
    ]
    arrays = {}
    for key, shape in checks:
        if key not in data or data[key] is None:
            arrays[key] = None
            continue
        try:
            arr = np.asarray(data[key], dtype=float)
        except (TypeError, ValueError):
            problems.append(f"field '{key}' is not a numeric array")
            continue
        if arr.shape != shape:
            problems.append(f"field '{key}' has shape {arr.shape}, expected {shape}")
            continue
        arrays[key] = arr
    if problems:
        raise ValueError("; ".join(problems))
    return SeparableSpec(
        r_state=arrays["r_state"],
        r_action=arrays["r_action"],
        kernel_action=arrays["kernel_action"],
        epsilon=float(data["epsilon"]),
        reward_perturb=arrays["reward_perturb"],
        kernel_perturb=arrays["kernel_perturb"],
    )


def load_model(path) -> SeparableSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return spec_from_dict(data)


def save_model(spec: SeparableSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def to_jsonable(value):
    """Recursively convert numpy containers to plain JSON types (inf -> null)."""
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isinf(value) else value
    return value


def dumps_report(report: dict) -> str:
    """Canonical report text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


SWEEP_CSV_COLUMNS = ("epsilon", "optimal_gain", "fixed_policy_gain", "gap")


def sweep_csv(report: dict) -> str:
    """CSV table of a sweep report: one row per grid epsilon."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_CSV_COLUMNS)
    rows = zip(
        report["epsilons"], report["optimal_gain"], report["fixed_policy_gain"], report["gap"]
    )
    for eps, opt, fixed, gap in rows:
        writer.writerow([repr(float(eps)), repr(float(opt)), repr(float(fixed)), repr(float(gap))])
    return buf.getvalue()


_MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "version", "timestamp", "input", "parameters"],
    "properties": {
        "command": {"type": "string"},
        "version": {"type": "string"},
        "timestamp": {"type": "string"},
        "input": {"type": "object"},
        "parameters": {"type": "object"},
    },
}

_NUMBER_ARRAY = {"type": "array", "items": {"type": "number"}}
_NULLABLE_NUMBER = {"type": ["number", "null"]}

REPORT_SCHEMAS = {
    "solve": {
        "type": "object",
        "required": [
            "manifest",
            "best_action",
            "gain",
            "per_action_gain",
            "bias",
            "acoe_residual_max",
            "brute_force_check",
        ],
        "properties": {
            "manifest": _MANIFEST_SCHEMA,
            "best_action": {"type": "integer"},
            "gain": {"type": "number"},
            "per_action_gain": _NUMBER_ARRAY,
            "bias": _NUMBER_ARRAY,
            "acoe_residual_max": {"type": "number"},
            "brute_force_check": {
                "type": "object",
                "required": ["within_cap", "gain", "agrees"],
                "properties": {
                    "within_cap": {"type": "boolean"},
                    "gain": _NULLABLE_NUMBER,
                    "agrees": {"type": ["boolean", "null"]},
                },
            },
        },
    },
    "sweep": {
        "type": "object",
        "required": [
            "manifest",
            "epsilons",
            "optimal_gain",
            "fixed_policy_gain",
            "gap",
            "gap_slope",
            "expansion_slope",
            "uniform_C",
            "uniform_C_exhaustive",
            "baseline_action",
            "feasible_below",
        ],
        "properties": {
            "manifest": _MANIFEST_SCHEMA,
            "epsilons": _NUMBER_ARRAY,
            "optimal_gain": _NUMBER_ARRAY,
            "fixed_policy_gain": _NUMBER_ARRAY,
            "gap": _NUMBER_ARRAY,
            "gap_slope": _NULLABLE_NUMBER,
            "expansion_slope": _NULLABLE_NUMBER,
            "uniform_C": {"type": "number"},
            "uniform_C_exhaustive": {"type": "boolean"},
            "baseline_action": {"type": "integer"},
            "feasible_below": _NULLABLE_NUMBER,
        },
    },
    "expand": {
        "type": "object",
        "required": ["manifest", "policy", "pi0", "pi1", "g0", "g1", "residual_curve"],
        "properties": {
            "manifest": _MANIFEST_SCHEMA,
            "policy": {"type": "array", "items": {"type": "integer"}},
            "pi0": _NUMBER_ARRAY,
            "pi1": _NUMBER_ARRAY,
            "g0": {"type": "number"},
            "g1": {"type": "number"},
            "residual_curve": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"}},
            },
        },
    },
    "simulate": {
        "type": "object",
        "required": ["manifest", "mean", "half_width", "horizon", "batches", "seed"],
        "properties": {
            "manifest": _MANIFEST_SCHEMA,
            "mean": {"type": "number"},
            "half_width": {"type": "number"},
            "horizon": {"type": "integer"},
            "batches": {"type": "integer"},
            "seed": {"type": "integer"},
        },
    },
}
