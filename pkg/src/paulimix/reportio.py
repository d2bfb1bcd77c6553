"""Deterministic report emission.

All floats are rendered at 17 significant digits (enough to round-trip a
double bit-faithfully), infinities as ``inf``/``-inf`` and NaN as ``nan``;
JSON objects keep insertion order.  Identical inputs therefore produce
byte-identical output.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .dynamics import ClassificationReport, RateTrajectory, SpectralTrajectory
from .mubgen import MubFamily, MubReport
from .semigroupforge import InvertibilityForecast, ScanReport

__all__ = [
    "fmt_float",
    "to_json",
    "trajectory_csv",
    "matrix_csv",
    "mub_bases_csv",
    "classification_dict",
    "forecast_dict",
    "scan_report_dict",
    "mub_report_dict",
]


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _render(obj, indent: int) -> str:
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [
            f"{inner}{json.dumps(str(k))}: {_render(v, indent + 2)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        rows = [f"{inner}{_render(v, indent + 2)}" for v in obj]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isfinite(f):
            return fmt_float(f)
        return json.dumps(fmt_float(f))  # "inf"/"-inf"/"nan" as strings
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj) -> str:
    """Render a JSON document (with trailing newline)."""
    return _render(obj, 0) + "\n"


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def trajectory_csv(spectral: SpectralTrajectory, rates: RateTrajectory) -> str:
    d = spectral.dimension
    header = (
        ["t"]
        + [f"lambda_{b}" for b in range(1, d + 2)]
        + [f"gamma_{b}" for b in range(1, d + 2)]
    )
    lines = [",".join(header)]
    times = spectral.grid.times
    for k in range(times.size):
        row = [fmt_float(times[k])]
        row += [fmt_float(spectral.eigenvalues[b, k]) for b in range(d + 1)]
        row += [fmt_float(rates.gamma[b, k]) for b in range(d + 1)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def matrix_csv(m: np.ndarray) -> str:
    m = np.asarray(m)
    lines = ["row,col,re,im"]
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            v = complex(m[i, j])
            lines.append(f"{i},{j},{fmt_float(v.real)},{fmt_float(v.imag)}")
    return "\n".join(lines) + "\n"


def mub_bases_csv(family: MubFamily) -> str:
    lines = ["basis,vector,component,re,im"]
    for b in range(family.bases.shape[0]):
        for j in range(family.bases.shape[1]):
            for k in range(family.bases.shape[2]):
                v = complex(family.bases[b, j, k])
                lines.append(
                    f"{b + 1},{j},{k},{fmt_float(v.real)},{fmt_float(v.imag)}"
                )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON-ready dictionaries
# ---------------------------------------------------------------------------


def classification_dict(report: ClassificationReport) -> dict:
    return {
        "dimension": report.dimension,
        "is_semigroup": report.is_semigroup,
        "semigroup_exponents": list(report.semigroup_exponents),
        "max_semigroup_deviation": report.max_semigroup_deviation,
        "semigroup_tolerance": report.semigroup_tolerance,
        "is_cp_divisible": report.is_cp_divisible,
        "min_rate": report.min_rate,
        "cp_tolerance": report.cp_tolerance,
        "p_in_range": report.p_in_range,
        "singular_times": [
            {"label": label, "time": t} for label, t in report.singular_times
        ],
        "inputs": [
            {
                "component": v.component,
                "basis": v.basis,
                "verdict": v.verdict,
                "singular_times": list(v.singular_times),
            }
            for v in report.inputs
        ],
    }


def forecast_dict(forecast: InvertibilityForecast) -> dict:
    return {
        "construction": "all-channels",
        "dimension": forecast.dimension,
        "rate": forecast.rate,
        "noninvertible_count": forecast.noninvertible_count,
        "channels": [
            {
                "channel": c.channel,
                "weight": c.weight,
                "verdict": c.verdict,
                "singular_time": c.singular_time,
            }
            for c in forecast.channels
        ],
    }


def scan_report_dict(report: ScanReport) -> dict:
    return {
        "seed": report.seed,
        "trials": report.trials,
        "family": report.family,
        "counterexamples": [dict(c) for c in report.counterexamples],
        "pass": report.passed,
        "details": dict(report.details),
    }


def mub_report_dict(report: MubReport) -> dict:
    return {
        "dimension": report.dimension,
        "max_orthonormality_deviation": report.max_orthonormality_deviation,
        "max_unbiasedness_deviation": report.max_unbiasedness_deviation,
        "tolerance": report.tolerance,
        "pass": report.passed,
    }
