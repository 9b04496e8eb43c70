"""Deterministic JSON serialization for matrices and reports.

The repo-wide matrix format is {"n": int, "re": [[...]], "im": [[...]]}
with row-major arrays; writers emit 17-significant-digit decimals so a
round trip preserves every double bit-exactly.  The writer below is a
small recursive emitter (instead of the stdlib encoder) so float
formatting, key order, and separators are pinned — equal objects always
produce byte-identical text.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any, List

import numpy as np

from .kernel import CMatrix, OrthoProjection


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("non-finite float cannot be serialized")
    return format(float(x), ".17g")


def dumps(obj: Any) -> str:
    """Deterministic JSON text; floats carry 17 significant digits."""
    pieces: List[str] = []
    _emit(obj, pieces)
    return "".join(pieces)


def _emit(obj: Any, out: List[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, Fraction):
        out.append(f"[{obj.numerator}, {obj.denominator}]")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _emit(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, value in enumerate(obj):
            if i:
                out.append(", ")
            _emit(value, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def matrix_to_obj(matrix: CMatrix) -> dict:
    return {
        "n": matrix.n,
        "re": [[float(x) for x in row] for row in matrix.data.real],
        "im": [[float(x) for x in row] for row in matrix.data.imag],
    }


def obj_to_matrix(obj: dict) -> CMatrix:
    n = int(obj["n"])
    re = np.array(obj["re"], dtype=np.float64)
    im = np.array(obj["im"], dtype=np.float64)
    if re.shape != (n, n) or im.shape != (n, n):
        raise ValueError("matrix object arrays do not match declared dimension")
    return CMatrix(re + 1j * im)


def save_matrix(matrix: CMatrix, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(matrix_to_obj(matrix)))
        fh.write("\n")


def load_matrix(path: str) -> CMatrix:
    with open(path) as fh:
        return obj_to_matrix(json.load(fh))


def projection_to_obj(proj: OrthoProjection) -> dict:
    return {
        "matrix": matrix_to_obj(proj.matrix),
        "rank": proj.rank,
        "trace": proj.trace_value,
    }


def obj_to_projection(obj: dict) -> OrthoProjection:
    return OrthoProjection(obj_to_matrix(obj["matrix"]), int(obj["rank"]))


def flag_to_obj(flag) -> dict:
    return {
        "projections": [matrix_to_obj(p.matrix) for p in flag.projections],
        "trace_targets": list(flag.trace_targets),
    }


def obj_to_flag(obj: dict):
    from .flags import Flag

    targets = [Fraction(num, den) for num, den in obj["trace_targets"]]
    projections = []
    for mat_obj, target in zip(obj["projections"], targets):
        matrix = obj_to_matrix(mat_obj)
        rank = int(round(np.trace(matrix.data).real))
        projections.append(OrthoProjection(matrix, rank))
    return Flag(projections=tuple(projections), trace_targets=tuple(targets))


def flag_report_to_obj(report) -> dict:
    obj = flag_to_obj(report.flag)
    obj["residuals"] = [float(r) for r in report.residuals]
    obj["max_residual"] = float(report.max_residual)
    return obj


def distance_result_to_obj(result) -> dict:
    cfg = result.config
    return {
        "objective": result.objective,
        "k": result.k,
        "best_value": float(result.best_value),
        "best_projection": projection_to_obj(result.best_projection),
        "restarts": result.restarts,
        "converged_restarts": result.converged_restarts,
        "seed": result.seed,
        "config": {
            "restarts": cfg.restarts,
            "max_iters": cfg.max_iters,
            "armijo_factor": cfg.armijo_factor,
            "armijo_slope": cfg.armijo_slope,
            "grad_tol": cfg.grad_tol,
            "seed": cfg.seed,
            "include_canonical_start": cfg.include_canonical_start,
            "target_value": cfg.target_value,
        },
        "restart_trace": [
            {"value": float(v), "iterations": int(i)} for v, i in result.restart_trace
        ],
    }


def compression_report_to_obj(report) -> dict:
    return {
        "source": matrix_to_obj(report.source),
        "result": matrix_to_obj(report.result),
        "eps": float(report.eps),
        "levels": report.levels,
        "total_perturbation": float(report.total_perturbation),
        "schedule": {
            "stage_budgets": [float(b) for b in report.schedule.stage_budgets],
            "delta": [float(d) for d in report.schedule.delta],
            "eps1": [float(e) for e in report.schedule.eps1],
        },
        "steps": [
            {
                "perturbation": float(s.perturbation),
                "rescale_factor": float(s.rescale_factor),
                "corner_rank": s.corner_projection.rank,
                "half_rank": s.half_projection.rank,
            }
            for s in report.steps
        ],
        "flag_report": flag_report_to_obj(report.flag_report),
    }


def lattice_to_obj(lattice) -> dict:
    return {
        "n": lattice.source.n,
        "source": matrix_to_obj(lattice.source),
        "elements": [matrix_to_obj(e.matrix) for e in lattice.elements],
        "join": [list(row) for row in lattice.join_table],
        "meet": [list(row) for row in lattice.meet_table],
        "traces": list(lattice.trace_list),
    }


def lattice_map_to_obj(mapping) -> dict:
    obj = {
        "intertwiner": matrix_to_obj(mapping.intertwiner),
        "forward": list(mapping.forward) if mapping.forward is not None else None,
        "trace_preserving": mapping.trace_preserving,
    }
    if mapping.inverse is not None:
        obj["inverse"] = list(mapping.inverse)
    if mapping.st_witness is not None:
        obj["st_witness"] = projection_to_obj(mapping.st_witness)
    if mapping.ts_witness is not None:
        obj["ts_witness"] = projection_to_obj(mapping.ts_witness)
    return obj
