"""Seeded matrix generators, experiment drivers, and report emission.

All randomness flows through the Philox counter-based generator with
documented key layout: a matrix for (family, n, seed) uses the 128-bit key
(seed, FAMILY_CODE[family] * 2^32 + n), so every sample is regenerable
bit-exactly from its record.  Reports come in two shapes: CSV with the
fixed schema family,n,seed,k,value,time (one row per run) and JSON with
full result detail for re-validation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np

from . import jsonio
from .compress import CompressionReport, dyadic_compress, schur_supplier
from .errors import TracialError
from .grassmann import (
    DistanceResult,
    OptimizerConfig,
    jordan_upper_bound,
    minimize,
)
from .kernel import CMatrix, operator_norm

FAMILIES = ("ginibre", "haar_unitary", "jordan", "upper_random", "file")

_FAMILY_CODES = {"ginibre": 1, "haar_unitary": 2, "jordan": 3, "upper_random": 4}

#: Quantities no finite experiment here can settle; probe reports archive
#: evidence only and never claim them.
OUT_OF_SCOPE = (
    "covering-number growth constants for the operator-norm unit ball of "
    "the n-by-n matrices: analytic bounds with no desk-scale computation",
    "existence of a dimension-independent lower bound on the half-trace "
    "commutator distance: a counting argument with no constructive witness; "
    "the probe records upper estimates only",
    "non-isomorphism statements between matrix ultraproducts and ultrapowers "
    "of hyperfinite algebras: no finite certificate exists",
)


def _family_rng(family: str, n: int, seed: int) -> np.random.Generator:
    key = np.array(
        [seed, _FAMILY_CODES[family] * (2 ** 32) + n], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


def _complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def generate(
    family: str, n: int, seed: int, path: Optional[str] = None
) -> CMatrix:
    """Deterministic sample from the named family.

    ginibre: i.i.d. standard complex Gaussian entries, rescaled to operator
    norm 1.  haar_unitary: phase-fixed QR orthonormalization of a Ginibre
    sample.  jordan: the nilpotent single Jordan block (ones on the
    superdiagonal).  upper_random: the weakly upper-triangular part of a
    Ginibre sample, rescaled to operator norm 1.  file: loaded from `path`.
    """
    if family == "file":
        if path is None:
            raise ValueError("family 'file' requires a path")
        return jsonio.load_matrix(path)
    if family not in _FAMILY_CODES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if n < 2:
        raise ValueError("n must be >= 2")
    if family == "jordan":
        data = np.zeros((n, n), dtype=np.complex128)
        data[np.arange(n - 1), np.arange(1, n)] = 1.0
        return CMatrix(data)
    rng = _family_rng(family, n, seed)
    sample = _complex_gaussian(rng, n)
    if family == "haar_unitary":
        q, r = np.linalg.qr(sample)
        d = np.diagonal(r)
        phase = np.where(np.abs(d) == 0.0, 1.0, d / np.where(np.abs(d) == 0.0, 1.0, np.abs(d)))
        return CMatrix(q * phase)
    if family == "upper_random":
        sample = np.triu(sample)
    norm = operator_norm(CMatrix(sample))
    return CMatrix(sample / norm)


@dataclass(frozen=True)
class ExperimentSpec:
    """A reproducible experiment: family, dimensions, seed, optimizer knobs."""

    family: str
    dims: tuple
    seed: int = 0
    objective: str = "commutator"
    k_rule: Union[str, int] = "half"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if not self.dims:
            raise ValueError("dims must be non-empty")
        if any(d < 2 or d > 256 for d in self.dims):
            raise ValueError("each dim must lie in [2, 256]")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if isinstance(self.k_rule, str) and self.k_rule != "half":
            raise ValueError("k_rule must be 'half' or a fixed integer")

    def k_for(self, n: int) -> int:
        if self.k_rule == "half":
            return n // 2
        return int(self.k_rule)


@dataclass(frozen=True)
class RunRecord:
    """One experiment run; the matrix is regenerable from (family, dim, seed)."""

    dim: int
    matrix_hash: str
    result: object
    wall_time: float
    k: Optional[int] = None
    analytic_bound: Optional[float] = None
    error: Optional[str] = None


def gamma_probe(spec: ExperimentSpec) -> List[RunRecord]:
    """Commutator/invariance distance estimates across dimensions.

    Runs the optimizer at k per the spec's rule for each dim and records
    the best value found.  For the jordan family the analytic corner bound
    1/sqrt(n) rides along.  No pass/fail judgment is attached for random
    families: the probe archives exploratory upper estimates only.
    """
    records = []
    for n in spec.dims:
        matrix = generate(spec.family, n, spec.seed, path=spec.path)
        k = spec.k_for(n)
        cfg = replace(spec.optimizer, seed=spec.seed)
        start = time.perf_counter()
        result = minimize(matrix, k, spec.objective, cfg)
        elapsed = time.perf_counter() - start
        bound = jordan_upper_bound(n) if spec.family == "jordan" else None
        records.append(
            RunRecord(
                dim=n,
                matrix_hash=matrix.digest(),
                result=result,
                wall_time=elapsed,
                k=k,
                analytic_bound=bound,
            )
        )
    return records


def compress_bench(
    spec: ExperimentSpec, eps: float, levels: int, supplier=schur_supplier
) -> List[RunRecord]:
    """Compression pipeline across dimensions; failures are recorded per dim
    and the sweep continues."""
    records = []
    for n in spec.dims:
        matrix = generate(spec.family, n, spec.seed, path=spec.path)
        start = time.perf_counter()
        try:
            result = dyadic_compress(matrix, eps, levels, supplier)
            error = None
        except TracialError as exc:
            result = None
            error = str(exc)
        elapsed = time.perf_counter() - start
        records.append(
            RunRecord(
                dim=n,
                matrix_hash=matrix.digest(),
                result=result,
                wall_time=elapsed,
                k=levels,
                error=error,
            )
        )
    return records


def _record_value(record: RunRecord) -> float:
    if isinstance(record.result, DistanceResult):
        return record.result.best_value
    if isinstance(record.result, CompressionReport):
        return record.result.total_perturbation
    return float("nan")


def records_to_csv(records: Sequence[RunRecord], spec: ExperimentSpec) -> str:
    """Fixed schema family,n,seed,k,value,time; value carries 17 digits.

    The time column is wall time and is exempt from byte-identity claims.
    """
    lines = ["family,n,seed,k,value,time"]
    for record in records:
        if record.error is not None:
            value = "error"
        else:
            value = format(_record_value(record), ".17g")
        lines.append(
            f"{spec.family},{record.dim},{spec.seed},{record.k},"
            f"{value},{record.wall_time:.6f}"
        )
    return "\n".join(lines) + "\n"


def records_to_obj(records: Sequence[RunRecord], spec: ExperimentSpec) -> dict:
    """Full-detail JSON object for re-validation."""
    runs = []
    for record in records:
        entry = {
            "dim": record.dim,
            "matrix_hash": record.matrix_hash,
            "k": record.k,
            "wall_time": float(record.wall_time),
        }
        if record.analytic_bound is not None:
            entry["analytic_bound"] = float(record.analytic_bound)
        if record.error is not None:
            entry["error"] = record.error
        elif isinstance(record.result, DistanceResult):
            entry["result"] = jsonio.distance_result_to_obj(record.result)
        elif isinstance(record.result, CompressionReport):
            entry["result"] = jsonio.compression_report_to_obj(record.result)
        runs.append(entry)
    return {
        "spec": {
            "family": spec.family,
            "dims": list(spec.dims),
            "seed": spec.seed,
            "objective": spec.objective,
            "k_rule": spec.k_rule,
        },
        "claims": "exploratory upper estimates; no theorem-level assertion",
        "out_of_scope": list(OUT_OF_SCOPE),
        "runs": runs,
    }
