"""Nested invariant-projection chains with prescribed traces.

A flag is a chain 0 = P_0 <= ... <= P_m = I of orthogonal projections whose
traces hit prescribed targets after floor quantization: the projection for
target t has rank floor(t*n).  Chains built from Schur vectors are exactly
invariant up to rounding; validation always recomputes every defect from
scratch and never trusts caller-supplied residuals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

import numpy as np

from .errors import FlagValidationError
from .kernel import (
    CMatrix,
    OrthoProjection,
    PROJECTION_TOL,
    invariance_defect,
    projection_from_basis,
    schur,
)

#: Invariance residuals of Schur flags must stay below this.
FLAG_RESIDUAL_TOL = 1e-9

#: Frobenius tolerance for the nesting defect ||P_j P_{j+1} - P_j||_F.
NESTING_TOL = 1e-9


def quantized_rank(target: Fraction, n: int) -> int:
    """floor(target * n), exact in rational arithmetic."""
    return (target.numerator * n) // target.denominator


@dataclass(frozen=True)
class Flag:
    """Chain of projections together with the trace targets that produced it."""

    projections: tuple
    trace_targets: tuple

    def __post_init__(self):
        targets = tuple(Fraction(t) for t in self.trace_targets)
        object.__setattr__(self, "trace_targets", targets)
        object.__setattr__(self, "projections", tuple(self.projections))
        if len(self.projections) != len(targets):
            raise ValueError("one projection per trace target required")
        if not targets or targets[0] != 0 or targets[-1] != 1:
            raise ValueError("trace targets must start at 0 and end at 1")
        if any(t < 0 or t > 1 for t in targets):
            raise ValueError("trace targets must lie in [0, 1]")
        if any(a > b for a, b in zip(targets, targets[1:])):
            raise ValueError("trace targets must be sorted ascending")

    @property
    def n(self) -> int:
        return self.projections[0].n


@dataclass(frozen=True)
class FlagReport:
    """A flag plus its freshly recomputed invariance defects."""

    flag: Flag
    residuals: tuple
    max_residual: float


def dyadic_targets(levels: int) -> List[Fraction]:
    """The targets j / 2**levels for j = 0 .. 2**levels."""
    if levels < 0:
        raise ValueError("levels must be >= 0")
    den = 2 ** levels
    return [Fraction(j, den) for j in range(den + 1)]


def schur_flag(T: CMatrix, trace_targets: Sequence[Fraction]) -> FlagReport:
    """Invariant flag of T with quantized traces, from Schur vectors.

    P_j projects onto the span of the first floor(t_j * n) Schur vectors,
    so nesting is exact by construction and every invariance residual is
    rounding-level.
    """
    targets = [Fraction(t) for t in trace_targets]
    n = T.n
    dec = schur(T)
    q = dec.q.data
    projections = []
    for t in targets:
        rank = quantized_rank(t, n)
        projections.append(projection_from_basis(q[:, :rank]))
    flag = Flag(projections=tuple(projections), trace_targets=tuple(targets))
    report = validate_flag(T, flag)
    if report.max_residual > FLAG_RESIDUAL_TOL:
        raise FlagValidationError(
            int(np.argmax(report.residuals)), "schur residual", report.max_residual
        )
    return report


def validate_flag(T: CMatrix, flag: Flag) -> FlagReport:
    """Recompute all flag invariants and residuals from scratch.

    Structural violations (idempotency, hermiticity, nesting, endpoints,
    trace quantization) raise FlagValidationError with the offending index
    and defect.  Invariance residuals are reported, not asserted: a flag
    whose projections are not invariant for T is still a valid flag.
    """
    n = T.n
    projections = flag.projections
    for j, proj in enumerate(projections):
        if proj.n != n:
            raise FlagValidationError(j, "dimension", float(abs(proj.n - n)))
        data = proj.matrix.data
        idem = float(np.linalg.norm(data @ data - data))
        if idem > PROJECTION_TOL:
            raise FlagValidationError(j, "idempotency", idem)
        herm = float(np.linalg.norm(data - data.conj().T))
        if herm > PROJECTION_TOL:
            raise FlagValidationError(j, "hermiticity", herm)
        expected_rank = quantized_rank(flag.trace_targets[j], n)
        if proj.rank != expected_rank:
            raise FlagValidationError(
                j, "trace quantization", float(abs(proj.rank - expected_rank))
            )
        if proj.trace_value != Fraction(expected_rank, n):
            raise FlagValidationError(j, "trace bookkeeping", 1.0)
    first = float(np.linalg.norm(projections[0].matrix.data))
    if projections[0].rank != 0 or first > PROJECTION_TOL:
        raise FlagValidationError(0, "zero endpoint", first)
    last = float(np.linalg.norm(projections[-1].matrix.data - np.eye(n)))
    if projections[-1].rank != n or last > PROJECTION_TOL:
        raise FlagValidationError(len(projections) - 1, "identity endpoint", last)
    for j in range(len(projections) - 1):
        a = projections[j].matrix.data
        b = projections[j + 1].matrix.data
        nest = float(np.linalg.norm(a @ b - a))
        if nest > NESTING_TOL:
            raise FlagValidationError(j, "nesting", nest)
        if projections[j].rank > projections[j + 1].rank:
            raise FlagValidationError(j, "rank monotonicity", 1.0)
    residuals = tuple(invariance_defect(T, proj) for proj in projections)
    return FlagReport(
        flag=flag, residuals=residuals, max_residual=max(residuals)
    )
