"""Trace-norm compression onto operators carrying a full dyadic invariant flag.

Given T with operator norm at most 1 and a budget eps, the pipeline
produces S with operator norm at most 1, ||S - T||_2 < eps, and an exact
dyadic chain of invariant projections.  Each stage halves every diagonal
block: a supplier proposes a half-trace projection for the block, the
residual corner is spectrally truncated, the truncated columns are dropped
throughout the matrix, the corner is zeroed, and one global rescale
restores the norm bound.

Stage parameters: with stage budget b and m diagonal blocks the truncation
threshold is eps1 = b/4 and the per-block defect budget is
delta = min(b^2/(16 m), 1).  The measured perturbation is then at most
eps1 + m*delta/eps1 + sqrt(m)*delta < b with slack at least b/4 for
budgets below 1 (the corner term sqrt(tau(P1 - P1')) is bounded by
delta/eps1 per block, so delta must be small against eps1, not the other
way around).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import BudgetError, PipelineError, StageError
from .flags import (
    FLAG_RESIDUAL_TOL,
    Flag,
    FlagReport,
    dyadic_targets,
    schur_flag,
    validate_flag,
)
from .kernel import (
    CMatrix,
    OrthoProjection,
    invariance_defect,
    operator_norm,
    projection_from_basis,
    schur,
    svd,
    trace_norm2,
)

#: Operator-norm slack allowed on pipeline outputs.
NORM_SLACK = 1e-12

#: Invariance residual allowed on a step's half projection.
STEP_RESIDUAL_TOL = 1e-10

Supplier = Callable[[CMatrix, int], OrthoProjection]


def schur_supplier(T: CMatrix, k: int) -> OrthoProjection:
    """Exact supplier: span of the first k Schur vectors (defect ~ rounding)."""
    dec = schur(T)
    return projection_from_basis(dec.q.data[:, :k])


def optimizer_supplier(config=None) -> Supplier:
    """Approximate supplier backed by the Grassmannian invariance optimizer."""
    from .grassmann import OptimizerConfig, minimize

    cfg = config if config is not None else OptimizerConfig(
        restarts=4, max_iters=300, target_value=1e-10, include_canonical_start=False
    )

    def supply(T: CMatrix, k: int) -> OrthoProjection:
        return minimize(T, k, "invariance", cfg).best_projection

    return supply


def _stage_parameters(budget: float, blocks: int):
    eps1 = budget / 4.0
    delta = min(budget * budget / (16.0 * blocks), 1.0)
    return eps1, delta


def _stage_bound(eps1: float, delta: float, blocks: int) -> float:
    return eps1 + blocks * delta / eps1 + math.sqrt(blocks) * delta


@dataclass(frozen=True)
class ParameterSchedule:
    """Per-stage budgets and the (delta, eps1) pair chosen for each stage."""

    stage_budgets: tuple
    delta: tuple
    eps1: tuple

    def validate(self, eps: float) -> None:
        if sum(self.stage_budgets) >= eps:
            raise PipelineError("stage budgets must sum below eps")
        for k, (b, d, e1) in enumerate(
            zip(self.stage_budgets, self.delta, self.eps1)
        ):
            blocks = 2 ** k
            if not _stage_bound(e1, d, blocks) < b:
                raise PipelineError(
                    f"stage {k}: parameter pair (delta={d:.3e}, eps1={e1:.3e}) "
                    f"does not guarantee the budget {b:.3e}"
                )


@dataclass(frozen=True)
class CompressionStep:
    """One stage of the pipeline, in original coordinates."""

    input: CMatrix
    output: CMatrix
    corner_projection: OrthoProjection
    half_projection: OrthoProjection
    perturbation: float
    rescale_factor: float

    def validate(self) -> None:
        if operator_norm(self.output) > 1.0 + NORM_SLACK:
            raise PipelineError(
                f"step output norm {operator_norm(self.output):.15g} exceeds 1"
            )
        measured = trace_norm2(self.output - self.input)
        if abs(measured - self.perturbation) > 1e-12:
            raise PipelineError("recorded perturbation disagrees with matrices")
        resid = invariance_defect(self.output, self.half_projection)
        if resid > STEP_RESIDUAL_TOL:
            raise PipelineError(
                f"half projection residual {resid:.3e} exceeds {STEP_RESIDUAL_TOL}"
            )


@dataclass(frozen=True)
class CompressionReport:
    """Full pipeline certificate: result, flag, steps, schedule."""

    source: CMatrix
    result: CMatrix
    flag_report: FlagReport
    steps: tuple
    total_perturbation: float
    schedule: ParameterSchedule
    eps: float
    levels: int

    def validate(self) -> None:
        if self.total_perturbation >= self.eps:
            raise PipelineError(
                f"total perturbation {self.total_perturbation:.6g} "
                f"not below eps {self.eps:.6g}"
            )
        if self.flag_report.max_residual > FLAG_RESIDUAL_TOL:
            raise PipelineError(
                f"flag residual {self.flag_report.max_residual:.3e} "
                f"exceeds {FLAG_RESIDUAL_TOL}"
            )
        if operator_norm(self.result) > 1.0 + NORM_SLACK:
            raise PipelineError("result operator norm exceeds 1")
        for step in self.steps:
            step.validate()
        self.schedule.validate(self.eps)


def spectral_truncate(T: CMatrix, eps: float) -> OrthoProjection:
    """Spectral projection of |T| onto singular values at most eps.

    Guarantees ||T P|| <= eps, contains the kernel projection, and drops a
    trace share strictly below ||T||_2^2 / eps^2 (the dropped directions
    each carry singular value above eps).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    dec = svd(T)
    s = np.array(dec.singular_values)
    keep = s <= eps
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        from .kernel import zero_projection

        return zero_projection(T.n)
    return projection_from_basis(dec.right.data[:, T.n - rank :])


def _refinement_midpoint(n: int, stage: int, block: int) -> int:
    """Global rank at which stage `stage` splits its block-th block.

    Consistent with the final flag ranks floor(j*n / 2^levels); for some
    (n, stage) this differs from halving the local block size.
    """
    return ((2 * block + 1) * n) >> (stage + 1)


def _stage_ranks(n: int, stage: int) -> List[int]:
    return [(j * n) >> stage for j in range(2 ** stage + 1)]


def _truncation_keep(corner: np.ndarray, eps1: float) -> np.ndarray:
    """Projection (within the corner's domain) onto directions where the
    corner acts with singular value at most eps1."""
    k = corner.shape[1]
    if corner.size == 0 or not np.any(corner):
        return np.eye(k, dtype=np.complex128)
    _, s, vh = np.linalg.svd(corner)
    mask = np.ones(k, dtype=bool)
    mask[: len(s)] = s <= eps1
    basis = vh.conj().T[:, mask]
    q = basis @ basis.conj().T
    return (q + q.conj().T) / 2.0


def _run_stage(
    matrix: np.ndarray,
    basis: np.ndarray,
    ranks: Sequence[int],
    stage: int,
    budget: float,
    supplier: Supplier,
):
    """Halve every diagonal block of `matrix` (given in `basis` coordinates).

    Returns (new_matrix, new_basis, new_ranks, corner_keep, rescale, mids).
    """
    n = matrix.shape[0]
    blocks = len(ranks) - 1
    eps1, delta = _stage_parameters(budget, blocks)
    refine = np.eye(n, dtype=np.complex128)
    mids = []
    for j in range(blocks):
        lo, hi = ranks[j], ranks[j + 1]
        mid = _refinement_midpoint(n, stage, j)
        mids.append(mid)
        split = mid - lo
        block = matrix[lo:hi, lo:hi]
        proposal = supplier(CMatrix(block), split)
        if proposal.rank != split:
            raise StageError(
                stage, j, f"supplier returned rank {proposal.rank}, wanted {split}"
            )
        u, _, _ = np.linalg.svd(proposal.matrix.data)
        refine[lo:hi, lo:hi] = u
    refined = refine.conj().T @ matrix @ refine
    new_basis = basis @ refine
    corner_keep = np.eye(n, dtype=np.complex128)
    output = refined.copy()
    for j in range(blocks):
        lo, hi = ranks[j], ranks[j + 1]
        mid = mids[j]
        corner = refined[mid:hi, lo:mid]
        defect = float(np.linalg.norm(corner)) / math.sqrt(n)
        if defect >= delta:
            raise BudgetError(defect, delta, context=f"stage {stage}, block {j}")
        keep = _truncation_keep(corner, eps1)
        corner_keep[lo:mid, lo:mid] = keep
        output[:, lo:mid] = output[:, lo:mid] @ keep
        output[mid:hi, lo:mid] = 0.0
    norm = operator_norm(CMatrix(output))
    rescale = 1.0 / max(1.0, norm)
    output = output * rescale
    new_ranks = sorted(set(ranks) | set(mids))
    return output, new_basis, new_ranks, corner_keep, rescale, mids


def half_step(
    T: CMatrix, eps: float, supplier: Supplier = schur_supplier
) -> CompressionStep:
    """Single halving step: one invariant half-trace projection for T.

    Follows the block recipe with budget eps on the whole matrix; fails
    with BudgetError when the supplier's measured defect reaches delta.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if operator_norm(T) > 1.0 + NORM_SLACK:
        raise ValueError("operator norm of T must be at most 1")
    n = T.n
    if n < 2:
        raise ValueError("need n >= 2 to halve")
    output, basis, new_ranks, corner_keep, rescale, mids = _run_stage(
        T.data, np.eye(n, dtype=np.complex128), [0, n], 0, eps, supplier
    )
    out = CMatrix(basis @ output @ basis.conj().T)
    mid = mids[0]
    half = projection_from_basis(basis[:, :mid])
    corner_rank = int(round(np.trace(corner_keep).real))
    corner_mat = basis @ corner_keep @ basis.conj().T
    corner = OrthoProjection(
        CMatrix((corner_mat + corner_mat.conj().T) / 2.0), corner_rank
    )
    step = CompressionStep(
        input=T,
        output=out,
        corner_projection=corner,
        half_projection=half,
        perturbation=trace_norm2(out - T),
        rescale_factor=rescale,
    )
    if step.perturbation >= eps:
        raise StageError(0, 0, f"perturbation {step.perturbation:.3e} reached eps")
    step.validate()
    return step


def dyadic_compress(
    T: CMatrix,
    eps: float,
    levels: int,
    supplier: Supplier = schur_supplier,
) -> CompressionReport:
    """Full pipeline: `levels` halving stages with budgets eps/2^(k+1).

    The output matrix carries an exact dyadic flag at ranks
    floor(j*n / 2^levels); the total perturbation stays below eps.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    n = T.n
    if 2 ** levels > n:
        raise ValueError(f"2^levels = {2 ** levels} exceeds n = {n}")
    if operator_norm(T) > 1.0 + NORM_SLACK:
        raise ValueError("operator norm of T must be at most 1")
    matrix = T.data.copy()
    basis = np.eye(n, dtype=np.complex128)
    ranks: List[int] = [0, n]
    current = T
    steps = []
    budgets = []
    deltas = []
    eps1s = []
    for stage in range(levels):
        budget = eps / 2 ** (stage + 1)
        blocks = len(ranks) - 1
        eps1, delta = _stage_parameters(budget, blocks)
        budgets.append(budget)
        deltas.append(delta)
        eps1s.append(eps1)
        matrix, basis, ranks, corner_keep, rescale, mids = _run_stage(
            matrix, basis, ranks, stage, budget, supplier
        )
        out = CMatrix(basis @ matrix @ basis.conj().T)
        perturbation = trace_norm2(out - current)
        if perturbation >= budget:
            raise StageError(
                stage, -1, f"stage perturbation {perturbation:.3e} reached {budget:.3e}"
            )
        corner_rank = int(round(np.trace(corner_keep).real))
        corner_mat = basis @ corner_keep @ basis.conj().T
        corner = OrthoProjection(
            CMatrix((corner_mat + corner_mat.conj().T) / 2.0), corner_rank
        )
        half = projection_from_basis(basis[:, : mids[0]])
        step = CompressionStep(
            input=current,
            output=out,
            corner_projection=corner,
            half_projection=half,
            perturbation=perturbation,
            rescale_factor=rescale,
        )
        step.validate()
        steps.append(step)
        current = out
    targets = dyadic_targets(levels)
    projections = [
        projection_from_basis(basis[:, : (j * n) >> levels])
        for j in range(2 ** levels + 1)
    ]
    flag = Flag(projections=tuple(projections), trace_targets=tuple(targets))
    flag_report = validate_flag(current, flag)
    schedule = ParameterSchedule(
        stage_budgets=tuple(budgets), delta=tuple(deltas), eps1=tuple(eps1s)
    )
    report = CompressionReport(
        source=T,
        result=current,
        flag_report=flag_report,
        steps=tuple(steps),
        total_perturbation=trace_norm2(current - T),
        schedule=schedule,
        eps=eps,
        levels=levels,
    )
    report.validate()
    return report


def membership_check(S: CMatrix, levels: int) -> FlagReport:
    """Dyadic invariant-flag certificate for S at the given depth.

    S is certified when max_residual <= FLAG_RESIDUAL_TOL.  Every finite
    matrix triangularizes, so a fresh Schur flag certifies any S; the
    certificate is only discriminating against a FIXED externally supplied
    flag (use validate_flag for that).
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    return schur_flag(S, dyadic_targets(levels))
