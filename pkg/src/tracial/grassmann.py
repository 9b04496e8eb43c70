"""Commutator and invariance defect minimization over fixed-rank projections.

Parametrizes rank-k orthogonal projections as P = v v* with v an
orthonormal n-by-k frame and runs multi-restart Riemannian descent
(projected gradient, QR retraction, non-monotone Armijo backtracking with
Barzilai-Borwein trial steps).  The invariance objective additionally gets
a damped Newton polish through the block Sylvester correction, since pure
first-order steps stall well above the contract tolerance near its flat
zero set.

Reported minima are upper estimates: the search is nonconvex, and only the
brute-force grid, normal-matrix spectral projections, and closed forms
certify true minima.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_sylvester

from .errors import GradientCheckError
from .kernel import CMatrix, OrthoProjection, projection_from_basis, trace_norm2

OBJECTIVES = ("commutator", "invariance")

# Philox stream offsets: restarts and gradient-check probes draw from
# disjoint, documented streams of the run seed.
_RESTART_STREAM = 1000
_CHECK_STREAM = 2000

_FD_STEP = 6.0e-6  # ~cbrt(machine eps); balances truncation and roundoff


@dataclass(frozen=True)
class IsometryPoint:
    """Orthonormal n-by-k frame; the projection it parametrizes is v v*."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.complex128)
        if v.ndim != 2 or v.shape[1] > v.shape[0]:
            raise ValueError(f"frame must be tall, got shape {v.shape}")
        gram_defect = float(
            np.linalg.norm(v.conj().T @ v - np.eye(v.shape[1]))
        )
        if gram_defect > 1e-10:
            raise ValueError(f"frame not orthonormal: defect {gram_defect:.3e}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def k(self) -> int:
        return self.v.shape[1]


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    max_iters: int = 500
    armijo_factor: float = 0.5
    armijo_slope: float = 1e-4
    grad_tol: float = 1e-9
    seed: int = 0
    include_canonical_start: bool = True
    target_value: Optional[float] = None
    nonmonotone_memory: int = 10
    max_backtracks: int = 60
    polish_rounds: int = 12
    polish_legs: int = 3
    gradient_check_points: int = 10

    def validate(self) -> None:
        if self.restarts < 1:
            raise ValueError("invalid config: restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("invalid config: zero iterations budget")
        if not 0 < self.armijo_factor < 1:
            raise ValueError("invalid config: armijo_factor must be in (0, 1)")
        if self.armijo_slope <= 0:
            raise ValueError("invalid config: armijo_slope must be positive")
        if self.seed < 0 or self.seed >= 2 ** 63:
            raise ValueError("invalid config: seed must fit in 63 bits")


@dataclass(frozen=True)
class DistanceResult:
    """Best defect found, with full optimizer provenance."""

    objective: str
    k: int
    best_value: float
    best_projection: OrthoProjection
    restarts: int
    converged_restarts: int
    seed: int
    restart_trace: tuple = ()
    config: OptimizerConfig = field(default_factory=OptimizerConfig)


def objective_value(T: CMatrix, P: OrthoProjection, objective: str) -> float:
    """||PT - TP||_2 for the commutator kind, ||TP - PTP||_2 for invariance."""
    _check_objective(objective)
    p = P.matrix.data
    t = T.data
    if objective == "commutator":
        resid = p @ t - t @ p
    else:
        tp = t @ p
        resid = tp - p @ tp
    return float(np.linalg.norm(resid) / np.sqrt(T.n))


def _check_objective(objective: str) -> None:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def _retract(x: np.ndarray) -> np.ndarray:
    """QR retraction with positive-phase diagonal, deterministic."""
    q, r = np.linalg.qr(x)
    d = np.diagonal(r)
    phase = np.where(np.abs(d) == 0.0, 1.0, d / np.where(np.abs(d) == 0.0, 1.0, np.abs(d)))
    return q * phase.conj()


def _make_value_grad(T: CMatrix, objective: str):
    """Returns fg(v) -> (f, riemannian_grad) for f the squared defect.

    The squared objective keeps the gradient smooth through zero minima;
    best values are reported as sqrt(f).
    """
    t = T.data
    n = T.n
    if objective == "commutator":
        gram2 = t @ t.conj().T + t.conj().T @ t

        def fg(v: np.ndarray):
            w = t @ v
            z = t.conj().T @ v
            vw = v.conj().T @ w
            vz = v.conj().T @ z
            av = gram2 @ v
            f = (np.trace(v.conj().T @ av).real - 2.0 * np.trace(vz @ vw).real) / n
            euclid = (2.0 / n) * (av - 2.0 * (w @ vz + z @ vw))
            grad = euclid - v @ (v.conj().T @ euclid)
            return f, grad

    else:
        gram = t.conj().T @ t

        def fg(v: np.ndarray):
            w = t @ v
            z = t.conj().T @ v
            vw = v.conj().T @ w
            vz = v.conj().T @ z
            av = gram @ v
            f = (np.trace(v.conj().T @ av).real - np.trace(vz @ vw).real) / n
            euclid = (2.0 / n) * (av - w @ vz - z @ vw)
            grad = euclid - v @ (v.conj().T @ euclid)
            return f, grad

    return fg


def _restart_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, stream], dtype=np.uint64))
    )


def _random_frame(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    g = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / np.sqrt(2)
    return _retract(g)


def _descend(fg, v, config: OptimizerConfig, ftarget: Optional[float]):
    """Non-monotone BB descent; returns (v, f, iterations, converged)."""
    f, grad = fg(v)
    history = [f]
    step = 1.0
    for iteration in range(config.max_iters):
        grad_sq = float(np.vdot(grad, grad).real)
        if np.sqrt(grad_sq) <= config.grad_tol:
            return v, f, iteration, True
        if ftarget is not None and f <= ftarget:
            return v, f, iteration, True
        reference = max(history[-config.nonmonotone_memory:])
        t = step
        accepted = False
        for _ in range(config.max_backtracks):
            v_new = _retract(v - t * grad)
            f_new, grad_new = fg(v_new)
            if f_new <= reference - config.armijo_slope * t * grad_sq:
                accepted = True
                break
            t *= config.armijo_factor
        if not accepted:
            return v, f, iteration, False
        s = v_new - v
        y = grad_new - grad
        sy = abs(float(np.vdot(s, y).real))
        ss = float(np.vdot(s, s).real)
        step = min(max(ss / sy, 1e-10), 1e10) if sy > 0.0 else 1.0
        v, f, grad = v_new, f_new, grad_new
        history.append(f)
    return v, f, config.max_iters, False


def _polish_invariant(t: np.ndarray, v: np.ndarray, fg, rounds: int):
    """Damped Newton refinement toward the nearest invariant subspace.

    One round solves the block Sylvester correction A22 X - X A11 = -A21 in
    the frame-adapted basis and retracts v + u X, halving the step until the
    squared defect decreases.  Quadratically convergent near the zero set.
    """
    f_best, _ = fg(v)
    v_best = v
    for _ in range(rounds):
        q, _ = np.linalg.qr(v_best, mode="complete")
        k = v_best.shape[1]
        frame, comp = q[:, :k], q[:, k:]
        if comp.shape[1] == 0:
            break
        t_frame = t @ frame
        a11 = frame.conj().T @ t_frame
        a21 = comp.conj().T @ t_frame
        a22 = comp.conj().T @ t @ comp
        try:
            x = solve_sylvester(a22, -a11, -a21)
        except Exception:
            break
        if not np.all(np.isfinite(x)):
            break
        direction = comp @ x
        damping = 1.0
        improved = False
        for _ in range(20):
            v_new = _retract(frame + damping * direction)
            f_new, _ = fg(v_new)
            if f_new < f_best:
                v_best, f_best = v_new, f_new
                improved = True
                break
            damping *= 0.5
        if not improved or f_best <= 1e-28:
            break
    return v_best, f_best


def gradient_check(
    T: CMatrix,
    k: int,
    objective: str,
    seed: int = 0,
    points: int = 10,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Probes random frames and random tangent directions; raises
    GradientCheckError as soon as one probe exceeds 1e-6 relative error.
    """
    _check_objective(objective)
    n = T.n
    fg = _make_value_grad(T, objective)
    worst = 0.0
    for point in range(points):
        rng = _restart_rng(seed, _CHECK_STREAM + point)
        v = _random_frame(n, k, rng)
        _, grad = fg(v)
        rel = None
        for _ in range(5):
            direction = (
                rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
            )
            direction -= v @ (v.conj().T @ direction)
            norm = float(np.linalg.norm(direction))
            if norm == 0.0:
                continue
            direction /= norm
            analytic = float(np.vdot(grad, direction).real)
            f_plus, _ = fg(_retract(v + _FD_STEP * direction))
            f_minus, _ = fg(_retract(v - _FD_STEP * direction))
            numeric = (f_plus - f_minus) / (2.0 * _FD_STEP)
            if abs(analytic) < 1e-7 and abs(numeric) < 1e-7:
                # nearly critical direction; compare absolutely, retry
                if abs(numeric - analytic) <= 1e-10:
                    rel = 0.0
                    break
                continue
            rel = abs(numeric - analytic) / max(abs(analytic), abs(numeric))
            break
        if rel is None:
            rel = 0.0
        worst = max(worst, rel)
        if rel > 1e-6:
            raise GradientCheckError(point, rel)
    return worst


def minimize(
    T: CMatrix,
    k: int,
    objective: str = "commutator",
    config: Optional[OptimizerConfig] = None,
) -> DistanceResult:
    """Multi-restart Riemannian descent over rank-k projection frames.

    Deterministic given config.seed: restart r draws its frame from the
    Philox stream (seed, 1000 + r); restart 0 starts from the canonical
    coordinate frame when include_canonical_start is set.  The analytic
    gradient is validated against central finite differences before any
    descent; a failure aborts the run.
    """
    _check_objective(objective)
    cfg = config if config is not None else OptimizerConfig()
    cfg.validate()
    n = T.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    if cfg.gradient_check_points > 0:
        gradient_check(T, k, objective, seed=cfg.seed, points=cfg.gradient_check_points)
    fg = _make_value_grad(T, objective)
    ftarget = cfg.target_value ** 2 if cfg.target_value is not None else None
    best_v = None
    best_f = np.inf
    converged_count = 0
    trace: List[Tuple[float, int]] = []
    restarts_run = 0
    for restart in range(cfg.restarts):
        restarts_run += 1
        if restart == 0 and cfg.include_canonical_start:
            start = IsometryPoint(np.eye(n, dtype=np.complex128)[:, :k])
        else:
            start = IsometryPoint(
                _random_frame(n, k, _restart_rng(cfg.seed, _RESTART_STREAM + restart))
            )
        v, f, iters, converged = _descend(fg, np.asarray(start.v), cfg, ftarget)
        if objective == "invariance" and cfg.polish_rounds > 0:
            leg_cfg = replace(cfg, max_iters=max(1, cfg.max_iters // 3))
            for _ in range(cfg.polish_legs):
                v, f = _polish_invariant(T.data, v, fg, cfg.polish_rounds)
                if ftarget is not None and f <= ftarget:
                    converged = True
                    break
                if f <= 1e-24:
                    converged = True
                    break
                v, f, extra, converged = _descend(fg, v, leg_cfg, ftarget)
                iters += extra
        trace.append((float(np.sqrt(max(f, 0.0))), iters))
        if converged:
            converged_count += 1
        if f < best_f:
            best_f = f
            best_v = v
        if cfg.target_value is not None and np.sqrt(max(best_f, 0.0)) <= cfg.target_value:
            break
    projection = projection_from_basis(best_v)
    value = objective_value(T, projection, objective)
    return DistanceResult(
        objective=objective,
        k=k,
        best_value=value,
        best_projection=projection,
        restarts=restarts_run,
        converged_restarts=converged_count,
        seed=cfg.seed,
        restart_trace=tuple(trace),
        config=cfg,
    )


def jordan_upper_bound(n: int) -> float:
    """1/sqrt(n): the defect of the leading half-corner projection against
    the n-by-n nilpotent Jordan block.

    The commutator with the rank-floor(n/2) coordinate projection has a
    single unit entry, so its normalized trace norm is n**-0.5.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    return 1.0 / np.sqrt(n)


_GRID_POINT_CAP = 200_000_000


def brute_force_distance(
    T: CMatrix, k: int, objective: str, grid_density: int
) -> float:
    """Exhaustive grid minimum over the projection manifold, n <= 3 only.

    Angular parametrization with grid_density points per angle; the result
    is an oracle with resolution error O(1/grid_density).  Rank n-1 reduces
    to rank 1: the commutator defect is invariant under P -> I - P, and the
    invariance defect of I - Q for T equals that of Q for T*.
    """
    _check_objective(objective)
    n = T.n
    if n > 3:
        raise ValueError("brute force refused for n > 3 (combinatorial blowup)")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    if grid_density < 2:
        raise ValueError("grid_density must be >= 2")
    if k == n - 1 and n == 3:
        if objective == "commutator":
            return brute_force_distance(T, 1, objective, grid_density)
        return brute_force_distance(T.adjoint(), 1, objective, grid_density)
    if n == 2:
        return _grid_min_rank1(T.data, objective, grid_density, dim=2)
    return _grid_min_rank1(T.data, objective, grid_density, dim=3)


def _grid_min_rank1(t: np.ndarray, objective: str, density: int, dim: int) -> float:
    half_pi = np.pi / 2.0
    thetas = np.linspace(0.0, half_pi, density)
    phis = np.linspace(0.0, 2.0 * np.pi, density, endpoint=False)
    if dim == 2:
        total = density ** 2
    else:
        total = density ** 4
    if total > _GRID_POINT_CAP:
        raise ValueError(f"grid of {total} points exceeds cap {_GRID_POINT_CAP}")
    best = np.inf
    if dim == 2:
        for theta_chunk in np.array_split(thetas, max(1, density // 64)):
            c = np.cos(theta_chunk)[:, None]
            s = np.sin(theta_chunk)[:, None]
            v = np.empty((len(theta_chunk), len(phis), 2), dtype=np.complex128)
            v[:, :, 0] = c
            v[:, :, 1] = s * np.exp(1j * phis)[None, :]
            best = min(best, _eval_rank1(t, v.reshape(-1, 2), objective))
        return float(best)
    for t1 in thetas:
        c1, s1 = np.cos(t1), np.sin(t1)
        for t2 in thetas:
            c2, s2 = np.cos(t2), np.sin(t2)
            v = np.empty((len(phis), len(phis), 3), dtype=np.complex128)
            v[:, :, 0] = c1
            v[:, :, 1] = s1 * c2 * np.exp(1j * phis)[:, None]
            v[:, :, 2] = s1 * s2 * np.exp(1j * phis)[None, :]
            best = min(best, _eval_rank1(t, v.reshape(-1, 3), objective))
    return float(best)


def _eval_rank1(t: np.ndarray, vectors: np.ndarray, objective: str) -> float:
    """Minimum defect over a batch of unit vectors spanning rank-1 ranges."""
    n = t.shape[0]
    proj = vectors[:, :, None] * vectors.conj()[:, None, :]
    if objective == "commutator":
        resid = proj @ t - t @ proj
    else:
        tp = t @ proj
        resid = tp - proj @ tp
    values = np.sqrt(np.sum(np.abs(resid) ** 2, axis=(1, 2)) / n)
    return float(np.min(values))
