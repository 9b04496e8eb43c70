"""Dense complex linear algebra over the normalized-trace matrix algebra.

All higher modules work inside M_n(C) equipped with the normalized trace
tr/n and the induced norm ||T||_2 = sqrt(tr(T*T)/n).  This module owns the
matrix container, the trace functionals, Schur and singular decompositions,
a power-iteration operator norm that is deliberately independent of the SVD
path (so the two can cross-check each other), and the range/kernel
projection constructors.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError

#: Rank cut for range/kernel splits: singular values at or below
#: rank_tol * sigma_1 count as null.  Separates genuine nullity from QR
#: noise for dimensions up to a few hundred.
DEFAULT_RANK_TOL = 1e-9

#: Frobenius tolerance for idempotency / hermiticity of projections.
PROJECTION_TOL = 1e-10

# Power-iteration constants: fixed Philox key for the deterministic start
# vector, squaring count for gap amplification, Rayleigh iteration cap.
_OPNORM_KEY = (0x9E3779B97F4A7C15, 0xD1B54A32D192ED03)
_OPNORM_SQUARINGS = 18
_OPNORM_STEPS = 60


class CMatrix:
    """Immutable square complex matrix with finite entries.

    The wrapped array is complex128 and write-protected; the dimension is
    fixed at construction.  Arithmetic returns new instances.
    """

    __slots__ = ("_data",)

    def __init__(self, entries):
        data = np.asarray(entries, dtype=np.complex128)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"square matrix required, got shape {data.shape}")
        if data.shape[0] == 0:
            raise ValueError("empty matrix not allowed")
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix entries must be finite")
        data = data.copy()
        data.setflags(write=False)
        self._data = data

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @classmethod
    def identity(cls, n: int) -> "CMatrix":
        return cls(np.eye(n, dtype=np.complex128))

    @classmethod
    def zeros(cls, n: int) -> "CMatrix":
        return cls(np.zeros((n, n), dtype=np.complex128))

    def adjoint(self) -> "CMatrix":
        return CMatrix(self._data.conj().T)

    def digest(self) -> str:
        """Hex digest of the raw entries; identifies a matrix bit-exactly."""
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        h.update(self._data.tobytes())
        return h.hexdigest()[:16]

    def __add__(self, other: "CMatrix") -> "CMatrix":
        return CMatrix(self._data + other._data)

    def __sub__(self, other: "CMatrix") -> "CMatrix":
        return CMatrix(self._data - other._data)

    def __neg__(self) -> "CMatrix":
        return CMatrix(-self._data)

    def __mul__(self, scalar) -> "CMatrix":
        return CMatrix(self._data * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: "CMatrix") -> "CMatrix":
        return CMatrix(self._data @ other._data)

    def __repr__(self) -> str:
        return f"CMatrix(n={self.n}, digest={self.digest()})"


def normalized_trace(T: CMatrix) -> complex:
    """tr(T)/n; linear, and 1 on the identity."""
    return complex(np.trace(T.data) / T.n)


def trace_norm2(T: CMatrix) -> float:
    """sqrt(tr(T*T)/n), i.e. the Frobenius norm divided by sqrt(n)."""
    return float(np.linalg.norm(T.data) / np.sqrt(T.n))


def _opnorm_array(data: np.ndarray) -> float:
    """Largest singular value via power iteration on T*T.

    Independent of :func:`svd` by construction.  Repeated squaring of the
    normalized Gram matrix amplifies the top spectral gap so the Rayleigh
    quotient converges even for nearly degenerate spectra; the start vector
    comes from a fixed Philox key, so the result is deterministic.
    """
    n = data.shape[0]
    gram = data.conj().T @ data
    scale = float(np.linalg.norm(gram))
    if scale == 0.0:
        return 0.0
    amp = gram / scale
    for _ in range(_OPNORM_SQUARINGS):
        amp = amp @ amp
        norm = float(np.linalg.norm(amp))
        if norm == 0.0 or not np.isfinite(norm):
            amp = gram / scale
            break
        amp = amp / norm
    rng = np.random.Generator(
        np.random.Philox(key=np.array(_OPNORM_KEY, dtype=np.uint64))
    )
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    last = np.inf
    for _ in range(_OPNORM_STEPS):
        w = amp @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            break
        v = w / norm
        rayleigh = float(np.vdot(v, gram @ v).real)
        if abs(rayleigh - last) <= 1e-15 * max(rayleigh, 1e-300):
            break
        last = rayleigh
    return float(np.linalg.norm(data @ v))


def operator_norm(T: CMatrix) -> float:
    """Largest singular value of T, computed without the SVD."""
    return _opnorm_array(T.data)


@dataclass(frozen=True)
class SchurDecomposition:
    """T = q u q* with q unitary and u upper triangular."""

    q: CMatrix
    u: CMatrix
    eigenvalues: tuple

    def reconstruct(self) -> CMatrix:
        return CMatrix(self.q.data @ self.u.data @ self.q.data.conj().T)


def schur(T: CMatrix) -> SchurDecomposition:
    """Complex Schur decomposition of T.

    Backed by LAPACK's zgees (Hessenberg reduction followed by shifted QR
    with deflation), which is deterministic for a fixed input.  No
    eigenvalue reordering is performed; downstream flag construction
    consumes the order as produced.
    """
    n = T.n
    try:
        u, q = scipy.linalg.schur(T.data, output="complex")
    except scipy.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"schur iteration failed to converge within the LAPACK sweep "
            f"budget for matrix {T.digest()}"
        ) from exc
    unitary_defect = float(np.linalg.norm(q @ q.conj().T - np.eye(n)))
    if unitary_defect > 1e-12 * n:
        raise ConvergenceError(
            f"schur unitary factor defect {unitary_defect:.3e} for matrix {T.digest()}"
        )
    lower = float(np.max(np.abs(np.tril(u, -1)))) if n > 1 else 0.0
    if lower > 1e-12 * max(float(np.linalg.norm(u)), 1e-300):
        raise ConvergenceError(
            f"schur triangularity defect {lower:.3e} for matrix {T.digest()}"
        )
    recon = float(np.linalg.norm(q @ u @ q.conj().T - T.data))
    if recon > 1e-10 * max(1.0, float(np.linalg.norm(T.data))):
        raise ConvergenceError(
            f"schur reconstruction defect {recon:.3e} for matrix {T.digest()}"
        )
    return SchurDecomposition(
        q=CMatrix(q), u=CMatrix(u), eigenvalues=tuple(np.diagonal(u).tolist())
    )


@dataclass(frozen=True)
class SingularDecomposition:
    """T = left diag(s) right* with left, right unitary and s non-increasing."""

    left: CMatrix
    singular_values: tuple
    right: CMatrix

    def reconstruct(self) -> CMatrix:
        s = np.array(self.singular_values)
        return CMatrix(self.left.data @ (s[:, None] * self.right.data.conj().T))


def svd(T: CMatrix) -> SingularDecomposition:
    """Singular value decomposition, deterministic (LAPACK-backed)."""
    try:
        u, s, vh = np.linalg.svd(T.data)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(
            f"svd failed to converge for matrix {T.digest()}"
        ) from exc
    recon = float(np.linalg.norm(u @ (s[:, None] * vh) - T.data))
    if recon > 1e-10 * max(1.0, float(np.linalg.norm(T.data))):
        raise ConvergenceError(
            f"svd reconstruction defect {recon:.3e} for matrix {T.digest()}"
        )
    return SingularDecomposition(
        left=CMatrix(u),
        singular_values=tuple(float(x) for x in s),
        right=CMatrix(vh.conj().T),
    )


def _hermitize(data: np.ndarray) -> np.ndarray:
    return (data + data.conj().T) / 2.0


class OrthoProjection:
    """Orthogonal projection with exact rational trace bookkeeping.

    trace_value is rank/n as a Fraction; the numeric trace of the matrix
    must agree with it to within PROJECTION_TOL.
    """

    __slots__ = ("matrix", "rank", "trace_value")

    def __init__(self, matrix, rank: int):
        mat = matrix if isinstance(matrix, CMatrix) else CMatrix(matrix)
        n = mat.n
        if not 0 <= rank <= n:
            raise ValueError(f"rank {rank} outside [0, {n}]")
        data = mat.data
        idem = float(np.linalg.norm(data @ data - data))
        if idem > PROJECTION_TOL:
            raise ValueError(f"projection not idempotent: defect {idem:.3e}")
        herm = float(np.linalg.norm(data - data.conj().T))
        if herm > PROJECTION_TOL:
            raise ValueError(f"projection not hermitian: defect {herm:.3e}")
        tr = np.trace(data)
        if abs(tr - rank) > PROJECTION_TOL * n:
            raise ValueError(
                f"projection trace {tr:.12g} inconsistent with rank {rank}"
            )
        self.matrix = mat
        self.rank = int(rank)
        self.trace_value = Fraction(rank, n)

    @property
    def n(self) -> int:
        return self.matrix.n

    def complement(self) -> "OrthoProjection":
        return OrthoProjection(
            CMatrix(np.eye(self.n) - self.matrix.data), self.n - self.rank
        )

    def __repr__(self) -> str:
        return f"OrthoProjection(n={self.n}, rank={self.rank})"


def projection_from_basis(basis: np.ndarray) -> OrthoProjection:
    """Projection onto the column span of an orthonormal frame."""
    basis = np.asarray(basis, dtype=np.complex128)
    if basis.ndim != 2:
        raise ValueError("basis must be a 2-d array")
    n, k = basis.shape
    if k == 0:
        return OrthoProjection(CMatrix.zeros(n), 0)
    frame_defect = float(np.linalg.norm(basis.conj().T @ basis - np.eye(k)))
    if frame_defect > PROJECTION_TOL:
        raise ValueError(f"basis not orthonormal: defect {frame_defect:.3e}")
    return OrthoProjection(CMatrix(_hermitize(basis @ basis.conj().T)), k)


def zero_projection(n: int) -> OrthoProjection:
    return OrthoProjection(CMatrix.zeros(n), 0)


def identity_projection(n: int) -> OrthoProjection:
    return OrthoProjection(CMatrix.identity(n), n)


def range_projection(T: CMatrix, rank_tol: float = DEFAULT_RANK_TOL) -> OrthoProjection:
    """Projection onto the span of left singular vectors with sigma > rank_tol * sigma_1."""
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    dec = svd(T)
    s = np.array(dec.singular_values)
    top = s[0] if len(s) else 0.0
    if top == 0.0:
        return zero_projection(T.n)
    keep = s > rank_tol * top
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        return zero_projection(T.n)
    return projection_from_basis(dec.left.data[:, :rank])


def kernel_projection(T: CMatrix, rank_tol: float = DEFAULT_RANK_TOL) -> OrthoProjection:
    """Projection onto the span of right singular vectors with sigma <= rank_tol * sigma_1.

    The ranks of range_projection and kernel_projection always sum to n:
    both use the same singular-value cut.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    dec = svd(T)
    s = np.array(dec.singular_values)
    top = s[0] if len(s) else 0.0
    if top == 0.0:
        return identity_projection(T.n)
    null = int(np.count_nonzero(s <= rank_tol * top))
    if null == 0:
        return zero_projection(T.n)
    return projection_from_basis(dec.right.data[:, T.n - null :])


def invariance_defect(T: CMatrix, P: OrthoProjection) -> float:
    """||TP - PTP||_2: how far range(P) is from being invariant under T."""
    tp = T.data @ P.matrix.data
    resid = tp - P.matrix.data @ tp
    return float(np.linalg.norm(resid) / np.sqrt(T.n))
