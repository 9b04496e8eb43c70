"""Invariant-subspace lattices of distinct-eigenvalue matrices.

For a matrix with n distinct eigenvalues the invariant subspaces are
exactly the spans of eigenvector subsets, so the lattice has 2^n elements
indexed by subset bitmask.  Joins and meets are realized numerically
through rank computations (span sums and De Morgan complements) and
cross-checked against the bitmask arithmetic.  Trace bookkeeping is exact
in rationals throughout: the trace-preservation statements hold as rank
equalities, never as float comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .errors import LatticeError, SpectrumGapError
from .kernel import (
    CMatrix,
    DEFAULT_RANK_TOL,
    OrthoProjection,
    kernel_projection,
    range_projection,
)

#: Enumeration is exponential in n; refuse past this point.
MAX_LATTICE_DIM = 8

#: Relative eigenvalue-gap threshold for "distinct spectrum".
GAP_THRESHOLD = 1e-6

#: Frobenius tolerance for invariance defects of lattice elements.
ELEMENT_TOL = 1e-8

#: Frobenius tolerance when matching a computed projection to an element.
MATCH_TOL = 1e-6


@dataclass(frozen=True)
class InvariantLattice:
    """All invariant projections of a distinct-eigenvalue matrix.

    elements[mask] projects onto the span of the eigenvectors selected by
    the bits of mask; join_table/meet_table hold element indices.
    """

    source: CMatrix
    elements: tuple
    join_table: tuple
    meet_table: tuple
    trace_list: tuple
    eigenvalues: tuple

    @property
    def size(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class LatticeMap:
    """A verified map between lattices induced by an intertwiner.

    forward[i] is the index of the image of element i; None when the map
    degenerated to the nontriviality fallback (singular factors), in which
    case st_witness / ts_witness carry explicit nontrivial invariant
    projections for the two products.
    """

    intertwiner: CMatrix
    forward: Optional[tuple]
    trace_preserving: bool
    inverse: Optional[tuple] = None
    source_lattice: Optional[InvariantLattice] = None
    target_lattice: Optional[InvariantLattice] = None
    st_witness: Optional[OrthoProjection] = None
    ts_witness: Optional[OrthoProjection] = None


def _distinct_eigensystem(T: CMatrix):
    values, vectors = np.linalg.eig(T.data)
    n = T.n
    radius = float(np.max(np.abs(values))) if n else 0.0
    threshold = GAP_THRESHOLD * max(radius, 1e-300)
    gap = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            gap = min(gap, abs(values[i] - values[j]))
    if n > 1 and gap <= threshold:
        raise SpectrumGapError(float(gap), threshold)
    return values, vectors


def _subset_projection(vectors: np.ndarray, mask: int, n: int) -> OrthoProjection:
    cols = [i for i in range(n) if mask >> i & 1]
    if not cols:
        from .kernel import zero_projection

        return zero_projection(n)
    q, _ = np.linalg.qr(vectors[:, cols])
    p = q @ q.conj().T
    return OrthoProjection(CMatrix((p + p.conj().T) / 2.0), len(cols))


def _match_element(
    target: OrthoProjection, elements, expected: int
) -> int:
    """Index of the element equal to `target`; checks the expected slot first."""
    cand = elements[expected]
    dist = float(np.linalg.norm(target.matrix.data - cand.matrix.data))
    if target.rank == cand.rank and dist <= MATCH_TOL:
        return expected
    best, best_dist = -1, np.inf
    for idx, el in enumerate(elements):
        if el.rank != target.rank:
            continue
        d = float(np.linalg.norm(target.matrix.data - el.matrix.data))
        if d < best_dist:
            best, best_dist = idx, d
    if best < 0 or best_dist > MATCH_TOL:
        raise LatticeError(
            f"projection (rank {target.rank}) matches no lattice element; "
            f"nearest distance {best_dist:.3e}"
        )
    return best


def enumerate_lattice(
    T: CMatrix, rank_tol: float = DEFAULT_RANK_TOL
) -> InvariantLattice:
    """All 2^n invariant projections of T, with join/meet tables.

    Requires n distinct eigenvalues (relative gap above 1e-6); joins are
    realized as ranges of sums, meets by De Morgan complement, and both are
    matched back against the subset elements.
    """
    n = T.n
    if n > MAX_LATTICE_DIM:
        raise ValueError(
            f"lattice enumeration is exponential; n = {n} exceeds {MAX_LATTICE_DIM}"
        )
    values, vectors = _distinct_eigensystem(T)
    size = 1 << n
    elements = []
    for mask in range(size):
        proj = _subset_projection(vectors, mask, n)
        defect = _invariance_defect_frob(T, proj)
        if defect > ELEMENT_TOL:
            raise LatticeError(
                f"element {mask:#x} invariance defect {defect:.3e} exceeds "
                f"{ELEMENT_TOL} (ill-conditioned eigenbasis)"
            )
        elements.append(proj)
    identity = np.eye(n)
    join_table = []
    meet_table = []
    for i in range(size):
        join_row = []
        meet_row = []
        for j in range(size):
            joined = range_projection(
                CMatrix(elements[i].matrix.data + elements[j].matrix.data), rank_tol
            )
            join_row.append(_match_element(joined, elements, i | j))
            comp_join = range_projection(
                CMatrix(
                    (identity - elements[i].matrix.data)
                    + (identity - elements[j].matrix.data)
                ),
                rank_tol,
            )
            met = OrthoProjection(
                CMatrix(identity - comp_join.matrix.data), n - comp_join.rank
            )
            meet_row.append(_match_element(met, elements, i & j))
        join_table.append(tuple(join_row))
        meet_table.append(tuple(meet_row))
    return InvariantLattice(
        source=T,
        elements=tuple(elements),
        join_table=tuple(join_table),
        meet_table=tuple(meet_table),
        trace_list=tuple(el.trace_value for el in elements),
        eigenvalues=tuple(values.tolist()),
    )


def _invariance_defect_frob(T: CMatrix, P: OrthoProjection) -> float:
    tp = T.data @ P.matrix.data
    return float(np.linalg.norm(tp - P.matrix.data @ tp))


def rank_identity_check(
    T: CMatrix, rank_tol: float = DEFAULT_RANK_TOL
) -> Tuple[Fraction, Fraction]:
    """(trace of range projection, trace of kernel projection); sums to 1."""
    r = range_projection(T, rank_tol)
    k = kernel_projection(T, rank_tol)
    return r.trace_value, k.trace_value


def range_of_compression(
    X: CMatrix, E: OrthoProjection, rank_tol: float = DEFAULT_RANK_TOL
) -> OrthoProjection:
    """The projection onto the range of X E.

    When X has trivial kernel the rank (hence the trace) of the output
    equals that of E exactly.
    """
    return range_projection(CMatrix(X.data @ E.matrix.data), rank_tol)


def sublattice_embedding(
    S: CMatrix,
    T: CMatrix,
    X: CMatrix,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> LatticeMap:
    """The map E -> R(XE) from the lattice of S into the lattice of T.

    Requires X S = T X with trivial kernel; verifies injectivity, join and
    meet preservation through the index tables, and exact trace equality.
    """
    inter_defect = float(np.linalg.norm(X.data @ S.data - T.data @ X.data))
    bound = 1e-10 * max(
        1.0, float(np.linalg.norm(X.data)) * float(np.linalg.norm(S.data))
    )
    if inter_defect > bound:
        raise LatticeError(
            f"intertwining residual {inter_defect:.3e} exceeds {bound:.3e}; refused"
        )
    if kernel_projection(X, rank_tol).rank != 0:
        raise LatticeError("intertwiner has nontrivial kernel; refused")
    lat_s = enumerate_lattice(S, rank_tol)
    lat_t = enumerate_lattice(T, rank_tol)
    forward = []
    for idx, element in enumerate(lat_s.elements):
        image = range_of_compression(X, element, rank_tol)
        matched = _match_element(image, lat_t.elements, idx)
        forward.append(matched)
    if len(set(forward)) != len(forward):
        raise LatticeError(
            "map is not injective; contradicts trace preservation under a "
            "kernel-free intertwiner"
        )
    size = lat_s.size
    for i in range(size):
        for j in range(size):
            if forward[lat_s.join_table[i][j]] != lat_t.join_table[forward[i]][forward[j]]:
                raise LatticeError(f"join not preserved at pair ({i}, {j})")
            if forward[lat_s.meet_table[i][j]] != lat_t.meet_table[forward[i]][forward[j]]:
                raise LatticeError(f"meet not preserved at pair ({i}, {j})")
    preserving = all(
        lat_t.trace_list[forward[i]] == lat_s.trace_list[i] for i in range(size)
    )
    return LatticeMap(
        intertwiner=X,
        forward=tuple(forward),
        trace_preserving=preserving,
        source_lattice=lat_s,
        target_lattice=lat_t,
    )


def _nontrivial_witness(
    product: CMatrix, factor_kernel: OrthoProjection, factor_range: OrthoProjection
) -> OrthoProjection:
    """A nontrivial invariant projection for `product` when a factor is singular."""
    n = product.n
    for candidate in (factor_kernel, factor_range):
        if 0 < candidate.rank < n:
            defect = _invariance_defect_frob(product, candidate)
            if defect <= ELEMENT_TOL:
                return candidate
    # product vanished entirely; any line is invariant
    basis = np.zeros((n, 1), dtype=np.complex128)
    basis[0, 0] = 1.0
    from .kernel import projection_from_basis

    return projection_from_basis(basis)


def st_ts_isomorphism(
    S: CMatrix, T: CMatrix, rank_tol: float = DEFAULT_RANK_TOL
) -> LatticeMap:
    """Lattice isomorphism E -> R(TE) between the lattices of ST and TS.

    With both factors injective the map is a bijection with inverse
    F -> R(SF), preserving traces exactly; the round trip is re-verified on
    every element.  With a singular factor the operation falls back to the
    nontriviality witnesses: the kernel or range of a factor supplies a
    nontrivial invariant projection for each product.
    """
    ker_s = kernel_projection(S, rank_tol)
    ker_t = kernel_projection(T, rank_tol)
    st = CMatrix(S.data @ T.data)
    ts = CMatrix(T.data @ S.data)
    if ker_s.rank > 0 or ker_t.rank > 0:
        st_witness = _nontrivial_witness(st, ker_t, range_projection(S, rank_tol))
        ts_witness = _nontrivial_witness(ts, ker_s, range_projection(T, rank_tol))
        return LatticeMap(
            intertwiner=T,
            forward=None,
            trace_preserving=False,
            st_witness=st_witness,
            ts_witness=ts_witness,
        )
    lat_st = enumerate_lattice(st, rank_tol)
    lat_ts = enumerate_lattice(ts, rank_tol)
    forward = []
    for idx, element in enumerate(lat_st.elements):
        image = range_of_compression(T, element, rank_tol)
        forward.append(_match_element(image, lat_ts.elements, idx))
    inverse = []
    for idx, element in enumerate(lat_ts.elements):
        image = range_of_compression(S, element, rank_tol)
        inverse.append(_match_element(image, lat_st.elements, idx))
    size = lat_st.size
    for i in range(size):
        if inverse[forward[i]] != i:
            raise LatticeError(f"round trip failed at element {i}")
        if lat_ts.trace_list[forward[i]] != lat_st.trace_list[i]:
            raise LatticeError(f"trace not preserved at element {i}")
        roundtrip = range_of_compression(
            S, lat_ts.elements[forward[i]], rank_tol
        )
        dist = float(
            np.linalg.norm(roundtrip.matrix.data - lat_st.elements[i].matrix.data)
        )
        if dist > ELEMENT_TOL:
            raise LatticeError(
                f"round-trip projection distance {dist:.3e} at element {i}"
            )
    for i in range(size):
        for j in range(size):
            if forward[lat_st.join_table[i][j]] != lat_ts.join_table[forward[i]][forward[j]]:
                raise LatticeError(f"join not preserved at pair ({i}, {j})")
            if forward[lat_st.meet_table[i][j]] != lat_ts.meet_table[forward[i]][forward[j]]:
                raise LatticeError(f"meet not preserved at pair ({i}, {j})")
    return LatticeMap(
        intertwiner=T,
        forward=tuple(forward),
        trace_preserving=True,
        inverse=tuple(inverse),
        source_lattice=lat_st,
        target_lattice=lat_ts,
    )


def hyperinvariant_indices(lattice: InvariantLattice) -> List[int]:
    """Elements invariant under everything that commutes with the source.

    For a distinct-spectrum matrix the commutant is generated by the
    spectral projections, so an element qualifies exactly when its range is
    invariant under each spectral projection; for eigen-subset spans that
    is every element.
    """
    T = lattice.source
    values, vectors = np.linalg.eig(T.data)
    inverse = np.linalg.inv(vectors)
    spectral = [
        np.outer(vectors[:, i], inverse[i, :]) for i in range(T.n)
    ]
    out = []
    for idx, element in enumerate(lattice.elements):
        p = element.matrix.data
        ok = True
        for proj in spectral:
            ep = proj @ p
            if float(np.linalg.norm(ep - p @ ep)) > ELEMENT_TOL:
                ok = False
                break
        if ok:
            out.append(idx)
    return out
