"""Dense complex matrix kernel: rank decisions, null spaces, determinant moduli.

Every torsion computation in this package eventually reduces to questions
about a single dense complex matrix: its rank under an explicit tolerance,
orthonormal bases of its kernel and cokernel, and the modulus of its
determinant. Those decisions live here so the tolerance policy stays in
one auditable place.

Conventions
-----------
* Matrices are numpy arrays of dtype complex, shape (rows, cols).
* A "basis" is a matrix whose *columns* are the basis vectors.
* Kernel/cokernel bases come straight from the SVD, so they are
  orthonormal to machine precision and deterministic for a given input.
  The residual sign/phase freedom of singular vectors never reaches a
  reported number: downstream torsion moduli are invariant under unitary
  changes of these bases.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput

#: Default relative tolerance for rank decisions, user overridable.
DEFAULT_TOL = 1e-10


class AmbiguousRankWarning(UserWarning):
    """Some singular value fell within a factor of 10 of the rank threshold."""


def as_cmatrix(a, what: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d complex array, raising InvalidInput otherwise."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise InvalidInput(f"{what}: expected a 2-d array, got ndim={arr.ndim}")
    if arr.size and not np.isfinite(arr).all():
        raise InvalidInput(f"{what}: non-finite entry")
    return arr


@dataclass(frozen=True)
class RankResult:
    """Rank decision for one matrix.

    kernel_basis has shape (cols, cols - rank), cokernel_basis has shape
    (rows, rows - rank); both have orthonormal columns. singular_values is
    non-increasing. tolerance_used is the absolute threshold actually
    applied to the singular values.
    """

    rank: int
    kernel_basis: np.ndarray
    cokernel_basis: np.ndarray
    singular_values: np.ndarray
    tolerance_used: float
    ambiguous: bool = field(default=False)


def _svd(a: np.ndarray):
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        u = np.eye(rows, dtype=complex)
        s = np.zeros(0)
        vh = np.eye(cols, dtype=complex)
        return u, s, vh
    return np.linalg.svd(a, full_matrices=True)


def rank_nullspace(a, tol_rel: float = DEFAULT_TOL, scale: float = 0.0) -> RankResult:
    """SVD rank decision with orthonormal kernel and cokernel bases.

    The threshold is tol_rel * max(rows, cols) * sigma_max, falling back to
    tol_rel itself for the zero matrix. Singular values within a factor of
    10 of the threshold trigger an AmbiguousRankWarning; the computation
    still proceeds with the stated cut.

    `scale` anchors the threshold from below for matrices derived from
    larger computations: a product like P @ A @ Q that is zero in exact
    arithmetic carries float noise, and measuring it against its own
    largest singular value would invent rank. Passing the ambient scale
    keeps the cut honest. Zero (the default) preserves the self-relative
    behaviour.
    """
    a = as_cmatrix(a)
    if not 0.0 < tol_rel < 1.0:
        raise InvalidInput(f"tol_rel must lie in (0, 1), got {tol_rel}")
    rows, cols = a.shape
    u, s, vh = _svd(a)
    smax = max(float(s[0]) if s.size else 0.0, float(scale))
    threshold = tol_rel * max(rows, cols) * smax if smax > 0.0 else tol_rel
    rank = int(np.count_nonzero(s > threshold))
    ambiguous = bool(np.any((s > threshold / 10.0) & (s < threshold * 10.0)))
    if ambiguous:
        warnings.warn(
            AmbiguousRankWarning(
                f"singular value within a factor of 10 of threshold {threshold:.3e}"
            ),
            stacklevel=2,
        )
    return RankResult(
        rank=rank,
        kernel_basis=vh[rank:].conj().T,
        cokernel_basis=u[:, rank:],
        singular_values=s,
        tolerance_used=threshold,
        ambiguous=ambiguous,
    )


def range_basis(a, tol_rel: float = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of a.

    `scale` has the same role as in rank_nullspace.
    """
    a = as_cmatrix(a)
    u, s, _ = _svd(a)
    smax = max(float(s[0]) if s.size else 0.0, float(scale))
    threshold = tol_rel * max(a.shape) * smax if smax > 0.0 else tol_rel
    rank = int(np.count_nonzero(s > threshold))
    return u[:, :rank]


def det_modulus(a) -> float:
    """|det a| via a pivoted factorization, exactly 0.0 for rank-deficient input.

    Rank deficiency is decided with the default tolerance, so a numerically
    singular matrix reports 0 instead of a meaningless tiny modulus.
    """
    a = as_cmatrix(a)
    rows, cols = a.shape
    if rows != cols:
        raise InvalidInput(f"det_modulus needs a square matrix, got {rows}x{cols}")
    if rows == 0:
        return 1.0
    if rank_nullspace(a).rank < rows:
        return 0.0
    _, logdet = np.linalg.slogdet(a)
    return float(np.exp(logdet))


def singular_product(a, tol_rel: float = DEFAULT_TOL) -> float:
    """Product of the retained (above-threshold) singular values of a.

    For an invertible matrix this equals |det a|; in general it is the
    determinant modulus of the map restricted to the orthogonal complement
    of its kernel, which is what torsion factors of non-acyclic blocks use.
    """
    res = rank_nullspace(a, tol_rel)
    kept = res.singular_values[: res.rank]
    if kept.size == 0:
        return 1.0
    return float(np.exp(np.log(kept).sum()))
