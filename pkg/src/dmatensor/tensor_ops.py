"""Dense third-order tensor algebra and symmetric-vectorization helpers.

Conventions used throughout the package:

* A third-order tensor of shape ``(I, J, K)`` is a stack of ``K`` frontal
  slices of size ``I x J``; slice ``k`` is ``t[:, :, k]``.
* ``vec`` stacks matrix columns (column-major), so ``vec(M)[i + I*j] = M[i, j]``.
* The three unfoldings of a tensor ``T`` with slices ``T_k`` are::

      T_(1) = [T_1, ..., T_K]              shape (I, J*K)
      T_(2) = [T_1.T, ..., T_K.T]          shape (J, I*K)
      T_(3) = [vec(T_1), ..., vec(T_K)].T  shape (K, I*J)

* ``vech`` stacks the lower triangle (diagonal included) column by column,
  e.g. for a 3x3 matrix the order is (0,0),(1,0),(2,0),(1,1),(2,1),(2,2).

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class DuplicationPair(NamedTuple):
    """Duplication matrix ``w`` and diagonal-first permutation ``p``.

    ``w`` is the binary ``n**2 x n(n+1)/2`` matrix with
    ``vec(M) == w @ vech(M)`` for every symmetric ``M``.  ``p`` is the
    ``n(n+1)/2`` square permutation that, applied on the right, moves the
    ``n`` columns associated with diagonal entries to the front while
    keeping the off-diagonal columns in vech order.
    """

    w: np.ndarray
    p: np.ndarray


def _as_tensor3(t) -> np.ndarray:
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={t.ndim}")
    return t


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Return the mode-1, mode-2 or mode-3 unfolding of a third-order tensor."""
    t = _as_tensor3(t)
    i, j, k = t.shape
    if mode == 1:
        return t.reshape(i, j * k, order="F")
    if mode == 2:
        return t.transpose(1, 0, 2).reshape(j, i * k, order="F")
    if mode == 3:
        return t.reshape(i * j, k, order="F").T
    raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def fold(m: np.ndarray, mode: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`unfold`: rebuild the ``dims`` tensor from its unfolding."""
    m = np.asarray(m)
    i, j, k = dims
    expected = {1: (i, j * k), 2: (j, i * k), 3: (k, i * j)}
    if mode not in expected:
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    if m.shape != expected[mode]:
        raise ValueError(
            f"mode-{mode} unfolding of a {dims} tensor has shape {expected[mode]}, "
            f"got {m.shape}"
        )
    if mode == 1:
        return m.reshape(i, j, k, order="F")
    if mode == 2:
        return m.reshape(j, i, k, order="F").transpose(1, 0, 2)
    return m.T.reshape(i, j, k, order="F")


def mode_n_product(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Multiply a tensor by a matrix along the given mode.

    The result satisfies the usual unfolding identities, e.g. for
    ``Y = (T x_1 A) x_2 B x_3 C`` one has
    ``unfold(Y, 1) == A @ unfold(T, 1) @ kron(C, B).T``.
    """
    t = _as_tensor3(t)
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("mode-n factor must be a matrix")
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")
    if m.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"factor has {m.shape[1]} columns but mode-{mode} dimension is "
            f"{t.shape[mode - 1]}"
        )
    dims = list(t.shape)
    dims[mode - 1] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, tuple(dims))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, satisfying ``vec(B @ X @ A.T) == kron(A, B) @ vec(X)``."""
    return np.kron(np.asarray(a), np.asarray(b))


def vec(m: np.ndarray) -> np.ndarray:
    """Stack the columns of a matrix into a vector (column-major)."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("vec expects a matrix")
    return m.reshape(-1, order="F")


def vech_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column index arrays of the lower triangle in vech order."""
    cols, rows = np.triu_indices(n)
    return rows, cols


def vech(m: np.ndarray) -> np.ndarray:
    """Stack the lower triangle (diagonal included) column by column."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("vech expects a square matrix")
    rows, cols = vech_indices(m.shape[0])
    return m[rows, cols]


def build_duplication(n: int) -> DuplicationPair:
    """Build the duplication matrix and diagonal-first permutation for size ``n``.

    Column ``c`` of ``w`` corresponds to the vech entry ``(i, j)`` with
    ``i >= j``; it has a single one at vec position ``(i, i)`` when
    ``i == j``, and a pair of ones at vec positions ``(i, j)`` and
    ``(j, i)`` otherwise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rows, cols = vech_indices(n)
    p_dim = len(rows)
    w = np.zeros((n * n, p_dim))
    for c, (i, j) in enumerate(zip(rows, cols)):
        w[i + n * j, c] = 1.0
        if i != j:
            w[j + n * i, c] = 1.0
    diag_positions = [c for c, (i, j) in enumerate(zip(rows, cols)) if i == j]
    off_positions = [c for c, (i, j) in enumerate(zip(rows, cols)) if i != j]
    order = diag_positions + off_positions
    p = np.zeros((p_dim, p_dim))
    for new, old in enumerate(order):
        p[old, new] = 1.0
    return DuplicationPair(w=w, p=p)


def is_symmetric(m: np.ndarray, tol: float) -> bool:
    """True iff ``max |M_ij - M_ji| <= tol`` (plain transpose, no conjugation)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    if m.size == 0:
        return True
    return float(np.max(np.abs(m - m.T))) <= tol


def pinv(m: np.ndarray, rank_tol: float = 1e-10, return_rank: bool = False):
    """Moore-Penrose pseudoinverse with an explicit relative rank cutoff.

    Singular values below ``rank_tol * sigma_max`` are treated as zero.
    With ``return_rank=True`` also returns the numerical rank, which callers
    use to detect under-determined least-squares systems.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ValueError("pinv expects a matrix")
    if m.size == 0:
        out = np.zeros((m.shape[1], m.shape[0]), dtype=m.dtype)
        return (out, 0) if return_rank else out
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    cutoff = rank_tol * s[0] if s[0] > 0 else 0.0
    keep = s > cutoff
    rank = int(np.count_nonzero(keep))
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    out = (vh.conj().T * inv_s) @ u.conj().T
    return (out, rank) if return_rank else out
