"""Coupling-aware channel estimators built on the Tucker-2 slice structure.

Every measured channel slice factors as ``H_k = C Omega_bar_k D`` with
``C = [H0, A]``, ``D = [I, B].T`` and a known configuration-dependent core,
or, once the direct channel ``H0`` has been removed, as
``H_k - H0 = A Omega_k B``.  Five estimators cover the practical levels of
prior knowledge (CLI/problem-type tokens in parentheses):

=====  ==============  =================  ===========================
type   known           estimated          method
=====  ==============  =================  ===========================
1      loads+coupling  H0, A, B           alternating least squares
2      ... + H0        A, B               alternating least squares
rbf    ... + H0        A, B               bilinear factorization via
                                          the symmetric-core vech basis
3      ... + B         H0, A              one-shot least squares
4      ... + H0 + B    A                  one-shot least squares
=====  ==============  =================  ===========================

The (A, B) factors of types 1, 2 and rbf are identifiable only up to a
reciprocal scalar (A, B) -> (g A, B / g), which cancels in every predicted
channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergenceError,
    IdentifiabilityError,
    RankDeficiencyError,
    SymmetryError,
)
from .tensor_ops import build_duplication, pinv, unfold, vech_indices

PROBLEM_TYPES = ("1", "2", "3", "4", "rbf")

# relative tolerance on ||Omega_k - Omega_k^T|| for the reciprocity-based method
CORE_SYMMETRY_TOL = 1e-8

# cond(G) above which the bilinear normal system falls back to a pseudoinverse
GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True)
class EstimatorConfig:
    """Iteration budget, stopping threshold and initialization control."""

    max_iter: int = 200
    cost_tol: float = 1e-10
    rank_tol: float = 1e-10
    init_seed: int = 0
    init_mode: str = "random"        # "random" or "provided"
    init_b: np.ndarray | None = None  # used when init_mode == "provided"
    line_search: bool = True          # exact extrapolation after each ALS sweep
    restarts: int = 1                 # extra random initializations, best kept

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.cost_tol <= 0 or self.rank_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.init_mode not in ("random", "provided"):
            raise ValueError("init_mode must be 'random' or 'provided'")
        if self.init_mode == "provided" and self.init_b is None:
            raise ValueError("init_mode 'provided' requires init_b")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class EstimationReport:
    """Recovered parameters plus the per-iteration cost trace and bookkeeping."""

    h0_hat: np.ndarray | None
    a_hat: np.ndarray | None
    b_hat: np.ndarray | None
    cost_trace: list[float]
    iterations_used: int
    converged: bool
    min_k_required: int
    k_used: int
    zf_residual_rel: float | None = None   # bilinear method: relative residual
    gram_pinv_fallback: bool = False       # of the zero-forcing stage
    decoupled_core: bool = False


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def min_k(est_type: str, n_f: int, n_m: int, n_u: int) -> int:
    """Minimum number of training configurations for the given problem type."""
    if min(n_f, n_m, n_u) < 1:
        raise ValueError("dimensions must be positive")
    t = str(est_type)
    if t == "1":
        return max(1 + _ceil_div(n_m, n_f), _ceil_div(n_f + n_m, n_u))
    if t == "2":
        return max(_ceil_div(n_m, n_u), _ceil_div(n_m, n_f))
    if t == "3":
        return 1 + _ceil_div(n_m, n_f)
    if t == "4":
        return _ceil_div(n_m, n_f)
    if t == "rbf":
        return n_m * (n_m + 1) // 2
    raise ValueError(f"unknown problem type {est_type!r}")


def _random_init(shape, seed: int, restart: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x1B, int(restart)]))
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _initial_b(cfg: EstimatorConfig, shape, restart: int) -> np.ndarray:
    if cfg.init_mode == "provided" and restart == 0:
        b0 = np.asarray(cfg.init_b, dtype=complex)
        if b0.shape != shape:
            raise ValueError(f"init_b has shape {b0.shape}, expected {shape}")
        return b0
    return _random_init(shape, cfg.init_seed, restart)


def _stack_right(core: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Horizontal stack ``[T_1 m, ..., T_K m]`` of slice-wise right products."""
    return unfold(np.einsum("ijk,jl->ilk", core, m), 1)


def _stack_left_t(core: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Horizontal stack ``[T_1.T m.T, ..., T_K.T m.T]``."""
    return unfold(np.einsum("jik,uj->iuk", core, m), 1)


def _reconstruct(c: np.ndarray, core: np.ndarray, d: np.ndarray) -> np.ndarray:
    return np.einsum("uj,jlk,lf->ufk", c, core, d)


def _solve_rows(
    target: np.ndarray,
    design: np.ndarray,
    rank_tol: float,
    what: str,
    check_rank: bool = True,
) -> np.ndarray:
    """LS solution of ``target ~= X design`` with a full-row-rank check on design."""
    inv, rank = pinv(design, rank_tol, return_rank=True)
    if check_rank and rank < design.shape[0]:
        raise RankDeficiencyError(rank, design.shape[0], detail=what)
    return target @ inv


def _check_k(k: int, required: int, detail: str) -> None:
    if k < required:
        raise IdentifiabilityError(k, required, detail=detail)


def _best_real_step(r0: np.ndarray, lin: np.ndarray, quad: np.ndarray) -> tuple[float, float]:
    """Minimize ``||r0 - s*lin - s^2*quad||_F^2`` over real ``s``.

    The objective is an exact quartic in ``s``; its critical points are the
    real roots of a cubic.  ``s=0`` reproduces the previous iterate and
    ``s=1`` the plain alternating update, so the minimum never exceeds
    either: extrapolation can only help.
    """

    def inner(x, y):
        return float(np.real(np.sum(np.conj(x) * y)))

    c4 = inner(quad, quad)
    c3 = 2.0 * inner(lin, quad)
    c2 = inner(lin, lin) - 2.0 * inner(r0, quad)
    c1 = -2.0 * inner(r0, lin)
    c0 = inner(r0, r0)

    def value(s: float) -> float:
        return c0 + s * (c1 + s * (c2 + s * (c3 + s * c4)))

    candidates = [0.0, 1.0]
    deriv = np.array([4.0 * c4, 3.0 * c3, 2.0 * c2, c1])
    nz = np.flatnonzero(np.abs(deriv) > 0)
    if nz.size:
        roots = np.roots(deriv[nz[0]:])
        candidates.extend(
            float(r.real) for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real))
        )
    best = min(candidates, key=value)
    return best, value(best)


def _run_als(
    h: np.ndarray,
    core: np.ndarray,
    cfg: EstimatorConfig,
    impose_identity_rows: int,
    restart: int = 0,
) -> tuple[np.ndarray, np.ndarray, list[float], int, bool]:
    """Alternate the two slice-structured LS updates until the cost stalls.

    ``impose_identity_rows > 0`` re-imposes an identity block on top of the
    right factor after each update (the known-feed-block constraint of
    problem type 1); the cost is evaluated after that re-imposition so the
    trace always reflects the constrained iterate.

    With ``cfg.line_search`` (default), each sweep is followed by an exact
    line search along the sweep direction: the cost is a quartic in the
    real step size, so the optimal extrapolation is closed-form.  This is
    the standard cure for the slow "swamp" regimes of alternating least
    squares near the identifiability threshold; it never increases the cost
    and leaves the fixed points of the plain iteration unchanged.
    """
    n_right = h.shape[1]
    dim = core.shape[0]
    h1 = unfold(h, 1)
    h2 = unfold(h, 2)

    d = _initial_b(cfg, (dim - impose_identity_rows, n_right), restart)
    if impose_identity_rows:
        d = np.vstack([np.eye(impose_identity_rows, n_right, dtype=complex), d])
    c = None

    cost_trace: list[float] = []
    converged = False
    iterations = 0
    check_rank = True
    for iteration in range(1, cfg.max_iter + 1):
        iterations = iteration
        c_prev, d_prev = c, d
        design_c = _stack_right(core, d)
        c = _solve_rows(h1, design_c, cfg.rank_tol, "left-factor update", check_rank)
        design_d = _stack_left_t(core, c)
        d = _solve_rows(h2, design_d, cfg.rank_tol, "right-factor update", check_rank).T.copy()
        check_rank = False
        if impose_identity_rows:
            d[:impose_identity_rows, :] = np.eye(impose_identity_rows, n_right)

        if cfg.line_search and c_prev is not None:
            # cost along (c_prev + s dc) core (d_prev + s dd) is quartic in s
            dc = c - c_prev
            dd = d - d_prev
            r0 = h - _reconstruct(c_prev, core, d_prev)
            lin = _reconstruct(dc, core, d_prev) + _reconstruct(c_prev, core, dd)
            quad = _reconstruct(dc, core, dd)
            step, _ = _best_real_step(r0, lin, quad)
            c = c_prev + step * dc
            d = d_prev + step * dd
            cost = float(np.sum(np.abs(r0 - step * lin - step * step * quad) ** 2))
        else:
            cost = float(np.sum(np.abs(h2 - d.T @ design_d) ** 2))

        if not math.isfinite(cost):
            raise DivergenceError(f"non-finite cost at iteration {iteration}")
        cost_trace.append(cost)
        if iteration >= 2:
            prev = cost_trace[-2]
            if prev <= 0.0 or abs(prev - cost) / prev < cfg.cost_tol:
                converged = True
                break
    return c, d, cost_trace, iterations, converged


def _als_best_of_restarts(
    h: np.ndarray,
    core: np.ndarray,
    cfg: EstimatorConfig,
    impose_identity_rows: int,
) -> tuple[np.ndarray, np.ndarray, list[float], int, bool]:
    """Run the ALS from ``cfg.restarts`` initializations and keep the best fit.

    Alternating descent can stagnate in initialization-dependent local
    minima; extra seeded restarts are the usual mitigation.  Stops early
    once a restart reaches an essentially exact fit.
    """
    floor = 1e-24 * max(float(np.sum(np.abs(h) ** 2)), 1e-300)
    best = None
    for restart in range(cfg.restarts):
        result = _run_als(h, core, cfg, impose_identity_rows, restart)
        if best is None or result[2][-1] < best[2][-1]:
            best = result
        if best[2][-1] <= floor:
            break
    return best


def fit_type1(h: np.ndarray, core_aug: np.ndarray, cfg: EstimatorConfig | None = None) -> EstimationReport:
    """Jointly estimate H0, A and B from raw channel slices (problem type 1).

    ``core_aug`` is the augmented ``(N_F+N_M) x (N_F+N_M) x K`` stack with
    slices ``blkdiag(I, Omega_k)``.  H0 is identified directly; A and B only
    up to the reciprocal scalar ambiguity.
    """
    cfg = cfg or EstimatorConfig()
    n_u, n_f, k = h.shape
    dim = core_aug.shape[0]
    n_m = dim - n_f
    if n_m < 1 or core_aug.shape[:2] != (dim, dim) or core_aug.shape[2] != k:
        raise ValueError("augmented core stack does not match the channel stack")
    required = min_k("1", n_f, n_m, n_u)
    _check_k(k, required, "problem type 1")

    c, d, trace, iterations, converged = _als_best_of_restarts(h, core_aug, cfg, impose_identity_rows=n_f)
    return EstimationReport(
        h0_hat=c[:, :n_f],
        a_hat=c[:, n_f:],
        b_hat=d[n_f:, :],
        cost_trace=trace,
        iterations_used=iterations,
        converged=converged,
        min_k_required=required,
        k_used=k,
    )


def fit_type2(h_delta: np.ndarray, core: np.ndarray, cfg: EstimatorConfig | None = None) -> EstimationReport:
    """Estimate A and B from direct-channel-free slices (problem type 2).

    The caller must already have subtracted H0 from every slice, so that
    ``h_delta[:, :, k] ~= A Omega_k B``.
    """
    cfg = cfg or EstimatorConfig()
    n_u, n_f, k = h_delta.shape
    n_m = core.shape[0]
    if core.shape[:2] != (n_m, n_m) or core.shape[2] != k:
        raise ValueError("core stack does not match the channel stack")
    required = min_k("2", n_f, n_m, n_u)
    _check_k(k, required, "problem type 2")

    a, b, trace, iterations, converged = _als_best_of_restarts(h_delta, core, cfg, impose_identity_rows=0)
    return EstimationReport(
        h0_hat=None,
        a_hat=a,
        b_hat=b,
        cost_trace=trace,
        iterations_used=iterations,
        converged=converged,
        min_k_required=required,
        k_used=k,
    )


def fit_type3(
    h: np.ndarray,
    core_aug: np.ndarray,
    b_known: np.ndarray,
    cfg: EstimatorConfig | None = None,
) -> EstimationReport:
    """Estimate H0 and A with a known feed channel B (problem type 3).

    A single least-squares solve against the known right factor
    ``D = [I, B].T``; both H0 and A are identified without ambiguity.
    """
    cfg = cfg or EstimatorConfig()
    n_u, n_f, k = h.shape
    b_known = np.asarray(b_known, dtype=complex)
    n_m = b_known.shape[0]
    if b_known.shape != (n_m, n_f):
        raise ValueError("b_known must be N_M x N_F")
    if core_aug.shape != (n_f + n_m, n_f + n_m, k):
        raise ValueError("augmented core stack does not match the channel stack")
    required = min_k("3", n_f, n_m, n_u)
    _check_k(k, required, "problem type 3")

    d = np.vstack([np.eye(n_f, dtype=complex), b_known])
    design = _stack_right(core_aug, d)
    c = _solve_rows(unfold(h, 1), design, cfg.rank_tol, "joint H0/A solve")
    cost = float(np.sum(np.abs(h - _reconstruct(c, core_aug, d)) ** 2))
    return EstimationReport(
        h0_hat=c[:, :n_f],
        a_hat=c[:, n_f:],
        b_hat=None,
        cost_trace=[cost],
        iterations_used=1,
        converged=True,
        min_k_required=required,
        k_used=k,
    )


def fit_type4(
    h_delta: np.ndarray,
    core: np.ndarray,
    b_known: np.ndarray,
    cfg: EstimatorConfig | None = None,
) -> EstimationReport:
    """Estimate A alone, with H0 already removed and B known (problem type 4)."""
    cfg = cfg or EstimatorConfig()
    n_u, n_f, k = h_delta.shape
    b_known = np.asarray(b_known, dtype=complex)
    n_m = b_known.shape[0]
    if b_known.shape != (n_m, n_f):
        raise ValueError("b_known must be N_M x N_F")
    if core.shape != (n_m, n_m, k):
        raise ValueError("core stack does not match the channel stack")
    required = min_k("4", n_f, n_m, n_u)
    _check_k(k, required, "problem type 4")

    design = _stack_right(core, b_known)
    a = _solve_rows(unfold(h_delta, 1), design, cfg.rank_tol, "A solve")
    cost = float(np.sum(np.abs(h_delta - np.einsum("um,mnk,nf->ufk", a, core, b_known)) ** 2))
    return EstimationReport(
        h0_hat=None,
        a_hat=a,
        b_hat=None,
        cost_trace=[cost],
        iterations_used=1,
        converged=True,
        min_k_required=required,
        k_used=k,
    )


def _rank_one_init(blocks: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Factor each diagonal block ``M_ii ~= a_i b_i.T`` via a truncated SVD.

    The phase/sign indeterminacy of the singular vectors is fixed by making
    the largest-magnitude entry of each ``a_i`` real and positive.
    """
    n_u, n_f = blocks[0].shape
    n = len(blocks)
    a = np.zeros((n_u, n), dtype=complex)
    bt = np.zeros((n_f, n), dtype=complex)
    for i, m in enumerate(blocks):
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        if s[0] == 0.0:
            continue
        ai = u[:, 0] * np.sqrt(s[0])
        bi = np.conj(vh[0, :]) * np.sqrt(s[0])
        pivot = ai[np.argmax(np.abs(ai))]
        phase = pivot / abs(pivot)
        a[:, i] = ai / phase
        bt[:, i] = bi * phase
    return a, bt


def _pair_blocks(n_m: int, diag: list[np.ndarray], off: dict[tuple[int, int], np.ndarray]) -> np.ndarray:
    """Assemble the symmetric (n, n, N_U, N_F) block array M[i, j]."""
    n_u, n_f = diag[0].shape
    full = np.zeros((n_m, n_m, n_u, n_f), dtype=complex)
    for i in range(n_m):
        full[i, i] = diag[i]
    for (i, j), m in off.items():
        full[i, j] = m
        full[j, i] = m
    return full


def _bilinear_gram(x: np.ndarray, decoupled: bool = False) -> np.ndarray:
    """Normal-equation matrix of the pairwise factorization.

    Entry (i, j) couples columns i and j of the fixed factor: the diagonal
    is the total squared column energy, the off-diagonal the cross products
    ``x_j^H x_i``.  Without coupling the pair terms drop from the objective
    and the system becomes diagonal (per-column rank-one fits).
    """
    gram = x.conj().T @ x
    if decoupled:
        return np.diag(np.diag(gram))
    g = gram.T.copy()
    np.fill_diagonal(g, np.trace(gram))
    return g


def _bilinear_half_step(
    x: np.ndarray, blocks: np.ndarray, flags: EstimationReport, decoupled: bool
) -> np.ndarray:
    """Solve the normal equations of one factor given the other.

    ``x`` holds the fixed factor's columns; ``blocks[i, j]`` is the data
    block of the (unordered) column pair, oriented ``d_x x d_y``.  Returns
    the updated factor with columns ``y_i``.
    """
    g = _bilinear_gram(x, decoupled)
    rhs = np.einsum("dj,ijdy->iy", x.conj(), blocks)
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > GRAM_COND_LIMIT:
        flags.gram_pinv_fallback = True
        yt = pinv(g) @ rhs
    else:
        yt = np.linalg.solve(g, rhs)
    return yt.T


def _bilinear_cost(a: np.ndarray, bt: np.ndarray, blocks: np.ndarray, decoupled: bool) -> float:
    n = a.shape[1]
    cost = 0.0
    for i in range(n):
        cost += float(np.sum(np.abs(blocks[i, i] - np.outer(a[:, i], bt[:, i])) ** 2))
        if decoupled:
            continue
        for j in range(i):
            model = np.outer(a[:, i], bt[:, j]) + np.outer(a[:, j], bt[:, i])
            cost += float(np.sum(np.abs(blocks[i, j] - model) ** 2))
    return cost


def fit_type2_bilinear(
    h_delta: np.ndarray,
    core: np.ndarray,
    cfg: EstimatorConfig | None = None,
) -> EstimationReport:
    """Bilinear A/B estimator exploiting core symmetry (CLI type "rbf").

    Stages: (1) zero-force the known cores out of the mode-3 unfolding
    through the half-vectorization basis, which is possible because every
    ``Omega_k`` is symmetric; (2) reshape the result into per-element data
    blocks ``M_ii ~= a_i b_i.T`` and pair blocks
    ``M_ij ~= a_i b_j.T + a_j b_i.T``; (3) rank-one initialization from the
    diagonal blocks; (4) alternate exact normal-equation updates of A and B.

    Needs ``K >= N_M (N_M + 1) / 2``.  The zero-forcing stage can amplify
    noise; its relative residual is reported for diagnosis.
    """
    cfg = cfg or EstimatorConfig()
    n_u, n_f, k = h_delta.shape
    n_m = core.shape[0]
    if core.shape != (n_m, n_m, k):
        raise ValueError("core stack does not match the channel stack")
    required = min_k("rbf", n_f, n_m, n_u)
    _check_k(k, required, "bilinear factorization needs K >= N_M(N_M+1)/2")

    asym = np.abs(core - core.transpose(1, 0, 2)).max(axis=(0, 1))
    scale = np.maximum(1.0, np.abs(core).max(axis=(0, 1)))
    if np.any(asym > CORE_SYMMETRY_TOL * scale):
        worst = int(np.argmax(asym / scale))
        raise SymmetryError(
            f"core slice {worst} violates symmetry by {asym[worst]:.3e} "
            f"(tolerance {CORE_SYMMETRY_TOL:g} relative)"
        )

    rows, cols = vech_indices(n_m)
    s_bar = core[rows, cols, :]                       # p x K stack of vech(Omega_k)
    p_dim = s_bar.shape[0]
    off_mask = rows != cols

    report = EstimationReport(
        h0_hat=None,
        a_hat=None,
        b_hat=None,
        cost_trace=[],
        iterations_used=0,
        converged=False,
        min_k_required=required,
        k_used=k,
    )

    s_inv, rank = pinv(s_bar, cfg.rank_tol, return_rank=True)
    if rank < p_dim:
        # Vanishing coupling leaves only the diagonal rows active; the
        # columns then decouple and the reduced system is still solvable.
        off_energy = float(np.linalg.norm(s_bar[off_mask, :]))
        total = float(np.linalg.norm(s_bar))
        diag_rank = int(np.linalg.matrix_rank(s_bar[~off_mask, :], tol=None))
        if off_energy <= 1e-12 * max(1.0, total) and diag_rank == n_m:
            report.decoupled_core = True
        else:
            raise RankDeficiencyError(rank, p_dim, detail="vech core matrix")

    h3t = unfold(h_delta, 3).T                        # (N_U N_F) x K
    projected = h3t @ s_inv                           # (N_U N_F) x p
    norm_h3 = float(np.linalg.norm(h3t))
    report.zf_residual_rel = float(np.linalg.norm(h3t - projected @ s_bar)) / max(norm_h3, 1e-300)

    dup = build_duplication(n_m)
    h_bar = projected @ dup.p
    diag_blocks = [h_bar[:, i].reshape(n_u, n_f, order="F") for i in range(n_m)]
    off_pairs = [(int(i), int(j)) for i, j in zip(rows[off_mask], cols[off_mask])]
    off_blocks = {
        pair: h_bar[:, n_m + s].reshape(n_u, n_f, order="F")
        for s, pair in enumerate(off_pairs)
    }
    blocks = _pair_blocks(n_m, diag_blocks, off_blocks)
    blocks_t = blocks.transpose(0, 1, 3, 2)           # pair blocks seen from B's side

    a, bt = _rank_one_init(diag_blocks)
    decoupled = report.decoupled_core
    for iteration in range(1, cfg.max_iter + 1):
        report.iterations_used = iteration
        bt = _bilinear_half_step(a, blocks, report, decoupled)
        a = _bilinear_half_step(bt, blocks_t, report, decoupled)
        cost = _bilinear_cost(a, bt, blocks, decoupled)
        if not math.isfinite(cost):
            raise DivergenceError(f"non-finite cost at iteration {iteration}")
        report.cost_trace.append(cost)
        if iteration >= 2:
            prev = report.cost_trace[-2]
            if prev <= 0.0 or (prev - cost) / prev < cfg.cost_tol:
                report.converged = True
                break

    report.a_hat = a
    report.b_hat = bt.T
    return report


def predict(
    report: EstimationReport | None,
    core_stack: np.ndarray,
    h0: np.ndarray | None = None,
    a: np.ndarray | None = None,
    b: np.ndarray | None = None,
) -> np.ndarray:
    """Predict channel slices for new configurations from (estimated) parameters.

    Estimated fields from ``report`` take precedence; ``h0``/``a``/``b``
    supply whatever the problem type treated as known.  ``core_stack`` may
    be the plain or the augmented variant; the reciprocal scalar ambiguity
    of (A, B) cancels in the output either way.
    """
    if report is not None:
        h0 = report.h0_hat if report.h0_hat is not None else h0
        a = report.a_hat if report.a_hat is not None else a
        b = report.b_hat if report.b_hat is not None else b
    missing = [name for name, val in (("h0", h0), ("a", a), ("b", b)) if val is None]
    if missing:
        raise ValueError(f"predict is missing parameters: {', '.join(missing)}")
    h0 = np.asarray(h0, dtype=complex)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n_m = a.shape[1]
    n_f = b.shape[1]
    dim = core_stack.shape[0]
    if dim == n_m:
        return h0[:, :, np.newaxis] + np.einsum("um,mnk,nf->ufk", a, core_stack, b)
    if dim == n_f + n_m:
        c = np.hstack([h0, a])
        d = np.vstack([np.eye(n_f, dtype=complex), b])
        return _reconstruct(c, core_stack, d)
    raise ValueError(
        f"core stack dimension {dim} matches neither N_M={n_m} nor N_F+N_M={n_f + n_m}"
    )


ESTIMATOR_LABELS = {
    "1": "joint H0/A/B (alternating LS)",
    "2": "A/B with known H0 (alternating LS)",
    "3": "H0/A with known B (one-shot LS)",
    "4": "A with known H0 and B (one-shot LS)",
    "rbf": "A/B with known H0 (reciprocal bilinear factorization)",
}
