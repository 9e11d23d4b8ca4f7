"""Forward multiport-network model of a 1-bit programmable metasurface antenna.

The device couples ``N_F`` feeds to ``N_U`` user ports through ``N_M``
tunable meta-elements.  Each element is a virtual port terminated by one of
two loads with reflection coefficients ``alpha`` (bit 0) and ``beta``
(bit 1).  With ``Phi = diag(r)`` holding the per-element loads and ``Gamma``
the inter-element coupling block of the scattering matrix, the end-to-end
channel is

    H(v) = H0 + A (I - Phi Gamma)^{-1} Phi B

which reduces to ``H0 + A Phi B`` when coupling is ignored.  Reciprocity of
the hardware makes ``Gamma`` (and hence every core matrix
``(I - Phi Gamma)^{-1} Phi``) symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularModelError

# cond(I - Phi*Gamma) above this aborts instead of returning garbage
COND_LIMIT = 1e8

_GAMMA_SYM_TOL = 1e-12


def _as_complex_matrix(x, name: str) -> np.ndarray:
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got ndim={m.ndim}")
    return m


def as_config(v) -> np.ndarray:
    """Validate and return a binary control vector as a 1-D uint8 array."""
    arr = np.asarray(v)
    if arr.ndim != 1:
        raise ValueError("control vector must be one-dimensional")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("control vector entries must be 0 or 1")
    return arr.astype(np.uint8)


@dataclass(frozen=True)
class SystemParameters:
    """Ground-truth or estimated model of one deployment scenario.

    h0    : N_U x N_F direct feed-to-user channel
    a     : N_U x N_M element-to-user channel
    gamma : N_M x N_M inter-element coupling (symmetric)
    b     : N_M x N_F feed-to-element channel
    alpha, beta : load reflection coefficients of the two element states
    """

    h0: np.ndarray
    a: np.ndarray
    gamma: np.ndarray
    b: np.ndarray
    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "h0", _as_complex_matrix(self.h0, "h0"))
        object.__setattr__(self, "a", _as_complex_matrix(self.a, "a"))
        object.__setattr__(self, "gamma", _as_complex_matrix(self.gamma, "gamma"))
        object.__setattr__(self, "b", _as_complex_matrix(self.b, "b"))
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        n_u, n_f = self.h0.shape
        n_m = self.a.shape[1]
        if self.a.shape[0] != n_u:
            raise ValueError("a must have the same number of rows as h0")
        if self.gamma.shape != (n_m, n_m):
            raise ValueError("gamma must be square with the element count of a")
        if self.b.shape != (n_m, n_f):
            raise ValueError("b must be N_M x N_F")
        gnorm = np.linalg.norm(self.gamma)
        if np.linalg.norm(self.gamma - self.gamma.T) > _GAMMA_SYM_TOL * max(1.0, gnorm):
            raise ValueError("gamma must be symmetric (reciprocal hardware)")

    @property
    def n_u(self) -> int:
        return self.h0.shape[0]

    @property
    def n_f(self) -> int:
        return self.h0.shape[1]

    @property
    def n_m(self) -> int:
        return self.a.shape[1]


@dataclass(frozen=True)
class ScatteringMatrix:
    """Full scattering matrix of the static structure with labelled port sets."""

    s: np.ndarray
    feed_ports: np.ndarray
    meta_ports: np.ndarray
    user_ports: np.ndarray
    sym_tol: float = field(default=1e-12)

    def __post_init__(self):
        object.__setattr__(self, "s", _as_complex_matrix(self.s, "s"))
        for name in ("feed_ports", "meta_ports", "user_ports"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=int))
        n = self.s.shape[0]
        if self.s.shape[1] != n:
            raise ValueError("scattering matrix must be square")
        all_ports = np.concatenate([self.feed_ports, self.meta_ports, self.user_ports])
        if len(set(all_ports.tolist())) != len(all_ports) or sorted(all_ports.tolist()) != list(range(n)):
            raise ValueError("port index sets must be disjoint and cover all ports")
        snorm = np.linalg.norm(self.s)
        if np.linalg.norm(self.s - self.s.T) > self.sym_tol * max(1.0, snorm):
            raise ValueError("scattering matrix must be symmetric (reciprocity)")


def encode(v, alpha: complex, beta: complex) -> np.ndarray:
    """Map a binary control vector to the per-element load vector.

    The map is affine: bit 0 selects ``alpha`` and bit 1 selects ``beta``
    exactly (no floating-point round trip through ``alpha + (beta-alpha)v``).
    """
    bits = as_config(v)
    return np.where(bits.astype(bool), complex(beta), complex(alpha))


def omega(r, gamma, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Core matrix ``(I - diag(r) Gamma)^{-1} diag(r)`` for one load vector.

    For a symmetric (reciprocal) ``gamma`` the result is symmetric in exact
    arithmetic; the tiny asymmetry left by the linear solve is removed so
    that downstream half-vectorization identities hold bit-exactly.
    """
    r = np.asarray(r, dtype=complex)
    gamma = _as_complex_matrix(gamma, "gamma")
    n = r.shape[0]
    if gamma.shape != (n, n):
        raise ValueError("gamma size must match the load vector length")
    phi = np.diag(r)
    system = np.eye(n) - phi @ gamma
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularModelError(cond)
    out = np.linalg.solve(system, phi)
    gnorm = np.linalg.norm(gamma)
    if np.linalg.norm(gamma - gamma.T) <= _GAMMA_SYM_TOL * max(1.0, gnorm):
        out = (out + out.T) / 2.0
    return out


def end_to_end(p: SystemParameters, v) -> np.ndarray:
    """End-to-end channel matrix ``H0 + A Omega(r(v)) B`` (coupling-aware)."""
    r = encode(v, p.alpha, p.beta)
    return p.h0 + p.a @ omega(r, p.gamma) @ p.b


def end_to_end_no_mc(p: SystemParameters, v) -> np.ndarray:
    """Coupling-unaware benchmark channel ``H0 + A diag(r(v)) B``."""
    r = encode(v, p.alpha, p.beta)
    return p.h0 + (p.a * r[np.newaxis, :]) @ p.b


def build_omega_stack(
    gamma,
    alpha: complex,
    beta: complex,
    configs,
    augmented: bool = False,
    n_f: int | None = None,
    cond_limit: float = COND_LIMIT,
) -> np.ndarray:
    """Stack the core matrices of several configurations along the third mode.

    Returns the plain ``N_M x N_M x K`` stack with slices
    ``Omega_k = (I - Phi_k Gamma)^{-1} Phi_k``, or, with ``augmented=True``,
    the ``(N_F+N_M) x (N_F+N_M) x K`` stack whose slices are
    ``blkdiag(I_{N_F}, Omega_k)``.  Both variants come from this single
    routine so they always describe the same configurations.
    """
    gamma = _as_complex_matrix(gamma, "gamma")
    configs = np.atleast_2d(np.asarray(configs))
    k_total, n_m = configs.shape
    if k_total < 1:
        raise ValueError("need at least one configuration")
    if gamma.shape != (n_m, n_m):
        raise ValueError("gamma size must match the configuration length")
    if augmented and (n_f is None or n_f < 1):
        raise ValueError("augmented stack requires the feed count n_f")

    dim = n_m + n_f if augmented else n_m
    stack = np.zeros((dim, dim, k_total), dtype=complex)
    for k in range(k_total):
        try:
            core = omega(encode(configs[k], alpha, beta), gamma, cond_limit)
        except SingularModelError as err:
            raise SingularModelError(err.cond, config_index=k) from err
        if augmented:
            stack[:n_f, :n_f, k] = np.eye(n_f)
            stack[n_f:, n_f:, k] = core
        else:
            stack[:, :, k] = core
    return stack


def reduce_open_ports(sm: ScatteringMatrix, active_feeds, open_feeds) -> np.ndarray:
    """Absorb open-circuited feed ports into an effective coupling matrix.

    With the open feeds terminated by reflection coefficient +1, multiple
    scattering through them adds
    ``S_M,oc (I - S_oc,oc)^{-1} S_oc,M`` to the element-element block.
    """
    active = np.asarray(active_feeds, dtype=int)
    open_ = np.asarray(open_feeds, dtype=int)
    feeds = set(sm.feed_ports.tolist())
    both = np.concatenate([active, open_])
    if len(set(both.tolist())) != len(both) or set(both.tolist()) != feeds:
        raise ValueError("active and open feed sets must partition the feed ports")

    s = sm.s
    m = sm.meta_ports
    gamma_eff = s[np.ix_(m, m)].copy()
    if len(open_) == 0:
        return gamma_eff
    s_oc = s[np.ix_(open_, open_)]
    system = np.eye(len(open_)) - s_oc
    cond = np.linalg.cond(system)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularModelError(cond)
    gamma_eff += s[np.ix_(m, open_)] @ np.linalg.solve(system, s[np.ix_(open_, m)])
    return gamma_eff
