"""Scattering-matrix designs: manifold projections, passive MRT, passive
interference nulling via alternating projections, and benchmark designs.

A feasible scattering matrix is symmetric (reciprocal network) and
unitary (lossless network). The nulling designs additionally zero the
linear system A_bar^T vec(theta) = 0, which removes every cross-user
entry of the equivalent channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, unvec, vec
from .config import SystemConfig
from .errors import DegenerateInputError, SingularityError

_RANK_TOL = 1e-12  # relative singular-value cutoff, scaled by N
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ScatteringMatrix:
    """An N x N scattering matrix with live constraint diagnostics.

    Residuals are computed from the stored matrix on every access, so
    they can never go stale. ``null_residual`` is None unless the
    design carried a nulling target (an A_bar matrix).
    """

    theta: np.ndarray
    a_bar: np.ndarray | None = None

    def __post_init__(self) -> None:
        theta = np.array(self.theta, dtype=complex)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    @property
    def sym_residual(self) -> float:
        return float(np.linalg.norm(self.theta - self.theta.T))

    @property
    def uni_residual(self) -> float:
        gram = self.theta @ self.theta.conj().T
        return float(np.linalg.norm(gram - np.eye(self.n)))

    @property
    def null_residual(self) -> float | None:
        if self.a_bar is None:
            return None
        r = self.a_bar.T @ vec(self.theta)
        return float(np.real(np.vdot(r, r)))


@dataclass(frozen=True)
class NullingTrace:
    """Per-iteration diagnostics of the alternating-projection loop.

    ``residuals`` has ``iterations + 1`` entries: index 0 is the initial
    feasible iterate, index i the iterate after loop pass i. ``deltas``
    holds the signed relative change of the squared nulling norm and has
    one entry per loop pass.
    """

    residuals: np.ndarray
    deltas: np.ndarray
    iterations: int
    stop_reason: str  # 'relative-change' | 'absolute-norm' | 'iteration-cap'

    def __post_init__(self) -> None:
        if len(self.residuals) != self.iterations + 1:
            raise ValueError("residuals must have iterations + 1 entries")
        if len(self.deltas) != self.iterations:
            raise ValueError("deltas must have one entry per iteration")


def as_theta(x) -> np.ndarray:
    return x.theta if isinstance(x, ScatteringMatrix) else np.asarray(x)


def project_symmetric(theta: np.ndarray) -> np.ndarray:
    """Nearest symmetric matrix: 0.5 * (theta + theta^T)."""
    theta = np.asarray(theta)
    if theta.shape[0] != theta.shape[1]:
        raise ValueError("theta must be square")
    return 0.5 * (theta + theta.T)


def project_unitary(theta: np.ndarray) -> np.ndarray:
    """Nearest unitary matrix in Frobenius norm: U V^H from the SVD."""
    theta = np.asarray(theta, dtype=complex)
    if theta.shape[0] != theta.shape[1]:
        raise ValueError("theta must be square")
    if not np.any(theta):
        raise DegenerateInputError("unitary projection of the zero matrix is undefined")
    u, _, vh = np.linalg.svd(theta)
    return u @ vh


def _symmetric_unitary(theta: np.ndarray) -> np.ndarray:
    """Symmetrize, then the rank-aware unitary factor.

    For the symmetrized matrix B = U S V^H of rank R the null-space
    left factor is replaced by conj(V_{N-R}), which keeps the product
    symmetric; the positive-rank part U_R V_R^H is symmetric already.
    A final symmetrization removes roundoff asymmetry only.
    """
    b = project_symmetric(np.asarray(theta, dtype=complex))
    if not np.any(b):
        raise DegenerateInputError(
            "symmetric-unitary projection undefined: symmetrized input is zero"
        )
    u, s, vh = np.linalg.svd(b)
    n = b.shape[0]
    rank = int(np.sum(s > n * _RANK_TOL * s[0]))
    u_hat = np.concatenate([u[:, :rank], vh[rank:, :].T], axis=1)
    out = u_hat @ vh
    return 0.5 * (out + out.T)


def project_symmetric_unitary(theta: np.ndarray) -> ScatteringMatrix:
    """Nearest symmetric unitary matrix to the symmetrized input."""
    return ScatteringMatrix(_symmetric_unitary(theta))


def mrt_relaxed(cs: ChannelSet) -> np.ndarray:
    """Norm-ball maximizer of the summed desired-channel real parts.

    theta = G^H * sqrt(N / tr(G G^H)), co-phasing every cascaded entry;
    satisfies ||theta||_F^2 = N.
    """
    g = cs.G
    power = float(np.real(np.vdot(g, g)))  # tr(G G^H)
    if power == 0.0:
        raise DegenerateInputError("cascaded channel G is zero")
    return g.conj().T * np.sqrt(cs.N / power)


def mrt_scattering(cs: ChannelSet) -> ScatteringMatrix:
    """Passive MRT: symmetric-unitary projection of the relaxed solution."""
    return project_symmetric_unitary(mrt_relaxed(cs))


def zf_relaxed_scattering(cs: ChannelSet) -> np.ndarray:
    """Channel-inverting scattering matrix (norm-ball scaled).

    Uses the two-factor pseudo-inverse H^H (H H^H)^-1 (W^H W)^-1 W^H,
    which requires N >= K and full-rank H, W. The unnormalized matrix
    makes the equivalent channel exactly the identity; note that its
    symmetrized version no longer nulls interference.
    """
    h, w = cs.H, cs.W
    k, n = h.shape
    if n < k:
        raise SingularityError(f"channel inversion needs N >= K, got N={n}, K={k}")
    if np.linalg.matrix_rank(h) < k or np.linalg.matrix_rank(w) < k:
        raise SingularityError("H or W is rank deficient")
    hh = h @ h.conj().T
    ww = w.conj().T @ w
    g_pinv = h.conj().T @ np.linalg.solve(hh, np.linalg.solve(ww, w.conj().T))
    power = float(np.real(np.vdot(g_pinv, g_pinv)))
    return g_pinv * np.sqrt(cs.N / power)


def min_elements_for_nulling(k: int) -> int:
    """Smallest N whose N(N+1)/2 free variables cover the 2K(K-1) nulling equations."""
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    if k == 1:
        return 1
    return 2 * k - 1


class _NullingProjector:
    """Orthogonal projector onto {theta : A_bar^T vec(theta) = 0}.

    The dense factor A_bar* (A_bar^T A_bar*)^-1 is formed once, outside
    any iteration loop.
    """

    def __init__(self, a_bar: np.ndarray, materialize_factor: bool = True):
        self.a_bar = a_bar
        self.m = a_bar.shape[1]
        if self.m == 0:
            self.gram_inv = None
            self.factor = None
            return
        gram = a_bar.T @ a_bar.conj()
        if np.linalg.cond(gram) > _COND_LIMIT:
            raise SingularityError("interference channel matrix is rank deficient")
        self.gram_inv = np.linalg.inv(gram)
        self.factor = a_bar.conj() @ self.gram_inv if materialize_factor else None

    def apply_vec(self, v: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return v
        return v - self.factor @ (self.a_bar.T @ v)

    def residual_sq(self, v: np.ndarray) -> float:
        if self.m == 0:
            return 0.0
        r = self.a_bar.T @ v
        return float(np.real(np.vdot(r, r)))


def project_nulling(theta: np.ndarray, cs: ChannelSet) -> np.ndarray:
    """Orthogonal projection onto the interference-nulling subspace."""
    theta = np.asarray(theta, dtype=complex)
    proj = _NullingProjector(cs.A_bar)
    return unvec(proj.apply_vec(vec(theta)), cs.N)


def random_init(n: int, rng: np.random.Generator) -> np.ndarray:
    """Standard complex Gaussian seed for the alternating projections."""
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def _stop_check(delta: float, residual: float, cfg: SystemConfig) -> str | None:
    # Relative-change test uses |delta|: the signed value is negative on
    # every productive step, so the magnitude is what detects a stall.
    if abs(delta) <= cfg.eps_rel:
        return "relative-change"
    if residual < cfg.eps_null:
        return "absolute-norm"
    return None


def ao_interference_nulling(
    cs: ChannelSet, theta0: np.ndarray, cfg: SystemConfig
) -> tuple[ScatteringMatrix, NullingTrace]:
    """Alternate nulling and symmetric-unitary projections from theta0.

    The returned matrix is always feasible (last step is the
    symmetric-unitary projection); non-convergence is reported through
    the trace, never raised.
    """
    proj = _NullingProjector(cs.A_bar)
    theta_t = _symmetric_unitary(np.asarray(theta0, dtype=complex))
    r_prev = proj.residual_sq(vec(theta_t))
    residuals = [r_prev]
    deltas: list[float] = []
    stop_reason = "iteration-cap"
    iterations = 0
    for i in range(1, cfg.max_iter + 1):
        v = proj.apply_vec(vec(theta_t))
        theta_t = _symmetric_unitary(unvec(v, cs.N))
        r = proj.residual_sq(vec(theta_t))
        delta = (r - r_prev) / r_prev if r_prev > 0 else 0.0
        residuals.append(r)
        deltas.append(delta)
        iterations = i
        reason = _stop_check(delta, r, cfg)
        if reason is not None:
            stop_reason = reason
            break
        r_prev = r
    trace = NullingTrace(
        residuals=np.array(residuals),
        deltas=np.array(deltas),
        iterations=iterations,
        stop_reason=stop_reason,
    )
    return ScatteringMatrix(theta_t, a_bar=cs.A_bar), trace


def dris_nulling(
    cs: ChannelSet, theta0: np.ndarray, cfg: SystemConfig
) -> tuple[ScatteringMatrix, NullingTrace]:
    """Diagonal-phase comparator: same loop over the phase vector.

    A diagonal matrix only exposes N free entries, so both projections
    act on the length-N diagonal: the nulling step projects the phase
    vector onto the null space of the diagonal slice of A_bar (the
    elementwise products w_k * h_kb), the feasibility step snaps each
    entry back to unit modulus. A nontrivial nulling space needs more
    elements than interference equations, which is why this comparator
    wants far larger surfaces than the unconstrained-matrix loop.
    """
    n = cs.N
    diag_idx = np.arange(n) * (n + 1)
    a_diag = cs.A_bar[diag_idx, :]  # (N, K(K-1)) rows hit by a diagonal theta
    if a_diag.shape[1]:
        u, s, _ = np.linalg.svd(a_diag.conj(), full_matrices=False)
        rank = int(np.sum(s > max(a_diag.shape) * np.finfo(float).eps * s[0]))
        basis = u[:, :rank]  # orthonormal basis of the constrained directions
    else:
        basis = None
    d = _unit_phases(np.diag(np.asarray(theta0, dtype=complex)))

    def residual_sq(dv: np.ndarray) -> float:
        if a_diag.shape[1] == 0:
            return 0.0
        r = a_diag.T @ dv
        return float(np.real(np.vdot(r, r)))

    r_prev = residual_sq(d)
    residuals = [r_prev]
    deltas: list[float] = []
    stop_reason = "iteration-cap"
    iterations = 0
    for i in range(1, cfg.max_iter + 1):
        d_null = d if basis is None else d - basis @ (basis.conj().T @ d)
        d = _unit_phases(d_null)
        r = residual_sq(d)
        delta = (r - r_prev) / r_prev if r_prev > 0 else 0.0
        residuals.append(r)
        deltas.append(delta)
        iterations = i
        reason = _stop_check(delta, r, cfg)
        if reason is not None:
            stop_reason = reason
            break
        r_prev = r
    trace = NullingTrace(
        residuals=np.array(residuals),
        deltas=np.array(deltas),
        iterations=iterations,
        stop_reason=stop_reason,
    )
    return ScatteringMatrix(np.diag(d), a_bar=cs.A_bar), trace


def _unit_phases(d: np.ndarray) -> np.ndarray:
    # zero entries get phase 0, i.e. coefficient 1
    return np.exp(1j * np.angle(d))


def dris_projection(theta: np.ndarray) -> np.ndarray:
    """Nearest unit-modulus diagonal matrix (off-diagonals dropped)."""
    theta = np.asarray(theta, dtype=complex)
    return np.diag(_unit_phases(np.diag(theta)))


def maxF_relaxed(cs: ChannelSet) -> np.ndarray:
    """Norm-ball maximizer of the total equivalent-channel power ||E||_F^2.

    The optimum is sqrt(N) times the dominant right-singular direction
    of A = kron(W^T, H). That direction factors as a Kronecker product
    of the per-hop dominant singular vectors, so two small SVDs replace
    the eigendecomposition of the N^2 x N^2 Gram matrix.
    """
    if not np.any(cs.H) or not np.any(cs.W):
        raise DegenerateInputError("zero channel matrix")
    u_w = np.linalg.svd(cs.W)[0][:, 0]
    v_h = np.linalg.svd(cs.H)[2][0, :].conj()
    return np.sqrt(cs.N) * np.outer(v_h, u_w.conj())


def maxF_scattering(cs: ChannelSet) -> ScatteringMatrix:
    """Total-power benchmark: symmetric-unitary projection of maxF_relaxed."""
    return project_symmetric_unitary(maxF_relaxed(cs))


def _symmetric_unitary_mapping(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Symmetric unitary matrix sending the unit vector u onto the unit
    vector v.

    Any symmetric unitary factors as Q Q^T, and Q Q^T u = v is solved by
    a unitary Q carrying an auxiliary unit vector w (with w^T w = u^T v)
    onto v and its conjugate onto conj(u); both pairs share the same
    Gram matrix, so the extension to a full unitary always exists.
    """
    n = u.size
    c = complex(u @ v)  # transpose product, |c| <= 1
    mag = min(abs(c), 1.0)
    if n == 1 or 1.0 - mag < 1e-12:
        # u and conj(v) are parallel: a single pair fixes the map
        w = np.zeros(n, dtype=complex)
        w[0] = np.exp(0.5j * np.angle(c)) if c != 0 else 1.0
        domain = w[:, None]
        target = v[:, None]
    else:
        t = 0.5 * np.arccos(mag)
        w = np.zeros(n, dtype=complex)
        w[0] = np.exp(0.5j * np.angle(c)) * np.cos(t)
        w[1] = np.exp(0.5j * np.angle(c)) * 1j * np.sin(t)
        s = np.sqrt(1.0 - mag * mag)
        d2 = (w.conj() - np.conj(c) * w) / s
        r2 = (u.conj() - np.conj(c) * v) / s
        domain = np.stack([w, d2], axis=1)
        target = np.stack([v, r2], axis=1)
    q = target @ domain.conj().T + _complement_map(domain, target)
    theta = q @ q.T
    return 0.5 * (theta + theta.T)


def _complement_map(domain: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Unitary part pairing the orthogonal complements of two frames."""
    n, r = domain.shape
    if r == n:
        return np.zeros((n, n), dtype=complex)

    def basis(frame):
        full = np.linalg.qr(np.concatenate([frame, np.eye(n, dtype=complex)], axis=1))[0]
        return full[:, r:n]

    bd, bt = basis(domain), basis(target)
    return bt @ bd.conj().T


def maxl2_scattering(cs: ChannelSet) -> ScatteringMatrix:
    """Spectral-norm benchmark from the dominant singular pairs of H and W.

    Carries the strongest output direction of W onto the strongest input
    direction of H with a feasible matrix, so the equivalent channel
    attains the spectral-norm bound s1(H) * s1(W) exactly.
    """
    if not np.any(cs.H) or not np.any(cs.W):
        raise DegenerateInputError("zero channel matrix")
    u_w = np.linalg.svd(cs.W)[0][:, 0]
    v_h = np.linalg.svd(cs.H)[2][0, :].conj()
    return ScatteringMatrix(_symmetric_unitary_mapping(u_w, v_h))


def identity_scattering(n: int) -> ScatteringMatrix:
    """Specular reflection: theta = I."""
    return ScatteringMatrix(np.eye(n, dtype=complex))
