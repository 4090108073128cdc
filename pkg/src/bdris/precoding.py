"""Base-station processing under a fixed scattering matrix: zero-forcing,
MRT, uniform power, water-filling and sum-rate-maximizing power allocation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, equivalent_channel
from .errors import DegenerateInputError, SingularityError
from .scattering import as_theta

_COND_LIMIT = 1e12
_LN2 = np.log(2.0)


@dataclass(frozen=True)
class Precoder:
    """K x K precoding matrix with its Frobenius power budget.

    kind 'diagonal-power' means P = diag(sqrt(p_1), ..., sqrt(p_K)).
    """

    P: np.ndarray
    kind: str           # 'full' | 'diagonal-power'
    budget: float       # linear mW

    def __post_init__(self) -> None:
        p = np.array(self.P, dtype=complex)
        p.setflags(write=False)
        object.__setattr__(self, "P", p)
        if self.kind not in ("full", "diagonal-power"):
            raise ValueError(f"unknown precoder kind {self.kind!r}")
        used = float(np.real(np.vdot(p, p)))
        if abs(used - self.budget) > 1e-9 * self.budget:
            raise ValueError(
                f"precoder power {used} violates the budget {self.budget}"
            )

    def power_vector(self) -> np.ndarray:
        """Per-stream transmit powers ||P[:, i]||^2."""
        return np.sum(np.abs(self.P) ** 2, axis=0)


def zf_precoder(e: np.ndarray, p_max: float) -> Precoder:
    """Channel inversion, scaled so the full budget is spent.

    E @ P is a positive multiple of the identity, so every user sees the
    same interference-free gain.
    """
    e = np.asarray(e, dtype=complex)
    if e.shape[0] != e.shape[1]:
        raise ValueError("equivalent channel must be square")
    if np.linalg.cond(e) > _COND_LIMIT:
        raise SingularityError("equivalent channel is (near-)singular")
    e_inv = np.linalg.inv(e)
    scale = np.sqrt(p_max / float(np.real(np.vdot(e_inv, e_inv))))
    return Precoder(e_inv * scale, kind="full", budget=p_max)


def bs_mrt_precoder(e: np.ndarray, p_max: float) -> Precoder:
    """Matched filter P = E^H, scaled to the power budget."""
    e = np.asarray(e, dtype=complex)
    power = float(np.real(np.vdot(e, e)))
    if power == 0.0:
        raise DegenerateInputError("equivalent channel is zero")
    return Precoder(e.conj().T * np.sqrt(p_max / power), kind="full", budget=p_max)


def uniform_power(k: int, p_max: float) -> Precoder:
    """Equal power split p_k = p_max / K."""
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    p = np.full(k, p_max / k)
    return Precoder(np.diag(np.sqrt(p)).astype(complex), kind="diagonal-power", budget=p_max)


def water_filling(gains, p_max: float, n0: float) -> Precoder:
    """Closed-form allocation p_k = (1/alpha - n0/g_k)^+ over parallel streams.

    ``gains`` are the per-user power gains of the (diagonal) equivalent
    channel. The dual variable alpha is found by bisection on the total
    power; zero-gain users are excluded from the active set and get no
    power.
    """
    g = np.asarray(gains, dtype=float)
    if np.any(g < 0):
        raise ValueError("gains must be nonnegative")
    active = g > 0
    if not np.any(active):
        raise DegenerateInputError("all channel gains are zero")
    floors = n0 / g[active]  # per-stream water floor

    def allocate(alpha: float) -> np.ndarray:
        return np.maximum(1.0 / alpha - floors, 0.0)

    alpha_lo = 1.0 / (p_max + floors.max())
    alpha_hi = float((g[active] / n0).max())
    while allocate(alpha_hi).sum() > p_max:
        alpha_hi *= 2.0
    p_act = allocate(alpha_lo)
    for _ in range(200):
        mid = 0.5 * (alpha_lo + alpha_hi)
        p_act = allocate(mid)
        total = p_act.sum()
        if abs(total - p_max) <= 1e-12 * p_max:
            break
        if total > p_max:
            alpha_lo = mid
        else:
            alpha_hi = mid
    p = np.zeros_like(g)
    p[active] = p_act
    return Precoder(np.diag(np.sqrt(p)).astype(complex), kind="diagonal-power", budget=p_max)


def _project_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto {p >= 0, sum(p) = total}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (total - css) / idx > 0)[0][-1]
    lam = (total - css[rho]) / (rho + 1.0)
    return np.maximum(v + lam, 0.0)


def _sum_rate_parts(e: np.ndarray):
    sig = np.abs(np.diag(e)) ** 2
    cross = np.abs(e) ** 2
    np.fill_diagonal(cross, 0.0)
    return sig, cross


def optimize_power_sumrate(
    cs: ChannelSet, theta, p_max: float, n0: float, tol: float | None = None
) -> tuple[Precoder, bool]:
    """Maximize the sum rate over diagonal power allocations.

    Projected gradient ascent on the scaled simplex with backtracking,
    multi-started from the uniform split, water-filling on the diagonal
    gains, and every vertex; the best objective wins. Returns the
    precoder and a convergence flag (False if no start reached the
    stationarity tolerance; the best iterate is still returned).
    """
    e = equivalent_channel(cs, as_theta(theta))
    return _optimize_power_for_channel(e, p_max, n0, tol)


def _optimize_power_for_channel(
    e: np.ndarray, p_max: float, n0: float, tol: float | None = None
) -> tuple[Precoder, bool]:
    k = e.shape[0]
    if tol is None:
        tol = 1e-8 * p_max
    sig, cross = _sum_rate_parts(e)

    def objective(p: np.ndarray) -> float:
        den = cross @ p + n0
        return float(np.sum(np.log1p(p * sig / den)) / _LN2)

    def gradient(p: np.ndarray) -> np.ndarray:
        den = cross @ p + n0
        gam = p * sig / den
        w = 1.0 / (1.0 + gam)
        t = w * p * sig / den**2
        return (w * sig / den - cross.T @ t) / _LN2

    starts = [np.full(k, p_max / k)]
    if np.any(sig > 0):
        starts.append(water_filling(sig, p_max, n0).power_vector())
    for j in range(k):
        vertex = np.zeros(k)
        vertex[j] = p_max
        starts.append(vertex)

    best_p, best_f, converged = None, -np.inf, False
    for p in starts:
        p, f, ok = _spg_ascent(p.copy(), objective, gradient, p_max, tol)
        if f > best_f:
            best_p, best_f = p, f
        converged = converged or ok

    p_uni = np.full(k, p_max / k)
    if objective(p_uni) > best_f:
        best_p = p_uni
    best_p = _project_simplex(best_p, p_max)
    prec = Precoder(np.diag(np.sqrt(best_p)).astype(complex), kind="diagonal-power", budget=p_max)
    return prec, converged


def _spg_ascent(p, objective, gradient, p_max, tol, max_iter=10_000):
    """Projected gradient ascent with spectral trial steps and Armijo
    backtracking; stops on the projected-gradient norm."""
    f = objective(p)
    g = gradient(p)
    step = p_max / max(float(np.max(np.abs(g))), 1e-300)
    for _ in range(max_iter):
        ref = p_max / max(float(np.max(np.abs(g))), 1e-300)
        if float(np.linalg.norm(_project_simplex(p + ref * g, p_max) - p)) <= tol:
            return p, f, True
        d = _project_simplex(p + step * g, p_max) - p
        gd = float(np.dot(g, d))
        if gd <= 0 or not np.any(d):
            return p, f, True  # no ascent direction in the feasible cone
        alpha, f_cand = 1.0, f
        while alpha > 1e-16:
            cand = p + alpha * d
            f_cand = objective(cand)
            if f_cand >= f + 1e-4 * alpha * gd:
                break
            alpha *= 0.5
        if f_cand <= f and alpha <= 1e-16:
            return p, f, True  # flat at float resolution
        p_new = p + alpha * d
        g_new = gradient(p_new)
        s = p_new - p
        y = g_new - g
        curv = -float(np.dot(s, y))  # positive where the objective is concave
        step = float(np.dot(s, s)) / curv if curv > 1e-300 else 10.0 * step
        step = float(np.clip(step, 1e-10 * ref, 1e10 * ref))
        p, f, g = p_new, f_cand, g_new
    return p, f, False
