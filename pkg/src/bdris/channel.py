"""Rayleigh fading draws with large-scale pathloss and derived channel algebra.

Conventions: H is (K, N) with row k the RIS-to-user-k channel h_k^T,
W is (N, K) BS-to-RIS, the cascaded matrix is G = W @ H, and the
end-to-end channel for a scattering matrix T is E = H @ T @ W.
Vectorisation is column-major throughout, so vec(E) = A @ vec(T) with
A = kron(W.T, H).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


def pathloss(d, cfg: SystemConfig):
    """Distance-dependent large-scale gain c0 * (d/d0)^-rho (linear)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError(f"distance must be positive, got {d}")
    out = cfg.c0 * (d / cfg.d0) ** (-cfg.rho)
    return float(out) if out.ndim == 0 else out


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key); order-independent across workers."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


@dataclass(frozen=True)
class ChannelSet:
    """One fading realization plus every derived matrix the designs need.

    A_bar holds the K(K-1) interference columns w_k (x) h_kb (kb != k,
    grouped by BS antenna k, ascending kb) and A_check the K desired
    columns w_k (x) h_k; together they are a permutation of the rows
    of A. Immutable and safe to share across workers.
    """

    H: np.ndarray        # (K, N)
    W: np.ndarray        # (N, K)
    G: np.ndarray        # (N, N) = W @ H
    A: np.ndarray        # (K^2, N^2) = kron(W.T, H)
    A_bar: np.ndarray    # (N^2, K(K-1))
    A_check: np.ndarray  # (N^2, K)

    @classmethod
    def from_channels(cls, H: np.ndarray, W: np.ndarray) -> "ChannelSet":
        H = np.asarray(H, dtype=complex)
        W = np.asarray(W, dtype=complex)
        K, N = H.shape
        if W.shape != (N, K):
            raise ValueError(f"W must be {(N, K)}, got {W.shape}")
        G = W @ H
        A = np.kron(W.T, H)
        # kron of one BS-antenna column with one user row gives one row of A
        bar_cols = []
        check_cols = []
        for k in range(K):
            wk = W[:, k]
            for kb in range(K):
                col = np.kron(wk, H[kb, :])
                if kb == k:
                    check_cols.append(col)
                else:
                    bar_cols.append(col)
        A_bar = (
            np.stack(bar_cols, axis=1)
            if bar_cols
            else np.zeros((N * N, 0), dtype=complex)
        )
        A_check = np.stack(check_cols, axis=1)
        cs = cls(H=H, W=W, G=G, A=A, A_bar=A_bar, A_check=A_check)
        for arr in (cs.H, cs.W, cs.G, cs.A, cs.A_bar, cs.A_check):
            arr.setflags(write=False)
        return cs

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def N(self) -> int:
        return self.H.shape[1]


def _complex_gaussian(rng: np.random.Generator, shape, variance) -> np.ndarray:
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return np.sqrt(np.asarray(variance) / 2.0) * (re + 1j * im)


def draw_channel_set(cfg: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    """i.i.d. Rayleigh fading: entry variances set by the two pathloss legs.

    Pure function of (cfg, rng state); W is drawn before H.
    """
    var_w = pathloss(cfg.d_bs_ris, cfg)
    var_h = pathloss(cfg.user_distances(), cfg)  # (K,)
    W = _complex_gaussian(rng, (cfg.N, cfg.K), var_w)
    H = _complex_gaussian(rng, (cfg.K, cfg.N), var_h[:, None])
    return ChannelSet.from_channels(H, W)


def unit_variance_view(cs: ChannelSet, cfg: SystemConfig) -> ChannelSet:
    """The same fading draw with both pathloss legs scaled out.

    Scattering designs are invariant to channel scale, so running them
    on this view only re-calibrates absolute stopping thresholds.
    """
    var_w = pathloss(cfg.d_bs_ris, cfg)
    var_h = pathloss(cfg.user_distances(), cfg)
    H = cs.H / np.sqrt(var_h)[:, None]
    W = cs.W / np.sqrt(var_w)
    return ChannelSet.from_channels(H, W)


def equivalent_channel(cs: ChannelSet, theta: np.ndarray) -> np.ndarray:
    """E = H @ theta @ W, the (K, K) end-to-end channel."""
    theta = np.asarray(theta)
    if theta.shape != (cs.N, cs.N):
        raise ValueError(f"theta must be {(cs.N, cs.N)}, got {theta.shape}")
    return cs.H @ theta @ cs.W


def equivalent_channel_kron(cs: ChannelSet, theta: np.ndarray) -> np.ndarray:
    """Same as equivalent_channel but through A @ vec(theta); cross-check path."""
    theta = np.asarray(theta)
    if theta.shape != (cs.N, cs.N):
        raise ValueError(f"theta must be {(cs.N, cs.N)}, got {theta.shape}")
    return (cs.A @ vec(theta)).reshape((cs.K, cs.K), order="F")
