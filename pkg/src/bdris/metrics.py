"""Performance evaluation: per-user SINR, sum rate, nulling residual and
the signal/interference/total power split of the equivalent channel.

SINR values are linear; dB conversion belongs to the presentation layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, equivalent_channel, vec
from .precoding import Precoder
from .scattering import as_theta

_LN2 = np.log(2.0)


def sinr_per_user(cs: ChannelSet, theta, precoder: Precoder, n0: float) -> np.ndarray:
    """gamma_k = |[EP]_kk|^2 / (sum_{i != k} |[EP]_ki|^2 + n0)."""
    e = equivalent_channel(cs, as_theta(theta))
    c = np.abs(e @ precoder.P) ** 2
    sig = np.diag(c).copy()
    off = c * (1.0 - np.eye(c.shape[0]))
    return sig / (off.sum(axis=1) + n0)


def sum_rate(sinr) -> float:
    """sum_k log2(1 + gamma_k), evaluated with log1p for tiny SINRs."""
    g = np.asarray(sinr, dtype=float)
    if np.any(g < 0):
        raise ValueError("SINR values must be nonnegative")
    return float(np.sum(np.log1p(g)) / _LN2)


@dataclass(frozen=True)
class PowerSplit:
    signal_power_sum: float        # sum_k p_k |e_kk|^2
    interference_power_sum: float  # sum_k sum_{i != k} p_i |e_ki|^2
    frob_power: float              # ||E||_F^2


def power_decomposition(cs: ChannelSet, theta, p) -> PowerSplit:
    """Split the equivalent-channel power under per-stream powers p.

    With p = 1 the signal and interference sums partition ||E||_F^2.
    """
    e = equivalent_channel(cs, as_theta(theta))
    p = np.asarray(p, dtype=float)
    c = np.abs(e) ** 2
    signal = float(np.sum(p * np.diag(c)))
    off = c * (1.0 - np.eye(c.shape[0]))
    interference = float(np.sum(off @ p))
    return PowerSplit(signal, interference, float(c.sum()))


def nulling_residual(cs: ChannelSet, theta) -> float:
    """Squared norm of the nulling condition; equals the off-diagonal
    squared Frobenius mass of the equivalent channel."""
    r = cs.A_bar.T @ vec(as_theta(theta))
    return float(np.real(np.vdot(r, r)))


@dataclass(frozen=True)
class PerformanceReport:
    sinr: np.ndarray
    sum_rate: float
    signal_power_sum: float
    interference_power_sum: float
    frob_power: float
    null_residual: float

    @classmethod
    def for_diagonal_power(
        cls, cs: ChannelSet, theta, p, n0: float
    ) -> "PerformanceReport":
        p = np.asarray(p, dtype=float)
        prec = Precoder(
            np.diag(np.sqrt(p)).astype(complex),
            kind="diagonal-power",
            budget=float(p.sum()),
        )
        gam = sinr_per_user(cs, theta, prec, n0)
        split = power_decomposition(cs, theta, p)
        return cls(
            sinr=gam,
            sum_rate=sum_rate(gam),
            signal_power_sum=split.signal_power_sum,
            interference_power_sum=split.interference_power_sum,
            frob_power=split.frob_power,
            null_residual=nulling_residual(cs, theta),
        )
