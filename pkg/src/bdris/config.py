"""System configuration and dB/linear unit helpers.

All powers are stored in linear milliwatts; dBm and dB values are
converted at the config/CLI boundary only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def dbm_to_mw(dbm: float) -> float:
    return float(10.0 ** (np.asarray(dbm, dtype=float) / 10.0))


def mw_to_dbm(mw: float) -> float:
    if mw <= 0:
        raise ValueError(f"power must be positive, got {mw}")
    return float(10.0 * np.log10(mw))


def db_to_linear(db: float) -> float:
    return float(10.0 ** (np.asarray(db, dtype=float) / 10.0))


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError(f"value must be positive, got {x}")
    return float(10.0 * np.log10(x))


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of one experiment; the single source of truth.

    Defaults follow the common simulation setup: -30 dB reference
    pathloss at 1 m, exponent 2.2, -80 dBm noise, 50 m BS-RIS link and
    2.5 m RIS-user links.
    """

    K: int = 5                # users == BS antennas
    N: int = 64               # RIS elements
    p_max: float = 10.0 ** 0.5   # BS power budget, mW (5 dBm)
    n0: float = 1e-8          # noise power, mW (-80 dBm)
    c0: float = 1e-3          # reference pathloss at d0, linear (-30 dB)
    d0: float = 1.0           # reference distance, m
    rho: float = 2.2          # pathloss exponent
    d_bs_ris: float = 50.0    # m
    d_ris_user: float | tuple[float, ...] = 2.5  # m, scalar or one entry per user
    eps_rel: float = 1e-6     # AO stop: relative change of the nulling norm
    eps_null: float = 1e-6    # AO stop: squared nulling norm threshold
    max_iter: int = 10_000    # AO iteration cap; the tolerances stop converging runs far earlier
    seed: int = 1234          # root seed for all Monte-Carlo streams

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        for name in ("p_max", "n0", "c0", "d0", "rho", "d_bs_ris"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        d = np.atleast_1d(np.asarray(self.d_ris_user, dtype=float))
        if not np.all(d > 0):
            raise ValueError(f"d_ris_user must be positive, got {self.d_ris_user}")
        if d.size not in (1, self.K):
            raise ValueError(
                f"d_ris_user needs 1 or K={self.K} entries, got {d.size}"
            )
        if not self.eps_rel > 0:
            raise ValueError(f"eps_rel must be positive, got {self.eps_rel}")
        if not self.eps_null > 0:
            raise ValueError(f"eps_null must be positive, got {self.eps_null}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")

    def user_distances(self) -> np.ndarray:
        """RIS-user distances as a length-K vector (scalar broadcast)."""
        d = np.atleast_1d(np.asarray(self.d_ris_user, dtype=float))
        if d.size == 1:
            return np.full(self.K, d[0])
        return d.copy()
