"""Noiseless amplify-and-forward MIMO relay comparator with its own power
budget, in place of the reconfigurable surface."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import DegenerateInputError, SingularityError
from .metrics import sinr_per_user, sum_rate
from .precoding import Precoder

P_RELAY_36DBM_MW = 3981.0717055349725


@dataclass(frozen=True)
class RelayConfig:
    p_relay: float = P_RELAY_36DBM_MW  # relay budget, linear mW (36 dBm)
    mode: str = "zf"                   # 'zf' | 'mrt'

    def __post_init__(self) -> None:
        if not self.p_relay > 0:
            raise ValueError(f"p_relay must be positive, got {self.p_relay}")
        if self.mode not in ("zf", "mrt"):
            raise ValueError(f"mode must be 'zf' or 'mrt', got {self.mode!r}")


def relay_matrix_unnormalized(cs: ChannelSet, rc: RelayConfig) -> np.ndarray:
    """pinv(G) for zero-forcing relays, G^H for matched-filter relays."""
    if rc.mode == "zf":
        if np.linalg.matrix_rank(cs.G) < cs.K:
            raise SingularityError("cascaded channel G is rank deficient")
        return np.linalg.pinv(cs.G)
    return cs.G.conj().T


def nmimo_relay_matrix(cs: ChannelSet, rc: RelayConfig, precoder: Precoder) -> np.ndarray:
    """Relay weight matrix scaled to its expected output power budget.

    With unit-covariance symbols the relay transmits F W P s, so the
    budget constrains tr(F W P P^H W^H F^H) = p_relay.
    """
    f_un = relay_matrix_unnormalized(cs, rc)
    out = f_un @ cs.W @ precoder.P
    power = float(np.real(np.vdot(out, out)))
    if power == 0.0:
        raise DegenerateInputError("relay output power is zero")
    return f_un * np.sqrt(rc.p_relay / power)


def nmimo_sum_rate(cs: ChannelSet, rc: RelayConfig, precoder: Precoder, n0: float) -> float:
    """Sum rate with the relay matrix substituted for the scattering matrix."""
    f = nmimo_relay_matrix(cs, rc, precoder)
    return sum_rate(sinr_per_user(cs, f, precoder, n0))
