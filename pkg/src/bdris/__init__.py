"""Two-stage passive beamforming simulator for BD-RIS aided multiuser
MISO downlinks: scattering-matrix designs, base-station power control and
precoding, and a Monte-Carlo sweep harness with a CLI."""

from .channel import (
    ChannelSet,
    draw_channel_set,
    equivalent_channel,
    equivalent_channel_kron,
    pathloss,
    rng_stream,
    unit_variance_view,
)
from .config import SystemConfig, db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm
from .errors import DegenerateInputError, SingularityError
from .harness import (
    ExperimentSpec,
    Sweep,
    SweepResult,
    convergence_config,
    emit_csv,
    emit_json,
    run_decomposition,
    run_experiment,
    summarize,
)
from .metrics import (
    PerformanceReport,
    nulling_residual,
    power_decomposition,
    sinr_per_user,
    sum_rate,
)
from .precoding import (
    Precoder,
    bs_mrt_precoder,
    optimize_power_sumrate,
    uniform_power,
    water_filling,
    zf_precoder,
)
from .relays import RelayConfig, nmimo_relay_matrix, nmimo_sum_rate
from .scattering import (
    NullingTrace,
    ScatteringMatrix,
    ao_interference_nulling,
    dris_nulling,
    identity_scattering,
    maxF_scattering,
    maxl2_scattering,
    min_elements_for_nulling,
    mrt_relaxed,
    mrt_scattering,
    project_nulling,
    project_symmetric,
    project_symmetric_unitary,
    project_unitary,
    zf_relaxed_scattering,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
