"""Discretely color-entangled photon pairs: forward simulation and restricted tomography."""

__version__ = "0.1.0"

from .qstate import (  # noqa: E402
    DensityMatrix,
    PhysicalityError,
    RestrictedColorState,
    StateVector4,
    concurrence_wootters,
    fidelity_with_pure,
    mub_overlap_check,
    purity,
    restricted_density_matrix,
    tangle,
    target_state,
)
from .source import (  # noqa: E402
    PolPairState,
    TuningCurve,
    coherence_time_from_bandwidth,
    default_tuning_curve,
    detuning_from_temperature,
    make_pol_state,
    wavelengths_from_detuning,
)
from .gate import GateOutput, PhotonPairKet, hybrid_gate, pbs_map, project_diagonal, restricted_params_from_ket  # noqa: E402
from .interference import BeatingModelParams, BeatingTrace, Spectrum, beating_probability, simulate_trace, synth_spectra  # noqa: E402
from .estimate import (  # noqa: E402
    FitError,
    FitResult,
    balance_from_counts,
    bootstrap_uncertainty,
    fit_beating,
    mub_set,
    reconstruct,
)
