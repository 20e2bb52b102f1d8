"""Quantum state tomography with physicality-correcting eigenvalue algorithms.

The package simulates or ingests projective measurement counts, reconstructs
density matrices by linear least squares, and repairs non-physical
reconstructions with four algorithms: uniform eigenvalue spreading (SGS), a
weighted eigenvalue redistribution driven by a fitted odd power series (EO),
direct likelihood maximization over a Cholesky-style parameterization (MLE),
and the iterative R-rho-R fixed point (iMLE). A derivation pipeline rebuilds
the EO weighting curve from scratch, and a benchmark harness compares the
algorithms on infidelity and runtime.
"""

from .density import (
    DensityMatrix,
    Spectrum,
    eigendecompose,
    fidelity,
    from_spectrum,
    infidelity,
    maximally_mixed,
    pure_state,
    purity,
)
from .stategen import (
    StateRecipe,
    mixed_state,
    random_pure_state,
    rank_deficient_state,
    solve_purity_param,
)
from .measurement import (
    CountRecord,
    ProjectorSet,
    born_probabilities,
    count_record_from_json_dict,
    count_record_to_json_dict,
    cube_projectors,
    load_count_record,
    pauli_basis,
    save_count_record,
    shots_for_total,
    simulate_counts,
)
from .reconstruction import linear_reconstruct
from .correction import (
    CorrectionReport,
    FitCurve,
    default_fit_curve,
    eo_correct,
    eo_step,
    eval_fit,
    imle_correct,
    load_fit_curve,
    loglike_cost,
    mle_correct,
    quadratic_cost,
    save_fit_curve,
    sgs_correct,
)
from .derivation import (
    DistanceProfile,
    aggregate_profiles,
    distance_cost,
    fit_odd_series,
    optimize_distances,
    profile_to_csv,
    scale_distances,
)
from .bench import (
    ExperimentConfig,
    TrialResult,
    loglog_slope,
    reconstruct_file,
    run_counts_sweep,
    run_derive_fit,
    run_purity_sweep,
    run_qubit_sweep,
)
from ._version import __version__

__all__ = [
    "DensityMatrix",
    "Spectrum",
    "eigendecompose",
    "from_spectrum",
    "pure_state",
    "maximally_mixed",
    "purity",
    "fidelity",
    "infidelity",
    "StateRecipe",
    "random_pure_state",
    "mixed_state",
    "rank_deficient_state",
    "solve_purity_param",
    "ProjectorSet",
    "CountRecord",
    "pauli_basis",
    "cube_projectors",
    "born_probabilities",
    "simulate_counts",
    "shots_for_total",
    "count_record_to_json_dict",
    "count_record_from_json_dict",
    "save_count_record",
    "load_count_record",
    "linear_reconstruct",
    "CorrectionReport",
    "FitCurve",
    "eval_fit",
    "default_fit_curve",
    "load_fit_curve",
    "save_fit_curve",
    "loglike_cost",
    "quadratic_cost",
    "sgs_correct",
    "eo_correct",
    "eo_step",
    "mle_correct",
    "imle_correct",
    "DistanceProfile",
    "optimize_distances",
    "distance_cost",
    "scale_distances",
    "aggregate_profiles",
    "profile_to_csv",
    "fit_odd_series",
    "ExperimentConfig",
    "TrialResult",
    "run_counts_sweep",
    "run_purity_sweep",
    "run_qubit_sweep",
    "run_derive_fit",
    "reconstruct_file",
    "loglog_slope",
    "__version__",
]
