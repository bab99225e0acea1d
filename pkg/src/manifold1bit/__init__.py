"""Recovery of manifold-structured signals from one-bit noise-shaped
compressed-sensing measurements.

The pieces, bottom up: random sensing ensembles (:mod:`.ensembles`),
one-bit noise-shaping quantizers (:mod:`.quantizers`), condensation
operators and their pseudo-metric (:mod:`.condense`), a geometric
multi-resolution analysis of the signal manifold (:mod:`.gmra`), the
two-step recovery algorithm (:mod:`.recover`) and an experiment engine
with a CLI (:mod:`.harness`, :mod:`.cli`).
"""

from .condense import Condenser, build_condenser, condense, msq_condenser, pseudo_distance
from .ensembles import BOE, GAUSSIAN, PCE, Ensemble, apply, boe_transform, materialize, sample_ensemble
from .gmra import (
    ApproximationStats,
    Gmra,
    GmraBuildError,
    GmraBuildParams,
    GmraFormatError,
    GmraLevel,
    GmraValidationReport,
    GmraVersionError,
    LevelStats,
    approximation_error,
    build_gmra,
    load_gmra,
    nearest_center,
    nearest_centers,
    project,
    save_gmra,
    validate_gmra,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    WidthEstimate,
    emit_csv,
    estimate_gaussian_width,
    parse_config,
    parse_scheme,
    run_experiment,
    sample_manifold,
    snap_lambda,
)
from .quantizers import (
    QuantizationResult,
    QuantizerSpec,
    beta_spec,
    msq_spec,
    quantize,
    quantize_bits,
    sigma_delta_spec,
    state_matrix,
    verify_state_relation,
)
from .recover import (
    LsqiSolution,
    RecoveryResult,
    reconstruct,
    reconstruct_msq_baseline,
    select_center,
    solve_tangent_lsqi,
)

__version__ = "0.1.0"

__all__ = [
    "ApproximationStats", "BOE", "Condenser", "Ensemble", "ExperimentConfig",
    "GAUSSIAN", "Gmra", "GmraBuildError", "GmraBuildParams", "GmraFormatError",
    "GmraLevel", "GmraValidationReport", "GmraVersionError", "LevelStats",
    "LsqiSolution", "PCE", "QuantizationResult", "QuantizerSpec",
    "RecoveryResult", "ResultRow", "WidthEstimate", "apply",
    "approximation_error", "beta_spec", "boe_transform", "build_condenser",
    "build_gmra", "condense", "emit_csv", "estimate_gaussian_width",
    "load_gmra", "materialize", "msq_condenser", "msq_spec", "nearest_center",
    "nearest_centers", "parse_config", "parse_scheme", "project", "quantize",
    "quantize_bits", "reconstruct", "reconstruct_msq_baseline",
    "run_experiment", "sample_ensemble", "sample_manifold", "save_gmra",
    "select_center", "sigma_delta_spec", "snap_lambda", "solve_tangent_lsqi",
    "state_matrix", "validate_gmra", "verify_state_relation",
]
