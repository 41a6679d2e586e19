"""Two-to-infinity norm subspace tests calibrated by extreme-value theory."""

from __future__ import annotations

from .debias import (
    DebiasInput,
    PluginCalibration,
    calibration_from_singular_values,
    debias_singular_values,
    plugin_calibration,
    plugin_statistic,
    theta_location,
    uncorrected_statistic,
)
from .errors import (
    AmbiguousMultiplicityError,
    BelowBulkEdgeError,
    InvalidInputError,
    MisalignedHypothesesError,
    NonConvergenceError,
    QuadratureError,
    RankRequestError,
    SingularAlignmentError,
    SubspaceEvtError,
)
from .evt import (
    EvtCalibration,
    GenGamma,
    aligned_distance,
    calibrate,
    compute_lambdas,
    detect_multiplicity,
    gengamma_survival,
    gumbel_cdf,
    gumbel_quantile,
    ks_distance_to_gumbel,
    normalizing_sequences,
    oracle_statistic,
    tail_constant_A,
)
from .generate import (
    NoiseSpec,
    Seed,
    SignalSpec,
    generate_noise,
    generate_signal,
    make_alternative_interpolated,
    make_alternative_rowflip,
)
from .harness import ExperimentConfig, ExperimentResult, builtin_experiments, emit_outputs, run_experiment
from .linalg import SpectralTriple, read_matrix, sign_align, truncated_svd, two_inf_norm, write_matrix
from .saddlepoint import (
    QuadFormSpec,
    cgf,
    cgf_d1,
    cgf_d2,
    exact_cdf_quadform,
    saddle_point,
    saddlepoint_density,
    tail_ratio_to_A,
)
from .testing import (
    OracleMode,
    PluginMode,
    TestReport,
    frobenius_statistic,
    frobenius_test,
    row_discrepancy,
    test_subspace,
    validate_hypothesis,
)

__version__ = "0.1.0"
