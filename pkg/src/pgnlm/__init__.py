"""Guided nonlocal means estimation of PolSAR covariance matrices.

The estimator works directly on single-look complex target vectors: each
pixel's 3x3 covariance matrix is a weighted average of outer products from
a nonlocal search window, with patch dissimilarities in the SAR and
optical-guide domains selecting and weighting the predictors. The package
also ships the percentile calibration, a speckle simulator with known
ground truth, quality metrics, a small cross-validation harness, binary
raster containers and a CLI tying them together.
"""

from .analysis import (
    FEATURE_NAMES,
    crossval_classify,
    enl,
    extract_features,
    group_kfold_indices,
    kfold_indices,
    matrix_error,
    write_fold_csv,
    write_report_json,
)
from .calibration import (
    CalibrationResult,
    calibrate,
    diagonal_sample_positions,
    random_sample_positions,
)
from .containers import (
    KIND_COVARIANCE,
    KIND_GUIDE,
    KIND_LABELS,
    KIND_SLC,
    ContainerError,
    read_container,
    read_expected,
    write_container,
)
from .core import (
    DEFAULT_BORDER,
    Patch,
    as_covariance_field,
    as_guide_image,
    as_scattering_image,
    covariance_to_real9,
    is_hermitian_psd,
    min_eigenvalues,
    optical_patch_dissim,
    outer_product,
    pad_image,
    patch_offsets,
    pgnlm_weight,
    polsar_patch_dissim,
    real9_to_covariance,
    vector_dissim,
)
from .estimator import (
    EstimatorDiagnostics,
    PgnlmConfig,
    boxcar,
    estimate_image,
    estimate_pixel,
    normalize_dissim,
    predictor_detail,
    select_predictors,
)
from .simulator import (
    SCENE_NAMES,
    SceneSpec,
    builtin_scenes,
    generate_scene,
    read_scene_metadata,
    sample_target_vector,
    write_scene_metadata,
)

__version__ = "0.1.0"
