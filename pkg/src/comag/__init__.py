"""comag: hybrid NV-diamond / Rb-vapor comagnetometer toolkit.

Sensor models for the two magnetometers, the closed-form minimal-correction
fusion estimator, background-field calibration, and the Monte-Carlo
improvement studies, with a CLI front end (``comag``).
"""

from .estimator import (
    AngularUncertainty,
    CalibrationSet,
    CombinedEstimate,
    angular_uncertainty,
    batch_combined,
    calibrate_background,
    combined_estimate,
    correction_vector,
    working_point_estimate,
)
from .geometry import (
    AXIS_LABELS,
    AxisProjection,
    FieldVector,
    OrientationBasis,
    ZERO_FIELD,
    default_basis,
    project_field,
    propagate_axis_uncertainty,
    recover_field,
    recovery_matrix,
    select_best_axes,
)
from .measurement import (
    DEFAULT_BIAS,
    GAMMA_NV,
    GAMMA_RB,
    GyromagneticRatio,
    LiaParams,
    LiaSignal,
    MeasurementPair,
    OdmrFit,
    OdmrParams,
    OdmrSpectrum,
    fit_lia,
    fit_odmr,
    larmor_shift,
    lia_sensitivity,
    nv_measure,
    odmr_sensitivity,
    rb_measure,
    synth_lia,
    synth_odmr,
)
from .simulation import (
    ImprovementMap,
    MarginalProfile,
    ScalarDemoReport,
    SimConfig,
    SpatialScanConfig,
    SpatialScanReport,
    angular_error_map,
    marginal_improvement,
    orthogonality_map,
    run_grid_simulation,
    scalar_vs_vector_demo,
    spatial_scan_sim,
    sweep_calibration_error,
)

__version__ = "0.1.0"

__all__ = [
    "AXIS_LABELS",
    "AngularUncertainty",
    "AxisProjection",
    "CalibrationSet",
    "CombinedEstimate",
    "DEFAULT_BIAS",
    "FieldVector",
    "GAMMA_NV",
    "GAMMA_RB",
    "GyromagneticRatio",
    "ImprovementMap",
    "LiaParams",
    "LiaSignal",
    "MarginalProfile",
    "MeasurementPair",
    "OdmrFit",
    "OdmrParams",
    "OdmrSpectrum",
    "OrientationBasis",
    "ScalarDemoReport",
    "SimConfig",
    "SpatialScanConfig",
    "SpatialScanReport",
    "ZERO_FIELD",
    "angular_error_map",
    "angular_uncertainty",
    "batch_combined",
    "calibrate_background",
    "combined_estimate",
    "correction_vector",
    "default_basis",
    "fit_lia",
    "fit_odmr",
    "larmor_shift",
    "lia_sensitivity",
    "marginal_improvement",
    "nv_measure",
    "odmr_sensitivity",
    "orthogonality_map",
    "project_field",
    "propagate_axis_uncertainty",
    "rb_measure",
    "recover_field",
    "recovery_matrix",
    "run_grid_simulation",
    "scalar_vs_vector_demo",
    "select_best_axes",
    "spatial_scan_sim",
    "sweep_calibration_error",
    "synth_lia",
    "synth_odmr",
    "working_point_estimate",
    "__version__",
]
