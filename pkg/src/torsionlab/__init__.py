"""torsionlab: combinatorial and analytic torsion on the circle.

Exact linear algebra for torsion and determinant-line metrics of finite
graded complexes, Thom-Smale complexes from Morse data, a spectral engine
for the deformed de Rham complex of flat bundles over the circle, and a
driver that sweeps the deformation, fits the large-deformation expansion
and compares the fitted coefficients against closed-form predictions.
"""

from .cochain import (
    BettiNumbers,
    DetLineLogNorm,
    GradedComplex,
    GradingOperators,
    SpectrumByDegree,
    betti,
    det_line_lognorm,
    euler_characteristics,
    laplacian,
    metric_identity_gap,
    milnor_log_norm,
    supertrace,
    torsion_log,
)
from .morse import (
    MorseData,
    build_thom_smale,
    deformed_milnor_lognorm_shift,
    milnor_torsion_log,
    tilde_chi_prime,
)
from .circle import CircleModel, normal_form_model, rotation_model, trivial_model
from .witten import (
    SpectralSplit,
    WittenOperators,
    discretize,
    smallest_positive_eigenvalue,
    spectral_split,
)
from .zeta import ZetaDet, rs_torsion_detail, rs_torsion_log, zeta_log_det
from .comparison import (
    metric_ratio_log,
    rs_metric_lognorm,
    standard_references,
    unstable_integration_map,
)
from .anomaly import (
    Prediction,
    PredictionInputs,
    f_euler_integral_2d,
    predict_coefficients,
    theta_form,
)
from .driver import FitResult, SweepConfig, compare, fit_expansion, sweep, verify_finite_suite
from .kernels import KERNEL_COMPILED, KERNEL_NAME

__version__ = "0.1.0"

__all__ = [
    "BettiNumbers",
    "CircleModel",
    "DetLineLogNorm",
    "FitResult",
    "GradedComplex",
    "GradingOperators",
    "KERNEL_COMPILED",
    "KERNEL_NAME",
    "MorseData",
    "Prediction",
    "PredictionInputs",
    "SpectralSplit",
    "SpectrumByDegree",
    "SweepConfig",
    "WittenOperators",
    "ZetaDet",
    "betti",
    "build_thom_smale",
    "compare",
    "deformed_milnor_lognorm_shift",
    "det_line_lognorm",
    "discretize",
    "euler_characteristics",
    "f_euler_integral_2d",
    "fit_expansion",
    "laplacian",
    "metric_identity_gap",
    "metric_ratio_log",
    "milnor_log_norm",
    "milnor_torsion_log",
    "normal_form_model",
    "predict_coefficients",
    "rotation_model",
    "rs_metric_lognorm",
    "rs_torsion_detail",
    "rs_torsion_log",
    "smallest_positive_eigenvalue",
    "spectral_split",
    "standard_references",
    "supertrace",
    "sweep",
    "theta_form",
    "tilde_chi_prime",
    "torsion_log",
    "trivial_model",
    "unstable_integration_map",
    "verify_finite_suite",
    "zeta_log_det",
]
