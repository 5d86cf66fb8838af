"""One-bit quantizer design and weak-signal detection toolkit.

Computes the quantizer threshold that maximizes the asymptotic
detection performance of one-bit sensors in generalized Gaussian noise
whose bits cross a lossy binary channel, and validates the design with
GLRT/Rao Monte Carlo ROC experiments.
"""

__version__ = "0.1.0"

from .detection import (
    DetectionScenario,
    ObservationMatrix,
    SensorField,
    fisher_info,
    generate,
    glrt_stat,
    log_likelihood,
    ml_estimate,
    rao_stat,
    success_prob,
)
from .ggn import GGNParams
from .harness import (
    ExperimentConfig,
    RocCurve,
    SweepSpec,
    ThresholdPolicy,
    asymptotic_roc,
    empirical_roc,
    preset,
    verify_propositions,
)
from .objective import (
    CanonicalChannel,
    ChannelParams,
    UninformativeChannelError,
    bracket_points,
    canonicalize,
    gain,
    gain_deriv,
    sign_factor_terms,
)
from .optimizer import (
    ConvergenceError,
    ThresholdSolution,
    gradient_ascent,
    solve_threshold,
)

__all__ = [
    "__version__",
    "GGNParams",
    "ChannelParams",
    "CanonicalChannel",
    "UninformativeChannelError",
    "canonicalize",
    "gain",
    "gain_deriv",
    "sign_factor_terms",
    "bracket_points",
    "ThresholdSolution",
    "ConvergenceError",
    "solve_threshold",
    "gradient_ascent",
    "SensorField",
    "DetectionScenario",
    "ObservationMatrix",
    "generate",
    "success_prob",
    "log_likelihood",
    "ml_estimate",
    "glrt_stat",
    "rao_stat",
    "fisher_info",
    "ExperimentConfig",
    "ThresholdPolicy",
    "RocCurve",
    "SweepSpec",
    "empirical_roc",
    "asymptotic_roc",
    "verify_propositions",
    "preset",
]
