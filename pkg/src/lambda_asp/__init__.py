"""Fixation probabilities under Beta-coalescent reproduction with moderate
selection: forward population model, Lambda-ancestral selection process,
their sampling duality and drift bounds on the stationary mean.
"""

__version__ = "0.1.0"

from .asp import ASPChain, BSVariantChain, StationaryDist, pi_N_dual, simulate_asp, stationary_distribution
from .duality import duality_gap, duality_report, falling_factorial_ratio, transient_distribution
from .errors import (
    ConfigurationError,
    DomainError,
    LambdaASPError,
    NoRootError,
    NumericalCheckError,
    SizeError,
)
from .forward import (
    build_frequency_generator,
    fixation_prob_exact,
    fixation_prob_mc,
    neutral_config_rate,
    simulate_forward,
)
from .lyapunov import lower_bound_check, sandwich_report, upper_bound_check
from .model import (
    DerivedConstants,
    ModelParams,
    asymptotic_pi,
    bs_heuristic_pi,
    d_N_root,
    derive_constants,
)
from .offspring import build_offspring_law, c_tilde, gen_fn_selective, gen_fn_tilde, gw_survival
from .rates import q_rate
