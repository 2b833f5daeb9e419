"""greedypde: shallow ReLU^k network solutions of elliptic Dirichlet
problems, trained by the orthogonal greedy algorithm over a sequence of
penalized boundary sweeps."""

__version__ = "0.1.0"

from .problem import ProblemSpec, builtin_problem, pde_residual
from .quadrature import (QuadratureSet, build_quadrature, interior_rule,
                         boundary_rule, integrate, integrate_boundary)
from .dictionary import (Neuron, DictionaryGrid, relu_pow, relu_pow_prime,
                         unit_directions, bias_bound)
from .forms import Expansion, ConstantField, EnergyForm
from .oga import (GreedySolver, GreedyTrace, residual_correlation, select,
                  project, solve, DegenerateDictionaryError, ProjectionError)
from .uzawa import (UzawaState, StepRecord, penalty_parameter,
                    penalty_exponent, updated_multiplier,
                    multiplier_deviation, solve_uzawa, solve_penalty)
from .metrics import ErrorRecord, solution_errors, error_record, dyadic_rate
from .config import RunConfig, ConfigError, parse_config, validate_config, PRESETS
from .experiment import run_experiment, config_from_manifest

__all__ = [
    "ProblemSpec", "builtin_problem", "pde_residual",
    "QuadratureSet", "build_quadrature", "interior_rule", "boundary_rule",
    "integrate", "integrate_boundary",
    "Neuron", "DictionaryGrid", "relu_pow", "relu_pow_prime",
    "unit_directions", "bias_bound",
    "Expansion", "ConstantField", "EnergyForm",
    "GreedySolver", "GreedyTrace", "residual_correlation", "select",
    "project", "solve", "DegenerateDictionaryError", "ProjectionError",
    "UzawaState", "StepRecord", "penalty_parameter", "penalty_exponent",
    "updated_multiplier", "multiplier_deviation", "solve_uzawa",
    "solve_penalty",
    "ErrorRecord", "solution_errors", "error_record", "dyadic_rate",
    "RunConfig", "ConfigError", "parse_config", "validate_config", "PRESETS",
    "run_experiment", "config_from_manifest",
]
