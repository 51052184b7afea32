"""Ensemble optimal control of a two-population tumor model.

Forward Euler simulation over parameter ensembles, adjoint-based
gradients of an averaged running cost, projected gradient descent over
box-constrained dosage schedules, and time-to-progression benchmarking
of the computed policies against MTD and adaptive-therapy protocols.
"""

from .dynamics import (TumorParams, TumorState, control_field, cutoff,
                       drift_field, field_jacobians, normalize_parameters,
                       truncated_fields)
from .ensemble import (EnsembleMeasure, GridSpec, paper_ensemble,
                       product_measure, uniform_grid)
from .errors import ConfigurationError, NumericalFailureError
from .gradient import (GradientVector, adjoint_gradient, adjoint_states,
                       finite_difference_gradient, variational_gradient)
from .objective import (CostKind, evaluate_functional, hyperbolic_cost,
                        linear_cost, running_cost, running_cost_derivative)
from .optimize import (DescentConfig, DescentTrace, descent_step, optimize,
                       project_box, project_tangent_cone)
from .simulate import (BenchmarkSummary, ControlSchedule, OutcomeRecord,
                       Protocol, TimeGrid, Trajectory, benchmark,
                       compute_outcome, euler_forward, initial_state,
                       run_protocol)

__version__ = "0.1.0"

__all__ = [
    "TumorParams", "TumorState", "normalize_parameters", "drift_field",
    "control_field", "cutoff", "truncated_fields", "field_jacobians",
    "GridSpec", "EnsembleMeasure", "uniform_grid", "product_measure",
    "paper_ensemble",
    "TimeGrid", "ControlSchedule", "Trajectory", "OutcomeRecord",
    "BenchmarkSummary", "Protocol", "initial_state", "euler_forward",
    "run_protocol", "compute_outcome", "benchmark",
    "CostKind", "linear_cost", "hyperbolic_cost", "running_cost",
    "running_cost_derivative", "evaluate_functional",
    "GradientVector", "adjoint_gradient", "variational_gradient",
    "finite_difference_gradient", "adjoint_states",
    "DescentConfig", "DescentTrace", "project_box", "project_tangent_cone",
    "descent_step", "optimize",
    "ConfigurationError", "NumericalFailureError",
    "__version__",
]
