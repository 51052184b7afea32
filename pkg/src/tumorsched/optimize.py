"""Projections onto the admissible box and projected gradient descent.

The admissible set clamps every control entry to [0, 1]. Its tangent cone
at u keeps arbitrary directions at interior entries, non-negative ones
where u = 0 and non-positive ones where u = 1; boundary membership is
tested by exact comparison because clamped iterates land exactly on 0
and 1. Clamping u - eta g equals clamping u + eta times the cone
projection of -g, so the plain clamped update already performs
cone-projected descent.

The descent loop is the fixed-step scheme of the reference experiments:
u_{k+1} = clamp(u_k - eta * dJ(u_k)), 500 iterations from the unbiased
constant guess 0.5, no line search or momentum. The direction dJ is the
L^2 Riesz representative of the differential (see `gradient`), so eta
has the meaning of a time-density step and one value works across grid
resolutions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ensemble import EnsembleMeasure
from .errors import ConfigurationError, NumericalFailureError
from .gradient import GradientVector
from .objective import CostKind
from .simulate import ControlSchedule, TimeGrid, _check_fail, _initial_arrays

__all__ = [
    "DescentConfig",
    "DescentTrace",
    "project_box",
    "project_tangent_cone",
    "descent_step",
    "optimize",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DescentConfig:
    """Fixed-step projected descent settings (reference defaults)."""

    eta: float = 0.125
    iterations: int = 500
    initial_value: float = 0.5
    log_every: int = 50

    def __post_init__(self):
        if not (self.eta > 0.0):
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if self.iterations < 0:
            raise ConfigurationError(f"iterations must be >= 0, got {self.iterations}")
        if not (0.0 <= self.initial_value <= 1.0):
            raise ConfigurationError(
                f"initial control value must lie in [0, 1], got {self.initial_value}")


@dataclass(frozen=True)
class DescentTrace:
    """Per-iteration functional values and gradient norms, plus the result.

    objective_values[i] and grad_inf_norms[i] belong to the iterate
    *before* update i, so a zero-iteration run has empty arrays and
    returns the initial guess unchanged.
    """

    objective_values: np.ndarray
    grad_inf_norms: np.ndarray
    schedule: ControlSchedule


def project_box(values: np.ndarray) -> np.ndarray:
    """Entrywise clamp onto [0, 1]."""
    return np.clip(np.asarray(values, dtype=float), 0.0, 1.0)


def project_tangent_cone(u: ControlSchedule, values: np.ndarray) -> np.ndarray:
    """Project a direction onto the tangent cone of the box at u.

    Keeps only inward components at active bounds: max(v, 0) where u = 0,
    min(v, 0) where u = 1, v elsewhere. Bound activity uses exact
    comparison with 0 and 1.
    """
    v = np.asarray(values, dtype=float)
    if v.shape != u.values.shape:
        raise ConfigurationError(
            f"direction shape {v.shape} does not match schedule {u.values.shape}")
    out = v.copy()
    at_lower = u.values == 0.0
    at_upper = u.values == 1.0
    out[at_lower] = np.maximum(v[at_lower], 0.0)
    out[at_upper] = np.minimum(v[at_upper], 0.0)
    return out


def descent_step(u: ControlSchedule, grad: GradientVector, eta: float) -> ControlSchedule:
    """One projected update: clamp(u - eta * grad)."""
    if grad.grid != u.grid:
        raise ConfigurationError("gradient grid differs from the schedule grid")
    return ControlSchedule(u.grid, project_box(u.values - eta * grad.values))


def optimize(ensemble: EnsembleMeasure, n_0: float, kind: CostKind,
             grid: TimeGrid, cfg: DescentConfig = DescentConfig()) -> DescentTrace:
    """Fixed-step projected gradient descent on the ensemble functional.

    Deterministic given its inputs; every iterate is admissible. Raises
    NumericalFailureError naming the iteration if a forward pass produces
    a non-finite state.
    """
    s0, r0 = _initial_arrays(ensemble, n_0)
    d_d, d_t, r_r, _ = ensemble.param_arrays()
    n_members = len(ensemble)
    n_steps = grid.n_steps
    u = ControlSchedule.constant(grid, cfg.initial_value)
    S = np.empty((n_steps + 1, n_members))
    R = np.empty((n_steps + 1, n_members))
    grad_values = np.empty(n_steps)
    objective_values = np.empty(cfg.iterations)
    grad_norms = np.empty(cfg.iterations)
    # eta acts on the gradient density; fold the step length into the
    # coefficient so descent_step can consume the raw partials directly
    eta_effective = cfg.eta / grid.step
    for it in range(cfg.iterations):
        fail = _kernels.forward_store(d_d, d_t, r_r, s0, r0, u.values,
                                      grid.step, S, R)
        if fail >= 0:
            raise NumericalFailureError(
                f"non-finite state at iteration {it}, Euler step {fail}", step=fail)
        value = _kernels.functional_from_states(
            ensemble.weights, S, R, grid.step, kind.kernel_id, kind.n_0)
        _kernels.adjoint_gradient(d_d, d_t, r_r, ensemble.weights, u.values,
                                  grid.step, S, R, kind.kernel_id, kind.n_0,
                                  grad_values)
        grad = GradientVector(grid, grad_values.copy())
        objective_values[it] = value
        grad_norms[it] = grad.inf_norm()
        u = descent_step(u, grad, eta_effective)
        if cfg.log_every > 0 and it % cfg.log_every == 0:
            logger.info("iteration %d: J=%.6f |grad|_inf=%.3e",
                        it, value, grad_norms[it])
    return DescentTrace(objective_values=objective_values,
                        grad_inf_norms=grad_norms, schedule=u)
