"""Gradient of the discretized functional, with two independent oracles.

The production path is a discrete adjoint: reverse-mode differentiation
of the Euler rollout through stored states. For each member a covector
runs backward from (0, 0) at the final node, picking up the running-cost
derivative and the transposed step Jacobian; the sensitivity to the k-th
control value is the covector entering node k+1 paired with dt * F1(x_k).
Members are combined with their ensemble weights in index order.

`values` holds the plain partial derivatives of the discrete functional
with respect to the control entries, which is what central finite
differences of `evaluate_functional` produce. The Riesz representative
of the same differential in the L^2 inner product of piecewise-constant
functions (<a, b> = dt * sum_k a_k b_k) is `density()`, i.e. the partials
divided by the step length; that is the object the descent loop pairs
with a step size.

Two oracles verify the adjoint: entry-by-entry central differences, and a
forward variational pass that propagates the fundamental matrix of the
linearized dynamics and assembles the gradient from suffix sums. All
three differentiate the same discrete map, so they agree to roundoff.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .dynamics import TumorParams, field_jacobians, truncated_fields
from .ensemble import EnsembleMeasure
from .errors import ConfigurationError, NumericalFailureError
from .objective import CostKind, _functional_raw, running_cost_derivative
from .simulate import (ControlSchedule, TimeGrid, Trajectory, _check_fail,
                       _initial_arrays, euler_forward, initial_state)

__all__ = [
    "GradientVector",
    "adjoint_gradient",
    "variational_gradient",
    "finite_difference_gradient",
    "adjoint_states",
]


@dataclass(frozen=True)
class GradientVector:
    """Partial derivatives of the discrete functional, one per control entry."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_steps,):
            raise ConfigurationError(
                f"gradient needs {self.grid.n_steps} values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def density(self) -> np.ndarray:
        """L^2 Riesz representative: partials divided by the step length."""
        return self.values / self.grid.step

    def inf_norm(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def to_csv(self, path: str | Path) -> None:
        days = self.grid.days()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["day", "value"])
            for k in range(self.values.size):
                writer.writerow([repr(float(days[k])), repr(float(self.values[k]))])


def adjoint_gradient(ensemble: EnsembleMeasure, n_0: float, kind: CostKind,
                     u: ControlSchedule) -> GradientVector:
    """Exact gradient of the discrete functional via the batch adjoint pass."""
    grid = u.grid
    s0, r0 = _initial_arrays(ensemble, n_0)
    d_d, d_t, r_r, _ = ensemble.param_arrays()
    n_members = len(ensemble)
    S = np.empty((grid.n_steps + 1, n_members))
    R = np.empty((grid.n_steps + 1, n_members))
    fail = _kernels.forward_store(d_d, d_t, r_r, s0, r0, u.values, grid.step, S, R)
    _check_fail(fail)
    grad = np.empty(grid.n_steps)
    _kernels.adjoint_gradient(d_d, d_t, r_r, ensemble.weights, u.values,
                              grid.step, S, R, kind.kernel_id, kind.n_0, grad)
    return GradientVector(grid=grid, values=grad)


def _step_jacobian(theta: TumorParams, traj: Trajectory, k: int) -> np.ndarray:
    from .dynamics import TumorState

    x = TumorState(float(traj.states[k, 0]), float(traj.states[k, 1]))
    j0, j1 = field_jacobians(theta, x)
    return np.eye(2) + traj.grid.step * (j0 + traj.applied_control[k] * j1)


def variational_gradient(member: TumorParams, n_0: float, kind: CostKind,
                         u: ControlSchedule) -> GradientVector:
    """Forward-variational oracle for a single member.

    Propagates M_{k+1} = (I + dt DPhi_k) M_k from the identity, forms the
    suffix sums of dt * cost'(n_m) (1,1) M_m, and pairs them with
    M_{k+1}^{-1} dt F1(x_k). Verification-oriented: inverting M limits it
    to short horizons; the adjoint path is the production route.
    """
    from .dynamics import TumorState

    traj = euler_forward(member, initial_state(member, n_0), u)
    grid = u.grid
    n_steps = grid.n_steps
    M = np.empty((n_steps + 1, 2, 2))
    M[0] = np.eye(2)
    for k in range(n_steps):
        M[k + 1] = _step_jacobian(member, traj, k) @ M[k]
        if abs(np.linalg.det(M[k + 1])) < 1e-300:
            raise NumericalFailureError(
                f"singular variational matrix at step {k + 1}", step=k + 1)
    lp = running_cost_derivative(kind, traj.n[:-1])
    one_one = np.ones(2)
    suffix = np.zeros((n_steps + 1, 2))
    for m in range(n_steps - 1, -1, -1):
        suffix[m] = suffix[m + 1] + grid.step * lp[m] * (one_one @ M[m])
    grad = np.empty(n_steps)
    for k in range(n_steps):
        x = TumorState(float(traj.states[k, 0]), float(traj.states[k, 1]))
        _, f1 = truncated_fields(member, x)
        g_next = suffix[k + 1] @ np.linalg.inv(M[k + 1])
        grad[k] = g_next @ (grid.step * f1)
    return GradientVector(grid=grid, values=grad)


def finite_difference_gradient(ensemble: EnsembleMeasure, n_0: float,
                               kind: CostKind, u: ControlSchedule,
                               h: float = 1e-6) -> GradientVector:
    """Central differences of the functional, entry by entry.

    Probes u_k +/- h through the truncation-extended functional, so
    entries at the box boundary are handled without clipping.
    """
    if not (h > 0.0):
        raise ConfigurationError(f"h must be positive, got {h}")
    grid = u.grid
    base = np.array(u.values, dtype=float)
    grad = np.empty(grid.n_steps)
    for k in range(grid.n_steps):
        up = base.copy()
        up[k] += h
        down = base.copy()
        down[k] -= h
        j_up = _functional_raw(ensemble, n_0, kind, grid, up)
        j_down = _functional_raw(ensemble, n_0, kind, grid, down)
        grad[k] = (j_up - j_down) / (2.0 * h)
    return GradientVector(grid=grid, values=grad)


def adjoint_states(member: TumorParams, n_0: float, kind: CostKind,
                   u: ControlSchedule) -> np.ndarray:
    """Covector sequence of the discrete adjoint for one member.

    Returns an (n_steps + 1, 2) array; row k is the covector at node k.
    The final row is exactly (0, 0). Reference implementation in plain
    numpy, used to validate the batch kernel.
    """
    traj = euler_forward(member, initial_state(member, n_0), u)
    grid = u.grid
    lam = np.zeros((grid.n_steps + 1, 2))
    one_one = np.ones(2)
    lp = running_cost_derivative(kind, traj.n[:-1])
    for k in range(grid.n_steps - 1, -1, -1):
        a_k = _step_jacobian(member, traj, k)
        lam[k] = grid.step * lp[k] * one_one + lam[k + 1] @ a_k
    return lam
