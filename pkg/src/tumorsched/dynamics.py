"""Two-population tumor dynamics in non-dimensional form.

The state x = (s, r) collects the normalized sensitive and resistant
populations; n = s + r is the total tumor burden relative to the carrying
capacity. With a dosage control u(t) in [0, 1], the evolution is
control-affine,

    ds/dt = (1 - s - r) (1 - d_D u) s - d_T s
    dr/dt = r_R (1 - s - r) r - d_T r,

which splits into a drift field (the u-independent part) and a controlled
field (the factor multiplying u). Both fields are multiplied by a smooth
cutoff that is identically 1 on the ball of radius 2 and vanishes outside
the ball of radius 3, so that the truncated fields are globally Lipschitz
while the dynamics on the simplex

    Delta = {(s, r): s >= 0, r >= 0, s + r <= 1}

is untouched. Analytic state Jacobians of the truncated fields are
provided for adjoint computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "TumorParams",
    "TumorState",
    "normalize_parameters",
    "drift_field",
    "control_field",
    "cutoff",
    "cutoff_gradient",
    "truncated_fields",
    "field_jacobians",
]


@dataclass(frozen=True)
class TumorParams:
    """Non-dimensional model constants for one tumor.

    d_D: drug-induced kill coefficient (already rescaled; full dose u=1
        multiplies the sensitive growth term by 1 - d_D).
    d_T: cell turnover rate, normalized by the sensitive proliferation rate.
    r_R: resistant proliferation rate, normalized likewise.
    f_0: fraction of the initial population that is resistant, in [0, 1].
    """

    d_D: float
    d_T: float
    r_R: float
    f_0: float

    def __post_init__(self):
        for name in ("d_D", "d_T", "r_R", "f_0"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ConfigurationError(f"{name} must be finite and non-negative, got {v}")
        if self.f_0 > 1.0:
            raise ConfigurationError(f"f_0 must lie in [0, 1], got {self.f_0}")


@dataclass(frozen=True)
class TumorState:
    """Normalized population pair (s, r).

    Model-valid states lie in the simplex Delta, but any finite pair is
    accepted so the truncated fields can be evaluated everywhere.
    """

    s: float
    r: float

    @property
    def n(self) -> float:
        """Total population s + r."""
        return self.s + self.r

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.r])

    def in_simplex(self, tol: float = 0.0) -> bool:
        return self.s >= -tol and self.r >= -tol and self.s + self.r <= 1.0 + tol


def normalize_parameters(r_S: float, d_D_raw: float, d_T_raw: float,
                         r_R_raw: float, f_0: float) -> TumorParams:
    """Rescale dimensional rates by the sensitive proliferation rate r_S.

    The time unit becomes 1/r_S, so the per-day rates d_T_raw and r_R_raw
    are divided by r_S, while the dimensionless kill fraction doubles
    (full dose removes the fraction 2*d_D_raw of sensitive growth).
    """
    if not (r_S > 0.0):
        raise ConfigurationError(f"r_S must be positive, got {r_S}")
    for name, v in (("d_D_raw", d_D_raw), ("d_T_raw", d_T_raw), ("r_R_raw", r_R_raw)):
        if v < 0.0:
            raise ConfigurationError(f"{name} must be non-negative, got {v}")
    return TumorParams(d_D=2.0 * d_D_raw, d_T=d_T_raw / r_S, r_R=r_R_raw / r_S, f_0=f_0)


def drift_field(theta: TumorParams, x: TumorState) -> np.ndarray:
    """Uncontrolled part of the vector field (u = 0 dynamics), untruncated."""
    free = 1.0 - x.s - x.r
    return np.array([free * x.s - theta.d_T * x.s,
                     theta.r_R * free * x.r - theta.d_T * x.r])


def control_field(theta: TumorParams, x: TumorState) -> np.ndarray:
    """Field multiplying the dosage u: drug removes sensitive growth only."""
    free = 1.0 - x.s - x.r
    return np.array([-theta.d_D * free * x.s, 0.0])


def _smoothstep5(t: float) -> float:
    # quintic smoothstep: S(0)=0, S(1)=1, S'=S''=0 at both ends
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep5_deriv(t: float) -> float:
    return 30.0 * t * t * (1.0 - t) * (1.0 - t)


def cutoff(x: TumorState) -> float:
    """C^2 radial cutoff: 1 on |x| <= 2, 0 on |x| >= 3, monotone between.

    Implemented as a quintic smoothstep in w = |x|^2, constant outside
    4 <= w <= 9, so it has a closed-form gradient.
    """
    w = x.s * x.s + x.r * x.r
    if w <= 4.0:
        return 1.0
    if w >= 9.0:
        return 0.0
    return 1.0 - _smoothstep5((w - 4.0) / 5.0)


def cutoff_gradient(x: TumorState) -> np.ndarray:
    """Gradient of the cutoff with respect to (s, r)."""
    w = x.s * x.s + x.r * x.r
    if w <= 4.0 or w >= 9.0:
        return np.zeros(2)
    dq_dw = -_smoothstep5_deriv((w - 4.0) / 5.0) / 5.0
    return dq_dw * np.array([2.0 * x.s, 2.0 * x.r])


def truncated_fields(theta: TumorParams, x: TumorState) -> tuple[np.ndarray, np.ndarray]:
    """Cutoff-scaled (drift, control) pair; equals the raw fields on Delta."""
    rho = cutoff(x)
    return rho * drift_field(theta, x), rho * control_field(theta, x)


def _raw_jacobians(theta: TumorParams, x: TumorState) -> tuple[np.ndarray, np.ndarray]:
    s, r = x.s, x.r
    j0 = np.array([
        [1.0 - 2.0 * s - r - theta.d_T, -s],
        [-theta.r_R * r, theta.r_R * (1.0 - s - 2.0 * r) - theta.d_T],
    ])
    j1 = np.array([
        [-theta.d_D * (1.0 - 2.0 * s - r), theta.d_D * s],
        [0.0, 0.0],
    ])
    return j0, j1


def field_jacobians(theta: TumorParams, x: TumorState) -> tuple[np.ndarray, np.ndarray]:
    """State Jacobians of the truncated (drift, control) fields.

    Product rule over the cutoff: D(rho F) = rho DF + F (grad rho)^T.
    Inside the radius-2 ball this reduces to the raw Jacobians.
    """
    j0, j1 = _raw_jacobians(theta, x)
    rho = cutoff(x)
    if rho == 1.0:
        return j0, j1
    grad_rho = cutoff_gradient(x)
    f0 = drift_field(theta, x)
    f1 = control_field(theta, x)
    return (rho * j0 + np.outer(f0, grad_rho),
            rho * j1 + np.outer(f1, grad_rho))
