"""Running costs on the tumor size and the ensemble-averaged functional.

Two penalizations of the deviation d = n - n_0 are provided. The linear
cost d treats growth and shrinkage symmetrically. The hyperbolic cost

    sqrt(1 + d^2) - 1 + d

is asymmetric: growth beyond n_0 costs up to twice the linear rate while
shrinkage is rewarded at a rate that decays to zero, so stabilizing the
tumor is preferred over eradicating it. Both are smooth, increasing, and
convex, with the hyperbolic one bounded below by -1.

The functional averages the time integral of the running cost over the
ensemble, using the left-endpoint rectangle rule on the Euler grid so
that the discrete adjoint of `gradient` differentiates exactly this
quantity. The final state's cost is excluded by that convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ensemble import EnsembleMeasure
from .errors import ConfigurationError
from .simulate import ControlSchedule, TimeGrid, _check_fail, _initial_arrays

__all__ = [
    "CostKind",
    "linear_cost",
    "hyperbolic_cost",
    "running_cost",
    "running_cost_derivative",
    "evaluate_functional",
]

_TAGS = {"linear": _kernels.LINEAR, "hyperbolic": _kernels.HYPERBOLIC}


@dataclass(frozen=True)
class CostKind:
    """Cost family tag plus the reference size the deviation is taken from."""

    tag: str
    n_0: float

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ConfigurationError(f"unknown cost tag {self.tag!r}")
        if not (0.0 < self.n_0 < 1.0):
            raise ConfigurationError(f"n_0 must lie in (0, 1), got {self.n_0}")

    @property
    def kernel_id(self) -> int:
        return _TAGS[self.tag]


def linear_cost(n_0: float) -> CostKind:
    return CostKind("linear", n_0)


def hyperbolic_cost(n_0: float) -> CostKind:
    return CostKind("hyperbolic", n_0)


def running_cost(kind: CostKind, n):
    """Cost of total population n; accepts scalars or arrays."""
    d = np.asarray(n, dtype=float) - kind.n_0
    if kind.tag == "linear":
        out = d
    else:
        out = np.sqrt(1.0 + d * d) - 1.0 + d
    return out if out.ndim else float(out)


def running_cost_derivative(kind: CostKind, n):
    """d(cost)/dn, used by the adjoint pass."""
    d = np.asarray(n, dtype=float) - kind.n_0
    if kind.tag == "linear":
        out = np.ones_like(d)
    else:
        out = d / np.sqrt(1.0 + d * d) + 1.0
    return out if out.ndim else float(out)


def _functional_raw(ensemble: EnsembleMeasure, n_0: float, kind: CostKind,
                    grid: TimeGrid, values: np.ndarray) -> float:
    """Functional on raw control values, without the [0, 1] admissibility
    guard; the truncated fields keep it well defined for any values."""
    s0, r0 = _initial_arrays(ensemble, n_0)
    d_d, d_t, r_r, _ = ensemble.param_arrays()
    value, fail = _kernels.functional_stream(
        d_d, d_t, r_r, ensemble.weights, s0, r0,
        np.ascontiguousarray(values, dtype=float), grid.step,
        kind.kernel_id, kind.n_0)
    _check_fail(fail)
    return float(value)


def evaluate_functional(ensemble: EnsembleMeasure, n_0: float, kind: CostKind,
                        u: ControlSchedule) -> float:
    """Weighted average over members of sum_k dt * cost(n_k), k < n_steps."""
    return _functional_raw(ensemble, n_0, kind, u.grid, u.values)
