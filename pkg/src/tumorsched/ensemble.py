"""Discrete probability measures over the tumor-parameter space.

An ensemble is a finite list of parameter tuples with probability weights.
The member order is part of the value: all weighted reductions run in
member-index order, so results are identical across runs and worker
counts. The grids used in the reference experiments discretize the
resistant proliferation rate into 25 nodes starting at 0.5 with step 0.02
and the initial resistant fraction into 49 nodes starting at 0.002 with
step 0.002, giving a 1225-member product measure with uniform weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import TumorParams
from .errors import ConfigurationError

__all__ = [
    "GridSpec",
    "EnsembleMeasure",
    "uniform_grid",
    "product_measure",
    "paper_ensemble",
    "PAPER_D_D",
    "PAPER_D_T",
    "PAPER_R_R_GRID",
    "PAPER_F_0_GRID",
]

PAPER_D_D = 1.5
PAPER_D_T = 0.0

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """One uniform, endpoint-inclusive marginal discretization."""

    lo: float
    hi: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ConfigurationError(f"count must be >= 1, got {self.count}")
        if self.lo > self.hi:
            raise ConfigurationError(f"lo must not exceed hi, got [{self.lo}, {self.hi}]")
        if self.count == 1 and self.lo != self.hi:
            raise ConfigurationError("a single-node grid requires lo == hi")


def uniform_grid(spec: GridSpec) -> np.ndarray:
    """`count` equispaced nodes including both endpoints (weight 1/count each)."""
    if spec.count == 1:
        return np.array([spec.lo])
    return np.linspace(spec.lo, spec.hi, spec.count)


# Marginal grids of the reference experiments: 25 nodes at spacing 0.02 for
# the resistant proliferation rate, 49 nodes at spacing 0.002 for the initial
# resistant fraction.
PAPER_R_R_GRID = GridSpec(0.5, 0.98, 25)
PAPER_F_0_GRID = GridSpec(0.002, 0.098, 49)


@dataclass(frozen=True)
class EnsembleMeasure:
    """Ordered members with probability weights summing to 1."""

    members: tuple[TumorParams, ...]
    weights: np.ndarray
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.members) == 0:
            raise ConfigurationError("ensemble must contain at least one member")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.members),):
            raise ConfigurationError(
                f"got {len(self.members)} members but {w.shape} weights")
        if np.any(w < 0.0):
            raise ConfigurationError("weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > _WEIGHT_SUM_TOL:
            raise ConfigurationError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.members)

    def param_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Member fields as four parallel arrays (d_D, d_T, r_R, f_0)."""
        if not self._arrays:
            cols = np.array([(m.d_D, m.d_T, m.r_R, m.f_0) for m in self.members]).T
            for c in cols:
                c.setflags(write=False)
            self._arrays["cols"] = tuple(cols)
        return self._arrays["cols"]

    def to_json(self) -> str:
        payload = {
            "members": [
                {"d_D": m.d_D, "d_T": m.d_T, "r_R": m.r_R, "f_0": m.f_0}
                for m in self.members
            ],
            "weights": [float(w) for w in self.weights],
        }
        return json.dumps(payload)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @staticmethod
    def from_json(text: str) -> "EnsembleMeasure":
        try:
            payload = json.loads(text)
            members = tuple(
                TumorParams(d_D=m["d_D"], d_T=m["d_T"], r_R=m["r_R"], f_0=m["f_0"])
                for m in payload["members"]
            )
            weights = np.array(payload["weights"], dtype=float)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"malformed ensemble JSON: {exc}") from exc
        return EnsembleMeasure(members=members, weights=weights)

    @staticmethod
    def load(path: str | Path) -> "EnsembleMeasure":
        return EnsembleMeasure.from_json(Path(path).read_text())


def product_measure(d_D_nodes, d_T_nodes, r_R_nodes, f_0_nodes) -> EnsembleMeasure:
    """Tensor-product measure over four marginal node lists.

    Support is enumerated lexicographically with d_D outermost and f_0
    innermost; every member carries the product weight 1 / (total count).
    """
    lists = [np.atleast_1d(np.asarray(v, dtype=float))
             for v in (d_D_nodes, d_T_nodes, r_R_nodes, f_0_nodes)]
    for name, v in zip(("d_D", "d_T", "r_R", "f_0"), lists):
        if v.size == 0:
            raise ConfigurationError(f"{name} node list is empty")
    members = tuple(
        TumorParams(d_D=float(a), d_T=float(b), r_R=float(c), f_0=float(d))
        for a in lists[0] for b in lists[1] for c in lists[2] for d in lists[3]
    )
    n = len(members)
    return EnsembleMeasure(members=members, weights=np.full(n, 1.0 / n))


def paper_ensemble() -> EnsembleMeasure:
    """The 1225-member product measure of the reference experiments.

    d_D and d_T are fixed at 1.5 and 0; r_R runs over 25 nodes with
    spacing 0.02 from 0.5 and f_0 over 49 nodes with spacing 0.002 from
    0.002, all with uniform weights.
    """
    r_r = uniform_grid(PAPER_R_R_GRID)
    f_0 = uniform_grid(PAPER_F_0_GRID)
    return product_measure([PAPER_D_D], [PAPER_D_T], r_r, f_0)
