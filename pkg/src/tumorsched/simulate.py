"""Forward integration and time-to-progression outcomes.

Time is handled on a uniform Euler grid. The non-dimensional step is
r_S / steps_per_day, so one simulation day always spans `steps_per_day`
nodes and node times convert to days exactly. Progression of a tumor is
declared at 120% of the initial size n_0:

  * ttp is the day of the first node with n >= 1.2 n_0;
  * ttp' is the day of the first node of the final excursion above the
    threshold, i.e. one node past the last node with n <= 1.2 n_0.

Both are censored at the horizon when the respective event never occurs.
For a trajectory that crosses the threshold once and stays above, the two
coincide; in general ttp <= ttp'. A record is flagged censored when the
final state still sits at or below the threshold, so the reported ttp'
is the horizon rather than an observed event.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .dynamics import TumorParams, TumorState
from .ensemble import EnsembleMeasure
from .errors import ConfigurationError, NumericalFailureError

__all__ = [
    "DEFAULT_R_S",
    "DEFAULT_STEPS_PER_DAY",
    "TimeGrid",
    "ControlSchedule",
    "Trajectory",
    "OutcomeRecord",
    "BenchmarkSummary",
    "Protocol",
    "initial_state",
    "euler_forward",
    "run_protocol",
    "compute_outcome",
    "benchmark",
    "trajectory_to_csv",
    "outcomes_to_csv",
]

DEFAULT_R_S = 0.027  # sensitive-cell proliferation rate, per day
DEFAULT_STEPS_PER_DAY = 8
PROGRESSION_FACTOR = 1.2


@dataclass(frozen=True)
class TimeGrid:
    """Uniform Euler grid: non-dimensional step, step count, day scale."""

    step: float
    n_steps: int
    r_S: float = DEFAULT_R_S

    def __post_init__(self):
        if not (self.step > 0.0):
            raise ConfigurationError(f"step must be positive, got {self.step}")
        if self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be >= 1, got {self.n_steps}")
        if not (self.r_S > 0.0):
            raise ConfigurationError(f"r_S must be positive, got {self.r_S}")

    @staticmethod
    def from_days(horizon_days: float, steps_per_day: int = DEFAULT_STEPS_PER_DAY,
                  r_S: float = DEFAULT_R_S) -> "TimeGrid":
        if not (horizon_days > 0.0):
            raise ConfigurationError(f"horizon_days must be positive, got {horizon_days}")
        if steps_per_day < 1:
            raise ConfigurationError(f"steps_per_day must be >= 1, got {steps_per_day}")
        n_steps = int(round(horizon_days * steps_per_day))
        if n_steps < 1:
            raise ConfigurationError("horizon shorter than one step")
        return TimeGrid(step=r_S / steps_per_day, n_steps=n_steps, r_S=r_S)

    @property
    def horizon(self) -> float:
        """Non-dimensional final time."""
        return self.step * self.n_steps

    @property
    def day_step(self) -> float:
        return self.step / self.r_S

    @property
    def horizon_days(self) -> float:
        return self.n_steps * self.day_step

    def days(self) -> np.ndarray:
        """Node times in days, including the final node."""
        return np.arange(self.n_steps + 1) * self.day_step


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant dosage in [0, 1]; value k holds on node interval k."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != (self.grid.n_steps,):
            raise ConfigurationError(
                f"schedule needs {self.grid.n_steps} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("schedule values must be finite")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ConfigurationError("schedule values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @staticmethod
    def constant(grid: TimeGrid, value: float) -> "ControlSchedule":
        return ControlSchedule(grid, np.full(grid.n_steps, float(value)))

    def save(self, path: str | Path) -> None:
        import json

        payload = {"step_days": self.grid.day_step,
                   "values": [float(v) for v in self.values]}
        Path(path).write_text(json.dumps(payload) + "\n")

    @staticmethod
    def load(path: str | Path, r_S: float = DEFAULT_R_S) -> "ControlSchedule":
        import json

        try:
            payload = json.loads(Path(path).read_text())
            step_days = float(payload["step_days"])
            values = np.array(payload["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed schedule JSON: {exc}") from exc
        grid = TimeGrid(step=step_days * r_S, n_steps=values.size, r_S=r_S)
        return ControlSchedule(grid, values)


@dataclass(frozen=True)
class Trajectory:
    """States at all nodes plus the control realized on each interval."""

    grid: TimeGrid
    states: np.ndarray          # (n_steps + 1, 2)
    applied_control: np.ndarray  # (n_steps,)

    def __post_init__(self):
        if self.states.shape != (self.grid.n_steps + 1, 2):
            raise ConfigurationError("states shape inconsistent with grid")
        if self.applied_control.shape != (self.grid.n_steps,):
            raise ConfigurationError("control length inconsistent with grid")

    @property
    def s(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def r(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def n(self) -> np.ndarray:
        return self.states[:, 0] + self.states[:, 1]


@dataclass(frozen=True)
class OutcomeRecord:
    ttp_days: float
    ttp_prime_days: float
    censored: bool
    member_index: int


@dataclass(frozen=True)
class BenchmarkSummary:
    """Extremes and weighted means of TTP and TTP' in days."""

    max_ttp: float
    min_ttp: float
    mean_ttp: float
    max_ttp_prime: float
    min_ttp_prime: float
    mean_ttp_prime: float
    n_censored: int


class Protocol(enum.Enum):
    MTD = "mtd"
    ON_OFF_AT = "onoff-at"
    OFF_ON_AT = "offon-at"

    @staticmethod
    def from_name(name: str) -> "Protocol":
        for p in Protocol:
            if p.value == name:
                return p
        raise ConfigurationError(f"unknown protocol {name!r}")


def initial_state(theta: TumorParams, n_0: float) -> TumorState:
    """Split the initial size n_0 into (sensitive, resistant) via f_0."""
    if not (0.0 < n_0 < 1.0):
        raise ConfigurationError(f"n_0 must lie in (0, 1), got {n_0}")
    return TumorState(s=(1.0 - theta.f_0) * n_0, r=theta.f_0 * n_0)


def _initial_arrays(ensemble: EnsembleMeasure, n_0: float) -> tuple[np.ndarray, np.ndarray]:
    if not (0.0 < n_0 < 1.0):
        raise ConfigurationError(f"n_0 must lie in (0, 1), got {n_0}")
    _, _, _, f0 = ensemble.param_arrays()
    return (1.0 - f0) * n_0, f0 * n_0


def _check_fail(fail_step: int) -> None:
    if fail_step >= 0:
        raise NumericalFailureError(
            f"non-finite state at Euler step {fail_step}", step=fail_step)


def euler_forward(theta: TumorParams, x0: TumorState, u: ControlSchedule) -> Trajectory:
    """Explicit Euler rollout of one member under an open-loop schedule."""
    if not x0.in_simplex():
        raise ConfigurationError(f"initial state {x0} lies outside the simplex")
    grid = u.grid
    S = np.empty((grid.n_steps + 1, 1))
    R = np.empty((grid.n_steps + 1, 1))
    fail = _kernels.forward_store(
        np.array([theta.d_D]), np.array([theta.d_T]), np.array([theta.r_R]),
        np.array([x0.s]), np.array([x0.r]), u.values, grid.step, S, R)
    _check_fail(fail)
    states = np.column_stack([S[:, 0], R[:, 0]])
    return Trajectory(grid=grid, states=states, applied_control=u.values.copy())


_PROTOCOL_NEVER_LO = -1.0  # n >= 0 always, so treatment never switches off
_PROTOCOL_NEVER_HI = 2.0   # n <= 1 always, so vacation never ends


def _protocol_bounds(protocol: Protocol, n_0: float) -> tuple[bool, float, float]:
    """(start in treatment, switch-off level, switch-on level)."""
    if protocol is Protocol.MTD:
        return True, _PROTOCOL_NEVER_LO, _PROTOCOL_NEVER_HI
    if protocol is Protocol.ON_OFF_AT:
        return True, 0.5 * n_0, n_0
    return False, 0.5 * n_0, PROGRESSION_FACTOR * n_0


def run_protocol(theta: TumorParams, n_0: float, protocol: Protocol,
                 grid: TimeGrid) -> Trajectory:
    """Feedback rollout: the protocol guard is checked at every node."""
    x0 = initial_state(theta, n_0)
    start_treat, lo, hi = _protocol_bounds(protocol, n_0)
    S = np.empty(grid.n_steps + 1)
    R = np.empty(grid.n_steps + 1)
    u_out = np.empty(grid.n_steps)
    fail = _kernels.protocol_trajectory(
        theta.d_D, theta.d_T, theta.r_R, x0.s, x0.r, grid.n_steps, grid.step,
        start_treat, lo, hi, S, R, u_out)
    _check_fail(fail)
    return Trajectory(grid=grid, states=np.column_stack([S, R]), applied_control=u_out)


def _records_from_trackers(grid: TimeGrid, first_ge: np.ndarray,
                           last_le: np.ndarray) -> list[OutcomeRecord]:
    day = grid.day_step
    horizon_days = grid.n_steps * day
    records = []
    for i in range(first_ge.size):
        censored_ttp = first_ge[i] < 0
        ttp = horizon_days if censored_ttp else first_ge[i] * day
        censored = last_le[i] >= grid.n_steps
        ttp_prime = horizon_days if censored else (last_le[i] + 1) * day
        records.append(OutcomeRecord(ttp_days=float(ttp),
                                     ttp_prime_days=float(ttp_prime),
                                     censored=bool(censored),
                                     member_index=i))
    return records


def compute_outcome(traj: Trajectory, n_0: float, member_index: int = 0) -> OutcomeRecord:
    """TTP / TTP' of a single trajectory against the 1.2 n_0 threshold."""
    if not (0.0 < n_0 < 1.0):
        raise ConfigurationError(f"n_0 must lie in (0, 1), got {n_0}")
    threshold = PROGRESSION_FACTOR * n_0
    n = traj.n
    above = n >= threshold
    first_ge = int(np.argmax(above)) if above.any() else -1
    below = n <= threshold
    last_le = below.size - 1 - int(np.argmax(below[::-1])) if below.any() else -1
    rec = _records_from_trackers(
        traj.grid, np.array([first_ge]), np.array([last_le]))[0]
    return OutcomeRecord(rec.ttp_days, rec.ttp_prime_days, rec.censored, member_index)


def summarize(records: list[OutcomeRecord], weights: np.ndarray) -> BenchmarkSummary:
    ttp = np.array([r.ttp_days for r in records])
    ttpp = np.array([r.ttp_prime_days for r in records])
    return BenchmarkSummary(
        max_ttp=float(ttp.max()),
        min_ttp=float(ttp.min()),
        mean_ttp=float(np.add.reduce(weights * ttp)),
        max_ttp_prime=float(ttpp.max()),
        min_ttp_prime=float(ttpp.min()),
        mean_ttp_prime=float(np.add.reduce(weights * ttpp)),
        n_censored=sum(r.censored for r in records),
    )


def benchmark(ensemble: EnsembleMeasure, n_0: float,
              protocol_or_schedule: Protocol | ControlSchedule,
              grid: TimeGrid | None = None,
              ) -> tuple[list[OutcomeRecord], BenchmarkSummary]:
    """Per-member outcomes (in member order) plus summary statistics."""
    if isinstance(protocol_or_schedule, ControlSchedule):
        schedule = protocol_or_schedule
        if grid is not None and grid != schedule.grid:
            raise ConfigurationError("benchmark grid differs from the schedule grid")
        grid = schedule.grid
    elif grid is None:
        raise ConfigurationError("a protocol benchmark needs an explicit grid")

    s0, r0 = _initial_arrays(ensemble, n_0)
    d_d, d_t, r_r, _ = ensemble.param_arrays()
    n_members = len(ensemble)
    first_ge = np.empty(n_members, dtype=np.int64)
    last_le = np.empty(n_members, dtype=np.int64)
    threshold = PROGRESSION_FACTOR * n_0
    if isinstance(protocol_or_schedule, ControlSchedule):
        fail = _kernels.outcomes_schedule(
            d_d, d_t, r_r, s0, r0, protocol_or_schedule.values, grid.step,
            threshold, first_ge, last_le)
    else:
        start_treat, lo, hi = _protocol_bounds(protocol_or_schedule, n_0)
        fail = _kernels.outcomes_protocol(
            d_d, d_t, r_r, s0, r0, grid.n_steps, grid.step,
            start_treat, lo, hi, threshold, first_ge, last_le)
    _check_fail(fail)
    records = _records_from_trackers(grid, first_ge, last_le)
    return records, summarize(records, ensemble.weights)


def trajectory_to_csv(traj: Trajectory, path: str | Path) -> None:
    """Plot-ready node rows; the final row repeats the last control value."""
    days = traj.grid.days()
    u = traj.applied_control
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "s", "r", "n", "u"])
        for k in range(days.size):
            uk = u[min(k, u.size - 1)] if u.size else 0.0
            writer.writerow([repr(float(days[k])), repr(float(traj.states[k, 0])),
                             repr(float(traj.states[k, 1])),
                             repr(float(traj.states[k, 0] + traj.states[k, 1])),
                             repr(float(uk))])


def outcomes_to_csv(records: list[OutcomeRecord], ensemble: EnsembleMeasure,
                    path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["member_index", "d_D", "d_T", "r_R", "f_0",
                         "ttp_days", "ttp_prime_days", "censored"])
        for rec in records:
            m = ensemble.members[rec.member_index]
            writer.writerow([rec.member_index, repr(m.d_D), repr(m.d_T),
                             repr(m.r_R), repr(m.f_0), repr(rec.ttp_days),
                             repr(rec.ttp_prime_days), int(rec.censored)])
