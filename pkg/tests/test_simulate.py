import csv

import numpy as np
import pytest

from tumorsched import (ConfigurationError, ControlSchedule, EnsembleMeasure,
                        NumericalFailureError, Protocol, TimeGrid, TumorParams,
                        benchmark, compute_outcome, euler_forward,
                        initial_state, product_measure, run_protocol)
from tumorsched.simulate import outcomes_to_csv, trajectory_to_csv

R_S = 0.027
THETA_FIG = TumorParams(1.5, 0.0, 0.66, 0.01)


def paper_grid(days):
    return TimeGrid.from_days(days)


def logistic(n0, tau):
    e = np.exp(tau)
    return n0 * e / (1.0 - n0 + n0 * e)


def test_time_grid_paper_step():
    grid = paper_grid(10)
    assert grid.step == pytest.approx(3.375e-3, rel=0, abs=0)
    assert grid.n_steps == 80
    assert grid.day_step == 0.125
    assert grid.horizon_days == 10.0


def test_time_grid_validation():
    with pytest.raises(ConfigurationError):
        TimeGrid(step=0.0, n_steps=10)
    with pytest.raises(ConfigurationError):
        TimeGrid.from_days(-1.0)
    with pytest.raises(ConfigurationError):
        TimeGrid.from_days(10.0, steps_per_day=0)


def test_initial_state_split():
    x = initial_state(THETA_FIG, 0.5)
    assert x.s == pytest.approx(0.495, abs=1e-16)
    assert x.r == pytest.approx(0.005, abs=1e-17)
    assert initial_state(TumorParams(1.5, 0, 0.7, 0.0), 0.3) == \
        initial_state(TumorParams(1.5, 0, 0.7, 0.0), 0.3)
    x0 = initial_state(TumorParams(1.5, 0, 0.7, 0.0), 0.3)
    assert (x0.s, x0.r) == (0.3, 0.0)
    x1 = initial_state(TumorParams(1.5, 0, 0.7, 1.0), 0.3)
    assert (x1.s, x1.r) == (0.0, 0.3)


def test_initial_state_rejects_bad_n0():
    for n0 in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ConfigurationError):
            initial_state(THETA_FIG, n0)


def test_schedule_validation():
    grid = paper_grid(1)
    with pytest.raises(ConfigurationError):
        ControlSchedule(grid, np.full(grid.n_steps, 1.5))
    with pytest.raises(ConfigurationError):
        ControlSchedule(grid, np.full(grid.n_steps + 1, 0.5))
    with pytest.raises(ConfigurationError):
        ControlSchedule(grid, np.full(grid.n_steps, np.nan))


def test_capacity_manifold_is_stationary():
    # with zero turnover both fields vanish on s + r = 1
    grid = paper_grid(5)
    theta = TumorParams(1.5, 0.0, 0.8, 0.5)
    from tumorsched.dynamics import TumorState

    traj = euler_forward(theta, TumorState(0.25, 0.75),
                         ControlSchedule.constant(grid, 0.7))
    np.testing.assert_array_equal(traj.states[-1], traj.states[0])


def test_euler_matches_logistic_closed_form():
    # f_0 = 0, u = 0, d_T = 0: total population follows the logistic exactly
    n0 = 0.5
    theta = TumorParams(1.5, 0.0, 0.66, 0.0)
    grid = TimeGrid(step=R_S / 8, n_steps=int(np.ceil(10.0 / (R_S / 8))))
    assert grid.horizon >= 10.0
    traj = euler_forward(theta, initial_state(theta, n0),
                         ControlSchedule.constant(grid, 0.0))
    tau = np.arange(grid.n_steps + 1) * grid.step
    # measured envelope of first-order Euler at this stepsize is ~1.6e-4,
    # peaking near the inflection; the error contracts to ~1e-6 by tau = 10
    np.testing.assert_allclose(traj.n, logistic(n0, tau), rtol=0, atol=2e-4)
    assert abs(traj.n[-1] - logistic(n0, tau[-1])) < 1e-4
    np.testing.assert_array_equal(traj.r, 0.0)


def test_axes_are_exactly_invariant():
    grid = paper_grid(30)
    theta = TumorParams(1.5, 0.1, 0.8, 0.0)
    from tumorsched.dynamics import TumorState

    u = ControlSchedule.constant(grid, 0.4)
    on_r_axis = euler_forward(theta, TumorState(0.0, 0.4), u)
    np.testing.assert_array_equal(on_r_axis.s, 0.0)
    on_s_axis = euler_forward(theta, TumorState(0.4, 0.0), u)
    np.testing.assert_array_equal(on_s_axis.r, 0.0)


def test_euler_rejects_outside_simplex_start():
    grid = paper_grid(1)
    from tumorsched.dynamics import TumorState

    with pytest.raises(ConfigurationError):
        euler_forward(THETA_FIG, TumorState(0.9, 0.2),
                      ControlSchedule.constant(grid, 0.0))


def test_euler_numerical_failure_names_step():
    # extreme turnover overflows an intermediate before truncation engages
    grid = paper_grid(1)
    theta = TumorParams(1.5, 1e160, 0.8, 0.01)
    with pytest.raises(NumericalFailureError) as err:
        euler_forward(theta, initial_state(theta, 0.5),
                      ControlSchedule.constant(grid, 0.0))
    assert err.value.step >= 1


def test_mtd_equals_full_dose_schedule():
    grid = paper_grid(100)
    traj_protocol = run_protocol(THETA_FIG, 0.5, Protocol.MTD, grid)
    traj_open = euler_forward(THETA_FIG, initial_state(THETA_FIG, 0.5),
                              ControlSchedule.constant(grid, 1.0))
    np.testing.assert_array_equal(traj_protocol.states, traj_open.states)
    np.testing.assert_array_equal(traj_protocol.applied_control, 1.0)


def test_onoff_switches_at_guards():
    n0 = 0.5
    grid = paper_grid(600)
    traj = run_protocol(THETA_FIG, n0, Protocol.ON_OFF_AT, grid)
    u = traj.applied_control
    n = traj.n
    assert set(np.unique(u)) == {0.0, 1.0}
    switches = np.nonzero(np.diff(u) != 0)[0] + 1
    assert switches.size >= 2  # at least one full treatment/vacation cycle
    for k in switches:
        if u[k] == 0.0:  # treatment ended at node k
            assert n[k] <= 0.5 * n0
        else:            # vacation ended at node k
            assert n[k] >= n0


def test_offon_starts_in_vacation():
    traj = run_protocol(THETA_FIG, 0.5, Protocol.OFF_ON_AT, paper_grid(400))
    assert traj.applied_control[0] == 0.0
    first_on = np.argmax(traj.applied_control == 1.0)
    assert traj.n[first_on] >= 1.2 * 0.5


def test_outcome_censored_when_flat():
    grid = paper_grid(10)
    theta = TumorParams(2.0, 0.0, 0.8, 0.0)  # d_D u = 1 freezes growth at u = 0.5
    traj = euler_forward(theta, initial_state(theta, 0.5),
                         ControlSchedule.constant(grid, 0.5))
    rec = compute_outcome(traj, 0.5)
    assert rec.censored
    assert rec.ttp_days == rec.ttp_prime_days == 10.0


def test_outcome_logistic_crossing():
    theta = TumorParams(1.5, 0.0, 0.66, 0.0)
    grid = paper_grid(40)
    traj = euler_forward(theta, initial_state(theta, 0.5),
                         ControlSchedule.constant(grid, 0.0))
    rec = compute_outcome(traj, 0.5)
    expected = np.log(1.5) / R_S
    assert abs(rec.ttp_days - expected) <= grid.day_step + 1e-12
    assert rec.ttp_days == rec.ttp_prime_days  # single crossing
    assert not rec.censored


def test_outcome_invariant_ttp_le_ttp_prime():
    grid = paper_grid(1500)
    for protocol in Protocol:
        traj = run_protocol(THETA_FIG, 0.5, protocol, grid)
        rec = compute_outcome(traj, 0.5)
        assert rec.ttp_days <= rec.ttp_prime_days


def test_drug_never_helps_growth():
    # single population: full dose keeps the total pointwise below vacation
    theta = TumorParams(1.5, 0.0, 0.66, 0.0)
    grid = paper_grid(200)
    full = euler_forward(theta, initial_state(theta, 0.5),
                         ControlSchedule.constant(grid, 1.0))
    none = euler_forward(theta, initial_state(theta, 0.5),
                         ControlSchedule.constant(grid, 0.0))
    assert np.all(full.n <= none.n)


def test_benchmark_single_member_matches_trajectory():
    ens = product_measure([1.5], [0.0], [0.66], [0.01])
    grid = paper_grid(1000)
    records, summary = benchmark(ens, 0.5, Protocol.ON_OFF_AT, grid)
    assert len(records) == 1
    traj = run_protocol(THETA_FIG, 0.5, Protocol.ON_OFF_AT, grid)
    rec = compute_outcome(traj, 0.5)
    assert records[0].ttp_days == rec.ttp_days
    assert records[0].ttp_prime_days == rec.ttp_prime_days
    assert summary.mean_ttp == rec.ttp_days
    assert summary.max_ttp == summary.min_ttp == rec.ttp_days


def test_benchmark_schedule_grid_mismatch():
    ens = product_measure([1.5], [0.0], [0.66], [0.01])
    schedule = ControlSchedule.constant(paper_grid(10), 1.0)
    with pytest.raises(ConfigurationError):
        benchmark(ens, 0.5, schedule, grid=paper_grid(20))


def test_benchmark_records_in_member_order():
    ens = product_measure([1.5], [0.0], [0.5, 0.9], [0.01, 0.09])
    records, _ = benchmark(ens, 0.5, Protocol.MTD, paper_grid(1000))
    assert [r.member_index for r in records] == [0, 1, 2, 3]
    # faster resistant growth and larger resistant seed progress sooner
    assert records[3].ttp_days < records[0].ttp_days


def test_schedule_json_round_trip(tmp_path):
    grid = paper_grid(3)
    values = np.linspace(0.0, 1.0, grid.n_steps)
    schedule = ControlSchedule(grid, values)
    path = tmp_path / "schedule.json"
    schedule.save(path)
    back = ControlSchedule.load(path)
    assert back.grid == grid
    np.testing.assert_array_equal(back.values, values)


def test_trajectory_csv(tmp_path):
    traj = run_protocol(THETA_FIG, 0.5, Protocol.MTD, paper_grid(2))
    path = tmp_path / "traj.csv"
    trajectory_to_csv(traj, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["day", "s", "r", "n", "u"]
    assert len(rows) == traj.grid.n_steps + 2
    assert float(rows[1][0]) == 0.0
    assert float(rows[-1][0]) == 2.0
    assert float(rows[1][3]) == pytest.approx(0.5)


def test_outcomes_csv(tmp_path):
    ens = product_measure([1.5], [0.0], [0.5, 0.9], [0.01])
    records, _ = benchmark(ens, 0.5, Protocol.MTD, paper_grid(1000))
    path = tmp_path / "outcomes.csv"
    outcomes_to_csv(records, ens, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["member_index", "d_D"]
    assert len(rows) == 3
    assert float(rows[1][3]) == 0.5  # r_R of member 0
