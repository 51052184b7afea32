import numpy as np
import pytest

from tumorsched import (ConfigurationError, TumorParams, TumorState,
                        control_field, cutoff, drift_field, field_jacobians,
                        normalize_parameters, truncated_fields)

THETA_FIG = TumorParams(d_D=1.5, d_T=0.0, r_R=0.66, f_0=0.01)


def test_normalize_parameters_reference_values():
    theta = normalize_parameters(0.027, 0.75, 0.0, 0.01782, 0.01)
    assert theta.d_D == 1.5
    assert theta.d_T == 0.0
    assert theta.r_R == pytest.approx(0.66, abs=1e-15)
    assert theta.f_0 == 0.01


def test_normalize_parameters_zero_and_unit_cases():
    assert normalize_parameters(0.027, 0, 0, 0, 0) == TumorParams(0, 0, 0, 0)
    theta = normalize_parameters(1.0, 0.3, 0.2, 0.9, 0.5)
    assert (theta.d_D, theta.d_T, theta.r_R, theta.f_0) == (0.6, 0.2, 0.9, 0.5)


def test_normalize_parameters_rejects_bad_rs():
    with pytest.raises(ConfigurationError):
        normalize_parameters(0.0, 0.75, 0.0, 0.0178, 0.01)
    with pytest.raises(ConfigurationError):
        normalize_parameters(-1.0, 0.75, 0.0, 0.0178, 0.01)


def test_params_invariants():
    with pytest.raises(ConfigurationError):
        TumorParams(d_D=-0.1, d_T=0.0, r_R=0.5, f_0=0.0)
    with pytest.raises(ConfigurationError):
        TumorParams(d_D=1.5, d_T=0.0, r_R=0.5, f_0=1.5)
    with pytest.raises(ConfigurationError):
        TumorParams(d_D=float("nan"), d_T=0.0, r_R=0.5, f_0=0.0)


def test_drift_field_vanishes_at_capacity():
    theta = TumorParams(1.5, 0.0, 1.0, 0.0)
    np.testing.assert_array_equal(drift_field(theta, TumorState(0.5, 0.5)), [0.0, 0.0])


def test_drift_field_hand_value():
    np.testing.assert_allclose(
        drift_field(THETA_FIG, TumorState(0.5, 0.0)), [0.25, 0.0], rtol=0, atol=0)


def test_drift_field_axis_invariance():
    theta = TumorParams(1.5, 0.3, 0.7, 0.0)
    for r in (0.0, 0.2, 0.9):
        f = drift_field(theta, TumorState(0.0, r))
        assert f[0] == 0.0
        assert f[1] == pytest.approx(0.7 * (1 - r) * r - 0.3 * r)


def test_control_field_values():
    np.testing.assert_array_equal(
        control_field(THETA_FIG, TumorState(0.5, 0.5)), [0.0, 0.0])
    np.testing.assert_allclose(
        control_field(THETA_FIG, TumorState(0.5, 0.0)), [-0.375, 0.0], rtol=0, atol=0)
    np.testing.assert_array_equal(
        control_field(THETA_FIG, TumorState(0.0, 0.3)), [0.0, 0.0])


def test_cutoff_plateau_and_support():
    assert cutoff(TumorState(0.5, 0.5)) == 1.0
    assert cutoff(TumorState(3.0, 3.0)) == 0.0
    assert cutoff(TumorState(2.0, 0.0)) == 1.0  # |x| = 2 still on the plateau
    assert cutoff(TumorState(3.0, 0.0)) == 0.0


def test_cutoff_transition_value():
    # |x| = 2.5: independent evaluation of the quintic profile in w = |x|^2
    w = 2.5 ** 2
    t = (w - 4.0) / 5.0
    expected = 1.0 - (6 * t**5 - 15 * t**4 + 10 * t**3)
    got = cutoff(TumorState(2.5, 0.0))
    assert 0.0 < got < 1.0
    assert got == pytest.approx(expected, rel=1e-14)


def test_cutoff_monotone_in_radius():
    radii = np.linspace(2.0, 3.0, 101)
    values = [cutoff(TumorState(rad, 0.0)) for rad in radii]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_cutoff_c1_seams():
    # derivative continuity at |x|^2 = 4 and 9: value flat to second order
    for w_seam in (4.0, 9.0):
        rad = np.sqrt(w_seam)
        inner = cutoff(TumorState(rad - 1e-7, 0.0))
        outer = cutoff(TumorState(rad + 1e-7, 0.0))
        assert abs(inner - outer) < 1e-12


def test_truncated_equals_raw_on_simplex():
    rng = np.random.default_rng(7)
    theta = TumorParams(1.5, 0.2, 0.8, 0.0)
    for _ in range(50):
        s = rng.uniform(0, 1)
        r = rng.uniform(0, 1 - s)
        x = TumorState(s, r)
        f0, f1 = truncated_fields(theta, x)
        np.testing.assert_array_equal(f0, drift_field(theta, x))
        np.testing.assert_array_equal(f1, control_field(theta, x))


def test_truncated_vanishes_outside_support():
    theta = TumorParams(1.5, 0.0, 0.66, 0.0)
    f0, f1 = truncated_fields(theta, TumorState(4.0, 4.0))
    np.testing.assert_array_equal(f0, [0.0, 0.0])
    np.testing.assert_array_equal(f1, [0.0, 0.0])


def test_truncated_fields_reference_point():
    f0, f1 = truncated_fields(THETA_FIG, TumorState(0.5, 0.0))
    np.testing.assert_allclose(f0, [0.25, 0.0], rtol=0, atol=0)
    np.testing.assert_allclose(f1, [-0.375, 0.0], rtol=0, atol=0)


def _fd_jacobian(field, x, h=1e-6):
    cols = []
    for ds, dr in ((h, 0.0), (0.0, h)):
        up = field(TumorState(x.s + ds, x.r + dr))
        down = field(TumorState(x.s - ds, x.r - dr))
        cols.append((up - down) / (2 * h))
    return np.column_stack(cols)


def test_field_jacobians_match_finite_differences():
    rng = np.random.default_rng(42)
    theta = TumorParams(1.5, 0.15, 0.8, 0.0)
    for _ in range(100):
        radius = rng.uniform(0.0, 4.0)
        angle = rng.uniform(0.0, 2 * np.pi)
        x = TumorState(radius * np.cos(angle), radius * np.sin(angle))
        j0, j1 = field_jacobians(theta, x)
        j0_fd = _fd_jacobian(lambda y: truncated_fields(theta, y)[0], x)
        j1_fd = _fd_jacobian(lambda y: truncated_fields(theta, y)[1], x)
        scale = 1.0 + max(np.abs(j0).max(), np.abs(j1).max())
        assert np.abs(j0 - j0_fd).max() / scale < 1e-6
        assert np.abs(j1 - j1_fd).max() / scale < 1e-6


def test_drift_jacobian_at_origin():
    theta = TumorParams(1.5, 0.2, 0.7, 0.0)
    j0, _ = field_jacobians(theta, TumorState(0.0, 0.0))
    np.testing.assert_allclose(j0, [[0.8, 0.0], [0.0, 0.5]], rtol=0, atol=1e-15)


def test_control_jacobian_second_row_zero():
    rng = np.random.default_rng(3)
    theta = TumorParams(1.5, 0.0, 0.9, 0.0)
    for _ in range(20):
        s, r = rng.uniform(-1.2, 1.2, 2)  # inside the radius-2 plateau
        _, j1 = field_jacobians(theta, TumorState(s, r))
        np.testing.assert_array_equal(j1[1], [0.0, 0.0])


def test_state_helpers():
    x = TumorState(0.3, 0.2)
    assert x.n == 0.5
    assert x.in_simplex()
    assert not TumorState(0.9, 0.2).in_simplex()
    assert not TumorState(-0.01, 0.2).in_simplex()
