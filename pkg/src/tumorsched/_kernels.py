"""Compiled inner loops for batch Euler integration and adjoint passes.

All kernels run sequentially with member-index-ordered reductions, so
results are bit-identical across runs and independent of any threading at
the call site. Formulas mirror `dynamics`: the step uses the truncated
fields rho * (F0 + u F1), where rho == 1 whenever |x|^2 <= 4, which holds
for every state in the simplex. Kernels return the 1-based index of the
first Euler step that produced a non-finite state, or -1 on success.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LINEAR = 0
HYPERBOLIC = 1


@njit(cache=True, inline="always")
def _rho_of_w2(w2):
    # quintic smoothstep in w = |x|^2, constant outside 4 <= w <= 9
    if w2 >= 9.0:
        return 0.0
    t = (w2 - 4.0) / 5.0
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@njit(cache=True, inline="always")
def _drho_dw(w2):
    if w2 >= 9.0:
        return 0.0
    t = (w2 - 4.0) / 5.0
    return -30.0 * t * t * (1.0 - t) * (1.0 - t) / 5.0


@njit(cache=True, inline="always")
def _step(s, r, d_d, d_t, r_r, u, dt):
    """One Euler update with the truncated fields."""
    free = 1.0 - s - r
    f0s = free * s - d_t * s
    f0r = r_r * free * r - d_t * r
    f1s = -d_d * free * s
    w2 = s * s + r * r
    if w2 > 4.0:
        rho = _rho_of_w2(w2)
        f0s = rho * f0s
        f0r = rho * f0r
        f1s = rho * f1s
    return s + dt * (f0s + f1s * u), r + dt * f0r


@njit(cache=True, inline="always")
def _cost(kind, n, n0):
    d = n - n0
    if kind == LINEAR:
        return d
    return np.sqrt(1.0 + d * d) - 1.0 + d


@njit(cache=True, inline="always")
def _cost_deriv(kind, n, n0):
    if kind == LINEAR:
        return 1.0
    d = n - n0
    return d / np.sqrt(1.0 + d * d) + 1.0


@njit(cache=True)
def forward_store(d_d, d_t, r_r, s0, r0, u, dt, S, R):
    """Integrate all members under one shared schedule, storing every node."""
    n_steps = u.shape[0]
    n_members = s0.shape[0]
    for i in range(n_members):
        S[0, i] = s0[i]
        R[0, i] = r0[i]
    for k in range(n_steps):
        uk = u[k]
        for i in range(n_members):
            s, r = _step(S[k, i], R[k, i], d_d[i], d_t[i], r_r[i], uk, dt)
            if not (np.isfinite(s) and np.isfinite(r)):
                return k + 1
            S[k + 1, i] = s
            R[k + 1, i] = r
    return -1


@njit(cache=True)
def forward_store_per_member(d_d, d_t, r_r, s0, r0, u2, dt, S, R):
    """As `forward_store`, but with one control column per member."""
    n_steps = u2.shape[0]
    n_members = s0.shape[0]
    for i in range(n_members):
        S[0, i] = s0[i]
        R[0, i] = r0[i]
    for k in range(n_steps):
        for i in range(n_members):
            s, r = _step(S[k, i], R[k, i], d_d[i], d_t[i], r_r[i], u2[k, i], dt)
            if not (np.isfinite(s) and np.isfinite(r)):
                return k + 1
            S[k + 1, i] = s
            R[k + 1, i] = r
    return -1


@njit(cache=True)
def functional_stream(d_d, d_t, r_r, w, s0, r0, u, dt, kind, n0):
    """Weighted running cost, left-endpoint rule, without storing states.

    Returns (value, fail_step).
    """
    n_steps = u.shape[0]
    n_members = s0.shape[0]
    total = 0.0
    for i in range(n_members):
        s = s0[i]
        r = r0[i]
        acc = 0.0
        for k in range(n_steps):
            acc += dt * _cost(kind, s + r, n0)
            s, r = _step(s, r, d_d[i], d_t[i], r_r[i], u[k], dt)
            if not (np.isfinite(s) and np.isfinite(r)):
                return 0.0, k + 1
        total += w[i] * acc
    return total, -1


@njit(cache=True)
def functional_from_states(w, S, R, dt, kind, n0):
    """Running cost evaluated on stored forward states (left endpoints)."""
    n_steps = S.shape[0] - 1
    n_members = w.shape[0]
    total = 0.0
    for i in range(n_members):
        acc = 0.0
        for k in range(n_steps):
            acc += dt * _cost(kind, S[k, i] + R[k, i], n0)
        total += w[i] * acc
    return total


@njit(cache=True)
def adjoint_gradient(d_d, d_t, r_r, w, u, dt, S, R, kind, n0, grad):
    """Reverse pass through stored states; writes d(cost)/d(u_k) into grad.

    The covector recursion transposes the Euler step exactly, so the
    output matches central finite differences of the discrete functional
    to roundoff. The covector at the final node is (0, 0).
    """
    n_steps = u.shape[0]
    n_members = w.shape[0]
    lam_s = np.zeros(n_members)
    lam_r = np.zeros(n_members)
    for k in range(n_steps - 1, -1, -1):
        uk = u[k]
        acc = 0.0
        for i in range(n_members):
            s = S[k, i]
            r = R[k, i]
            free = 1.0 - s - r
            f1s = -d_d[i] * free * s
            # raw Jacobian entries of F0 + u F1
            j00 = (1.0 - 2.0 * s - r - d_t[i]) + uk * (-d_d[i] * (1.0 - 2.0 * s - r))
            j01 = -s + uk * (d_d[i] * s)
            j10 = -r_r[i] * r
            j11 = r_r[i] * (1.0 - s - 2.0 * r) - d_t[i]
            w2 = s * s + r * r
            if w2 > 4.0:
                rho = _rho_of_w2(w2)
                drho = _drho_dw(w2)
                grs = drho * 2.0 * s
                grr = drho * 2.0 * r
                f0s = free * s - d_t[i] * s
                f0r = r_r[i] * free * r - d_t[i] * r
                phi_s = f0s + uk * f1s
                j00 = rho * j00 + phi_s * grs
                j01 = rho * j01 + phi_s * grr
                j10 = rho * j10 + f0r * grs
                j11 = rho * j11 + f0r * grr
                f1s = rho * f1s
            # pairing with the covector entering node k+1
            acc += w[i] * lam_s[i] * (dt * f1s)
            lp = _cost_deriv(kind, s + r, n0)
            new_s = dt * lp + lam_s[i] * (1.0 + dt * j00) + lam_r[i] * (dt * j10)
            new_r = dt * lp + lam_s[i] * (dt * j01) + lam_r[i] * (1.0 + dt * j11)
            lam_s[i] = new_s
            lam_r[i] = new_r
        grad[k] = acc


@njit(cache=True)
def outcomes_schedule(d_d, d_t, r_r, s0, r0, u, dt, threshold, first_ge, last_le):
    """Progression trackers for every member under one shared schedule.

    first_ge[i]: first node index with n >= threshold (-1 if never).
    last_le[i]: last node index with n <= threshold.
    """
    n_steps = u.shape[0]
    n_members = s0.shape[0]
    for i in range(n_members):
        s = s0[i]
        r = r0[i]
        fg = -1
        ll = -1
        for k in range(n_steps + 1):
            n = s + r
            if fg < 0 and n >= threshold:
                fg = k
            if n <= threshold:
                ll = k
            if k == n_steps:
                break
            s, r = _step(s, r, d_d[i], d_t[i], r_r[i], u[k], dt)
            if not (np.isfinite(s) and np.isfinite(r)):
                return k + 1
        first_ge[i] = fg
        last_le[i] = ll
    return -1


@njit(cache=True)
def outcomes_protocol(d_d, d_t, r_r, s0, r0, n_steps, dt, start_treat,
                      lo, hi, threshold, first_ge, last_le):
    """Progression trackers under a two-threshold feedback protocol.

    Each member starts in treatment iff start_treat; treatment switches
    off once n <= lo and back on once n >= hi, checked at the current node
    before the step's control is applied. MTD is the degenerate case
    lo < 0 <= n <= 1 < hi that never switches.
    """
    n_members = s0.shape[0]
    for i in range(n_members):
        s = s0[i]
        r = r0[i]
        treat = start_treat
        fg = -1
        ll = -1
        for k in range(n_steps + 1):
            n = s + r
            if fg < 0 and n >= threshold:
                fg = k
            if n <= threshold:
                ll = k
            if k == n_steps:
                break
            if treat:
                if n <= lo:
                    treat = False
            elif n >= hi:
                treat = True
            uk = 1.0 if treat else 0.0
            s, r = _step(s, r, d_d[i], d_t[i], r_r[i], uk, dt)
            if not (np.isfinite(s) and np.isfinite(r)):
                return k + 1
        first_ge[i] = fg
        last_le[i] = ll
    return -1


@njit(cache=True)
def protocol_trajectory(d_d, d_t, r_r, s0, r0, n_steps, dt, start_treat,
                        lo, hi, S, R, u_out):
    """Single-member protocol rollout with stored states and realized control."""
    s = s0
    r = r0
    treat = start_treat
    S[0] = s
    R[0] = r
    for k in range(n_steps):
        n = s + r
        if treat:
            if n <= lo:
                treat = False
        elif n >= hi:
            treat = True
        uk = 1.0 if treat else 0.0
        u_out[k] = uk
        s, r = _step(s, r, d_d, d_t, r_r, uk, dt)
        if not (np.isfinite(s) and np.isfinite(r)):
            return k + 1
        S[k + 1] = s
        R[k + 1] = r
    return -1
