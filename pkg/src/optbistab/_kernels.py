"""Compiled Runge-Kutta kernels for the normalized three-variable system.

State vector is (field_re, field_im, pop_fraction). The pump detuning is a
linear ramp ``d0 + (d1 - d0) * min(t, ramp) / ramp``; a fixed detuning is
the special case ``d0 == d1``.

Status codes returned by the kernels: 0 ok, 1 step-size underflow,
2 non-finite state.
"""

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1 = 71 / 57600
E3 = -71 / 16695
E4 = 71 / 1920
E5 = -17253 / 339200
E6 = 22 / 525
E7 = -1 / 40


@njit(cache=True)
def _detuning(t, d0, d1, ramp):
    if ramp <= 0.0 or d0 == d1:
        return d0
    if t >= ramp:
        return d1
    return d0 + (d1 - d0) * t / ramp


@njit(cache=True)
def _rhs(t, y, out, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau):
    x = y[0]
    v = y[1]
    n = y[2]
    d = _detuning(t, d0, d1, ramp) + a_signed * n
    out[0] = half_kappa * (-x - d * v)
    out[1] = half_kappa * (1.0 - v + d * x)
    out[2] = inv_tau * (1.0 - n * (1.0 + s_pop * (x * x + v * v)))


@njit(cache=True)
def _hermite(y0, f0, y1, f1, h, theta, out):
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + theta
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    for i in range(3):
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i]


@njit(cache=True)
def dopri5(y0, t_end, out_dt, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau,
           atol, rtol, h_max, h_min):
    n_out = int(np.floor(t_end / out_dt + 1e-9)) + 1
    out = np.empty((n_out, 3))
    out[0, :] = y0
    k_out = 1

    y = y0.copy()
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    k5 = np.empty(3)
    k6 = np.empty(3)
    k7 = np.empty(3)
    tmp = np.empty(3)
    y_new = np.empty(3)
    yi = np.empty(3)

    t = 0.0
    h = min(h_max, 0.01 / half_kappa)
    _rhs(t, y, k1, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
    n_steps = 0

    while k_out < n_out:
        if t + h > t_end:
            h = max(t_end - t, h_min)
        for i in range(3):
            tmp[i] = y[i] + h * A21 * k1[i]
        _rhs(t + C2 * h, tmp, k2, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        _rhs(t + C3 * h, tmp, k3, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        _rhs(t + C4 * h, tmp, k4, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        _rhs(t + C5 * h, tmp, k5, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                 + A64 * k4[i] + A65 * k5[i])
        _rhs(t + h, tmp, k6, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                   + B5 * k5[i] + B6 * k6[i])
        _rhs(t + h, y_new, k7, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)

        err = 0.0
        for i in range(3):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                     + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            r = e / sc
            err += r * r
        err = np.sqrt(err / 3.0)

        if not np.isfinite(err):
            return 2, t, out[:k_out], n_steps

        if err <= 1.0:
            t_new = t + h
            while k_out < n_out and k_out * out_dt <= t_new + 1e-15:
                theta = (k_out * out_dt - t) / h
                _hermite(y, k1, y_new, k7, h, theta, yi)
                out[k_out, :] = yi
                k_out += 1
            t = t_new
            for i in range(3):
                y[i] = y_new[i]
                k1[i] = k7[i]
            n_steps += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * fac, h_max)
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                return 1, t, out[:k_out], n_steps
    return 0, t, out, n_steps


@njit(cache=True)
def rk4(y0, t_end, out_dt, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau, dt):
    n_out = int(np.floor(t_end / out_dt + 1e-9)) + 1
    out = np.empty((n_out, 3))
    out[0, :] = y0
    k_out = 1

    y = y0.copy()
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    f_new = np.empty(3)
    tmp = np.empty(3)
    y_new = np.empty(3)
    yi = np.empty(3)

    n_steps = int(np.ceil(t_end / dt - 1e-9))
    _rhs(0.0, y, k1, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
    for step in range(n_steps):
        t = step * dt
        for i in range(3):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        _rhs(t + 0.5 * dt, tmp, k2, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        _rhs(t + 0.5 * dt, tmp, k3, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            tmp[i] = y[i] + dt * k3[i]
        _rhs(t + dt, tmp, k4, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        for i in range(3):
            y_new[i] = y[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
        if not (np.isfinite(y_new[0]) and np.isfinite(y_new[1]) and np.isfinite(y_new[2])):
            return 2, t, out[:k_out], step
        _rhs(t + dt, y_new, f_new, d0, d1, ramp, a_signed, s_pop, half_kappa, inv_tau)
        t_new = (step + 1) * dt
        while k_out < n_out and k_out * out_dt <= t_new + 1e-15:
            theta = (k_out * out_dt - t) / dt
            _hermite(y, k1, y_new, f_new, dt, theta, yi)
            out[k_out, :] = yi
            k_out += 1
        for i in range(3):
            y[i] = y_new[i]
            k1[i] = f_new[i]
    return 0, n_steps * dt, out, n_steps
