"""Compiled fixed-step integrators.

All kernels use the classical 4th-order one-step method. Drive parameters
arrive packed as [charge, mass, omega, phase, amplitude_scale]; tickle
parameters as [amplitude, omega, dx, dy, dz, t_on, t_off, 1/gradient_length].
"""

import math

import numpy as np
from numba import njit

from trap.kernels import rf_envelope, static_acceleration

STATUS_CAPPED = 0
STATUS_ESCAPED = 1
STATUS_DIVERGED = 2


@njit(cache=True)
def force(t, x, y, z, mp, dp, tk, noise, noise_dt):
    """Total force (N): RF with noise, tickle inside its window, static confinement."""
    charge = dp[0]
    mass = dp[1]
    ex, ey, ez = rf_envelope(mp, x, y, z)

    idx = 0
    if noise.size > 1:
        idx = int(t / noise_dt)
        if idx < 0:
            idx = 0
        elif idx >= noise.size:
            idx = noise.size - 1
    rf = dp[4] * (1.0 + noise[idx]) * math.cos(dp[2] * t + dp[3])
    fx = charge * ex * rf
    fy = charge * ey * rf
    fz = charge * ez * rf

    if tk[0] != 0.0 and tk[5] <= t and t < tk[6]:
        proj = tk[2] * x + tk[3] * y + tk[4] * z
        e_t = tk[0] * math.cos(tk[1] * t) * (1.0 + tk[7] * proj)
        fx += charge * e_t * tk[2]
        fy += charge * e_t * tk[3]
        fz += charge * e_t * tk[4]

    ax, ay, az = static_acceleration(mp, x, y, z)
    return fx + mass * ax, fy + mass * ay, fz + mass * az


@njit(cache=True)
def _rk4_step(t, h, s, mp, dp, tk, noise, noise_dt, out):
    inv_m = 1.0 / dp[1]
    x, y, z, vx, vy, vz = s[0], s[1], s[2], s[3], s[4], s[5]

    f1x, f1y, f1z = force(t, x, y, z, mp, dp, tk, noise, noise_dt)
    a1x, a1y, a1z = f1x * inv_m, f1y * inv_m, f1z * inv_m

    hh = 0.5 * h
    v2x, v2y, v2z = vx + hh * a1x, vy + hh * a1y, vz + hh * a1z
    f2x, f2y, f2z = force(t + hh, x + hh * vx, y + hh * vy, z + hh * vz, mp, dp, tk, noise, noise_dt)
    a2x, a2y, a2z = f2x * inv_m, f2y * inv_m, f2z * inv_m

    v3x, v3y, v3z = vx + hh * a2x, vy + hh * a2y, vz + hh * a2z
    f3x, f3y, f3z = force(t + hh, x + hh * v2x, y + hh * v2y, z + hh * v2z, mp, dp, tk, noise, noise_dt)
    a3x, a3y, a3z = f3x * inv_m, f3y * inv_m, f3z * inv_m

    v4x, v4y, v4z = vx + h * a3x, vy + h * a3y, vz + h * a3z
    f4x, f4y, f4z = force(t + h, x + h * v3x, y + h * v3y, z + h * v3z, mp, dp, tk, noise, noise_dt)
    a4x, a4y, a4z = f4x * inv_m, f4y * inv_m, f4z * inv_m

    h6 = h / 6.0
    out[0] = x + h6 * (vx + 2.0 * v2x + 2.0 * v3x + v4x)
    out[1] = y + h6 * (vy + 2.0 * v2y + 2.0 * v3y + v4y)
    out[2] = z + h6 * (vz + 2.0 * v2z + 2.0 * v3z + v4z)
    out[3] = vx + h6 * (a1x + 2.0 * a2x + 2.0 * a3x + a4x)
    out[4] = vy + h6 * (a1y + 2.0 * a2y + 2.0 * a3y + a4y)
    out[5] = vz + h6 * (a1z + 2.0 * a2z + 2.0 * a3z + a4z)


@njit(cache=True)
def run_trajectory(state0, t0, h, n_steps, mp, dp, tk, noise, noise_dt, escape,
                   stride, record_from, records):
    """Integrate n_steps of size h from t0.

    Stops at the first step where any |coordinate| exceeds its escape radius and
    returns the linearly interpolated crossing time. Every `stride`-th step with
    index >= record_from is written to `records` as (t, x, y, z).

    Returns (status, stop_time, state, n_records).
    """
    s = state0.copy()
    nxt = np.empty(6)
    n_rec = 0
    max_rec = records.shape[0]

    if record_from == 0 and max_rec > 0:
        records[0, 0] = t0
        records[0, 1] = s[0]
        records[0, 2] = s[1]
        records[0, 3] = s[2]
        n_rec = 1

    for i in range(n_steps):
        t = t0 + i * h
        _rk4_step(t, h, s, mp, dp, tk, noise, noise_dt, nxt)

        if not (math.isfinite(nxt[0]) and math.isfinite(nxt[1]) and math.isfinite(nxt[2])
                and math.isfinite(nxt[3]) and math.isfinite(nxt[4]) and math.isfinite(nxt[5])):
            return STATUS_DIVERGED, t, s, n_rec

        crossing = 2.0
        for k in range(3):
            new = abs(nxt[k])
            if new > escape[k]:
                old = abs(s[k])
                frac = (escape[k] - old) / (new - old) if new > old else 0.0
                if frac < crossing:
                    crossing = frac
        if crossing <= 1.0:
            for k in range(6):
                s[k] = nxt[k]
            return STATUS_ESCAPED, t + crossing * h, s, n_rec

        for k in range(6):
            s[k] = nxt[k]

        step = i + 1
        if step >= record_from and step % stride == 0 and n_rec < max_rec:
            records[n_rec, 0] = t0 + step * h
            records[n_rec, 1] = s[0]
            records[n_rec, 2] = s[1]
            records[n_rec, 3] = s[2]
            n_rec += 1

    return STATUS_CAPPED, t0 + n_steps * h, s, n_rec


@njit(cache=True)
def mathieu_monodromy(a, q, steps):
    """One-period propagator of u'' + (a - 2 q cos 2 tau) u = 0 over tau in [0, pi].

    Columns are the solutions started from (1, 0) and (0, 1).
    """
    h = math.pi / steps
    m = np.empty((2, 2))
    for col in range(2):
        u = 1.0 if col == 0 else 0.0
        w = 0.0 if col == 0 else 1.0
        for i in range(steps):
            tau = i * h
            k1u = w
            k1w = -(a - 2.0 * q * math.cos(2.0 * tau)) * u
            th = tau + 0.5 * h
            c_mid = -(a - 2.0 * q * math.cos(2.0 * th))
            k2u = w + 0.5 * h * k1w
            k2w = c_mid * (u + 0.5 * h * k1u)
            k3u = w + 0.5 * h * k2w
            k3w = c_mid * (u + 0.5 * h * k2u)
            k4u = w + h * k3w
            k4w = -(a - 2.0 * q * math.cos(2.0 * (tau + h))) * (u + h * k3u)
            u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            w = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        m[0, col] = u
        m[1, col] = w
    return m
