"""Compiled scalar update rules and the per-block trajectory loop.

All dynamics in this package have real branch factors, so amplitudes are
advanced as magnitudes ``(r0, r1)``; phases are constant and reattached by
the callers.  The public single-step functions in :mod:`noise` and
:mod:`models` call the same compiled rules as the ensemble loop, so a
Python-level trajectory with real amplitudes reproduces an ensemble member
bit for bit (complex phases add ulp-level rounding from the polar round trip).
"""
import math

import numba as nb
import numpy as np

MODEL_CSL = 0
MODEL_SUV = 1
MODEL_TOY = 2

NOISE_NONE = 0
NOISE_OU = 1
NOISE_SBM = 2
NOISE_STATIC_OU = 3
NOISE_STATIC_SBM = 4

COLLAPSE_NORM_FLOOR = 1e-12
# Branch magnitudes below this are set to zero.  Their probability is under
# 1e-300, and letting them decay into subnormal numbers slows the loop ~100x.
MAGNITUDE_FLOOR = 1e-150

_jit = nb.njit(cache=True, nogil=True, error_model="numpy")
# inlined at the numba IR level so the per-trajectory sweeps vectorise
_inline = nb.njit(cache=True, nogil=True, error_model="numpy", inline="always")


@_jit
def ou_coefficients(dt, tau):
    return math.exp(-dt / tau), math.sqrt(-math.expm1(-2.0 * dt / tau))


@_jit
def ou_update(x, dt, tau, eta):
    decay, amp = ou_coefficients(dt, tau)
    return x * decay + amp * eta


@_jit
def sbm_update(x, dt, tau, dw):
    return sbm_update_scaled(x, dt / tau, 1.0 / tau, dw)


@_inline
def sbm_update_scaled(x, dt_over_tau, inv_tau, dw):
    diff = 1.0 - x * x
    if diff < 0.0:
        diff = 0.0
    y = x - x * dt_over_tau + math.sqrt(diff * inv_tau) * dw
    if y > 1.0:
        y = 1.0
    elif y < -1.0:
        y = -1.0
    return y


@_inline
def suv_rates(r0, r1, drive, J):
    """Time derivatives of the branch magnitudes for noise term ``drive = G*xi``."""
    q0 = r0 * r0
    q1 = r1 * r1
    s = (q0 - q1) / (q0 + q1)
    a = J * s + drive
    return a * (1.0 - s) * r0, -a * (1.0 + s) * r1


@_inline
def suv_rk4(r0, r1, xi, J, G, dt):
    x = G * xi
    h = 0.5 * dt
    k1a, k1b = suv_rates(r0, r1, x, J)
    k2a, k2b = suv_rates(r0 + h * k1a, r1 + h * k1b, x, J)
    k3a, k3b = suv_rates(r0 + h * k2a, r1 + h * k2b, x, J)
    k4a, k4b = suv_rates(r0 + dt * k3a, r1 + dt * k3b, x, J)
    y0 = r0 + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    y1 = r1 + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    n = math.sqrt(y0 * y0 + y1 * y1)
    return _flush(y0 / n), _flush(y1 / n)


@_inline
def _flush(r):
    return 0.0 if abs(r) < MAGNITUDE_FLOOR else r


@_inline
def csl_euler(r0, r1, gamma, dt, dw):
    """One Euler-Maruyama step of the CSL generator; ``ok`` is False on norm collapse."""
    s = r0 * r0 - r1 * r1
    d0 = 1.0 - s
    d1 = -1.0 - s
    sg = math.sqrt(gamma)
    y0 = r0 * (1.0 - 0.5 * gamma * d0 * d0 * dt + sg * d0 * dw)
    y1 = r1 * (1.0 - 0.5 * gamma * d1 * d1 * dt + sg * d1 * dw)
    n2 = y0 * y0 + y1 * y1
    if not n2 >= COLLAPSE_NORM_FLOOR:
        return r0, r1, False
    n = math.sqrt(n2)
    return _flush(y0 / n), _flush(y1 / n), True


@_jit
def _accumulate(k, r0, r1, p_ref, c_ref, s_p, s_pp, s_c, s_cc):
    """Block sums of the shifted values and, by a second pass, their squared deviations."""
    n = r0.shape[0]
    sp = 0.0
    sc = 0.0
    for i in range(n):
        sp += r0[i] * r0[i] - p_ref
        sc += r0[i] * r1[i] - c_ref
    mp = sp / n
    mc = sc / n
    qp = 0.0
    qc = 0.0
    for i in range(n):
        ep = r0[i] * r0[i] - p_ref - mp
        ec = r0[i] * r1[i] - c_ref - mc
        qp += ep * ep
        qc += ec * ec
    s_p[k] = sp
    s_pp[k] = qp
    s_c[k] = sc
    s_cc[k] = qc


@_jit
def _suv_sweep(r0, r1, xi, J, G, dt):
    for i in range(r0.shape[0]):
        y0, y1 = suv_rk4(r0[i], r1[i], xi[i], J, G, dt)
        r0[i] = y0
        r1[i] = y1


@_jit
def advance_block(model, J, G, gamma, noise, tau, r0, r1, xi, normals, n_first, n_count,
                  dt, record_steps, k, p_ref, c_ref, s_p, s_pp, s_c, s_cc):
    """Advance a block of trajectories through steps ``n_first .. n_first+n_count-1``.

    ``r0, r1, xi`` hold the block state after step ``n_first - 1`` and are
    updated in place.  ``normals[m, i]`` is the standard normal consumed by
    trajectory ``i`` at step ``n_first + m``.  At the steps listed in
    ``record_steps`` (starting from pointer ``k``) the block statistics of
    ``|a0|^2 - p_ref`` and ``|a0 a1| - c_ref`` are stored by :func:`_accumulate`.

    Returns ``(k, fail)`` with ``fail`` the first failing trajectory or -1.
    """
    n_traj = r0.shape[0]
    n_rec = record_steps.shape[0]
    sqdt = math.sqrt(dt)
    decay, amp = ou_coefficients(dt, tau)
    dt_over_tau = dt / tau
    inv_tau = 1.0 / tau
    if model == MODEL_TOY:
        J = 0.0
        G = gamma
        xi[:] = 1.0
    fail = n_traj
    while k < n_rec and record_steps[k] == n_first - 1:
        _accumulate(k, r0, r1, p_ref, c_ref, s_p, s_pp, s_c, s_cc)
        k += 1
    for m in range(n_count):
        if model == MODEL_CSL:
            for i in range(n_traj):
                y0, y1, ok = csl_euler(r0[i], r1[i], gamma, dt, sqdt * normals[m, i])
                if not ok and i < fail:
                    fail = i
                r0[i] = y0
                r1[i] = y1
            if fail < n_traj:
                return k, fail
        else:
            # state sees the noise value at the start of the step
            _suv_sweep(r0, r1, xi, J, G, dt)
            if noise == NOISE_OU:
                for i in range(n_traj):
                    xi[i] = xi[i] * decay + amp * normals[m, i]
            elif noise == NOISE_SBM:
                for i in range(n_traj):
                    xi[i] = sbm_update_scaled(xi[i], dt_over_tau, inv_tau, sqdt * normals[m, i])
        n = n_first + m
        while k < n_rec and record_steps[k] == n:
            _accumulate(k, r0, r1, p_ref, c_ref, s_p, s_pp, s_c, s_cc)
            k += 1
    for i in range(n_traj):
        if not (math.isfinite(r0[i]) and math.isfinite(r1[i])):
            return k, i
    return k, -1
