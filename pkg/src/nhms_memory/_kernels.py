"""
RK4 method-of-lines kernels.

Every kernel advances its state from step ``k0`` to ``k1`` (exclusive) with
step ``dt``. Time-dependent inputs are pre-sampled on the half-step lattice:
entry ``2k`` is the value at ``t_k`` and ``2k + 1`` the value at ``t_k + dt/2``.
The field at each slab boundary is rebuilt at every stage by cumulative
trapezoidal integration of the nuclear source from z = 0.

Samples are written at steps that are multiples of ``stride``. Kernels return
-1 on success or the step index at which the coherence bound was exceeded.
"""

import math

import numpy as np
from numba import njit

SQRT1_2 = 1.0 / math.sqrt(2.0)


# =============================================================================
# Reduced (rho_S, rho_P) system
# =============================================================================

@njit(cache=True)
def _reduced_rhs(S, P, delta, drive, beta_c, half_c, damp, dz, dS, dP):
    acc = 0.0 + 0.0j
    n = S.shape[0]
    for i in range(n):
        if i > 0:
            acc += 0.5 * dz * (P[i - 1] + P[i])
        omega = drive + 1j * beta_c * acc
        dS[i] = -damp * S[i] - 1j * delta * P[i]
        dP[i] = -damp * P[i] - 1j * delta * S[i] + 1j * half_c * omega


@njit(cache=True)
def _trapz(y, dz):
    acc = 0.0 + 0.0j
    for i in range(1, y.shape[0]):
        acc += 0.5 * dz * (y[i - 1] + y[i])
    return acc


@njit(cache=True)
def reduced_run(S, P, delta, drive, beta_c, half_c, damp, dz, dt, k0, k1, stride,
                out_field, out_s, out_p, bound, growth):
    n = S.shape[0]
    k1S = np.empty(n, np.complex128)
    k1P = np.empty(n, np.complex128)
    k2S = np.empty(n, np.complex128)
    k2P = np.empty(n, np.complex128)
    k3S = np.empty(n, np.complex128)
    k3P = np.empty(n, np.complex128)
    k4S = np.empty(n, np.complex128)
    k4P = np.empty(n, np.complex128)
    tS = np.empty(n, np.complex128)
    tP = np.empty(n, np.complex128)
    n_out = out_field.shape[0]
    for k in range(k0, k1 + 1):
        if k % stride == 0:
            j = k // stride
            if j < n_out:
                out_field[j] = drive[2 * k] + 1j * beta_c * _trapz(P, dz)
                out_s[j] = S[n - 1]
                out_p[j] = P[n - 1]
                cmax = 0.0
                for i in range(n):
                    a = max(abs(S[i]), abs(P[i]))
                    if not a <= cmax:
                        cmax = a
                if not cmax <= 10.0 * bound * math.exp(growth * k * dt):
                    return k
        if k == k1:
            break
        i0 = 2 * k
        _reduced_rhs(S, P, delta[i0], drive[i0], beta_c, half_c, damp, dz, k1S, k1P)
        for i in range(n):
            tS[i] = S[i] + 0.5 * dt * k1S[i]
            tP[i] = P[i] + 0.5 * dt * k1P[i]
        _reduced_rhs(tS, tP, delta[i0 + 1], drive[i0 + 1], beta_c, half_c, damp, dz, k2S, k2P)
        for i in range(n):
            tS[i] = S[i] + 0.5 * dt * k2S[i]
            tP[i] = P[i] + 0.5 * dt * k2P[i]
        _reduced_rhs(tS, tP, delta[i0 + 1], drive[i0 + 1], beta_c, half_c, damp, dz, k3S, k3P)
        for i in range(n):
            tS[i] = S[i] + dt * k3S[i]
            tP[i] = P[i] + dt * k3P[i]
        _reduced_rhs(tS, tP, delta[i0 + 2], drive[i0 + 2], beta_c, half_c, damp, dz, k4S, k4P)
        for i in range(n):
            S[i] += dt / 6.0 * (k1S[i] + 2.0 * k2S[i] + 2.0 * k3S[i] + k4S[i])
            P[i] += dt / 6.0 * (k1P[i] + 2.0 * k2P[i] + 2.0 * k3P[i] + k4P[i])
    return -1


# =============================================================================
# Full four-level system
# =============================================================================
# state layout per slab: y[:, 0..3] = rho11, rho22, rho33, rho44 (real parts
# used), y[:, 4] = rho32, y[:, 5] = rho41

@njit(cache=True)
def _full_rhs(y, delta, drive, beta, cg, gam, dz, dy):
    c13, c14, c23, c24 = cg[0], cg[1], cg[2], cg[3]
    n = y.shape[0]
    acc = 0.0 + 0.0j
    prev = 0.0 + 0.0j
    for i in range(n):
        src = y[i, 5] / c14 + y[i, 4] / c23
        if i > 0:
            acc += 0.5 * dz * (prev + src)
        prev = src
        om = drive + 1j * beta * acc
        r11 = y[i, 0].real
        r22 = y[i, 1].real
        r33 = y[i, 2].real
        r44 = y[i, 3].real
        r32 = y[i, 4]
        r41 = y[i, 5]
        x41 = (om * np.conj(r41)).imag
        x32 = (om * np.conj(r32)).imag
        dy[i, 0] = gam * (c13 * c13 * r33 + c14 * c14 * r44) + c14 * x41
        dy[i, 1] = gam * (c23 * c23 * r33 + c24 * c24 * r44) + c23 * x32
        dy[i, 2] = -gam * (c13 * c13 + c23 * c23) * r33 - c23 * x32
        dy[i, 3] = -gam * (c14 * c14 + c24 * c24) * r44 - c14 * x41
        dy[i, 4] = (-0.5 * (-2j * delta + (c13 * c13 + c23 * c23) * gam) * r32
                    - 0.5j * c23 * om * (r33 - r22))
        dy[i, 5] = (-0.5 * (2j * delta + (c14 * c14 + c24 * c24) * gam) * r41
                    - 0.5j * c14 * om * (r44 - r11))


@njit(cache=True)
def full_run(y, delta, drive, beta, cg, gam, dz, dt, k0, k1, stride,
             out_field, out_s, out_p, out_trace, bound, growth):
    n = y.shape[0]
    ka = np.empty_like(y)
    kb = np.empty_like(y)
    kc = np.empty_like(y)
    kd = np.empty_like(y)
    tmp = np.empty_like(y)
    n_out = out_field.shape[0]
    c14, c23 = cg[1], cg[2]
    for k in range(k0, k1 + 1):
        if k % stride == 0:
            j = k // stride
            if j < n_out:
                acc = 0.0 + 0.0j
                prev = y[0, 5] / c14 + y[0, 4] / c23
                for i in range(1, n):
                    src = y[i, 5] / c14 + y[i, 4] / c23
                    acc += 0.5 * dz * (prev + src)
                    prev = src
                out_field[j] = drive[2 * k] + 1j * beta * acc
                out_s[j] = y[n - 1, 5] - y[n - 1, 4]
                out_p[j] = y[n - 1, 5] + y[n - 1, 4]
                dev = 0.0
                cmax = 0.0
                for i in range(n):
                    tr = y[i, 0].real + y[i, 1].real + y[i, 2].real + y[i, 3].real
                    dev = max(dev, abs(tr - 1.0))
                    a = max(abs(y[i, 4]), abs(y[i, 5]))
                    if not a <= cmax:
                        cmax = a
                out_trace[j] = dev
                if not cmax <= 10.0 * bound * math.exp(growth * k * dt):
                    return k
        if k == k1:
            break
        i0 = 2 * k
        _full_rhs(y, delta[i0], drive[i0], beta, cg, gam, dz, ka)
        for i in range(n):
            for c in range(6):
                tmp[i, c] = y[i, c] + 0.5 * dt * ka[i, c]
        _full_rhs(tmp, delta[i0 + 1], drive[i0 + 1], beta, cg, gam, dz, kb)
        for i in range(n):
            for c in range(6):
                tmp[i, c] = y[i, c] + 0.5 * dt * kb[i, c]
        _full_rhs(tmp, delta[i0 + 1], drive[i0 + 1], beta, cg, gam, dz, kc)
        for i in range(n):
            for c in range(6):
                tmp[i, c] = y[i, c] + dt * kc[i, c]
        _full_rhs(tmp, delta[i0 + 2], drive[i0 + 2], beta, cg, gam, dz, kd)
        for i in range(n):
            for c in range(6):
                y[i, c] += dt / 6.0 * (ka[i, c] + 2.0 * kb[i, c] + 2.0 * kc[i, c] + kd[i, c])
    return -1


# =============================================================================
# Six-level sublevel density matrix
# =============================================================================
# levels: 0,1 ground; 2..5 excited. Transition t couples ground tg[t] to
# excited te[t] with coefficient tc[t] and spherical index tq[t] in {-1,0,1}.

@njit(cache=True)
def _vector_sources(rho, tg, te, tq, tc, beta_p, dz, out_par, out_perp):
    n = rho.shape[0]
    acc_par = 0.0 + 0.0j
    acc_perp = 0.0 + 0.0j
    prev_par = 0.0 + 0.0j
    prev_perp = 0.0 + 0.0j
    for i in range(n):
        s0 = 0.0 + 0.0j
        sp = 0.0 + 0.0j
        sm = 0.0 + 0.0j
        for t in range(tg.shape[0]):
            v = tc[t] * rho[i, te[t], tg[t]]
            if tq[t] == 0:
                s0 += v
            elif tq[t] == 1:
                sp += v
            else:
                sm += v
        src_par = 1j * beta_p * s0
        src_perp = 1j * beta_p * (sm - sp) * SQRT1_2
        if i > 0:
            acc_par += 0.5 * dz * (prev_par + src_par)
            acc_perp += 0.5 * dz * (prev_perp + src_perp)
        prev_par = src_par
        prev_perp = src_perp
        out_par[i] = acc_par
        out_perp[i] = acc_perp


@njit(cache=True)
def _vector_rhs(rho, delta, d_par, d_perp, shift, excited, tg, te, tq, tc, beta_p, gam, dz,
                cum_par, cum_perp, drho):
    n = rho.shape[0]
    nl = rho.shape[1]
    nt = tg.shape[0]
    _vector_sources(rho, tg, te, tq, tc, beta_p, dz, cum_par, cum_perp)
    om = np.empty(nt, np.complex128)
    for i in range(n):
        b_par = d_par + cum_par[i]
        b_perp = d_perp + cum_perp[i]
        for t in range(nt):
            if tq[t] == 0:
                om[t] = b_par
            elif tq[t] == 1:
                om[t] = -b_perp * SQRT1_2
            else:
                om[t] = b_perp * SQRT1_2
        for a in range(nl):
            for b in range(nl):
                drho[i, a, b] = (-1j * (shift[a] - shift[b]) * delta
                                 - 0.5 * gam * (excited[a] + excited[b])) * rho[i, a, b]
        for t in range(nt):
            g = tg[t]
            e = te[t]
            h = -0.5 * tc[t] * om[t]
            hc = np.conj(h)
            for j in range(nl):
                drho[i, e, j] += -1j * h * rho[i, g, j]
                drho[i, g, j] += -1j * hc * rho[i, e, j]
                drho[i, j, g] += 1j * rho[i, j, e] * h
                drho[i, j, e] += 1j * rho[i, j, g] * hc
        if gam != 0.0:
            for t1 in range(nt):
                for t2 in range(nt):
                    if tq[t1] == tq[t2]:
                        drho[i, tg[t1], tg[t2]] += gam * tc[t1] * tc[t2] * rho[i, te[t1], te[t2]]


@njit(cache=True)
def vector_run(rho, delta, d_par, d_perp, shift, excited, tg, te, tq, tc, beta_p, gam, dz, dt,
               k0, k1, stride, out_par, out_perp, out_trace, bound, growth):
    n = rho.shape[0]
    nl = rho.shape[1]
    ka = np.empty_like(rho)
    kb = np.empty_like(rho)
    kc = np.empty_like(rho)
    kd = np.empty_like(rho)
    tmp = np.empty_like(rho)
    cum_par = np.empty(n, np.complex128)
    cum_perp = np.empty(n, np.complex128)
    n_out = out_par.shape[0]
    for k in range(k0, k1 + 1):
        if k % stride == 0:
            j = k // stride
            if j < n_out:
                _vector_sources(rho, tg, te, tq, tc, beta_p, dz, cum_par, cum_perp)
                out_par[j] = d_par[2 * k] + cum_par[n - 1]
                out_perp[j] = d_perp[2 * k] + cum_perp[n - 1]
                dev = 0.0
                cmax = 0.0
                for i in range(n):
                    tr = 0.0
                    for a in range(nl):
                        tr += rho[i, a, a].real
                    dev = max(dev, abs(tr - 1.0))
                    for t in range(tg.shape[0]):
                        a = abs(rho[i, te[t], tg[t]])
                        if not a <= cmax:
                            cmax = a
                out_trace[j] = max(out_trace[j], dev)
                if not cmax <= 10.0 * bound * math.exp(growth * k * dt):
                    return k
        if k == k1:
            break
        i0 = 2 * k
        _vector_rhs(rho, delta[i0], d_par[i0], d_perp[i0], shift, excited, tg, te, tq, tc,
                    beta_p, gam, dz, cum_par, cum_perp, ka)
        for i in range(n):
            for a in range(nl):
                for b in range(nl):
                    tmp[i, a, b] = rho[i, a, b] + 0.5 * dt * ka[i, a, b]
        _vector_rhs(tmp, delta[i0 + 1], d_par[i0 + 1], d_perp[i0 + 1], shift, excited, tg, te, tq,
                    tc, beta_p, gam, dz, cum_par, cum_perp, kb)
        for i in range(n):
            for a in range(nl):
                for b in range(nl):
                    tmp[i, a, b] = rho[i, a, b] + 0.5 * dt * kb[i, a, b]
        _vector_rhs(tmp, delta[i0 + 1], d_par[i0 + 1], d_perp[i0 + 1], shift, excited, tg, te, tq,
                    tc, beta_p, gam, dz, cum_par, cum_perp, kc)
        for i in range(n):
            for a in range(nl):
                for b in range(nl):
                    tmp[i, a, b] = rho[i, a, b] + dt * kc[i, a, b]
        _vector_rhs(tmp, delta[i0 + 2], d_par[i0 + 2], d_perp[i0 + 2], shift, excited, tg, te, tq,
                    tc, beta_p, gam, dz, cum_par, cum_perp, kd)
        for i in range(n):
            for a in range(nl):
                for b in range(nl):
                    rho[i, a, b] += dt / 6.0 * (ka[i, a, b] + 2.0 * kb[i, a, b] + 2.0 * kc[i, a, b]
                                                + kd[i, a, b])
    return -1
