# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirror of _kernels.pure (see that module for the shared conventions). Any
behavioural change must land in both files.
"""

from libc.math cimport INFINITY, cos, floor, sin, sqrt

import numpy as np

BACKEND_NAME = "fast"


cdef inline double _q(double x, double step) noexcept nogil:
    return floor(x / step + 0.5) * step


cdef inline double _lerp(const double[::1] table, double idx) noexcept nogil:
    cdef Py_ssize_t i
    cdef double frac
    if idx < 0.0 or idx >= <double>(table.shape[0] - 1):
        return 0.0
    i = <Py_ssize_t>idx
    frac = idx - <double>i
    return table[i] * (1.0 - frac) + table[i + 1] * frac


cdef void _readout(const double[::1] table, double t_min, double inv_res,
                   double grid_t0, double grid_dt, double delay,
                   double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t k
    cdef double base = (grid_t0 - delay - t_min) * inv_res
    cdef double step = grid_dt * inv_res
    for k in range(n):
        out[k] = _lerp(table, base + step * <double>k)


def quantize(x, step):
    """Half-up rounding of x to the lattice {k * step}."""
    return np.floor(np.asarray(x) / step + 0.5) * step


def bank_readout(const double[::1] table, double t_min, double inv_res,
                 double grid_t0, double grid_dt, Py_ssize_t n_out, double delay):
    """Sinc table values at grid taps 0..n_out-1 for a pulse delayed by `delay`."""
    out_np = np.empty(n_out, dtype=np.float64)
    cdef double[::1] out = out_np
    if n_out > 0:
        _readout(table, t_min, inv_res, grid_t0, grid_dt, delay, &out[0], n_out)
    return out_np


def field_from_params(const double[::1] table, double t_min, double inv_res,
                      double grid_t0, double grid_dt, Py_ssize_t n_out,
                      const double[::1] delays, const double[::1] amps,
                      const double[::1] phases,
                      double q_tau, double q_amp, double q_phi):
    """Complex field synthesized from quantized path parameters."""
    cdef Py_ssize_t L = delays.shape[0]
    re_np = np.zeros(n_out, dtype=np.float64)
    im_np = np.zeros(n_out, dtype=np.float64)
    r_np = np.empty(n_out, dtype=np.float64)
    cdef double[::1] re = re_np
    cdef double[::1] im = im_np
    cdef double[::1] r = r_np
    cdef Py_ssize_t l, k
    cdef double tq, aq, pq, cre, cim
    if n_out == 0:
        return re_np + 1j * im_np
    with nogil:
        for l in range(L):
            tq = _q(delays[l], q_tau)
            aq = _q(amps[l], q_amp)
            pq = _q(phases[l], q_phi)
            _readout(table, t_min, inv_res, grid_t0, grid_dt, tq, &r[0], n_out)
            cre = aq * cos(pq)
            cim = aq * sin(pq)
            for k in range(n_out):
                re[k] += cre * r[k]
                im[k] += cim * r[k]
    return re_np + 1j * im_np


def window_error_mag(double complex[::1] field, const double[::1] target,
                     Py_ssize_t w_start, Py_ssize_t w_stop):
    """Sum of squared magnitude-profile errors over [w_start, w_stop)."""
    cdef double acc = 0.0
    cdef double fr, fi, d
    cdef Py_ssize_t k
    with nogil:
        for k in range(w_start, w_stop):
            fr = field[k].real
            fi = field[k].imag
            d = target[k] - sqrt(fr * fr + fi * fi)
            acc += d * d
    return acc


def refine_sweep(const double[::1] table, double t_min, double inv_res,
                 double grid_t0, double grid_dt,
                 const double[::1] target, Py_ssize_t w_start, Py_ssize_t w_stop,
                 double[::1] delays, double[::1] amps, double[::1] phases,
                 const Py_ssize_t[::1] order,
                 double d_tau, double d_amp, double d_phi,
                 double q_tau, double q_amp, double q_phi,
                 const double[::1] tau_lo, const double[::1] tau_hi,
                 const double[::1] amp_lo, const double[::1] amp_hi,
                 const double[::1] phi_lo, const double[::1] phi_hi):
    """One greedy sweep over all components; mutates delays/amps/phases.

    Semantics identical to pure.refine_sweep.
    """
    cdef Py_ssize_t L = delays.shape[0]
    cdef Py_ssize_t n = w_stop
    cre_np = np.zeros((L, n), dtype=np.float64)
    cim_np = np.zeros((L, n), dtype=np.float64)
    fre_np = np.zeros(n, dtype=np.float64)
    fim_np = np.zeros(n, dtype=np.float64)
    rs_np = np.empty((3, n), dtype=np.float64)
    cdef double[:, ::1] cre = cre_np
    cdef double[:, ::1] cim = cim_np
    cdef double[::1] fre = fre_np
    cdef double[::1] fim = fim_np
    cdef double[:, ::1] rs = rs_np
    cdef double scores[27]
    cdef double tau_c[3]
    cdef double amp_c[3]
    cdef double phi_c[3]
    cdef double aqv[3]
    cdef double pqv[3]
    cdef double tq, aq, pq, ccre, ccim, fr, fi, dd, acc
    cdef Py_ssize_t l, k, oi, v, i, it, ia, ip, best
    if n == 0 or L == 0:
        acc = 0.0
        for k in range(w_start, w_stop):
            acc += target[k] * target[k]
        return acc
    with nogil:
        for l in range(L):
            tq = _q(delays[l], q_tau)
            aq = _q(amps[l], q_amp)
            pq = _q(phases[l], q_phi)
            _readout(table, t_min, inv_res, grid_t0, grid_dt, tq, &rs[0, 0], n)
            ccre = aq * cos(pq)
            ccim = aq * sin(pq)
            for k in range(n):
                cre[l, k] = ccre * rs[0, k]
                cim[l, k] = ccim * rs[0, k]
                fre[k] += cre[l, k]
                fim[k] += cim[l, k]
        for oi in range(L):
            l = order[oi]
            for k in range(n):
                fre[k] -= cre[l, k]
                fim[k] -= cim[l, k]
            for i in range(3):
                tau_c[i] = delays[l] + d_tau * <double>(i - 1)
                amp_c[i] = amps[l] + d_amp * <double>(i - 1)
                if amp_c[i] < 0.0:
                    amp_c[i] = 0.0
                phi_c[i] = phases[l] + d_phi * <double>(i - 1)
                aqv[i] = _q(amp_c[i], q_amp)
                pqv[i] = _q(phi_c[i], q_phi)
                _readout(table, t_min, inv_res, grid_t0, grid_dt,
                         _q(tau_c[i], q_tau), &rs[i, 0], n)
            for v in range(27):
                it = v // 9
                ia = (v // 3) % 3
                ip = v % 3
                if v != 13 and not (tau_lo[l] <= tau_c[it] <= tau_hi[l]
                                    and amp_lo[l] <= amp_c[ia] <= amp_hi[l]
                                    and phi_lo[l] <= phi_c[ip] <= phi_hi[l]):
                    scores[v] = INFINITY
                    continue
                ccre = aqv[ia] * cos(pqv[ip])
                ccim = aqv[ia] * sin(pqv[ip])
                acc = 0.0
                for k in range(w_start, w_stop):
                    fr = fre[k] + ccre * rs[it, k]
                    fi = fim[k] + ccim * rs[it, k]
                    dd = target[k] - sqrt(fr * fr + fi * fi)
                    acc += dd * dd
                scores[v] = acc
            best = 0
            for v in range(1, 27):
                if scores[v] < scores[best]:
                    best = v
            if scores[13] <= scores[best]:
                best = 13
            it = best // 9
            ia = (best // 3) % 3
            ip = best % 3
            delays[l] = tau_c[it]
            amps[l] = amp_c[ia]
            phases[l] = phi_c[ip]
            ccre = aqv[ia] * cos(pqv[ip])
            ccim = aqv[ia] * sin(pqv[ip])
            for k in range(n):
                cre[l, k] = ccre * rs[it, k]
                cim[l, k] = ccim * rs[it, k]
                fre[k] += cre[l, k]
                fim[k] += cim[l, k]
        acc = 0.0
        for k in range(w_start, w_stop):
            dd = target[k] - sqrt(fre[k] * fre[k] + fim[k] * fim[k])
            acc += dd * dd
    return acc
