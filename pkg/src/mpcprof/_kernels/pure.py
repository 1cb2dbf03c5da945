"""Pure numpy kernel backend.

Reference implementation of the hot loops: sinc-table readout, field
synthesis from quantized path parameters, windowed magnitude scoring and the
27-candidate refinement sweep. The compiled backend in _fast.pyx mirrors
this file operation for operation; any change here must be replicated there.

Conventions shared by both backends:
  * quantization is half-up: Q(x) = floor(x/step + 0.5) * step
  * table readout is linear interpolation, zero outside the table
  * tap k of the output grid sits at grid_t0 + k * grid_dt
  * candidate v of the sweep encodes (delay, amplitude, phase) offsets as
    v = it*9 + ia*3 + ip with offset index 0 -> -step, 1 -> 0, 2 -> +step;
    v == 13 is the zero-variation candidate and wins all score ties,
    otherwise the smallest v wins
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"

_OFFS = np.array([-1.0, 0.0, 1.0])


def quantize(x, step: float):
    """Half-up rounding of x to the lattice {k * step}."""
    return np.floor(x / step + 0.5) * step


def _lerp(table: np.ndarray, idx: np.ndarray) -> np.ndarray:
    n = table.shape[0]
    i = np.floor(idx).astype(np.int64)
    valid = (idx >= 0.0) & (idx < n - 1)
    i_safe = np.clip(i, 0, n - 2)
    frac = idx - i_safe
    out = table[i_safe] * (1.0 - frac) + table[i_safe + 1] * frac
    out[~valid] = 0.0
    return out


def bank_readout(table, t_min, inv_res, grid_t0, grid_dt, n_out, delay):
    """Sinc table values at grid taps 0..n_out-1 for a pulse delayed by `delay`."""
    base = (grid_t0 - delay - t_min) * inv_res
    step = grid_dt * inv_res
    idx = base + step * np.arange(n_out, dtype=np.float64)
    return _lerp(table, idx)


def field_from_params(table, t_min, inv_res, grid_t0, grid_dt, n_out,
                      delays, amps, phases, q_tau, q_amp, q_phi):
    """Complex field synthesized from quantized path parameters."""
    field = np.zeros(n_out, dtype=np.complex128)
    for l in range(len(delays)):
        tq = quantize(delays[l], q_tau)
        aq = quantize(amps[l], q_amp)
        pq = quantize(phases[l], q_phi)
        r = bank_readout(table, t_min, inv_res, grid_t0, grid_dt, n_out, tq)
        field += (aq * np.cos(pq) + 1j * (aq * np.sin(pq))) * r
    return field


def window_error_mag(field, target, w_start, w_stop):
    """Sum of squared magnitude-profile errors over [w_start, w_stop)."""
    fr = field.real[w_start:w_stop]
    fi = field.imag[w_start:w_stop]
    d = target[w_start:w_stop] - np.sqrt(fr * fr + fi * fi)
    return float(np.dot(d, d))


def refine_sweep(table, t_min, inv_res, grid_t0, grid_dt,
                 target, w_start, w_stop,
                 delays, amps, phases, order,
                 d_tau, d_amp, d_phi, q_tau, q_amp, q_phi,
                 tau_lo, tau_hi, amp_lo, amp_hi, phi_lo, phi_hi):
    """One greedy sweep over all components; mutates delays/amps/phases.

    Components are visited in the given order. For each one, 27 candidate
    variations are scored against the target with the other components held
    fixed (incremental field update), the best admissible candidate is
    accepted, and the sweep moves on. Candidate admissibility is checked on
    the raw (unquantized) values against the per-component bounds; the
    zero-variation candidate is always admissible. Amplitude candidates are
    clamped at zero before the bound check.

    Returns the windowed score after the sweep (incrementally maintained).
    """
    L = delays.shape[0]
    n = int(w_stop)
    tw = target[w_start:w_stop]
    contribs = np.empty((L, n), dtype=np.complex128)
    for l in range(L):
        tq = quantize(delays[l], q_tau)
        aq = quantize(amps[l], q_amp)
        pq = quantize(phases[l], q_phi)
        r = bank_readout(table, t_min, inv_res, grid_t0, grid_dt, n, tq)
        contribs[l] = (aq * np.cos(pq) + 1j * (aq * np.sin(pq))) * r
    field = contribs.sum(axis=0)

    scores = np.empty(27)
    rs = np.empty((3, n))
    for l in order:
        l = int(l)
        fm = field - contribs[l]
        fmr = fm.real[w_start:w_stop]
        fmi = fm.imag[w_start:w_stop]
        tau_c = delays[l] + d_tau * _OFFS
        amp_c = np.maximum(amps[l] + d_amp * _OFFS, 0.0)
        phi_c = phases[l] + d_phi * _OFFS
        for i in range(3):
            rs[i] = bank_readout(table, t_min, inv_res, grid_t0, grid_dt, n,
                                 quantize(tau_c[i], q_tau))
        aq = quantize(amp_c, q_amp)
        pq = quantize(phi_c, q_phi)
        for v in range(27):
            it = v // 9
            ia = (v // 3) % 3
            ip = v % 3
            if v != 13 and not (tau_lo[l] <= tau_c[it] <= tau_hi[l]
                                and amp_lo[l] <= amp_c[ia] <= amp_hi[l]
                                and phi_lo[l] <= phi_c[ip] <= phi_hi[l]):
                scores[v] = np.inf
                continue
            cre = aq[ia] * np.cos(pq[ip])
            cim = aq[ia] * np.sin(pq[ip])
            rr = rs[it, w_start:w_stop]
            re = fmr + cre * rr
            im = fmi + cim * rr
            d = tw - np.sqrt(re * re + im * im)
            scores[v] = np.dot(d, d)
        best = int(np.argmin(scores))
        if scores[13] <= scores[best]:
            best = 13
        it = best // 9
        ia = (best // 3) % 3
        ip = best % 3
        delays[l] = tau_c[it]
        amps[l] = amp_c[ia]
        phases[l] = phi_c[ip]
        new_contrib = (aq[ia] * np.cos(pq[ip]) + 1j * (aq[ia] * np.sin(pq[ip]))) * rs[it]
        field = fm + new_contrib
        contribs[l] = new_contrib

    fr = field.real[w_start:w_stop]
    fi = field.imag[w_start:w_stop]
    d = tw - np.sqrt(fr * fr + fi * fi)
    return float(np.dot(d, d))
