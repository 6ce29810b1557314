# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pulse integrator (Dormand-Prince 5(4) on the master equation).

Mirrors ``_bloch_py.integrate_pulse``: same right-hand side, same tableau,
same step controller, so the two backends agree to integrator tolerance.
The Hamiltonian and jump operators are unpacked into nonzero coordinate
lists once per call; the 13-state system has ~40 Hamiltonian nonzeros out
of 169, so the sparse commutator is the main win over the numpy fallback.
The state is the flattened complex density matrix plus one accumulator
slot for the integrated scattering probability.
"""

from libc.math cimport fmax, fmin, pow, sqrt

import numpy as np

ctypedef double complex cplx

cdef extern from "complex.h":
    double cabs(double complex) nogil

cdef double DP_A[7][6]
cdef double DP_B5[7]
cdef double DP_E[7]   # b5 - b4, error estimate weights

for _i in range(7):
    for _j in range(6):
        DP_A[_i][_j] = 0.0
DP_A[1][0] = 1.0 / 5.0
DP_A[2][0] = 3.0 / 40.0
DP_A[2][1] = 9.0 / 40.0
DP_A[3][0] = 44.0 / 45.0
DP_A[3][1] = -56.0 / 15.0
DP_A[3][2] = 32.0 / 9.0
DP_A[4][0] = 19372.0 / 6561.0
DP_A[4][1] = -25360.0 / 2187.0
DP_A[4][2] = 64448.0 / 6561.0
DP_A[4][3] = -212.0 / 729.0
DP_A[5][0] = 9017.0 / 3168.0
DP_A[5][1] = -355.0 / 33.0
DP_A[5][2] = 46732.0 / 5247.0
DP_A[5][3] = 49.0 / 176.0
DP_A[5][4] = -5103.0 / 18656.0
DP_A[6][0] = 35.0 / 384.0
DP_A[6][1] = 0.0
DP_A[6][2] = 500.0 / 1113.0
DP_A[6][3] = 125.0 / 192.0
DP_A[6][4] = -2187.0 / 6784.0
DP_A[6][5] = 11.0 / 84.0
DP_B5[:] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0]
cdef double DP_B4[7]
DP_B4[:] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0,
            187.0 / 2100.0, 1.0 / 40.0]
for _i in range(7):
    DP_E[_i] = DP_B5[_i] - DP_B4[_i]


cdef void _rhs(int n, int n_h, int[::1] h_row, int[::1] h_col, cplx[::1] h_val,
               double[::1] damp, double[::1] decay,
               int n_quad, int[::1] q_i, int[::1] q_j, int[::1] q_k, int[::1] q_l,
               double[::1] q_w, cplx* y, cplx* dy) noexcept nogil:
    """dy = RHS(y); y holds rho (n*n row-major) then the loss accumulator."""
    cdef int i, j, a, b, t
    cdef cplx v
    cdef double eps_rate = 0.0
    for i in range(n * n):
        dy[i] = damp[i] * y[i]
    # -i (H rho - rho H), one sweep per Hamiltonian nonzero
    for t in range(n_h):
        a = h_row[t]
        b = h_col[t]
        v = -1j * h_val[t]
        for j in range(n):
            dy[a * n + j] = dy[a * n + j] + v * y[b * n + j]
        for i in range(n):
            dy[i * n + b] = dy[i * n + b] - v * y[i * n + a]
    # + sum_q A_q rho A_q^T, unrolled over nonzero pairs
    for t in range(n_quad):
        dy[q_i[t] * n + q_j[t]] = dy[q_i[t] * n + q_j[t]] + q_w[t] * y[q_k[t] * n + q_l[t]]
    for i in range(n):
        eps_rate += decay[i] * y[i * n + i].real
    dy[n * n] = eps_rate


def integrate_pulse(h, decay, refill, rho0, duration, double rel_tol=1e-8, double abs_tol=1e-12):
    """Adaptive integration over one pulse; see ``_bloch_py`` for the contract."""
    h_arr = np.ascontiguousarray(h, dtype=np.complex128)
    cdef int n = h_arr.shape[0]
    decay_arr = np.ascontiguousarray(decay, dtype=np.float64)
    refill_arr = np.asarray(refill, dtype=np.float64).reshape((-1, n, n))
    cdef int m = n * n + 1

    rows, cols = np.nonzero(h_arr)
    h_row_np = np.ascontiguousarray(rows, dtype=np.intc)
    h_col_np = np.ascontiguousarray(cols, dtype=np.intc)
    h_val_np = np.ascontiguousarray(h_arr[rows, cols])
    cdef int n_h = h_row_np.shape[0]

    # expand A rho A^T into (i, j) += w * rho[k, l] quads
    qi, qj, qk, ql, qw = [], [], [], [], []
    for op in refill_arr:
        nz = np.transpose(np.nonzero(op))
        for (i1, k1) in nz:
            for (j1, l1) in nz:
                qi.append(i1)
                qj.append(j1)
                qk.append(k1)
                ql.append(l1)
                qw.append(op[i1, k1] * op[j1, l1])
    q_i_np = np.asarray(qi, dtype=np.intc)
    q_j_np = np.asarray(qj, dtype=np.intc)
    q_k_np = np.asarray(qk, dtype=np.intc)
    q_l_np = np.asarray(ql, dtype=np.intc)
    q_w_np = np.asarray(qw, dtype=np.float64)
    cdef int n_quad = q_w_np.shape[0]

    damp_np = (-0.5 * (decay_arr[:, None] + decay_arr[None, :])).ravel().copy()

    y_np = np.empty(m, dtype=np.complex128)
    y_np[: n * n] = np.ascontiguousarray(rho0, dtype=np.complex128).ravel()
    y_np[n * n] = 0.0
    ks_np = np.zeros((7, m), dtype=np.complex128)
    ytmp_np = np.empty(m, dtype=np.complex128)
    ynew_np = np.empty(m, dtype=np.complex128)

    cdef int[::1] h_row = h_row_np
    cdef int[::1] h_col = h_col_np
    cdef cplx[::1] h_val = h_val_np
    cdef double[::1] damp = damp_np
    cdef double[::1] decay_mv = decay_arr
    cdef int[::1] q_i = q_i_np
    cdef int[::1] q_j = q_j_np
    cdef int[::1] q_k = q_k_np
    cdef int[::1] q_l = q_l_np
    cdef double[::1] q_w = q_w_np
    cdef cplx[::1] y = y_np
    cdef cplx[:, ::1] ks = ks_np
    cdef cplx[::1] ytmp = ytmp_np
    cdef cplx[::1] ynew = ynew_np

    cdef double t = 0.0
    cdef double t1 = float(duration)
    cdef double span = t1
    cdef double dt, dt_min, err, sc, d0, d1, factor
    cdef long n_steps = 0, max_steps = 10000000
    cdef int i, stage, k
    cdef cplx acc
    cdef bint failed = 0

    if span <= 0.0:
        raise ValueError("duration must be positive")

    with nogil:
        _rhs(n, n_h, h_row, h_col, h_val, damp, decay_mv,
             n_quad, q_i, q_j, q_k, q_l, q_w, &y[0], &ks[0, 0])

        d0 = 0.0
        d1 = 0.0
        for i in range(m):
            sc = abs_tol + rel_tol * cabs(y[i])
            d0 += (cabs(y[i]) / sc) ** 2
            d1 += (cabs(ks[0, i]) / sc) ** 2
        d0 = sqrt(d0)
        d1 = sqrt(d1)
        if d1 > 0.0 and d0 > 0.0:
            dt = fmin(span, 0.01 * d0 / d1)
        else:
            dt = span * 1e-3
        dt = fmax(dt, span * 1e-12)
        dt_min = span * 1e-15

        while t < t1:
            if n_steps >= max_steps:
                failed = 1
                break
            dt = fmin(dt, t1 - t)
            for stage in range(1, 7):
                for i in range(m):
                    acc = 0
                    for k in range(stage):
                        if DP_A[stage][k] != 0.0:
                            acc = acc + DP_A[stage][k] * ks[k, i]
                    ytmp[i] = y[i] + dt * acc
                _rhs(n, n_h, h_row, h_col, h_val, damp, decay_mv,
                     n_quad, q_i, q_j, q_k, q_l, q_w, &ytmp[0], &ks[stage, 0])
            err = 0.0
            for i in range(m):
                acc = 0
                for k in range(7):
                    if DP_B5[k] != 0.0:
                        acc = acc + DP_B5[k] * ks[k, i]
                ynew[i] = y[i] + dt * acc
                acc = 0
                for k in range(7):
                    if DP_E[k] != 0.0:
                        acc = acc + DP_E[k] * ks[k, i]
                sc = abs_tol + rel_tol * fmax(cabs(y[i]), cabs(ynew[i]))
                err += (dt * cabs(acc) / sc) ** 2
            err = sqrt(err / m)
            if err <= 1.0:
                t += dt
                for i in range(m):
                    y[i] = ynew[i]
                    ks[0, i] = ks[6, i]  # FSAL
                n_steps += 1
            if err > 0.0:
                factor = 0.9 * pow(err, -0.2)
            else:
                factor = 5.0
            dt = dt * fmin(5.0, fmax(0.2, factor))
            if dt < dt_min:
                failed = 1
                break

    if failed:
        from ..errors import StepUnderflow

        raise StepUnderflow(f"compiled integrator failed at t={t:.6g} after {n_steps} steps")

    rho = y_np[: n * n].reshape(n, n).copy()
    rho = 0.5 * (rho + rho.conj().T)
    return rho, float(y_np[n * n].real), int(n_steps)
