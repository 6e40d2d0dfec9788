# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 mode kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def rk4_modes(c_half, weights, double omega0sq, double dt, init):
    cdef const double[::1] ch = np.ascontiguousarray(c_half, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    init_arr = np.ascontiguousarray(init, dtype=np.float64)
    cdef Py_ssize_t L = init_arr.shape[0]
    cdef Py_ssize_t M = init_arr.shape[1]
    cdef Py_ssize_t n_steps = (ch.shape[0] - 1) // 2
    out_arr = np.empty((n_steps + 1, L, M, 2), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef const double[:, :, ::1] s0 = init_arr
    cdef Py_ssize_t k, l, m
    cdef double h = dt, hh = 0.5 * dt, h6 = dt / 6.0
    cdef double wa, wb, wc, x, p
    cdef double k1x, k1p, k2x, k2p, k3x, k3p, k4x, k4p

    for l in range(L):
        for m in range(M):
            out[0, l, m, 0] = s0[l, m, 0]
            out[0, l, m, 1] = s0[l, m, 1]

    with nogil:
        for l in range(L):
            for m in range(M):
                x = out[0, l, m, 0]
                p = out[0, l, m, 1]
                for k in range(n_steps):
                    wa = omega0sq + w[l] * ch[2 * k]
                    wb = omega0sq + w[l] * ch[2 * k + 1]
                    wc = omega0sq + w[l] * ch[2 * k + 2]
                    k1x = p
                    k1p = -wa * x
                    k2x = p + hh * k1p
                    k2p = -wb * (x + hh * k1x)
                    k3x = p + hh * k2p
                    k3p = -wb * (x + hh * k2x)
                    k4x = p + h * k3p
                    k4p = -wc * (x + h * k3x)
                    x = x + h6 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                    p = p + h6 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
                    out[k + 1, l, m, 0] = x
                    out[k + 1, l, m, 1] = p
    return out_arr


def rk4_adjoint(c_half, weights, double omega0sq, double dt, states, final):
    cdef const double[::1] ch = np.ascontiguousarray(c_half, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    states_arr = np.ascontiguousarray(states, dtype=np.float64)
    final_arr = np.ascontiguousarray(final, dtype=np.float64)
    cdef const double[:, :, :, ::1] st = states_arr
    cdef const double[:, :, ::1] fin = final_arr
    cdef Py_ssize_t L = states_arr.shape[1]
    cdef Py_ssize_t M = states_arr.shape[2]
    cdef Py_ssize_t n_steps = (ch.shape[0] - 1) // 2
    lam_arr = np.empty((n_steps + 1, L, M, 2), dtype=np.float64)
    g_arr = np.zeros(ch.shape[0], dtype=np.float64)
    cdef double[:, :, :, ::1] lam = lam_arr
    cdef double[::1] g = g_arr
    cdef Py_ssize_t k, l, m
    cdef double h = dt, hh = 0.5 * dt, h6 = dt / 6.0
    cdef double wa, wb, wc, x, p, lx, lp
    cdef double k1x, k1p, k2x, k2p, k3x, x2, p2, x3, p3, x4
    cdef double g4x, g4p, gx4, gp4, g3x, g3p, gx3, gp3, g2x, g2p, gx2, gp2, g1x, g1p, gx1, gp1

    with nogil:
        for l in range(L):
            for m in range(M):
                lx = fin[l, m, 0]
                lp = fin[l, m, 1]
                lam[n_steps, l, m, 0] = lx
                lam[n_steps, l, m, 1] = lp
                for k in range(n_steps - 1, -1, -1):
                    wa = omega0sq + w[l] * ch[2 * k]
                    wb = omega0sq + w[l] * ch[2 * k + 1]
                    wc = omega0sq + w[l] * ch[2 * k + 2]
                    x = st[k, l, m, 0]
                    p = st[k, l, m, 1]
                    k1x = p
                    k1p = -wa * x
                    x2 = x + hh * k1x
                    p2 = p + hh * k1p
                    k2x = p2
                    k2p = -wb * x2
                    x3 = x + hh * k2x
                    p3 = p + hh * k2p
                    k3x = p3
                    x4 = x + h * k3x
                    g4x = h6 * lx
                    g4p = h6 * lp
                    gx4 = -wc * g4p
                    gp4 = g4x
                    g[2 * k + 2] -= w[l] * g4p * x4
                    g3x = 2 * h6 * lx + h * gx4
                    g3p = 2 * h6 * lp + h * gp4
                    gx3 = -wb * g3p
                    gp3 = g3x
                    g[2 * k + 1] -= w[l] * g3p * x3
                    g2x = 2 * h6 * lx + hh * gx3
                    g2p = 2 * h6 * lp + hh * gp3
                    gx2 = -wb * g2p
                    gp2 = g2x
                    g[2 * k + 1] -= w[l] * g2p * x2
                    g1x = h6 * lx + hh * gx2
                    g1p = h6 * lp + hh * gp2
                    gx1 = -wa * g1p
                    gp1 = g1x
                    g[2 * k] -= w[l] * g1p * x
                    lx = lx + gx4 + gx3 + gx2 + gx1
                    lp = lp + gp4 + gp3 + gp2 + gp1
                    lam[k, l, m, 0] = lx
                    lam[k, l, m, 1] = lp
    return lam_arr, g_arr
