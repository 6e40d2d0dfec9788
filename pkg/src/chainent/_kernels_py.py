"""Pure-numpy fallback for the RK4 mode kernels.

Both kernels work on a batch of independent 2x2 linear systems whose only
time dependence is the squared eigenfrequency ``omega0sq + w[l] * c(t)``.
The coupling is supplied on the half-step grid ``c_half[j] = c(t0 + j*dt/2)``
so that every RK4 stage reads a tabulated value.
"""
import numpy as np


def rk4_modes(c_half, weights, omega0sq, dt, init):
    """Integrate ``x' = p, p' = -w2 x`` for every mode and column.

    Parameters
    ----------
    c_half : (2K+1,) array
    weights : (L,) array, ``4 sin^2(pi l / N)``
    omega0sq : float
    dt : float
    init : (L, M, 2) array of initial (x, p) pairs, M columns per mode

    Returns
    -------
    (K+1, L, M, 2) array
    """
    c_half = np.asarray(c_half, dtype=float)
    weights = np.asarray(weights, dtype=float)
    state = np.array(init, dtype=float)
    n_steps = (c_half.shape[0] - 1) // 2
    out = np.empty((n_steps + 1,) + state.shape)
    out[0] = state
    w2_all = omega0sq + np.outer(c_half, weights)[:, :, None]
    x = state[..., 0].copy()
    p = state[..., 1].copy()
    h = dt
    for k in range(n_steps):
        wa = w2_all[2 * k]
        wb = w2_all[2 * k + 1]
        wc = w2_all[2 * k + 2]
        k1x, k1p = p, -wa * x
        k2x, k2p = p + 0.5 * h * k1p, -wb * (x + 0.5 * h * k1x)
        k3x, k3p = p + 0.5 * h * k2p, -wb * (x + 0.5 * h * k2x)
        k4x, k4p = p + h * k3p, -wc * (x + h * k3x)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        out[k + 1, ..., 0] = x
        out[k + 1, ..., 1] = p
    return out


def rk4_adjoint(c_half, weights, omega0sq, dt, states, final):
    """Exact reverse-mode derivative of :func:`rk4_modes`.

    Given the forward ``states`` (K+1, L, M, 2) and ``final = dJ/dstate[K]``,
    returns the discrete costates ``dJ/dstate[k]`` with the same shape as
    ``states`` and ``dJ/dc_half`` of shape (2K+1,).
    """
    c_half = np.asarray(c_half, dtype=float)
    weights = np.asarray(weights, dtype=float)
    states = np.asarray(states, dtype=float)
    n_steps = (c_half.shape[0] - 1) // 2
    lam = np.empty_like(states)
    lam[n_steps] = final
    g_half = np.zeros(c_half.shape[0])
    w2_all = omega0sq + np.outer(c_half, weights)[:, :, None]
    wl = weights[:, None]
    h, hh, h6 = dt, 0.5 * dt, dt / 6.0
    lx = np.array(final[..., 0], dtype=float)
    lp = np.array(final[..., 1], dtype=float)
    for k in range(n_steps - 1, -1, -1):
        wa = w2_all[2 * k]
        wb = w2_all[2 * k + 1]
        wc = w2_all[2 * k + 2]
        x, p = states[k, ..., 0], states[k, ..., 1]
        # recompute stage inputs
        k1x, k1p = p, -wa * x
        x2, p2 = x + hh * k1x, p + hh * k1p
        k2x, k2p = p2, -wb * x2
        x3, p3 = x + hh * k2x, p + hh * k2p
        k3x = p3
        x4 = x + h * k3x
        # reverse sweep
        g4x, g4p = h6 * lx, h6 * lp
        gx4, gp4 = -wc * g4p, g4x
        g_half[2 * k + 2] -= (wl * g4p * x4).sum()
        g3x, g3p = 2 * h6 * lx + h * gx4, 2 * h6 * lp + h * gp4
        gx3, gp3 = -wb * g3p, g3x
        g_half[2 * k + 1] -= (wl * g3p * x3).sum()
        g2x, g2p = 2 * h6 * lx + hh * gx3, 2 * h6 * lp + hh * gp3
        gx2, gp2 = -wb * g2p, g2x
        g_half[2 * k + 1] -= (wl * g2p * x2).sum()
        g1x, g1p = h6 * lx + hh * gx2, h6 * lp + hh * gp2
        gx1, gp1 = -wa * g1p, g1x
        g_half[2 * k] -= (wl * g1p * x).sum()
        lx = lx + gx4 + gx3 + gx2 + gx1
        lp = lp + gp4 + gp3 + gp2 + gp1
        lam[k, ..., 0] = lx
        lam[k, ..., 1] = lp
    return lam, g_half
