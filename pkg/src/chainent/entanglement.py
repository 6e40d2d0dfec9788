"""Logarithmic negativity of oscillator pairs in a Gaussian chain state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainParams, CovarianceMatrix, circulant_rows

NU_FLOOR = 1e-300
PHYSICAL_TOL = 1e-6
SEPARABLE_TOL = 1e-12  # nu within this of 1 is round-off, not entanglement


@dataclass(frozen=True)
class PairReduction:
    """Two-oscillator covariance ordered (q_n, q_m, p_n, p_m); indices are 1-based."""

    n: int
    m: int
    gamma4: np.ndarray


@dataclass(frozen=True)
class NegativityResult:
    nu_minus: float
    log_neg: float


def log_neg_from_nu(nu):
    """E_N = max(0, -log2 |nu|), with |nu| floored to avoid overflow.

    Values of nu within ``SEPARABLE_TOL`` below 1 map to exactly 0.
    """
    nu = np.maximum(np.abs(nu), NU_FLOOR)
    return np.where(nu >= 1.0 - SEPARABLE_TOL, 0.0, -np.log2(nu))


def reduce_pair(gamma: CovarianceMatrix, n: int, m: int) -> PairReduction:
    N = gamma.n_osc
    if not (1 <= n <= N and 1 <= m <= N) or n == m:
        raise IndexError(f"pair ({n}, {m}) invalid for a chain of {N}")
    idx = [n - 1, m - 1, N + n - 1, N + m - 1]
    return PairReduction(n, m, gamma.matrix[np.ix_(idx, idx)].copy())


def partial_transpose(gamma4: np.ndarray) -> np.ndarray:
    """Momentum sign flip on the second oscillator."""
    flip = np.array([1.0, 1.0, 1.0, -1.0])
    return gamma4 * np.outer(flip, flip)


def two_mode_invariants(gamma4):
    """Seralian and determinant of (batched) 4x4 matrices in (q1, q2, p1, p2) order."""
    g = np.asarray(gamma4)
    det_a = g[..., 0, 0] * g[..., 2, 2] - g[..., 0, 2] * g[..., 2, 0]
    det_b = g[..., 1, 1] * g[..., 3, 3] - g[..., 1, 3] * g[..., 3, 1]
    det_c = g[..., 0, 1] * g[..., 2, 3] - g[..., 0, 3] * g[..., 2, 1]
    return det_a + det_b + 2.0 * det_c, np.linalg.det(g)


def symplectic_eigenvalues_2mode(gamma4):
    """(nu_minus, nu_plus) from the local symplectic invariants."""
    delta, det = two_mode_invariants(gamma4)
    disc = np.sqrt(np.maximum(delta**2 - 4.0 * det, 0.0))
    nu_m = np.sqrt(np.maximum(0.5 * (delta - disc), 0.0))
    nu_p = np.sqrt(0.5 * (delta + disc))
    return nu_m, nu_p


def symplectic_eigenvalues(gamma: np.ndarray) -> np.ndarray:
    """Sorted symplectic eigenvalues of a 2n x 2n matrix in (q..., p...) order.

    Direct diagonalization of i*Omega*Gamma; used as an independent check on the
    invariant formula.
    """
    n = gamma.shape[0] // 2
    omega = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    ev = np.abs(np.linalg.eigvals(1j * omega @ gamma))
    return np.sort(ev)[::2]


def log_negativity(red: PairReduction) -> NegativityResult:
    nu_phys, _ = symplectic_eigenvalues_2mode(red.gamma4)
    if nu_phys < 1.0 - PHYSICAL_TOL:
        raise ValueError(f"non-physical reduction: smallest symplectic eigenvalue {nu_phys:.6g} < 1")
    nu, _ = symplectic_eigenvalues_2mode(partial_transpose(red.gamma4))
    return NegativityResult(float(nu), float(log_neg_from_nu(nu)))


def pair_coupling_matrix(qq, pp, qp):
    """A_{l,m} = 4 (<QQ>_l <PP>_m - <QP>_l <QP>_m), batched over leading axes."""
    qq, pp, qp = (np.asarray(a, dtype=float) for a in (qq, pp, qp))
    return 4.0 * (qq[..., :, None] * pp[..., None, :] - qp[..., :, None] * qp[..., None, :])


def opposite_nu_from_moments(qq, pp, qp, odd_mask):
    """Smallest PT symplectic eigenvalue for opposite oscillators from mode moments.

    Works on the last axis (modes 1..N) and broadcasts over leading axes. Uses
    parity sums of A_{l,m} without forming the N x N matrix.
    """
    qq, pp, qp = (np.asarray(a, dtype=float) for a in (qq, pp, qp))
    n = qq.shape[-1]
    odd = np.asarray(odd_mask, dtype=bool)
    even = ~odd
    oq, op, ox = (a[..., odd].sum(-1) for a in (qq, pp, qp))
    eq, ep, ex = (a[..., even].sum(-1) for a in (qq, pp, qp))
    x = 4.0 * (oq * ep - ox * ex) + 4.0 * (eq * op - ex * ox)
    y = 16.0 * (oq * op - ox**2) * (eq * ep - ex**2)
    inner = np.sqrt(np.maximum(x**2 - 4.0 * y, 0.0))
    return (np.sqrt(2.0) / n) * np.sqrt(np.maximum(x - inner, 0.0))


def opposite_pair_nu_minus(profile, params: ChainParams) -> NegativityResult:
    """Closed-form nu_minus and E_N for oscillators n and n + N/2."""
    if params.n_osc % 2:
        raise ValueError("opposite pairs need an even chain")
    if len(profile.r) != params.n_osc:
        raise ValueError(f"profile has {len(profile.r)} modes, chain has {params.n_osc}")
    A = pair_coupling_matrix(*profile.quadratures())
    odd = params.odd
    even = ~odd
    x = A[np.ix_(odd, even)].sum() + A[np.ix_(even, odd)].sum()
    y = A[np.ix_(odd, odd)].sum() * A[np.ix_(even, even)].sum()
    nu = np.sqrt(2.0) / params.n_osc * np.sqrt(max(x - np.sqrt(max(x * x - 4.0 * y, 0.0)), 0.0))
    return NegativityResult(float(nu), float(log_neg_from_nu(nu)))


def negativity_by_distance(qq, pp, qp, check: bool = True):
    """E_N and nu_minus versus separation d = 1..N/2 from mode moments.

    Leading axes (e.g. time) are broadcast. Returns ``(nu, log_neg)`` with the
    distance on the last axis.
    """
    rq, rp, rx = circulant_rows(qq, pp, qp, check=check)
    n = rq.shape[-1]
    d = np.arange(1, n // 2 + 1)
    g = np.empty(rq.shape[:-1] + (len(d), 4, 4))
    a0 = (rq[..., 0], rp[..., 0], rx[..., 0])
    ad = (rq[..., d], rp[..., d], rx[..., d])
    q0, p0, x0 = (v[..., None] for v in a0)
    qd, pd, xd = ad
    g[..., 0, 0] = g[..., 1, 1] = q0
    g[..., 2, 2] = g[..., 3, 3] = p0
    g[..., 0, 1] = g[..., 1, 0] = qd
    g[..., 2, 3] = g[..., 3, 2] = pd
    g[..., 0, 2] = g[..., 2, 0] = g[..., 1, 3] = g[..., 3, 1] = x0
    g[..., 0, 3] = g[..., 3, 0] = g[..., 1, 2] = g[..., 2, 1] = xd
    nu, _ = symplectic_eigenvalues_2mode(partial_transpose(g))
    return nu, log_neg_from_nu(nu)
