"""Fast randomized invariant checks, runnable without pytest (``chainent selftest``)."""
from __future__ import annotations

import numpy as np

from .chain import ChainParams, CouplingSchedule, covariance_from_moments, fundamental_solutions, \
    quadratures_from_fundamental
from .entanglement import (log_negativity, opposite_pair_nu_minus, partial_transpose, reduce_pair,
                           symplectic_eigenvalues, symplectic_eigenvalues_2mode)
from .oct import ControlProblem, cost, evaluate
from .squeezing import SqueezingProfile


def random_schedule(rng, t_final: float, c_max: float = 1.0, n_knots: int = 12) -> CouplingSchedule:
    t = np.linspace(0.0, t_final, n_knots)
    return CouplingSchedule(t, rng.uniform(0.0, c_max, n_knots))


def random_profile(rng, params: ChainParams, c: float, r_max: float = 1.5) -> SqueezingProfile:
    half = params.n_osc // 2
    return SqueezingProfile.for_chain(params, c, rng.uniform(0, r_max, half + 1),
                                      rng.uniform(0, np.pi, half + 1))


def random_local_symplectic(rng) -> np.ndarray:
    """4x4 block-diagonal (per oscillator) symplectic map in (q1, q2, p1, p2) order."""
    s = np.zeros((4, 4))
    for i in range(2):
        a, b, c = rng.normal(size=3)
        d = (1.0 + b * c) / a  # det [[a, b], [c, d]] = 1
        s[np.ix_([i, i + 2], [i, i + 2])] = [[a, b], [c, d]]
    return s


def check_wronskian(rng, trials):
    worst = 0.0
    params = ChainParams(8)
    for _ in range(trials):
        sched = random_schedule(rng, 20.0)
        _, sol = fundamental_solutions(params, sched, 20.0, check=False)
        w = sol[..., 0, 0] * sol[..., 1, 1] - sol[..., 0, 1] * sol[..., 1, 0]
        worst = max(worst, float(np.abs(w - 1).max()))
    return worst <= 1e-8, f"max |W - 1| = {worst:.2e}"


def check_purity(rng, trials):
    worst = 0.0
    params = ChainParams(6)
    for _ in range(trials):
        _, sol = fundamental_solutions(params, random_schedule(rng, 10.0), 10.0)
        qq, pp, qp = quadratures_from_fundamental(sol[..., 0, 0], sol[..., 0, 1], sol[..., 1, 0],
                                                  sol[..., 1, 1], params.omega0)
        worst = max(worst, float(np.abs(qq * pp - qp**2 - 0.25).max()))
        cov = covariance_from_moments(qq[-1], pp[-1], qp[-1])
        worst = max(worst, float(np.abs(symplectic_eigenvalues(cov.matrix) - 1).max()))
    return worst <= 1e-8, f"max purity defect = {worst:.2e}"


def check_circulant(rng, trials):
    worst = 0.0
    for _ in range(trials):
        params = ChainParams(int(rng.choice([4, 6, 8, 10])))
        prof = random_profile(rng, params, rng.uniform(0, 1))
        m = covariance_from_moments(*prof.quadratures()).matrix
        n = params.n_osc
        shift = np.roll(np.eye(n), 1, axis=0)
        p = np.kron(np.eye(2), shift)
        worst = max(worst, float(np.abs(p @ m @ p.T - m).max()), float(np.abs(m - m.T).max()))
    return worst <= 1e-12, f"max shift/symmetry defect = {worst:.2e}"


def check_local_invariance(rng, trials):
    worst = 0.0
    for _ in range(trials):
        params = ChainParams(8)
        cov = covariance_from_moments(*random_profile(rng, params, 0.5).quadratures())
        g = reduce_pair(cov, 1, 5).gamma4
        s = random_local_symplectic(rng)
        before = symplectic_eigenvalues_2mode(partial_transpose(g))[0]
        after = symplectic_eigenvalues_2mode(partial_transpose(s @ g @ s.T))[0]
        worst = max(worst, abs(float(after - before)) / max(1.0, float(before)))
    return worst <= 1e-8, f"max relative nu change = {worst:.2e}"


def check_closed_form(rng, trials):
    worst = 0.0
    for _ in range(trials):
        params = ChainParams(int(rng.choice([4, 6, 8])))
        prof = random_profile(rng, params, rng.uniform(0, 1))
        closed = opposite_pair_nu_minus(prof, params).nu_minus
        cov = covariance_from_moments(*prof.quadratures())
        generic = log_negativity(reduce_pair(cov, 1, 1 + params.n_osc // 2)).nu_minus
        worst = max(worst, abs(closed - generic))
    return worst <= 1e-10, f"max |closed - generic| = {worst:.2e}"


def check_gradient(rng, trials, eps=1e-6):
    worst = 0.0
    params = ChainParams(8)
    for _ in range(max(1, trials // 4)):
        problem = ControlProblem(params, 10.0, 21, bounds=(0.0, 1.0))
        values = rng.uniform(0.1, 0.9, problem.n_samples)
        grad = evaluate(problem, values).sample_grad
        k = int(rng.integers(problem.n_samples))
        e = np.zeros_like(values)
        e[k] = eps
        fd = (cost(problem, values + e) - cost(problem, values - e)) / (2 * eps)
        worst = max(worst, abs(fd - grad[k]) / max(abs(fd), 1e-8))
    return worst <= 1e-3, f"max relative FD error = {worst:.2e}"


CHECKS = {
    "wronskian": check_wronskian,
    "purity": check_purity,
    "circulant": check_circulant,
    "local_symplectic_invariance": check_local_invariance,
    "closed_form_vs_generic": check_closed_form,
    "adjoint_gradient": check_gradient,
}


def run_all(seed: int = 0, trials: int = 20):
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS.items():
        ok, detail = check(rng, trials)
        results.append((name, bool(ok), detail))
    return results
