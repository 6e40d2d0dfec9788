import numpy as np
import pytest
from hypothesis import given, strategies as st

from chainent.chain import (ChainParams, CouplingSchedule, IntegrationError, ModeQuadratures, circulant_rows,
                            covariance_from_moments, default_dt, dissipated_work, eigenfrequency, evolve_modes,
                            fundamental_solutions, ground_state_covariance, mode_energy, mode_quadratures,
                            quadratures_from_fundamental, reconstruct_covariance, sudden_switch_quadratures)
from chainent.entanglement import symplectic_eigenvalues
from chainent.propagation import sudden_switch_profile
from chainent.squeezing import SqueezingProfile

from .oracles import full_chain_covariance


def random_schedule(seed, t_final, c_max=1.0, knots=10):
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, t_final, knots)
    return CouplingSchedule(t, rng.uniform(0.0, c_max, knots))


def moments_at_end(params, schedule, t_final):
    _, sol = fundamental_solutions(params, schedule, t_final)
    s = sol[-1]
    return quadratures_from_fundamental(s[:, 0, 0], s[:, 0, 1], s[:, 1, 0], s[:, 1, 1], params.omega0)


@pytest.mark.parametrize("n, l, c, expected", [
    (8, 8, 0.5, 1.0),
    (4, 2, 0.25, np.sqrt(2.0)),
    (8, 1, 0.5, np.sqrt(1 + 2 * np.sin(np.pi / 8) ** 2)),
])
def test_eigenfrequency_examples(n, l, c, expected):
    assert eigenfrequency(ChainParams(n), l, c) == pytest.approx(expected, rel=1e-14)


def test_eigenfrequency_value_for_n8_l1():
    assert eigenfrequency(ChainParams(8), 1, 0.5) == pytest.approx(1.13705, abs=1e-5)


@given(st.sampled_from([4, 6, 8, 10, 40]), st.floats(0, 10))
def test_eigenfrequency_mirror_symmetry(n, c):
    p = ChainParams(n)
    for l in range(1, n):
        assert eigenfrequency(p, l, c) == pytest.approx(eigenfrequency(p, n - l, c), rel=1e-14)
    assert np.allclose(p.eigenfrequencies(c), [eigenfrequency(p, l, c) for l in p.modes])


@pytest.mark.parametrize("bad", [
    dict(n_osc=5), dict(n_osc=2), dict(n_osc=8, omega0=0.0), dict(n_osc=8, omega0=-1.0),
])
def test_chain_params_validation(bad):
    with pytest.raises(ValueError):
        ChainParams(**bad)


def test_negative_coupling_rejected():
    with pytest.raises(ValueError):
        eigenfrequency(ChainParams(8), 1, -0.1)
    with pytest.raises(ValueError):
        eigenfrequency(ChainParams(8), 9, 0.1)
    with pytest.raises(ValueError):
        CouplingSchedule([0, 1], [0.1, -0.1])
    with pytest.raises(ValueError):
        CouplingSchedule([0, 1, 1], [0.1, 0.2, 0.3])


def test_schedule_interpolation_and_tail():
    s = CouplingSchedule([0.0, 1.0, 3.0], [0.0, 1.0, 0.0])
    assert s(0.5) == pytest.approx(0.5)
    assert s(2.0) == pytest.approx(0.5)
    assert s(10.0) == 0.0
    assert s.max_value == 1.0


@pytest.mark.parametrize("c", [0.0, 0.3, 2.0])
def test_constant_coupling_fundamental_solutions(c):
    p = ChainParams(8)
    trajs = evolve_modes(p, CouplingSchedule.constant(c, 10.0), 10.0)
    for tr in trajs:
        w = eigenfrequency(p, tr.mode_index, c)
        t = tr.times
        # RK4 phase error at the default step stays below 1e-7 over this window
        assert np.allclose(tr.Y, np.cos(w * t), atol=1e-7)
        assert np.allclose(tr.X, np.sin(w * t) / w, atol=1e-7)
        assert np.allclose(tr.Ydot, -w * np.sin(w * t), atol=1e-7)
        assert np.allclose(tr.Xdot, np.cos(w * t), atol=1e-7)


@given(st.integers(0, 10**6), st.sampled_from([4, 6, 8]))
def test_wronskian_conserved(seed, n):
    p = ChainParams(n)
    trajs = evolve_modes(p, random_schedule(seed, 15.0, c_max=2.0), 15.0)
    for tr in trajs:
        assert tr.Y[0] == 1 and tr.Ydot[0] == 0 and tr.X[0] == 0 and tr.Xdot[0] == 1
        assert np.abs(tr.wronskian - 1.0).max() <= 1e-8


def test_coarse_step_rejected():
    p = ChainParams(8)
    sched = CouplingSchedule.constant(1.0, 10.0)
    with pytest.raises(IntegrationError):
        fundamental_solutions(p, sched, 10.0, dt=2 * default_dt(p, 1.0, 50))


def test_wronskian_drift_reported():
    # the largest accepted step drifts by ~5e-7 per unit time
    p = ChainParams(8)
    sched = CouplingSchedule.constant(1.0, 100.0)
    with pytest.raises(IntegrationError, match="Wronskian"):
        fundamental_solutions(p, sched, 100.0, dt=default_dt(p, 1.0, 50))


def test_ground_state_quadratures_at_t0():
    p = ChainParams(8, omega0=1.7)
    trajs = evolve_modes(p, random_schedule(1, 5.0), 5.0)
    for tr in trajs:
        q = mode_quadratures(tr, p).at(0)
        assert (q.qq, q.pp, q.qp) == pytest.approx((1 / (2 * 1.7), 1.7 / 2, 0.0), abs=1e-15)


@given(st.integers(0, 10**6))
def test_purity_of_mode_quadratures(seed):
    p = ChainParams(6)
    trajs = evolve_modes(p, random_schedule(seed, 12.0, c_max=1.5), 12.0)
    for tr in trajs:
        assert np.abs(mode_quadratures(tr, p).uncertainty - 0.25).max() <= 1e-8


def test_sudden_switch_qq_closed_form():
    p = ChainParams(8)
    c, t = 0.4, np.linspace(0.0, 7.0, 50)
    qq, _, _ = sudden_switch_quadratures(p, c, t)
    for l in p.modes:
        w = eigenfrequency(p, l, c)
        expected = np.cos(w * t) ** 2 / 2 + np.sin(w * t) ** 2 / (2 * w**2)
        assert np.allclose(qq[:, l - 1], expected, atol=1e-14)


def test_sudden_switch_matches_integrated_constant_coupling():
    p = ChainParams(8)
    qq, pp, qp = moments_at_end(p, CouplingSchedule.constant(0.7, 9.0), 9.0)
    eq, ep, ex = sudden_switch_quadratures(p, 0.7, 9.0)
    assert np.allclose(qq, eq, atol=1e-9) and np.allclose(pp, ep, atol=1e-9) and np.allclose(qp, ex, atol=1e-9)


def test_ground_state_covariance_from_modes():
    p = ChainParams(8, omega0=1.3)
    quads = [ModeQuadratures(int(l), 1 / (2 * 1.3), 1.3 / 2, 0.0) for l in p.modes]
    cov = reconstruct_covariance(quads, p)
    assert np.allclose(cov.matrix, ground_state_covariance(p).matrix, atol=1e-14)
    assert np.allclose(cov.matrix, np.diag([1 / 1.3] * 8 + [1.3] * 8), atol=1e-14)


def test_reconstruct_requires_every_mode():
    p = ChainParams(4)
    quads = [ModeQuadratures(l, 0.5, 0.5, 0.0) for l in (1, 2, 3)]
    with pytest.raises(ValueError):
        reconstruct_covariance(quads, p)


def test_broken_mode_symmetry_flagged():
    qq = np.array([0.5, 0.5, 0.9, 0.5])  # mode 3 differs from its mirror mode 1
    with pytest.raises(ValueError, match="imaginary residue"):
        circulant_rows(qq, np.full(4, 0.5), np.zeros(4))


@given(st.integers(0, 10**6), st.sampled_from([4, 6, 8, 12]))
def test_covariance_circulant_symmetric_and_pure(seed, n):
    p = ChainParams(n)
    cov = covariance_from_moments(*moments_at_end(p, random_schedule(seed, 8.0), 8.0))
    m = cov.matrix
    assert np.abs(m - m.T).max() <= 1e-12
    for block in (cov.qq, cov.pp, cov.qp):
        for k in range(n):
            assert np.abs(np.roll(np.roll(block, k, 0), k, 1) - block).max() <= 1e-10
    assert np.abs(symplectic_eigenvalues(m) - 1.0).max() <= 1e-6


@given(st.integers(0, 10**6))
def test_mirror_modes_identical(seed):
    p = ChainParams(8)
    qq, pp, qp = moments_at_end(p, random_schedule(seed, 10.0), 10.0)
    for a in (qq, pp, qp):
        assert np.allclose(a[:7], a[:7][::-1], atol=1e-12)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_full_chain_oracle(n):
    p = ChainParams(n)
    sched = random_schedule(n, 10.0, c_max=1.0, knots=6)
    cov = covariance_from_moments(*moments_at_end(p, sched, 10.0))
    ref = full_chain_covariance(n, 1.0, sched.times, sched.values, 10.0)
    assert np.abs(cov.matrix - ref).max() <= 1e-6


def test_sudden_switch_n4_matches_full_chain():
    p = ChainParams(4)
    t = 3.3
    cov = covariance_from_moments(*sudden_switch_quadratures(p, 0.8, t))
    ref = full_chain_covariance(4, 1.0, np.array([0.0, 1.0]), np.array([0.8, 0.8]), t)
    assert np.abs(cov.matrix - ref).max() <= 1e-9


def test_mode_energy_examples():
    assert mode_energy(ModeQuadratures(1, 0.5, 0.5, 0.0), 1.0) == pytest.approx(0.5)
    prof = SqueezingProfile(np.array([1.0]), np.array([1.0]), np.array([0.77]))
    qq, pp, qp = prof.quadratures()
    assert mode_energy(ModeQuadratures(1, qq[0], pp[0], qp[0]), 1.0) == pytest.approx(np.cosh(2) / 2, rel=1e-12)
    assert np.cosh(2) / 2 == pytest.approx(1.88110, abs=1e-5)


def test_mode_energy_constant_after_modulation():
    p = ChainParams(8)
    sched = CouplingSchedule([0.0, 3.0, 6.0], [0.0, 0.9, 0.4])
    trajs = evolve_modes(p, sched, 15.0)
    k0 = np.searchsorted(trajs[0].times, 6.0)
    for tr in trajs:
        e = mode_energy(mode_quadratures(tr, p), eigenfrequency(p, tr.mode_index, 0.4))[k0:]
        assert np.ptp(e) <= 1e-8 * e.mean()


def test_dissipated_work_examples():
    p = ChainParams(8)
    zero = SqueezingProfile.for_chain(p, 0.3, 0.0)
    per_mode, total = dissipated_work(zero)
    assert np.all(per_mode == 0) and total == 0
    for r, expected in [(np.log(2), 9 / 16), (0.5 * np.log(2), 1 / 8)]:
        single = SqueezingProfile(np.array([1.0]), np.array([r]), np.array([0.0]))
        assert dissipated_work(single)[1] == pytest.approx(expected, rel=1e-13)


def test_dissipated_work_linear_in_c():
    p = ChainParams(8)
    cs = [1.0, 2.0, 4.0, 8.0]
    per_c = np.array([dissipated_work(sudden_switch_profile(p, c))[1] / c for c in cs])
    gap = p.n_osc / 2 - per_c
    assert np.all(gap > 0) and np.all(np.diff(gap) < 0)
    # closed form for the quench: W = c N / 2 + N w0 / 2 - sum(w_l) / 2
    w = [p.eigenfrequencies(c) for c in cs]
    exact = [c * 4 + 4 - wl.sum() / 2 for c, wl in zip(cs, w)]
    assert np.allclose(per_c * np.array(cs), exact, rtol=1e-12)
