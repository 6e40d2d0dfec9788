"""Closed harmonic chain: normal modes, their evolution, and the covariance matrix.

Units are m = hbar = 1. Couplings are expressed in units of omega0**2.
Mode ``l`` runs over 1..N and is stored at array index ``l - 1``; mode N is
the unshifted mode with frequency omega0.

Covariance matrices follow the convention Gamma = 2 Re<...> (symmetrized), so
the uncoupled ground state has Gamma = diag(1/omega0, ..., omega0, ...) and all
symplectic eigenvalues of a pure state equal 1. Ordering is (q_1..q_N, p_1..p_N).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

#: Upper bound on the RK4 step, as a fraction of the shortest period.
MIN_STEPS_PER_PERIOD = 50
#: Default resolution; keeps Wronskian drift well below 1e-8 over long runs.
DEFAULT_STEPS_PER_PERIOD = 400
WRONSKIAN_DRIFT_PER_TIME = 1e-8
IMAG_RESIDUE_TOL = 1e-12


class IntegrationError(RuntimeError):
    """Raised when the mode integration fails its Wronskian check."""


@dataclass(frozen=True)
class ChainParams:
    n_osc: int
    omega0: float = 1.0

    def __post_init__(self):
        if int(self.n_osc) != self.n_osc or self.n_osc < 4 or self.n_osc % 2:
            raise ValueError(f"n_osc must be an even integer >= 4, got {self.n_osc}")
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        object.__setattr__(self, "n_osc", int(self.n_osc))
        object.__setattr__(self, "omega0", float(self.omega0))

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.n_osc + 1)

    @property
    def mode_weights(self) -> np.ndarray:
        """``4 sin^2(pi l / N)`` for l = 1..N."""
        return 4.0 * np.sin(np.pi * self.modes / self.n_osc) ** 2

    @property
    def odd(self) -> np.ndarray:
        """Boolean mask of odd modes."""
        return self.modes % 2 == 1

    def eigenfrequencies(self, c) -> np.ndarray:
        """All N eigenfrequencies at coupling ``c`` (scalar)."""
        if c < 0:
            raise ValueError(f"coupling must be nonnegative, got {c}")
        return np.sqrt(self.omega0**2 + c * self.mode_weights)


def eigenfrequency(params: ChainParams, l: int, c: float) -> float:
    """omega_l = sqrt(omega0^2 + 4 c sin^2(pi l / N))."""
    if not 1 <= l <= params.n_osc:
        raise ValueError(f"mode index {l} outside 1..{params.n_osc}")
    if c < 0:
        raise ValueError(f"coupling must be nonnegative, got {c}")
    return float(np.sqrt(params.omega0**2 + 4.0 * c * np.sin(np.pi * l / params.n_osc) ** 2))


@dataclass(frozen=True)
class CouplingSchedule:
    """Piecewise-linear coupling c(t), held constant outside the sample range."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float).reshape(-1)
        if t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be non-empty and of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("schedule times must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("coupling values must be finite and nonnegative")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c: float, t_end: float = 1.0) -> "CouplingSchedule":
        return cls(np.array([0.0, t_end]), np.array([c, c]))

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    @property
    def final_value(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class ModeTrajectory:
    mode_index: int
    times: np.ndarray
    Y: np.ndarray
    Ydot: np.ndarray
    X: np.ndarray
    Xdot: np.ndarray

    @property
    def wronskian(self) -> np.ndarray:
        return self.Y * self.Xdot - self.Ydot * self.X


@dataclass(frozen=True)
class ModeQuadratures:
    """Symmetrized second moments of one normal mode (scalars or time series)."""

    mode_index: int
    qq: np.ndarray | float
    pp: np.ndarray | float
    qp: np.ndarray | float

    @property
    def uncertainty(self):
        return self.qq * self.pp - self.qp**2

    def at(self, k: int) -> "ModeQuadratures":
        return ModeQuadratures(self.mode_index, float(np.asarray(self.qq)[k]),
                               float(np.asarray(self.pp)[k]), float(np.asarray(self.qp)[k]))


@dataclass(frozen=True)
class CovarianceMatrix:
    matrix: np.ndarray
    omega0: float = 1.0
    t: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n_osc(self) -> int:
        return self.matrix.shape[0] // 2

    @property
    def qq(self) -> np.ndarray:
        n = self.n_osc
        return self.matrix[:n, :n]

    @property
    def qp(self) -> np.ndarray:
        n = self.n_osc
        return self.matrix[:n, n:]

    @property
    def pp(self) -> np.ndarray:
        n = self.n_osc
        return self.matrix[n:, n:]


def default_dt(params: ChainParams, c_max: float, steps_per_period: int = DEFAULT_STEPS_PER_PERIOD) -> float:
    omega_max = float(np.sqrt(params.omega0**2 + 4.0 * c_max))
    return 2.0 * np.pi / omega_max / steps_per_period


def _half_step_coupling(schedule: CouplingSchedule, t0: float, dt: float, n_steps: int) -> np.ndarray:
    return schedule(t0 + 0.5 * dt * np.arange(2 * n_steps + 1))


def time_grid(t_final: float, dt: float, knots=None) -> tuple[np.ndarray, float]:
    """Uniform grid on [0, t_final] whose step does not exceed ``dt``.

    With ``knots``, prefer the coarsest grid (up to twice the minimal step
    count) that contains every interior knot, so that RK4 never straddles a
    kink of a piecewise-linear schedule.
    """
    if not t_final > 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n_steps = max(1, int(np.ceil(t_final / dt - 1e-9)))
    if knots is not None:
        inner = np.asarray(knots, dtype=float)
        inner = inner[(inner > 0) & (inner < t_final)] / t_final
        if inner.size:
            for start in range(n_steps, 2 * n_steps + 1, 512):
                ns = np.arange(start, min(start + 512, 2 * n_steps + 1))
                f = np.multiply.outer(ns, inner)
                hit = np.flatnonzero(np.all(np.abs(f - np.rint(f)) <= 1e-9 * ns[:, None], axis=1))
                if hit.size:
                    n_steps = int(ns[hit[0]])
                    break
    step = t_final / n_steps
    return np.linspace(0.0, t_final, n_steps + 1), step


def fundamental_solutions(params: ChainParams, schedule: CouplingSchedule, t_final: float,
                          dt: float | None = None, check: bool = True):
    """Batched fundamental solutions for all modes.

    Returns ``(times, sol)`` where ``sol[k, l-1]`` is the 2x2 matrix
    ``[[Y, Ydot], [X, Xdot]]`` at ``times[k]``.
    """
    dt_limit = default_dt(params, schedule.max_value, MIN_STEPS_PER_PERIOD)
    knots = None
    if dt is None:
        dt = default_dt(params, schedule.max_value)
        knots = schedule.times
    elif dt > dt_limit * (1 + 1e-12):
        raise IntegrationError(
            f"dt={dt:g} exceeds the stability bound {dt_limit:g} (1/{MIN_STEPS_PER_PERIOD} of the shortest period)")
    times, step = time_grid(t_final, dt, knots)
    c_half = _half_step_coupling(schedule, 0.0, step, len(times) - 1)
    init = np.zeros((params.n_osc, 2, 2))
    init[:, 0, 0] = 1.0  # Y(0) = 1, Ydot(0) = 0
    init[:, 1, 1] = 1.0  # X(0) = 0, Xdot(0) = 1
    sol = kernels.rk4_modes(c_half, params.mode_weights, params.omega0**2, step, init)
    if check:
        w = sol[:, :, 0, 0] * sol[:, :, 1, 1] - sol[:, :, 0, 1] * sol[:, :, 1, 0]
        drift = np.abs(w - 1.0).max()
        if drift > WRONSKIAN_DRIFT_PER_TIME * max(1.0, t_final):
            raise IntegrationError(f"Wronskian drift {drift:.3e} over t={t_final:g}; reduce dt")
    return times, sol


def evolve_modes(params: ChainParams, schedule: CouplingSchedule, t_final: float,
                 dt: float | None = None) -> list[ModeTrajectory]:
    """Integrate every mode's fundamental solutions on a common grid."""
    times, sol = fundamental_solutions(params, schedule, t_final, dt)
    return [
        ModeTrajectory(int(l), times, sol[:, i, 0, 0], sol[:, i, 0, 1], sol[:, i, 1, 0], sol[:, i, 1, 1])
        for i, l in enumerate(params.modes)
    ]


def quadratures_from_fundamental(Y, Ydot, X, Xdot, omega0: float):
    """Second moments evolved from the uncoupled ground state."""
    a, b = 0.5 / omega0, 0.5 * omega0
    qq = a * Y**2 + b * X**2
    pp = a * Ydot**2 + b * Xdot**2
    qp = a * Y * Ydot + b * X * Xdot
    return qq, pp, qp


def mode_quadratures(traj: ModeTrajectory, params: ChainParams) -> ModeQuadratures:
    qq, pp, qp = quadratures_from_fundamental(traj.Y, traj.Ydot, traj.X, traj.Xdot, params.omega0)
    return ModeQuadratures(traj.mode_index, qq, pp, qp)


def sudden_switch_quadratures(params: ChainParams, c: float, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact mode moments at times ``t`` after switching the coupling 0 -> c at t=0.

    Returns arrays of shape ``t.shape + (N,)``.
    """
    w = params.eigenfrequencies(c)
    wt = np.multiply.outer(np.asarray(t, dtype=float), w)
    cs, sn = np.cos(wt), np.sin(wt)
    return quadratures_from_fundamental(cs, -w * sn, sn / w, cs, params.omega0)


def circulant_rows(qq, pp, qp, check: bool = True):
    """First rows of the three circulant blocks from mode moments (last axis = modes).

    Pairs each mode with its mirror l -> N-l, so only cosines survive; the
    discarded sine part is checked against ``IMAG_RESIDUE_TOL``.
    """
    qq, pp, qp = (np.asarray(a, dtype=float) for a in (qq, pp, qp))
    n = qq.shape[-1]
    l = np.arange(1, n + 1)
    d = np.arange(n)
    phase = 2.0 * np.pi * np.outer(l, d) / n
    cos, sin = np.cos(phase), np.sin(phase)
    rows = tuple((2.0 / n) * (a @ cos) for a in (qq, pp, qp))
    if check:
        for a in (qq, pp, qp):
            residue = np.abs(a @ sin).max() / n
            scale = max(1.0, float(np.abs(a).max()))
            if residue > IMAG_RESIDUE_TOL * scale:
                raise ValueError(
                    f"imaginary residue {residue:.2e} in covariance reconstruction: mode symmetry l <-> N-l is broken")
    return rows


def _circulant(row: np.ndarray) -> np.ndarray:
    n = row.shape[0]
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return row[idx]


def covariance_from_moments(qq, pp, qp, omega0: float = 1.0, t: float = 0.0) -> CovarianceMatrix:
    rq, rp, rx = circulant_rows(qq, pp, qp)
    gq, gp, gx = _circulant(rq), _circulant(rp), _circulant(rx)
    return CovarianceMatrix(np.block([[gq, gx], [gx.T, gp]]), omega0, t)


def reconstruct_covariance(quads: Sequence[ModeQuadratures], params: ChainParams, t: float = 0.0) -> CovarianceMatrix:
    """Assemble Gamma from one scalar quadrature record per mode."""
    if sorted(q.mode_index for q in quads) != list(params.modes):
        raise ValueError("need exactly one quadrature record per mode 1..N")
    order = sorted(quads, key=lambda q: q.mode_index)
    qq = np.array([float(q.qq) for q in order])
    pp = np.array([float(q.pp) for q in order])
    qp = np.array([float(q.qp) for q in order])
    return covariance_from_moments(qq, pp, qp, params.omega0, t)


def ground_state_covariance(params: ChainParams) -> CovarianceMatrix:
    n = params.n_osc
    diag = np.r_[np.full(n, 1.0 / params.omega0), np.full(n, params.omega0)]
    return CovarianceMatrix(np.diag(diag), params.omega0, 0.0)


def mode_energy(quad: ModeQuadratures, omega_l: float):
    """Mean energy (pp + omega^2 qq) / 2 of one mode."""
    return 0.5 * (quad.pp + omega_l**2 * quad.qq)


def dissipated_work(profile) -> tuple[np.ndarray, float]:
    """Irreversible work omega_l sinh^2 r_l per mode, and the total."""
    w = np.asarray(profile.omega) * np.sinh(np.asarray(profile.r)) ** 2
    return w, float(w.sum())
