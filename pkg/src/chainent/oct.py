"""Steepest-descent optimal control of the coupling schedule.

Each eigenmode is represented by two classical trajectories started at
(x, p) = (1/sqrt(2 w0), 0) and (0, sqrt(w0/2)). Their summed energy is the
ground-state energy w0/2 and their summed second moments reproduce the quantum
ones exactly, so every cost below is a function of the classical state at the
final time tau.

The costates are the exact reverse-mode derivatives of the discrete RK4 map,
started from xi(tau) = dh/dx. They approximate the continuous adjoint system
x^xi' = w^2 p^xi, p^xi' = -x^xi to the order of the integrator, and the
functional gradient is

    g(t) = d(xi.a)/dc = -sum_l 4 sin^2(pi l/N) sum_j x_lj(t) p^xi_lj(t).

The per-sample gradient is obtained from the same sweep, so it equals the
derivative of the computed cost up to round-off.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .chain import ChainParams, CouplingSchedule, IntegrationError, default_dt

log = logging.getLogger(__name__)

COSTS = ("entmax", "weak", "energy", "opposite_nu")
MAX_HALVINGS = 10
MAX_FINE_STEPS = 1_000_000


class OptimizationDiverged(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ControlProblem:
    params: ChainParams
    horizon: float
    n_samples: int = 201
    cost: str = "opposite_nu"
    bounds: tuple | None = None
    substeps: int | None = None

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.n_samples < 2:
            raise ValueError("need at least two control samples")
        if self.cost not in COSTS:
            raise ValueError(f"cost must be one of {COSTS}, got {self.cost!r}")
        if self.bounds is not None:
            lo, hi = self.bounds
            if lo < 0 or hi < lo:
                raise ValueError(f"invalid bounds {self.bounds}")

    @property
    def control_times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_samples)

    def schedule(self, values) -> CouplingSchedule:
        return CouplingSchedule(self.control_times, np.asarray(values, dtype=float))

    def clip(self, values) -> np.ndarray:
        v = np.maximum(np.asarray(values, dtype=float), 0.0)
        if self.bounds is not None:
            v = np.clip(v, *self.bounds)
        return v

    def steps_per_interval(self, values) -> int:
        if self.substeps is not None:
            return self.substeps
        c_ref = max(float(np.max(values)), self.bounds[1] if self.bounds else 0.0)
        interval = self.horizon / (self.n_samples - 1)
        return max(1, int(np.ceil(interval / default_dt(self.params, c_ref))))


def initial_states(params: ChainParams) -> np.ndarray:
    """(N, 2, 2) array: mode, trajectory, (x, p)."""
    w0 = params.omega0
    init = np.zeros((params.n_osc, 2, 2))
    init[:, 0, 0] = 1.0 / np.sqrt(2.0 * w0)
    init[:, 1, 1] = np.sqrt(0.5 * w0)
    return init


@dataclass
class Trajectories:
    times: np.ndarray          # fine grid
    c_half: np.ndarray         # coupling on the half-step grid
    states: np.ndarray         # (T, N, 2, 2)
    costates: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def forward_states(problem: ControlProblem, values) -> Trajectories:
    values = np.asarray(values, dtype=float)
    m = problem.steps_per_interval(values)
    n_steps = m * (problem.n_samples - 1)
    if n_steps > MAX_FINE_STEPS:
        raise IntegrationError(f"{n_steps} RK4 steps needed for max coupling {values.max():g}; "
                               "bound the control or shorten the horizon")
    times = np.linspace(0.0, problem.horizon, n_steps + 1)
    dt = problem.horizon / n_steps
    c_half = np.interp(0.5 * dt * np.arange(2 * n_steps + 1), problem.control_times, values)
    p = problem.params
    states = kernels.rk4_modes(c_half, p.mode_weights, p.omega0**2, dt, initial_states(p))
    return Trajectories(times, c_half, states)


def final_moments(states_tau: np.ndarray):
    x, pm = states_tau[..., 0], states_tau[..., 1]
    return (x**2).sum(-1), (pm**2).sum(-1), (x * pm).sum(-1)


def mode_energy_ratio(states_tau: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """2E/omega per mode, which equals cosh(2 r) for the quantum mode."""
    qq, pp, _ = final_moments(states_tau)
    return (pp + omega**2 * qq) / omega


def _terminal(problem: ControlProblem, states_tau: np.ndarray, c_final: float):
    """Cost h, dh/d(state) with the state's shape, and the explicit dh/dc(tau)."""
    p = problem.params
    n = p.n_osc
    odd = p.odd
    w0 = p.omega0
    w = p.eigenfrequencies(c_final)
    dw_dc = p.mode_weights / (2.0 * w)
    qq, pp, qp = final_moments(states_tau)
    active = p.mode_weights > 1e-14

    if problem.cost == "opposite_nu":
        h, g_qq, g_pp, g_qp = _opposite_nu_sq(qq, pp, qp, odd)
        dh_dw = np.zeros(n)
    else:
        C = (pp + w**2 * qq) / w
        dC_dqq, dC_dpp, dC_dw = w, 1.0 / w, qq - pp / w**2
        if problem.cost == "energy":
            h = -C.sum()
            dh_dC = -np.ones(n)
            dh_dw_direct = np.zeros(n)
        else:
            root = np.sqrt(np.maximum(C**2 - 1.0, 1e-300))
            e = C - root  # e^{-2r}
            de_dC = np.where(active, -e / root, 0.0)
            wt = w / w0 if problem.cost == "entmax" else np.ones(n)
            s_o = (2.0 / n) * (e[odd] / wt[odd]).sum()
            s_e = (2.0 / n) * (wt[~odd] * e[~odd]).sum()
            h = s_o * s_e
            dh_de = np.where(odd, s_e * (2.0 / n) / wt, s_o * (2.0 / n) * wt)
            dh_dC = dh_de * de_dC
            if problem.cost == "entmax":
                dh_dwt = np.where(odd, -s_e * (2.0 / n) * e / wt**2, s_o * (2.0 / n) * e)
                dh_dw_direct = dh_dwt / w0
            else:
                dh_dw_direct = np.zeros(n)
        g_qq, g_pp, g_qp = dh_dC * dC_dqq, dh_dC * dC_dpp, np.zeros(n)
        dh_dw = dh_dC * dC_dw + dh_dw_direct

    x, pm = states_tau[..., 0], states_tau[..., 1]
    grad = np.empty_like(states_tau)
    grad[..., 0] = 2.0 * g_qq[:, None] * x + g_qp[:, None] * pm
    grad[..., 1] = 2.0 * g_pp[:, None] * pm + g_qp[:, None] * x
    grad[~active] = 0.0  # control cannot move the unshifted mode
    dh_dc = float(np.sum(np.where(active, dh_dw * dw_dc, 0.0)))
    return float(h), grad, dh_dc


def _opposite_nu_sq(qq, pp, qp, odd):
    """nu_minus^2 of the opposite pair and its gradient w.r.t. the mode moments."""
    n = qq.shape[0]
    ev = ~odd
    oq, op, ox = qq[odd].sum(), pp[odd].sum(), qp[odd].sum()
    eq, ep, ex = qq[ev].sum(), pp[ev].sum(), qp[ev].sum()
    x = 4.0 * (oq * ep + eq * op - 2.0 * ox * ex)
    do, de = oq * op - ox**2, eq * ep - ex**2
    y = 16.0 * do * de
    root = np.sqrt(max(x * x - 4.0 * y, 1e-300))
    h = (2.0 / n**2) * (x - root)
    dh_dx = (2.0 / n**2) * (1.0 - x / root)
    dh_dy = (2.0 / n**2) * (2.0 / root)
    # partials of x and y with respect to the parity sums
    g = {
        "oq": dh_dx * 4.0 * ep + dh_dy * 16.0 * op * de,
        "op": dh_dx * 4.0 * eq + dh_dy * 16.0 * oq * de,
        "ox": dh_dx * -8.0 * ex + dh_dy * 16.0 * -2.0 * ox * de,
        "eq": dh_dx * 4.0 * op + dh_dy * 16.0 * ep * do,
        "ep": dh_dx * 4.0 * oq + dh_dy * 16.0 * eq * do,
        "ex": dh_dx * -8.0 * ox + dh_dy * 16.0 * -2.0 * ex * do,
    }
    g_qq = np.where(odd, g["oq"], g["eq"])
    g_pp = np.where(odd, g["op"], g["ep"])
    g_qp = np.where(odd, g["ox"], g["ex"])
    return float(h), g_qq, g_pp, g_qp


def cost(problem: ControlProblem, values) -> float:
    tr = forward_states(problem, values)
    return _terminal(problem, tr.states[-1], float(values[-1]))[0]


def backward_costates(problem: ControlProblem, traj: Trajectories, terminal: np.ndarray):
    """Discrete costates on the forward grid and dJ/dc on the half-step grid."""
    if traj.states.shape[1:] != terminal.shape:
        raise ValueError("terminal costate does not match the state layout")
    p = problem.params
    return kernels.rk4_adjoint(traj.c_half, p.mode_weights, p.omega0**2, traj.dt, traj.states, terminal)


def control_gradient(states: np.ndarray, costates: np.ndarray, params: ChainParams) -> np.ndarray:
    """Pointwise g(t) = -sum_l 4 sin^2(pi l/N) sum_j x_lj p^xi_lj."""
    xp = (states[..., 0] * costates[..., 1]).sum(-1)
    return -(xp * params.mode_weights).sum(-1)


def _interp_transpose(g_half: np.ndarray, n_knots: int) -> np.ndarray:
    """Pull dJ/dc_half back to the knots of the piecewise-linear schedule."""
    per = (len(g_half) - 1) // (n_knots - 1)
    j = np.arange(len(g_half))
    i = np.minimum(j // per, n_knots - 2)
    f = (j - i * per) / per
    out = np.bincount(i, (1.0 - f) * g_half, minlength=n_knots)
    out += np.bincount(i + 1, f * g_half, minlength=n_knots)
    return out


@dataclass
class Evaluation:
    J: float
    pointwise: np.ndarray      # g at control samples (density)
    sample_grad: np.ndarray    # dJ / dc_k for the piecewise-linear samples
    traj: Trajectories


def evaluate(problem: ControlProblem, values) -> Evaluation:
    values = np.asarray(values, dtype=float)
    traj = forward_states(problem, values)
    J, terminal, dh_dc = _terminal(problem, traj.states[-1], float(values[-1]))
    traj.costates, g_half = backward_costates(problem, traj, terminal)
    g = control_gradient(traj.states, traj.costates, problem.params)
    sample = _interp_transpose(g_half, problem.n_samples)
    sample[-1] += dh_dc
    stride = (len(traj.times) - 1) // (problem.n_samples - 1)
    return Evaluation(J, g[::stride].copy(), sample, traj)


@dataclass
class TraceRecord:
    iteration: int
    J: float
    step: float
    grad_norm: float
    schedule_hash: str
    accepted: bool = True


@dataclass
class OptimizationTrace:
    records: list = field(default_factory=list)
    rejected: int = 0

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.J for r in self.records if r.accepted])

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"iter": r.iteration, "J": r.J, "step": r.step, "grad_norm": r.grad_norm,
                        "hash": r.schedule_hash, "accepted": r.accepted}) + "\n"
            for r in self.records
        )


def _hash(values) -> str:
    return hashlib.sha1(np.ascontiguousarray(values, dtype=float).tobytes()).hexdigest()[:12]


def smooth(values, window: int) -> np.ndarray:
    """Zero-phase moving average (forward and backward pass), edges preserved."""
    if window <= 1:
        return np.asarray(values, dtype=float)
    from scipy.signal import filtfilt

    b = np.ones(window) / window
    return filtfilt(b, [1.0], np.asarray(values, dtype=float), padtype="odd", padlen=min(3 * window, len(values) - 1))


def optimize(problem: ControlProblem, initial_values, step: float = 1.0, max_iter: int = 100,
             tol: float = 1e-10, smooth_window: int = 0, grad_mode: str = "pointwise"):
    """Steepest descent on the control samples with backtracking.

    The update is ``c <- clip(c - step * g)``, with ``g`` the pointwise gradient
    (``grad_mode="pointwise"``) or the per-sample gradient (``"sample"``).
    A step that raises J is halved and retried; ``MAX_HALVINGS`` consecutive
    failures abort with :class:`OptimizationDiverged`. Stops when an accepted
    step changes J by less than ``tol``.

    Returns ``(values, trace)``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    values = problem.clip(initial_values)
    trace = OptimizationTrace()
    ev = evaluate(problem, values)
    trace.records.append(TraceRecord(0, ev.J, step, float(np.linalg.norm(ev.sample_grad)), _hash(values)))
    it = 0
    while it < max_iter:
        direction = ev.pointwise if grad_mode == "pointwise" else ev.sample_grad
        if smooth_window > 1:
            direction = smooth(direction, smooth_window)
        halvings = 0
        while True:
            trial = problem.clip(values - step * direction)
            ev_trial = evaluate(problem, trial)
            if ev_trial.J <= ev.J:
                break
            trace.rejected += 1
            trace.records.append(TraceRecord(it + 1, ev_trial.J, step, 0.0, _hash(trial), accepted=False))
            halvings += 1
            step *= 0.5
            if halvings >= MAX_HALVINGS:
                raise OptimizationDiverged(
                    f"cost increased for {MAX_HALVINGS} consecutive halvings at iteration {it + 1}", trace)
        it += 1
        delta = ev.J - ev_trial.J
        values, ev = trial, ev_trial
        trace.records.append(TraceRecord(it, ev.J, step, float(np.linalg.norm(ev.sample_grad)), _hash(values)))
        log.debug("iter %d J=%.10g step=%.3g", it, ev.J, step)
        if delta < tol:
            break
    return values, trace
