"""Sudden-switch analytics, entanglement propagation and dispersion.

After a quench 0 -> c every mode oscillates at constant omega_l, so all
quantities here are evaluated in closed form rather than integrated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainParams, sudden_switch_quadratures
from .entanglement import negativity_by_distance
from .squeezing import SqueezingProfile, profile_from_moments

ARRIVAL_THRESHOLD = 1e-3
QUAD_TOL = 1e-6
QUAD_MAX_PANELS = 2**18


def sudden_switch_squeezing(params: ChainParams, c: float) -> np.ndarray:
    """r_l = ln(omega_l / omega0) / 2 for a quench 0 -> c."""
    return 0.5 * np.log(params.eigenfrequencies(c) / params.omega0)


def sudden_switch_profile(params: ChainParams, c: float, t: float = 0.0) -> SqueezingProfile:
    """Squeezing profile at time ``t`` >= 0 after the quench.

    At t = 0+ the moments are still those of the uncoupled ground state, which
    fixes theta_l = pi/2 for every squeezed mode; afterwards each angle rotates
    at its own frequency.
    """
    if c <= 0:
        raise ValueError("sudden switch needs c > 0")
    qq, pp, qp = sudden_switch_quadratures(params, c, t)
    return profile_from_moments(qq, pp, qp, params.eigenfrequencies(c))


def sudden_switch_max_en(params: ChainParams, c: float, alpha: float = 1.0) -> float:
    """Attainable opposite-pair E_N after a quench: -1/2 log2(2 alpha w0^2/N sum_odd 1/w_l^2)."""
    w = params.eigenfrequencies(c)
    arg = 2.0 * alpha * params.omega0**2 / params.n_osc * (1.0 / w[params.odd] ** 2).sum()
    return float(max(0.0, -0.5 * np.log2(arg)))


def sudden_switch_max_en_n8(c: float) -> float:
    """Closed form for eight oscillators, c in units of omega0^2."""
    return float(-0.5 * np.log2((1 + 2 * c) / (1 + 2 * c * (2 + c))))


def group_velocity(c, phi, omega0: float = 1.0):
    """d omega / d phi = c sin(phi) / omega(phi) for omega^2 = w0^2 + 2c(1 - cos phi)."""
    c = np.asarray(c, dtype=float)
    omega = np.sqrt(omega0**2 + 2.0 * c * (1.0 - np.cos(phi)))
    return c * np.sin(phi) / omega


def v_max(c, omega0: float = 1.0):
    """Largest group velocity c / sqrt(w0^2 + 2c), reached at phi = pi/2."""
    c = np.asarray(c, dtype=float)
    return c / np.sqrt(omega0**2 + 2.0 * c)


def predicted_arrival_times(distance, c, omega0: float = 1.0) -> dict:
    """Both arrival-time predictions: d / v_max and d sqrt(w0^2 + 2c) / (2c)."""
    d = np.asarray(distance, dtype=float)
    return {
        "group_velocity": d / v_max(c, omega0),
        "half_group_velocity": d * np.sqrt(omega0**2 + 2.0 * c) / (2.0 * c),
    }


@dataclass
class PropagationMap:
    times: np.ndarray
    distances: np.ndarray
    log_neg: np.ndarray  # shape (len(times), len(distances))
    c: float
    contour_range: tuple = (0.0, 0.1)

    def rows(self):
        for i, t in enumerate(self.times):
            for j, d in enumerate(self.distances):
                yield float(t), int(d), float(self.log_neg[i, j])

    def arrival_times(self, threshold: float = ARRIVAL_THRESHOLD) -> np.ndarray:
        """Earliest time E_N exceeds ``threshold`` per distance (nan if never)."""
        return np.array([first_crossing(self.times, self.log_neg[:, j], threshold)
                         for j in range(len(self.distances))])


def first_crossing(times, series, threshold: float = ARRIVAL_THRESHOLD) -> float:
    above = np.nonzero(np.asarray(series) > threshold)[0]
    if above.size == 0:
        return float("nan")
    k = above[0]
    if k == 0:
        return float(times[0])
    # linear interpolation inside the crossing interval
    t0, t1 = times[k - 1], times[k]
    e0, e1 = series[k - 1], series[k]
    return float(t0 + (threshold - e0) * (t1 - t0) / (e1 - e0))


def _local_maxima(values) -> np.ndarray:
    v = np.asarray(values)
    return np.nonzero((v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]))[0] + 1


def _parabola_vertex(x, y) -> float:
    a, b, _ = np.polyfit(x, y, 2)
    return float(-b / (2 * a)) if a < 0 else float(x[1])


def first_peak(times, series, threshold: float = ARRIVAL_THRESHOLD) -> float:
    """Time of the first maximum of the oscillation envelope of ``series``.

    E_N after a quench oscillates at roughly twice the mode frequency under a
    slowly varying envelope. The envelope is sampled at the carrier maxima; its
    first local maximum above ``threshold`` is refined with a parabola through
    the neighbouring carrier peaks. Returns nan if no such peak is resolved.
    """
    t = np.asarray(times)
    k = _local_maxima(series)
    if k.size < 3:
        return float("nan")
    tk, env = t[k], np.asarray(series)[k]
    j = _local_maxima(env)
    j = j[env[j] > threshold]
    if j.size == 0:
        return float("nan")
    i = j[0]
    return _parabola_vertex(tk[i - 1:i + 2], env[i - 1:i + 2])


def arrival_ratio(params: ChainParams, c_slow: float, c_fast: float, t_final: float = 200.0,
                  dt: float = 0.01, method: str = "peak") -> dict:
    """Ratio of opposite-pair arrival times for two quench strengths.

    ``method="peak"`` uses :func:`first_peak`, ``"threshold"`` the first
    crossing of ``ARRIVAL_THRESHOLD``.
    """
    times = np.arange(0.0, t_final + 0.5 * dt, dt)
    locate = first_peak if method == "peak" else first_crossing
    t_slow = locate(times, opposite_pair_series(params, c_slow, times))
    t_fast = locate(times, opposite_pair_series(params, c_fast, times))
    return {
        "t_slow": t_slow,
        "t_fast": t_fast,
        "ratio": t_slow / t_fast,
        "vmax_ratio": float(v_max(c_fast, params.omega0) / v_max(c_slow, params.omega0)),
    }


def propagation_map(params: ChainParams, c: float, t_final: float, n_times: int = 401) -> PropagationMap:
    """E_N(t, d) for d = 1..N/2 after a quench 0 -> c."""
    times = np.linspace(0.0, t_final, n_times)
    qq, pp, qp = sudden_switch_quadratures(params, c, times)
    _, en = negativity_by_distance(qq, pp, qp)
    return PropagationMap(times, np.arange(1, params.n_osc // 2 + 1), en, c)


def opposite_pair_series(params: ChainParams, c: float, times) -> np.ndarray:
    qq, pp, qp = sudden_switch_quadratures(params, c, times)
    _, en = negativity_by_distance(qq, pp, qp)
    return en[:, -1]


@dataclass(frozen=True)
class ArrivalFit:
    c: float
    v_max: float
    slope: float
    intercept: float
    distances: np.ndarray
    arrival: np.ndarray

    @property
    def velocity(self) -> float:
        return 1.0 / self.slope

    def as_dict(self) -> dict:
        pred = predicted_arrival_times(1.0, self.c)
        return {
            "c": self.c,
            "v_max": self.v_max,
            "fitted_slope": self.slope,
            "fitted_intercept": self.intercept,
            "slope_over_inverse_vmax": self.slope * self.v_max,
            "predicted_slope_group_velocity": float(pred["group_velocity"]),
            "predicted_slope_half": float(pred["half_group_velocity"]),
        }


def fit_arrival(pmap: PropagationMap, threshold: float = ARRIVAL_THRESHOLD, d_min: int = 2) -> ArrivalFit:
    """Least-squares line through first-crossing times versus distance."""
    t_arr = pmap.arrival_times(threshold)
    mask = (pmap.distances >= d_min) & np.isfinite(t_arr)
    if mask.sum() < 2:
        raise ValueError("not enough distances reached the threshold to fit")
    slope, intercept = np.polyfit(pmap.distances[mask], t_arr[mask], 1)
    return ArrivalFit(pmap.c, float(v_max(pmap.c, 1.0)), float(slope), float(intercept),
                      pmap.distances[mask], t_arr[mask])


def continuum_qq(x: int, t: float, c: float, omega0: float = 1.0, tol: float = QUAD_TOL,
                 max_panels: int = QUAD_MAX_PANELS) -> float:
    """Time-dependent part of <q_n q_{n+x}> after a quench, infinite chain.

    Evaluates -(1/(16 pi w0)) sum_s int_0^{2pi} A(phi) cos(phi x + 2 s omega(phi) t) dphi
    with A = (w0^2 - omega^2)/omega^2. The integrand is smooth and periodic, so
    panels are doubled on the periodic trapezoid rule until two successive
    estimates agree to ``tol``.
    """
    if x == 0:
        raise ValueError("x must be nonzero")

    def integrand(phi):
        w2 = omega0**2 + 2.0 * c * (1.0 - np.cos(phi))
        amp = (omega0**2 - w2) / w2
        w = np.sqrt(w2)
        return amp * (np.cos(phi * x + 2 * w * t) + np.cos(phi * x - 2 * w * t))

    panels = 64
    prev = None
    while panels <= max_panels:
        phi = 2.0 * np.pi * np.arange(panels) / panels
        est = -(1.0 / (16.0 * np.pi * omega0)) * (2.0 * np.pi / panels) * integrand(phi).sum()
        if prev is not None and abs(est - prev) <= tol * max(1.0, abs(est)):
            return float(est)
        prev = est
        panels *= 2
    raise RuntimeError(f"continuum quadrature did not converge with {max_panels} panels")


def discrete_qq_time_part(params: ChainParams, x: int, t: float, c: float) -> float:
    """Finite-N counterpart of :func:`continuum_qq` built from the mode moments."""
    qq, _, _ = sudden_switch_quadratures(params, c, t)
    w = params.eigenfrequencies(c)
    w0 = params.omega0
    static = (1.0 / (4 * w0)) * (1.0 + w0**2 / w**2)
    l = params.modes
    return float(np.sum(np.cos(2 * np.pi * l * x / params.n_osc) * (qq - static)) / params.n_osc)
