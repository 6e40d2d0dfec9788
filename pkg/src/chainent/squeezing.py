"""Squeezing profiles of the eigenmodes and the attainable-entanglement bounds.

A mode with frequency omega, squeezing r and angle theta has moments

    <QQ> = (e^{-2r} cos^2 th + e^{2r} sin^2 th) / (2 omega)
    <PP> = omega (e^{2r} cos^2 th + e^{-2r} sin^2 th) / 2
    <QP> = sinh(2r) sin(th) cos(th)

All bounds below concern opposite oscillators (n, n + N/2).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .chain import ChainParams, ModeQuadratures
from .entanglement import log_neg_from_nu, opposite_nu_from_moments

DEGENERATE_R = 1e-8
ARCCOSH_TOL = 1e-8
FULL_SCAN_MAX_N = 8


@dataclass(frozen=True)
class SqueezingProfile:
    """Per-mode (omega_l, r_l, theta_l) for l = 1..N (array index l - 1)."""

    omega: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    degenerate: np.ndarray | None = None

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float).reshape(-1)
        r = np.array(self.r, dtype=float).reshape(-1)
        theta = np.mod(np.array(self.theta, dtype=float).reshape(-1), np.pi)
        if not omega.shape == r.shape == theta.shape:
            raise ValueError("omega, r, theta must have one entry per mode")
        if np.any(omega <= 0):
            raise ValueError("eigenfrequencies must be positive")
        if np.any(r < 0):
            raise ValueError("squeezing parameters must be nonnegative")
        deg = r < DEGENERATE_R if self.degenerate is None else np.asarray(self.degenerate, dtype=bool)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "degenerate", deg)

    @property
    def n_modes(self) -> int:
        return self.r.shape[0]

    @classmethod
    def for_chain(cls, params: ChainParams, c: float, r, theta=None) -> "SqueezingProfile":
        """Profile at coupling ``c``; ``r``/``theta`` may list modes 1..N/2 only.

        A half-length list is mirrored onto l -> N-l; mode N gets r = 0 unless
        supplied.
        """
        n = params.n_osc
        r_full = _expand(params, r, "r")
        th_full = np.zeros(n) if theta is None else _expand(params, theta, "theta")
        return cls(params.eigenfrequencies(c), r_full, th_full)

    def quadratures(self):
        """Arrays (qq, pp, qp) over modes, from the forward relations."""
        return forward_quadratures(self.omega, self.r, self.theta)

    def with_theta(self, theta) -> "SqueezingProfile":
        return SqueezingProfile(self.omega, self.r, theta)


def _expand(params: ChainParams, values, name: str) -> np.ndarray:
    """Mirror per-mode values given for l = 1..N/2 (optionally plus mode N)."""
    n = params.n_osc
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 1:
        return np.full(n, float(v[0]))
    if v.size == n:
        return v.copy()
    half = n // 2
    if v.size in (half, half + 1):
        out = np.zeros(n)
        out[:half] = v[:half]
        out[half:n - 1] = v[:half - 1][::-1]
        if v.size == half + 1:
            out[n - 1] = v[half]
        return out
    raise ValueError(f"{name} needs 1, {half}, {half + 1} or {n} entries, got {v.size}")


def forward_quadratures(omega, r, theta):
    omega, r, theta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (omega, r, theta)))
    e2, em2 = np.exp(2 * r), np.exp(-2 * r)
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    qq = (em2 * c2 + e2 * s2) / (2 * omega)
    pp = omega * (e2 * c2 + em2 * s2) / 2
    qp = np.sinh(2 * r) * np.sin(theta) * np.cos(theta)
    return qq, pp, qp


def extract_squeezing(quads: ModeQuadratures, omega_l: float):
    """Invert the forward relations: returns ``(r, theta, degenerate)``.

    Works elementwise on array-valued quadratures. theta is folded into [0, pi)
    and reported as 0 where r < 1e-8.
    """
    qq, pp, qp = (np.asarray(a, dtype=float) for a in (quads.qq, quads.pp, quads.qp))
    ch = omega_l * qq + pp / omega_l
    if np.any(ch < 1.0 - ARCCOSH_TOL):
        raise ValueError(f"cosh(2r) argument {np.min(ch):.10g} < 1: impure or corrupt quadratures")
    r = 0.5 * np.arccosh(np.maximum(ch, 1.0))
    theta = np.mod(0.5 * np.arctan2(2.0 * qp, pp / omega_l - omega_l * qq), np.pi)
    degenerate = r < DEGENERATE_R
    theta = np.where(degenerate, 0.0, theta)
    if theta.ndim == 0:
        return float(r), float(theta), bool(degenerate)
    return r, theta, degenerate


def profile_from_moments(qq, pp, qp, omega) -> SqueezingProfile:
    """Profile of all modes from mode moment arrays at a single time."""
    r, theta, deg = extract_squeezing(ModeQuadratures(0, np.asarray(qq), np.asarray(pp), np.asarray(qp)),
                                      np.asarray(omega))
    return SqueezingProfile(omega, np.atleast_1d(r), np.atleast_1d(theta), np.atleast_1d(deg))


def parity_sums(values, params: ChainParams):
    v = np.asarray(values, dtype=float)
    return v[params.odd].sum(), v[~params.odd].sum()


def max_entanglement_weak(profile: SqueezingProfile, params: ChainParams) -> float:
    """Weak-coupling attainable E_N for opposite oscillators."""
    n = params.n_osc
    so, se = parity_sums(np.exp(-2 * profile.r), params)
    return float(max(0.0, -0.5 * np.log2((2.0 / n) * so * (2.0 / n) * se)))


@dataclass(frozen=True)
class StrongBound:
    value: float
    gamma: float
    alpha: float
    valid: bool


def correction_ratio(profile: SqueezingProfile, params: ChainParams) -> float:
    """gamma = sum_{lO,mE} (w_m/w_l) e^{-2(r_l+r_m)} / sum_{lE,mO} (w_m/w_l) e^{2(r_l+r_m)}."""
    odd = params.odd
    w, r = profile.omega, profile.r
    ratio = w[None, :] / w[:, None]
    em = np.exp(-2 * r)
    ep = np.exp(2 * r)
    num = (ratio * np.outer(em, em))[np.ix_(odd, ~odd)].sum()
    den = (ratio * np.outer(ep, ep))[np.ix_(~odd, odd)].sum()
    return float(num / den)


def max_entanglement_strong(profile: SqueezingProfile, params: ChainParams, c: float | None = None,
                            order: int = 0) -> StrongBound:
    """Finite-coupling attainable E_N with the alpha correction truncated at ``order``.

    ``c`` is accepted for interface symmetry; the eigenfrequencies come from the
    profile. With gamma >= 1 the series is not trusted: ``valid`` is False and
    alpha = 1 is used.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    n = params.n_osc
    w = profile.omega / params.omega0
    em = np.exp(-2 * profile.r)
    odd = params.odd
    arg = (2.0 / n) * (em[odd] / w[odd]).sum() * (2.0 / n) * (w[~odd] * em[~odd]).sum()
    gamma = correction_ratio(profile, params)
    valid = gamma < 1.0
    alpha = sum((-gamma) ** k for k in range(order + 1)) if valid else 1.0
    value = max(0.0, -0.5 * np.log2(alpha * arg))
    return StrongBound(float(value), gamma, float(alpha), bool(valid))


@dataclass(frozen=True)
class RegimeIndicator:
    lhs: float
    rhs: float
    regime: str
    lhs_odd: float = 0.0
    lhs_even: float = 0.0
    rhs_odd: float = 0.0
    rhs_even: float = 0.0

    def normalized(self, n: int) -> tuple[float, float]:
        return self.lhs / n, self.rhs / n


#: lhs/rhs ratio above which the strong-coupling angle set is declared.
STRONG_RATIO = 5.0


def regime_indicator(profile: SqueezingProfile, params: ChainParams, c: float,
                     strong_ratio: float = STRONG_RATIO) -> RegimeIndicator:
    """Compare (c/4 w0^2) sum e^{2r} with sum e^{-2r}.

    weak: lhs < rhs; crossover: rhs <= lhs < strong_ratio * rhs; strong beyond.
    The parity-restricted sums (B+/B- per parity) are reported too.
    """
    pref = c / (4.0 * params.omega0**2)
    bo_p, be_p = parity_sums(np.exp(2 * profile.r), params)
    bo_m, be_m = parity_sums(np.exp(-2 * profile.r), params)
    lhs = pref * (bo_p + be_p)
    rhs = bo_m + be_m
    if lhs < rhs:
        regime = "weak"
    elif lhs < strong_ratio * rhs:
        regime = "crossover"
    else:
        regime = "strong"
    return RegimeIndicator(float(lhs), float(rhs), regime, pref * bo_p, pref * be_p, bo_m, be_m)


ANGLES_WEAK = (np.pi / 4, 3 * np.pi / 4)   # (theta_even, theta_odd)
ANGLES_STRONG = (np.pi / 2, 0.0)


def _nu_at_parity_angles(profile: SqueezingProfile, params: ChainParams, theta_even, theta_odd) -> float:
    theta = np.where(params.odd, theta_odd, theta_even)
    qq, pp, qp = forward_quadratures(profile.omega, profile.r, theta)
    return float(opposite_nu_from_moments(qq, pp, qp, params.odd))


def _approx_nu(n, x, y):
    disc = x * x - 4 * y
    if disc < 0 or x - np.sqrt(disc) < 0:
        return float("nan")
    return float(np.sqrt(2.0) / n * np.sqrt(x - np.sqrt(disc)))


@dataclass(frozen=True)
class AngleComparison:
    nu_weak_angles: float
    nu_strong_angles: float
    winner: str
    approx_nu_weak_angles: float
    approx_nu_strong_angles: float


def angle_family_comparison(profile: SqueezingProfile, params: ChainParams, c: float) -> AngleComparison:
    """nu_minus at (theta_even, theta_odd) = (pi/4, 3pi/4) versus (pi/2, 0).

    Exact values come from the closed form; the small-coupling approximations
    are evaluated alongside for cross-checking. ``winner`` names the set with the
    smaller nu_minus ("weak" for the pi/4 family, "strong" for the pi/2 family,
    "tie" within 1e-12).
    """
    nu_w = _nu_at_parity_angles(profile, params, *ANGLES_WEAK)
    nu_s = _nu_at_parity_angles(profile, params, *ANGLES_STRONG)
    if abs(nu_w - nu_s) <= 1e-12:
        winner = "tie"
    else:
        winner = "weak" if nu_w < nu_s else "strong"

    k = c / params.omega0**2
    odd = params.odd
    ep, em = np.exp(2 * profile.r), np.exp(-2 * profile.r)
    bo_p, be_p = ep[odd].sum(), ep[~odd].sum()
    bo_m, be_m = em[odd].sum(), em[~odd].sum()
    n = params.n_osc
    x_w = (1 + k / 2) * bo_p * be_p
    y_w = 0.25 * ((1 + k / 2) * bo_p) ** 2 * (bo_m + (k / 2) * bo_p) ** 2
    x_s = (1 + k) * be_p * bo_p
    y_s = (1 + 2 * k) * bo_m * bo_p * be_p * be_m
    return AngleComparison(nu_w, nu_s, winner, _approx_nu(n, x_w, y_w), _approx_nu(n, x_s, y_s))


@dataclass
class AngleScan:
    """E_N over an angle grid. ``angles`` has one axis per free angle."""

    axes: list
    labels: list
    log_neg: np.ndarray
    threshold: float

    @property
    def max_value(self) -> float:
        return float(self.log_neg.max())

    def maximal_set(self) -> np.ndarray:
        """Angle tuples with E_N >= (1 - threshold) * max, shape (k, n_axes)."""
        if self.max_value <= 0:
            return np.empty((0, len(self.axes)))
        idx = np.argwhere(self.log_neg >= (1.0 - self.threshold) * self.max_value)
        return np.column_stack([np.asarray(ax)[idx[:, j]] for j, ax in enumerate(self.axes)])

    def argmax(self) -> tuple:
        i = np.unravel_index(np.argmax(self.log_neg), self.log_neg.shape)
        return tuple(float(np.asarray(ax)[k]) for ax, k in zip(self.axes, i))


def _scan_grid(resolution: int, endpoint: bool) -> np.ndarray:
    return np.linspace(0.0, np.pi, resolution, endpoint=endpoint)


def angle_scan(r_profile, params: ChainParams, c: float, grid_resolution: int = 201,
               mode: str = "collapsed", threshold: float = 0.02, chunk: int = 20000) -> AngleScan:
    """Opposite-pair E_N over squeezing angles at fixed squeezings.

    ``mode="collapsed"`` ties all odd angles to theta_odd and all even angles to
    theta_even (a 2-D map on [0, pi] inclusive, figure style). ``mode="full"``
    scans theta_1..theta_{N/2} independently on [0, pi) (mirrored to N-l);
    unsqueezed modes carry no angle.
    """
    profile = SqueezingProfile.for_chain(params, c, r_profile)
    odd = params.odd
    if mode == "collapsed":
        grid = _scan_grid(grid_resolution, endpoint=True)
        th_o, th_e = np.meshgrid(grid, grid, indexing="ij")
        theta = np.where(odd, th_o[..., None], th_e[..., None])
        qq, pp, qp = forward_quadratures(profile.omega, profile.r, theta)
        en = log_neg_from_nu(opposite_nu_from_moments(qq, pp, qp, odd))
        return AngleScan([grid, grid], ["theta_odd", "theta_even"], en, threshold)
    if mode != "full":
        raise ValueError(f"unknown scan mode {mode!r}")
    n = params.n_osc
    if n > FULL_SCAN_MAX_N:
        raise ValueError(f"full angle scan limited to N <= {FULL_SCAN_MAX_N}")
    grid = _scan_grid(grid_resolution, endpoint=False)
    half = n // 2
    free = [l for l in range(1, half + 1) if profile.r[l - 1] >= DEGENERATE_R]
    combos = np.array(list(itertools.product(range(grid_resolution), repeat=len(free))),
                      dtype=int).reshape(grid_resolution ** len(free), len(free))
    en = np.empty(len(combos))
    for s in range(0, len(combos), chunk):
        block = grid[combos[s:s + chunk]]
        theta = np.zeros((len(block), n))
        for j, l in enumerate(free):
            theta[:, l - 1] = block[:, j]
            theta[:, n - l - 1] = block[:, j]
        qq, pp, qp = forward_quadratures(profile.omega, profile.r, theta)
        en[s:s + chunk] = log_neg_from_nu(opposite_nu_from_moments(qq, pp, qp, odd))
    shape = (grid_resolution,) * len(free)
    return AngleScan([grid] * len(free), [f"theta_{l}" for l in free], en.reshape(shape), threshold)
