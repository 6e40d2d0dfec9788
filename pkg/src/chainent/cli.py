"""Command-line entry point: ``chainent <command> [--config FILE] [--set key=value ...]``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .chain import (ChainParams, IntegrationError, covariance_from_moments,
                    default_dt, dissipated_work, fundamental_solutions, quadratures_from_fundamental,
                    sudden_switch_quadratures)
from .entanglement import negativity_by_distance
from .oct import COSTS, ControlProblem, OptimizationDiverged, final_moments, forward_states, optimize
from .propagation import (ARRIVAL_THRESHOLD, first_peak, fit_arrival, opposite_pair_series, propagation_map,
                          sudden_switch_max_en, sudden_switch_max_en_n8, sudden_switch_profile, v_max)
from .squeezing import (SqueezingProfile, angle_scan, angle_family_comparison, max_entanglement_strong,
                        max_entanglement_weak, profile_from_moments, regime_indicator)

log = logging.getLogger("chainent")

# key: (default, help). The default's type fixes how overrides are parsed.
DEFAULTS = {
    "n_osc": (8, "number of oscillators (even, >= 4)"),
    "omega0": (1.0, "on-site frequency"),
    "schedule": ("sudden:0.05", "coupling source: sudden:c | constant:c | file:PATH"),
    "t_final": (100.0, "time horizon for evolve and propagate"),
    "dt": ("auto", "integrator step, or auto"),
    "sample_dt": (0.05, "output sampling interval"),
    "pairs": ("opposite", "pairs n-m separated by commas, or 'opposite' / 'all'"),
    "out": ("chainent_out", "output directory"),
    "arrival_threshold": (ARRIVAL_THRESHOLD, "E_N level for first-crossing arrival"),
    "scan_c": (0.3, "coupling for angle scans"),
    "squeezing": ("1.2;2.6667;7.3333;20", "profiles separated by ';', each a comma list over modes"),
    "squeezing_units": ("e2r", "r | e2r"),
    "scan_mode": ("collapsed", "collapsed | full"),
    "grid_size": (201, "angle grid points per axis"),
    "maximal_threshold": (0.02, "relative tolerance of the maximal set"),
    "propagate_c": ("0.05,0.1,0.2", "couplings for propagation maps"),
    "n_times": (401, "time samples per propagation map"),
    "switch_c": ("0.01,0.1,0.5,1,5,100", "couplings for switch-bound"),
    "horizon": (20.0, "control horizon"),
    "n_samples": (201, "control samples"),
    "cost": ("opposite_nu", "one of " + ", ".join(COSTS)),
    "c_min": (0.0, "lower coupling bound"),
    "c_max": (0.5, "upper coupling bound"),
    "initial": ("constant:0.25", "initial control: constant:c | file:PATH"),
    "step": (0.05, "descent step"),
    "max_iter": (150, "descent iterations"),
    "tol": (1e-10, "stop when J improves by less than this"),
    "smooth_window": (0, "moving-average window on the gradient (0 = off)"),
    "seed": (0, "seed for randomized self-tests"),
    "trials": (20, "randomized trials per self-test"),
}

POSITIVE = ("omega0", "t_final", "sample_dt", "arrival_threshold", "grid_size", "maximal_threshold",
            "n_times", "horizon", "n_samples", "step", "trials")
NONNEGATIVE = ("scan_c", "c_min", "c_max", "max_iter", "tol", "smooth_window", "seed")


class ConfigError(ValueError):
    pass


def _coerce(key: str, raw):
    default = DEFAULTS[key][0]
    if isinstance(raw, type(default)) and not isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None
    return text


def parse_assignments(lines, origin: str) -> dict:
    out = {}
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{origin}:{i}: expected key=value, got {raw!r}")
        if key not in DEFAULTS:
            raise ConfigError(f"{origin}:{i}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def resolve_config(config_file=None, overrides=()) -> dict:
    cfg = {k: v[0] for k, v in DEFAULTS.items()}
    if config_file is not None:
        path = Path(config_file)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        cfg.update(parse_assignments(path.read_text().splitlines(), str(path)))
    cfg.update(parse_assignments(overrides, "--set"))
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    for k in POSITIVE:
        if not cfg[k] > 0:
            raise ConfigError(f"{k} must be positive, got {cfg[k]}")
    for k in NONNEGATIVE:
        if cfg[k] < 0:
            raise ConfigError(f"{k} must be nonnegative, got {cfg[k]}")
    if cfg["dt"] != "auto":
        try:
            dt = float(cfg["dt"])
        except ValueError:
            raise ConfigError(f"dt must be a number or 'auto', got {cfg['dt']!r}") from None
        if not dt > 0:
            raise ConfigError(f"dt must be positive, got {dt}")
    if cfg["c_max"] < cfg["c_min"]:
        raise ConfigError("c_max must not be below c_min")
    if cfg["cost"] not in COSTS:
        raise ConfigError(f"cost must be one of {COSTS}")
    if cfg["scan_mode"] not in ("collapsed", "full"):
        raise ConfigError("scan_mode must be collapsed or full")
    if cfg["squeezing_units"] not in ("r", "e2r"):
        raise ConfigError("squeezing_units must be r or e2r")
    for key in ("schedule", "initial"):
        kind, _, arg = cfg[key].partition(":")
        if kind == "file" and not Path(arg).is_file():
            raise ConfigError(f"{key}: schedule file {arg!r} not found")
        if kind not in ("file", "sudden", "constant"):
            raise ConfigError(f"{key}: unknown source {cfg[key]!r}")
    try:
        chain_params(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def chain_params(cfg: dict) -> ChainParams:
    return ChainParams(cfg["n_osc"], cfg["omega0"])


def _floats(text: str, key: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected a comma list of numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{key}: empty list")
    return vals


def _source(text: str, key: str):
    """(kind, value) where value is a coupling or a loaded schedule."""
    kind, _, arg = text.partition(":")
    if kind == "file":
        try:
            return kind, io.read_schedule(arg)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    c = _floats(arg, key)[0]
    if c < 0:
        raise ConfigError(f"{key}: coupling must be nonnegative")
    return kind, c


def _pairs(cfg: dict) -> list[tuple[int, int]]:
    n = cfg["n_osc"]
    spec = cfg["pairs"].strip()
    if spec == "opposite":
        return [(1, 1 + n // 2)]
    if spec == "all":
        return [(1, 1 + d) for d in range(1, n // 2 + 1)]
    out = []
    for item in spec.split(","):
        try:
            a, b = (int(v) for v in item.split("-"))
        except ValueError:
            raise ConfigError(f"pairs: cannot parse {item!r}") from None
        if not (1 <= a <= n and 1 <= b <= n) or a == b:
            raise ConfigError(f"pairs: ({a}, {b}) invalid for N={n}")
        out.append((a, b))
    return out


def _meta(cfg: dict, **extra) -> dict:
    meta = {"N": cfg["n_osc"], "omega0": cfg["omega0"]}
    meta.update(extra)
    return meta


def _outdir(cfg: dict, command: str) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"# resolved configuration for chainent {command}"]
    lines += [f"{k} = {io.fmt(cfg[k])}" for k in DEFAULTS]
    (out / "config.txt").write_text("\n".join(lines) + "\n")
    return out


def _sampled_moments(cfg: dict, params: ChainParams):
    """Mode moments on the output grid plus a description of the coupling."""
    kind, src = _source(cfg["schedule"], "schedule")
    t_final = cfg["t_final"]
    k = max(1, int(np.ceil(t_final / cfg["sample_dt"] - 1e-9)))
    times = np.linspace(0.0, t_final, k + 1)
    if kind in ("sudden", "constant"):
        # constant c from t = 0 acting on the uncoupled ground state is the quench 0 -> c
        qq, pp, qp = sudden_switch_quadratures(params, src, times)
        return times, (qq, pp, qp), src, f"{kind}:{io.fmt(src)}", "exact"
    schedule = src
    dt = default_dt(params, schedule.max_value) if cfg["dt"] == "auto" else float(cfg["dt"])
    sub = int(np.ceil((t_final / k) / dt - 1e-9))
    step = t_final / (k * sub)
    _, sol = fundamental_solutions(params, schedule, t_final, step)
    sol = sol[::sub]
    moments = quadratures_from_fundamental(sol[..., 0, 0], sol[..., 0, 1], sol[..., 1, 0], sol[..., 1, 1],
                                           params.omega0)
    return times, moments, float(schedule(t_final)), cfg["schedule"], step


def cmd_evolve(cfg: dict) -> int:
    params = chain_params(cfg)
    pairs = _pairs(cfg)
    times, (qq, pp, qp), c_end, desc, step = _sampled_moments(cfg, params)
    out = _outdir(cfg, "evolve")
    nu, en = negativity_by_distance(qq, pp, qp)
    n = params.n_osc
    rows = []
    for i, t in enumerate(times):
        for a, b in pairs:
            d = min(abs(a - b), n - abs(a - b))
            rows.append((t, a, b, nu[i, d - 1], en[i, d - 1]))
    meta = _meta(cfg, c=desc, dt=step)
    io.write_table(out / "negativity.csv", ["t", "n", "m", "nu_minus", "E_N"], rows, meta)
    cov = covariance_from_moments(qq[-1], pp[-1], qp[-1], params.omega0, float(times[-1]))
    io.write_covariance(out / "covariance_final.csv", cov)
    prof = profile_from_moments(qq[-1], pp[-1], qp[-1], params.eigenfrequencies(c_end))
    io.write_table(out / "squeezing_final.csv", ["mode", "omega", "r", "theta"],
                   zip(params.modes, prof.omega, prof.r, prof.theta), dict(meta, t=times[-1], c_final=c_end))
    print(f"evolve: {len(times)} samples, {len(pairs)} pair(s) -> {out}")
    return 0


def _profiles(cfg: dict, params: ChainParams) -> list[np.ndarray]:
    profiles = []
    for chunk in cfg["squeezing"].split(";"):
        vals = np.array(_floats(chunk, "squeezing"))
        if cfg["squeezing_units"] == "e2r":
            if np.any(vals < 1):
                raise ConfigError("squeezing: e^{2r} values must be >= 1")
            vals = 0.5 * np.log(vals)
        elif np.any(vals < 0):
            raise ConfigError("squeezing: r values must be nonnegative")
        try:
            SqueezingProfile.for_chain(params, cfg["scan_c"], vals)
        except ValueError as exc:
            raise ConfigError(f"squeezing: {exc}") from None
        profiles.append(vals)
    return profiles


def cmd_anglescan(cfg: dict) -> int:
    params = chain_params(cfg)
    profiles = _profiles(cfg, params)
    c = cfg["scan_c"]
    if cfg["scan_mode"] == "full" and params.n_osc > 8:
        raise ConfigError("scan_mode=full is limited to N <= 8")
    out = _outdir(cfg, "anglescan")
    summary = []
    for k, r in enumerate(profiles):
        scan = angle_scan(r, params, c, cfg["grid_size"], cfg["scan_mode"], cfg["maximal_threshold"])
        prof = SqueezingProfile.for_chain(params, c, r)
        grids = np.meshgrid(*scan.axes, indexing="ij")
        rows = zip(*(g.ravel() for g in grids), scan.log_neg.ravel())
        io.write_table(out / f"scan_{k}.csv", scan.labels + ["E_N"], rows,
                       _meta(cfg, c=c, profile=k, mode=cfg["scan_mode"]))
        ind = regime_indicator(prof, params, c)
        comp = angle_family_comparison(prof, params, c)
        strong = max_entanglement_strong(prof, params, c)
        summary.append({
            "profile": k,
            "r": prof.r,
            "regime": ind.regime,
            "lhs": ind.lhs,
            "rhs": ind.rhs,
            "lhs_over_n": ind.lhs / params.n_osc,
            "rhs_over_n": ind.rhs / params.n_osc,
            "max_E_N": scan.max_value,
            "argmax": scan.argmax(),
            "axes": scan.labels,
            "maximal_set": scan.maximal_set(),
            "weak_bound": max_entanglement_weak(prof, params),
            "strong_bound": strong.value,
            "strong_bound_valid": strong.valid,
            "nu_weak_angles": comp.nu_weak_angles,
            "nu_strong_angles": comp.nu_strong_angles,
            "angle_winner": comp.winner,
        })
        print(f"anglescan[{k}]: regime={ind.regime} max E_N={scan.max_value:.6g}")
    io.write_json(out / "summary.json", {"c": c, "N": params.n_osc, "profiles": summary})
    return 0


def cmd_propagate(cfg: dict) -> int:
    params = chain_params(cfg)
    cs = _floats(cfg["propagate_c"], "propagate_c")
    if any(c <= 0 for c in cs):
        raise ConfigError("propagate_c: couplings must be positive")
    out = _outdir(cfg, "propagate")
    fine = np.arange(0.0, cfg["t_final"] + 0.5 * cfg["sample_dt"], cfg["sample_dt"])
    fits = []
    for c in cs:
        pmap = propagation_map(params, c, cfg["t_final"], cfg["n_times"])
        io.write_table(out / f"propagation_c{io.fmt(c)}.csv", ["t", "distance", "E_N"], pmap.rows(),
                       _meta(cfg, c=f"sudden:{io.fmt(c)}", contour_min=pmap.contour_range[0],
                             contour_max=pmap.contour_range[1]))
        entry = {"c": c, "v_max": float(v_max(c, params.omega0)),
                 "arrival_times": pmap.arrival_times(cfg["arrival_threshold"]),
                 "opposite_first_peak": first_peak(fine, opposite_pair_series(params, c, fine),
                                                   cfg["arrival_threshold"])}
        try:
            entry.update(fit_arrival(pmap, cfg["arrival_threshold"]).as_dict())
        except ValueError as exc:
            entry["fit_error"] = str(exc)
        fits.append(entry)
        print(f"propagate: c={c:g} v_max={entry['v_max']:.4g} first peak={entry['opposite_first_peak']:.4g}")
    io.write_json(out / "arrival.json", {"N": params.n_osc, "threshold": cfg["arrival_threshold"], "fits": fits})
    return 0


def cmd_switch_bound(cfg: dict) -> int:
    params = chain_params(cfg)
    cs = _floats(cfg["switch_c"], "switch_c")
    if any(c <= 0 for c in cs):
        raise ConfigError("switch_c: couplings must be positive")
    out = _outdir(cfg, "switch-bound")
    rows = []
    for c in cs:
        prof = sudden_switch_profile(params, c)
        n8 = sudden_switch_max_en_n8(c) if params.n_osc == 8 else float("nan")
        rows.append((c, sudden_switch_max_en(params, c), n8, c / np.log(2), 0.5 * np.log2(c),
                     float(v_max(c, params.omega0)), dissipated_work(prof)[1]))
    io.write_table(out / "switch_bound.csv",
                   ["c", "E_max", "E_max_closed_n8", "small_c_asymptote", "large_c_asymptote", "v_max",
                    "dissipated_work"], rows, _meta(cfg))
    for row in rows:
        print(f"switch-bound: c={row[0]:g} E_max={row[1]:.10g}")
    return 0


def _initial_controls(cfg: dict, problem: ControlProblem) -> np.ndarray:
    kind, src = _source(cfg["initial"], "initial")
    if kind == "file":
        return src(problem.control_times)
    return np.full(problem.n_samples, src)


def cmd_optimize(cfg: dict) -> int:
    params = chain_params(cfg)
    try:
        problem = ControlProblem(params, cfg["horizon"], cfg["n_samples"], cfg["cost"],
                                 (cfg["c_min"], cfg["c_max"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    init = _initial_controls(cfg, problem)
    out = _outdir(cfg, "optimize")
    values, trace = optimize(problem, init, cfg["step"], cfg["max_iter"], cfg["tol"], cfg["smooth_window"])
    meta = _meta(cfg, c=f"optimized:{cfg['cost']}", horizon=cfg["horizon"])
    io.write_schedule(out / "schedule.txt", problem.schedule(values), meta)
    (out / "trace.jsonl").write_text(trace.to_jsonl())
    qq, pp, qp = final_moments(forward_states(problem, values).states[-1])
    _, en = negativity_by_distance(qq, pp, qp)
    costs = trace.costs
    io.write_json(out / "summary.json", {
        "cost": cfg["cost"], "J_initial": costs[0], "J_final": costs[-1], "iterations": len(costs) - 1,
        "rejected": trace.rejected, "E_N_by_distance_at_horizon": en,
    })
    print(f"optimize: J {costs[0]:.6g} -> {costs[-1]:.6g} in {len(costs) - 1} iterations; "
          f"E_N(d) at horizon = {np.array2string(en, precision=4)}")
    return 0


def cmd_defaults(cfg: dict) -> int:
    for k, (default, text) in DEFAULTS.items():
        print(f"{k} = {io.fmt(default)}    # {text}")
    return 0


def cmd_selftest(cfg: dict) -> int:
    from .selftest import run_all

    results = run_all(seed=cfg["seed"], trials=cfg["trials"])
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 2


COMMANDS = {
    "evolve": cmd_evolve,
    "anglescan": cmd_anglescan,
    "propagate": cmd_propagate,
    "switch-bound": cmd_switch_bound,
    "optimize": cmd_optimize,
    "defaults": cmd_defaults,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainent", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one key")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args.config, args.set)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, OptimizationDiverged, FloatingPointError, np.linalg.LinAlgError,
            RuntimeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
