"""Compare the compiled RK4 mode kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps 4000] [--modes 8] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from chainent import _kernels_py

try:
    from chainent import _kernels
except ImportError:  # extension not built
    _kernels = None


def make_inputs(steps: int, modes: int, traj: int = 2, seed: int = 0):
    rng = np.random.default_rng(seed)
    c_half = rng.uniform(0.0, 0.5, 2 * steps + 1)
    weights = 4.0 * np.sin(np.pi * np.arange(1, modes + 1) / modes) ** 2
    init = rng.normal(size=(modes, traj, 2))
    return c_half, weights, 1.0, 0.01, init


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=4000)
    parser.add_argument("--modes", type=int, default=8)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    inputs = make_inputs(args.steps, args.modes)
    c_half, weights, w0sq, dt, init = inputs
    final = np.random.default_rng(1).normal(size=init.shape)
    states = _kernels_py.rk4_modes(*inputs)
    modules = {"python": _kernels_py}
    if _kernels is not None:
        modules["cython"] = _kernels
    results = {}
    for name, mod in modules.items():
        calls = {
            "forward": lambda: mod.rk4_modes(*inputs),
            "adjoint": lambda: mod.rk4_adjoint(c_half, weights, w0sq, dt, states, final),
        }
        for kind, call in calls.items():
            t = min(timeit.repeat(call, number=1, repeat=args.repeat))
            out = call()
            flat = np.concatenate([np.ravel(a) for a in out]) if isinstance(out, tuple) else out.ravel()
            results[name, kind] = (t, flat)
            print(f"{name:7s} {kind:8s} {t * 1e3:9.3f} ms")
    if _kernels is None:
        print("compiled kernel not available; build with `pip install -e . --no-build-isolation`")
        return
    for kind in ("forward", "adjoint"):
        t_py, out_py = results["python", kind]
        t_cy, out_cy = results["cython", kind]
        diff = float(np.abs(out_py - out_cy).max())
        print(f"{kind}: speedup {t_py / t_cy:6.1f}x, max |diff| {diff:.1e}")

if __name__ == "__main__":
    main()
