"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_core.py [--nodes 2000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from bltp import _pycore

try:
    from bltp import _core
except ImportError:
    _core = None


def history_case(n, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) * 0.01
    v = 0.3 * np.tanh(rng.normal(size=(n, 3)).cumsum(axis=0) * 0.01)
    q = np.vstack([np.zeros(3), np.cumsum(0.5 * (v[1:] + v[:-1]) * 0.01, axis=0)])
    base = np.ones(n)
    corr = rng.normal(size=6) * 1e-2
    ks = np.arange(n - 25, n)
    return (1.0, ks, t, q, v, base, corr)


def bench(label, fn, args, repeat):
    best = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
    print(f"{label:<34s} {best * 1e3:10.3f} ms")
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = [("numpy", _pycore)] + ([("cython", _core)] if _core else [])
    if _core is None:
        print("compiled extension not built; timing the numpy fallback only")

    cases = {
        "history_sums": (history_case(args.nodes), "history_sums"),
        "ratio_array n=2": ((2, np.linspace(0.0, 60.0, 200_000)), "ratio_array"),
    }
    for name, (case, attr) in cases.items():
        times = {}
        for label, mod in backends:
            times[label] = bench(f"{name} [{label}]", getattr(mod, attr), case, args.repeat)
        if len(times) == 2:
            ref, fast = (getattr(m, attr)(*case) for _, m in backends)
            ref = ref if not isinstance(ref, tuple) else np.concatenate([np.ravel(r) for r in ref])
            fast = fast if not isinstance(fast, tuple) else np.concatenate([np.ravel(r) for r in fast])
            diff = np.max(np.abs(np.asarray(ref) - np.asarray(fast)))
            print(f"  speedup {times['numpy'] / times['cython']:.1f}x, max abs difference {diff:.1e}")


if __name__ == "__main__":
    main()
