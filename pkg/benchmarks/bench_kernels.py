"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from sparse_ilac import _kernels_py

try:
    from sparse_ilac import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    pos = np.array(sorted(set(range(8)) | {9 * k - 1 for k in range(1, 9)}), dtype=float)
    delta = np.linspace(-2, 2, 200_001)
    X = rng.standard_normal((pos.size, 64)) + 1j * rng.standard_normal((pos.size, 64))
    cov = X @ X.conj().T / 64
    u = np.sin(np.linspace(-np.pi / 2, np.pi / 2, 3142))
    big_pos = np.arange(64, dtype=float)
    Y = rng.standard_normal((64, 128)) + 1j * rng.standard_normal((64, 128))
    big_cov = Y @ Y.conj().T / 128
    return {
        "array_gain  M=16 n=200001": ("array_gain", (pos, delta)),
        "steered_power M=16 n=3142": ("steered_power", (cov, pos, u)),
        "steered_power M=64 n=3142": ("steered_power", (big_cov, big_pos, u)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["compiled"] = _kernels
    else:
        print("compiled extension not built; timing the fallback only")
    rng = np.random.default_rng(0)
    print(f"{'case':30s} " + " ".join(f"{b:>12s}" for b in backends) + "     speedup")
    for name, (fn, a) in cases(rng).items():
        times = {}
        for b, mod in backends.items():
            f = getattr(mod, fn)
            times[b] = min(timeit.repeat(lambda: f(*a), number=1, repeat=args.repeat))
        if "compiled" in times:
            ref = getattr(_kernels_py, fn)(*a)
            np.testing.assert_allclose(getattr(_kernels, fn)(*a), ref, rtol=1e-9, atol=1e-9)
        cols = " ".join(f"{times[b] * 1e3:10.2f}ms" for b in backends)
        speed = f"{times['python'] / times['compiled']:10.1f}x" if "compiled" in times else ""
        print(f"{name:30s} {cols} {speed}")


if __name__ == "__main__":
    main()
