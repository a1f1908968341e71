"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--qubits 16] [--batch 64] [--repeat 5]

Both implementations run on identical copies of a random register block; the
best of ``--repeat`` runs is reported per kernel, after one warm-up call that
also triggers JIT compilation.
"""
import argparse
import time

import numpy as np

from entswap import _kernels_numpy as knp

try:
    from entswap import _kernels_numba as knb
except ImportError:  # numba not installed
    knb = None


def random_block(batch, n, seed=0):
    g = np.random.default_rng(seed)
    psi = g.normal(size=(batch, 1 << n)) + 1j * g.normal(size=(batch, 1 << n))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    return psi


def cases(n, batch):
    g = np.random.default_rng(1)
    mats = np.ascontiguousarray(np.broadcast_to(np.array([[0, 1], [1, 0]], dtype=np.complex128), (batch, 2, 2)))
    u = g.random(batch)
    bits = g.integers(0, 2, batch)
    q = n // 2
    return {
        "apply_1q": lambda k, psi: k.apply_1q(psi, q, mats),
        "apply_cnot": lambda k, psi: k.apply_cnot(psi, 1, n - 1),
        "prob_one": lambda k, psi: k.prob_one(psi, q),
        "collapse": lambda k, psi: k.collapse(psi, q, bits),
        "measure_z": lambda k, psi: k.measure_z(psi, q, u),
    }


def best_time(fn, kernels, base, repeat):
    best = float("inf")
    fn(kernels, base.copy())
    for _ in range(repeat):
        psi = base.copy()
        t0 = time.perf_counter()
        fn(kernels, psi)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=16)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    base = random_block(args.batch, args.qubits)
    print(f"{args.batch} registers x {args.qubits} qubits ({base.nbytes / 2**20:.0f} MiB)")
    print(f"{'kernel':<12}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, fn in cases(args.qubits, args.batch).items():
        t_np = best_time(fn, knp, base, args.repeat)
        if knb is None:
            print(f"{name:<12}{t_np * 1e3:>12.2f}{'n/a':>12}{'':>10}")
            continue
        t_nb = best_time(fn, knb, base, args.repeat)
        print(f"{name:<12}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
