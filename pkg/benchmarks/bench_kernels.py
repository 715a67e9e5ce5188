"""Compiled vs numpy/Python kernel timings.

    python3 benchmarks/bench_kernels.py [--qubits 18] [--repeat 3]

Prints one row per kernel with the best-of-``repeat`` wall time for each
backend and the speed-up. The pure-Python loops (Gray walk, Metropolis) run
on smaller inputs so the script finishes in well under a minute.
"""

import argparse
import timeit

import numpy as np

from dpovqe import kernels
from dpovqe.problem import IsingHamiltonian


def random_ising(n, density, rng):
    h = {q: rng.normal() for q in range(n)}
    j = {(p, q): rng.normal() for p in range(n) for q in range(p + 1, n) if rng.random() < density}
    return IsingHamiltonian(n, rng.normal(), h, j)


def cases(n_sv, rng):
    psi0 = rng.normal(size=1 << n_sv) + 1j * rng.normal(size=1 << n_sv)
    psi0 /= np.linalg.norm(psi0)
    h16 = random_ising(16, 0.3, rng)
    h12 = random_ising(12, 0.3, rng)
    ptr16, idx16, val16 = h16.adjacency
    ptr12, idx12, val12 = h12.adjacency
    jp, jq, jv = h16.pair_arrays
    probs = np.abs(rng.normal(size=1 << 16)) ** 2
    probs /= probs.sum()
    sweeps = 50
    betas = np.geomspace(0.1, 10.0, sweeps)
    uniforms = rng.random((sweeps, 12))
    spins = np.ones(12, dtype=np.int8)

    def gate_case(name, *args):
        def run(k):
            psi = psi0.copy()
            getattr(k, name)(psi, *args)
        return run

    return [
        (f"apply_ry   ({n_sv}q)", gate_case("apply_ry", n_sv // 2, 0.3)),
        (f"apply_rz   ({n_sv}q)", gate_case("apply_rz", n_sv // 2, 0.3)),
        (f"apply_rzz  ({n_sv}q)", gate_case("apply_rzz", 1, n_sv - 2, 0.3)),
        (f"apply_cnot ({n_sv}q)", gate_case("apply_cnot", 0, n_sv - 1)),
        ("ising_costs (16q)", lambda k: k.ising_costs(0, 1 << 16, 16, h16.identity_coeff, h16.h_vector, jp, jq, jv)),
        ("diag_expectation (16q)", lambda k: k.diag_expectation(probs, 16, h16.identity_coeff, h16.h_vector, ptr16, idx16, val16)),
        ("gray_code_minimum (12q)", lambda k: k.gray_code_minimum(12, h12.identity_coeff, h12.h_vector, ptr12, idx12, val12, 1e-9)),
        (f"metropolis_anneal (12q x {sweeps})", lambda k: k.metropolis_anneal(spins.copy(), h12.identity_coeff, h12.h_vector, ptr12, idx12, val12, betas, uniforms)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=18)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not kernels.COMPILED_AVAILABLE:
        print("compiled extension not built; only the Python backend is available")
    backends = {"python": kernels.get_backend("python")}
    if kernels.COMPILED_AVAILABLE:
        backends["compiled"] = kernels.get_backend("compiled")

    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speed-up':>9s}")
    for name, fn in cases(args.qubits, rng):
        t = {b: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3 for b, mod in backends.items()}
        if "compiled" in t:
            print(f"{name:36s} {t['python']:12.3f} {t['compiled']:14.3f} {t['python'] / t['compiled']:8.1f}x")
        else:
            print(f"{name:36s} {t['python']:12.3f} {'-':>14s}")


if __name__ == "__main__":
    main()
