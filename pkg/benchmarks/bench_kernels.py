"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--steps N] [--repeat R]

Times the two inner loops (the truncated gadget chain and the Trotter
rotation chain) on the same term tables, checks that both backends agree,
and then times one end-to-end simulation per backend.
"""
import argparse
import math
import timeit

import numpy as np

from hamsim import kernels
from hamsim.decompose import decompose_full
from hamsim.engine import gadget_weights
from hamsim.hamiltonian import random_sparse
from hamsim.pipeline import simulate_sparse


def chain_call(chain, terms, tab, nsteps, k, alpha):
    m = np.zeros((k + 1, terms.dim, terms.dim), dtype=complex)
    m[0] = np.eye(terms.dim)
    w0, w1 = gadget_weights(alpha)
    chain(m, tab["perm"], tab["level"], tab["phase"], tab["fill"], tab["levels"],
          0, 1, 1, nsteps, complex(w0), complex(w1), -1.0 + 0j, 0)
    return m


def rotation_call(rot, terms, tab, nsteps, x):
    m = np.eye(terms.dim, dtype=complex)
    rot(m, tab["perm"], tab["level"], tab["phase"], tab["fill"], tab["levels"], 0, 1, 1, nsteps,
        math.cos(x), math.sin(x))
    return m


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if kernels.BACKEND != "compiled":
        print("compiled extension not available; only the numpy fallback can be timed")
    names = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
    terms = decompose_full(random_sparse(3, 2, 7), 0.05)
    tab = terms.tables()
    print(f"term tables: {len(terms)} terms on dimension {terms.dim}, {args.steps} steps")

    results = {}
    for name in names:
        chain, rot = kernels.backend(name)
        results[name] = (chain_call(chain, terms, tab, args.steps, 8, 1e-4),
                         rotation_call(rot, terms, tab, args.steps, 1e-3))
        t_chain = best_of(lambda: chain_call(chain, terms, tab, args.steps, 8, 1e-4), args.repeat)
        t_rot = best_of(lambda: rotation_call(rot, terms, tab, args.steps, 1e-3), args.repeat)
        t_sim = best_of(lambda: simulate_sparse(random_sparse(2, 2, 3), 1.0, 1e-2, r=20,
                                                kernel_backend=name), args.repeat)
        results[name] += (t_chain, t_rot, t_sim)
        print(f"{name:>9}: chain {t_chain:8.4f}s  rotation {t_rot:8.4f}s  simulate {t_sim:8.4f}s")

    if "compiled" in results:
        py, cc = results["python"], results["compiled"]
        diff = max(float(np.max(np.abs(py[0] - cc[0]))), float(np.max(np.abs(py[1] - cc[1]))))
        print(f"max backend disagreement {diff:.2e}")
        print(f"speedup: chain {py[2] / cc[2]:.1f}x, rotation {py[3] / cc[3]:.1f}x, simulate {py[4] / cc[4]:.1f}x")


if __name__ == "__main__":
    main()
