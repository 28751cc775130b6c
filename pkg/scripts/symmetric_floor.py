"""Lowest cost and best fidelity over flip-symmetric states.

The default driver couplings and the X mixer all commute with the global bit
flip, and the initial state is invariant under it, so every state the ansatz
can produce satisfies ``psi[j] == psi[~j]``.  This script prints the best
achievable values inside that subspace.

    python3 scripts/symmetric_floor.py --max-m 6
"""

import argparse

import numpy as np

from poisson_vqa.lattice import build_system


def symmetric_basis(m):
    n = 2**m
    S = np.zeros((n, n // 2))
    for j in range(n // 2):
        S[j, j] = S[n - 1 - j, j] = 1 / np.sqrt(2)
    return S


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-m", type=int, default=6)
    parser.add_argument("--source", default="x")
    args = parser.parse_args()
    print(f"{'m':>2} {'min cost':>10} {'fidelity there':>15} {'max fidelity':>13}")
    for m in range(2, args.max_m + 1):
        system = build_system(m, args.source)
        A, b, x = system.A_dense, system.b_normalized, system.x_reference
        H = A @ (np.eye(2**m) - np.outer(b, b)) @ A
        S = symmetric_basis(m)
        vals, vecs = np.linalg.eigh(S.T @ H @ S)
        psi = S @ vecs[:, 0]
        cap = np.linalg.norm(S.T @ x)
        print(f"{m:>2} {vals[0]:>10.3e} {abs(psi @ x):>15.5f} {cap:>13.5f}")


if __name__ == "__main__":
    main()
