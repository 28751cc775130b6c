"""Self-contained reconstruction and consistency checks behind ``poisson-vqa verify``."""

from __future__ import annotations

import numpy as np

from poisson_vqa import decomp
from poisson_vqa.lattice import banded_toeplitz, build_dense_poisson_matrix, build_kron_sum_matrix, build_system
from poisson_vqa.opalg import expectation_exact, hermitian_closed
from poisson_vqa.simulator import Gate, bell_measure_pair, run_circuit, zero_state
from poisson_vqa.vqa import CostModel, cost_exact


def _random_states(rng, q, count):
    psi = rng.normal(size=(count, 2**q)) + 1j * rng.normal(size=(count, 2**q))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


def check_reconstruction(max_m=6):
    worst = 0.0
    for m in range(1, max_m + 1):
        A = build_dense_poisson_matrix(m)
        n = 2**m
        pairs = [
            (decomp.decompose_A(m), A),
            (decomp.decompose_B(m), banded_toeplitz(n, {-2: 1, -1: -4, 0: 6, 1: -4, 2: 1})),
            (decomp.decompose_C(m), np.diag([1.0] + [0.0] * (n - 2) + [1.0])),
            (decomp.decompose_A_squared(m), A @ A),
        ]
        for op, dense in pairs:
            worst = max(worst, np.abs(op.to_dense() - dense).max())
    return worst == 0.0, f"max |dense(sum) - direct| = {worst:g} for m <= {max_m}"


def check_term_counts(max_m=10):
    bad = []
    for m in range(1, max_m + 1):
        counts = {
            "A": (len(decomp.decompose_A(m)), 2 * m + 1),
            "B": (len(decomp.decompose_B(m)), 4 * m - 1),
            "C": (len(decomp.decompose_C(m)), 2),
            "A2": (len(decomp.decompose_A_squared(m)), 4 * m + 1),
            "A(3)": (len(decomp.decompose_poisson_dD(3, m)), 3 * (2 * m + 1)),
            "W": (len(decomp.decompose_tridiagonal(3.0, 1.0, 7.0, m)), 2 * m + 1),
        }
        if m >= 2:
            counts["V"] = (len(decomp.decompose_pentadiagonal(2.0, 3.0, 1.0, 7.0, 5.0, m)), 4 * m - 1)
        bad += [f"{k}(m={m}): {got} != {want}" for k, (got, want) in counts.items() if got != want]
    return not bad, "; ".join(bad) or f"all formulas hold for m <= {max_m}"


def check_banded(max_m=6):
    worst = 0.0
    for m in range(1, max_m + 1):
        w = decomp.decompose_tridiagonal(-1, 2, -1, m).to_dense()
        worst = max(worst, np.abs(w - decomp.decompose_A(m).to_dense()).max())
        if m >= 2:
            v = decomp.decompose_pentadiagonal(1, -4, 6, -4, 1, m).to_dense()
            worst = max(worst, np.abs(v - decomp.decompose_B(m).to_dense()).max())
    return worst == 0.0, f"max deviation {worst:g}"


def check_kron_sum():
    worst = 0.0
    for d, m in [(1, 3), (2, 1), (2, 2), (2, 3), (3, 1)]:
        worst = max(worst, np.abs(decomp.decompose_poisson_dD(d, m).to_dense() - build_kron_sum_matrix(d, m)).max())
    return worst == 0.0, f"max deviation {worst:g}"


def check_hermitian():
    ops = [decomp.decompose_A(4), decomp.decompose_A_squared(4), decomp.decompose_pentadiagonal(2, 3, 1, 3, 2, 4)]
    ok = all(hermitian_closed(op) for op in ops)
    return ok, "symmetric-band sums are hermitian closed" if ok else "non-closed sum found"


def check_cost(max_m=5, states=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    lowest = np.inf
    for m in range(1, max_m + 1):
        system = build_system(m, "x")
        model = CostModel.from_system(system)
        A, b = system.A_dense, system.b_normalized
        H = A @ (np.eye(2**m) - np.outer(b, b)) @ A
        psi = _random_states(rng, m, states)
        dense = np.real(np.einsum("ki,ij,kj->k", psi.conj(), H, psi))
        ours = cost_exact(model, psi)
        worst = max(worst, np.abs(ours - dense).max())
        lowest = min(lowest, ours.min())
        worst = max(worst, abs(cost_exact(model, system.x_reference)))
    ok = worst < 1e-10 and lowest >= -1e-10
    return ok, f"max |decomposed - dense| = {worst:.2e}, min cost = {lowest:.3g}"


def check_bell():
    prep = [Gate("H", (0,)), Gate("CNOT", (0, 1))]
    phi_plus = run_circuit(prep, zero_state(2))
    psi_minus = run_circuit([Gate("X", (0,)), Gate("X", (1,))] + prep, zero_state(2))
    p1, m1 = bell_measure_pair(phi_plus, 0, 1, None)
    p2, m2 = bell_measure_pair(psi_minus, 0, 1, None)
    vals = (p1.value, m1.value, p2.value, m2.value)
    ok = np.allclose(vals, (1, 0, 0, -1), atol=1e-12)
    return ok, "phi+: <P+>=%.3g <P->=%.3g; psi-: <P+>=%.3g <P->=%.3g" % vals


def check_expectation(seed=1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for m in range(1, 7):
        for op in (decomp.decompose_A(m), decomp.decompose_A_squared(m)):
            M = op.to_dense()
            psi = _random_states(rng, m, 20)
            dense = np.einsum("ki,ij,kj->k", psi.conj(), M, psi)
            worst = max(worst, np.abs(expectation_exact(op, psi) - dense).max())
    return worst < 1e-12, f"max |sum expectation - dense| = {worst:.2e}"


CHECKS = {
    "reconstruction": check_reconstruction,
    "term_counts": check_term_counts,
    "banded": check_banded,
    "kron_sum": check_kron_sum,
    "hermitian": check_hermitian,
    "expectation": check_expectation,
    "cost": check_cost,
    "bell": check_bell,
}


def run_all():
    return [(name, *fn()) for name, fn in CHECKS.items()]
