from functools import reduce

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from poisson_vqa.decomp import decompose_C
from poisson_vqa.errors import InputError
from poisson_vqa.opalg import SimpleOp, TensorTerm, expectation_exact, make_sum
from poisson_vqa.simulator import (
    Gate,
    ShotPlan,
    apply,
    apply_gate,
    basis_state,
    bell_measure_pair,
    circuit_from_json,
    circuit_to_json,
    circuit_unitary,
    compile_circuit,
    compile_ryy,
    compile_rzz,
    estimate_projector_string,
    estimate_two_level,
    gate_unitary,
    inverse_circuit,
    run_circuit,
    zero_state,
)

from conftest import random_states

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def embed(paulis, q):
    """Kronecker product with qubit 0 leftmost; ``paulis`` maps qubit -> label."""
    return reduce(np.kron, [PAULI[paulis.get(k, "I")] for k in range(q)])


def oracle_unitary(gate, q):
    a = gate.qubits
    if gate.kind == "H":
        return (embed({a[0]: "X"}, q) + embed({a[0]: "Z"}, q)) / np.sqrt(2)
    if gate.kind == "X":
        return embed({a[0]: "X"}, q)
    if gate.kind == "CNOT":
        p1 = (np.eye(2**q) - embed({a[0]: "Z"}, q)) / 2
        return np.eye(2**q) - p1 + p1 @ embed({a[1]: "X"}, q)
    gen = {
        "RX": {a[0]: "X"},
        "RZ": {a[0]: "Z"},
        "RZZ": {k: "Z" for k in a},
        "RYY": {k: "Y" for k in a},
    }[gate.kind]
    return expm(-0.5j * gate.angle * embed(gen, q))


def ghz(q):
    psi = np.zeros(2**q, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


@st.composite
def gates(draw, q=4):
    kind = draw(st.sampled_from(["H", "X", "RX", "RZ", "CNOT", "RZZ", "RYY"]))
    arity = 2 if kind in ("CNOT", "RZZ", "RYY") else 1
    qubits = tuple(draw(st.permutations(range(q)))[:arity])
    angle = draw(st.floats(-7, 7, allow_nan=False)) if kind.startswith("R") else None
    return Gate(kind, qubits, angle)


def test_gate_examples():
    plus = apply_gate(zero_state(1), Gate("H", (0,)))
    assert np.allclose(plus, np.array([1, 1]) / np.sqrt(2))
    out = apply_gate(basis_state("10"), Gate("CNOT", (0, 1)))
    assert np.allclose(out, basis_state("11"))
    out = apply_gate(zero_state(1), Gate("RX", (0,), np.pi))
    assert np.allclose(out, [0, -1j])


def test_circuit_examples():
    psi = random_states(np.random.default_rng(0), 3)[0]
    assert np.array_equal(run_circuit([], psi), psi)
    bell = run_circuit([Gate("H", (0,)), Gate("CNOT", (0, 1))], zero_state(2))
    assert np.allclose(bell, ghz(2))


def test_invalid_gates():
    with pytest.raises(InputError):
        Gate("RX", (0,))
    with pytest.raises(InputError):
        Gate("CNOT", (1, 1))
    with pytest.raises(InputError):
        Gate("FOO", (0,))
    with pytest.raises(InputError):
        apply_gate(zero_state(2), Gate("H", (2,)))
    with pytest.raises(InputError):
        ShotPlan(0)


@given(gates())
def test_gate_matches_oracle(gate):
    U = gate_unitary(gate, 4)
    assert np.allclose(U, oracle_unitary(gate, 4), atol=1e-12)
    assert np.allclose(U.conj().T @ U, np.eye(16), atol=1e-12)


@given(st.lists(gates(), max_size=12), st.integers(0, 2**32 - 1))
def test_norm_and_inverse(circuit, seed):
    psi = random_states(np.random.default_rng(seed), 4)[0]
    state = psi
    for g in circuit:
        state = apply_gate(state, g)
        assert abs(1 - np.vdot(state, state).real) < 1e-10
    back = run_circuit(inverse_circuit(circuit), state)
    assert abs(np.vdot(psi, back)) > 1 - 1e-10


@given(st.lists(gates(), max_size=8))
def test_compiled_circuit_equivalent(circuit):
    assert np.allclose(circuit_unitary(compile_circuit(circuit), 4), circuit_unitary(circuit, 4), atol=1e-10)
    assert all(g.kind not in ("RZZ", "RYY") for g in compile_circuit(circuit))


def test_compile_pairs():
    for a, b, th in [(0, 1, 0.3), (2, 0, -1.7)]:
        assert np.allclose(circuit_unitary(compile_rzz(a, b, th), 3), gate_unitary(Gate("RZZ", (a, b), th), 3))
        assert np.allclose(circuit_unitary(compile_ryy(a, b, th), 3), gate_unitary(Gate("RYY", (a, b), th), 3))


def test_batched_apply(rng):
    psi = random_states(rng, 3, 5)
    angles = rng.uniform(0, 6, size=5)
    out = apply_gate(psi, Gate("RZZ", (0, 2), 0.4))
    for k in range(5):
        assert np.allclose(out[k], apply_gate(psi[k], Gate("RZZ", (0, 2), 0.4)))
    out = apply(psi, "RYY", (1, 2), angles)
    for k in range(5):
        assert np.allclose(out[k], apply_gate(psi[k], Gate("RYY", (1, 2), angles[k])))


def test_circuit_json_roundtrip():
    circuit = [Gate("H", (0,)), Gate("RZZ", (0, 1), 0.25), Gate("CNOT", (1, 0))]
    assert circuit_from_json(circuit_to_json(circuit)) == circuit


# ----------------------------------------------------------- bell readout


def pair_ops(q, a, b):
    """``P+`` and ``P-`` on qubits ``a < b`` as operator sums."""
    def term(fa, fb):
        factors = ["I"] * q
        factors[a], factors[b] = fa, fb
        return TensorTerm(1.0, tuple(SimpleOp.parse(f) for f in factors))

    plus = make_sum([term("S+", "S+"), term("S-", "S-")])
    minus = make_sum([term("S+", "S-"), term("S-", "S+")])
    return plus, minus


def test_bell_eigenstates():
    phi_plus = ghz(2)
    psi_minus = np.array([0, 1, -1, 0]) / np.sqrt(2)
    p, m = bell_measure_pair(phi_plus, 0, 1, None)
    assert (p.value, m.value) == pytest.approx((1, 0), abs=1e-12)
    p, m = bell_measure_pair(psi_minus, 0, 1, None)
    assert (p.value, m.value) == pytest.approx((0, -1), abs=1e-12)
    # embedded in a larger register
    state = np.kron(random_states(np.random.default_rng(1), 1)[0], phi_plus)
    p, m = bell_measure_pair(state, 1, 2, None)
    assert (p.value, m.value) == pytest.approx((1, 0), abs=1e-12)


def test_bell_product_with_plus(rng):
    plus = np.array([1, 1]) / np.sqrt(2)
    p, m = bell_measure_pair(np.kron(plus, plus), 0, 1, None)
    assert p.value + m.value == pytest.approx(1)
    phi = rng.normal(size=2)
    phi /= np.linalg.norm(phi)
    p, m = bell_measure_pair(np.kron(plus, phi), 0, 1, None)
    sigma_plus = np.array([[0, 1], [0, 0]])
    assert p.value == pytest.approx(phi @ sigma_plus @ phi)
    assert m.value == pytest.approx(phi @ sigma_plus.T @ phi)


@given(st.integers(2, 5), st.integers(0, 2**32 - 1), st.data())
def test_bell_exact_limit_matches_operator(q, seed, data):
    a, b = sorted(data.draw(st.permutations(range(q)))[:2])
    psi = random_states(np.random.default_rng(seed), q)[0]
    plus, minus = pair_ops(q, a, b)
    p, m = bell_measure_pair(psi, a, b, None)
    assert p.value == pytest.approx(expectation_exact(plus, psi).real, abs=1e-12)
    assert m.value == pytest.approx(expectation_exact(minus, psi).real, abs=1e-12)


def test_bell_sampling_reproducible(rng):
    psi = random_states(rng, 3)[0]
    plan = ShotPlan(1000, seed=7)
    assert bell_measure_pair(psi, 0, 2, plan) == bell_measure_pair(psi, 0, 2, plan)
    other = bell_measure_pair(psi, 0, 2, ShotPlan(1000, seed=8))
    assert other != bell_measure_pair(psi, 0, 2, plan)


# ------------------------------------------------------ two-level readout


def two_level_op(u, v, imag=False):
    q = len(u)
    U, V = np.eye(2**q)[int(u, 2)], np.eye(2**q)[int(v, 2)]
    M = np.outer(U, V)
    return -1j * M + 1j * M.T if imag else M + M.T


def test_two_level_examples():
    for q in range(1, 6):
        u, v = "0" * q, "1" * q
        assert estimate_two_level(ghz(q), u, v, None).value == pytest.approx(1)
        est = estimate_two_level(ghz(q), u, v, ShotPlan(10**4, 3))
        assert est.value == pytest.approx(1)
        assert estimate_two_level(basis_state(u), u, v, None).value == pytest.approx(0)
    with pytest.raises(InputError):
        estimate_two_level(ghz(2), "01", "01", None)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.booleans(), st.data())
def test_two_level_exact_limit(q, seed, imag, data):
    u = data.draw(st.text("01", min_size=q, max_size=q))
    v = data.draw(st.text("01", min_size=q, max_size=q).filter(lambda s: s != u))
    psi = random_states(np.random.default_rng(seed), q)[0]
    ref = np.vdot(psi, two_level_op(u, v, imag) @ psi).real
    assert estimate_two_level(psi, u, v, None, imag=imag).value == pytest.approx(ref, abs=1e-12)


def test_two_level_on_subset(rng):
    psi = random_states(rng, 4)[0]
    # |01><10| + h.c. on qubits (3, 1)
    full = np.zeros((16, 16))
    for k in range(16):
        bits = [(k >> (3 - j)) & 1 for j in range(4)]
        if bits[3] == 1 and bits[1] == 0:
            bits[3], bits[1] = 0, 1
            full[int("".join(map(str, bits)), 2), k] = 1
    op = full + full.T
    est = estimate_two_level(psi, "01", "10", None, qubits=(3, 1))
    assert est.value == pytest.approx(np.vdot(psi, op @ psi).real)


def test_projector_examples():
    assert estimate_projector_string(zero_state(2), "00", None).value == 1
    plus2 = np.full(4, 0.5)
    assert estimate_projector_string(plus2, "11", None).value == pytest.approx(0.25)


def test_corner_projectors_give_C(rng):
    for m in range(1, 6):
        psi = random_states(rng, m)[0]
        exact = expectation_exact(decompose_C(m), psi).real
        plan = ShotPlan(10**5, seed=m)
        e0 = estimate_projector_string(psi, "0" * m, plan, stream=0)
        e1 = estimate_projector_string(psi, "1" * m, plan, stream=1)
        assert abs(e0.value + e1.value - exact) <= 5 * np.hypot(e0.stderr, e1.stderr) + 1e-12


def test_rms_error_scaling():
    rng = np.random.default_rng(99)
    psi = random_states(rng, 3)[0]
    ref = np.vdot(psi, two_level_op("010", "111") @ psi).real
    rms = []
    for shots in (10**4, 10**6):
        errs = [estimate_two_level(psi, "010", "111", ShotPlan(shots, s)).value - ref for s in range(20)]
        rms.append(np.sqrt(np.mean(np.square(errs))))
    ratio = rms[0] / rms[1]
    assert 10 / 2 <= ratio <= 10 * 2

