"""Statevector simulation and shot-based estimators.

States are plain complex arrays of length ``2**q``; a leading batch axis is
allowed everywhere (shape ``(..., 2**q)``), and rotation angles may then be
arrays broadcasting against that batch.  Qubit 0 is the most significant bit.

Measurements are simulated by drawing outcome counts from the exact output
distribution of the basis-changed state; the input state is never modified.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from poisson_vqa.errors import InputError

RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence([seed, stream])"

ONE_QUBIT = {"H", "X", "RX", "RZ"}
TWO_QUBIT = {"CNOT", "RZZ", "RYY"}
PARAMETRIC = {"RX", "RZ", "RZZ", "RYY"}


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    angle: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 1 if self.kind in ONE_QUBIT else 2 if self.kind in TWO_QUBIT else None
        if arity is None:
            raise InputError(f"unknown gate {self.kind!r}")
        if len(self.qubits) != arity:
            raise InputError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise InputError(f"{self.kind} needs distinct qubits, got {self.qubits}")
        if (self.kind in PARAMETRIC) != (self.angle is not None):
            raise InputError(f"{self.kind}: angle {'required' if self.kind in PARAMETRIC else 'not allowed'}")
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))

    def inverse(self) -> "Gate":
        if self.angle is None:
            return self
        return Gate(self.kind, self.qubits, -self.angle)

    def to_dict(self) -> dict:
        out = {"gate": self.kind, "qubits": list(self.qubits)}
        if self.angle is not None:
            out["angle"] = self.angle
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Gate":
        try:
            return cls(data["gate"], data["qubits"], data.get("angle"))
        except KeyError as exc:
            raise InputError(f"gate entry missing {exc}") from None


def inverse_circuit(circuit: Sequence[Gate]) -> list:
    return [g.inverse() for g in reversed(circuit)]


def circuit_to_json(circuit: Sequence[Gate]) -> str:
    return json.dumps([g.to_dict() for g in circuit])


def circuit_from_json(text: str) -> list:
    return [Gate.from_dict(d) for d in json.loads(text)]


def zero_state(q: int) -> np.ndarray:
    psi = np.zeros(2**q, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(bits) -> np.ndarray:
    bits = _bits(bits)
    psi = np.zeros(2 ** len(bits), dtype=complex)
    psi[int("".join(map(str, bits)), 2)] = 1.0
    return psi


def num_qubits(state: np.ndarray) -> int:
    n = np.shape(state)[-1]
    q = n.bit_length() - 1
    if n != 1 << q or q < 1:
        raise InputError(f"state length {n} is not a power of two")
    return q


def _bits(bits) -> tuple:
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    bits = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in bits):
        raise InputError(f"not a bitstring: {bits}")
    return bits


@lru_cache(maxsize=None)
def _z(q: int, k: int) -> np.ndarray:
    """+1/-1 eigenvalue of Z on qubit ``k`` for every basis index."""
    out = 1.0 - 2.0 * ((np.arange(2**q) >> (q - 1 - k)) & 1)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _flip(q: int, mask: int) -> np.ndarray:
    out = np.arange(2**q) ^ mask
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _cnot_perm(q: int, c: int, t: int) -> np.ndarray:
    idx = np.arange(2**q)
    out = np.where((idx >> (q - 1 - c)) & 1, idx ^ (1 << (q - 1 - t)), idx)
    out.setflags(write=False)
    return out


def _half(theta):
    """Angle/2 shaped to broadcast over the last (amplitude) axis."""
    return (np.asarray(theta, dtype=float) / 2.0)[..., None]


def apply(state: np.ndarray, kind: str, qubits: Sequence[int], angle=None) -> np.ndarray:
    """Gate application on (possibly batched) states; ``angle`` may be an array."""
    q = num_qubits(state)
    for k in qubits:
        if not 0 <= k < q:
            raise InputError(f"qubit index {k} out of range for {q} qubits")
    bit = 1 << (q - 1 - qubits[0])
    if kind == "H":
        z = _z(q, qubits[0])
        return (z * state + state[..., _flip(q, bit)]) / np.sqrt(2.0)
    if kind == "X":
        return state[..., _flip(q, bit)]
    if kind == "RX":
        h = _half(angle)
        return np.cos(h) * state - 1j * np.sin(h) * state[..., _flip(q, bit)]
    if kind == "RZ":
        return np.exp(-1j * _half(angle) * _z(q, qubits[0])) * state
    a, b = qubits
    if kind == "CNOT":
        return state[..., _cnot_perm(q, a, b)]
    if kind == "RZZ":
        return np.exp(-1j * _half(angle) * (_z(q, a) * _z(q, b))) * state
    if kind == "RYY":
        # Y(x)Y |xy> = -(-1)^(x+y) |~x ~y>
        mask = (1 << (q - 1 - a)) | (1 << (q - 1 - b))
        yy = -(_z(q, a) * _z(q, b)) * state[..., _flip(q, mask)]
        h = _half(angle)
        return np.cos(h) * state - 1j * np.sin(h) * yy
    raise InputError(f"unknown gate {kind!r}")


def apply_gate(state: np.ndarray, gate: Gate) -> np.ndarray:
    return apply(state, gate.kind, gate.qubits, gate.angle)


def run_circuit(circuit: Sequence[Gate], initial: np.ndarray) -> np.ndarray:
    state = np.asarray(initial, dtype=complex)
    for gate in circuit:
        state = apply_gate(state, gate)
    return state


def gate_unitary(gate: Gate, q: int) -> np.ndarray:
    """Dense ``2**q`` unitary, built by pushing every basis state through the gate."""
    cols = apply_gate(np.eye(2**q, dtype=complex), gate)
    return cols.T


def circuit_unitary(circuit: Sequence[Gate], q: int) -> np.ndarray:
    return run_circuit(circuit, np.eye(2**q, dtype=complex)).T


def compile_rzz(a: int, b: int, angle: float) -> list:
    return [Gate("CNOT", (a, b)), Gate("RZ", (b,), angle), Gate("CNOT", (a, b))]


def compile_ryy(a: int, b: int, angle: float) -> list:
    """``RYY`` through ``RX(pi/2)`` basis changes around a compiled ``RZZ``."""
    pre = [Gate("RX", (a,), np.pi / 2), Gate("RX", (b,), np.pi / 2)]
    post = [Gate("RX", (a,), -np.pi / 2), Gate("RX", (b,), -np.pi / 2)]
    return pre + compile_rzz(a, b, angle) + post


def compile_circuit(circuit: Sequence[Gate]) -> list:
    """Replace two-qubit rotations by CNOT / single-qubit sequences."""
    out = []
    for g in circuit:
        if g.kind == "RZZ":
            out += compile_rzz(*g.qubits, g.angle)
        elif g.kind == "RYY":
            out += compile_ryy(*g.qubits, g.angle)
        else:
            out.append(g)
    return out


# ---------------------------------------------------------------- sampling


@dataclass(frozen=True)
class ShotPlan:
    shots: int
    seed: int = 0

    def __post_init__(self):
        if int(self.shots) != self.shots or self.shots < 1:
            raise InputError(f"shots must be a positive integer, got {self.shots!r}")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must fit in 64 unsigned bits")

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, stream])))


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    shots: Optional[int] = None
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["stderr_estimate"] = out.pop("stderr")
        return out


def _weighted_sample(state, weights, plan: Optional[ShotPlan], stream: int) -> Estimate:
    """Estimate ``sum_j |state_j|^2 weights_j``; exact when ``plan`` is None."""
    probs = np.abs(state) ** 2
    probs = probs / probs.sum()
    if plan is None:
        return Estimate(float(probs @ weights), 0.0)
    counts = plan.rng(stream).multinomial(plan.shots, probs)
    mean = counts @ weights / plan.shots
    second = counts @ (weights**2) / plan.shots
    var = max(second - mean**2, 0.0)
    return Estimate(float(mean), float(np.sqrt(var / plan.shots)), plan.shots, plan.seed)


def _bit_of(q: int, k: int) -> np.ndarray:
    return (np.arange(2**q) >> (q - 1 - k)) & 1


def bell_measure_pair(state, qubit_a: int, qubit_b: int, plan: Optional[ShotPlan], stream: int = 0):
    """Bell-basis readout of a qubit pair.

    CNOT(a -> b) then H(a) maps phi+, phi-, psi+, psi- onto 00, 10, 01, 11.
    Returns estimates of ``<P+> = p(phi+) - p(phi-)`` and
    ``<P-> = p(psi+) - p(psi-)`` from the same set of shots.
    ``plan=None`` gives the infinite-shot limit.
    """
    if qubit_a == qubit_b:
        raise InputError("Bell measurement needs two distinct qubits")
    state = np.asarray(state, dtype=complex)
    q = num_qubits(state)
    rotated = apply(apply(state, "CNOT", (qubit_a, qubit_b)), "H", (qubit_a,))
    ba, bb = _bit_of(q, qubit_a), _bit_of(q, qubit_b)
    sign = 1.0 - 2.0 * ba
    w_plus = np.where(bb == 0, sign, 0.0)
    w_minus = np.where(bb == 1, sign, 0.0)
    if plan is None:
        return _weighted_sample(rotated, w_plus, None, 0), _weighted_sample(rotated, w_minus, None, 0)
    # one shared set of shots, both observables read from it
    probs = np.abs(rotated) ** 2
    counts = plan.rng(stream).multinomial(plan.shots, probs / probs.sum())
    out = []
    for w in (w_plus, w_minus):
        mean = counts @ w / plan.shots
        var = max(counts @ w**2 / plan.shots - mean**2, 0.0)
        out.append(Estimate(float(mean), float(np.sqrt(var / plan.shots)), plan.shots, plan.seed))
    return tuple(out)


def two_level_circuit(u, v, qubits: Sequence[int], imag: bool = False):
    """Basis change that isolates the pair ``{|u>, |v>}`` on one pivot qubit.

    Returns ``(circuit, pivot, pattern, sign)``: after the circuit, the qubits
    other than the pivot must read ``pattern`` and the pivot's Z eigenvalue,
    times ``sign``, is the observable's value.
    """
    u, v = _bits(u), _bits(v)
    qubits = tuple(qubits)
    if len(u) != len(v) or len(u) != len(qubits):
        raise InputError("u, v and qubits must have equal lengths")
    differ = [i for i in range(len(u)) if u[i] != v[i]]
    if not differ:
        raise InputError("u and v must be distinct basis states")
    p = differ[0]
    pivot = qubits[p]
    circuit = [Gate("CNOT", (pivot, qubits[i])) for i in differ[1:]]
    pattern = {
        qubits[i]: (u[i] ^ u[p]) if i in differ else u[i]
        for i in range(len(u))
        if i != p
    }
    if imag:
        circuit.append(Gate("RX", (pivot,), np.pi / 2))
        sign = 1.0 if u[p] == 0 else -1.0
    else:
        circuit.append(Gate("H", (pivot,)))
        sign = 1.0
    return circuit, pivot, pattern, sign


def estimate_two_level(
    state,
    u,
    v,
    plan: Optional[ShotPlan],
    qubits: Optional[Sequence[int]] = None,
    imag: bool = False,
    stream: int = 0,
) -> Estimate:
    """Estimate ``<|u><v| + |v><u|>`` (or ``<-i|u><v| + i|v><u|>`` with ``imag``).

    ``u`` and ``v`` are bitstrings over ``qubits`` (default: all qubits); the
    operator acts as the identity on every other qubit.  Each shot contributes
    +1, -1 or 0, so the standard error is at most ``1/sqrt(shots)``.
    """
    state = np.asarray(state, dtype=complex)
    q = num_qubits(state)
    qubits = tuple(range(q)) if qubits is None else tuple(qubits)
    circuit, pivot, pattern, sign = two_level_circuit(u, v, qubits, imag)
    rotated = run_circuit(circuit, state)
    match = np.ones(2**q, dtype=bool)
    for k, bit in pattern.items():
        match &= _bit_of(q, k) == bit
    weights = np.where(match, sign * (1.0 - 2.0 * _bit_of(q, pivot)), 0.0)
    return _weighted_sample(rotated, weights, plan, stream)


def estimate_projector_string(
    state,
    bits,
    plan: Optional[ShotPlan],
    qubits: Optional[Sequence[int]] = None,
    stream: int = 0,
) -> Estimate:
    """Frequency of reading ``bits`` on ``qubits`` in the computational basis."""
    state = np.asarray(state, dtype=complex)
    q = num_qubits(state)
    bits = _bits(bits)
    qubits = tuple(range(q)) if qubits is None else tuple(qubits)
    if len(bits) != len(qubits):
        raise InputError("bits and qubits must have equal lengths")
    match = np.ones(2**q, dtype=bool)
    for k, bit in zip(qubits, bits):
        match &= _bit_of(q, k) == bit
    return _weighted_sample(state, match.astype(float), plan, stream)
