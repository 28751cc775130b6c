"""Sums of tensor products over a small single-qubit operator alphabet.

Every alphabet member sends a computational basis state to at most one basis
state, so a tensor term acts on a statevector as a masked permutation with
phases.  That is what :func:`apply_term` exploits: no ``4**q`` object is ever
formed.

Qubit ordering: the leftmost factor acts on the most significant bit of the
basis index (``numpy.kron`` order).
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from poisson_vqa.errors import InputError
from poisson_vqa.lattice import _check_cap


class SimpleOp(enum.Enum):
    Id = "I"
    SigmaPlus = "S+"
    SigmaMinus = "S-"
    Proj0 = "P0"
    Proj1 = "P1"
    PauliX = "X"
    PauliY = "Y"

    @property
    def matrix(self) -> np.ndarray:
        return _MATRICES[self]

    @property
    def adjoint(self) -> "SimpleOp":
        return _ADJOINT.get(self, self)

    @classmethod
    def parse(cls, tag: str) -> "SimpleOp":
        try:
            return cls(tag)
        except ValueError:
            raise InputError(f"unknown operator tag {tag!r}") from None


_MATRICES = {
    SimpleOp.Id: np.eye(2),
    SimpleOp.SigmaPlus: np.array([[0.0, 1.0], [0.0, 0.0]]),
    SimpleOp.SigmaMinus: np.array([[0.0, 0.0], [1.0, 0.0]]),
    SimpleOp.Proj0: np.array([[1.0, 0.0], [0.0, 0.0]]),
    SimpleOp.Proj1: np.array([[0.0, 0.0], [0.0, 1.0]]),
    SimpleOp.PauliX: np.array([[0.0, 1.0], [1.0, 0.0]]),
    SimpleOp.PauliY: np.array([[0.0, -1j], [1j, 0.0]]),
}
for _mat in _MATRICES.values():
    _mat.setflags(write=False)

_ADJOINT = {
    SimpleOp.SigmaPlus: SimpleOp.SigmaMinus,
    SimpleOp.SigmaMinus: SimpleOp.SigmaPlus,
}

I, SP, SM, P0, P1, X, Y = (
    SimpleOp.Id,
    SimpleOp.SigmaPlus,
    SimpleOp.SigmaMinus,
    SimpleOp.Proj0,
    SimpleOp.Proj1,
    SimpleOp.PauliX,
    SimpleOp.PauliY,
)


@dataclass(frozen=True)
class TensorTerm:
    coeff: float
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "coeff", float(self.coeff))

    @property
    def qubits(self) -> int:
        return len(self.factors)

    def __str__(self):
        return f"{self.coeff:+g}*" + "(x)".join(f.value for f in self.factors)


def adjoint(term: TensorTerm) -> TensorTerm:
    return TensorTerm(term.coeff, tuple(f.adjoint for f in term.factors))


def term_to_dense(term: TensorTerm, cap: Optional[int] = None) -> np.ndarray:
    _check_cap(term.qubits, cap)
    out = np.ones((1, 1))
    for f in term.factors:
        out = np.kron(out, f.matrix)
    return term.coeff * out


@lru_cache(maxsize=4096)
def _action(factors: tuple):
    """Source indices, destination indices and phases of a coefficient-free term."""
    q = len(factors)
    idx = np.arange(2**q)
    need_mask = need_val = flip = 0
    y_bits = []
    for k, f in enumerate(factors):
        bit = 1 << (q - 1 - k)
        if f in (SP, P1):
            need_mask |= bit
            need_val |= bit
        elif f in (SM, P0):
            need_mask |= bit
        if f in (SP, SM, X, Y):
            flip |= bit
        if f is Y:
            y_bits.append(bit)
    src = idx[(idx & need_mask) == need_val]
    dst = src ^ flip
    if y_bits:
        phase = np.full(src.shape, 1j ** len(y_bits), dtype=complex)
        for bit in y_bits:
            phase[(src & bit) != 0] *= -1
    else:
        phase = np.ones(src.shape)
    for arr in (src, dst, phase):
        arr.setflags(write=False)
    return src, dst, phase


def apply_term(term: TensorTerm, state: np.ndarray) -> np.ndarray:
    """Apply ``term`` to ``state`` (shape ``(..., 2**q)``); result is unnormalized."""
    state = np.asarray(state)
    if state.shape[-1] != 2**term.qubits:
        raise InputError(
            f"state of size {state.shape[-1]} does not match a {term.qubits}-qubit term"
        )
    src, dst, phase = _action(term.factors)
    out = np.zeros(state.shape, dtype=np.result_type(state, phase, float))
    out[..., dst] = term.coeff * phase * state[..., src]
    return out


def term_expectation(term: TensorTerm, state: np.ndarray):
    """``<state| term |state>`` without materializing ``term |state>``."""
    src, dst, phase = _action(term.factors)
    return term.coeff * np.sum(np.conj(state[..., dst]) * phase * state[..., src], axis=-1)


@dataclass(frozen=True)
class OperatorSum:
    terms: tuple
    qubits: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.qubits < 1:
            raise InputError("qubit count must be positive")
        for t in self.terms:
            if t.qubits != self.qubits:
                raise InputError(
                    f"term {t} acts on {t.qubits} qubits, expected {self.qubits}"
                )

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        if other.qubits != self.qubits:
            raise InputError("cannot add operator sums on different qubit counts")
        return OperatorSum(self.terms + other.terms, self.qubits)

    def scaled(self, factor: float) -> "OperatorSum":
        return OperatorSum(
            tuple(TensorTerm(factor * t.coeff, t.factors) for t in self.terms), self.qubits
        )

    def to_dense(self, cap: Optional[int] = None) -> np.ndarray:
        _check_cap(self.qubits, cap)
        n = 2**self.qubits
        complex_ = any(Y in t.factors for t in self.terms)
        out = np.zeros((n, n), dtype=complex if complex_ else float)
        for t in self.terms:
            out += _dense_via_action(t, n)
        return out

    def to_dict(self) -> dict:
        return {
            "qubits": self.qubits,
            "terms": [
                {"coeff": t.coeff, "factors": [f.value for f in t.factors]}
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorSum":
        try:
            terms = [
                TensorTerm(t["coeff"], [SimpleOp.parse(s) for s in t["factors"]])
                for t in data["terms"]
            ]
            return cls(terms, int(data["qubits"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed operator sum: {exc}") from None


def _dense_via_action(term: TensorTerm, n: int) -> np.ndarray:
    src, dst, phase = _action(term.factors)
    out = np.zeros((n, n), dtype=np.result_type(phase, float))
    out[dst, src] = term.coeff * phase
    return out


def hermitian_closed(op: OperatorSum) -> bool:
    """True when every term's adjoint occurs with the same coefficient (as a multiset)."""
    have = Counter((t.coeff, t.factors) for t in op.terms)
    want = Counter((t.coeff, adjoint(t).factors) for t in op.terms)
    return have == want


def expectation_exact(op: OperatorSum, state: np.ndarray):
    """Sum of term expectations, reduced in term order."""
    state = np.asarray(state)
    if state.shape[-1] != 2**op.qubits:
        raise InputError(
            f"state of size {state.shape[-1]} does not match {op.qubits} qubits"
        )
    total = np.zeros(state.shape[:-1], dtype=complex)
    for t in op.terms:
        total = total + term_expectation(t, state)
    return total[()] if total.ndim == 0 else total


def apply_sum(op: OperatorSum, state: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(state), dtype=complex)
    for t in op.terms:
        out += apply_term(t, state)
    return out


def pad_term(term: TensorTerm, before: int, after: int) -> TensorTerm:
    """Surround ``term`` with identity factors."""
    return TensorTerm(term.coeff, (I,) * before + term.factors + (I,) * after)


def make_sum(terms: Iterable[TensorTerm], qubits: Optional[int] = None) -> OperatorSum:
    terms = tuple(terms)
    if qubits is None:
        if not terms:
            raise InputError("cannot infer qubit count of an empty sum")
        qubits = terms[0].qubits
    return OperatorSum(terms, qubits)


def random_term(rng: np.random.Generator, qubits: int, alphabet: Sequence[SimpleOp] = tuple(SimpleOp)) -> TensorTerm:
    """Random term for property tests."""
    alphabet = list(alphabet)
    factors = tuple(alphabet[i] for i in rng.integers(len(alphabet), size=qubits))
    return TensorTerm(float(rng.normal()), factors)
