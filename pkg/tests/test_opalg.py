from functools import reduce

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poisson_vqa.decomp import decompose_A, decompose_A_squared
from poisson_vqa.errors import CapacityError, InputError
from poisson_vqa.opalg import (
    I,
    P0,
    P1,
    SM,
    SP,
    X,
    Y,
    OperatorSum,
    SimpleOp,
    TensorTerm,
    adjoint,
    apply_sum,
    apply_term,
    expectation_exact,
    hermitian_closed,
    make_sum,
    pad_term,
    random_term,
    term_expectation,
    term_to_dense,
)

from conftest import random_states

# the oracle builds every factor from outer products of basis kets
KET = np.eye(2)
ORACLE = {
    I: np.outer(KET[0], KET[0]) + np.outer(KET[1], KET[1]),
    SP: np.outer(KET[0], KET[1]),
    SM: np.outer(KET[1], KET[0]),
    P0: np.outer(KET[0], KET[0]),
    P1: np.outer(KET[1], KET[1]),
    X: np.outer(KET[0], KET[1]) + np.outer(KET[1], KET[0]),
    Y: -1j * np.outer(KET[0], KET[1]) + 1j * np.outer(KET[1], KET[0]),
}


def oracle_dense(term):
    return term.coeff * reduce(np.kron, [ORACLE[f] for f in term.factors])


terms = st.builds(
    lambda coeff, factors: TensorTerm(coeff, tuple(factors)),
    st.floats(-5, 5, allow_nan=False),
    st.lists(st.sampled_from(list(SimpleOp)), min_size=1, max_size=5),
)


def test_dense_examples():
    D = term_to_dense(TensorTerm(1.0, (SP, SM)))
    expected = np.zeros((4, 4))
    expected[1, 2] = 1  # |01><10|
    assert np.array_equal(D, expected)
    assert np.array_equal(term_to_dense(TensorTerm(2.0, (I,))), 2 * np.eye(2))
    assert np.array_equal(term_to_dense(TensorTerm(1.0, (P0, P0))), np.diag([1, 0, 0, 0]))


def test_dense_cap():
    with pytest.raises(CapacityError):
        term_to_dense(TensorTerm(1.0, (I,) * 5), cap=4)


def test_adjoint_examples():
    assert adjoint(TensorTerm(1.0, (SM, SP, SP))).factors == (SP, SM, SM)
    assert adjoint(TensorTerm(1.0, (I, P0))).factors == (I, P0)


def test_apply_examples():
    out = apply_term(TensorTerm(1.0, (SP,)), np.array([0, 1.0]))
    assert np.array_equal(out, [1, 0])
    A1 = decompose_A(1)
    assert np.allclose(apply_sum(A1, np.array([1.0, 0])), [2, -1])
    out = apply_term(TensorTerm(1.0, (P0,)), np.array([0, 1.0]))
    assert np.array_equal(out, [0, 0])


def test_expectation_examples():
    A1 = decompose_A(1)
    assert expectation_exact(A1, np.array([1.0, 0])) == pytest.approx(2)
    assert expectation_exact(A1, np.array([1.0, 1.0]) / np.sqrt(2)) == pytest.approx(1)
    assert expectation_exact(decompose_A_squared(2), np.eye(4)[0]) == pytest.approx(5)


def test_expectation_rejects_wrong_size():
    with pytest.raises(InputError):
        expectation_exact(decompose_A(2), np.ones(8))


@given(terms)
def test_dense_matches_kron_oracle(term):
    assert np.allclose(term_to_dense(term), oracle_dense(term), atol=0)


@given(terms)
def test_adjoint_is_conjugate_transpose(term):
    assert np.allclose(term_to_dense(adjoint(term)), oracle_dense(term).conj().T)
    assert adjoint(adjoint(term)) == term


@given(terms, st.integers(0, 2**32 - 1))
def test_apply_matches_dense(term, seed):
    psi = random_states(np.random.default_rng(seed), term.qubits, 3)
    ref = psi @ oracle_dense(term).T
    assert np.allclose(apply_term(term, psi), ref, atol=1e-12)
    assert np.allclose(apply_term(term, psi[0]), ref[0], atol=1e-12)
    ev = np.einsum("ki,ij,kj->k", psi.conj(), oracle_dense(term), psi)
    assert np.allclose(term_expectation(term, psi), ev, atol=1e-12)


@given(st.lists(terms, min_size=1, max_size=6), st.integers(0, 2**32 - 1))
def test_sum_is_linear(ts, seed):
    q = ts[0].qubits
    ts = [TensorTerm(t.coeff, (t.factors * q)[:q]) for t in ts]
    op = make_sum(ts)
    dense = sum(oracle_dense(t) for t in ts)
    assert np.allclose(op.to_dense(), dense, atol=1e-12)
    psi = random_states(np.random.default_rng(seed), q)[0]
    assert np.allclose(expectation_exact(op, psi), psi.conj() @ dense @ psi, atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_hermitian_closed_iff_plus_adjoint(seed, q):
    rng = np.random.default_rng(seed)
    t = random_term(rng, q, alphabet=(I, SP, SM, P0, P1))
    closed = make_sum([t, adjoint(t)])
    assert hermitian_closed(closed)
    D = closed.to_dense()
    assert np.allclose(D, D.conj().T)
    if adjoint(t) != t:
        assert not hermitian_closed(make_sum([t]))


def test_pad_term():
    t = pad_term(TensorTerm(3.0, (SP,)), 1, 2)
    assert t.factors == (I, SP, I, I) and t.coeff == 3.0


def test_sum_validation_and_json():
    with pytest.raises(InputError):
        OperatorSum((TensorTerm(1.0, (I,)), TensorTerm(1.0, (I, I))), 1)
    with pytest.raises(InputError):
        SimpleOp.parse("Z")
    op = decompose_A_squared(3)
    back = OperatorSum.from_dict(op.to_dict())
    assert back == op
    assert np.array_equal(back.to_dense(), op.to_dense())


def test_sum_arithmetic():
    A = decompose_A(2)
    assert len(A + A) == 2 * len(A)
    assert np.array_equal(A.scaled(-2).to_dense(), -2 * A.to_dense())
