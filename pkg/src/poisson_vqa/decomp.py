"""Logarithmic-size tensor decompositions of the Poisson matrix and its square.

All routines return flat :class:`~poisson_vqa.opalg.OperatorSum` term lists
in a canonical order: outermost recursion level first, and within a level the
lower-left crossing term before the upper-right one.

Composite trailing factors such as ``(I - 4 sigma+)`` are expanded into two
terms.  With that convention the counts are ``2m + 1`` for ``A``, ``4m - 1``
for ``B`` and ``4m + 1`` for ``A**2 = B - C``.
"""

from __future__ import annotations

from poisson_vqa.errors import InputError
from poisson_vqa.lattice import _check_m
from poisson_vqa.opalg import I, P0, P1, SM, SP, OperatorSum, TensorTerm, pad_term


def _pad_all(terms, before=1):
    return [pad_term(t, before, 0) for t in terms]


def _a_terms(m):
    if m == 1:
        return [TensorTerm(2, (I,)), TensorTerm(-1, (SP,)), TensorTerm(-1, (SM,))]
    outer = [
        TensorTerm(-1, (SM,) + (SP,) * (m - 1)),
        TensorTerm(-1, (SP,) + (SM,) * (m - 1)),
    ]
    return outer + _pad_all(_a_terms(m - 1))


def decompose_A(m: int) -> OperatorSum:
    """``A_m = I (x) A_{m-1} - s- (x) s+^(m-1) - s+ (x) s-^(m-1)``, unrolled."""
    _check_m(m)
    return OperatorSum(_a_terms(m), m)


def _b_terms(m):
    if m == 1:
        return [TensorTerm(6, (I,)), TensorTerm(-4, (SP,)), TensorTerm(-4, (SM,))]
    low = (SM,) + (SP,) * (m - 2)
    up = (SP,) + (SM,) * (m - 2)
    outer = [
        TensorTerm(1, low + (I,)),
        TensorTerm(-4, low + (SP,)),
        TensorTerm(1, up + (I,)),
        TensorTerm(-4, up + (SM,)),
    ]
    return outer + _pad_all(_b_terms(m - 1))


def decompose_B(m: int) -> OperatorSum:
    """Pentadiagonal ``(1, -4, 6, -4, 1)`` Toeplitz part of ``A**2``."""
    _check_m(m)
    return OperatorSum(_b_terms(m), m)


def decompose_C(m: int) -> OperatorSum:
    """Corner correction ``|0..0><0..0| + |1..1><1..1|``."""
    _check_m(m)
    return OperatorSum([TensorTerm(1, (P0,) * m), TensorTerm(1, (P1,) * m)], m)


def decompose_A_squared(m: int) -> OperatorSum:
    return decompose_B(m) + decompose_C(m).scaled(-1)


def decompose_poisson_dD(d: int, m: int) -> OperatorSum:
    """Kronecker-sum Laplacian on ``d * m`` qubits, slot ``k`` on qubits ``[k*m, (k+1)*m)``."""
    _check_m(d, "d")
    a = decompose_A(m)
    terms = [
        pad_term(t, slot * m, (d - 1 - slot) * m) for slot in range(d) for t in a.terms
    ]
    return OperatorSum(terms, d * m)


def _banded_terms(m, diag_factor, lower_tail, upper_tail):
    """Unrolled level-by-level construction shared by the banded routines.

    ``diag_factor`` is the ``[(coeff, op), ...]`` expansion of the single-qubit
    block on the last qubit.  ``lower_tail`` / ``upper_tail`` are the trailing
    factor expansions of the block-crossing terms at every level ``k >= 2``:
    ``I^(m-k) (x) s- (x) s+^(k-2) (x) tail`` couples the upper half into the lower
    half of a ``2**k`` block (the subdiagonal side), and its mirror uses ``s+``
    and ``s-``.
    """
    terms = []
    for k in range(m, 1, -1):
        ids = (I,) * (m - k)
        for head, body, tail in ((SM, SP, lower_tail), (SP, SM, upper_tail)):
            prefix = ids + (head,) + (body,) * (k - 2)
            terms += [TensorTerm(c, prefix + (op,)) for c, op in tail]
    ids = (I,) * (m - 1)
    terms += [TensorTerm(c, ids + (op,)) for c, op in diag_factor]
    return [t for t in terms if t.coeff != 0.0]


def decompose_tridiagonal(t_minus1: float, t_0: float, t_plus1: float, m: int) -> OperatorSum:
    """Tridiagonal Toeplitz matrix: ``t_0`` on the diagonal, ``t_plus1`` above, ``t_minus1`` below.

    Zero-coefficient terms are dropped, so ``2m + 1`` terms only for nonzero bands.
    """
    _check_m(m)
    terms = _banded_terms(
        m,
        [(t_0, I), (t_plus1, SP), (t_minus1, SM)],
        lower_tail=[(t_minus1, SP)],
        upper_tail=[(t_plus1, SM)],
    )
    return OperatorSum(terms, m)


def decompose_pentadiagonal(
    t_minus2: float, t_minus1: float, t_0: float, t_plus1: float, t_plus2: float, m: int
) -> OperatorSum:
    """Pentadiagonal Toeplitz matrix with bands ``t_k`` at offset ``k`` (column minus row).

    Needs ``m >= 2``.  Yields ``4m - 1`` terms for nonzero bands.
    """
    _check_m(m)
    if m < 2:
        raise InputError("pentadiagonal decomposition needs m >= 2 (n >= 4)")
    terms = _banded_terms(
        m,
        [(t_0, I), (t_plus1, SP), (t_minus1, SM)],
        lower_tail=[(t_minus2, I), (t_minus1, SP)],
        upper_tail=[(t_plus2, I), (t_plus1, SM)],
    )
    return OperatorSum(terms, m)


MATRICES = {
    "A": decompose_A,
    "B": decompose_B,
    "C": decompose_C,
    "A2": decompose_A_squared,
}
