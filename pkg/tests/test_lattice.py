import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import solve_banded

from poisson_vqa.errors import CapacityError, InputError
from poisson_vqa.lattice import (
    banded_toeplitz,
    build_dense_poisson_matrix,
    build_kron_sum_matrix,
    build_rhs,
    build_system,
    grid_points,
    load_source,
    solve_reference,
    solve_unnormalized,
    thomas_solve,
)


def test_dense_matrix_small_cases():
    assert np.array_equal(build_dense_poisson_matrix(1), [[2, -1], [-1, 2]])
    expected = [[2, -1, 0, 0], [-1, 2, -1, 0], [0, -1, 2, -1], [0, 0, -1, 2]]
    assert np.array_equal(build_dense_poisson_matrix(2), expected)


def test_dense_matrix_cap():
    with pytest.raises(CapacityError):
        build_dense_poisson_matrix(13)
    with pytest.raises(CapacityError):
        build_dense_poisson_matrix(4, cap=3)
    with pytest.raises(InputError):
        build_dense_poisson_matrix(0)


def test_kron_sum_d1_is_plain_matrix():
    for m in range(1, 5):
        assert np.array_equal(build_kron_sum_matrix(1, m), build_dense_poisson_matrix(m))


def test_kron_sum_two_dims_single_qubit():
    # written out by hand: A (x) I + I (x) A with A = [[2,-1],[-1,2]]
    expected = np.array([[4, -1, -1, 0], [-1, 4, 0, -1], [-1, 0, 4, -1], [0, -1, -1, 4]])
    assert np.array_equal(build_kron_sum_matrix(2, 1), expected)


def test_kron_sum_three_dims_against_kron():
    A = build_dense_poisson_matrix(2)
    eye = np.eye(4)
    ref = np.kron(np.kron(A, eye), eye) + np.kron(np.kron(eye, A), eye) + np.kron(np.kron(eye, eye), A)
    assert np.array_equal(build_kron_sum_matrix(3, 2), ref)


def test_banded_toeplitz():
    T = banded_toeplitz(4, {-1: 3, 0: 1, 1: 7})
    assert np.array_equal(T, [[1, 7, 0, 0], [3, 1, 7, 0], [0, 3, 1, 7], [0, 0, 3, 1]])


def test_rhs_examples():
    b, bn = build_rhs("x", 1)
    assert np.allclose(b, [1 / 3, 2 / 3])
    assert np.allclose(bn, np.array([1, 2]) / np.sqrt(5))
    b, _ = build_rhs(lambda x: np.ones_like(x), 2)
    assert np.array_equal(b, [1, 1, 1, 1])
    b, _ = build_rhs("one", 2)
    assert np.array_equal(b, [1, 1, 1, 1])


def test_rhs_rejects_bad_sources():
    with pytest.raises(InputError):
        build_rhs(lambda x: np.full_like(x, np.nan), 2)
    with pytest.raises(InputError):
        build_rhs(lambda x: 0 * x, 2)
    with pytest.raises(InputError):
        build_rhs([1.0, 2.0, 3.0], 2)
    with pytest.raises(InputError):
        build_rhs("nope", 2)


def test_rhs_scalar_only_callable():
    b, _ = build_rhs(lambda x: float(x) ** 2, 2)
    assert np.allclose(b, grid_points(2)[:, 0] ** 2)


def test_grid_points_interior():
    x = grid_points(2)
    assert np.allclose(x[:, 0], np.arange(1, 5) / 5)
    assert grid_points(1, d=2).shape == (4, 2)


def test_solve_reference_single_qubit():
    x = solve_reference(1, [1.0, 2.0])
    assert np.allclose(x, np.array([4, 5]) / np.sqrt(41))


def test_solve_reference_first_column():
    A = build_dense_poisson_matrix(3)
    x = solve_reference(3, A[:, 0])
    assert np.allclose(x, np.eye(8)[0])


def test_solve_rejects_zero():
    with pytest.raises(InputError):
        solve_reference(2, np.zeros(4))


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_thomas_matches_banded_solver(m, seed):
    rng = np.random.default_rng(seed)
    n = 2**m
    b = rng.normal(size=n)
    ab = np.zeros((3, n))
    ab[0, 1:] = -1
    ab[1] = 2
    ab[2, :-1] = -1
    ref = solve_banded((1, 1), ab, b)
    ours = solve_unnormalized(m, b)
    assert np.allclose(ours, ref, rtol=1e-10, atol=1e-12)


def test_thomas_general_diagonals(rng):
    n = 9
    sub, sup = rng.normal(size=n - 1), rng.normal(size=n - 1)
    diag = 5 + rng.random(n)
    M = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
    rhs = rng.normal(size=n)
    assert np.allclose(thomas_solve(sub, diag, sup, rhs), np.linalg.solve(M, rhs))


@given(st.integers(1, 3), st.integers(1, 3))
def test_multidim_solution_solves_system(d, m):
    if d * m > 8:
        return
    system = build_system(m, "one", d=d)
    A = build_kron_sum_matrix(d, m)
    r = A @ system.x_reference
    r /= np.linalg.norm(r)
    assert np.allclose(r, system.b_normalized)


def test_system_roundtrip(tmp_path):
    system = build_system(2, "x")
    data = json.loads(system.to_json())
    assert set(data) == {"d", "m", "b", "x_reference"}
    assert np.allclose(data["x_reference"], system.x_reference)
    path = tmp_path / "b.json"
    path.write_text(json.dumps({"b": [1, 2, 3, 4]}))
    assert np.array_equal(load_source(path), [1, 2, 3, 4])
    path.write_text("[1, 2]")
    assert np.array_equal(build_system(1, load_source(path)).b, [1, 2])
