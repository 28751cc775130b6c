"""Finite-difference Poisson systems and classical reference solutions.

The unknowns live on the interior grid points ``x_i = i / (n + 1)``,
``i = 1..n`` with ``n = 2**m`` per dimension.  The ``1/h**2`` factor of the
discrete Laplacian is dropped: it rescales ``A`` and leaves the normalized
solution direction unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from poisson_vqa.errors import CapacityError, InputError

#: Largest total qubit count (d * m) for which dense matrices are built.
DENSE_QUBIT_CAP = 12

BUILTIN_SOURCES = {
    "x": lambda pts: np.prod(pts, axis=-1),
    "one": lambda pts: np.ones(pts.shape[:-1]),
    "sin_pi_x": lambda pts: np.prod(np.sin(np.pi * pts), axis=-1),
}

Source = Union[str, Callable, np.ndarray, list]


def _check_cap(qubits, cap):
    cap = DENSE_QUBIT_CAP if cap is None else cap
    if qubits > cap:
        raise CapacityError(
            f"dense matrix on {qubits} qubits exceeds cap of {cap} qubits"
        )


def _check_m(m, name="m"):
    if int(m) != m or m < 1:
        raise InputError(f"{name} must be a positive integer, got {m!r}")


def build_dense_poisson_matrix(m: int, cap: Optional[int] = None) -> np.ndarray:
    """Return the ``2**m x 2**m`` tridiagonal matrix ``tridiag(-1, 2, -1)``."""
    _check_m(m)
    _check_cap(m, cap)
    n = 2**m
    A = 2.0 * np.eye(n)
    idx = np.arange(n - 1)
    A[idx, idx + 1] = -1.0
    A[idx + 1, idx] = -1.0
    return A


def banded_toeplitz(n: int, bands: dict) -> np.ndarray:
    """Dense Toeplitz matrix with ``bands[k]`` on offset ``k`` (column minus row)."""
    out = np.zeros((n, n))
    for k, value in bands.items():
        out += value * np.eye(n, k=k)
    return out


def build_kron_sum_matrix(d: int, m: int, cap: Optional[int] = None) -> np.ndarray:
    """Kronecker sum ``sum_k I x .. x A x .. x I`` with ``A`` in slot ``k``."""
    _check_m(d, "d")
    _check_m(m)
    _check_cap(d * m, cap)
    A = build_dense_poisson_matrix(m, cap=d * m)
    eye = np.eye(A.shape[0])
    total = np.zeros((A.shape[0] ** d,) * 2)
    for slot in range(d):
        term = np.ones((1, 1))
        for k in range(d):
            term = np.kron(term, A if k == slot else eye)
        total += term
    return total


def grid_points(m: int, d: int = 1) -> np.ndarray:
    """Interior grid points, shape ``(n**d, d)``, first coordinate slowest."""
    n = 2**m
    x = np.arange(1, n + 1) / (n + 1)
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def build_rhs(f: Source, m: int, d: int = 1):
    """Sample the source term on the interior grid.

    Parameters
    ----------
    f : str, callable or array_like
        A builtin name (``"x"``, ``"one"``, ``"sin_pi_x"``), a callable of the
        grid coordinates, or an already tabulated vector of length ``n**d``.
        A callable is first tried vectorized on an ``(N, d)`` array
        (``(N,)`` when ``d == 1``) and falls back to pointwise calls.
    m, d : int
        Qubits per dimension and spatial dimension.

    Returns
    -------
    b, b_normalized : ndarray
        The sampled vector and its unit 2-norm copy.
    """
    _check_m(m)
    _check_m(d, "d")
    size = 2 ** (m * d)
    if isinstance(f, str):
        if f not in BUILTIN_SOURCES:
            raise InputError(
                f"unknown source {f!r}; choose from {sorted(BUILTIN_SOURCES)}"
            )
        b = BUILTIN_SOURCES[f](grid_points(m, d))
    elif callable(f):
        pts = grid_points(m, d)
        arg = pts[:, 0] if d == 1 else pts
        try:
            b = np.asarray(f(arg), dtype=float)
            if b.shape != (size,):
                raise ValueError
        except (TypeError, ValueError):
            b = np.array([f(*p) for p in pts], dtype=float)
    else:
        b = np.asarray(f, dtype=float)
        if b.shape != (size,):
            raise InputError(f"tabulated source must have length {size}, got {b.shape}")
    b = np.asarray(b, dtype=float).reshape(size)
    if not np.all(np.isfinite(b)):
        raise InputError("source term produced non-finite values")
    norm = np.linalg.norm(b)
    if norm == 0:
        raise InputError("source term is identically zero")
    return b, b / norm


def thomas_solve(sub, diag, sup, rhs):
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``sub`` and ``sup`` have length ``n - 1``; no pivoting, so the matrix must be
    diagonally dominant or otherwise safe for elimination.
    """
    diag = np.asarray(diag, dtype=float)
    n = diag.size
    c = np.zeros(n)
    y = np.zeros(n)
    c_prev = 0.0
    y_prev = 0.0
    for i in range(n):
        lower = sub[i - 1] if i > 0 else 0.0
        denom = diag[i] - lower * c_prev
        c[i] = sup[i] / denom if i < n - 1 else 0.0
        y[i] = (rhs[i] - lower * y_prev) / denom
        c_prev, y_prev = c[i], y[i]
    x = np.empty(n)
    x[-1] = y[-1]
    for i in range(n - 2, -1, -1):
        x[i] = y[i] - c[i] * x[i + 1]
    return x


def solve_unnormalized(m: int, b, d: int = 1, cap: Optional[int] = None) -> np.ndarray:
    """Return ``x`` with ``A^(d) x = b`` (Thomas for ``d == 1``, dense LU otherwise)."""
    _check_m(m)
    _check_m(d, "d")
    b = np.asarray(b, dtype=float)
    if b.shape != (2 ** (m * d),):
        raise InputError(f"b must have length {2 ** (m * d)}, got {b.shape}")
    if not np.any(b):
        raise InputError("zero right-hand side has no solution direction")
    if d == 1:
        n = b.size
        return thomas_solve(-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1), b)
    return np.linalg.solve(build_kron_sum_matrix(d, m, cap=cap), b)


def solve_reference(m: int, b, d: int = 1, cap: Optional[int] = None) -> np.ndarray:
    """Unit vector along ``A^-1 b``."""
    x = solve_unnormalized(m, b, d=d, cap=cap)
    return x / np.linalg.norm(x)


@dataclass(frozen=True)
class PoissonSystem:
    d: int
    m: int
    b: np.ndarray
    b_normalized: np.ndarray
    x_reference: np.ndarray
    A_dense: Optional[np.ndarray] = None

    @property
    def qubits(self) -> int:
        return self.d * self.m

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "m": self.m,
            "b": self.b.tolist(),
            "x_reference": self.x_reference.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_system(m: int, f: Source = "x", d: int = 1, cap: Optional[int] = None) -> PoissonSystem:
    b, b_normalized = build_rhs(f, m, d)
    cap_ = DENSE_QUBIT_CAP if cap is None else cap
    A = build_kron_sum_matrix(d, m, cap=cap_) if d * m <= cap_ else None
    return PoissonSystem(
        d=d,
        m=m,
        b=b,
        b_normalized=b_normalized,
        x_reference=solve_reference(m, b, d=d, cap=cap),
        A_dense=A,
    )


def load_source(path) -> np.ndarray:
    """Read a tabulated right-hand side from JSON (a bare list or ``{"b": [...]}``)."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        if "b" not in data:
            raise InputError(f"{path}: expected a list or an object with key 'b'")
        data = data["b"]
    return np.asarray(data, dtype=float)
