"""Skew Hadamard matrices and their correspondence with DRTs.

A sign matrix is an integer numpy array with entries +1/-1.  The bordered
form has first row ``1, 1, ..., 1`` and first column ``1, -1, ..., -1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np
import sympy

from .exact_linalg import local_snf, rank
from .tournaments import NotDRT, Tournament, validate_drt

__all__ = [
    "HadamardError",
    "drt_to_hadamard",
    "hadamard_to_drt",
    "is_hadamard",
    "is_skew",
    "is_bordered",
    "normalize_skew",
    "expected_skew_snf",
    "hadamard_invariant_factors",
    "check_hadamard_snf",
    "HadamardSnfCheck",
    "write_sign_matrix",
    "read_sign_matrix",
]


class HadamardError(ValueError):
    pass


def _sign_matrix(H) -> np.ndarray:
    A = np.asarray(H, dtype=np.int64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise HadamardError(f"sign matrix must be square, got shape {A.shape}")
    if not np.isin(A, (-1, 1)).all():
        raise HadamardError("entries must be +1 or -1")
    return A


def is_hadamard(H) -> bool:
    A = _sign_matrix(H)
    n = A.shape[0]
    return bool((A @ A.T == n * np.eye(n, dtype=np.int64)).all())


def is_skew(H) -> bool:
    A = _sign_matrix(H)
    return bool((A + A.T == 2 * np.eye(A.shape[0], dtype=np.int64)).all())


def is_bordered(H) -> bool:
    A = _sign_matrix(H)
    return bool(A[0, 0] == 1 and (A[0, 1:] == 1).all() and (A[1:, 0] == -1).all())


def drt_to_hadamard(T: Tournament) -> np.ndarray:
    """[[1, 1^T], [-1, J - 2M]], checked to be skew Hadamard."""
    if T.drt_params is None:
        raise HadamardError("tournament is not a validated DRT")
    n = T.n
    H = np.empty((n + 1, n + 1), dtype=np.int64)
    H[0, :] = 1
    H[1:, 0] = -1
    H[1:, 1:] = 1 - 2 * T.M
    if not is_hadamard(H):
        raise HadamardError("HH^T != nI")
    if not is_skew(H):
        raise HadamardError("H + H^T != 2I")
    return H


def hadamard_to_drt(H) -> Tournament:
    """The tournament whose adjacency is (J - H)/2 with the border removed."""
    A = _sign_matrix(H)
    if not is_bordered(A):
        raise HadamardError("matrix is not in bordered form (first row +1, first column -1 below the corner)")
    M = (1 - A[1:, 1:]) // 2
    try:
        params = validate_drt(M)
    except NotDRT as exc:
        raise HadamardError(f"border-stripped matrix is not a DRT: {exc}") from exc
    labels = tuple(str(i) for i in range(M.shape[0]))
    return Tournament(labels, M.astype(bool), params, "hadamard")


def normalize_skew(H) -> np.ndarray:
    """Bring a skew Hadamard matrix to bordered form by the congruence DHD.

    D is diagonal with D_00 = 1 and D_jj = H_0j; negating row j together
    with column j keeps the matrix skew.
    """
    A = _sign_matrix(H)
    if not is_skew(A):
        raise HadamardError("matrix is not skew")
    d = A[0].copy()
    d[0] = 1
    return d[:, None] * A * d[None, :]


def expected_skew_snf(order: int) -> list[int]:
    """diag[1, 2 x (2m-1), 2m x (2m-1), 4m] for order 4m."""
    if order % 4:
        raise ValueError(f"skew Hadamard orders are multiples of 4, got {order}")
    m = order // 4
    return [1] + [2] * (2 * m - 1) + [2 * m] * (2 * m - 1) + [4 * m]


def hadamard_invariant_factors(H) -> list[int]:
    """Invariant factors of a Hadamard matrix, assembled prime by prime.

    det(H)^2 = n^n, so only primes dividing the order can occur.
    """
    A = _sign_matrix(H)
    n = A.shape[0]
    r = rank(A)
    factors = [1] * r
    for p in sympy.primefactors(n):
        for i, v in enumerate(local_snf(A, p)):
            factors[i] *= p**v
    return factors


@dataclass
class HadamardSnfCheck:
    computed: list[int]
    expected: list[int]

    @property
    def ok(self) -> bool:
        return self.computed == self.expected

    def __bool__(self):
        return self.ok

    def diff(self) -> list[tuple[int, int, int]]:
        """(position, computed, expected) wherever the diagonals disagree."""
        out = []
        for i in range(max(len(self.computed), len(self.expected))):
            c = self.computed[i] if i < len(self.computed) else None
            e = self.expected[i] if i < len(self.expected) else None
            if c != e:
                out.append((i, c, e))
        return out


def check_hadamard_snf(H) -> HadamardSnfCheck:
    A = _sign_matrix(H)
    return HadamardSnfCheck(hadamard_invariant_factors(A), expected_skew_snf(A.shape[0]))


def write_sign_matrix(H, fh: TextIO) -> None:
    for row in _sign_matrix(H):
        fh.write("".join("+" if x == 1 else "-" for x in row) + "\n")


def read_sign_matrix(text: str) -> np.ndarray:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if any(set(r) - {"+", "-"} for r in rows):
        raise HadamardError("sign matrix rows may only contain '+' and '-'")
    return _sign_matrix([[1 if ch == "+" else -1 for ch in r] for r in rows])
