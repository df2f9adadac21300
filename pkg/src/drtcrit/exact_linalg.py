"""Smith normal forms, local elementary divisors, p-ranks and critical groups.

Matrices are anything ``numpy.asarray`` turns into a 2-d integer array.
Small-entry matrices stay in ``int64``; everything that can grow is done
with Python integers (``dtype=object``).

Two routes compute invariant factors:

* ``snf`` runs unimodular elimination over Z.  Exact but entries grow, so it
  is meant for matrices up to roughly 60 x 60.
* ``local_snf`` eliminates over Z/p^K with minimal-valuation pivoting and
  returns the p-adic valuations only.  ``critical_group`` assembles these per
  prime; this is the path used for large Laplacians.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy

__all__ = [
    "SnfResult",
    "GroupStructure",
    "InsufficientPrecision",
    "as_int_matrix",
    "snf",
    "snf_minor_gcd",
    "local_snf",
    "rank",
    "p_rank",
    "determinant",
    "critical_group",
    "divisibility_product_check",
    "valuation",
]

# residues below this bound multiply without overflowing int64
_INT64_SAFE = 1 << 31


class InsufficientPrecision(ArithmeticError):
    """Elimination modulo p^K found fewer pivots than the rank of the matrix."""


def valuation(n: int, p: int) -> int:
    n = abs(int(n))
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def as_int_matrix(M) -> np.ndarray:
    A = np.asarray(M)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {A.shape}")
    if A.dtype == object:
        return np.array([[int(x) for x in row] for row in A], dtype=object).reshape(A.shape)
    if A.dtype == bool or np.issubdtype(A.dtype, np.integer):
        return A.astype(np.int64)
    raise TypeError(f"integer matrix required, got dtype {A.dtype}")


def _to_object(A: np.ndarray) -> np.ndarray:
    out = np.empty(A.shape, dtype=object)
    for idx, x in np.ndenumerate(A):
        out[idx] = int(x)
    return out


# --------------------------------------------------------------------------
# result types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SnfResult:
    """Nonzero invariant factors (units included) and the free rank of the cokernel."""

    invariant_factors: tuple[int, ...]
    free_rank: int

    @property
    def unit_count(self) -> int:
        return sum(1 for s in self.invariant_factors if s == 1)

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def torsion(self) -> tuple[int, ...]:
        return tuple(s for s in self.invariant_factors if s != 1)

    def valuations(self, p: int) -> list[int]:
        return [valuation(s, p) for s in self.invariant_factors]


@dataclass(frozen=True)
class GroupStructure:
    """Finite abelian group as a map prime -> sorted exponents of its elementary divisors."""

    elementary_divisors: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, exps in self.elementary_divisors.items():
            exps = tuple(sorted(int(e) for e in exps if int(e) > 0))
            if exps:
                clean[int(p)] = exps
        object.__setattr__(self, "elementary_divisors", dict(sorted(clean.items())))

    def __eq__(self, other):
        return isinstance(other, GroupStructure) and self.elementary_divisors == other.elementary_divisors

    def __hash__(self):
        return hash(tuple(self.elementary_divisors.items()))

    @property
    def order(self) -> int:
        return math.prod(p ** sum(e) for p, e in self.elementary_divisors.items())

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(self.elementary_divisors)

    @property
    def invariant_factors(self) -> tuple[int, ...]:
        """Non-unit invariant factors s_1 | s_2 | ... ."""
        if not self.elementary_divisors:
            return ()
        r = max(len(e) for e in self.elementary_divisors.values())
        factors = [1] * r
        for p, exps in self.elementary_divisors.items():
            for i, e in enumerate(exps):
                factors[r - len(exps) + i] *= p**e
        return tuple(factors)

    def part(self, p: int) -> "GroupStructure":
        return GroupStructure({p: self.elementary_divisors.get(p, ())})

    def without(self, p: int) -> "GroupStructure":
        return GroupStructure({q: e for q, e in self.elementary_divisors.items() if q != p})

    def __add__(self, other: "GroupStructure") -> "GroupStructure":
        merged: dict[int, list[int]] = {}
        for g in (self, other):
            for p, exps in g.elementary_divisors.items():
                merged.setdefault(p, []).extend(exps)
        return GroupStructure(merged)

    @classmethod
    def from_invariant_factors(cls, factors: Iterable[int]) -> "GroupStructure":
        eds: dict[int, list[int]] = {}
        for s in factors:
            s = abs(int(s))
            if s == 0:
                raise ValueError("0 is not the order of a finite cyclic group")
            for p, e in sympy.factorint(s).items():
                eds.setdefault(p, []).append(e)
        return cls(eds)

    @classmethod
    def from_components(cls, components: Iterable[tuple[int, int]]) -> "GroupStructure":
        """Direct sum of ``(Z/m)^k`` for each ``(m, k)``."""
        factors = []
        for m, k in components:
            factors.extend([m] * k)
        return cls.from_invariant_factors(factors)

    @classmethod
    def from_local_valuations(cls, valuations: Mapping[int, Iterable[int]]) -> "GroupStructure":
        return cls({p: tuple(v) for p, v in valuations.items()})

    def multiplicities(self, p: int) -> dict[int, int]:
        """exponent -> number of cyclic factors Z/p^exponent."""
        return dict(sorted(Counter(self.elementary_divisors.get(p, ())).items()))

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "elementary_divisors": {str(p): list(e) for p, e in self.elementary_divisors.items()},
            "invariant_factors": list(self.invariant_factors),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "GroupStructure":
        g = cls({int(p): tuple(e) for p, e in data["elementary_divisors"].items()})
        if "order" in data and int(data["order"]) != g.order:
            raise ValueError(f"order {data['order']} does not match the elementary divisors")
        if "invariant_factors" in data and tuple(data["invariant_factors"]) != g.invariant_factors:
            raise ValueError("invariant factors do not match the elementary divisors")
        return g

    @classmethod
    def from_json(cls, text: str) -> "GroupStructure":
        return cls.from_dict(json.loads(text))

    def pretty(self) -> str:
        """Primary decomposition, e.g. ``(ℤ/2)³ ⊕ (ℤ/7)²``."""
        parts = []
        for p, exps in self.elementary_divisors.items():
            for e, k in Counter(exps).items():
                parts.append(_cyclic_power(p**e, k))
        return " ⊕ ".join(parts) if parts else "0"


_SUPERSCRIPT = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


def _cyclic_power(m: int, k: int) -> str:
    base = f"(ℤ/{m})" if k != 1 else f"ℤ/{m}"
    return base + (str(k).translate(_SUPERSCRIPT) if k != 1 else "")


def describe_components(components: Sequence[tuple[int, int]]) -> str:
    return " ⊕ ".join(_cyclic_power(m, k) for m, k in components if k)


# --------------------------------------------------------------------------
# Smith normal form over Z
# --------------------------------------------------------------------------


def _divisibility_chain(diag: list[int]) -> list[int]:
    d = [abs(x) for x in diag]
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            g = math.gcd(d[i], d[j])
            if g != d[i]:
                d[i], d[j] = g, d[i] * d[j] // g
    return d


def snf(M) -> SnfResult:
    """Smith normal form by elimination over the integers."""
    A = [[int(x) for x in row] for row in as_int_matrix(M).tolist()]
    m = len(A)
    n = len(A[0]) if m else 0
    diag = []
    t = 0
    while t < min(m, n):
        piv = _min_abs_entry(A, t, t, m, n)
        if piv is None:
            break
        _move_pivot(A, t, piv)
        while True:
            a = A[t][t]
            for i in range(t + 1, m):
                q = A[i][t] // a
                if q:
                    ri, rt = A[i], A[t]
                    for j in range(t, n):
                        ri[j] -= q * rt[j]
            for j in range(t + 1, n):
                q = A[t][j] // a
                if q:
                    for i in range(t, m):
                        A[i][j] -= q * A[i][t]
            # remainders smaller than the pivot take its place
            best = None
            for i in range(t + 1, m):
                if A[i][t] and (best is None or abs(A[i][t]) < abs(A[best[0]][best[1]])):
                    best = (i, t)
            for j in range(t + 1, n):
                if A[t][j] and (best is None or abs(A[t][j]) < abs(A[best[0]][best[1]])):
                    best = (t, j)
            if best is None:
                break
            _move_pivot(A, t, best)
        diag.append(A[t][t])
        t += 1
    factors = _divisibility_chain(diag)
    return SnfResult(tuple(factors), m - len(factors))


def _min_abs_entry(A, r0, c0, m, n):
    best, best_val = None, None
    for i in range(r0, m):
        row = A[i]
        for j in range(c0, n):
            v = row[j]
            if v and (best_val is None or abs(v) < best_val):
                best, best_val = (i, j), abs(v)
                if best_val == 1:
                    return best
    return best


def _move_pivot(A, t, pos):
    i, j = pos
    if i != t:
        A[t], A[i] = A[i], A[t]
    if j != t:
        for row in A:
            row[t], row[j] = row[j], row[t]


def _bareiss_det(rows: list[list[int]]) -> int:
    A = [r[:] for r in rows]
    n = len(A)
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[-1][-1] if n else 1


def snf_minor_gcd(M, max_dim: int = 8) -> SnfResult:
    """Invariant factors as quotients of successive gcds of i x i minors."""
    A = as_int_matrix(M).tolist()
    m = len(A)
    n = len(A[0]) if m else 0
    if max(m, n) > max_dim:
        raise ValueError(f"{m}x{n} exceeds max_dim={max_dim} for the minor enumeration")
    gcds = [1]
    for k in range(1, min(m, n) + 1):
        g = 0
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                g = math.gcd(g, _bareiss_det([[A[i][j] for j in cols] for i in rows]))
                if g == 1:
                    break
            if g == 1:
                break
        if g == 0:
            break
        gcds.append(g)
    factors = tuple(gcds[i] // gcds[i - 1] for i in range(1, len(gcds)))
    return SnfResult(factors, m - len(factors))


# --------------------------------------------------------------------------
# modular helpers
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _big_primes(count: int) -> tuple[int, ...]:
    # primes just below 2^31, descending
    out, p = [], _INT64_SAFE
    while len(out) < count:
        p = sympy.prevprime(p)
        out.append(p)
    return tuple(out)


def _log2_hadamard_bound(A: np.ndarray) -> float:
    """log2 of a bound on the absolute value of every minor of A."""
    def side(X):
        total = 0.0
        for row in X:
            norm2 = sum(int(x) * int(x) for x in row)
            if norm2 > 1:
                total += 0.5 * math.log2(norm2)
        return total
    return min(side(A), side(A.T))


def _rank_mod(A: np.ndarray, ell: int) -> int:
    if ell < _INT64_SAFE:
        B = np.asarray(A % ell, dtype=np.int64) if A.dtype != object else np.array(
            [[int(x) % ell for x in row] for row in A], dtype=np.int64).reshape(A.shape)
    else:
        B = _to_object(A) % ell
    m, n = B.shape
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(B[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            B[[r, i]] = B[[i, r]]
        inv = pow(int(B[r, c]), -1, ell)
        B[r, c:] = (B[r, c:] * inv) % ell
        col = B[r + 1:, c].copy()
        if col.any():
            B[r + 1:, c:] = (B[r + 1:, c:] - np.outer(col, B[r, c:]) % ell) % ell
        r += 1
    return r


def _det_mod(A: np.ndarray, ell: int) -> int:
    B = np.array([[int(x) % ell for x in row] for row in A], dtype=np.int64).reshape(A.shape)
    n = B.shape[0]
    det = 1
    for c in range(n):
        nz = np.nonzero(B[c:, c])[0]
        if nz.size == 0:
            return 0
        i = c + int(nz[0])
        if i != c:
            B[[c, i]] = B[[i, c]]
            det = -det
        pivot = int(B[c, c])
        det = det * pivot % ell
        inv = pow(pivot, -1, ell)
        col = (B[c + 1:, c] * inv) % ell
        if col.any():
            B[c + 1:, c:] = (B[c + 1:, c:] - np.outer(col, B[c, c:]) % ell) % ell
    return det % ell


def rank(M) -> int:
    """Rank over Q, computed modulo enough primes to be exact."""
    A = as_int_matrix(M)
    m, n = A.shape
    if A.size == 0:
        return 0
    ceiling = min(m, n)
    # vanishing row (column) sums put the all-ones vector in a kernel
    if not A.sum(axis=1).any():
        ceiling = min(ceiling, n - 1)
    if not A.sum(axis=0).any():
        ceiling = min(ceiling, m - 1)
    # a nonzero r x r minor is divisible by fewer than `needed` primes > 2^30
    needed = int(_log2_hadamard_bound(A) // 30) + 1
    best = 0
    for ell in _big_primes(needed):
        best = max(best, _rank_mod(A, ell))
        if best == ceiling:
            break
    return best


def determinant(M) -> int:
    """Exact determinant by Chinese remaindering."""
    A = as_int_matrix(M)
    n, n2 = A.shape
    if n != n2:
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return 1
    bound_bits = _log2_hadamard_bound(A) + 2
    modulus, value = 1, 0
    for ell in _big_primes(int(bound_bits // 30) + 2):
        if modulus.bit_length() > bound_bits:
            break
        r = _det_mod(A, ell)
        # CRT update
        t = ((r - value) * pow(modulus, -1, ell)) % ell
        value += modulus * t
        modulus *= ell
    if value > modulus // 2:
        value -= modulus
    return value


def p_rank(M, p: int) -> int:
    """Rank of M over the field with p elements."""
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    A = as_int_matrix(M)
    if A.size == 0:
        return 0
    return _rank_mod(A, p)


# --------------------------------------------------------------------------
# local Smith normal form
# --------------------------------------------------------------------------


def _local_valuations(A: np.ndarray, p: int, K: int) -> list[int]:
    """Valuations of the pivots found by elimination over Z/p^K.

    Pivots are entries of minimal valuation (first in row-major order).  The
    returned list stops where everything left is divisible by p^K.
    """
    pK = p**K
    if pK < _INT64_SAFE:
        B = np.array([[int(x) % pK for x in row] for row in A], dtype=np.int64).reshape(A.shape) \
            if A.dtype == object else (A % pK).astype(np.int64)
    else:
        B = _to_object(A) % pK
    vals: list[int] = []
    v = 0
    while B.size:
        # valuations never decrease from one pivot to the next
        while v < K:
            mask = (B % p ** (v + 1)) != 0
            if mask.any():
                break
            v += 1
        if v >= K:
            break
        flat = int(np.argmax(mask))
        r, c = divmod(flat, B.shape[1])
        pv = p**v
        unit = int(B[r, c]) // pv
        inv = pow(unit, -1, pK)
        row = (B[r] * inv) % pK
        col = B[:, c] // pv
        B = (B - np.outer(col, row) % pK) % pK
        B = np.delete(np.delete(B, r, axis=0), c, axis=1)
        vals.append(v)
    return vals


def local_snf(M, p: int, exponent: int | None = None) -> list[int]:
    """p-adic valuations of the nonzero invariant factors of M, ascending.

    With ``exponent=K`` a single elimination over Z/p^K is run and
    ``InsufficientPrecision`` is raised if some invariant factor has
    valuation >= K.  Without it, K starts at the largest value that keeps the
    arithmetic in int64 and is doubled until every nonzero invariant factor
    is resolved; the exact rank over Q decides when that has happened.
    """
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    A = as_int_matrix(M)
    r = rank(A)
    if r == 0:
        return []
    if exponent is not None:
        if exponent < 1:
            raise ValueError("exponent must be >= 1")
        vals = _local_valuations(A, p, exponent)
        if len(vals) < r:
            raise InsufficientPrecision(
                f"modulo {p}^{exponent}: {r - len(vals)} invariant factor(s) have valuation >= {exponent}")
        return vals
    K = max(1, int(math.log(_INT64_SAFE, p)))
    while p**K >= _INT64_SAFE and K > 1:
        K -= 1
    limit = int(_log2_hadamard_bound(A) / math.log2(p)) + 1
    while True:
        vals = _local_valuations(A, p, K)
        if len(vals) == r:
            return vals
        if K > limit:  # pragma: no cover - the rank guarantees termination
            raise AssertionError("local elimination failed to resolve all pivots")
        K *= 2


# --------------------------------------------------------------------------
# critical groups
# --------------------------------------------------------------------------


def _is_eulerian_laplacian(A: np.ndarray) -> bool:
    return not A.sum(axis=1).any() and not A.sum(axis=0).any()


def critical_group(Q, primes: Iterable[int] | None = None) -> GroupStructure:
    """Torsion part of the cokernel of a graph Laplacian Q.

    Without ``primes`` the full SNF over Z is used.  With ``primes`` the
    group is assembled from ``local_snf`` at each listed prime; the caller
    asserts that no other prime divides the group order.  For Eulerian
    Laplacians that assertion is checked against the matrix-tree count
    |det Q_v|.
    """
    A = as_int_matrix(Q)
    if A.shape[0] != A.shape[1]:
        raise ValueError("Laplacian must be square")
    if A.sum(axis=1).any():
        raise ValueError("row sums of a Laplacian must vanish")
    n = A.shape[0]
    if primes is None:
        res = snf(A)
        if res.free_rank != 1:
            raise ValueError(f"cokernel has free rank {res.free_rank}, expected 1 for a connected graph")
        return GroupStructure.from_invariant_factors(res.torsion)
    r = rank(A)
    if n - r != 1:
        raise ValueError(f"cokernel has free rank {n - r}, expected 1 for a connected graph")
    eds = {}
    for p in sorted(set(int(p) for p in primes)):
        eds[p] = tuple(v for v in local_snf(A, p) if v)
    group = GroupStructure(eds)
    if _is_eulerian_laplacian(A):
        tree_count = abs(determinant(A[1:, 1:]))
        if tree_count != group.order:
            raise ValueError(
                f"group order {group.order} from primes {sorted(eds)} differs from the tree count {tree_count}")
    return group


def divisibility_product_check(A, B) -> bool:
    """s_k(A) | s_k(AB) and s_k(B) | s_k(AB) for every k (zero factors padded)."""
    A = as_int_matrix(A)
    B = as_int_matrix(B)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError("need square matrices of the same size")
    n = A.shape[0]
    AB = _to_object(A).dot(_to_object(B))

    def padded(M):
        s = list(snf(M).invariant_factors)
        return s + [0] * (n - len(s))

    sa, sb, sab = padded(A), padded(B), padded(AB)
    for k in range(n):
        for s in (sa[k], sb[k]):
            if s == 0:
                if sab[k] != 0:
                    return False
            elif sab[k] % s:
                return False
    return True
