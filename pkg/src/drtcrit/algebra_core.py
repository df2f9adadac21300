"""Finite abelian groups, finite fields, characters and cyclotomic integers.

Group and field elements are handled internally as integer indices.  An
element of ``Z/n_1 x ... x Z/n_r`` with coordinates ``(c_1, ..., c_r)`` has
index ``c_1 + n_1*c_2 + n_1*n_2*c_3 + ...``; a field element of GF(p^t) is
the integer whose base-p digits are its polynomial coefficients (constant
term first).  With these encodings the additive group of GF(p^t) is exactly
``AbelianGroup((p,) * t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import sympy
from sympy import GF, Poly, symbols

__all__ = [
    "AbelianGroup",
    "GroupElement",
    "FiniteField",
    "CyclotomicInt",
    "Character",
    "CONWAY_POLYNOMIALS",
    "make_cyclic",
    "make_field",
    "load_modulus_table",
    "squares",
    "character_value",
    "character_sum",
]


# --------------------------------------------------------------------------
# abelian groups
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupElement:
    group: "AbelianGroup"
    coordinates: tuple[int, ...]

    def __post_init__(self):
        reduced = tuple(c % n for c, n in zip(self.coordinates, self.group.invariant_factors))
        if len(reduced) != len(self.group.invariant_factors):
            raise ValueError("coordinate count does not match the group")
        object.__setattr__(self, "coordinates", reduced)

    @property
    def index(self) -> int:
        return self.group.index(self.coordinates)

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.group, tuple(a + b for a, b in zip(self.coordinates, other.coordinates)))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, tuple(-a for a in self.coordinates))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def __repr__(self):
        return f"GroupElement{self.coordinates}"


class AbelianGroup:
    """Direct product of cyclic groups ``Z/n`` for ``n`` in ``invariant_factors``."""

    def __init__(self, invariant_factors: Sequence[int]):
        factors = tuple(int(n) for n in invariant_factors)
        if not factors or any(n < 2 for n in factors):
            raise ValueError(f"invariant factors must all be >= 2, got {factors}")
        self.invariant_factors = factors
        self.order = math.prod(factors)

    def __eq__(self, other):
        return isinstance(other, AbelianGroup) and other.invariant_factors == self.invariant_factors

    def __hash__(self):
        return hash(("AbelianGroup", self.invariant_factors))

    def __repr__(self):
        return f"AbelianGroup({list(self.invariant_factors)})"

    def __len__(self):
        return self.order

    @property
    def identity(self) -> int:
        return 0

    @property
    def is_cyclic(self) -> bool:
        return len(self.invariant_factors) == 1

    @cached_property
    def exponent(self) -> int:
        return math.lcm(*self.invariant_factors)

    def coords(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.order:
            raise ValueError(f"{index} is not an element index of {self}")
        out = []
        for n in self.invariant_factors:
            index, c = divmod(index, n)
            out.append(c)
        return tuple(out)

    def index(self, coords: Sequence[int]) -> int:
        if len(coords) != len(self.invariant_factors):
            raise ValueError(f"expected {len(self.invariant_factors)} coordinates, got {tuple(coords)}")
        idx, scale = 0, 1
        for c, n in zip(coords, self.invariant_factors):
            idx += (int(c) % n) * scale
            scale *= n
        return idx

    def element(self, x) -> GroupElement:
        return GroupElement(self, self.coords(self.to_index(x)))

    def to_index(self, x) -> int:
        """Normalise an element given as index, coordinates or GroupElement."""
        if isinstance(x, GroupElement):
            if x.group != self:
                raise ValueError("element belongs to a different group")
            return x.index
        if isinstance(x, (tuple, list)):
            return self.index(x)
        x = int(x)
        if self.is_cyclic:
            return x % self.order
        if not 0 <= x < self.order:
            raise ValueError(f"{x} is not an element index of {self}")
        return x

    def elements(self) -> range:
        return range(self.order)

    @cached_property
    def _coord_array(self) -> np.ndarray:
        return np.array([self.coords(i) for i in range(self.order)], dtype=np.int64)

    @cached_property
    def add_table(self) -> np.ndarray:
        c = self._coord_array
        summed = (c[:, None, :] + c[None, :, :]) % np.array(self.invariant_factors)
        scales = np.cumprod((1,) + self.invariant_factors[:-1])
        table = (summed * scales).sum(axis=2)
        table.setflags(write=False)
        return table

    @cached_property
    def neg_table(self) -> np.ndarray:
        c = (-self._coord_array) % np.array(self.invariant_factors)
        scales = np.cumprod((1,) + self.invariant_factors[:-1])
        table = (c * scales).sum(axis=1)
        table.setflags(write=False)
        return table

    def add(self, x: int, y: int) -> int:
        return int(self.add_table[x, y])

    def neg(self, x: int) -> int:
        return int(self.neg_table[x])

    def sub(self, x: int, y: int) -> int:
        return int(self.add_table[x, self.neg_table[y]])

    def describe(self) -> str:
        return " x ".join(f"Z/{n}" for n in self.invariant_factors)


def make_cyclic(n: int) -> AbelianGroup:
    if n < 2:
        raise ValueError(f"cyclic group order must be >= 2, got {n}")
    return AbelianGroup((n,))


# --------------------------------------------------------------------------
# finite fields
# --------------------------------------------------------------------------

# Conway polynomials, coefficients from the constant term up.  Degree-1
# entries are derived on the fly from the least primitive root.
CONWAY_POLYNOMIALS: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1),
    (3, 2): (2, 2, 1),
    (3, 3): (1, 2, 0, 1),
    (3, 4): (2, 0, 0, 2, 1),
    (3, 5): (1, 2, 0, 0, 0, 1),
    (3, 7): (1, 0, 2, 0, 0, 0, 0, 1),
    (5, 2): (2, 4, 1),
    (5, 3): (3, 3, 0, 1),
    (7, 2): (3, 6, 1),
    (7, 3): (4, 0, 6, 1),
    (11, 2): (2, 7, 1),
    (11, 3): (9, 2, 0, 1),
    (13, 2): (2, 12, 1),
    (19, 2): (2, 18, 1),
    (23, 2): (5, 21, 1),
}

_X = symbols("x")


def _poly(coeffs: Sequence[int], p: int) -> Poly:
    return Poly(list(reversed([int(c) % p for c in coeffs])), _X, domain=GF(p))


def load_modulus_table(path: Union[str, Path]) -> dict[tuple[int, int], tuple[int, ...]]:
    """Read a modulus table.

    One polynomial per line: ``p t c_0 c_1 ... c_t`` (coefficients from the
    constant term up, so ``c_t`` is normally 1).  Blank lines and text after
    ``#`` are ignored.
    """
    table = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        nums = [int(tok) for tok in line.split()]
        if len(nums) < 3:
            raise ValueError(f"{path}:{lineno}: expected 'p t c_0 ... c_t'")
        p, t, coeffs = nums[0], nums[1], tuple(nums[2:])
        if len(coeffs) != t + 1:
            raise ValueError(f"{path}:{lineno}: degree {t} needs {t + 1} coefficients, got {len(coeffs)}")
        table[(p, t)] = coeffs
    return table


def _first_primitive_polynomial(p: int, t: int) -> tuple[int, ...]:
    # lexicographically smallest monic primitive polynomial; used only when
    # the table has no entry
    for n in range(p**t):
        low = [(n // p**i) % p for i in range(t)]
        if low[0] == 0:
            continue
        coeffs = tuple(low) + (1,)
        if not _poly(coeffs, p).is_irreducible:
            continue
        field = FiniteField(p, t, coeffs, check=False)
        if field.multiplicative_order(p if t > 1 else field._root_of_modulus()) == p**t - 1:
            return coeffs
    raise AssertionError("no primitive polynomial found")  # pragma: no cover


class FiniteField:
    """GF(p^t) with elements encoded as integers ``0 .. q-1``."""

    def __init__(self, p: int, t: int, modulus: Sequence[int], check: bool = True):
        self.p = int(p)
        self.t = int(t)
        self.q = self.p**self.t
        mod = tuple(int(c) % self.p for c in modulus)
        if len(mod) != self.t + 1 or mod[-1] != 1:
            raise ValueError(f"modulus must be monic of degree {t}: {tuple(modulus)}")
        self.modulus = mod
        if check:
            if not sympy.isprime(self.p):
                raise ValueError(f"{p} is not prime")
            if not _poly(mod, self.p).is_irreducible:
                raise ValueError(f"modulus {mod} is reducible over GF({p})")
        self.generator = self._choose_generator() if check else None

    def __repr__(self):
        return f"FiniteField({self.p}, {self.t}, modulus={list(self.modulus)})"

    def __eq__(self, other):
        return isinstance(other, FiniteField) and (other.p, other.t, other.modulus) == (self.p, self.t, self.modulus)

    def __hash__(self):
        return hash(("FiniteField", self.p, self.t, self.modulus))

    def __len__(self):
        return self.q

    # -- representation helpers
    def digits(self, x: int) -> list[int]:
        return [(x // self.p**i) % self.p for i in range(self.t)]

    def from_digits(self, digits: Sequence[int]) -> int:
        return sum((int(d) % self.p) * self.p**i for i, d in enumerate(digits))

    def elements(self) -> range:
        return range(self.q)

    @cached_property
    def additive_group(self) -> AbelianGroup:
        return AbelianGroup((self.p,) * self.t)

    # -- slow arithmetic on digit vectors, used to bootstrap the tables
    def _mul_slow(self, x: int, y: int) -> int:
        a, b, p, t = self.digits(x), self.digits(y), self.p, self.t
        prod = [0] * (2 * t - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    prod[i + j] = (prod[i + j] + ai * bj) % p
        for d in range(2 * t - 2, t - 1, -1):
            c = prod[d]
            if c:
                for i in range(t + 1):
                    prod[d - t + i] = (prod[d - t + i] - c * self.modulus[i]) % p
        return self.from_digits(prod[:t])

    def _root_of_modulus(self) -> int:
        # the class of x modulo the modulus; for t = 1 that is -c_0
        return self.p if self.t > 1 else (-self.modulus[0]) % self.p

    def multiplicative_order(self, x: int) -> int:
        if x == 0:
            raise ValueError("0 has no multiplicative order")
        n, order = self.q - 1, self.q - 1
        for r in sympy.factorint(n):
            while order % r == 0 and self._pow_slow(x, order // r) == 1:
                order //= r
        return order

    def _pow_slow(self, x: int, e: int) -> int:
        result, base = 1, x
        while e:
            if e & 1:
                result = self._mul_slow(result, base)
            base = self._mul_slow(base, base)
            e >>= 1
        return result

    def _choose_generator(self) -> int:
        root = self._root_of_modulus()
        if root and self.multiplicative_order(root) == self.q - 1:
            return root
        for x in range(1, self.q):
            if self.multiplicative_order(x) == self.q - 1:
                return x
        raise AssertionError("field has no generator")  # pragma: no cover

    # -- table driven arithmetic
    @cached_property
    def exp_table(self) -> np.ndarray:
        table = np.empty(self.q - 1, dtype=np.int64)
        x = 1
        for i in range(self.q - 1):
            table[i] = x
            x = self._mul_slow(x, self.generator)
        if x != 1 or len(set(table.tolist())) != self.q - 1:
            raise ValueError("generator does not have order q - 1")
        table.setflags(write=False)
        return table

    @cached_property
    def log_table(self) -> np.ndarray:
        table = np.full(self.q, -1, dtype=np.int64)
        table[self.exp_table] = np.arange(self.q - 1)
        table.setflags(write=False)
        return table

    def add(self, x: int, y: int) -> int:
        return int(self.additive_group.add_table[x, y])

    def neg(self, x: int) -> int:
        return int(self.additive_group.neg_table[x])

    def sub(self, x: int, y: int) -> int:
        return self.add(x, self.neg(y))

    def mul(self, x: int, y: int) -> int:
        if x == 0 or y == 0:
            return 0
        return int(self.exp_table[(self.log_table[x] + self.log_table[y]) % (self.q - 1)])

    def pow(self, x: int, e: int) -> int:
        if x == 0:
            if e <= 0:
                raise ZeroDivisionError("0 to a non-positive power")
            return 0
        return int(self.exp_table[(int(self.log_table[x]) * e) % (self.q - 1)])

    def inv(self, x: int) -> int:
        return self.pow(x, -1)

    def log(self, x: int) -> int:
        if x == 0:
            raise ValueError("log of 0")
        return int(self.log_table[x])

    def eval_poly(self, coeffs: dict[int, int], x: int) -> int:
        """Evaluate ``sum c * x^e`` for an exponent -> integer coefficient map."""
        acc = 0
        for e, c in coeffs.items():
            term = self.pow(x, e) if e else 1
            acc = self.add(acc, self.mul(int(c) % self.p, term))
        return acc


def make_field(p: int, t: int = 1, modulus: Sequence[int] | None = None,
               table: dict[tuple[int, int], Sequence[int]] | None = None) -> FiniteField:
    """GF(p^t).  Without an explicit modulus, ``table`` and then the built-in
    Conway table are consulted; missing entries fall back to the first
    primitive polynomial in lexicographic order."""
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    if t < 1:
        raise ValueError(f"extension degree must be >= 1, got {t}")
    if modulus is None:
        if table and (p, t) in table:
            modulus = table[(p, t)]
        elif t == 1:
            modulus = ((-sympy.primitive_root(p)) % p, 1)
        elif (p, t) in CONWAY_POLYNOMIALS:
            modulus = CONWAY_POLYNOMIALS[(p, t)]
        else:
            modulus = _first_primitive_polynomial(p, t)
    return FiniteField(p, t, modulus)


def squares(F: FiniteField) -> frozenset[int]:
    """The nonzero squares of F."""
    return frozenset(F.mul(x, x) for x in range(1, F.q))


# --------------------------------------------------------------------------
# cyclotomic integers
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _cyclotomic_poly(m: int) -> tuple[int, ...]:
    # coefficients from the constant term up
    num = [-1] + [0] * (m - 1) + [1]
    for d in sympy.divisors(m)[:-1]:
        num = _exact_div(num, list(_cyclotomic_poly(d)))
    return tuple(num)


def _exact_div(num: list[int], den: list[int]) -> list[int]:
    num = num[:]
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1] // den[-1]
        out[i] = c
        for j, dj in enumerate(den):
            num[i + j] -= c * dj
    assert not any(num), "inexact polynomial division"
    return out


@lru_cache(maxsize=None)
def _power_basis(m: int) -> np.ndarray:
    """Row j holds the reduced coordinates of zeta_m^j, 0 <= j < m."""
    phi = _cyclotomic_poly(m)
    deg = len(phi) - 1
    rows = np.zeros((m, deg), dtype=object)
    cur = [0] * deg
    cur[0] = 1
    for j in range(m):
        rows[j] = cur
        # multiply by x and reduce
        top = cur[-1]
        cur = [0] + cur[:-1]
        if top:
            cur = [c - top * phi[i] for i, c in enumerate(cur)]
    rows.setflags(write=False)
    return rows


class CyclotomicInt:
    """Element of Z[zeta_m] in the power basis modulo the m-th cyclotomic polynomial."""

    __slots__ = ("m", "coefficients")

    def __init__(self, m: int, coefficients: Iterable[int]):
        self.m = int(m)
        coeffs = tuple(int(c) for c in coefficients)
        deg = len(_cyclotomic_poly(self.m)) - 1
        if len(coeffs) != deg:
            raise ValueError(f"need {deg} coefficients for conductor {m}, got {len(coeffs)}")
        self.coefficients = coeffs

    @classmethod
    def from_int(cls, m: int, n: int) -> "CyclotomicInt":
        deg = len(_cyclotomic_poly(m)) - 1
        return cls(m, (n,) + (0,) * (deg - 1))

    @classmethod
    def root(cls, m: int, j: int = 1) -> "CyclotomicInt":
        return cls(m, _power_basis(m)[j % m])

    @classmethod
    def from_exponent_counts(cls, m: int, counts: Sequence[int]) -> "CyclotomicInt":
        """``sum_j counts[j] * zeta_m^j``."""
        counts = np.asarray(counts, dtype=object)
        if len(counts) != m:
            raise ValueError("need one count per exponent 0..m-1")
        return cls(m, counts.dot(_power_basis(m)))

    def _coerce(self, other) -> "CyclotomicInt":
        if isinstance(other, CyclotomicInt):
            if other.m != self.m:
                raise ValueError(f"conductor mismatch: {self.m} vs {other.m}")
            return other
        if isinstance(other, (int, np.integer)):
            return CyclotomicInt.from_int(self.m, int(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CyclotomicInt(self.m, (a + b for a, b in zip(self.coefficients, other.coefficients)))

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicInt(self.m, (-a for a in self.coefficients))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        counts = [0] * self.m
        for i, a in enumerate(self.coefficients):
            if a:
                for j, b in enumerate(other.coefficients):
                    if b:
                        counts[(i + j) % self.m] += a * b
        return CyclotomicInt.from_exponent_counts(self.m, counts)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self.coefficients == other.coefficients

    def __hash__(self):
        return hash((self.m, self.coefficients))

    def __repr__(self):
        terms = [f"{c}*z^{i}" if i else str(c) for i, c in enumerate(self.coefficients) if c]
        return f"CyclotomicInt(m={self.m}: {' + '.join(terms) or '0'})"

    def conjugate(self) -> "CyclotomicInt":
        counts = [0] * self.m
        for i, a in enumerate(self.coefficients):
            counts[(-i) % self.m] += a
        return CyclotomicInt.from_exponent_counts(self.m, counts)

    def is_rational(self) -> bool:
        return not any(self.coefficients[1:])

    def to_complex(self) -> complex:
        zeta = complex(math.cos(2 * math.pi / self.m), math.sin(2 * math.pi / self.m))
        return complex(sum(c * zeta**i for i, c in enumerate(self.coefficients)))


# --------------------------------------------------------------------------
# characters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Character:
    """A character given as a power of a fixed generator character.

    On a ``FiniteField`` the domain is the multiplicative group extended to 0
    (``index`` is the raw exponent ``a`` of ``T^a``; ``T^0`` is 1 at 0, every
    other power, including multiples of q-1, is 0 at 0).  On an
    ``AbelianGroup`` the character is additive and ``index`` holds one
    exponent per cyclic factor (a plain int is accepted for cyclic groups).
    """

    domain: Union[FiniteField, AbelianGroup]
    index: Union[int, tuple[int, ...]]

    def __post_init__(self):
        if isinstance(self.domain, AbelianGroup):
            idx = self.index
            if isinstance(idx, (int, np.integer)):
                if not self.domain.is_cyclic:
                    raise ValueError("non-cyclic groups need one exponent per factor")
                idx = (int(idx),)
            idx = tuple(int(a) % n for a, n in zip(idx, self.domain.invariant_factors))
            if len(idx) != len(self.domain.invariant_factors):
                raise ValueError("wrong number of character exponents")
            object.__setattr__(self, "index", idx)
        elif not isinstance(self.index, (int, np.integer)):
            raise TypeError("field characters are indexed by a single integer")

    @property
    def conductor(self) -> int:
        if isinstance(self.domain, FiniteField):
            return self.domain.q - 1
        return self.domain.exponent

    @property
    def is_trivial(self) -> bool:
        if isinstance(self.domain, FiniteField):
            return self.index % (self.domain.q - 1) == 0
        return not any(self.index)

    def inverse(self) -> "Character":
        if isinstance(self.domain, FiniteField):
            return Character(self.domain, -self.index)
        return Character(self.domain, tuple(-a for a in self.index))

    def exponent_of(self, x) -> int | None:
        """``j`` with chi(x) = zeta^j, or None where chi(x) = 0."""
        dom = self.domain
        if isinstance(dom, FiniteField):
            x = int(x)
            if not 0 <= x < dom.q:
                raise ValueError(f"{x} is not an element of {dom}")
            if x == 0:
                return 0 if self.index == 0 else None
            return (self.index * dom.log(x)) % (dom.q - 1)
        coords = dom.coords(dom.to_index(x))
        e = dom.exponent
        return sum(a * c * (e // n) for a, c, n in zip(self.index, coords, dom.invariant_factors)) % e

    def exponent_table(self) -> np.ndarray:
        """Exponents for every element index (-1 where the value is 0)."""
        out = np.empty(len(self.domain), dtype=np.int64)
        for x in range(len(self.domain)):
            j = self.exponent_of(x)
            out[x] = -1 if j is None else j
        return out


def character_value(chi: Character, x) -> CyclotomicInt:
    j = chi.exponent_of(x)
    m = chi.conductor
    if j is None:
        return CyclotomicInt.from_int(m, 0)
    return CyclotomicInt.root(m, j)


def character_sum(chi: Character, X: Iterable) -> CyclotomicInt:
    """chi(X), the sum of chi over the subset X."""
    m = chi.conductor
    counts = [0] * m
    for x in X:
        j = chi.exponent_of(x)
        if j is not None:
            counts[j] += 1
    return CyclotomicInt.from_exponent_counts(m, counts)
