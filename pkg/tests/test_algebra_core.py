import cmath
import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from drtcrit.algebra_core import (
    CONWAY_POLYNOMIALS,
    AbelianGroup,
    Character,
    CyclotomicInt,
    FiniteField,
    character_sum,
    character_value,
    load_modulus_table,
    make_cyclic,
    make_field,
    squares,
)


# --- groups ---------------------------------------------------------------


def test_make_cyclic_small():
    G = make_cyclic(3)
    assert list(G.elements()) == [0, 1, 2]
    assert G.add(1, 2) == 0
    assert make_cyclic(13).order == 13


def test_make_cyclic_rejects_trivial():
    with pytest.raises(ValueError):
        make_cyclic(1)


@pytest.mark.parametrize("factors", [(3,), (5,), (3, 3), (2, 4), (3, 5, 3)])
def test_group_axioms_exhaustive(factors):
    G = AbelianGroup(factors)
    assert G.order == len(set(G.elements())) == math.prod(factors)
    for x in G.elements():
        assert G.add(0, x) == x
        assert G.add(x, G.neg(x)) == 0
    for x, y, z in itertools.product(G.elements(), repeat=3):
        assert G.add(G.add(x, y), z) == G.add(x, G.add(y, z))
    for x, y in itertools.product(G.elements(), repeat=2):
        assert G.add(x, y) == G.add(y, x)


def test_group_elements_and_coords():
    G = AbelianGroup((3, 3))
    a, b = G.element((1, 2)), G.element((2, 2))
    assert (a + b).coordinates == (0, 1)
    assert (-a).coordinates == (2, 1)
    assert G.index(G.coords(7)) == 7
    assert G.to_index((1, 2)) == G.to_index(a)


# --- finite fields ----------------------------------------------------------


def test_gf7_generator_is_3():
    F = make_field(7)
    assert F.generator == 3
    # order of 3 by enumeration
    assert [pow(3, e, 7) for e in range(1, 7)].index(1) == 5


def test_gf9_has_nine_elements():
    F = make_field(3, 2)
    assert F.q == 9 and len(list(F.elements())) == 9
    assert F.additive_group.invariant_factors == (3, 3)


def test_make_field_rejects_composite():
    with pytest.raises(ValueError):
        make_field(4)


def test_reducible_modulus_rejected():
    with pytest.raises(ValueError):
        make_field(3, 2, modulus=(1, 2, 1))  # (x + 1)^2
    with pytest.raises(ValueError):
        make_field(2, 2, modulus=(1, 0, 1))  # x^2 + 1 = (x + 1)^2


@pytest.mark.parametrize("pt", sorted(CONWAY_POLYNOMIALS))
def test_conway_table_entries_primitive(pt):
    p, t = pt
    F = make_field(p, t)
    q = F.q
    powers = {F.pow(F.generator, e) for e in range(q - 1)}
    assert powers == set(range(1, q))
    assert F.multiplicative_order(F.generator) == q - 1


@pytest.mark.parametrize("p,t", [(3, 3), (5, 2), (2, 3), (3, 5)])
def test_field_axioms_sampled(p, t):
    F = make_field(p, t)
    xs = list(range(F.q))[:40]
    for x, y in itertools.product(xs, repeat=2):
        assert F.mul(x, y) == F.mul(y, x)
        if x:
            assert F.mul(x, F.inv(x)) == 1
        for z in xs[:5]:
            assert F.mul(x, F.add(y, z)) == F.add(F.mul(x, y), F.mul(x, z))


def test_modulus_table_file(tmp_path):
    path = tmp_path / "mod.txt"
    path.write_text("# p t c0 .. ct\n3 2 2 2 1\n")
    table = load_modulus_table(path)
    assert table[(3, 2)] == (2, 2, 1)
    F = make_field(3, 2, table=table)
    assert F.modulus == (2, 2, 1)


def test_squares_small_fields():
    assert squares(make_field(7)) == {1, 2, 4}
    assert squares(make_field(11)) == {1, 3, 4, 5, 9}
    assert squares(make_field(3)) == {1}


@pytest.mark.parametrize("p,t", [(3, 1), (7, 1), (11, 1), (3, 3), (19, 1), (23, 1), (7, 3)])
def test_squares_skew_for_3_mod_4(p, t):
    F = make_field(p, t)
    H = squares(F)
    negH = {F.neg(x) for x in H}
    assert not H & negH
    assert H | negH == set(range(1, F.q))


# --- cyclotomic integers ------------------------------------------------------


def _cyc(m):
    deg = len(CyclotomicInt.root(m, 0).coefficients)
    return st.lists(st.integers(-5, 5), min_size=deg, max_size=deg).map(lambda c: CyclotomicInt(m, c))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([3, 4, 6, 8, 10, 26]).flatmap(lambda m: st.tuples(_cyc(m), _cyc(m), _cyc(m))))
def test_cyclotomic_ring_axioms(abc):
    a, b, c = abc
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a + b - b == a
    assert abs((a * b).to_complex() - a.to_complex() * b.to_complex()) < 1e-9


def test_cyclotomic_roots():
    for m in (3, 5, 6, 26):
        z = CyclotomicInt.root(m, 1)
        assert abs(abs(z.to_complex()) - 1) < 1e-12
        prod = CyclotomicInt.from_int(m, 1)
        for _ in range(m):
            prod = prod * z
        assert prod == 1
        assert z.conjugate() * z == 1
    assert CyclotomicInt.root(6, 3) == -1


# --- characters ---------------------------------------------------------------


def test_teichmuller_at_zero():
    F = make_field(7)
    assert character_value(Character(F, 0), 0) == 1
    for a in (1, 2, 3, 6, 12):
        assert character_value(Character(F, a), 0) == 0


def test_character_multiplicative_and_additive():
    F = make_field(3, 3)
    T = Character(F, 1)
    for x, y in itertools.product(range(1, 27), repeat=2):
        assert character_value(T, F.mul(x, y)) == character_value(T, x) * character_value(T, y)
    assert character_value(T, 1) == 1
    G = AbelianGroup((3, 3))
    chi = Character(G, (1, 2))
    for x, y in itertools.product(G.elements(), repeat=2):
        assert character_value(chi, G.add(x, y)) == character_value(chi, x) * character_value(chi, y)
    assert character_value(chi, 0) == 1


def test_teichmuller_sends_generator_to_primitive_root():
    F = make_field(11)
    v = character_value(Character(F, 1), F.generator).to_complex()
    assert abs(v - cmath.exp(2j * cmath.pi / 10)) < 1e-12


def test_character_sums():
    G = make_cyclic(13)
    for a in range(1, 13):
        chi = Character(G, a)
        assert character_sum(chi, G.elements()) == 0
    assert character_sum(Character(G, 0), G.elements()) == 13
    F = make_field(3, 2)
    A = squares(make_field(7))
    G7 = make_cyclic(7)
    negA = {G7.neg(x) for x in A}
    for a in range(1, 7):
        chi = Character(G7, a)
        assert character_sum(chi, A) + character_sum(chi, negA) == -1
    chi = Character(F.additive_group, (1, 0))
    assert character_sum(chi, F.elements()) == 0
