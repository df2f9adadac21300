import itertools

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from drtcrit.algebra_core import make_cyclic, make_field
from drtcrit.exact_linalg import GroupStructure, critical_group, p_rank, snf, valuation
from drtcrit.sdf import search_sdf
from drtcrit.theory import (
    BlockIdentityFailure,
    carry_count,
    character_block_check,
    counting_profile,
    drt_group_order,
    e_formula,
    e_top,
    jacobi_sum,
    predict_for,
    predict_k1,
    predict_paley,
    predict_sz,
    predict_w,
    verify_prediction,
    verify_stickelberger,
)
from drtcrit.tournaments import build_sz, build_w, dy_tournament, laplacian, paley_tournament

FIELD_ORDERS = [(p, t) for p in sympy.primerange(3, 520) for t in (1, 3, 5, 7)
                if p**t % 4 == 3 and p**t <= 2200]


def simulated_carries(i, p, t):
    """Add i and (q-1)/2 digit by digit in base p, carries wrapping from the top digit to the bottom."""
    q = p**t
    a = [(i // p**j) % p for j in range(t)]
    b = [(p - 1) // 2] * t
    carry = [0] * t
    while True:
        new = [int(a[j] + b[j] + carry[j - 1] >= p) for j in range(t)]
        if new == carry:
            return sum(carry)
        carry = new


# --- predictions ---------------------------------------------------------------


def test_predict_k1_examples():
    for lam, group, k2 in [(1, {2: (1, 1, 1)}, 49), (2, {3: (1,) * 5}, 11**4), (6, {7: (1,) * 13}, 27**12)]:
        pred = predict_k1(lam)
        assert pred.structure == GroupStructure(group)
        assert pred.complement_order == k2


def test_predict_sz_examples():
    assert predict_sz(2).structure == GroupStructure.from_components([(3, 5), (11, 4)])
    assert predict_sz(6).structure == GroupStructure({7: (1,) * 13, 3: (3,) * 12})
    assert predict_sz(1).structure == GroupStructure.from_components([(2, 3), (7, 2)])
    assert predict_sz(6).p_ranks == {3: 14, 7: 13}
    assert predict_sz(2).p_ranks == {3: 5, 11: 6}


def test_predict_w_examples():
    pred = predict_w(4)
    assert pred.structure == GroupStructure.from_components([(10, 19), (39, 18)])
    assert pred.structure.order == 10**19 * 39**18 == 39**18 * 10**19
    assert pred.p_ranks == {2: 19, 5: 19, 3: 20, 13: 20}
    assert pred.describe() == "(ℤ/10)¹⁹ ⊕ (ℤ/39)¹⁸"


@pytest.mark.parametrize("lam", range(1, 12))
def test_prediction_orders(lam):
    assert predict_sz(lam).structure.order == drt_group_order(lam)
    assert predict_w(lam).structure.order == drt_group_order(2 * lam + 1)
    ranks = predict_sz(lam).p_ranks
    for p in sympy.primefactors(lam + 1):
        assert ranks[p] == 2 * lam + 1
    for p in sympy.primefactors(4 * lam + 3):
        assert ranks[p] == 2 * lam + 2
    wr = predict_w(lam).p_ranks
    for p in sympy.primefactors(2 * lam + 2):
        assert wr[p] == 4 * lam + 3
    for p in sympy.primefactors(8 * lam + 7):
        assert wr[p] == 4 * lam + 4


def test_predict_paley_examples():
    assert predict_paley(7, 1).structure == GroupStructure.from_components([(2, 3), (7, 2)])
    assert predict_paley(7, 1).p_ranks[7] == 4
    p27 = predict_paley(3, 3)
    assert p27.structure == GroupStructure.from_components([(7, 13), (3, 6), (9, 6), (27, 6)])
    assert p27.p_ranks[3] == 8
    assert predict_paley(3, 5).p_ranks[3] == 32
    with pytest.raises(ValueError):
        predict_paley(5, 1)


def test_prediction_json_shares_group_schema():
    pred = predict_paley(7, 1)
    computed = critical_group(laplacian(paley_tournament(7)))
    assert pred.to_dict()["structure"] == computed.to_dict()


# --- carries and the counting profile -------------------------------------------


def test_carry_count_examples():
    assert carry_count(4, 7, 1) == 1
    assert carry_count(1, 7, 1) == 0
    with pytest.raises(ValueError):
        carry_count(3, 7, 1)
    with pytest.raises(ValueError):
        carry_count(0, 7, 1)
    with pytest.raises(ValueError):
        carry_count(6, 7, 1)


@pytest.mark.parametrize("p,t", [(3, 1), (7, 1), (11, 1), (3, 3), (7, 3), (3, 5), (11, 3)])
def test_carry_count_matches_digit_simulation(p, t):
    q = p**t
    for i in range(1, q - 1):
        if i != (q - 1) // 2:
            assert carry_count(i, p, t) == simulated_carries(i, p, t)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([(3, 3), (3, 5), (7, 3), (3, 7), (19, 1), (43, 1)]), st.data())
def test_carry_symmetry(pt, data):
    p, t = pt
    q = p**t
    i = data.draw(st.integers(1, q - 2).filter(lambda x: x != (q - 1) // 2))
    assert carry_count(i, p, t) + carry_count(q - 1 - i, p, t) == t


def test_counting_profile_examples():
    assert counting_profile(7, 1).counts == {0: 2, 1: 2}
    assert counting_profile(3, 3).counts == {0: 6, 1: 6, 2: 6, 3: 6}
    assert counting_profile(3, 5).counts[5] == 30 == e_top(3, 5)


@pytest.mark.parametrize("p,t", FIELD_ORDERS)
def test_profile_sums_and_symmetry(p, t):
    prof = counting_profile(p, t)
    q = p**t
    assert prof.total() == q - 3
    assert prof.weighted_total() == t * (q - 3) // 2
    for a in range(t + 1):
        assert prof.counts[a] == prof.counts[t - a]
    assert prof.counts[t] == e_top(p, t)


@pytest.mark.parametrize("p,t", [pt for pt in FIELD_ORDERS if pt[1] > 1])
def test_e_formula_matches_enumeration(p, t):
    prof = counting_profile(p, t)
    for i in range(1, t):
        assert e_formula(p, t, i) == prof.counts[i]


def test_e_formula_examples():
    assert e_formula(3, 3, 1) == 6
    assert e_formula(3, 3, 2) == 6
    assert e_formula(3, 5, 2) == counting_profile(3, 5).counts[2] == 50
    with pytest.raises(ValueError):
        e_formula(3, 3, 3)
    with pytest.raises(ValueError):
        e_formula(3, 3, 0)


# --- Jacobi sums -------------------------------------------------------------------


@pytest.mark.parametrize("p,t", [(7, 1), (11, 1), (3, 3), (19, 1)])
def test_jacobi_sums(p, t):
    F = make_field(p, t)
    q = F.q
    k = (q - 1) // 2
    assert jacobi_sum(k, k, F) == 1
    for a in range(1, q - 1):
        assert jacobi_sum(a, 0, F) == 0
        if a != k:
            assert abs(abs(jacobi_sum(a, k, F).to_complex()) ** 2 - q) < 1e-9


def test_jacobi_sum_direct_complex():
    F = make_field(11)
    z = np.exp(2j * np.pi / 10)

    def T(a, x):
        if x == 0:
            return 1 if a % 10 == 0 else 0
        return z ** (a * F.log(x))

    for a, b in itertools.product(range(10), repeat=2):
        direct = sum(T(a, x) * T(b, F.sub(1, x)) for x in range(11))
        assert abs(jacobi_sum(a, b, F).to_complex() - direct) < 1e-9


# --- Stickelberger cross-check ---------------------------------------------------------


def test_stickelberger_examples():
    rep = verify_stickelberger(7)
    assert rep.ok and rep.valuations == [0, 0, 0, 0, 1, 1]
    rep = verify_stickelberger(make_field(3, 3))
    assert rep.ok
    assert rep.valuations.count(0) == 8 and all(rep.valuations.count(a) == 6 for a in (1, 2, 3))


@pytest.mark.parametrize("q", [11, 19, 23, 31, 43])
def test_stickelberger_against_full_snf(q):
    rep = verify_stickelberger(q)
    assert rep.ok
    full = sorted(valuation(int(s), rep.p) for s in snf(laplacian(paley_tournament(q))).invariant_factors)
    assert rep.valuations == full


@pytest.mark.slow
def test_stickelberger_243():
    rep = verify_stickelberger(243)
    assert rep.ok
    assert rep.valuations.count(0) == 32
    assert sum(rep.valuations) == 600


# --- character blocks -------------------------------------------------------------------


@pytest.fixture(scope="module")
def w9():
    F = make_field(3, 2)
    return build_w(F, *search_sdf(F, 4)[0].blocks)


def test_sz_blocks_gf5():
    T = build_sz(make_field(5), [1, 2], [1, 3])
    for c in range(1, 5):
        rep = character_block_check(T, c)
        assert rep.ok
        assert abs(rep.checks["trace"]["value"] - 11) < 1e-9
        assert abs(rep.checks["det"]["value"] - 33) < 1e-9
        assert abs(rep.checks["off_diagonal_difference"]["value"] - 1) < 1e-9


def test_sz_blocks_z13():
    G = make_cyclic(13)
    for fam in search_sdf(G, 2)[:3]:
        T = build_sz(G, *fam.blocks)
        for c in range(1, 13):
            rep = character_block_check(T, c)
            assert rep.ok
            assert abs(rep.checks["det"]["value"] - 27 * 7) < 1e-9


def test_w_blocks(w9):
    G = w9.sdf.group
    for idx in itertools.product(range(3), repeat=2):
        if idx == (0, 0):
            continue
        rep = character_block_check(w9, idx)
        assert rep.ok, {k: v["residual"] for k, v in rep.checks.items()}
        B = rep.block
        assert np.abs(B @ B.conj().T - 390 * np.eye(8)).max() < 1e-9
        assert abs(np.linalg.det(B) - 39**4 * 10**4) / (39**4 * 10**4) < 1e-9
        assert abs(rep.minors["character_norm_sum"] - 10) < 1e-9


def test_w_blocks_other_families():
    F = make_field(3, 2)
    fams = search_sdf(F, 4)
    for fam in fams[::1000]:
        T = build_w(F, *fam.blocks)
        assert character_block_check(T, (1, 1)).ok


def test_w_minor_sum_is_gram_scale(w9):
    # sqrt(m1) + sqrt(m2) = k(k+1) + sum |chi(X)|^2 = (8l+7)(2l+2); substituting the Gram
    # scale for the character norm sum would give k(k+1) + 390 = 770 instead
    rep = character_block_check(w9, (1, 0))
    root_sum = np.sqrt(abs(rep.minors["m1"])) + np.sqrt(abs(rep.minors["m2"]))
    assert abs(root_sum - 390) < 1e-9
    assert rep.minors["root_sum_with_gram_scale"] == 770


def test_block_check_rejects_trivial_and_paley(w9):
    with pytest.raises(ValueError):
        character_block_check(w9, (0, 0))
    with pytest.raises(ValueError):
        character_block_check(paley_tournament(7), 1)


def test_block_failure_raises(w9, monkeypatch):
    import drtcrit.theory as theory
    monkeypatch.setattr(theory, "TOLERANCE", -1.0)
    with pytest.raises(BlockIdentityFailure):
        character_block_check(w9, (1, 0))
    assert not character_block_check(w9, (1, 0), strict=False).ok


# --- computed vs predicted ---------------------------------------------------------------


SZ_GROUPS = [make_cyclic(3), make_cyclic(5), make_field(5), make_cyclic(7), make_cyclic(13)]


@pytest.mark.parametrize("G", SZ_GROUPS, ids=lambda G: repr(G))
def test_sz_matches_prediction(G):
    fams = search_sdf(G, 2)
    assert fams
    for fam in fams[:: max(1, len(fams) // 4)]:
        T = build_sz(G, *fam.blocks)
        rep = verify_prediction(T)
        assert rep.ok
        assert critical_group(laplacian(T)) == rep.computed


@pytest.mark.parametrize("q", [7, 11, 19, 23, 27, 31, 43])
def test_paley_matches_prediction(q):
    rep = verify_prediction(paley_tournament(q))
    assert rep.ok
    assert rep.predicted.source == "paley"


def test_w_matches_prediction(w9):
    rep = verify_prediction(w9)
    assert rep.ok
    assert rep.computed == predict_w(4).structure
    Q = laplacian(w9)
    assert {p: p_rank(Q, p) for p in (2, 3, 5, 13)} == {2: 19, 3: 20, 5: 19, 13: 20}


def test_dy_27_partial_prediction():
    T = dy_tournament(3)
    pred = predict_for(T)
    assert pred.source == "drt" and pred.complement_order == 27**12
    assert verify_prediction(T).ok


def test_mismatched_prediction_detected():
    rep = verify_prediction(paley_tournament(27), predict_sz(6))
    assert not rep.ok


def test_prime_q_paley_and_sz_agree():
    # for prime q the two closed forms coincide
    for q, G in [(7, make_cyclic(3)), (11, make_cyclic(5)), (23, make_cyclic(11))]:
        lam = (q - 3) // 4
        assert predict_paley(q, 1).structure == predict_sz(lam).structure
        sz = critical_group(laplacian(build_sz(G, *search_sdf(G, 2)[0].blocks)))
        assert sz == critical_group(laplacian(paley_tournament(q)))


def test_paley27_and_sz13_differ_at_3():
    G = make_cyclic(13)
    sz = critical_group(laplacian(build_sz(G, *search_sdf(G, 2)[0].blocks)))
    p27 = critical_group(laplacian(paley_tournament(27)))
    assert sz.part(3) == GroupStructure({3: (3,) * 12})
    assert p27.part(3) == GroupStructure({3: (1,) * 6 + (2,) * 6 + (3,) * 6})
    assert sz != p27 and sz.part(7) == p27.part(7)
