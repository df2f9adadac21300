import itertools

import pytest

from drtcrit.algebra_core import AbelianGroup, make_cyclic, make_field
from drtcrit.sdf import (
    InvalidSDF,
    SearchBudgetExceeded,
    ding_yuan_set,
    dump_sdf,
    load_sdf,
    paley_set,
    search_sdf,
    sdf_from_dict,
    sdf_to_dict,
    validate_sdf,
)


def brute_difference_counts(G, blocks):
    # every ordered pair inside every block, counted directly
    counts = {g: 0 for g in range(1, G.order)}
    for B in blocks:
        for x, y in itertools.product(B, repeat=2):
            if x != y:
                counts[G.sub(x, y)] += 1
    return counts


def test_validate_examples():
    fam = validate_sdf(make_cyclic(3), [{1}, {1}])
    assert fam.uniform_difference_count == 0
    fam = validate_sdf(make_field(5).additive_group, [{1, 2}, {1, 3}])
    assert fam.uniform_difference_count == 1
    with pytest.raises(InvalidSDF) as exc:
        validate_sdf(make_cyclic(3), [{1, 2}])
    assert exc.value.condition == "skew"


def test_validate_reports_cover_and_uniform():
    G = make_cyclic(7)
    with pytest.raises(InvalidSDF) as exc:
        validate_sdf(G, [{1, 2}])
    assert exc.value.condition == "cover"
    with pytest.raises(InvalidSDF) as exc:
        validate_sdf(G, [{1, 2, 3}])
    assert exc.value.condition == "uniform"
    with pytest.raises(InvalidSDF) as exc:
        validate_sdf(G, [{0, 1, 2, 4}])
    assert exc.value.condition in ("cover", "skew")


def test_paley_sets():
    fam = paley_set(make_field(7))
    assert fam.sorted_blocks() == [[1, 2, 4]] and fam.uniform_difference_count == 1
    fam = paley_set(make_field(11))
    assert fam.sorted_blocks() == [[1, 3, 4, 5, 9]] and fam.uniform_difference_count == 2
    with pytest.raises(ValueError):
        paley_set(make_field(5))


@pytest.mark.parametrize("p,t", [(3, 1), (7, 1), (11, 1), (19, 1), (3, 3), (23, 1), (43, 1)])
def test_paley_difference_count_measured(p, t):
    F = make_field(p, t)
    fam = paley_set(F)
    counts = brute_difference_counts(F.additive_group, fam.blocks)
    assert set(counts.values()) == {fam.uniform_difference_count}
    assert fam.uniform_difference_count == (F.q - 3) // 4


def test_ding_yuan():
    assert ding_yuan_set(1).sorted_blocks() == [[2]]
    fam = ding_yuan_set(3)
    assert fam.block_size == 13
    with pytest.raises(ValueError):
        ding_yuan_set(2)


def test_ding_yuan_243_is_skew_difference_set():
    fam = ding_yuan_set(5)
    assert fam.block_size == 121 and fam.uniform_difference_count == 60


def test_search_examples():
    z3 = search_sdf(make_cyclic(3), 2)
    assert [f.sorted_blocks() for f in z3] == [[[1], [1]], [[1], [2]], [[2], [1]], [[2], [2]]]
    gf5 = search_sdf(make_field(5), 2)
    assert [[1, 2], [1, 3]] in [f.sorted_blocks() for f in gf5]
    gf9 = search_sdf(make_field(3, 2), 4)
    assert len(gf9) == 6144
    assert gf9[0].sorted_blocks() == [[1, 3, 4, 5], [1, 3, 4, 7], [1, 3, 5, 8], [1, 4, 5, 6]]
    assert {f.uniform_difference_count for f in gf9} == {6}


def test_search_exhaustive_against_brute_force():
    # all ordered pairs of skew blocks in Z/7 and GF(5), checked directly
    for G in (make_cyclic(7), make_field(5).additive_group):
        pairs = [(g, G.neg(g)) for g in range(1, G.order) if g < G.neg(g)]
        blocks = [frozenset(c) for c in itertools.product(*pairs)]
        brute = []
        for A, B in itertools.product(blocks, repeat=2):
            if len(set(brute_difference_counts(G, [A, B]).values())) == 1:
                brute.append(sorted([sorted(A), sorted(B)]))
        found = [sorted(f.sorted_blocks()) for f in search_sdf(G, 2)]
        assert sorted(found) == sorted(brute)


def test_search_is_deterministic_and_valid():
    G = make_cyclic(13)
    a = [f.sorted_blocks() for f in search_sdf(G, 2)]
    b = [f.sorted_blocks() for f in search_sdf(G, 2)]
    assert a == b and a == sorted(a)
    assert a[0] == [[1, 2, 3, 5, 6, 9], [1, 3, 7, 8, 9, 11]]
    for blocks in a:
        validate_sdf(G, blocks)


def test_search_budget():
    with pytest.raises(SearchBudgetExceeded):
        search_sdf(make_field(3, 2), 4, budget=100)
    with pytest.raises(SearchBudgetExceeded):
        search_sdf(make_cyclic(13), 2, budget=1000)


def test_search_budget_env(monkeypatch):
    monkeypatch.setenv("DRTCRIT_SEARCH_BUDGET", "10")
    with pytest.raises(SearchBudgetExceeded):
        search_sdf(make_field(3, 2), 4)


def test_serialization_roundtrip(tmp_path):
    fam = search_sdf(AbelianGroup((3, 3)), 4)[0]
    d = sdf_to_dict(fam, "z3xz3")
    assert d["group"] == {"invariant_factors": [3, 3], "description": "z3xz3"}
    back = sdf_from_dict(d)
    assert back.blocks == fam.blocks
    path = tmp_path / "fam.json"
    dump_sdf(fam, path)
    assert load_sdf(path).blocks == fam.blocks
    d["uniform_difference_count"] = 5
    with pytest.raises(InvalidSDF):
        sdf_from_dict(d)
