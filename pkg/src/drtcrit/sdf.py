"""Skew difference families: validation, explicit constructions and search."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .algebra_core import AbelianGroup, FiniteField, make_field, squares

__all__ = [
    "SkewDifferenceFamily",
    "InvalidSDF",
    "SearchBudgetExceeded",
    "validate_sdf",
    "paley_set",
    "ding_yuan_set",
    "search_sdf",
    "DEFAULT_SEARCH_BUDGET",
    "sdf_to_dict",
    "sdf_from_dict",
    "dump_sdf",
    "load_sdf",
]

DEFAULT_SEARCH_BUDGET = 5_000_000
BUDGET_ENV_VAR = "DRTCRIT_SEARCH_BUDGET"


class InvalidSDF(ValueError):
    """Raised with the violated condition and a witness element or block."""

    def __init__(self, condition: str, witness, message: str):
        super().__init__(message)
        self.condition = condition
        self.witness = witness


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SkewDifferenceFamily:
    group: AbelianGroup
    blocks: tuple[frozenset[int], ...]
    uniform_difference_count: int

    @property
    def block_size(self) -> int:
        return len(self.blocks[0])

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def sorted_blocks(self) -> list[list[int]]:
        return [sorted(b) for b in self.blocks]


def _as_group(G: Union[AbelianGroup, FiniteField]) -> AbelianGroup:
    return G.additive_group if isinstance(G, FiniteField) else G


def validate_sdf(group: Union[AbelianGroup, FiniteField], blocks: Iterable[Iterable]) -> SkewDifferenceFamily:
    """Check skewness, covering and uniform difference counts.

    Raises ``InvalidSDF`` naming the first failed condition.  The difference
    count is measured, never taken from the caller.
    """
    G = _as_group(group)
    blocks = tuple(frozenset(G.to_index(x) for x in b) for b in blocks)
    if not blocks:
        raise InvalidSDF("nonempty", None, "a difference family needs at least one block")
    nonzero = frozenset(range(1, G.order))
    neg = G.neg_table
    for i, B in enumerate(blocks):
        negB = frozenset(int(neg[x]) for x in B)
        clash = B & negB
        if clash:
            x = min(clash)
            raise InvalidSDF("skew", (i, x), f"block {i} is not skew: {x} and its negative both lie in it")
        if B | negB != nonzero:
            missing = min(nonzero - (B | negB)) if nonzero - (B | negB) else 0
            raise InvalidSDF("cover", (i, missing),
                             f"block {i} together with its negative misses {missing} (or contains 0)")
    counts = np.zeros(G.order, dtype=np.int64)
    add = G.add_table
    for B in blocks:
        idx = np.fromiter(B, dtype=np.int64)
        diffs = add[idx[:, None], neg[idx][None, :]]
        counts += np.bincount(diffs.ravel(), minlength=G.order)
    target = int(counts[1]) if G.order > 1 else 0
    bad = np.nonzero(counts[1:] != target)[0]
    if bad.size:
        g = int(bad[0]) + 1
        raise InvalidSDF("uniform", g,
                         f"element {g} occurs {int(counts[g])} times as a difference, element 1 occurs {target} times")
    return SkewDifferenceFamily(G, blocks, target)


def paley_set(F: FiniteField) -> SkewDifferenceFamily:
    """The nonzero squares of GF(q), q = 3 mod 4, as a one-block family."""
    if F.q % 4 != 3:
        raise ValueError(f"the squares form a skew difference set only for q = 3 mod 4, got q = {F.q}")
    return validate_sdf(F.additive_group, [squares(F)])


def ding_yuan_set(n: int, field: FiniteField | None = None) -> SkewDifferenceFamily:
    """Image of x^10 - x^6 - x^2 over the nonzero elements of GF(3^n), n odd."""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"the Ding-Yuan set needs odd n, got {n}")
    F = field if field is not None else make_field(3, n)
    if (F.p, F.t) != (3, n):
        raise ValueError("field must be GF(3^n)")
    image = {F.eval_poly({10: 1, 6: -1, 2: -1}, x) for x in range(1, F.q)}
    return validate_sdf(F.additive_group, [image])


def _pair_representatives(G: AbelianGroup) -> list[tuple[int, int]]:
    seen, pairs = set(), []
    for g in range(1, G.order):
        if g in seen:
            continue
        h = G.neg(g)
        seen.update((g, h))
        pairs.append((g, h))
    return pairs


def search_sdf(group: Union[AbelianGroup, FiniteField], num_blocks: int,
               budget: int | None = None) -> list[SkewDifferenceFamily]:
    """All ordered families of ``num_blocks`` skew blocks with uniform differences.

    Each block takes one element from every {g, -g} pair, so skewness and
    covering hold by construction.  Families come out in lexicographic order
    of their sorted block lists.  ``budget`` bounds the number of search
    nodes (default from the environment variable DRTCRIT_SEARCH_BUDGET).
    """
    G = _as_group(group)
    if G.order % 2 == 0:
        raise ValueError("skew blocks exist only in groups of odd order")
    if num_blocks < 1:
        raise ValueError("num_blocks must be positive")
    if budget is None:
        budget = int(os.environ.get(BUDGET_ENV_VAR, DEFAULT_SEARCH_BUDGET))
    pairs = _pair_representatives(G)
    m = len(pairs)
    total_diffs = num_blocks * m * (m - 1)
    if m and total_diffs % (G.order - 1):
        return []
    target = total_diffs // (G.order - 1) if m else 0

    if 2**m > budget:
        raise SearchBudgetExceeded(f"{2**m} candidate blocks exceed the budget of {budget}")
    candidates = [frozenset(pairs[i][(mask >> i) & 1] for i in range(m)) for mask in range(2**m)]
    candidates.sort(key=sorted)

    add, neg = G.add_table, G.neg_table
    profiles = np.zeros((len(candidates), G.order), dtype=np.int64)
    for c, B in enumerate(candidates):
        idx = np.fromiter(B, dtype=np.int64, count=len(B))
        if len(idx):
            profiles[c] = np.bincount(add[idx[:, None], neg[idx][None, :]].ravel(), minlength=G.order)
    profiles[:, 0] = 0
    # a block whose own differences already exceed the target is useless
    usable = np.nonzero((profiles <= target).all(axis=1))[0]

    results: list[tuple[int, ...]] = []
    nodes = 0

    def extend(chosen: list[int], running: np.ndarray):
        nonlocal nodes
        if len(chosen) == num_blocks:
            if (running[1:] == target).all():
                results.append(tuple(chosen))
            return
        for c in usable:
            nodes += 1
            if nodes > budget:
                raise SearchBudgetExceeded(f"search exceeded the budget of {budget} nodes")
            nxt = running + profiles[c]
            if (nxt <= target).all():
                chosen.append(int(c))
                extend(chosen, nxt)
                chosen.pop()

    extend([], np.zeros(G.order, dtype=np.int64))
    return [validate_sdf(G, [candidates[c] for c in combo]) for combo in results]


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def sdf_to_dict(family: SkewDifferenceFamily, description: str | None = None) -> dict:
    G = family.group
    out = {"group": {"invariant_factors": list(G.invariant_factors)}}
    if description:
        out["group"]["description"] = description
    out["blocks"] = [[list(G.coords(x)) for x in sorted(b)] for b in family.blocks]
    out["uniform_difference_count"] = family.uniform_difference_count
    return out


def sdf_from_dict(data: dict) -> SkewDifferenceFamily:
    G = AbelianGroup(data["group"]["invariant_factors"])
    blocks = [[tuple(x) if isinstance(x, (list, tuple)) else int(x) for x in b] for b in data["blocks"]]
    fam = validate_sdf(G, blocks)
    claimed = data.get("uniform_difference_count")
    if claimed is not None and int(claimed) != fam.uniform_difference_count:
        raise InvalidSDF("uniform", None,
                         f"file claims difference count {claimed}, measured {fam.uniform_difference_count}")
    return fam


def dump_sdf(family: SkewDifferenceFamily, path, description: str | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(sdf_to_dict(family, description), fh, indent=2)
        fh.write("\n")


def load_sdf(path) -> SkewDifferenceFamily:
    with open(path) as fh:
        return sdf_from_dict(json.load(fh))
