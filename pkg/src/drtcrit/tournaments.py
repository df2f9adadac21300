"""Tournament constructions (SZ, W, Cayley), DRT validation, Laplacians.

Adjacency convention: ``M[u, w] = 1`` iff u -> w, so row u lists the vertices
dominated by u and the Laplacian is ``Q = kI - M`` with zero row sums.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, TextIO, Union

import numpy as np

from .algebra_core import AbelianGroup, FiniteField, make_field
from .sdf import SkewDifferenceFamily, _as_group, ding_yuan_set, paley_set, validate_sdf, InvalidSDF

__all__ = [
    "Tournament",
    "NotDRT",
    "validate_drt",
    "build_sz",
    "build_w",
    "BlockRule",
    "block_rules",
    "build_cayley_drt",
    "paley_tournament",
    "dy_tournament",
    "laplacian",
    "check_drt_identities",
    "DrtIdentityReport",
    "charpoly_check",
    "write_matrix",
    "read_matrix",
    "tournament_to_dict",
    "tournament_from_dict",
]


class NotDRT(ValueError):
    def __init__(self, condition: str, witness, message: str):
        super().__init__(message)
        self.condition = condition
        self.witness = witness


@dataclass(frozen=True, eq=False)
class Tournament:
    labels: tuple[str, ...]
    adjacency: np.ndarray
    drt_params: tuple[int, int, int] | None = None
    family: str | None = None
    sdf: SkewDifferenceFamily | None = None

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=bool)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        if adj.shape != (len(self.labels), len(self.labels)):
            raise ValueError("adjacency shape does not match the labels")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def M(self) -> np.ndarray:
        return self.adjacency.astype(np.int64)

    def out_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def arcs(self) -> list[tuple[int, int]]:
        return [(int(u), int(w)) for u, w in zip(*np.nonzero(self.adjacency))]

    def same_graph(self, other: "Tournament") -> bool:
        return self.labels == other.labels and np.array_equal(self.adjacency, other.adjacency)


def validate_drt(adjacency) -> tuple[int, int, int]:
    """Return (n, k, lambda) or raise ``NotDRT`` with a witness."""
    A = np.asarray(adjacency).astype(np.int64)
    n = A.shape[0]
    if A.shape != (n, n):
        raise NotDRT("shape", A.shape, "adjacency matrix must be square")
    loops = np.nonzero(np.diag(A))[0]
    if loops.size:
        raise NotDRT("loop", int(loops[0]), f"vertex {int(loops[0])} has a self-arc")
    pair = A + A.T
    np.fill_diagonal(pair, 1)
    bad = np.argwhere(pair != 1)
    if bad.size:
        u, w = (int(x) for x in bad[0])
        kind = "digon" if pair[u, w] == 2 else "missing arc"
        raise NotDRT("tournament", (u, w), f"{kind} between vertices {u} and {w}")
    deg = A.sum(axis=1)
    if (deg != deg[0]).any():
        v = int(np.nonzero(deg != deg[0])[0][0])
        raise NotDRT("regular", v, f"vertex {v} has out-degree {int(deg[v])}, vertex 0 has {int(deg[0])}")
    common = A @ A.T
    lam = int(common[0, 1]) if n > 1 else 0
    np.fill_diagonal(common, lam)
    bad = np.argwhere(common != lam)
    if bad.size:
        u, w = (int(x) for x in bad[0])
        raise NotDRT("doubly-regular", (u, w),
                     f"vertices {u},{w} dominate {int(common[u, w])} common vertices, expected {lam}")
    k = int(deg[0])
    if n != 4 * lam + 3 or k != 2 * lam + 1:
        raise NotDRT("parameters", (n, k, lam), f"parameters {(n, k, lam)} are not of the form (4l+3, 2l+1, l)")
    return n, k, lam


def _elem_label(G: AbelianGroup, g: int) -> str:
    c = G.coords(g)
    return str(c[0]) if len(c) == 1 else "(" + ",".join(map(str, c)) + ")"


def _family_blocks(G, blocks) -> tuple[AbelianGroup, SkewDifferenceFamily]:
    G = _as_group(G)
    return G, validate_sdf(G, blocks)


class BlockRule(NamedTuple):
    """Arcs x_g -> y_h for every z in ``offsets``, with h = g + z, or h = z - g when reflected."""

    source: str
    target: str
    offsets: tuple[int, ...]
    reflected: bool = False


def _sz_rules(G: AbelianGroup, A, B) -> list[BlockRule]:
    neg = G.neg_table
    negA = tuple(int(neg[z]) for z in sorted(A))
    return [
        BlockRule("a", "a", tuple(sorted(A))), BlockRule("a", "b", tuple(sorted(B)) + (0,)),
        BlockRule("b", "b", negA), BlockRule("b", "a", tuple(sorted(B))),
    ]


def _w_rules(G: AbelianGroup, A, B, C, D) -> list[BlockRule]:
    neg = G.neg_table

    def plain(X):
        return tuple(sorted(X))

    def minus(X):
        return tuple(int(neg[z]) for z in sorted(X))

    return [
        BlockRule("a", "a", plain(A)), BlockRule("a", "b", plain(B) + (0,)),
        BlockRule("a", "c", minus(C) + (0,), True), BlockRule("a", "d", plain(D) + (0,)),
        BlockRule("b", "a", plain(B)), BlockRule("b", "b", minus(A)),
        BlockRule("b", "c", minus(D)), BlockRule("b", "d", minus(C) + (0,), True),
        BlockRule("c", "a", plain(C), True), BlockRule("c", "b", minus(D) + (0,)),
        BlockRule("c", "c", plain(A)), BlockRule("c", "d", plain(B)),
        BlockRule("d", "a", plain(D)), BlockRule("d", "b", plain(C), True),
        BlockRule("d", "c", plain(B) + (0,)), BlockRule("d", "d", minus(A)),
    ]


def block_rules(T: "Tournament") -> tuple[list[BlockRule], dict[str, int]]:
    """Block arc rules of an SZ or W tournament and the offset of each block."""
    if T.family not in ("sz", "w") or T.sdf is None:
        raise ValueError(f"block rules exist only for SZ and W tournaments, got {T.family!r}")
    G, blocks = T.sdf.group, T.sdf.blocks
    n = G.order
    if T.family == "sz":
        return _sz_rules(G, *blocks), {"a": 1, "b": 1 + n}
    return _w_rules(G, *blocks), {x: 3 + i * n for i, x in enumerate("abcd")}


def _apply_rules(M: np.ndarray, G: AbelianGroup, rules: list[BlockRule], off: dict[str, int]) -> None:
    add, neg = G.add_table, G.neg_table
    g = np.arange(G.order)
    for r in rules:
        for z in r.offsets:
            h = add[z, neg[g]] if r.reflected else add[g, z]
            M[off[r.source] + g, off[r.target] + h] = True


def build_sz(G: Union[AbelianGroup, FiniteField], A: Iterable, B: Iterable) -> Tournament:
    """SZ(G, A, B) on 2|G| + 1 vertices ordered v0, a_g..., b_g...

    v0 -> a_x for all x;  a_g -> a_{g+z} (z in A), a_g -> b_{g+z} (z in B u {0});
    b_g -> v0, b_g -> b_{g+z} (z in -A), b_g -> a_{g+z} (z in B).
    """
    G, fam = _family_blocks(G, [A, B])
    if fam.num_blocks != 2:
        raise InvalidSDF("blocks", fam.num_blocks, "SZ needs exactly two blocks")
    n = G.order
    M = np.zeros((2 * n + 1, 2 * n + 1), dtype=bool)
    M[0, 1:1 + n] = True
    M[1 + n:, 0] = True
    _apply_rules(M, G, _sz_rules(G, *fam.blocks), {"a": 1, "b": 1 + n})
    labels = ("v0",) + tuple(f"a{_elem_label(G, g)}" for g in range(n)) + tuple(
        f"b{_elem_label(G, g)}" for g in range(n))
    params = validate_drt(M)
    lam = (n - 1) // 2
    if params != (4 * lam + 3, 2 * lam + 1, lam):
        raise NotDRT("parameters", params, f"SZ over a group of order {n} gave parameters {params}")
    return Tournament(labels, M, params, "sz", fam)


def build_w(G: Union[AbelianGroup, FiniteField], A: Iterable, B: Iterable, C: Iterable, D: Iterable) -> Tournament:
    """W(G, A, B, C, D) on 4|G| + 3 vertices ordered v1, v2, v3, a..., b..., c..., d...

    Arcs leaving each vertex (g in G, z ranging over the named set):

    * v1 -> a, c;  v2 -> a, d;  v3 -> a, b;  v1 -> v2 -> v3 -> v1
    * a_g -> a_{g+z} (A), b_{g+z} (B u 0), c_{z-g} (-C u 0), d_{g+z} (D u 0)
    * b_g -> v1, v2, a_{g+z} (B), b_{g+z} (-A), c_{g+z} (-D), d_{z-g} (-C u 0)
    * c_g -> v2, v3, a_{z-g} (C), b_{g+z} (-D u 0), c_{g+z} (A), d_{g+z} (B)
    * d_g -> v1, v3, a_{g+z} (D), b_{z-g} (C), c_{g+z} (B u 0), d_{g+z} (-A)
    """
    G, fam = _family_blocks(G, [A, B, C, D])
    if fam.num_blocks != 4:
        raise InvalidSDF("blocks", fam.num_blocks, "W needs exactly four blocks")
    n = G.order
    N = 4 * n + 3
    M = np.zeros((N, N), dtype=bool)
    off = {x: 3 + i * n for i, x in enumerate("abcd")}
    _apply_rules(M, G, _w_rules(G, *fam.blocks), off)
    v_out = {0: ("a", "c"), 1: ("a", "d"), 2: ("a", "b")}
    for v, blocks in v_out.items():
        for blk in blocks:
            M[v, off[blk]:off[blk] + n] = True
    for blk, vs in {"b": (0, 1), "c": (1, 2), "d": (0, 2)}.items():
        for v in vs:
            M[off[blk]:off[blk] + n, v] = True
    M[0, 1] = M[1, 2] = M[2, 0] = True
    labels = ("v1", "v2", "v3") + tuple(
        f"{blk}{_elem_label(G, g)}" for blk in "abcd" for g in range(n))
    params = validate_drt(M)
    lam = (n - 1) // 2
    if params != (8 * lam + 7, 4 * lam + 3, 2 * lam + 1):
        raise NotDRT("parameters", params, f"W over a group of order {n} gave parameters {params}")
    return Tournament(labels, M, params, "w", fam)


def build_cayley_drt(G: Union[AbelianGroup, FiniteField], S: Iterable, family: str = "cayley") -> Tournament:
    """Cayley tournament with arcs [g] -> [h] for h - g in S.

    ``S`` must be skew and cover the nonzero elements.  ``drt_params`` is set
    when the result is doubly regular and left as None otherwise.
    """
    G = _as_group(G)
    S = frozenset(G.to_index(x) for x in S)
    try:
        fam = validate_sdf(G, [S])
    except InvalidSDF as exc:
        if exc.condition != "uniform":
            raise
        fam = None
    n = G.order
    add = G.add_table
    M = np.zeros((n, n), dtype=bool)
    idx = np.fromiter(S, dtype=np.int64, count=len(S))
    for g in range(n):
        M[g, add[g, idx]] = True
    labels = tuple(f"[{_elem_label(G, g)}]" for g in range(n))
    try:
        params = validate_drt(M)
    except NotDRT:
        params = None
    return Tournament(labels, M, params, family, fam)


def paley_tournament(q: int | FiniteField) -> Tournament:
    F = q if isinstance(q, FiniteField) else _field_of_order(q)
    return build_cayley_drt(F.additive_group, paley_set(F).blocks[0], family="paley")


def dy_tournament(n: int) -> Tournament:
    """DRT(3^n, DY(1))."""
    return build_cayley_drt(make_field(3, n).additive_group, ding_yuan_set(n).blocks[0], family="dy")


def _field_of_order(q: int) -> FiniteField:
    import sympy
    f = sympy.factorint(q)
    if len(f) != 1:
        raise ValueError(f"{q} is not a prime power")
    (p, t), = f.items()
    return make_field(p, t)


def laplacian(T: Tournament) -> np.ndarray:
    """Q = Delta - M (equal to kI - M on a regular tournament)."""
    M = T.M
    return np.diag(M.sum(axis=1)) - M


# --------------------------------------------------------------------------
# identities
# --------------------------------------------------------------------------


@dataclass
class DrtIdentityReport:
    checks: dict[str, bool]
    first_failure: tuple | None = None

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def __bool__(self):
        return self.ok


def check_drt_identities(T: Tournament) -> DrtIdentityReport:
    """Exact check of the matrix identities satisfied by a DRT's M and Q.

    Requires ``T.drt_params``.  Checks M + M^T = J - I, MM^T = (l+1)I + lJ,
    Q + Q^T = nI - J, QQ^T = n(l+1)I - (l+1)J and M^2 + M + (l+1)I = (l+1)J.
    """
    if T.drt_params is None:
        raise ValueError("tournament has no DRT parameters")
    n, k, lam = T.drt_params
    M = T.M
    I = np.eye(n, dtype=np.int64)
    J = np.ones((n, n), dtype=np.int64)
    Q = k * I - M
    identities = [
        ("M+M^T=J-I", M + M.T, J - I),
        ("MM^T=(l+1)I+lJ", M @ M.T, (lam + 1) * I + lam * J),
        ("Q+Q^T=nI-J", Q + Q.T, n * I - J),
        ("QQ^T=n(l+1)I-(l+1)J", Q @ Q.T, n * (lam + 1) * I - (lam + 1) * J),
        ("M^2+M+(l+1)I=(l+1)J", M @ M + M + (lam + 1) * I, (lam + 1) * J),
    ]
    checks, first = {}, None
    for name, got, want in identities:
        diff = np.argwhere(got != want)
        checks[name] = diff.size == 0
        if diff.size and first is None:
            i, j = (int(x) for x in diff[0])
            first = (name, (i, j), int(got[i, j]), int(want[i, j]))
    return DrtIdentityReport(checks, first)


def charpoly_check(T: Tournament, max_n: int = 30) -> bool:
    """Compare det(xI - M) with (x - k)(x^2 + x + l + 1)^(2l+1)."""
    import sympy
    if T.drt_params is None:
        raise ValueError("tournament has no DRT parameters")
    n, k, lam = T.drt_params
    if n > max_n:
        raise ValueError(f"characteristic polynomial limited to n <= {max_n}")
    x = sympy.symbols("x")
    got = sympy.Matrix(T.M.tolist()).charpoly(x).as_expr()
    want = sympy.expand((x - k) * (x**2 + x + lam + 1) ** (2 * lam + 1))
    return sympy.expand(got - want) == 0


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------


def write_matrix(M, fh: TextIO) -> None:
    """``rows cols`` on the first line, then one line of integers per row."""
    A = np.asarray(M)
    fh.write(f"{A.shape[0]} {A.shape[1]}\n")
    for row in A.tolist():
        fh.write(" ".join(str(int(x)) for x in row) + "\n")


def read_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix file")
    rows, cols = (int(x) for x in lines[0].split())
    body = [[int(x) for x in ln.split()] for ln in lines[1:]]
    if len(body) != rows or any(len(r) != cols for r in body):
        raise ValueError(f"matrix body does not match the declared shape {rows}x{cols}")
    values = [x for r in body for x in r]
    dtype = np.int64 if all(abs(x) < 2**62 for x in values) else object
    return np.array(body, dtype=dtype).reshape(rows, cols)


def tournament_to_dict(T: Tournament) -> dict:
    return {
        "vertex_labels": list(T.labels),
        "arcs": [list(a) for a in T.arcs()],
        "drt_params": list(T.drt_params) if T.drt_params else None,
        "family": T.family,
    }


def tournament_from_dict(data: dict) -> Tournament:
    labels = tuple(data["vertex_labels"])
    M = np.zeros((len(labels), len(labels)), dtype=bool)
    for u, w in data["arcs"]:
        M[u, w] = True
    try:
        params = validate_drt(M)
    except NotDRT:
        params = None
    claimed = data.get("drt_params")
    if claimed is not None and tuple(claimed) != params:
        raise NotDRT("parameters", params, f"file claims DRT parameters {claimed}, measured {params}")
    return Tournament(labels, M, params, data.get("family"))


def dumps_tournament(T: Tournament) -> str:
    return json.dumps(tournament_to_dict(T))
