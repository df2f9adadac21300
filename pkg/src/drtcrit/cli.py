"""Command line driver: ``drtcrit <command> [options]``.

Exit codes: 0 success, 1 verification mismatch, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from typing import Any, TextIO

import sympy

from .algebra_core import AbelianGroup, FiniteField, make_cyclic, make_field
from .exact_linalg import GroupStructure, critical_group
from .hadamard import HadamardError, check_hadamard_snf, drt_to_hadamard, is_hadamard, is_skew, write_sign_matrix
from .sdf import InvalidSDF, SearchBudgetExceeded, SkewDifferenceFamily, load_sdf, sdf_to_dict, search_sdf
from .theory import drt_group_order, predict_for, predict_k1, predict_paley, predict_sz, predict_w, verify_prediction
from .tournaments import (NotDRT, Tournament, build_cayley_drt, build_sz, build_w, dy_tournament, laplacian,
                          paley_tournament, tournament_to_dict, write_matrix)

COMMANDS = ("gen", "critgrp", "predict", "verify", "compare", "search-sdf", "hadamard")
FAMILIES = ("paley", "sz", "w", "cayley", "dy")
FORMATS = ("json", "table")

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID = 0, 1, 2


class InvalidJob(ValueError):
    pass


@dataclass
class JobSpec:
    command: str
    family: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    output: str = "table"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidJob(f"unknown command {self.command!r}")
        if self.output not in FORMATS:
            raise InvalidJob(f"unknown output format {self.output!r}")
        if self.command == "compare":
            for key in ("a", "b"):
                if not self.params.get(key):
                    raise InvalidJob(f"compare needs --{key}")
                parse_instance(self.params[key])
            return
        if self.command == "search-sdf":
            parse_group(self.params.get("group"))
            if int(self.params.get("blocks") or 0) < 1:
                raise InvalidJob("--blocks must be a positive integer")
            return
        if self.family not in FAMILIES:
            raise InvalidJob(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        _validate_family_params(self.command, self.family, self.params)


# --------------------------------------------------------------------------
# parameter parsing
# --------------------------------------------------------------------------


_GROUP_TOKEN = re.compile(r"^(z|gf)(\d+)$")


def parse_group(spec: str | None) -> AbelianGroup | FiniteField:
    """``z13`` -> Z/13, ``gf9`` -> GF(9), ``z3xz3`` -> Z/3 x Z/3."""
    if not spec:
        raise InvalidJob("a group is required (e.g. z13, gf9, z3xz3)")
    tokens = spec.lower().split("x")
    parsed = []
    for tok in tokens:
        m = _GROUP_TOKEN.match(tok)
        if not m:
            raise InvalidJob(f"malformed group spec {spec!r}")
        parsed.append((m.group(1), int(m.group(2))))
    if len(parsed) == 1 and parsed[0][0] == "gf":
        return _field(parsed[0][1])
    factors = []
    for kind, n in parsed:
        if kind == "gf":
            F = _field(n)
            factors.extend([F.p] * F.t)
        elif n < 2:
            raise InvalidJob(f"cyclic factor of order {n} in {spec!r}")
        else:
            factors.append(n)
    return make_cyclic(factors[0]) if len(factors) == 1 else AbelianGroup(factors)


def _field(q: int) -> FiniteField:
    f = sympy.factorint(q)
    if len(f) != 1:
        raise InvalidJob(f"{q} is not a prime power")
    (p, t), = f.items()
    return make_field(int(p), int(t))


def _group_order(G) -> int:
    return G.q if isinstance(G, FiniteField) else G.order


def _paley_q(q) -> int:
    if q is None:
        raise InvalidJob("--q is required")
    q = int(q)
    if len(sympy.factorint(q)) != 1 or q % 4 != 3:
        raise InvalidJob(f"Paley tournaments need a prime power q = 3 mod 4, got {q}")
    return q


def _dy_n(q) -> int:
    q = int(q) if q is not None else 0
    n = 0
    while q > 1 and q % 3 == 0:
        q //= 3
        n += 1
    if q != 1 or n % 2 == 0:
        raise InvalidJob("the DY family needs --q = 3^n with n odd")
    return n


def _validate_family_params(command: str, family: str, params: dict) -> None:
    if family == "paley":
        _paley_q(params.get("q"))
    elif family == "dy":
        _dy_n(params.get("q"))
    elif command == "predict":
        if family in ("sz", "w", "cayley") and params.get("lam") is None and params.get("group") is None:
            raise InvalidJob("predict needs --lam or --group")
    elif family in ("sz", "w"):
        if params.get("group") is None and params.get("lam") is None:
            raise InvalidJob(f"{family} needs --group (or --lam for a cyclic group)")
    elif family == "cayley":
        if params.get("group") is None or params.get("blocks") is None:
            raise InvalidJob("cayley needs --group and --blocks")
    if params.get("group") is not None:
        G = parse_group(params["group"])
        if _group_order(G) % 2 == 0:
            raise InvalidJob("the group must have odd order")
    if params.get("lam") is not None and int(params["lam"]) < 1:
        raise InvalidJob("--lam must be positive")
    sdf = params.get("sdf") or "auto"
    if sdf != "auto" and not sdf.startswith("file:"):
        raise InvalidJob(f"--sdf must be 'auto' or 'file:PATH', got {sdf!r}")
    if params.get("blocks") is not None:
        _parse_blocks(params["blocks"])


def _parse_blocks(text: str) -> list[list]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidJob(f"--blocks is not valid JSON: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise InvalidJob("--blocks must be a nonempty JSON list")
    # a flat list of integers is a single block; elements of product groups are coordinate lists
    if all(isinstance(x, int) for x in data):
        data = [data]
    if not all(isinstance(b, list) for b in data):
        raise InvalidJob("--blocks must be a list of blocks")
    return [[tuple(x) if isinstance(x, list) else x for x in b] for b in data]


def parse_instance(text: str) -> JobSpec:
    """``family:arg`` as used by ``compare``: paley:243, dy:243, sz:z13, w:gf9, sz:5 (a lambda)."""
    fam, _, arg = (text or "").partition(":")
    if fam not in FAMILIES or fam == "cayley" or not arg:
        raise InvalidJob(f"malformed instance {text!r}; expected paley:Q, dy:Q, sz:GROUP or w:GROUP")
    params: dict[str, Any] = {}
    if fam in ("paley", "dy"):
        if not arg.isdigit():
            raise InvalidJob(f"malformed instance {text!r}")
        params["q"] = int(arg)
    elif arg.isdigit():
        params["lam"] = int(arg)
    else:
        params["group"] = arg
    spec = JobSpec("critgrp", fam, params)
    _validate_family_params("critgrp", fam, params)
    return spec


# --------------------------------------------------------------------------
# building instances
# --------------------------------------------------------------------------


def _family_for(G, num_blocks: int, sdf: str | None) -> SkewDifferenceFamily:
    sdf = sdf or "auto"
    if sdf.startswith("file:"):
        fam = load_sdf(sdf[5:])
        if fam.num_blocks != num_blocks:
            raise InvalidJob(f"SDF file has {fam.num_blocks} blocks, {num_blocks} needed")
        return fam
    found = search_sdf(G, num_blocks)
    if not found:
        raise InvalidJob(f"no skew difference family with {num_blocks} blocks exists in {G!r}")
    return found[0]


def build_instance(family: str, params: dict) -> Tournament:
    if family == "paley":
        return paley_tournament(_paley_q(params.get("q")))
    if family == "dy":
        return dy_tournament(_dy_n(params.get("q")))
    group = params.get("group")
    if group is None:
        lam = int(params["lam"])
        group = f"z{2 * lam + 1}"
    G = parse_group(group)
    if family == "cayley":
        return build_cayley_drt(G, _parse_blocks(params["blocks"])[0])
    num_blocks = 2 if family == "sz" else 4
    if params.get("blocks") is not None:
        blocks = _parse_blocks(params["blocks"])
        if len(blocks) != num_blocks:
            raise InvalidJob(f"{family} needs {num_blocks} blocks, got {len(blocks)}")
        return (build_sz if family == "sz" else build_w)(G, *blocks)
    fam = _family_for(G, num_blocks, params.get("sdf"))
    if fam.group != (G.additive_group if isinstance(G, FiniteField) else G):
        raise InvalidJob("the SDF file lives in a different group")
    return (build_sz if family == "sz" else build_w)(fam.group, *fam.blocks)


def prediction_for(family: str, params: dict):
    if family == "paley":
        q = _paley_q(params.get("q"))
        (p, t), = sympy.factorint(q).items()
        return predict_paley(int(p), int(t))
    if family == "dy":
        q = 3 ** _dy_n(params.get("q"))
        return predict_k1((q - 3) // 4)
    if params.get("lam") is not None:
        lam = int(params["lam"])
    else:
        lam = (_group_order(parse_group(params["group"])) - 1) // 2
    if family == "sz":
        return predict_sz(lam)
    if family == "w":
        return predict_w(lam)
    return predict_k1(lam)


def _instance_group(T: Tournament) -> GroupStructure:
    _, _, lam = T.drt_params
    return critical_group(laplacian(T), sympy.primefactors(drt_group_order(lam)))


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _ed_map(g: GroupStructure) -> dict[str, dict[str, int]]:
    return {str(p): {str(e): k for e, k in g.multiplicities(p).items()} for p in g.primes}


def _emit(out: TextIO, fmt: str, data: dict, table_lines: list[str]) -> None:
    if fmt == "json":
        out.write(json.dumps(data, indent=2, ensure_ascii=False) + "\n")
    else:
        out.write("\n".join(table_lines) + "\n")


_INSTANCE_KEYS = {"paley": ("q",), "dy": ("q",), "cayley": ("group", "blocks"),
                  "sz": ("lam", "group", "blocks", "sdf"), "w": ("lam", "group", "blocks", "sdf")}


def _describe_instance(family: str, params: dict) -> str:
    keys = _INSTANCE_KEYS[family]
    if params.get("blocks") is not None:
        keys = tuple(k for k in keys if k != "sdf")
    args = ", ".join(f"{k}={params[k]}" for k in keys if params.get(k) is not None)
    return f"{family}({args})"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _cmd_gen(spec: JobSpec, out: TextIO) -> int:
    T = build_instance(spec.family, spec.params)
    if spec.output == "json":
        data = tournament_to_dict(T)
        if T.sdf is not None:
            data["sdf"] = sdf_to_dict(T.sdf)
        _emit(out, "json", data, [])
    else:
        out.write(f"# {_describe_instance(spec.family, spec.params)} parameters {T.drt_params}\n")
        write_matrix(T.M, out)
    return EXIT_OK


def _cmd_critgrp(spec: JobSpec, out: TextIO) -> int:
    T = build_instance(spec.family, spec.params)
    g = _instance_group(T)
    data = {"instance": _describe_instance(spec.family, spec.params),
            "drt_params": list(T.drt_params), **g.to_dict()}
    lines = [f"instance: {data['instance']}", f"parameters: {T.drt_params}",
             f"critical group: {g.pretty()}", f"order: {g.order}",
             f"invariant factors: {_compress(g.invariant_factors)}"]
    _emit(out, spec.output, data, lines)
    return EXIT_OK


def _compress(factors) -> str:
    runs: list[list[int]] = []
    for f in factors:
        if runs and runs[-1][0] == f:
            runs[-1][1] += 1
        else:
            runs.append([f, 1])
    return ", ".join(f"{f} x{k}" if k > 1 else str(f) for f, k in runs)


def _cmd_predict(spec: JobSpec, out: TextIO) -> int:
    pred = prediction_for(spec.family, spec.params)
    lines = [f"source: {pred.source} {pred.parameters}", f"predicted group: {pred.describe()}",
             "p-ranks: " + ", ".join(f"{p}: {r}" for p, r in sorted(pred.p_ranks.items()))]
    if pred.complement_order is not None:
        lines.append(f"complementary subgroup order: {pred.complement_order}")
    _emit(out, spec.output, pred.to_dict(), lines)
    return EXIT_OK


def _cmd_verify(spec: JobSpec, out: TextIO) -> int:
    T = build_instance(spec.family, spec.params)
    pred = predict_for(T)
    rep = verify_prediction(T, pred)
    if pred.complement_order is not None:
        verdict = "computed contains predicted" if rep.ok else "computed does not match predicted"
    else:
        verdict = "computed == predicted" if rep.ok else "computed != predicted"
    data = {
        "instance": _describe_instance(spec.family, spec.params),
        "ok": rep.ok,
        "computed": _ed_map(rep.computed),
        "predicted": _ed_map(pred.structure),
        "p_ranks": {"computed": {str(p): r for p, r in rep.computed_p_ranks.items()},
                    "predicted": {str(p): r for p, r in sorted(pred.p_ranks.items())}},
    }
    if pred.complement_order is not None:
        data["complement_order"] = pred.complement_order
    lines = [f"{verdict} {pred.describe()}" if rep.ok else verdict,
             *([f"complementary subgroup order {pred.complement_order}: {rep.ok}"]
               if pred.complement_order is not None else []),
             "p-ranks: " + ", ".join(f"{p}: {r}" for p, r in rep.computed_p_ranks.items())]
    if not rep.ok:
        lines += [f"computed:  {json.dumps(data['computed'])}", f"predicted: {json.dumps(data['predicted'])}",
                  f"computed p-ranks:  {json.dumps(data['p_ranks']['computed'])}",
                  f"predicted p-ranks: {json.dumps(data['p_ranks']['predicted'])}"]
    _emit(out, spec.output, data, lines)
    return EXIT_OK if rep.ok else EXIT_MISMATCH


def _cmd_compare(spec: JobSpec, out: TextIO) -> int:
    groups = {}
    for key in ("a", "b"):
        inst = parse_instance(spec.params[key])
        groups[key] = _instance_group(build_instance(inst.family, inst.params))
    same = groups["a"] == groups["b"]
    verdict = "critical groups agree" if same else "critical groups differ"
    diff = sorted(p for p in set(groups["a"].primes) | set(groups["b"].primes)
                  if groups["a"].part(p) != groups["b"].part(p))
    data = {"a": spec.params["a"], "b": spec.params["b"], "verdict": verdict,
            "differing_primes": diff, "a_group": _ed_map(groups["a"]), "b_group": _ed_map(groups["b"])}
    lines = [f"{spec.params['a']}: {groups['a'].pretty()}", f"{spec.params['b']}: {groups['b'].pretty()}",
             f"verdict: {verdict}" + (f" (at p = {', '.join(map(str, diff))})" if diff else "")]
    _emit(out, spec.output, data, lines)
    return EXIT_OK


def _cmd_search(spec: JobSpec, out: TextIO) -> int:
    G = parse_group(spec.params["group"])
    found = search_sdf(G, int(spec.params["blocks"]), budget=spec.params.get("budget"))
    shown = found if spec.params.get("all") else found[:1]
    data = {"group": spec.params["group"], "num_blocks": int(spec.params["blocks"]), "count": len(found),
            "families": [sdf_to_dict(f, spec.params["group"]) for f in shown]}
    lines = [f"{len(found)} skew difference families with {spec.params['blocks']} blocks in {spec.params['group']}"]
    for f in shown:
        lines.append(f"  {f.sorted_blocks()}  difference count {f.uniform_difference_count}")
    _emit(out, spec.output, data, lines)
    return EXIT_OK


def _cmd_hadamard(spec: JobSpec, out: TextIO) -> int:
    T = build_instance(spec.family, spec.params)
    H = drt_to_hadamard(T)
    chk = check_hadamard_snf(H)
    ok = is_hadamard(H) and is_skew(H) and chk.ok
    data = {"instance": _describe_instance(spec.family, spec.params), "order": int(H.shape[0]),
            "hadamard": is_hadamard(H), "skew": is_skew(H), "snf_ok": chk.ok,
            "invariant_factors": _compress(chk.computed), "expected": _compress(chk.expected)}
    lines = [f"order {H.shape[0]} skew Hadamard matrix from {data['instance']}",
             f"HH^T = nI: {data['hadamard']}, H + H^T = 2I: {data['skew']}",
             f"SNF: {data['invariant_factors']}" + ("" if chk.ok else f" (expected {data['expected']})")]
    _emit(out, spec.output, data, lines)
    if spec.params.get("write"):
        with open(spec.params["write"], "w") as fh:
            write_sign_matrix(H, fh)
    return EXIT_OK if ok else EXIT_MISMATCH


_DISPATCH = {
    "gen": _cmd_gen, "critgrp": _cmd_critgrp, "predict": _cmd_predict, "verify": _cmd_verify,
    "compare": _cmd_compare, "search-sdf": _cmd_search, "hadamard": _cmd_hadamard,
}


def run(spec: JobSpec, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        spec.validate()
        return _DISPATCH[spec.command](spec, out)
    except (InvalidJob, InvalidSDF, NotDRT, HadamardError, SearchBudgetExceeded, OSError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="drtcrit", description="Critical groups of doubly regular tournaments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def instance_args(p):
        p.add_argument("--family", required=True, help="|".join(FAMILIES))
        p.add_argument("--q", type=int, help="field order for paley and dy")
        p.add_argument("--lam", type=int, help="lambda (the group Z/(2 lambda + 1) unless --group is given)")
        p.add_argument("--group", help="z13, gf9, z3xz3, ...")
        p.add_argument("--sdf", default="auto", help="auto (first family found) or file:PATH")
        p.add_argument("--blocks", help="explicit blocks as JSON, e.g. '[[1,2],[1,3]]'")

    for name in ("gen", "critgrp", "predict", "verify", "hadamard"):
        p = sub.add_parser(name)
        instance_args(p)
        p.add_argument("--format", default="table", choices=FORMATS)
        if name == "hadamard":
            p.add_argument("--write", help="write the sign matrix to this file")
    p = sub.add_parser("compare")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--format", default="table", choices=FORMATS)
    p = sub.add_parser("search-sdf")
    p.add_argument("--group", required=True)
    p.add_argument("--blocks", type=int, required=True, help="number of blocks")
    p.add_argument("--all", action="store_true", help="list every family, not just the first")
    p.add_argument("--budget", type=int)
    p.add_argument("--format", default="table", choices=FORMATS)
    return ap


def spec_from_args(ns: argparse.Namespace) -> JobSpec:
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "family", "format")}
    return JobSpec(ns.command, getattr(ns, "family", None), params, ns.format)


def main(argv: list[str] | None = None) -> int:
    ns = _parser().parse_args(argv)
    return run(spec_from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
