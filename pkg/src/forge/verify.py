"""Offline certificate checker.

Everything is recomputed from the certificate alone by direct enumeration:
index sums are folded afresh, sumgraph edges are generated from explicit
chains of index sets. Nothing here calls the structure builders or the
engine, so a bug there cannot hide itself.
"""

from __future__ import annotations

import itertools

from .errors import ForgeError, InputError
from .semigroup import load_semigroup
from .structures import Coloring

SUPPORTED_VERSIONS = (1,)


class _Fail(Exception):
    def __init__(self, check, detail):
        super().__init__(detail)
        self.check = check
        self.detail = detail


def _subsets(n: int):
    """Nonempty subsets of {0..n-1} as sorted tuples."""
    for r in range(1, n + 1):
        yield from itertools.combinations(range(n), r)


def _fold(seq, H, sg):
    acc = seq[H[0]]
    for i in H[1:]:
        acc = sg.op(acc, seq[i])
        if acc is None:
            return None
    return acc


def _chains(subsets, m):
    """All m-tuples H_1 < ... < H_m from ``subsets``."""
    by_min = sorted(subsets, key=lambda H: H[0])

    def rec(after, j):
        if j == 0:
            yield ()
            return
        for H in by_min:
            if H[0] > after:
                for rest in rec(H[-1], j - 1):
                    yield (H, *rest)

    yield from rec(-1, m)


def _check_sequence(seq, m, sg, coloring, color, where, stats):
    """Properness and the color of every m-sumgraph edge of one sequence."""
    subs = list(_subsets(len(seq)))
    sums = {}
    for H in subs:
        v = _fold(seq, H, sg)
        if v is None:
            raise _Fail("defined", {"sequence": list(seq), "H": [i + 1 for i in H], "where": where})
        sums[H] = v
    for H1, H2 in itertools.product(subs, subs):
        if H1[-1] < H2[0] and sums[H1] == sums[H2]:
            raise _Fail("proper", {"sequence": list(seq), "H1": [i + 1 for i in H1],
                                   "H2": [i + 1 for i in H2], "value": sums[H1], "where": where})
    for chain in _chains(subs, m):
        edge = frozenset(sums[H] for H in chain)
        stats["edges"] += 1
        c = coloring(edge)
        if c != color:
            raise _Fail("monochromatic", {"edge": sorted(edge), "color": c, "claimed": color,
                                          "H": [[i + 1 for i in H] for H in chain], "sequence": list(seq),
                                          "where": where})


def _is_member(R: frozenset, spec: dict) -> bool:
    kind = spec.get("kind")
    if kind == "singletons":
        return len(R) == 1
    if kind == "ap":
        L = int(spec.get("length", 2))
        xs = sorted(R)
        if len(xs) != L:
            return False
        if L == 1:
            return True
        d = xs[1] - xs[0]
        return d > 0 and all(b - a == d for a, b in zip(xs, xs[1:]))
    if kind == "explicit":
        return R in {frozenset(s) for s in spec["sets"]}
    raise InputError(f"unknown family kind {kind!r}")


def _f_image(constraint, collected: set, universe: set) -> set:
    kind = constraint.get("kind")
    if kind == "above-max":
        top = max(collected) if collected else 0
        return {s for s in universe if s > top}
    if kind == "avoid":
        return universe - set(constraint.get("set", []))
    raise InputError(f"unknown constraint kind {kind!r}")


def _products(y_values, H, sgM):
    out = set()
    for r in range(1, len(H) + 1):
        for sub in itertools.combinations(H, r):
            acc = y_values[sub[0]]
            for i in sub[1:]:
                acc = sgM.op(acc, y_values[i])
                if acc is None:
                    raise _Fail("defined", {"products_over": [i + 1 for i in sub]})
            out.add(acc)
    return out


def _ordered_chains(n):
    """Sequences H_1 < ... < H_k (k >= 1) of nonempty subsets of {0..n-1}."""
    subs = list(_subsets(n))
    for k in range(1, n + 1):
        yield from _chains(subs, k)


def _verify_additive(cert, sg, coloring, stats):
    blocks = [list(b) for b in cert["blocks"]]
    N = len(blocks)
    if N != cert.get("rounds", N) or any(not b for b in blocks):
        raise _Fail("blocks", "block list is empty or does not match the number of rounds")
    mode = cert.get("mode", "fin")
    specs = cert.get("run", {}).get("family_specs")
    m, color = cert["m"], cert["color"]
    if mode == "one":
        elems = cert["elements"]
        members = cert.get("members")
        if len(elems) != N:
            raise _Fail("elements", "one element per round expected")
        for n, a in enumerate(elems):
            if a not in blocks[n] or (members and a not in members[n]):
                raise _Fail("elements", {"round": n + 1, "element": a})
            if members and specs and not _is_member(frozenset(members[n]), specs[n]):
                raise _Fail("family", {"round": n + 1, "set": members[n]})
        _check_sequence(elems, m, sg, coloring, color, "elements", stats)
        stats["sequences"] += 1
    else:
        for seq in itertools.product(*blocks):
            _check_sequence(seq, m, sg, coloring, color, "product", stats)
            stats["sequences"] += 1
    _check_bookkeeping(cert, sg, blocks)


def _check_bookkeeping(cert, sg, blocks):
    """Families, Bob's replies and the constraint, after the structure checks."""
    N = len(blocks)
    specs = cert.get("run", {}).get("family_specs")
    families = cert.get("families")
    if families is not None:
        for n, fam in enumerate(families):
            sets = [frozenset(R) for R in fam]
            for R1, R2 in itertools.combinations(sets, 2):
                if R1 & R2:
                    raise _Fail("disjoint", {"round": n + 1, "members": [sorted(R1), sorted(R2)]})
            union = frozenset().union(*sets) if sets else frozenset()
            if union != frozenset(blocks[n]):
                raise _Fail("blocks", {"round": n + 1, "detail": "block is not the union of its family"})
            if specs:
                for R in sets:
                    if not _is_member(R, specs[n]):
                        raise _Fail("family", {"round": n + 1, "set": sorted(R)})
    replies = cert.get("bob_replies")
    if replies is not None:
        for n, F in enumerate(replies):
            if not set(F) <= set(blocks[n]):
                raise _Fail("reply", {"round": n + 1, "F": F, "V": blocks[n]})
            if families is not None and any(not (set(R) & set(F)) for R in families[n]):
                raise _Fail("reply", {"round": n + 1, "detail": "family member not touched by Bob's reply"})
    constraint = cert.get("constraint")
    if constraint:
        universe = set(sg.elements)
        collected = set()
        for n in range(N - 1):
            collected |= set(blocks[n])
            allowed = _f_image(constraint, collected, universe)
            if not set(blocks[n + 1]) <= allowed:
                raise _Fail("constraint", {"round": n + 2, "outside": sorted(set(blocks[n + 1]) - allowed)})


def _verify_multiplicative(cert, sg, coloring, stats):
    sgA = sg
    sgM = load_semigroup({"naturals": {"bound": sg.bound, "op": "mul"}})
    blocks = [list(b) for b in cert["blocks"]]
    ys = list(cert["ys"])
    N = len(blocks)
    if len(ys) != N or any(not b for b in blocks):
        raise _Fail("blocks", "need one nonempty block and one y per round")
    for n, (b, y) in enumerate(zip(blocks, ys)):
        if y not in b:
            raise _Fail("elements", {"round": n + 1, "y": y})
    m, color = cert["m"], cert["color"]
    products = set()
    for chain in _ordered_chains(N):
        fb = []
        for H in chain:
            if len(H) == 1:
                fb.append(blocks[H[0]])
            else:
                P = _products(ys, H, sgM)
                products |= P
                fb.append(sorted(P))
        for seq in itertools.product(*fb):
            _check_sequence(seq, m, sgA, coloring, color, {"chain": [[i + 1 for i in H] for H in chain]}, stats)
            stats["sequences"] += 1
    stats["products"] = sorted(products)


def verify_certificate(cert: dict) -> dict:
    """PASS/FAIL report with the first counterexample found."""
    stats = {"sequences": 0, "edges": 0}
    report = {"status": "PASS", "kind": cert.get("kind"), "counterexample": None}
    try:
        if cert.get("version") not in SUPPORTED_VERSIONS:
            raise _Fail("version", f"unsupported certificate version {cert.get('version')!r}")
        sg = load_semigroup(cert["semigroup"])
        coloring = Coloring.from_json(cert["coloring"], m=cert["m"], k=cert["k"])
        if coloring.m != cert["m"]:
            raise _Fail("coloring", "coloring arity differs from m")
        if cert["color"] != "ANY" and not 1 <= cert["color"] <= coloring.k:
            raise _Fail("coloring", "claimed color out of range")
        if cert.get("kind") == "multiplicative":
            _verify_multiplicative(cert, sg, coloring, stats)
        else:
            _verify_additive(cert, sg, coloring, stats)
    except _Fail as f:
        report["status"] = "FAIL"
        report["counterexample"] = {"check": f.check, "detail": f.detail}
    except (KeyError, TypeError, ValueError, ForgeError) as exc:
        report["status"] = "FAIL"
        report["counterexample"] = {"check": "format", "detail": f"{type(exc).__name__}: {exc}"}
    report.update(stats)
    if report["status"] == "PASS" and stats["edges"] == 0:
        report["note"] = "no edges: the structure is vacuously monochromatic"
    return report
