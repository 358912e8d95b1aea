"""Colorings and the monochromatic target structures: sumgraphs, partite
sumgraphs and graphs, (m,p,c)-sets, arithmetic progressions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InputError, UndefinedSum

ANY = "ANY"  # color of the empty structure (vacuously monochromatic)

_M64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    # splitmix64 finalizer
    x = (x + 0x9E3779B97F4A7C15) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def _mix64_np(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64) + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


class Coloring:
    """A k-coloring of m-element sets, colors ``1..k``.

    Named generators (``parity``, ``mod:q``, ``random:SEED``, ``constant:c``)
    are total on any universe. Explicit colorings carry a table and fail
    loudly on an edge they do not cover.
    """

    def __init__(self, m: int, k: int, spec: str | None = None, table: dict | None = None,
                 func: Callable | None = None):
        if m < 1 or k < 1:
            raise InputError("coloring needs m >= 1 and k >= 1")
        self.m = m
        self.k = k
        self.spec = spec
        self.table = table
        self.func = func
        self._kind, self._arg = self._parse(spec) if spec else (("table", None) if table is not None else ("func", None))
        if self._kind == "mod" and self._arg != k:
            raise InputError("mod:q coloring uses exactly q colors")
        if self._kind == "parity" and k != 2:
            raise InputError("parity coloring has 2 colors")
        if self._kind == "constant" and not 1 <= self._arg <= k:
            raise InputError("constant color out of range")

    @staticmethod
    def _parse(spec: str):
        name, _, arg = spec.partition(":")
        if name == "parity":
            return "parity", None
        if name in ("mod", "random", "constant"):
            try:
                return name, int(arg)
            except ValueError:
                raise InputError(f"bad coloring spec {spec!r}") from None
        raise InputError(f"unknown coloring generator {spec!r}")

    @classmethod
    def named(cls, spec: str, m: int, k: int | None = None) -> "Coloring":
        name, _, arg = spec.partition(":")
        if k is None:
            k = {"parity": 2, "mod": int(arg or 0), "constant": int(arg or 1)}.get(name)
            if not k:
                raise InputError(f"number of colors required for {spec!r}")
        return cls(m, k, spec=spec)

    @classmethod
    def from_edges(cls, m: int, k: int, edges: Iterable) -> "Coloring":
        table = {}
        for edge, color in edges:
            e = frozenset(edge)
            if len(e) != m:
                raise InputError(f"edge {sorted(e)} does not have {m} elements")
            if not 1 <= color <= k:
                raise InputError(f"color {color} outside 1..{k}")
            table[e] = color
        return cls(m, k, table=table)

    @classmethod
    def from_json(cls, obj, m: int | None = None, k: int | None = None) -> "Coloring":
        if isinstance(obj, str):
            if m is None:
                raise InputError("arity needed for a named coloring")
            return cls.named(obj, m, k)
        if "generator" in obj:
            return cls.named(obj["generator"], int(obj["m"]), obj.get("k"))
        return cls.from_edges(int(obj["m"]), int(obj["k"]), obj["edges"])

    def descriptor(self) -> dict:
        if self.spec:
            return {"generator": self.spec, "m": self.m, "k": self.k}
        if self.table is not None:
            edges = sorted(([sorted(e), c] for e, c in self.table.items()))
            return {"m": self.m, "k": self.k, "edges": edges}
        raise InputError("callable colorings are not serialisable")

    def __call__(self, edge) -> int:
        e = tuple(sorted(edge))
        if len(set(e)) != self.m:
            raise InputError(f"edge {list(e)} is not an {self.m}-set")
        kind, arg = self._kind, self._arg
        if kind == "parity":
            return sum(e) % 2 + 1
        if kind == "mod":
            return sum(e) % arg + 1
        if kind == "constant":
            return arg
        if kind == "random":
            acc = _mix64(arg)
            for x in e:
                acc = (acc + _mix64(x)) & _M64
            return _mix64(acc) % self.k + 1
        if kind == "table":
            try:
                return self.table[frozenset(e)]
            except KeyError:
                raise InputError(f"coloring undefined on {list(e)}") from None
        return self.func(frozenset(e))

    def extension_colors(self, base: Sequence[int], candidates: np.ndarray) -> np.ndarray:
        """Colors of ``base ∪ {s}`` for each s in ``candidates`` (all outside base)."""
        if len(base) + 1 != self.m:
            raise InputError("base size must be m-1")
        cand = np.asarray(candidates, dtype=np.int64)
        kind, arg = self._kind, self._arg
        if kind == "parity":
            return (sum(base) + cand) % 2 + 1
        if kind == "mod":
            return (sum(base) + cand) % arg + 1
        if kind == "constant":
            return np.full(cand.shape, arg, dtype=np.int64)
        if kind == "random":
            acc = _mix64(arg)
            for x in base:
                acc = (acc + _mix64(x)) & _M64
            with np.errstate(over="ignore"):
                h = _mix64_np(np.uint64(acc) + _mix64_np(cand))
            return (h % np.uint64(self.k)).astype(np.int64) + 1
        return np.array([self(tuple(base) + (int(s),)) for s in cand], dtype=np.int64)


@dataclass(frozen=True)
class MPCParams:
    m: int
    p: int
    c: int
    x: tuple[int, ...]

    def __post_init__(self):
        if self.m < 1 or self.p < 1 or self.c < 1:
            raise InputError("m, p, c must be positive")
        if len(self.x) != self.m or any(v < 1 for v in self.x):
            raise InputError("x must be m positive integers")


# -- sumgraphs ----------------------------------------------------------------

def _suffix_sums(seq, sg):
    """``ends[s][t]``: values a_H with H ⊆ {s..t} (0-based) and max H = t."""
    n = len(seq)
    ends = [[set() for _ in range(n)] for _ in range(n)]
    for s in range(n):
        running = set()  # all a_H with H ⊆ {s..t-1}
        for t in range(s, n):
            here = {seq[t]}
            for v in running:
                w = sg.op(v, seq[t])
                if w is None:
                    raise UndefinedSum(f"sum overflow extending {v} by {seq[t]}")
                here.add(w)
            ends[s][t] = here
            running |= here
    return ends


def _require_proper(seq, sg):
    from .semigroup import is_proper

    if not is_proper(list(seq), sg):
        raise InputError(f"sequence {list(seq)} is not proper")


def sumgraph(seq: Sequence[int], m: int, sg) -> set[frozenset]:
    """``SG^m`` of a finite proper sequence, built block by block from the left."""
    _require_proper(seq, sg)
    n = len(seq)
    if m > n:
        return set()
    ends = _suffix_sums(seq, sg)

    def rec(start, j):
        if j == 0:
            return {frozenset()}
        out = set()
        for t in range(start, n - j + 1):
            tails = rec(t + 1, j - 1)
            for x in ends[start][t]:
                for tail in tails:
                    out.add(tail | {x})
        return out

    return rec(0, m)


def _block_sumsets(blocks, sg):
    """Map each nonempty index tuple H to the sumset ``Σ_{i∈H} V_i`` (left to right)."""
    n = len(blocks)
    sums = {}
    for r in range(1, n + 1):
        for H in itertools.combinations(range(n), r):
            if r == 1:
                sums[H] = set(blocks[H[0]])
                continue
            acc = set()
            for v in sums[H[:-1]]:
                for b in blocks[H[-1]]:
                    w = sg.op(v, b)
                    if w is None:
                        raise UndefinedSum(f"block sum overflow on indices {[i + 1 for i in H]}",
                                           index_set=tuple(i + 1 for i in H))
                    acc.add(w)
            sums[H] = acc
    return sums


def check_partite_proper(blocks, sg, sums=None):
    """Return None when all sequences in the product are proper, else a witness
    ``(H1, H2, value)`` with 1-based index sets."""
    sums = sums if sums is not None else _block_sumsets(blocks, sg)
    for H1, s1 in sums.items():
        for H2, s2 in sums.items():
            if H1[-1] < H2[0]:
                common = s1 & s2
                if common:
                    return ([i + 1 for i in H1], [i + 1 for i in H2], min(common))
    return None


def _partite_levels(blocks, m, sg):
    sums = _block_sumsets(blocks, sg)
    bad = check_partite_proper(blocks, sg, sums)
    if bad:
        raise InputError(f"improper product sequence: a_H1 = a_H2 = {bad[2]} for H1={bad[0]}, H2={bad[1]}")
    n = len(blocks)
    # by_start[s]: list of (H, sumset) with min H == s
    by_start = [[(H, s) for H, s in sums.items() if H[0] == st] for st in range(n)]
    memo = {}

    def rec(start, j):
        if j == 0:
            return {frozenset()}
        key = (start, j)
        if key in memo:
            return memo[key]
        out = set()
        for st in range(start, n):
            for H, values in by_start[st]:
                tails = rec(H[-1] + 1, j - 1)
                if not tails:
                    continue
                for x in values:
                    for tail in tails:
                        out.add(tail | {x})
        memo[key] = out
        return out

    return rec


def partite_sumgraph(blocks: Sequence[Iterable[int]], m: int, sg) -> set[frozenset]:
    """``SG^m[F_1..F_n]``: union of the m-sumgraphs of every choice sequence."""
    blocks = [sorted(set(b)) for b in blocks]
    if any(not b for b in blocks):
        raise InputError("blocks must be nonempty")
    return _partite_levels(blocks, m, sg)(0, m)


def sumgraph_upto(blocks: Sequence[Iterable[int]], m: int, sg, strict: bool = False) -> set[frozenset]:
    """``SG^{<=m}`` (or ``SG^{<m}`` with ``strict``) of finite blocks."""
    blocks = [sorted(set(b)) for b in blocks]
    if any(not b for b in blocks):
        raise InputError("blocks must be nonempty")
    rec = _partite_levels(blocks, m, sg)
    top = m - 1 if strict else m
    out = set()
    for i in range(1, top + 1):
        out |= rec(0, i)
    return out


def partite_graph(blocks: Sequence[Iterable[int]], m: int) -> set[frozenset]:
    blocks = [frozenset(b) for b in blocks]
    for i, j in itertools.combinations(range(len(blocks)), 2):
        if blocks[i] & blocks[j]:
            raise InputError(f"blocks {i + 1} and {j + 1} are not disjoint")
    out = set()
    for idx in itertools.combinations(range(len(blocks)), m):
        for choice in itertools.product(*(blocks[i] for i in idx)):
            out.add(frozenset(choice))
    return out


def mpc_set(params: MPCParams) -> tuple[set[int], bool]:
    """Row sums ``c*x_i + Σ_{j>i} λ_j x_j`` with ``|λ_j| < p``; ``valid`` iff all positive."""
    m, p, c, x = params.m, params.p, params.c, params.x
    lam = range(-(p - 1), p)
    sums = set()
    for i in range(m):
        tail = x[i + 1:]
        for coeffs in itertools.product(lam, repeat=len(tail)):
            sums.add(c * x[i] + sum(l * v for l, v in zip(coeffs, tail)))
    return sums, all(s >= 1 for s in sums)


def arithmetic_progression(a: int, d: int, length: int) -> set[int]:
    if a < 1 or d < 1 or length < 1:
        raise InputError("start, step and length must be positive")
    return {a + i * d for i in range(length)}


def is_monochromatic(coloring: Coloring, edges: Iterable[frozenset]):
    """Common color of all edges, None if two colors appear, ANY if there are no edges."""
    color = ANY
    for e in edges:
        if len(e) != coloring.m:
            raise InputError(f"edge {sorted(e)} has arity {len(e)}, coloring has {coloring.m}")
        c = coloring(e)
        if color is ANY:
            color = c
        elif c != color:
            return None
    return color
