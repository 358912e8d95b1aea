"""Exhaustive witness search over {1..N}.

A witness is a small parameter tuple (a pair, an AP, a sequence, a block
sequence, an x vector) together with the edges it forces to share a color.
For a fixed coloring we scan witnesses in lexicographic order. With
``all_colorings`` we look for the least N0 such that every k-coloring of
{1..N0} contains a witness, by a depth-first search for colorings that avoid
every witness; colors are interchangeable, so a color may only be used once
all smaller colors have appeared.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

from .errors import GuardRailExceeded, InputError, UndefinedSum
from .semigroup import BoundedNaturals, is_proper
from .structures import ANY, Coloring, MPCParams, mpc_set, partite_sumgraph, sumgraph

KINDS = ("schur", "vdw", "milliken-taylor", "partite-sumgraph", "mpc")

DEFAULT_MAX_SPACE = 1 << 40
DEFAULT_MAX_NODES = 5_000_000


@dataclass(frozen=True)
class SearchParams:
    kind: str
    m: int = 1
    length: int | None = None  # AP length, sequence length or number of blocks
    block: int = 2  # AP length of each block for partite-sumgraph
    p: int = 2
    c: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown search kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.m < 1 or self.block < 1 or self.p < 1 or self.c < 1:
            raise InputError("m, block, p and c must be positive")
        if self.length is not None and self.length < 1:
            raise InputError("length must be positive")

    @property
    def arity(self) -> int:
        """Size of the sets being colored."""
        return self.m if self.kind in ("milliken-taylor", "partite-sumgraph") else 1

    @property
    def size(self) -> int:
        if self.length is not None:
            return self.length
        return {"schur": 2, "vdw": 3, "mpc": self.m}.get(self.kind, self.m + 1)


@dataclass
class SearchResult:
    kind: str
    status: str  # witness | none | forced | unforced
    bound: int
    colors: int
    witness: dict | None = None
    threshold: int | None = None
    extremal: list | None = None  # an avoiding coloring of {1..threshold-1}
    nodes: int = 0
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "status": self.status, "bound": self.bound, "colors": self.colors,
                "witness": self.witness, "threshold": self.threshold, "extremal": self.extremal,
                "nodes": self.nodes, "params": self.params}


def _singletons(values):
    return {frozenset([v]) for v in values}


def witnesses(params: SearchParams, N: int) -> Iterator[tuple[dict, set[frozenset]]]:
    """All witnesses inside {1..N} in lexicographic order, with their edges."""
    sg = BoundedNaturals(N)
    L = params.size
    kind = params.kind
    if kind == "schur":
        # a1 < a2 with a1, a2, a1+a2 monochromatic (a length-2 FS witness)
        for a1 in range(1, N + 1):
            for a2 in range(a1 + 1, N - a1 + 1):
                yield {"a": [a1, a2]}, _singletons((a1, a2, a1 + a2))
    elif kind == "vdw":
        for a in range(1, N + 1):
            for d in range(1, (N - a) // max(L - 1, 1) + 1 if L > 1 else 2):
                yield {"start": a, "step": d, "length": L}, _singletons(a + i * d for i in range(L))
    elif kind == "milliken-taylor":
        for seq in _sequences(L, N):
            if is_proper(list(seq), sg):
                edges = sumgraph(seq, params.m, sg)
                if edges:
                    yield {"sequence": list(seq)}, edges
    elif kind == "partite-sumgraph":
        r = params.block
        aps = [(a, d) for a in range(1, N + 1) for d in (range(1, (N - a) // (r - 1) + 1) if r > 1 else [1])]
        for choice in itertools.product(aps, repeat=L):
            blocks = [[a + i * d for i in range(r)] for a, d in choice]
            if sum(b[-1] for b in blocks) > N:
                continue
            try:
                edges = partite_sumgraph(blocks, params.m, sg)
            except (InputError, UndefinedSum):
                continue
            if edges:
                yield {"blocks": blocks}, edges
    elif kind == "mpc":
        for x in itertools.product(range(1, N + 1), repeat=params.m):
            sums, valid = mpc_set(MPCParams(params.m, params.p, params.c, tuple(x)))
            if valid and max(sums) <= N:
                yield {"x": list(x), "set": sorted(sums)}, _singletons(sums)


def _sequences(L, N):
    # all length-L sequences of positive integers with total at most N, lexicographic
    if L == 0:
        yield ()
        return
    for a in range(1, N + 1):
        if a + (L - 1) > N:
            break
        for rest in _sequences(L - 1, N - a):
            yield (a, *rest)


def find_witness(params: SearchParams, N: int, coloring: Coloring) -> SearchResult:
    """Lexicographically least witness whose edges all share one color."""
    if coloring.m != params.arity:
        raise InputError(f"{params.kind} needs a coloring of {params.arity}-sets, got m={coloring.m}")
    nodes = 0
    for desc, edges in witnesses(params, N):
        nodes += 1
        colors = {coloring(e) for e in edges}
        if len(colors) == 1:
            return SearchResult(params.kind, "witness", N, coloring.k, witness={**desc, "color": colors.pop()},
                                nodes=nodes, params=_pjson(params))
    return SearchResult(params.kind, "none", N, coloring.k, nodes=nodes, params=_pjson(params))


def _pjson(params: SearchParams) -> dict:
    return {"m": params.m, "length": params.size, "block": params.block, "p": params.p, "c": params.c}


# -- all colorings -------------------------------------------------------------

def _vertices(N: int, arity: int) -> list[tuple[int, ...]]:
    # colored objects ordered by their largest element, so {1..n} is a prefix
    out = []
    for n in range(1, N + 1):
        out.extend(c + (n,) for c in itertools.combinations(range(1, n), arity - 1))
    return out


@dataclass
class _Problem:
    N: int
    k: int
    vertices: list
    ends_at: list  # per vertex index: hyperedges (tuples of vertex indices) whose last vertex it is
    prefix_end: list  # prefix_end[n] = number of vertices inside {1..n}


def _build_problem(params: SearchParams, N: int, k: int) -> _Problem:
    verts = _vertices(N, params.arity)
    index = {frozenset(v): i for i, v in enumerate(verts)}
    ends_at = [[] for _ in verts]
    seen = set()
    for _, edges in witnesses(params, N):
        h = tuple(sorted({index[e] for e in edges}))
        if h in seen:
            continue
        seen.add(h)
        ends_at[h[-1]].append(h[:-1])
    prefix_end = [0] * (N + 1)
    for i, v in enumerate(verts):
        prefix_end[max(v)] = i + 1
    for n in range(1, N + 1):
        prefix_end[n] = max(prefix_end[n], prefix_end[n - 1])
    return _Problem(N, k, verts, ends_at, prefix_end)


def space_estimate(params: SearchParams, N: int, k: int) -> int:
    nv = sum(1 for _ in itertools.combinations(range(1, N + 1), params.arity))
    return k ** nv


def _dfs(problem: _Problem, prefix: tuple, max_nodes: int):
    """Longest avoiding prefix reachable below ``prefix``.

    Returns ``(best_vertices, coloring, nodes)`` where ``best_vertices`` is the
    number of vertices colored in the deepest avoiding assignment found.
    """
    V = len(problem.vertices)
    colors = [0] * V
    ends_at = problem.ends_at
    nodes = 0
    best = -1
    best_col: list = []

    def ok(i, c):
        for rest in ends_at[i]:
            if all(colors[j] == c for j in rest):
                return False
        return True

    for i, c in enumerate(prefix):
        if not ok(i, c):
            return -1, [], 0
        colors[i] = c
    # iterative DFS over (vertex, next color to try, max color used so far)
    start = len(prefix)
    used = max(prefix, default=0)
    if start > best:
        best, best_col = start, list(prefix)
    stack = [(start, 1, used)]
    while stack:
        i, c, used = stack.pop()
        if i == V:
            best, best_col = V, colors[:V]
            break
        top = min(problem.k, used + 1)
        while c <= top:
            nodes += 1
            if nodes > max_nodes:
                raise GuardRailExceeded("search nodes", nodes, max_nodes)
            if ok(i, c):
                break
            c += 1
        if c > top:
            continue
        colors[i] = c
        stack.append((i, c + 1, used))
        if i + 1 > best:
            best, best_col = i + 1, colors[:i + 1]
        stack.append((i + 1, 1, max(used, c)))
    return best, best_col, nodes


def _shard_prefixes(problem: _Problem, shards: int) -> list[tuple]:
    # enumerate canonical color prefixes until there are enough to share out
    prefixes = [()]
    depth = 0
    while len(prefixes) < shards and depth < min(len(problem.vertices), 12):
        nxt = []
        for p in prefixes:
            used = max(p, default=0)
            for c in range(1, min(problem.k, used + 1) + 1):
                nxt.append(p + (c,))
        prefixes = nxt
        depth += 1
    return prefixes


def _run_shard(args):
    problem, prefix, max_nodes = args
    return _dfs(problem, prefix, max_nodes)


def threads_from_env() -> int:
    try:
        return max(1, int(os.environ.get("FORGE_THREADS", "1")))
    except ValueError:
        raise InputError("FORGE_THREADS must be a positive integer") from None


def forced_threshold(params: SearchParams, N: int, k: int, max_space: int = DEFAULT_MAX_SPACE,
                     max_nodes: int = DEFAULT_MAX_NODES, threads: int | None = None) -> SearchResult:
    """Least N0 <= N such that every k-coloring of {1..N0} has a witness."""
    if k < 1 or N < 1:
        raise InputError("bound and colors must be positive")
    est = space_estimate(params, N, k)
    if est > max_space:
        raise GuardRailExceeded("coloring space", est, max_space)
    problem = _build_problem(params, N, k)
    threads = threads or threads_from_env()
    prefixes = _shard_prefixes(problem, threads) if threads > 1 else [()]
    jobs = [(problem, p, max_nodes) for p in prefixes]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_shard, jobs))
    else:
        results = [_run_shard(j) for j in jobs]
    nodes = sum(r[2] for r in results)
    # deterministic merge: deepest prefix wins, ties broken lexicographically
    best, col = max(((b, c) for b, c, _ in results), key=lambda t: (t[0], [-x for x in t[1]]))
    # translate colored vertices into the largest n with {1..n} fully colored
    n_ok = max(n for n in range(N + 1) if problem.prefix_end[n] <= best)
    res = SearchResult(params.kind, "unforced", N, k, nodes=nodes, params=_pjson(params))
    if n_ok < N:
        res.status = "forced"
        res.threshold = n_ok + 1
        res.extremal = _extremal(problem, col, n_ok)
    else:
        res.extremal = _extremal(problem, col, N)
    return res


def _extremal(problem: _Problem, col: list, n: int) -> list:
    cut = problem.prefix_end[n]
    return [[list(v), c] for v, c in zip(problem.vertices[:cut], col[:cut])]


def search_witness(params: SearchParams, N: int, k: int, coloring: Coloring | None = None,
                   all_colorings: bool = False, **guards) -> SearchResult:
    if all_colorings:
        return forced_threshold(params, N, k, **guards)
    if coloring is None:
        raise InputError("a coloring is required unless all colorings are searched")
    return find_witness(params, N, coloring)


__all__ = ["ANY", "KINDS", "SearchParams", "SearchResult", "search_witness", "find_witness",
           "forced_threshold", "witnesses", "space_estimate", "threads_from_env"]
