"""Finite stand-ins for the cover families, superfilters on finite semigroups,
the lift of an oracle to index sets, and the pair coloring built from a
decomposed cover.

Classical ω-, γ- and large covers are vacuous or trivial on finite spaces,
so each takes a threshold: ω(s) asks that every set of at most s points lies
in a member, γ(t) that every point misses at most t members, large(t) that
every point is in at least t members.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from .errors import InputError, UndefinedSum
from .semigroup import index_sum, mask_of
from .structures import Coloring


def cover_predicates(universe: Iterable, family: Iterable[Iterable], s: int = 2, t: int = 1) -> dict:
    X = frozenset(universe)
    fam = list(dict.fromkeys(frozenset(U) for U in family))
    if s < 0 or t < 0:
        raise InputError("thresholds must be nonnegative")
    proper = all(U and U < X for U in fam)
    union = frozenset().union(*fam) if fam else frozenset()
    is_cover = proper and union == X and bool(fam)
    is_omega = proper and bool(fam) and all(
        any(frozenset(P) <= U for U in fam)
        for r in range(1, min(s, len(X)) + 1) for P in itertools.combinations(sorted(X, key=repr), r))
    if s > len(X):
        # X itself would have to sit inside a proper subset
        is_omega = False
    is_gamma = bool(fam) and all(sum(1 for U in fam if x not in U) <= t for x in X)
    is_large = bool(fam) and all(sum(1 for U in fam if x in U) >= t for x in X)
    return {"is_cover": is_cover, "is_omega": is_omega, "is_gamma": is_gamma, "is_large": is_large,
            "is_ascending": _has_ascending_cover(X, fam)}


def _has_ascending_cover(X: frozenset, fam: list) -> bool:
    # a strictly increasing chain of at least two members whose union is X;
    # the union of a finite chain is its top, so the top must be X itself
    if X not in fam:
        return False
    return any(U < X for U in fam)


# -- superfilters ---------------------------------------------------------------

def _masks(family, sg) -> set[int]:
    out = set()
    for A in family:
        m = mask_of(A) if not isinstance(A, int) else A
        if m & ~sg.universe_mask:
            raise InputError("family member leaves the semigroup")
        out.add(m)
    return out


def _upward_closed(F: set[int], full: int) -> bool:
    for A in F:
        rest = full & ~A
        x = rest
        while x:
            low = x & -x
            if A | low not in F:
                return False
            x ^= low
    return True


def _minimal(F: set[int]) -> list[int]:
    return [A for A in F if not any(B != A and B & A == B for B in F)]


def superfilter_predicates(sg, family) -> dict:
    """Superfilter, translation invariance (s+A stays in) and idempotence."""
    if not sg.is_total:
        raise InputError("superfilter checks need a total semigroup")
    full = sg.universe_mask
    F = _masks(family, sg)
    is_sf = bool(F) and 0 not in F and _upward_closed(F, full)
    if is_sf:
        # A1 ∪ A2 in F forces A1 or A2 in F
        for A in F:
            sub = A
            while sub:
                if sub not in F and (A & ~sub) not in F:
                    is_sf = False
                    break
                sub = (sub - 1) & A
            if not is_sf:
                break
    elements = list(sg.elements)
    ti = all(sg.translate_mask(b, A)[0] in F for A in F for b in elements)
    # b qualifies for A when b + C ⊆ A for some C in F; minimal C suffice
    mins = _minimal(F)
    trans = {b: [sg.translate_mask(b, C)[0] for C in mins] for b in elements}
    idem = True
    for A in range(full + 1):
        if A & ~full:
            continue
        B = 0
        for b in elements:
            if any(T & ~A == 0 for T in trans[b]):
                B |= 1 << b
        if B in F and A not in F:
            idem = False
            break
    return {"is_superfilter": is_sf, "is_translation_invariant": is_sf and ti,
            "is_idempotent_superfilter": is_sf and idem}


def upward_closed_families(n: int):
    """Every upward-closed family of nonempty subsets of an n-point set, as mask sets."""
    full = (1 << n) - 1
    sets = list(range(1, full + 1))
    # grow from antichains: closure of each antichain of nonempty sets
    seen = set()
    for r in range(0, len(sets) + 1):
        found = False
        for anti in itertools.combinations(sets, r):
            if any(a & b == a for a, b in itertools.permutations(anti, 2)):
                continue
            found = True
            F = frozenset(A for A in sets if any(A & m == m for m in anti))
            if F not in seen:
                seen.add(F)
                yield set(F)
        if not found and r > 0:
            break


def superfilters(n: int):
    """All superfilters on an n-point set, by filtering the upward-closed families."""
    full = (1 << n) - 1
    for F in upward_closed_families(n):
        if not F:
            continue
        ok = True
        for A in F:
            sub = A
            while sub:
                if sub not in F and (A & ~sub) not in F:
                    ok = False
                    break
                sub = (sub - 1) & A
            if not ok:
                break
        if ok and _upward_closed(F, full):
            yield F


# -- lifting to index sets ---------------------------------------------------------

class LiftedOracle:
    """Membership for families of index sets, read through a base oracle.

    A family 𝒜 of nonempty index sets is in iff for every n below the length
    of the sequence the set {a_F : F ∈ 𝒜, n < min F} is in the base oracle.
    """

    def __init__(self, oracle, seq: Sequence[int], sg, check_tails: bool = True):
        self.oracle = oracle
        self.seq = list(seq)
        self.sg = sg
        self.L = len(self.seq)
        self._sum = {}
        if check_tails:
            for n in range(self.L):
                tail = self.fs_tail(n)
                if not oracle.query(tail):
                    raise InputError(f"base oracle does not hold the tail of finite sums from index {n + 1}")

    def a(self, F) -> int:
        key = tuple(sorted(F))
        if key not in self._sum:
            if not key or key[0] < 1 or key[-1] > self.L:
                raise InputError(f"index set {list(key)} outside 1..{self.L}")
            v = index_sum(self.seq, key, self.sg)
            if v is None:
                raise UndefinedSum(f"a_F undefined for F={list(key)}", index_set=key)
            self._sum[key] = v
        return self._sum[key]

    def fs_tail(self, n: int) -> int:
        idx = range(n + 1, self.L + 1)
        return mask_of(self.a(H) for r in range(1, len(idx) + 1) for H in itertools.combinations(idx, r))

    def image(self, family, n: int = 0) -> int:
        return mask_of(self.a(F) for F in family if min(F) > n)

    def query(self, family) -> bool:
        family = [tuple(sorted(F)) for F in family]
        if not family:
            return False
        return all(self.oracle.query(self.image(family, n)) for n in range(self.L))

    def lift_family(self, R_family, max_size: int = 4096) -> list[list[tuple]]:
        """Families R' of index sets whose image {a_F : F ∈ R'} is a member of ``R_family``."""
        by_value: dict[int, list[tuple]] = {}
        for r in range(1, self.L + 1):
            for H in itertools.combinations(range(1, self.L + 1), r):
                by_value.setdefault(self.a(H), []).append(H)
        out = []
        for R in R_family:
            R = sorted(set(R))
            if any(x not in by_value for x in R):
                continue
            # every element of R needs a nonempty set of index sets mapping onto it
            options = []
            for x in R:
                pre = by_value[x]
                options.append([c for k in range(1, len(pre) + 1) for c in itertools.combinations(pre, k)])
            for choice in itertools.product(*options):
                out.append(sorted(H for part in choice for H in part))
                if len(out) > max_size:
                    raise InputError(f"lifted family exceeds {max_size} members")
        return out


def lift_to_fin(oracle, seq: Sequence[int], sg, check_tails: bool = True) -> LiftedOracle:
    return LiftedOracle(oracle, seq, sg, check_tails)


# -- pair coloring from a decomposed cover ----------------------------------------

def coloring_from_cover(decomposition: Sequence[Iterable[Iterable]], windows: Sequence[Iterable]):
    """Refine each block by its window and color pairs: 1 inside a refined block, 2 across.

    Returns ``(coloring, refined)`` where ``refined`` lists the refined sets;
    the coloring acts on pairs of 1-based positions in that list.
    """
    if len(decomposition) != len(windows):
        raise InputError("one window per block is required")
    refined: list[frozenset] = []
    block_of: dict[frozenset, set[int]] = {}
    for n, (block, W) in enumerate(zip(decomposition, windows)):
        W = frozenset(W)
        for U in block:
            V = frozenset(U) & W
            if V not in block_of:
                block_of[V] = set()
                refined.append(V)
            block_of[V].add(n)
    edges = []
    for i, j in itertools.combinations(range(len(refined)), 2):
        same = block_of[refined[i]] & block_of[refined[j]]
        edges.append(([i + 1, j + 1], 1 if same else 2))
    if not edges:
        return Coloring(2, 2, table={}), refined
    return Coloring.from_edges(2, 2, edges), refined


def refined_blocks(decomposition, windows) -> list[set[int]]:
    """For each block, the 1-based positions of its refined sets in ``coloring_from_cover``'s list."""
    _, refined = coloring_from_cover(decomposition, windows)
    pos = {V: i + 1 for i, V in enumerate(refined)}
    return [{pos[frozenset(U) & frozenset(W)] for U in block} for block, W in zip(decomposition, windows)]


__all__ = ["cover_predicates", "superfilter_predicates", "superfilters", "upward_closed_families",
           "LiftedOracle", "lift_to_fin", "coloring_from_cover", "refined_blocks"]
