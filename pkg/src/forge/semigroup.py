"""Finite and bounded semigroup carriers plus the index-sum machinery.

Elements are small non-negative integers. Subsets of a carrier are handled
as Python ``int`` bitmasks (bit ``x`` set iff ``x`` is in the set), which is
what the oracle and engine operate on.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Sequence

from .errors import InputError, UndefinedSum

UNDEFINED = None


# -- bitmask helpers ---------------------------------------------------------

def mask_of(elements: Iterable[int]) -> int:
    m = 0
    for x in elements:
        m |= 1 << x
    return m


def elements_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def min_element(mask: int) -> int | None:
    if not mask:
        return None
    return (mask & -mask).bit_length() - 1


# -- carriers -----------------------------------------------------------------

class FiniteSemigroup:
    """Carrier ``{0..size-1}`` with an operation table.

    ``table[a][b]`` is the product ``a*b`` or ``None`` where undefined
    (partial mode). Construction validates associativity.
    """

    def __init__(self, table, labels=None, partial=False, check=True):
        size = len(table)
        if size == 0:
            raise InputError("semigroup must be nonempty")
        rows = []
        for row in table:
            if len(row) != size:
                raise InputError("operation table must be square")
            r = []
            for v in row:
                if v is None:
                    if not partial:
                        raise InputError("undefined entry in a total table")
                elif not (isinstance(v, int) and 0 <= v < size):
                    raise InputError(f"table entry {v!r} outside carrier")
                r.append(v)
            rows.append(tuple(r))
        self.table = tuple(rows)
        self.size = size
        self.partial = partial and any(v is None for row in rows for v in row)
        self.labels = list(labels) if labels is not None else None
        if check:
            bad = self.associativity_violation()
            if bad is not None:
                raise InputError(f"operation is not associative at {bad}")

    @property
    def elements(self) -> range:
        return range(self.size)

    @property
    def universe_mask(self) -> int:
        return (1 << self.size) - 1

    @property
    def is_total(self) -> bool:
        return not self.partial

    def op(self, a, b):
        if a is None or b is None:
            return None
        return self.table[a][b]

    def associativity_violation(self):
        t = self.table
        n = self.size
        for a in range(n):
            for b in range(n):
                ab = t[a][b]
                for c in range(n):
                    bc = t[b][c]
                    if ab is None or bc is None:
                        continue
                    left, right = t[ab][c], t[a][bc]
                    if left is None or right is None:
                        continue
                    if left != right:
                        return (a, b, c)
        return None

    def translate_mask(self, b: int, mask: int) -> tuple[int, bool]:
        """Return (mask of ``b+X``, overflow) for the set X encoded by ``mask``."""
        out = 0
        row = self.table[b]
        for x in elements_of(mask):
            v = row[x]
            if v is None:
                return out, True
            out |= 1 << v
        return out, False

    def preimage_mask(self, a: int, mask: int, side: str = "left") -> int:
        """``{x : a*x in mask}`` (side="left") or ``{x : x*a in mask}`` (side="right")."""
        out = 0
        t = self.table
        for x in range(self.size):
            v = t[a][x] if side == "left" else t[x][a]
            if v is not None and mask >> v & 1:
                out |= 1 << x
        return out

    def label(self, x) -> str:
        return self.labels[x] if self.labels else str(x)

    def descriptor(self) -> dict:
        d = {"size": self.size, "table": [list(r) for r in self.table], "partial": self.partial}
        if self.labels:
            d["labels"] = self.labels
        return d

    def __eq__(self, other):
        return isinstance(other, FiniteSemigroup) and self.table == other.table

    def __hash__(self):
        return hash(self.table)

    def __repr__(self):
        return f"FiniteSemigroup(size={self.size})"


class BoundedNaturals:
    """``{1..bound}`` under + or *, undefined on overflow (never clamped)."""

    def __init__(self, bound: int, op: str = "add"):
        if not isinstance(bound, int) or bound < 1:
            raise InputError("bound must be a positive integer")
        if op not in ("add", "mul"):
            raise InputError(f"unknown operation {op!r}")
        self.bound = bound
        self.kind = op
        self.partial = True

    @property
    def elements(self) -> range:
        return range(1, self.bound + 1)

    @property
    def universe_mask(self) -> int:
        return ((1 << (self.bound + 1)) - 1) ^ 1

    @property
    def is_total(self) -> bool:
        return False

    def add(self, a, b):
        if a is None or b is None:
            return None
        s = a + b
        return s if s <= self.bound else None

    def mul(self, a, b):
        if a is None or b is None:
            return None
        p = a * b
        return p if p <= self.bound else None

    def op(self, a, b):
        return self.add(a, b) if self.kind == "add" else self.mul(a, b)

    def with_op(self, op: str) -> "BoundedNaturals":
        return BoundedNaturals(self.bound, op)

    def translate_mask(self, b: int, mask: int) -> tuple[int, bool]:
        full = self.universe_mask
        if self.kind == "add":
            shifted = mask << b
            return shifted & full, bool(shifted & ~full)
        out = 0
        for x in elements_of(mask):
            p = x * b
            if p > self.bound:
                return out, True
            out |= 1 << p
        return out, False

    def preimage_mask(self, a: int, mask: int, side: str = "left") -> int:
        """``{x : a*x in mask}``; both operations are commutative, so side is moot."""
        if self.kind == "add":
            return (mask >> a) & self.universe_mask
        return self.divide_mask(mask, a)

    def divide_mask(self, mask: int, y: int) -> int:
        """``A/y = {x : x*y in A}``."""
        out = 0
        for x in range(1, self.bound // y + 1):
            if mask >> (x * y) & 1:
                out |= 1 << x
        return out

    def label(self, x) -> str:
        return str(x)

    def descriptor(self) -> dict:
        return {"naturals": {"bound": self.bound, "op": self.kind}}

    def __eq__(self, other):
        return isinstance(other, BoundedNaturals) and (self.bound, self.kind) == (other.bound, other.kind)

    def __hash__(self):
        return hash((self.bound, self.kind))

    def __repr__(self):
        return f"BoundedNaturals(bound={self.bound}, op={self.kind!r})"


def load_semigroup(obj: dict):
    """Build a carrier from the JSON form ``{"size", "table", "partial"}`` or
    ``{"naturals": {"bound", "op"}}``."""
    if not isinstance(obj, dict):
        raise InputError("semigroup description must be a JSON object")
    if "naturals" in obj:
        nat = obj["naturals"]
        return BoundedNaturals(int(nat["bound"]), nat.get("op", "add"))
    if "table" not in obj:
        raise InputError("semigroup needs 'table' or 'naturals'")
    table = obj["table"]
    if "size" in obj and obj["size"] != len(table):
        raise InputError("'size' disagrees with table")
    return FiniteSemigroup(table, labels=obj.get("labels"), partial=bool(obj.get("partial", False)))


# -- stock semigroups ---------------------------------------------------------

def cyclic_group(n: int) -> FiniteSemigroup:
    return FiniteSemigroup([[(a + b) % n for b in range(n)] for a in range(n)])


def max_semigroup(n: int) -> FiniteSemigroup:
    return FiniteSemigroup([[max(a, b) for b in range(n)] for a in range(n)])


def min_semigroup(n: int) -> FiniteSemigroup:
    return FiniteSemigroup([[min(a, b) for b in range(n)] for a in range(n)])


def left_zero_semigroup(n: int) -> FiniteSemigroup:
    """``a*b = a``: associative and noncommutative for n >= 2."""
    return FiniteSemigroup([[a for _ in range(n)] for a in range(n)])


def random_semigroup(rng: random.Random, max_size: int = 6, degree: int = 3) -> FiniteSemigroup:
    """Random transformation semigroup on ``degree`` points with at most ``max_size`` elements.

    Elements are maps composed left to right, so the result is usually noncommutative.
    """
    while True:
        gens = {tuple(rng.randrange(degree) for _ in range(degree)) for _ in range(rng.randint(1, 2))}
        elems = set(gens)
        frontier = list(gens)
        while frontier and len(elems) <= max_size:
            f = frontier.pop()
            for g in list(elems):
                for h in (tuple(g[f[x]] for x in range(degree)), tuple(f[g[x]] for x in range(degree))):
                    if h not in elems:
                        elems.add(h)
                        frontier.append(h)
        if len(elems) <= max_size:
            order = sorted(elems)
            index = {f: i for i, f in enumerate(order)}
            table = [[index[tuple(g[f[x]] for x in range(degree))] for g in order] for f in order]
            return FiniteSemigroup(table)


def all_semigroups(n: int):
    """Yield every associative total table on ``{0..n-1}`` (labelled, not up to isomorphism)."""
    cells = [(a, b) for a in range(n) for b in range(n)]
    table = [[None] * n for _ in range(n)]

    def consistent(a, b):
        # only triples touching the freshly filled cell can newly fail
        for x, y, z in itertools.chain(
            ((a, b, z) for z in range(n)),
            ((x, a, b) for x in range(n)),
            ((x, y, b) for x in range(n) for y in range(n) if table[x][y] == a),
            ((a, y, z) for y in range(n) for z in range(n) if table[y][z] == b),
        ):
            xy, yz = table[x][y], table[y][z]
            if xy is None or yz is None:
                continue
            left, right = table[xy][z], table[x][yz]
            if left is not None and right is not None and left != right:
                return False
        return True

    def fill(i):
        if i == len(cells):
            yield FiniteSemigroup([row[:] for row in table], check=False)
            return
        a, b = cells[i]
        for v in range(n):
            table[a][b] = v
            if consistent(a, b):
                yield from fill(i + 1)
        table[a][b] = None

    yield from fill(0)


# -- index sums -----------------------------------------------------------------

def _canonical(H) -> tuple[int, ...]:
    idx = tuple(sorted(set(H)))
    if not idx:
        raise InputError("index set must be nonempty")
    return idx


def index_sum(seq: Sequence[int], H, sg):
    """``a_H``: left-to-right fold over ``seq`` at the 1-based indices in H."""
    idx = _canonical(H)
    if idx[0] < 1 or idx[-1] > len(seq):
        raise InputError(f"index set {list(idx)} out of range for sequence of length {len(seq)}")
    acc = seq[idx[0] - 1]
    for i in idx[1:]:
        acc = sg.op(acc, seq[i - 1])
        if acc is None:
            return UNDEFINED
    return acc


def _nonempty_subsets(lo: int, hi: int):
    span = list(range(lo, hi + 1))
    for r in range(1, len(span) + 1):
        yield from itertools.combinations(span, r)


def fs_set(seq: Sequence[int], lo: int, hi: int, sg, flagged: list | None = None) -> set:
    """All ``a_H`` for nonempty ``H`` within ``{lo..hi}``.

    Undefined sums are left out; pass a list as ``flagged`` to collect their index sets.
    """
    if lo > hi or lo < 1 or hi > len(seq):
        raise InputError(f"empty or invalid range {lo}..{hi}")
    out = set()
    for H in _nonempty_subsets(lo, hi):
        v = index_sum(seq, H, sg)
        if v is None:
            if flagged is not None:
                flagged.append(H)
        else:
            out.add(v)
    return out


def is_proper(seq: Sequence[int], sg) -> bool:
    """True iff ``a_{H1} != a_{H2}`` whenever ``max H1 < min H2``.

    Raises UndefinedSum naming the offending H when a needed sum does not exist.
    """
    n = len(seq)
    sums = {}
    for H in _nonempty_subsets(1, n):
        v = index_sum(seq, H, sg)
        if v is None:
            raise UndefinedSum(f"a_H undefined for H={list(H)}", index_set=H)
        sums[H] = v
    for t in range(1, n):
        left = {v for H, v in sums.items() if H[-1] == t}
        right = {v for H, v in sums.items() if H[0] > t}
        if left & right:
            return False
    return True


def power_sequence(a: int, sg: FiniteSemigroup):
    x = a
    while True:
        yield x
        x = sg.op(x, a)


def idempotent_power(a: int, sg: FiniteSemigroup) -> int:
    return _idempotent_power(a, sg)[0]


def idempotent_exponent(a: int, sg: FiniteSemigroup) -> int:
    """Least ``j >= 1`` with ``a^j`` idempotent."""
    return _idempotent_power(a, sg)[1]


def _idempotent_power(a, sg):
    if not sg.is_total:
        raise InputError("idempotent powers need a total semigroup")
    for j, x in enumerate(power_sequence(a, sg), start=1):
        if sg.op(x, x) == x:
            return x, j
        if j > sg.size * sg.size:
            raise AssertionError("no idempotent power found; table is not associative")


def all_idempotents(sg: FiniteSemigroup) -> set[int]:
    if not sg.is_total:
        raise InputError("idempotents are only enumerated for total semigroups")
    return {e for e in sg.elements if sg.op(e, e) == e}
