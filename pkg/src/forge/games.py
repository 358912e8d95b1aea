"""Finite-horizon selection games and the matching selection principles.

In round n Alice picks a set A from her menu and Bob answers with one
element of A (G1) or a finite subset of A (GFIN). Bob wins when everything
he collected over the T rounds lands in the target family. Finite games are
determined; we solve them by backward induction on (round, collected set),
which is all the target can see.

Sets are bitmasks over the positions of the universe items. Solver values
are plain ints combined with ``&`` and ``|``: a single target uses 0/1,
and ``packed_bob_wins`` sets bit t for target t so that a whole batch of
targets is solved in one pass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Sequence

from .covers import cover_predicates
from .errors import GuardRailExceeded, InputError

G1, GFIN = "g1", "gfin"
GAME_KINDS = (G1, GFIN)
DEFAULT_MAX_NODES = 2_000_000
TARGET_KINDS = ("list", "superset", "nonempty", "all", "cover", "omega", "gamma", "large", "ascending")


def _freeze(item):
    return frozenset(item) if isinstance(item, (list, tuple, set, frozenset)) else item


def _sort_key(x):
    return (1, sorted(x)) if isinstance(x, frozenset) else (0, x)


@dataclass(frozen=True)
class Target:
    """Bob's winning family: an explicit list or a named predicate.

    Named cover predicates read each collected universe item as a subset of
    a ground space (``space``, default the union of all items).
    """

    kind: str
    sets: tuple = ()
    params: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise InputError(f"unknown target kind {self.kind!r}")

    @classmethod
    def from_json(cls, obj) -> "Target":
        if isinstance(obj, list):
            return cls("list", tuple(frozenset(_freeze(x) for x in s) for s in obj))
        kind = obj.get("kind")
        params = {k: v for k, v in obj.items() if k not in ("kind", "sets", "set")}
        if kind == "list":
            return cls("list", tuple(frozenset(_freeze(x) for x in s) for s in obj.get("sets", [])), params)
        if kind == "superset":
            return cls("superset", (frozenset(_freeze(x) for x in obj.get("set", [])),), params)
        return cls(kind, (), params)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, **self.params}
        if self.kind == "list":
            out["sets"] = [sorted(s, key=_sort_key) for s in self.sets]
        elif self.kind == "superset":
            out["set"] = sorted(self.sets[0], key=_sort_key)
        return out

    def holds(self, collected: frozenset, universe: Sequence) -> bool:
        kind = self.kind
        if kind == "list":
            return collected in self.sets
        if kind == "superset":
            return self.sets[0] <= collected
        if kind == "nonempty":
            return bool(collected)
        if kind == "all":
            return True
        space = self.params.get("space")
        space = frozenset(space) if space is not None else frozenset().union(
            *(u for u in universe if isinstance(u, frozenset)))
        fam = [u for u in collected if isinstance(u, frozenset)]
        flags = cover_predicates(space, fam, s=int(self.params.get("s", 2)), t=int(self.params.get("t", 1)))
        key = {"cover": "is_cover", "omega": "is_omega", "gamma": "is_gamma", "large": "is_large",
               "ascending": "is_ascending"}[kind]
        return flags[key]


@dataclass(frozen=True)
class SetSystem:
    """Universe items, Alice's menus and Bob's target.

    ``families[n]`` is Alice's menu in round n; the last menu is reused
    once the list runs out, so a single menu means the same menu every round.
    """

    universe: tuple
    families: tuple  # tuple of menus; a menu is a tuple of frozensets of items
    target: Target

    def __post_init__(self):
        if not self.families:
            raise InputError("at least one menu is required")
        items = set(self.universe)
        if len(items) != len(self.universe):
            raise InputError("universe items must be distinct")
        for menu in self.families:
            if not menu:
                raise InputError("menus must be nonempty")
            for A in menu:
                if not A or not A <= items:
                    raise InputError(f"menu member {sorted(A, key=_sort_key)} is empty or leaves the universe")

    @classmethod
    def from_json(cls, obj: dict) -> "SetSystem":
        universe = tuple(_freeze(x) for x in obj["universe"])
        fams = obj["families"]
        # a bare menu (list of sets of items) stands for the same menu every round
        if fams and _looks_like_menu(fams, universe):
            fams = [fams]
        families = tuple(tuple(frozenset(_freeze(x) for x in A) for A in menu) for menu in fams)
        return cls(universe, families, Target.from_json(obj.get("target", {"kind": "nonempty"})))

    def to_json(self) -> dict:
        return {"universe": [sorted(u) if isinstance(u, frozenset) else u for u in self.universe],
                "families": [[sorted((sorted(x) if isinstance(x, frozenset) else x for x in A), key=str)
                              for A in menu] for menu in self.families],
                "target": self.target.to_json()}

    def menu(self, n: int):
        return self.families[min(n, len(self.families) - 1)]

    # bitmask views
    def index(self) -> dict:
        return {u: i for i, u in enumerate(self.universe)}

    def mask(self, items) -> int:
        idx = self.index()
        return sum(1 << idx[x] for x in items)

    def items(self, mask: int) -> frozenset:
        return frozenset(u for i, u in enumerate(self.universe) if mask >> i & 1)

    def menu_masks(self, T: int) -> list[list[int]]:
        return [[self.mask(A) for A in self.menu(n)] for n in range(T)]

    def leaf_table(self) -> list[int]:
        """Target truth value for every collected mask."""
        u = len(self.universe)
        if u > 20:
            raise GuardRailExceeded("target table", 1 << u, 1 << 20)
        return [int(self.target.holds(self.items(C), self.universe)) for C in range(1 << u)]


def _looks_like_menu(fams, universe) -> bool:
    # a bare menu is a list of sets of items; a list of menus nests one level deeper
    items = set(universe)
    try:
        return all(isinstance(A, list) and all(_freeze(x) in items for x in A) for A in fams)
    except TypeError:
        # nested lists do not freeze, so this is already a list of menus
        return False


@dataclass(frozen=True)
class GameSpec:
    kind: str
    horizon: int
    system: SetSystem

    def __post_init__(self):
        if self.kind not in GAME_KINDS:
            raise InputError(f"game kind must be one of {GAME_KINDS}")
        if self.horizon < 1:
            raise InputError("horizon must be at least 1")


def replies(kind: str, A: int) -> list[int]:
    """Bob's legal answers to Alice's set ``A`` (as masks)."""
    if kind == G1:
        out, x = [], A
        while x:
            low = x & -x
            out.append(low)
            x ^= low
        return out
    # every finite subset, the empty one included
    out, sub = [], A
    while True:
        out.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & A
    return out


def estimate_nodes(kind: str, menus: list[list[int]], u: int) -> int:
    per_round = [sum(len(replies(kind, A)) for A in menu) for menu in menus]
    return (1 << u) * max(1, sum(per_round))


def backward_tables(kind: str, menus: list[list[int]], leaf: Sequence[int], ones: int) -> list[list[int]]:
    """``V[n][C]``: value with n rounds played and ``C`` collected.

    Alice minimises (``&``), Bob maximises (``|``); ``ones`` is the all-true value.
    """
    T = len(menus)
    size = len(leaf)
    V: list[list[int]] = [None] * (T + 1)  # type: ignore[list-item]
    V[T] = list(leaf)
    rep = [[replies(kind, A) for A in menu] for menu in menus]
    for n in range(T - 1, -1, -1):
        nxt = V[n + 1]
        row = [0] * size
        for C in range(size):
            val = ones
            for rs in rep[n]:
                best = 0
                for F in rs:
                    best |= nxt[C | F]
                val &= best
                if not val:
                    break
            row[C] = val
        V[n] = row
    return V


@dataclass
class Strategy:
    """Positional strategy: the value only depends on the round and Bob's collection."""

    player: str
    system: SetSystem
    kind: str
    table: dict  # alice: (n, C) -> A mask; bob: (n, C, A) -> F mask

    def move(self, n: int, collected: frozenset, A: frozenset | None = None):
        C = self.system.mask(collected)
        if self.player == "alice":
            return self.system.items(self.table[(n, C)])
        return self.system.items(self.table[(n, C, self.system.mask(A))])

    def to_json(self) -> list:
        out = []
        for key, mv in sorted(self.table.items()):
            entry = {"round": key[0] + 1, "collected": _show(self.system.items(key[1]))}
            if self.player == "bob":
                entry["alice"] = _show(self.system.items(key[2]))
            entry["move"] = _show(self.system.items(mv))
            out.append(entry)
        return out


def _show(items):
    return sorted((sorted(x) if isinstance(x, frozenset) else x for x in items), key=str)


@dataclass
class GameResult:
    winner: str
    strategy: Strategy
    nodes: int

    def to_json(self) -> dict:
        return {"winner": self.winner, "nodes": self.nodes, "strategy": {"player": self.strategy.player,
                                                                       "moves": self.strategy.to_json()}}


def solve_game(spec: GameSpec, max_nodes: int = DEFAULT_MAX_NODES) -> GameResult:
    system, T, kind = spec.system, spec.horizon, spec.kind
    menus = system.menu_masks(T)
    est = estimate_nodes(kind, menus, len(system.universe))
    if est > max_nodes:
        raise GuardRailExceeded("game tree", est, max_nodes)
    V = backward_tables(kind, menus, system.leaf_table(), 1)
    winner = "bob" if V[0][0] else "alice"
    table: dict = {}
    # extract a strategy along positions reachable under it
    frontier = {0}
    for n in range(T):
        nxt = set()
        for C in sorted(frontier):
            if winner == "alice":
                A = next(A for A in menus[n] if not any(V[n + 1][C | F] for F in replies(kind, A)))
                table[(n, C)] = A
                nxt.update(C | F for F in replies(kind, A))
            else:
                for A in menus[n]:
                    F = next(F for F in replies(kind, A) if V[n + 1][C | F])
                    table[(n, C, A)] = F
                    nxt.add(C | F)
        frontier = nxt
    return GameResult(winner, Strategy(winner, system, kind, table), est)


def packed_bob_wins(kind: str, menus: list[list[int]], leaves: Sequence[int]) -> int:
    """Bit t of the result says whether Bob wins against target t.

    ``leaves[C]`` carries the bit of every target containing ``C``.
    """
    ones = 0
    for x in leaves:
        ones |= x
    ones = (1 << max(ones.bit_length(), 1)) - 1
    return backward_tables(kind, menus, leaves, ones)[0][0]


def _selection_unions(kind: str, seq: Sequence[int]) -> set[int]:
    unions = {0}
    for A in seq:
        unions = {C | F for C in unions for F in replies(kind, A)}
    return unions


def packed_selection(kind: str, menus: list[list[int]], leaves: Sequence[int]) -> int:
    """Packed selection principle: every move sequence admits a good selection."""
    ones = 0
    for x in leaves:
        ones |= x
    val = (1 << max(ones.bit_length(), 1)) - 1
    for seq in itertools.product(*menus):
        best = 0
        for C in _selection_unions(kind, seq):
            best |= leaves[C]
        val &= best
        if not val:
            break
    return val


def selection_check(kind: str, system: SetSystem, T: int, max_nodes: int = DEFAULT_MAX_NODES) -> bool:
    menus = system.menu_masks(T)
    est = 1
    for menu in menus:
        est *= sum(len(replies(kind, A)) for A in menu)
    if est > max_nodes:
        raise GuardRailExceeded("selection sequences", est, max_nodes)
    return bool(packed_selection(kind, menus, system.leaf_table()))


def sfin_check(system: SetSystem, T: int, **kw) -> bool:
    return selection_check(GFIN, system, T, **kw)


def sone_check(system: SetSystem, T: int, **kw) -> bool:
    return selection_check(G1, system, T, **kw)


def menus_up_to(u: int, max_sets: int) -> list[tuple[int, ...]]:
    """All menus of 1..max_sets distinct nonempty subsets of a u-point universe."""
    nonempty = range(1, 1 << u)
    return [c for r in range(1, max_sets + 1) for c in itertools.combinations(nonempty, r)]


def all_target_leaves(u: int) -> tuple[list[int], int]:
    """Leaves packing every family of subsets of a u-point universe as one bit."""
    n_sets = 1 << u
    n_targets = 1 << n_sets
    leaves = [0] * n_sets
    for t in range(n_targets):
        for C in range(n_sets):
            if t >> C & 1:
                leaves[C] |= 1 << t
    return leaves, n_targets


__all__ = ["G1", "GFIN", "GAME_KINDS", "Target", "SetSystem", "GameSpec", "Strategy", "GameResult",
           "solve_game", "sfin_check", "sone_check", "selection_check", "replies", "packed_bob_wins",
           "packed_selection", "menus_up_to", "all_target_leaves", "backward_tables"]
