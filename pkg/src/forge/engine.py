"""Round-by-round strategy construction driven by a membership oracle.

The additive run follows the Galvin-Glazer pattern: pick a green set G in
e, then alternate the star operator, a disjoint subfamily of R_n (Alice's
move), Bob's finite reply and the next set
``D_{n+1} = B_n ∩ G(SG^{<m}[V_1..V_n])``. The multiplicative run adds a
division step ``D*/y_n`` and builds the tilde sumgraph over F(H) blocks.

Correctness of a run is not taken on trust: every certificate is checked by
``forge.verify``, which shares no code with this module.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .errors import DivisionExhausted, InputError, OracleExhausted, UndefinedColor
from .oracle import BACKTRACKING, PRINCIPAL, MembershipOracle, disjointify, star
from .semigroup import BoundedNaturals, elements_of, mask_of, min_element, popcount
from .structures import Coloring, sumgraph_upto

CERT_VERSION = 1
FIN, ONE = "fin", "one"


# -- induced colorings --------------------------------------------------------

class InducedColorings:
    """Lazily computed ``χ_j`` for ``j < m`` from the top coloring ``χ_m``.

    ``χ_j(A)`` is the color c whose class ``{s ∉ A : χ_{j+1}(A ∪ {s}) = c}``
    the oracle puts in e (the chosen class is committed together with A).
    With ``base`` given, ``χ_1`` is that coloring and the top level is
    constant; this is how m = 1 runs through the m = 2 construction.
    """

    def __init__(self, top: Coloring, oracle: MembershipOracle, sg, base: Coloring | None = None):
        self.top = top
        self.m = top.m
        self.k = top.k if base is None else base.k
        self.oracle = oracle
        self.sg = sg
        self.base = base
        self.elements = np.array(list(sg.elements), dtype=np.int64)
        self._memo: dict[frozenset, int] = {}

    def classes(self, A: frozenset) -> list[int]:
        """Masks of the color classes of ``S \\ A`` one level up, indexed by color-1."""
        cand = self.elements[~np.isin(self.elements, list(A))] if A else self.elements
        if len(A) + 1 == self.m:
            cols = self.top.extension_colors(sorted(A), cand)
        else:
            cols = np.array([self.color(A | {int(s)}) for s in cand], dtype=np.int64)
        parts = []
        for c in range(1, self.k + 1):
            parts.append(mask_of(cand[cols == c].tolist()))
        return parts

    def green_class(self, A: frozenset, green: int) -> int:
        """``{s ∉ A : A ∪ {s} has color green}``."""
        if self.base is not None and len(A) + 1 == self.m:
            # the constant top level: every extension is green
            return self.oracle.universe & ~mask_of(A)
        return self.classes(A)[green - 1]

    def color(self, A) -> int:
        A = frozenset(A)
        if len(A) == self.m:
            return self.top(A)
        if self.base is not None and len(A) == 1:
            return self.base(A)
        if A in self._memo:
            return self._memo[A]
        parts = self.classes(A)
        if not any(parts):
            raise UndefinedColor(f"no element outside {sorted(A)} to extend by")
        live = [i for i, p in enumerate(parts) if p]
        idx = self.oracle.choose([parts[i] for i in live], exception=mask_of(A))
        c = live[idx] + 1
        self._memo[A] = c
        return c

    def fork(self, oracle: MembershipOracle) -> "InducedColorings":
        twin = object.__new__(InducedColorings)
        twin.__dict__.update(self.__dict__)
        twin.oracle = oracle
        twin._memo = dict(self._memo)
        return twin

    def levels(self) -> list[dict]:
        """The computed ``χ_{m-1} .. χ_1`` tables (only the evaluated sets)."""
        out = []
        for j in range(self.m - 1, 0, -1):
            out.append({tuple(sorted(A)): c for A, c in self._memo.items() if len(A) == j})
        return out


def induce_colorings(top: Coloring, oracle: MembershipOracle, sg, sets=None) -> list[dict]:
    """Evaluate ``χ_{m-1} .. χ_1`` on ``sets`` (default: every singleton, which
    forces all the intermediate levels needed for them)."""
    if top.m < 2:
        raise InputError("induced colorings need m >= 2")
    ic = InducedColorings(top, oracle, sg)
    for A in (sets if sets is not None else [(s,) for s in sg.elements]):
        ic.color(A)
    return ic.levels()


def g_of(F, green: int, ic: InducedColorings, commit: bool = True) -> int:
    """``G(F) = ∩_{A∈F} {s ∉ A : A ∪ {s} is green}``; committed in e by default."""
    universe = ic.oracle.universe
    out = universe
    for A in sorted(F, key=lambda a: (len(a), sorted(a))):
        out &= ic.green_class(frozenset(A), green)
        if not out:
            break
    if commit:
        ic.oracle.commit_in(out, "G(F)")
    return out


# -- families of finite sets ----------------------------------------------------

@dataclass
class Family:
    """One family R_n: all singletons, all APs of a fixed length, or explicit sets."""
    kind: str
    length: int = 1
    sets: list = field(default_factory=list)

    def members_within(self, D: int, sg) -> list[int]:
        if self.kind == "singletons":
            return [1 << x for x in elements_of(D)]
        if self.kind == "ap":
            els = elements_of(D)
            top = els[-1] if els else 0
            out = []
            for a in els:
                d = 1
                while a + (self.length - 1) * d <= top:
                    R = mask_of(a + i * d for i in range(self.length))
                    if not (R & ~D):
                        out.append(R)
                    d += 1
            return out
        return [R for R in self.sets if not (R & ~D)]

    def union(self, universe: int) -> int:
        if self.kind == "explicit":
            u = 0
            for R in self.sets:
                u |= R
            return u & universe
        return universe

    def descriptor(self):
        if self.kind == "explicit":
            return {"kind": "explicit", "sets": [elements_of(R) for R in self.sets]}
        if self.kind == "ap":
            return {"kind": "ap", "length": self.length}
        return {"kind": "singletons"}

    @classmethod
    def from_json(cls, obj) -> "Family":
        if isinstance(obj, list):
            sets = [mask_of(s) for s in obj]
            if any(not R for R in sets):
                raise InputError("family members must be nonempty")
            sets.sort(key=lambda R: (min_element(R), elements_of(R)))
            return cls("explicit", sets=sets)
        kind = obj.get("kind")
        if kind == "singletons":
            return cls("singletons")
        if kind == "ap":
            return cls("ap", length=int(obj.get("length", 2)))
        if kind == "explicit":
            return cls.from_json(obj["sets"])
        raise InputError(f"unknown family kind {kind!r}")


def load_families(obj, rounds: int) -> list[Family]:
    """A single family (reused every round) or a per-round list."""
    if isinstance(obj, dict) and "rounds" in obj:
        fams = [Family.from_json(f) for f in obj["rounds"]]
        if len(fams) < rounds:
            raise InputError(f"{len(fams)} families given for {rounds} rounds")
        return fams[:rounds]
    return [Family.from_json(obj)] * rounds


# -- Bob and the constraint hook -------------------------------------------------

class GreedyBob:
    """Takes up to ``cap`` elements of Alice's set, largest first, skipping core
    points while any other choice exists (core points keep later rounds alive)."""

    def __init__(self, cap: int = 2):
        self.cap = max(1, cap)

    def reply(self, n: int, A: int, core: int, last: bool, mode: str) -> int:
        size = 1 if mode == ONE else self.cap
        if last:
            return mask_of(elements_of(A)[-size:])
        pool = elements_of(A & ~core)
        if not pool and popcount(A & core) < popcount(core):
            pool = elements_of(A)
        elif not pool:
            pool = elements_of(A)[1:] or elements_of(A)
        return mask_of(pool[-size:])

    def describe(self):
        return {"kind": "greedy", "cap": self.cap}


class ScriptedBob:
    """Replays fixed replies; each reply is intersected with Alice's set."""

    def __init__(self, replies: Sequence[Sequence[int]]):
        self.replies = [mask_of(r) for r in replies]

    def reply(self, n, A, core, last, mode):
        if n > len(self.replies):
            raise InputError("scripted Bob ran out of replies")
        F = self.replies[n - 1] & A
        if not F:
            raise InputError("scripted Bob reply misses Alice's move")
        if mode == ONE:
            F &= -F
        return F

    def describe(self):
        return {"kind": "scripted", "replies": [elements_of(r) for r in self.replies]}


def constraint_image(constraint: dict | None, collected: int, universe: int) -> int:
    """``f(∪_{i≤n} F_i)`` for the supported constraint kinds."""
    if not constraint:
        return universe
    kind = constraint.get("kind")
    if kind == "above-max":
        top = collected.bit_length() - 1
        return universe & ~((1 << (top + 1)) - 1)
    if kind == "avoid":
        return universe & ~mask_of(constraint.get("set", []))
    raise InputError(f"unknown constraint kind {kind!r}")


# -- the additive run ----------------------------------------------------------------

@dataclass
class RoundState:
    n: int
    D: int
    D_star: int
    B: int
    A: int
    F: int
    family: list
    V: int

    def summary(self) -> dict:
        return {"round": self.n, "D_size": popcount(self.D), "D_star_size": popcount(self.D_star),
                "B_size": popcount(self.B), "A_size": popcount(self.A), "F": elements_of(self.F),
                "V": elements_of(self.V)}


def default_prior(sg, rounds: int, multiplicative: bool = False) -> int | None:
    """Seed set for backtracking oracles on bounded naturals: small elements,
    so that the sums and products the rounds need stay inside the bound."""
    if not isinstance(sg, BoundedNaturals):
        return None
    B = sg.bound
    top = round(B ** (1 / (rounds + 1))) if multiplicative else B // (2 ** (rounds + 1))
    return mask_of(range(1, max(top, 2) + 1))


def _top_and_base(coloring: Coloring):
    if coloring.m == 1:
        return Coloring.named("constant:1", 2, k=1), coloring
    return coloring, None


def _choose_green(ic: InducedColorings, sg) -> tuple[int, int]:
    parts = [0] * ic.k
    for s in sg.elements:
        parts[ic.color((s,)) - 1] |= 1 << s
    live = [i for i, p in enumerate(parts) if p]
    idx = ic.oracle.choose([parts[i] for i in live])
    c = live[idx] + 1
    return parts[c - 1], c


@dataclass
class _Prefix:
    ic: InducedColorings
    G: int
    green: int
    prior: int | None = None


def _prefix(oracle, sg, coloring, prior) -> _Prefix:
    """Prior, induced colorings and the green set: shared by every search branch."""
    if prior:
        oracle.commit_in(prior, "prior")
    top, base = _top_and_base(coloring)
    ic = InducedColorings(top, oracle, sg, base=base)
    G, green = _choose_green(ic, sg)
    return _Prefix(ic, G, green, prior)


def _search(oracle_factory, prefix, body, retries: int, branch_budget: int = 16):
    """Run ``body`` on forks of a prefixed oracle, backtracking over select()
    choice points; after ``branch_budget`` failures the prefix itself is
    rebuilt with the next rotation. Returns ``(result, oracle, rotation, plan)``."""
    attempts, rotation, last = 0, 0, None
    while attempts < retries:
        base = oracle_factory(rotation)
        try:
            pre = prefix(base)
        except OracleExhausted as exc:
            attempts += 1
            last = exc
            if base.kind != BACKTRACKING:
                raise
            rotation += 1
            continue
        rng = random.Random(f"{base.seed}/{rotation}/search")
        plan: list[int] = []
        for _ in range(min(branch_budget, retries - attempts)):
            attempts += 1
            oracle = base.fork(plan)
            try:
                return body(oracle, pre), oracle, rotation, plan
            except OracleExhausted as exc:
                last = exc
                if base.kind != BACKTRACKING:
                    raise
                alts = [i for i, (r, n) in enumerate(oracle.trail) if r + 1 < n]
                if not alts:
                    break
                i = rng.choice(alts)
                plan = [r for r, _ in oracle.trail[:i]] + [oracle.trail[i][0] + 1]
        rotation += 1
    raise OracleExhausted(f"no consistent run after {attempts} attempts; last failure: {last}",
                          commitment=getattr(last, "commitment", None),
                          round_no=getattr(last, "round_no", None))


def _rounds(oracle, pre: _Prefix, sg, families, rounds, mode, constraint, bob) -> list[RoundState]:
    ic = pre.ic.fork(oracle)
    green = pre.green
    m_eff = ic.m
    D = pre.G
    V: list[int] = []
    states: list[RoundState] = []
    collected = 0
    for n in range(1, rounds + 1):
        try:
            Dstar, B = star(oracle, D, sg, depth=rounds - n)
            chosen = disjointify(oracle, families[n - 1].members_within(Dstar, sg), Dstar)
        except OracleExhausted as exc:
            exc.round_no = n
            raise
        A = 0
        for R in chosen:
            A |= R
        F = bob.reply(n, A, oracle.core, n == rounds, mode)
        if not F or F & ~A:
            raise InputError("Bob's reply must be a nonempty subset of Alice's move")
        fam = [R for R in chosen if R & F]
        Vn = 0
        for R in fam:
            Vn |= R
        V.append(Vn)
        collected |= Vn
        states.append(RoundState(n, D, Dstar, B, A, F, fam, Vn))
        if n == rounds:
            break
        edges = sumgraph_upto([elements_of(v) for v in V], m_eff, sg, strict=True)
        D_next = B & g_of(edges, green, ic, commit=False) & constraint_image(constraint, collected, oracle.universe)
        try:
            oracle.commit_in(D_next, f"D_{n + 1}")
        except OracleExhausted as exc:
            exc.round_no = n + 1
            raise
        D = D_next
    return states


def run_engine(sg, coloring: Coloring, families: Sequence[Family], oracle_factory: Callable[[int], MembershipOracle],
               rounds: int, mode: str = FIN, constraint: dict | None = None, bob=None,
               retries: int = 64, prior: int | None = None, use_prior: bool = True) -> dict:
    """Run the construction; ``oracle_factory(rotation)`` supplies a fresh oracle
    per restart. Returns a certificate dict. Raises OracleExhausted once the
    retry budget is spent (carrying the last failing commitment)."""
    if mode not in (FIN, ONE):
        raise InputError(f"mode must be 'fin' or 'one', not {mode!r}")
    if rounds < 1:
        raise InputError("rounds must be positive")
    if len(families) < rounds:
        raise InputError("need one family per round")
    bob = bob if bob is not None else GreedyBob(2)

    def prefix(oracle):
        if oracle.kind == PRINCIPAL and coloring.m > 1:
            raise UndefinedColor("principal oracles only support m = 1: the induced colorings "
                                 "are undefined on sets containing the idempotent")
        pr = None
        if use_prior and oracle.kind != PRINCIPAL:
            pr = prior if prior is not None else default_prior(sg, rounds)
        return _prefix(oracle, sg, coloring, pr)

    def body(oracle, pre):
        return _rounds(oracle, pre, sg, families, rounds, mode, constraint, bob), pre

    (states, pre), oracle, rotation, plan = _search(oracle_factory, prefix, body, retries)
    cert = {
        "version": CERT_VERSION,
        "tool": f"forge {__version__}",
        "kind": "additive",
        "semigroup": sg.descriptor(),
        "coloring": coloring.descriptor(),
        "m": coloring.m,
        "k": coloring.k,
        "mode": mode,
        "rounds": rounds,
        "structure": "sumgraph" if mode == ONE else "partite-sumgraph",
        "color": pre.green,
        "blocks": [elements_of(s.V) for s in states],
        "families": [[elements_of(R) for R in s.family] for s in states],
        "bob_replies": [elements_of(s.F) for s in states],
        "constraint": constraint,
        "trace": [s.summary() for s in states],
        "run": {"rotation": rotation, "plan": plan, "bob": bob.describe(),
                "prior": elements_of(pre.prior) if pre.prior else None,
                "family_specs": [f.descriptor() for f in families[:rounds]]},
        "oracle": {"kind": oracle.kind, "seed": oracle.seed, "log": oracle.decision_log()},
    }
    if mode == ONE:
        cert["elements"] = [min_element(s.F) for s in states]
        cert["members"] = [elements_of(s.family[0]) for s in states]
    return cert


# -- the multiplicative run -------------------------------------------------------------

def h_chains(n: int):
    """All sequences ``H_1 < ... < H_k`` of nonempty subsets of {1..n}, 1-based."""
    def rec(start):
        yield ()
        for lo in range(start, n + 1):
            for hi in range(lo, n + 1):
                inner = list(range(lo + 1, hi))
                for r in range(len(inner) + 1):
                    for mid in itertools.combinations(inner, r):
                        H = (lo, *mid, hi) if hi > lo else (lo,)
                        for rest in rec(hi + 1):
                            yield (H, *rest)
    return [c for c in rec(1) if c]


def f_of_h(H, F: Sequence[set], ys: Sequence[int], sg_mul) -> set:
    if len(H) == 1:
        return set(F[H[0] - 1])
    out = set()
    for r in range(1, len(H) + 1):
        for sub in itertools.combinations(H, r):
            p = ys[sub[0] - 1]
            for i in sub[1:]:
                p = sg_mul.op(p, ys[i - 1])
                if p is None:
                    raise InputError(f"product over {list(sub)} exceeds the bound")
            out.add(p)
    return out


def tilde_sumgraph_upto(F, ys, m, sg_add, sg_mul, strict=False) -> set[frozenset]:
    out = set()
    for chain in h_chains(len(F)):
        blocks = [sorted(f_of_h(H, F, ys, sg_mul)) for H in chain]
        out |= sumgraph_upto(blocks, m, sg_add, strict=strict)
    return out


def _divisible(Ds: int, core: int, sgM) -> bool:
    """Is there y in Ds with ``q*y in Ds`` for some core point q?"""
    for q in elements_of(core):
        image, _ = sgM.translate_mask(q, Ds & ((1 << (sgM.bound // q + 1)) - 1))
        if image & Ds:
            return True
    return False


def _pick_y(oracle, Dstar: int, B: int, sgM) -> tuple[int, int]:
    """Offer the division elements y in D_star whose quotient keeps most of B."""
    core = oracle.core
    scored = []
    for y in elements_of(Dstar):
        q = sgM.divide_mask(Dstar, y)
        if q & core:
            scored.append((y == 1, -popcount(q & B), bool(core >> y & 1), y, q))
    if not scored:
        raise DivisionExhausted("no y in D_star with D_star/y in e", commitment=Dstar)
    scored.sort()
    idx = oracle.select([q for *_, q in scored], "division element")
    *_, y, q = scored[idx]
    return y, q


def _last_y(oracle, Dstar: int) -> tuple[int, int]:
    """Final y: any point of D_star does, since D_star already sits inside the
    earlier quotients. Prefer non-core points other than 1, largest first."""
    one = 1 << 1
    pool = elements_of(Dstar & ~oracle.core & ~one) or elements_of(Dstar & ~one) or elements_of(Dstar)
    return pool[-1], Dstar


def _mult_rounds(oracle, pre: _Prefix, sgA, sgM, families, rounds):
    universe = oracle.universe
    ic = pre.ic.fork(oracle)
    D = pre.G & families[0].union(universe)
    oracle.commit_in(D, "D_1")
    F: list[set] = []
    ys: list[int] = []
    trace = []
    for n in range(1, rounds + 1):
        last = n == rounds
        try:
            # the last round divides nothing, so it needs no quotient in e
            Dstar, B = star(oracle, D, sgA, depth=rounds - n,
                            accept=None if last else (lambda B, Ds, core: _divisible(Ds, core, sgM)))
            y, quotient = _last_y(oracle, Dstar) if last else _pick_y(oracle, Dstar, B, sgM)
        except OracleExhausted as exc:
            exc.round_no = n
            raise
        members = families[n - 1].members_within(Dstar, sgA)
        if not members:
            raise OracleExhausted(f"no member of R_{n} inside D_star", commitment=Dstar, round_no=n)
        R = ([R for R in members if not (R & oracle.core)] or members)[0]
        F.append(set(elements_of(R)) | {y})
        ys.append(y)
        trace.append({"round": n, "D_size": popcount(D), "D_star_size": popcount(Dstar),
                      "B_size": popcount(B), "y": y, "R": elements_of(R)})
        if n == rounds:
            break
        edges = tilde_sumgraph_upto(F, ys, ic.m, sgA, sgM, strict=True)
        D_next = B & quotient & g_of(edges, pre.green, ic, commit=False) & families[n].union(universe)
        try:
            oracle.commit_in(D_next, f"D_{n + 1}")
        except OracleExhausted as exc:
            exc.round_no = n + 1
            raise
        D = D_next
    return F, ys, trace


def run_multiplicative_engine(sg: BoundedNaturals, coloring: Coloring, families: Sequence[Family],
                              oracle_factory, rounds: int, retries: int = 64,
                              prior: int | None = None, use_prior: bool = True) -> dict:
    """The two-operation run: blocks ``F_n = R_n ∪ {y_n}`` whose tilde sumgraph
    (sums over F(H) blocks, products of the y's) is monochromatic."""
    if not isinstance(sg, BoundedNaturals):
        raise InputError("the multiplicative run needs bounded naturals")
    if rounds < 1 or len(families) < rounds:
        raise InputError("need a positive number of rounds and one family per round")
    sgA, sgM = sg.with_op("add"), sg.with_op("mul")

    def prefix(oracle):
        if oracle.kind == PRINCIPAL:
            raise InputError("bounded naturals have no idempotent for a principal oracle")
        pr = None
        if use_prior:
            pr = prior if prior is not None else default_prior(sg, rounds, multiplicative=True)
        return _prefix(oracle, sgA, coloring, pr)

    def body(oracle, pre):
        return _mult_rounds(oracle, pre, sgA, sgM, families, rounds), pre

    ((F, ys, trace), pre), oracle, rotation, plan = _search(oracle_factory, prefix, body, retries)
    return {
        "version": CERT_VERSION,
        "tool": f"forge {__version__}",
        "kind": "multiplicative",
        "semigroup": sgA.descriptor(),
        "coloring": coloring.descriptor(),
        "m": coloring.m,
        "k": coloring.k,
        "rounds": rounds,
        "structure": "tilde-sumgraph",
        "color": pre.green,
        "blocks": [sorted(f) for f in F],
        "ys": ys,
        "trace": trace,
        "run": {"rotation": rotation, "plan": plan, "prior": elements_of(pre.prior) if pre.prior else None,
                "family_specs": [f.descriptor() for f in families[:rounds]]},
        "oracle": {"kind": oracle.kind, "seed": oracle.seed, "log": oracle.decision_log()},
    }
