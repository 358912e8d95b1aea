"""Membership oracles standing in for an idempotent ultrafilter ``e``.

An oracle keeps a *core*: the intersection of every set committed in. Any
set containing the core is in, any set missing it is out; everything else is
a genuine decision, made by the oracle's policy and then committed. The
core only shrinks and must stay nonempty, so the answers always form a
consistent filter fragment.

Partition queries may carry a finite *exception* set A (the sets
``{s in S \\ A : ...}`` of the induced colorings). The chosen class is
committed together with A. That is the finite stand-in for nonprincipality:
a nonprincipal ultrafilter does not see finitely many points.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from typing import Iterable, Sequence

from .errors import InputError, OracleExhausted, UndefinedColor
from .semigroup import elements_of, mask_of, min_element, popcount

PRINCIPAL = "principal"
SCRIPTED = "scripted"
BACKTRACKING = "backtracking"


class MembershipOracle:
    def __init__(self, universe: int, kind: str, *, element=None, script=None, seed=0,
                 rotation=0, prior: int | None = None):
        if kind not in (PRINCIPAL, SCRIPTED, BACKTRACKING):
            raise InputError(f"unknown oracle kind {kind!r}")
        self.universe = universe
        self.kind = kind
        self.element = element
        self.seed = seed
        self.rotation = rotation
        self.core = universe
        self.in_sets: list[int] = []
        self.log: list[dict] = []
        self._answers: dict[int, bool] = {}
        self._replay: deque | None = None
        self._rng = random.Random(f"{seed}/{rotation}")
        self.jitter = 0.0 if rotation == 0 else 0.4
        # depth-first search over select() choice points: forced ranks and the trail taken
        self.plan: list[int] = []
        self.trail: list[tuple[int, int]] = []
        if kind == PRINCIPAL:
            self.core = 1 << element
        elif kind == SCRIPTED:
            script = list(script or ())
            choices = [e for e in script if "set" not in e]
            if choices:
                # a recorded log: replay its choice points in order
                self._replay = deque(choices)
            else:
                # a plain decision list: its answers are commitments from the start
                for e in script:
                    self.commit_in(e["set"] if e["answer"] else universe & ~e["set"], "scripted decision")
        if prior is not None and kind == BACKTRACKING:
            self.commit_in(prior)

    # -- constructors --------------------------------------------------------

    @classmethod
    def principal(cls, sg, e: int) -> "MembershipOracle":
        if sg.op(e, e) != e:
            raise InputError(f"principal oracle needs an idempotent, {e}*{e} != {e}")
        return cls(sg.universe_mask, PRINCIPAL, element=e)

    @classmethod
    def scripted(cls, universe: int, entries: Iterable[dict]) -> "MembershipOracle":
        return cls(universe, SCRIPTED, script=list(entries))

    @classmethod
    def backtracking(cls, universe: int, seed: int = 0, rotation: int = 0, prior: int | None = None):
        return cls(universe, BACKTRACKING, seed=seed, rotation=rotation, prior=prior)

    # -- bookkeeping ---------------------------------------------------------

    def _check(self, A: int):
        if A & ~self.universe:
            raise InputError("set is not contained in the oracle universe")

    def _record(self, A: int, answer: bool):
        if A in self._answers:
            return
        self._answers[A] = answer
        self.log.append({"set": A, "answer": answer})

    def commit_in(self, A: int, what: str = "commitment"):
        """Assert ``A in e``; raises OracleExhausted when that is inconsistent."""
        self._check(A)
        if self._answers.get(A) is False or not (A & self.core):
            raise OracleExhausted(f"{what} contradicts earlier decisions", commitment=A)
        if self.core & ~A:
            self.core &= A
            self.in_sets.append(A)
        self._record(A, True)

    # -- queries -------------------------------------------------------------

    def query(self, A: int) -> bool:
        self._check(A)
        if A in self._answers:
            return self._answers[A]
        if not (self.core & ~A):
            self._record(A, True)
            return True
        if not (self.core & A):
            self._record(A, False)
            return False
        rest = self.universe & ~A
        idx = self.choose([A, rest])
        return idx == 0

    def choose(self, parts: Sequence[int], exception: int = 0) -> int:
        """Partition query. ``parts`` are pairwise disjoint and, with ``exception``,
        cover a set in e. Returns the index of the part committed in; every other
        part ends up out."""
        whole = exception
        for p in parts:
            if p & whole:
                raise InputError("partition parts overlap")
            whole |= p
        if self.core & ~whole:
            raise InputError("partitioned set is not in e")
        live = [i for i, p in enumerate(parts) if p & self.core & ~exception]
        if self._replay is not None:
            entry = self._next_choice("partition", len(parts))
            idx = entry["chosen"]
        elif len(live) == 1:
            idx = live[0]
        elif self.kind == PRINCIPAL:
            raise UndefinedColor("principal oracle: the idempotent lies in the excluded set")
        elif self.kind == SCRIPTED:
            raise OracleExhausted("partition not resolved by the script",
                                  commitment=exception | (parts[0] if parts else 0))
        else:
            idx = self._policy(parts, live)
        chosen = parts[idx] | exception
        self.commit_in(chosen, "partition choice")
        for j, p in enumerate(parts):
            if j != idx:
                self._record(p, False)
        self.log.append({"partition": list(parts), "exception": exception, "chosen": idx})
        return idx

    def _next_choice(self, key, n):
        if not self._replay:
            raise OracleExhausted("replay log ran out of choice points")
        entry = self._replay.popleft()
        size = len(entry["partition"]) if key == "partition" and key in entry else entry.get(key)
        if key not in entry or size != n or not 0 <= entry["chosen"] < n:
            raise OracleExhausted(f"replay log diverged at a {key} choice")
        return entry

    def _policy(self, parts, live):
        if not live:
            # core sits inside the exception: all classes tie, fall back to size
            live = [i for i, p in enumerate(parts) if p]
            score = {i: popcount(parts[i]) for i in live}
        else:
            score = {i: popcount(parts[i] & self.core) for i in live}
        if self.jitter and self._rng.random() < self.jitter:
            return self._rng.choice(live)
        best = max(score.values())
        ties = [i for i in live if score[i] == best]
        return min(ties, key=lambda i: min_element(parts[i]))

    def select(self, candidates: Sequence[int], what: str = "selection") -> int:
        """Commit one of ``candidates`` in (a choice point of the construction).

        Backtracking oracles take the first consistent candidate unless their
        search plan forces a later one; replaying oracles take the recorded one."""
        consistent = [i for i, c in enumerate(candidates) if c & self.core]
        if not consistent:
            raise OracleExhausted(f"no consistent {what}",
                                  commitment=candidates[0] if candidates else 0)
        if self._replay is not None:
            pick = self._next_choice("select", len(candidates))["chosen"]
        else:
            depth = len(self.trail)
            rank = self.plan[depth] if depth < len(self.plan) else 0
            if rank >= len(consistent):
                raise OracleExhausted(f"search plan exhausted at {what}")
            self.trail.append((rank, len(consistent)))
            pick = consistent[rank]
        self.commit_in(candidates[pick], what)
        self.log.append({"select": len(candidates), "chosen": pick, "what": what})
        return pick

    def fork(self, plan: Sequence[int] = ()) -> "MembershipOracle":
        """An independent copy of the current state that follows ``plan`` at its
        next select() choice points."""
        twin = object.__new__(MembershipOracle)
        twin.__dict__.update(self.__dict__)
        twin.in_sets = list(self.in_sets)
        twin.log = list(self.log)
        twin._answers = dict(self._answers)
        twin._rng = random.Random()
        twin._rng.setstate(self._rng.getstate())
        twin.plan = list(plan)
        twin.trail = []
        return twin

    # -- serialisation -------------------------------------------------------

    def decision_log(self) -> list[dict]:
        return export_log(self.log)

    def __repr__(self):
        return f"MembershipOracle(kind={self.kind!r}, core_size={popcount(self.core)})"


def export_log(log: Sequence[dict]) -> list[dict]:
    out = []
    for e in log:
        if "set" in e:
            out.append({"set": elements_of(e["set"]), "answer": "in" if e["answer"] else "out"})
        elif "select" in e:
            out.append(dict(e))
        else:
            out.append({"partition": [elements_of(p) for p in e["partition"]],
                        "exception": elements_of(e["exception"]), "chosen": e["chosen"]})
    return out


def import_log(entries: Sequence[dict]) -> list[dict]:
    out = []
    for e in entries:
        if "set" in e:
            if e["answer"] not in ("in", "out"):
                raise InputError(f"bad answer {e['answer']!r}")
            out.append({"set": mask_of(e["set"]), "answer": e["answer"] == "in"})
        elif "partition" in e:
            out.append({"partition": [mask_of(p) for p in e["partition"]],
                        "exception": mask_of(e.get("exception", [])), "chosen": int(e["chosen"])})
        elif "select" in e:
            out.append({"select": int(e["select"]), "chosen": int(e["chosen"]), "what": e.get("what", "")})
        else:
            raise InputError("log entry needs 'set', 'partition' or 'select'")
    return out


# -- the operators of the main construction ---------------------------------

def _star_of(D: int, B: int, sg) -> int:
    """``{b in D : b*x in D for all x in B}``."""
    out = D
    for x in elements_of(B):
        out &= sg.preimage_mask(x, D, side="right")
        if not out:
            break
    return out


def _chain(p: int, L: int, allowed: int, sg) -> int | None:
    """Mask of ``p, p+p, ..`` (L terms) if all of them lie in ``allowed``."""
    out, x = 0, p
    for j in range(L):
        if x is None or not (allowed >> x & 1) or out >> x & 1:
            return None
        out |= 1 << x
        if j + 1 < L:
            x = sg.op(x, p)
    return out


def _shift(b: int, chain: int, sg) -> int | None:
    out = 1 << b
    for x in elements_of(chain)[:-1]:
        v = sg.op(b, x)
        if v is None:
            return None
        out |= 1 << v
    return out


def star(oracle: MembershipOracle, D: int, sg, depth: int | None = None, caps=(3, 5, 8, 16),
         max_points: int = 16, max_anchors: int = 4, accept=None):
    """Return ``(D_star, B)`` with B in e, B ⊆ D and ``D_star = {b in D : b+B ⊆ D}`` in e.

    A principal oracle at e uses ``B = {e}``. Otherwise every candidate B
    contains a core point p and lies inside ``B_p = {x in D : p+x in D}``, so
    p ends up in both B and D_star. Candidates, in the order offered to the
    oracle: the chain ``p, 2p, ..`` (a finite stand-in for an idempotent,
    long enough for ``depth`` more rounds) alone and with shifted copies
    ``b + chain`` that leave later rounds a non-core element; then p with
    the smallest few elements of B_p; then committed sets cut down to D.
    ``accept(B, D_star, core_after)`` can veto candidates a caller cannot use.
    """
    if not oracle.query(D):
        raise InputError("star needs a set in e")
    K = oracle.core
    cands = []  # (witness B, D_star)
    seen = set()

    def add(B):
        if B and B not in seen:
            seen.add(B)
            Ds = _star_of(D, B, sg)
            if Ds & K & B and (accept is None or accept(B, Ds, Ds & K & B)):
                cands.append((B, Ds))

    if oracle.kind == PRINCIPAL:
        add(K & D)
    else:
        plain = []
        for p in elements_of(K & D)[:max_points]:
            Bp = D & sg.preimage_mask(p, D, side="left")
            if not (Bp >> p & 1):
                continue
            others = elements_of(Bp & ~(1 << p))
            plain.extend((1 << p) | mask_of(others[:cap - 1]) for cap in caps)
            lengths = [depth + 1, depth + 2] if depth is not None else [2, 3, 4]
            for L in lengths:
                C = _chain(p, L, Bp, sg)
                if C is None:
                    continue
                add(C)
                if L < 2:
                    continue
                anchors = []
                for b in others:
                    if C >> b & 1:
                        continue
                    sh = _shift(b, C, sg)
                    if sh is not None and not (sh & ~Bp):
                        anchors.append(sh)
                        if len(anchors) == max_anchors:
                            break
                for sh in anchors:
                    add(C | sh)
                for s1, s2 in itertools.combinations(anchors[:3], 2):
                    add(C | s1 | s2)
        for B in plain:
            add(B)
        for C in sorted({C & D for C in oracle.in_sets}, key=lambda c: -popcount(c))[:4]:
            add(C)
    if not cands:
        raise OracleExhausted("star: no witness B keeps D_star in e", commitment=D)
    idx = oracle.select([B & Ds for B, Ds in cands], "star witness")
    B, Dstar = cands[idx]
    oracle.commit_in(B, "star witness B")
    oracle.commit_in(Dstar, "D_star")
    return Dstar, B


def disjointify(oracle: MembershipOracle, family: Sequence[int], D: int) -> list[int]:
    """Maximal pairwise disjoint subfamily inside D whose union is committed in.

    First-fit in the given order; if that union misses the core, members
    meeting the core are placed first and the greedy pass is repeated."""
    inside = [R for R in family if R and not (R & ~D)]
    if not inside:
        raise OracleExhausted("no member of the family lies inside D", commitment=D)

    def greedy(order):
        used, chosen = 0, []
        for R in order:
            if not (R & used):
                chosen.append(R)
                used |= R
        return chosen, used

    chosen, union = greedy(inside)
    if not (union & oracle.core):
        K = oracle.core
        chosen, union = greedy([R for R in inside if R & K] + [R for R in inside if not R & K])
    oracle.commit_in(union, "union of disjoint subfamily")
    return chosen


def is_large_for(oracle: MembershipOracle, family: Sequence[int]) -> bool:
    sets = oracle.in_sets if oracle.in_sets else [oracle.core]
    return all(any(R and not (R & ~A) for R in family) for A in sets)


# -- trace audit --------------------------------------------------------------

def audit_log(log: Sequence[dict], universe: int) -> list[str]:
    """Check complement law, upward closure and partition regularity on a log
    (internal mask form). Returns human-readable violations, empty if clean."""
    answers: dict[int, bool] = {}
    problems = []
    for e in log:
        if "set" in e:
            prev = answers.get(e["set"])
            if prev is not None and prev != e["answer"]:
                problems.append(f"set {elements_of(e['set'])} answered both ways")
            answers[e["set"]] = e["answer"]
    ins = [A for A, a in answers.items() if a]
    outs = [A for A, a in answers.items() if not a]
    out_set = set(outs)
    for A in ins:
        if (universe & ~A) in answers and answers[universe & ~A]:
            problems.append(f"set {elements_of(A)} and its complement both in")
        if not A:
            problems.append("empty set answered in")
    for A in ins:
        for O in out_set:
            if not (A & ~O):
                problems.append(f"upward closure: {elements_of(O)} out but contains in-set {elements_of(A)}")
    for e in log:
        if "partition" in e:
            parts = list(e["partition"])
            idx = e["chosen"]
            status = []
            for j, p in enumerate(parts):
                eff = p | e["exception"] if j == idx else p
                status.append(answers.get(eff))
            if status.count(True) != 1 or any(s is not False for j, s in enumerate(status) if j != idx):
                problems.append(f"partition regularity violated: statuses {status}")
    return problems
