import itertools
import random

import pytest

from forge.covers import (LiftedOracle, coloring_from_cover, cover_predicates, lift_to_fin, refined_blocks,
                          superfilter_predicates, superfilters, upward_closed_families)
from forge.errors import InputError
from forge.oracle import MembershipOracle, import_log
from forge.semigroup import (BoundedNaturals, cyclic_group, fs_set, left_zero_semigroup, mask_of,
                             max_semigroup, min_semigroup, random_semigroup)

from .oracles import (all_families, is_idempotent_direct, is_superfilter_direct,
                      is_translation_invariant_direct)

TRIANGLE = [{1, 2}, {2, 3}, {1, 3}]


def test_triangle_cover_flags():
    f = cover_predicates({1, 2, 3}, TRIANGLE, s=2, t=1)
    assert f["is_cover"] and f["is_omega"] and f["is_gamma"] and f["is_large"]
    assert not cover_predicates({1, 2, 3}, TRIANGLE, s=3)["is_omega"]
    assert cover_predicates({1, 2, 3}, TRIANGLE, t=2)["is_large"]
    assert not cover_predicates({1, 2, 3}, TRIANGLE, t=3)["is_large"]


def test_cover_needs_proper_members():
    assert not cover_predicates({1, 2}, [{1, 2}])["is_cover"]
    assert not cover_predicates({1, 2, 3}, [{1}, {2}])["is_cover"]
    with pytest.raises(InputError):
        cover_predicates({1}, [{1}], s=-1)


def test_ascending_finite_proxy():
    assert cover_predicates({1, 2, 3}, [{1}, {1, 2}, {1, 2, 3}])["is_ascending"]
    assert not cover_predicates({1, 2, 3}, [{1}, {1, 2}])["is_ascending"]


def test_threshold_implications():
    rng = random.Random(6)
    X = set(range(5))
    for _ in range(400):
        fam = [set(rng.sample(sorted(X), rng.randint(1, 4))) for _ in range(rng.randint(1, 6))]
        fam_distinct = list({frozenset(U) for U in fam})
        n = len(fam_distinct)
        for s in (1, 2, 3):
            f = cover_predicates(X, fam, s=s)
            if f["is_omega"] and set().union(*fam) == X:
                assert f["is_cover"]
        for t in range(n + 1):
            if cover_predicates(X, fam, t=t)["is_gamma"]:
                assert cover_predicates(X, fam, t=n - t)["is_large"]


def test_max_semigroup_two_points():
    sg = max_semigroup(2)
    found = sorted(sorted(F) for F in superfilters(2))
    assert found == [[1, 2, 3], [1, 3], [2, 3]]
    flags = {tuple(sorted(F)): superfilter_predicates(sg, F) for F in superfilters(2)}
    assert all(f["is_superfilter"] and f["is_idempotent_superfilter"] for f in flags.values())
    # the family of sets containing the smaller point is not closed under translation by the larger
    assert not flags[(1, 3)]["is_translation_invariant"]
    assert flags[(2, 3)]["is_translation_invariant"] and flags[(1, 2, 3)]["is_translation_invariant"]


def test_superfilter_examples():
    sg = max_semigroup(2)
    assert not superfilter_predicates(sg, [[0, 1]])["is_superfilter"]
    assert superfilter_predicates(sg, [[0], [1], [0, 1]])["is_superfilter"]


def test_superfilter_count_and_direct_definition():
    for n in (1, 2, 3):
        fast = {frozenset(F) for F in superfilters(n)}
        direct = {F for F in all_families(n) if is_superfilter_direct(F, n)}
        assert fast == direct
        assert len(fast) == 2 ** n - 1


def test_upward_closed_count():
    # antichains of nonempty subsets: 2, 5, 19 for n = 1, 2, 3 (includes the empty family)
    assert [sum(1 for _ in upward_closed_families(n)) for n in (1, 2, 3)] == [2, 5, 19]


def test_predicates_match_direct_definitions():
    rng = random.Random(9)
    sgs = [max_semigroup(3), min_semigroup(3), cyclic_group(3), left_zero_semigroup(3)]
    sgs += [random_semigroup(rng, max_size=3) for _ in range(4)]
    for sg in sgs:
        n = sg.size
        for F in all_families(n):
            got = superfilter_predicates(sg, list(F))
            sf = is_superfilter_direct(F, n)
            assert got["is_superfilter"] == sf
            assert got["is_translation_invariant"] == (sf and is_translation_invariant_direct(F, sg.op, n))
            assert got["is_idempotent_superfilter"] == (sf and is_idempotent_direct(F, sg.op, n))


def _powers_oracle(nat, L):
    seq = [2 ** i for i in range(L)]
    tails = [mask_of(fs_set(seq, j, L, nat)) for j in range(1, L + 1)]
    entries = [{"set": sorted(fs_set(seq, j, L, nat)), "answer": "in"} for j in range(1, L + 1)]
    return MembershipOracle.scripted(nat.universe_mask, import_log(entries)), seq, tails


def test_lift_powers_of_two():
    nat = BoundedNaturals(64)
    base, seq, _ = _powers_oracle(nat, 6)
    lifted = lift_to_fin(base, seq, nat)
    assert lifted.a({1, 3}) == 5 and lifted.a({6}) == 32
    tail = [H for r in range(1, 4) for H in itertools.combinations(range(4, 7), r)]
    assert lifted.query(tail)
    assert not lifted.query([])
    assert lifted.query([(6,)])
    assert not lifted.query([(1,)])
    # hand evaluation: {a_F : F in A, n < min F} must be in for every n
    fam = [(1, 2), (5, 6), (6,)]
    expected = [{3, 48, 32}] + [{48, 32}] * 4 + [{32}]
    for n in range(6):
        img = {sum(seq[i - 1] for i in F) for F in fam if min(F) > n}
        assert img == expected[n] and mask_of(img) == lifted.image(fam, n)
    # every image holds 32, the one point all committed tails share
    assert lifted.query(fam)
    assert not lifted.query([(1, 2), (5,)])


def test_lift_family_preimages():
    nat = BoundedNaturals(64)
    base, seq, _ = _powers_oracle(nat, 4)
    lifted = LiftedOracle(base, seq, nat)
    assert lifted.lift_family([{3}]) == [[(1, 2)]]
    assert lifted.lift_family([{3, 4}]) == [[(1, 2), (3,)]]
    assert lifted.lift_family([{99}]) == []


def test_lift_rejects_missing_tails():
    nat = BoundedNaturals(64)
    base = MembershipOracle.backtracking(nat.universe_mask)
    base.commit_in(mask_of([1, 2]))
    with pytest.raises(InputError):
        lift_to_fin(base, [4, 8], nat)


def test_cover_coloring_same_and_different_blocks():
    decomposition = [[{1, 2}, {3}], [{4, 5}, {6}], [{7}, {8, 9}]]
    windows = [{1, 2, 3}, {4, 5, 6}, {7, 8, 9}]
    col, refined = coloring_from_cover(decomposition, windows)
    blocks = refined_blocks(decomposition, windows)
    assert blocks == [{1, 2}, {3, 4}, {5, 6}]
    assert col(frozenset({1, 2})) == 1
    assert col(frozenset({1, 3})) == 2 and col(frozenset({4, 6})) == 2


def test_color_one_partite_graph_needs_a_shared_block():
    decomposition = [[{1, 2}, {3}], [{4, 5}, {6}], [{7}, {8, 9}]]
    windows = [{1, 2, 3}, {4, 5, 6}, {7, 8, 9}]
    col, _ = coloring_from_cover(decomposition, windows)
    blocks = refined_blocks(decomposition, windows)
    for pick in itertools.product(*(sorted(b) for b in blocks)):
        pairs = [frozenset(p) for p in itertools.combinations(pick, 2)]
        assert not all(col(p) == 1 for p in pairs)
    # with every block refined to the same sets, color 1 is forced everywhere
    same = [[{1}, {2}]] * 3
    col2, _ = coloring_from_cover(same, [{1, 2}] * 3)
    assert col2(frozenset({1, 2})) == 1


def test_window_count_must_match():
    with pytest.raises(InputError):
        coloring_from_cover([[{1}]], [])
