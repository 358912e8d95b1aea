import itertools

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from forge.covers import cover_predicates
from forge.games import G1, GFIN, GameSpec, SetSystem, solve_game
from forge.oracle import MembershipOracle, audit_log, disjointify, star
from forge.search import SearchParams, find_witness
from forge.semigroup import BoundedNaturals, elements_of, fs_set, index_sum, is_proper, mask_of
from forge.structures import Coloring, MPCParams, mpc_set, partite_sumgraph, sumgraph

from .oracles import brute_single_target, fold, proper_direct, sumgraph_direct

NAT = BoundedNaturals(400)
seqs = st.lists(st.integers(1, 40), min_size=1, max_size=5)


@given(seqs, st.data())
def test_index_sum_is_the_ordered_fold(seq, data):
    H = data.draw(st.sets(st.integers(0, len(seq) - 1), min_size=1))
    assert index_sum(seq, {i + 1 for i in H}, NAT) == fold(seq, sorted(H), NAT.op)


@given(seqs)
def test_properness_matches_direct(seq):
    assert is_proper(seq, NAT) == proper_direct(seq, NAT.op)


@given(seqs, st.integers(1, 3))
def test_sumgraph_matches_direct(seq, m):
    assume(is_proper(seq, NAT))
    assert sumgraph(seq, m, NAT) == sumgraph_direct(seq, m, NAT.op)


@given(seqs, st.integers(1, 3))
def test_singleton_blocks_reduce_to_sumgraph(seq, m):
    assume(is_proper(seq, NAT))
    assert partite_sumgraph([[x] for x in seq], m, NAT) == sumgraph(seq, m, NAT)


@given(seqs)
def test_fs_set_is_the_union_of_first_level(seq):
    assume(is_proper(seq, NAT))
    assert {next(iter(e)) for e in sumgraph(seq, 1, NAT)} == fs_set(seq, 1, len(seq), NAT)


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.data())
def test_mpc_size_bound_and_degenerate_cases(m, p, c, data):
    x = tuple(data.draw(st.lists(st.integers(1, 30), min_size=m, max_size=m)))
    sums, _ = mpc_set(MPCParams(m, p, c, x))
    assert len(sums) <= m * (2 * p - 1) ** (m - 1)
    if m == 1:
        assert sums == {c * x[0]}
    if p == 1:
        assert sums == {c * xi for xi in x}


@settings(max_examples=60)
@given(st.integers(0, 10_000), st.lists(st.sets(st.integers(1, 30), min_size=1), min_size=1, max_size=8))
def test_oracle_answers_form_a_consistent_fragment(seed, queries):
    U = mask_of(range(1, 31))
    o = MembershipOracle.backtracking(U, seed=seed)
    for q in queries:
        A = mask_of(q)
        a = o.query(A)
        assert o.query(U & ~A) is (not a)
        assert o.query(A) is a
    assert o.core and audit_log(o.log, U) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(20, 80))
def test_star_witness_property(seed, top):
    nat = BoundedNaturals(120)
    o = MembershipOracle.backtracking(nat.universe_mask, seed=seed)
    D = mask_of(range(1, top + 1))
    o.commit_in(D)
    Dstar, B = star(o, D, nat)
    assert o.query(Dstar) and o.query(B) and not B & ~D
    for b in elements_of(Dstar):
        for x in elements_of(B):
            s = nat.op(b, x)
            assert s is not None and D >> s & 1


@given(st.lists(st.sets(st.integers(1, 12), min_size=1, max_size=3), min_size=1, max_size=10))
def test_disjointify_is_disjoint_and_maximal(family):
    U = mask_of(range(1, 13))
    fam = [mask_of(R) for R in family]
    o = MembershipOracle.backtracking(U)
    chosen = disjointify(o, fam, U)
    used = 0
    for R in chosen:
        assert not R & used
        used |= R
    assert all(R & used for R in fam)
    assert o.query(used)


@st.composite
def systems(draw):
    u = draw(st.integers(1, 3))
    sets = st.sets(st.integers(0, u - 1), min_size=1)
    fams = draw(st.lists(st.lists(sets, min_size=1, max_size=3), min_size=1, max_size=3))
    target = draw(st.lists(st.sets(st.integers(0, u - 1)), max_size=6))
    return SetSystem.from_json({"universe": list(range(u)), "families": [[sorted(A) for A in f] for f in fams],
                                "target": [sorted(C) for C in target]})


@given(systems(), st.sampled_from([G1, GFIN]), st.integers(1, 3))
def test_solver_matches_tree_walk(system, kind, T):
    leaf = system.leaf_table()
    bob = brute_single_target(kind, system.menu_masks(T), lambda C: leaf[C])
    assert solve_game(GameSpec(kind, T, system)).winner == ("bob" if bob else "alice")


@given(st.lists(st.sets(st.integers(0, 4), min_size=1, max_size=4), min_size=1, max_size=6), st.integers(0, 6))
def test_gamma_implies_large(family, t):
    X = set(range(5))
    n = len({frozenset(U) for U in family})
    assume(t <= n)
    if cover_predicates(X, family, t=t)["is_gamma"]:
        assert cover_predicates(X, family, t=n - t)["is_large"]


@given(st.lists(st.integers(1, 2), min_size=12, max_size=12))
def test_least_pair_witness_matches_scan(colors):
    N = len(colors)
    col = Coloring.from_json({"m": 1, "k": 2, "edges": [[[i + 1], c] for i, c in enumerate(colors)]})
    direct = next(([a, b] for a, b in itertools.combinations(range(1, N + 1), 2)
                   if a + b <= N and colors[a - 1] == colors[b - 1] == colors[a + b - 1]), None)
    got = find_witness(SearchParams("schur"), N, col).witness
    assert (got["a"] if got else None) == direct
