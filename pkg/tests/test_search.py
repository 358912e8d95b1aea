import random

import pytest

from forge.errors import GuardRailExceeded, InputError
from forge.search import SearchParams, find_witness, forced_threshold, search_witness, space_estimate
from forge.structures import Coloring

from .oracles import schur_pair_threshold, vdw3_threshold

SCHUR = SearchParams("schur")
VDW3 = SearchParams("vdw", length=3)


@pytest.fixture(scope="module")
def pinned():
    # computed from scratch by the exhaustive oracles
    return {"schur": schur_pair_threshold(2), "vdw": vdw3_threshold(2)}


def test_oracle_values_are_stable(pinned):
    assert pinned == {"schur": 9, "vdw": 9}


def test_schur_threshold(pinned):
    res = search_witness(SCHUR, 12, 2, all_colorings=True)
    assert res.status == "forced" and res.threshold == pinned["schur"]


def test_vdw_threshold(pinned):
    res = search_witness(VDW3, 12, 2, all_colorings=True)
    assert res.status == "forced" and res.threshold == pinned["vdw"]


def test_unforced_below_threshold():
    res = forced_threshold(SCHUR, 8, 2)
    assert res.status == "unforced" and res.threshold is None
    assert len(res.extremal) == 8


def test_extremal_coloring_avoids_every_witness():
    for params in (SCHUR, VDW3):
        res = forced_threshold(params, 12, 2)
        n = res.threshold - 1
        table = {tuple(v): c for v, c in res.extremal}
        col = Coloring.from_json({"m": 1, "k": 2, "edges": [[list(v), c] for v, c in table.items()]})
        assert sorted(v[0] for v in table) == list(range(1, n + 1))
        assert find_witness(params, n, col).status == "none"


def test_single_color_is_forced_at_first_witness():
    assert forced_threshold(SCHUR, 10, 1).threshold == 3
    assert forced_threshold(VDW3, 10, 1).threshold == 3
    col = Coloring.named("constant:1", 1, 1)
    assert find_witness(SCHUR, 10, col).witness == {"a": [1, 2], "color": 1}


def test_antitone_in_colors_and_monotone_in_strength():
    for params in (SCHUR, VDW3):
        t1 = forced_threshold(params, 12, 1).threshold
        t2 = forced_threshold(params, 12, 2).threshold
        assert t1 <= t2
    assert forced_threshold(VDW3, 12, 2).threshold >= forced_threshold(SCHUR, 12, 2).threshold


def test_length_two_sumgraph_matches_pairs(pinned):
    mt = SearchParams("milliken-taylor", m=1, length=2)
    assert forced_threshold(mt, 12, 2).threshold == pinned["schur"]


def test_parity_least_witness():
    res = find_witness(SCHUR, 20, Coloring.named("mod:2", 1, 2))
    assert res.witness["a"] == [2, 4]


def test_fixed_coloring_matches_direct_scan():
    rng = random.Random(8)
    for trial in range(25):
        N = 14
        cols = {x: rng.randint(1, 2) for x in range(1, N + 1)}
        col = Coloring.from_json({"m": 1, "k": 2, "edges": [[[x], c] for x, c in cols.items()]})
        direct = next(([a, b] for a in range(1, N + 1) for b in range(a + 1, N + 1 - a)
                       if cols[a] == cols[b] == cols[a + b]), None)
        res = find_witness(SCHUR, N, col)
        assert (res.witness["a"] if res.witness else None) == direct


def test_partite_sumgraph_witness_is_monochromatic():
    params = SearchParams("partite-sumgraph", m=1, length=2, block=2)
    col = Coloring.named("random:2", 1, 2)
    res = find_witness(params, 40, col)
    assert res.status == "witness"
    b1, b2 = res.witness["blocks"]
    vals = set(b1) | set(b2) | {x + y for x in b1 for y in b2}
    assert {col(frozenset({v})) for v in vals} == {res.witness["color"]}


def test_mpc_witness():
    params = SearchParams("mpc", m=2, p=2, c=1)
    res = find_witness(params, 30, Coloring.named("constant:1", 1, 1))
    # x = (2, 1) gives {1, 2, 3}: the first valid x in lexicographic order
    assert res.witness["x"] == [2, 1] and res.witness["set"] == [1, 2, 3]


def test_coloring_arity_must_match():
    with pytest.raises(InputError):
        find_witness(SearchParams("milliken-taylor", m=2), 10, Coloring.named("parity", 1))


def test_guard_refuses_with_estimate():
    with pytest.raises(GuardRailExceeded) as exc:
        forced_threshold(SCHUR, 60, 3, max_space=1 << 20)
    assert exc.value.exit_code == 3
    assert space_estimate(SCHUR, 60, 3) > 1 << 20


def test_sharded_search_agrees():
    for params in (SCHUR, VDW3):
        one = forced_threshold(params, 12, 2, threads=1)
        two = forced_threshold(params, 12, 2, threads=3)
        assert one.threshold == two.threshold


def test_unknown_kind():
    with pytest.raises(InputError):
        SearchParams("ramsey")
