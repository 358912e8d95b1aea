import pytest

from forge.engine import (FIN, ONE, Family, GreedyBob, InducedColorings, ScriptedBob, constraint_image,
                          g_of, h_chains, induce_colorings, load_families, run_engine,
                          run_multiplicative_engine)
from forge.errors import InputError, OracleExhausted, UndefinedColor
from forge.oracle import MembershipOracle, audit_log, import_log
from forge.semigroup import BoundedNaturals, elements_of, mask_of, max_semigroup
from forge.structures import Coloring
from forge.verify import verify_certificate

from .oracles import certificate_core, chains

B200 = BoundedNaturals(200)


def backtracking(sg, seed=0):
    return lambda rotation: MembershipOracle.backtracking(sg.universe_mask, seed=seed, rotation=rotation)


def singletons(n):
    return [Family("singletons")] * n


def test_single_color_always_verifies():
    for m in (1, 2):
        for mode in (FIN, ONE):
            col = Coloring.named("constant:1", m, 1)
            cert = run_engine(B200, col, singletons(2), backtracking(B200), 2, mode=mode)
            assert verify_certificate(cert)["status"] == "PASS"


def test_random_seed7_three_rounds():
    col = Coloring.named("random:7", 1, 2)
    cert = run_engine(B200, col, singletons(3), backtracking(B200), 3)
    report = verify_certificate(cert)
    assert report["status"] == "PASS"
    assert len(cert["blocks"]) == 3 and report["edges"] > 0
    assert audit_log(import_log(cert["oracle"]["log"]), B200.universe_mask) == []


def test_parity_pairs_two_rounds():
    col = Coloring.named("parity", 2)
    cert = run_engine(B200, col, singletons(2), backtracking(B200, 1), 2)
    report = verify_certificate(cert)
    assert report["status"] == "PASS"
    # parity of a pair sum is constant across the structure
    assert cert["structure"] == "partite-sumgraph"
    colors = {(a + b) % 2 for a in cert["blocks"][0] for b in cert["blocks"][1]}
    assert len(colors) == 1


def test_singleton_mode_certificate():
    col = Coloring.named("random:4", 1, 2)
    cert = run_engine(B200, col, singletons(3), backtracking(B200, 2), 3, mode=ONE)
    assert cert["structure"] == "sumgraph"
    assert all(len(b) == 1 for b in cert["blocks"])
    assert [b[0] for b in cert["blocks"]] == cert["elements"]
    assert verify_certificate(cert)["status"] == "PASS"


def test_blocks_are_bob_replies_inside_alice_moves():
    col = Coloring.named("random:11", 1, 2)
    cert = run_engine(B200, col, [Family("ap", length=2)] * 2, backtracking(B200, 3), 2)
    for fam, V, F in zip(cert["families"], cert["blocks"], cert["bob_replies"]):
        assert sorted(x for R in fam for x in R) == V
        assert set(F) <= set(V)
        assert all(set(R) & set(F) for R in fam)
        assert all(len(R) == 2 for R in fam)
    assert verify_certificate(cert)["status"] == "PASS"


def test_replay_reproduces_certificate():
    col = Coloring.named("random:7", 2, 2)
    cert = run_engine(B200, col, singletons(2), backtracking(B200, 5), 2)
    log = import_log(cert["oracle"]["log"])
    again = run_engine(B200, col, singletons(2), lambda r: MembershipOracle.scripted(B200.universe_mask, log), 2)
    assert certificate_core(again) == certificate_core(cert)
    assert again["oracle"]["log"] == cert["oracle"]["log"]


def test_principal_rejects_pairs():
    sg = max_semigroup(4)
    col = Coloring.named("random:1", 2, 2)
    with pytest.raises(UndefinedColor):
        run_engine(sg, col, singletons(1), lambda r: MembershipOracle.principal(sg, 0), 1)


def test_principal_excluded_idempotent_is_undefined():
    sg = max_semigroup(4)
    ic = InducedColorings(Coloring.named("random:1", 2, 2), MembershipOracle.principal(sg, 0), sg)
    with pytest.raises(UndefinedColor):
        ic.color({0})


def test_induce_colorings_single_color():
    nat = BoundedNaturals(12)
    o = MembershipOracle.backtracking(nat.universe_mask)
    levels = induce_colorings(Coloring.named("constant:1", 3, 1), o, nat)
    assert len(levels) == 2
    assert all(c == 1 for lvl in levels for c in lvl.values())


def test_induce_colorings_parity_with_evens_in():
    nat = BoundedNaturals(10)
    U = nat.universe_mask
    o = MembershipOracle.scripted(U, import_log([{"set": [2, 4, 6, 8, 10], "answer": "in"}]))
    chi2 = Coloring.named("parity", 2)
    (chi1,) = induce_colorings(chi2, o, nat, sets=[(3,)])
    assert chi1[(3,)] == chi2(frozenset({3, 4}))
    assert chi1[(3,)] != chi2(frozenset({3, 5}))


def test_g_of_examples():
    nat = BoundedNaturals(8)
    U = nat.universe_mask
    chi = Coloring.named("parity", 2)
    o = MembershipOracle.backtracking(U)
    ic = InducedColorings(chi, o, nat)
    assert g_of([], 1, ic) == U
    const = InducedColorings(Coloring.named("constant:1", 2, 1), o, nat)
    assert g_of([{3}], 1, const) == U & ~mask_of([3])
    green = chi(frozenset({2, 4}))
    got = g_of([{2}], green, ic, commit=False)
    assert elements_of(got) == [s for s in range(1, 9) if s != 2 and chi(frozenset({2, s})) == green]


def test_constraint_avoid_is_respected():
    col = Coloring.named("random:5", 1, 2)
    constraint = {"kind": "avoid", "set": list(range(1, 9))}
    cert = run_engine(B200, col, singletons(3), backtracking(B200, 4), 3, constraint=constraint)
    later = [x for V in cert["blocks"][1:] for x in V]
    assert not set(later) & set(range(1, 9))
    assert verify_certificate(cert)["status"] == "PASS"


def test_constraint_image():
    U = mask_of(range(1, 11))
    assert elements_of(constraint_image({"kind": "above-max"}, mask_of([2, 5]), U)) == list(range(6, 11))
    assert constraint_image(None, 7, U) == U
    with pytest.raises(InputError):
        constraint_image({"kind": "nope"}, 0, U)


def test_scripted_bob():
    col = Coloring.named("constant:1", 1, 1)
    bob = ScriptedBob([[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]])
    cert = run_engine(B200, col, singletons(1), backtracking(B200), 1, bob=bob)
    assert cert["bob_replies"][0] and set(cert["bob_replies"][0]) <= set(range(1, 13))
    with pytest.raises(InputError):
        ScriptedBob([[1]]).reply(2, 1, 0, False, FIN)


def test_greedy_bob_cap():
    A = mask_of([3, 5, 9, 12])
    assert elements_of(GreedyBob(2).reply(1, A, mask_of([3]), False, FIN)) == [9, 12]
    assert elements_of(GreedyBob(2).reply(1, A, 0, True, ONE)) == [12]


def test_exhaustion_carries_commitment():
    col = Coloring.named("random:2", 1, 2)
    fam = [Family.from_json([[1, 2]])] * 2
    with pytest.raises(OracleExhausted) as exc:
        run_engine(B200, col, fam, backtracking(B200), 2, retries=4)
    assert exc.value.commitment is not None


def test_bad_arguments():
    col = Coloring.named("constant:1", 1, 1)
    with pytest.raises(InputError):
        run_engine(B200, col, singletons(1), backtracking(B200), 1, mode="both")
    with pytest.raises(InputError):
        run_engine(B200, col, singletons(1), backtracking(B200), 2)
    with pytest.raises(InputError):
        load_families({"rounds": [{"kind": "singletons"}]}, 2)


def test_h_chains_match_direct():
    for n in (1, 2, 3, 4):
        direct = {tuple(tuple(i + 1 for i in H) for H in ch) for m in range(1, n + 1) for ch in chains(n, m)}
        assert set(h_chains(n)) == direct and len(h_chains(n)) == len(direct)


def test_multiplicative_single_color():
    nat = BoundedNaturals(500)
    col = Coloring.named("constant:1", 1, 1)
    cert = run_multiplicative_engine(nat, col, singletons(2), backtracking(nat), 2)
    assert verify_certificate(cert)["status"] == "PASS"


def test_multiplicative_runs_verify_when_they_complete():
    nat = BoundedNaturals(1000)
    done = 0
    for seed in range(12):
        col = Coloring.named(f"random:{seed}", 1, 2)
        try:
            cert = run_multiplicative_engine(nat, col, singletons(2), backtracking(nat, seed), 2)
        except OracleExhausted:
            continue
        done += 1
        report = verify_certificate(cert)
        assert report["status"] == "PASS", report
        assert len(cert["ys"]) == 2 and cert["ys"][0] * cert["ys"][1] in report["products"]
    assert done >= 1
