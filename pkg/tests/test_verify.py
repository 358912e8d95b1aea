import copy

import pytest

from forge.engine import ONE, Family, run_engine, run_multiplicative_engine
from forge.errors import OracleExhausted
from forge.oracle import MembershipOracle
from forge.semigroup import BoundedNaturals
from forge.structures import Coloring
from forge.verify import verify_certificate

B200 = BoundedNaturals(200)


def run(coloring, rounds=2, seed=0, **kw):
    fams = [Family("singletons")] * rounds
    return run_engine(B200, coloring, fams,
                      lambda r: MembershipOracle.backtracking(B200.universe_mask, seed=seed, rotation=r),
                      rounds, **kw)


@pytest.fixture(scope="module")
def plain():
    return run(Coloring.named("constant:1", 1, 1))


@pytest.fixture(scope="module")
def pairs():
    return run(Coloring.named("random:3", 2, 2), seed=2)


def test_single_color_passes(plain):
    assert verify_certificate(plain)["status"] == "PASS"


def test_colliding_blocks_fail_properness(plain):
    t = copy.deepcopy(plain)
    t["blocks"] = [[1], [1]]
    t["families"] = [[[1]], [[1]]]
    t["bob_replies"] = [[1], [1]]
    report = verify_certificate(t)
    assert report["status"] == "FAIL"
    cx = report["counterexample"]
    assert cx["check"] == "proper"
    assert cx["detail"]["H1"] == [1] and cx["detail"]["H2"] == [2]


def test_pair_certificate_passes(pairs):
    report = verify_certificate(pairs)
    assert report["status"] == "PASS" and report["edges"] > 0


def test_wrong_color_fails(pairs):
    t = copy.deepcopy(pairs)
    t["color"] = 3 - t["color"]
    report = verify_certificate(t)
    assert report["counterexample"]["check"] == "monochromatic"


def test_out_of_range_color_fails(pairs):
    t = copy.deepcopy(pairs)
    t["color"] = 9
    assert verify_certificate(t)["counterexample"]["check"] == "coloring"


def test_unknown_version_fails(plain):
    t = dict(plain, version=99)
    assert verify_certificate(t)["counterexample"]["check"] == "version"


def test_missing_field_is_a_format_failure(plain):
    t = {k: v for k, v in plain.items() if k != "blocks"}
    assert verify_certificate(t)["counterexample"]["check"] == "format"


def test_block_must_be_union_of_family(plain):
    t = copy.deepcopy(plain)
    t["families"][0] = t["families"][0][:1]
    if len(t["blocks"][0]) == 1:
        t["blocks"][0] = t["blocks"][0] + [t["blocks"][0][0] + 1]
    assert verify_certificate(t)["status"] == "FAIL"


def test_reply_must_lie_in_block(plain):
    t = copy.deepcopy(plain)
    t["bob_replies"][0] = [max(B200.elements)]
    if t["bob_replies"][0][0] in t["blocks"][0]:
        t["bob_replies"][0] = [t["blocks"][1][0]]
    assert verify_certificate(t)["counterexample"]["check"] == "reply"


def test_constraint_violation_detected():
    cert = run(Coloring.named("constant:1", 1, 1), rounds=2, seed=1,
               constraint={"kind": "avoid", "set": [1, 2, 3]})
    assert verify_certificate(cert)["status"] == "PASS"
    t = copy.deepcopy(cert)
    t["constraint"] = {"kind": "avoid", "set": t["blocks"][1]}
    assert verify_certificate(t)["counterexample"]["check"] == "constraint"


def test_singleton_mode_element_tamper():
    cert = run(Coloring.named("random:4", 1, 2), rounds=2, seed=2, mode=ONE)
    assert verify_certificate(cert)["status"] == "PASS"
    t = copy.deepcopy(cert)
    t["elements"][0] += 1
    assert verify_certificate(t)["status"] == "FAIL"


def test_multiplicative_products_checked():
    nat = BoundedNaturals(1000)
    for seed in range(20):
        col = Coloring.named(f"random:{seed}", 1, 2)
        try:
            cert = run_multiplicative_engine(
                nat, col, [Family("singletons")] * 2,
                lambda r, s=seed: MembershipOracle.backtracking(nat.universe_mask, seed=s, rotation=r), 2)
        except OracleExhausted:
            continue
        report = verify_certificate(cert)
        assert report["status"] == "PASS"
        assert cert["ys"][0] * cert["ys"][1] in report["products"]
        t = copy.deepcopy(cert)
        t["ys"][1] = t["ys"][1] + 1
        assert verify_certificate(t)["status"] == "FAIL"
        return
    pytest.fail("no multiplicative run completed in 20 seeds")


def test_hand_built_certificate():
    cert = {"version": 1, "kind": "additive", "semigroup": {"naturals": {"bound": 50, "op": "add"}},
            "coloring": {"generator": "mod:2", "m": 1, "k": 2}, "m": 1, "k": 2, "mode": "fin",
            "rounds": 2, "structure": "partite-sumgraph", "color": 1,
            "blocks": [[2, 4], [8]], "families": [[[2], [4]], [[8]]], "bob_replies": [[2, 4], [8]],
            "constraint": None}
    # 2, 4, 8, 10, 12 are all even, so the claim holds exactly for the class of 2
    col = Coloring.named("mod:2", 1, 2)
    cert["color"] = col(frozenset({2}))
    assert verify_certificate(cert)["status"] == "PASS"
    cert["blocks"][1] = [9]
    cert["families"][1] = [[9]]
    cert["bob_replies"][1] = [9]
    assert verify_certificate(cert)["counterexample"]["check"] == "monochromatic"
