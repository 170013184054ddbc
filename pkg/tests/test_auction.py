from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpacas.auction import (
    Auction,
    AuctionConfig,
    auction_view_violations,
    run_auction,
    topology_leak_probability,
    verify_auction,
)
from tpacas.commitments import verify_opening
from tpacas.errors import BidRejected, ComparisonFailed, DomainError, OpeningRejected, SetupError
from tpacas.oracle import AuctionInstance, Bid, icasm_solve, random_instance
from tpacas.sbb import rechain
from tpacas.simnet import field_hook


def inst(m, *bids):
    return AuctionInstance(m, tuple(Bid(n, v, frozenset(s)) for n, v, s in bids))


EXAMPLE = inst(4, ("A", 10, {1, 2}), ("B", 8, {2, 3}), ("C", 5, {3, 4}))


def oracle_for(result, instance):
    accepted = [b for b in instance.bids if b.name not in result.rejected]
    plain = AuctionInstance(instance.m, tuple(accepted))
    return icasm_solve(plain, [result.tie_keys[b.name] for b in accepted], result.outcome.precision).by_name()


def fresh(group, m=3, seed=0, **kw):
    return Auction(AuctionConfig(group, m, **kw), random.Random(seed))


def test_setup_publishes_announcement_and_keys(group64):
    a = fresh(group64, m=2)
    a.setup(["A", "B"])
    kinds = [r.kind for r in a.sbb.records]
    assert kinds == ["announcement", "public-key", "public-key"]
    assert len(set(a.item_ids)) == 2
    # item ids reach agents but not notaries
    ids = set(a.item_ids)
    for notary in a.notaries:
        assert all(not (set(m.delivered.get("items", [])) & ids) for m in a.net.log if m.receiver == notary)


def test_setup_is_reproducible(group64):
    a, b = fresh(group64, seed=3), fresh(group64, seed=3)
    a.setup(["A", "B", "C"])
    b.setup(["A", "B", "C"])
    assert a.item_ids == b.item_ids
    assert [a.ident_of(n) for n in "ABC"] == [b.ident_of(n) for n in "ABC"]
    assert a._pairs == b._pairs


def test_large_item_ids_accepted(group64):
    q = group64.q
    ids = (q - 1, q - 2, q // 2 + 1)
    res = run_auction(inst(3, ("A", 3, {1, 2}), ("B", 4, {2, 3})), group=group64, item_ids=ids)
    assert res.winners == ["B"]


def test_setup_errors(group64):
    with pytest.raises(SetupError):
        AuctionConfig(group64, 2, item_ids=(5, 5))
    with pytest.raises(SetupError):
        fresh(group64).setup(["A"])
    with pytest.raises(SetupError):
        fresh(group64).setup(["A", "B"], pool=3)
    with pytest.raises(SetupError):
        run_auction(AuctionInstance(3, ()), group=group64)


def test_bid_weight_and_bundle(group64):
    a = fresh(group64, m=3)
    a.setup(["A", "B"])
    bid, bundle = a.submit_bid("A", 10, {1, 2})
    agent = a.agents["A"]
    s = agent.secrets
    assert s.w == 707
    assert len(bundle.commitments) == 3
    key = agent.keys.public
    for pair, opening, slot in zip(bundle.commitments, s.slot_opens, s.slots):
        assert verify_opening(pair.first, opening.rep.u, opening.first.help, key, group64)
        assert opening.rep.value(group64.q) == slot
    assert sorted(set(s.slots)) == sorted(a.item_ids[:2])
    assert [r.kind for r in a.sbb.records][-2:] == ["bid", "bundle"]


def test_rejected_bids_are_not_published(group64):
    a = fresh(group64, m=3)
    a.setup(["A", "B"])
    before = (len(a.sbb.records), len(a.net.log))
    with pytest.raises(BidRejected) as exc:
        a.submit_bid("A", 5, {1})
    assert exc.value.agent == "A"
    with pytest.raises(BidRejected, match="bound"):
        a.submit_bid("A", 10**30, {1, 2})
    assert (len(a.sbb.records), len(a.net.log)) == before


def test_rejection_is_reported_per_agent(group64):
    instance = inst(3, ("A", 5, {1}), ("B", 6, {1, 2}), ("C", 4, {2, 3}))
    res = run_auction(instance, group=group64)
    assert list(res.rejected) == ["A"]
    assert res.winners == ["B"]
    # B displaces C, so B pays C's threshold: 282 or 283 scaled by sqrt(2)
    assert res.payments_scaled["B"] in (399, 401)
    assert oracle_for(res, instance) == (res.winners, res.payments_scaled)
    assert res.counts["value_comparisons"] == 1


def test_single_accepted_bid_needs_no_comparisons(group64):
    res = run_auction(inst(3, ("A", 5, {1}), ("B", 6, {1, 2})), group=group64)
    assert res.winners == ["B"] and res.payments == {"B": 0}
    assert res.counts["value_comparisons"] == res.counts["item_comparisons"] == 0
    assert verify_auction(res.export_lines(), res.keys_record())


def test_sort_order(group64):
    # w values 707, 565, 500 in scrambled input order
    res = run_auction(inst(6, ("b3", 5, {5, 6}), ("b1", 10, {1, 2}), ("b2", 8, {3, 4})), group=group64, precision=2)
    assert res.order == ["b1", "b2", "b3"]
    assert res.winners == ["b1", "b2", "b3"]


def test_ties_go_to_smaller_identifier(group64):
    res = run_auction(inst(4, ("A", 7, {1, 2}), ("B", 7, {3, 4}), ("C", 7, {1, 3})), group=group64, seed=5)
    keys = res.tie_keys
    assert res.order == sorted("ABC", key=keys.get)


def test_example_outcome(group64):
    res = run_auction(EXAMPLE, group=group64, seed=4)
    assert res.winners == ["A", "C"]
    assert res.payments["C"] == 0
    # A's threshold is B's weight if A wins the tie, one step more otherwise
    expected = Fraction(800 if res.tie_keys["A"] < res.tie_keys["B"] else 801, 100)
    assert res.payments["A"] == expected
    assert oracle_for(res, EXAMPLE) == (res.winners, res.payments_scaled)


def test_disjoint_and_identical_bundles(group64):
    disjoint = inst(6, ("A", 3, {1, 2}), ("B", 4, {3, 4}), ("C", 5, {5, 6}))
    res = run_auction(disjoint, group=group64)
    assert sorted(res.winners) == ["A", "B", "C"]
    assert res.counts["item_comparisons"] == 3 * 36
    same = inst(2, ("A", 3, {1, 2}), ("B", 7, {1, 2}), ("C", 5, {1, 2}))
    assert run_auction(same, group=group64).winners == ["B"]


def test_failed_proof_aborts_with_comparison(group64):
    hook = field_hook("X", 1, step="v", payload_class="sum")
    with pytest.raises(ComparisonFailed) as exc:
        run_auction(EXAMPLE, group=group64, hooks=[hook])
    assert exc.value.comparison["kind"] == "value"
    assert exc.value.comparison["left"]["id"] != exc.value.comparison["right"]["id"]


def test_bad_w_opening_rejected(group64):
    hook = field_hook("w", 1, step="payment", payload_class="opening")
    with pytest.raises(OpeningRejected):
        run_auction(EXAMPLE, group=group64, hooks=[hook])


def test_bad_size_opening_rejected(group64):
    hook = field_hook("size", 1, step="payment", receiver="AU", payload_class="opening")
    with pytest.raises(OpeningRejected) as exc:
        run_auction(EXAMPLE, group=group64, hooks=[hook])
    assert exc.value.party is not None


def test_view_restrictions(group256):
    res = run_auction(random_instance(6, 5, random.Random(2)), group=group256, seed=2)
    assert auction_view_violations(res) == []


def test_same_seed_same_export(group64):
    a = run_auction(EXAMPLE, group=group64, seed=9).export_lines()
    b = run_auction(EXAMPLE, group=group64, seed=9).export_lines()
    assert a == b


def find(lines, kind, pred=lambda body: True):
    for pos, line in enumerate(lines[1:]):
        rec = json.loads(line)
        if rec["kind"] == kind and pred(rec["body"]):
            return pos, rec
    raise LookupError(kind)


def edit(lines, pos, rec):
    lines = list(lines)
    lines[pos + 1] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    return lines


@pytest.fixture(scope="module")
def honest(group64):
    res = run_auction(EXAMPLE, group=group64, seed=4)
    return res.export_lines(), res.keys_record()


def test_honest_export_verifies(honest):
    lines, keys = honest
    assert verify_auction(lines, keys)


def test_flipped_x_is_caught_behind_the_chain(honest):
    lines, keys = honest
    pos, rec = find(lines, "comparison-proof")
    rec["body"]["X"] = str(int(rec["body"]["X"]) ^ 1)
    edited = edit(lines, pos, rec)
    v = verify_auction(edited, keys)
    assert not v and v.index == pos and "chain" in v.reason
    v = verify_auction(rechain(edited), keys)
    assert not v and v.index == pos and "proof" in v.reason


def test_added_loser_is_caught(honest):
    lines, keys = honest
    pos, rec = find(lines, "outcome")
    loser = next(i for i in rec["body"]["order"] if i not in rec["body"]["winners"])
    rec["body"]["winners"].append(loser)
    edited = edit(lines, pos, rec)
    v = verify_auction(edited, keys)
    assert not v and v.index == pos and "chain" in v.reason
    v = verify_auction(rechain(edited), keys)
    assert not v and v.index == pos and "winner" in v.reason


def test_wrong_outcome_label_is_caught(honest):
    lines, keys = honest
    pos, rec = find(lines, "comparison-proof", lambda b: b["kind"] == "item")
    rec["body"]["outcome"] = "equal" if rec["body"]["outcome"] != "equal" else "greater"
    v = verify_auction(rechain(edit(lines, pos, rec)), keys)
    assert not v and v.index == pos


def test_dropped_proof_is_caught(honest):
    lines, keys = honest
    pos, _ = find(lines, "comparison-proof", lambda b: b["kind"] == "item")
    shortened = rechain(lines[: pos + 1] + lines[pos + 2 :])
    v = verify_auction(shortened, keys)
    assert not v


def test_negated_bundle_commitment_is_caught(honest, group64):
    lines, keys = honest
    pos, rec = find(lines, "bundle")
    first = int(rec["body"]["bundle"][0][0])
    rec["body"]["bundle"][0][0] = str(group64.p - first)
    v = verify_auction(rechain(edit(lines, pos, rec)), keys)
    assert not v and v.index == pos and "outside the group" in v.reason


def test_truncated_export(honest):
    lines, keys = honest
    v = verify_auction(lines[:-1], keys)
    assert not v and v.index == len(lines) - 2 and "truncated" in v.reason


def test_keys_file_mismatch(honest):
    lines, keys = honest
    bad = json.loads(json.dumps(keys))
    ident = next(iter(bad["keys"]))
    bad["keys"][ident] = "4"
    v = verify_auction(lines, bad)
    assert not v and v.index >= 1


def test_topology_leak_probability():
    assert topology_leak_probability(2, 3) == Fraction(1, 6)
    assert topology_leak_probability(3, 3) == Fraction(1, 7)
    assert topology_leak_probability(1, 1) == 1
    for m in range(2, 16):
        assert topology_leak_probability(2, m) == Fraction(4, 3) / 2**m
    with pytest.raises(DomainError):
        topology_leak_probability(4, 3)
    with pytest.raises(DomainError):
        topology_leak_probability(0, 3)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32))
def test_matches_oracle(group64, seed):
    rng = random.Random(seed)
    instance = random_instance(rng.randint(2, 7), rng.randint(2, 6), rng, (1, 30))
    res = run_auction(instance, group=group64, seed=seed)
    assert oracle_for(res, instance) == (res.winners, res.payments_scaled)
    assert verify_auction(res.export_lines(), res.keys_record())
