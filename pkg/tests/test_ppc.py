from __future__ import annotations

import json
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpacas.commitments import CommittedShare, commit
from tpacas.errors import DomainError, ProtocolError
from tpacas.fuzz import Target, tamper_trial, targets
from tpacas.group import GroupParams, mod_inv, toy_group
from tpacas.ppc import (
    CORE_MESSAGES,
    PPC_MESSAGES,
    ZKP_MESSAGES,
    Outcome,
    PpcRun,
    Role,
    decide,
    legacy_vc_run,
    worked_example_run,
    plain_outcome,
    ppc_run,
    reconstruct,
    view_violations,
    zkp_equation_holds,
    zkp_verify,
)
from tpacas.simnet import PayloadClass, TamperHook, field_hook

P = toy_group()


def test_decide_rule():
    assert decide(300, 299, P) is Outcome.GREATER
    assert decide(0, 0, P) is Outcome.EQUAL
    assert decide(296, 0, P) is Outcome.GREATER  # (q - 1) / 2
    assert decide(297, 0, P) is Outcome.LESS
    assert decide(592, 1, P) is Outcome.EQUAL


def test_worked_example_replay():
    t = worked_example_run()
    assert (t.x_sum, t.y_sum, t.outcome) == (300, 299, Outcome.GREATER)
    z = t.zkp
    assert (z.d_r1, z.d_r1p, z.d_r2, z.d_r2p) == (66, 24, 72, 90)
    assert (z.h1, z.h2, z.c) == (90, 431, 899)
    assert t.verify()
    # factors as displayed: 410 * 33 * 317 * 682
    u1, u2, v1, v2 = z.lifted
    assert (u1, mod_inv(u2, P.p), v1, mod_inv(v2, P.p)) == (410, 33, 317, 682)


def test_worked_example_intermediate_values():
    t = worked_example_run(with_proof=False)
    relays = [m.payload["value"] for m in t.log if m.step == "iv"]
    assert relays == [3 * 50 % P.q, 3 * 544 % P.q]
    shares = [(m.payload["share"], m.payload["help"], m.payload["d"]) for m in t.log if m.step == "ii"]
    assert shares == [(350, 11, 2), (250, 4, 2), (300, 12, 3), (299, 15, 3)]


def test_verification_equation_with_displayed_values():
    assert pow(3, 6, 1187) * pow(9, 90, 1187) * pow(27, 431, 1187) % 1187 == 899
    assert zkp_equation_holds(899, 300, 299, 90, 431, 9, 27, P)
    assert not zkp_equation_holds(899, 301, 299, 90, 431, 9, 27, P)


def test_message_counts():
    run = PpcRun(P, random.Random(1))
    t = run.compare(3, 9)
    assert t.message_count == PPC_MESSAGES == 12
    steps = [m.step for m in t.log]
    assert [steps.count(s) for s in ("i", "ii", "iii", "iv", "v")] == [2, 4, 2, 2, 2]
    run.prove()
    assert t.message_count - PPC_MESSAGES == ZKP_MESSAGES == 16
    assert CORE_MESSAGES == 6


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 11), st.integers(0, 11), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32)
)
def test_outcome_matches_plain_comparison(x, y, d_a, d_b, seed):
    t = ppc_run(x, y, P, random.Random(seed), d_a=d_a, d_b=d_b)
    assert t.outcome is plain_outcome(x, y)
    assert t.verify()


def test_equal_values_give_equal():
    for seed in range(20):
        rng = random.Random(seed)
        v = rng.randrange(12)
        assert ppc_run(v, v, P, rng, with_proof=False).outcome is Outcome.EQUAL


def test_operand_and_multiplier_bounds():
    run = PpcRun(P, random.Random(0))
    with pytest.raises(DomainError):
        run.compare(12, 0)
    with pytest.raises(DomainError):
        run.compare(0, -1)
    with pytest.raises(DomainError):
        run.compare(1, 2, d_a=6)
    with pytest.raises(DomainError):
        run.compare(1, 2, d_b=0)
    assert run.net.log == []


def test_prove_needs_a_comparison():
    with pytest.raises(ProtocolError):
        PpcRun(P, random.Random(0)).prove()


def test_unit_multipliers_give_plain_product():
    rng = random.Random(8)
    run = PpcRun(P, rng)
    t = run.compare(5, 2, d_a=1, d_b=1)
    z = run.prove()
    a, b = t.committed_a, t.committed_b
    plain = a.first.c * mod_inv(b.first.c, P.p) * a.second.c * mod_inv(b.second.c, P.p) % P.p
    assert z.c == plain


def test_x_tamper_rejected():
    hook = field_hook("X", 1, step="v", payload_class="sum")
    t = ppc_run(7, 6, P, random.Random(2), hooks=[hook])
    assert t.tampered
    assert not t.verify()


def test_tampered_h_values_rejected():
    t = worked_example_run()
    keys = (9, 27)
    assert not zkp_verify(replace(t.zkp, h1=91), 300, 299, *keys, P)
    assert not zkp_verify(replace(t.zkp, h2=(431 + 5) % 593), 300, 299, *keys, P)
    # a consistent forgery of H1 still fails the equation
    forged = replace(t.zkp, d_r1=67, h1=91)
    assert not zkp_verify(forged, 300, 299, *keys, P)


@pytest.mark.parametrize("target", targets(P), ids=lambda t: t.describe().replace(" ", "-"))
def test_every_field_is_covered_by_the_proof(target: Target):
    rng = random.Random(target.describe())
    for _ in range(5):
        assert not tamper_trial(P, rng, target).verified


def test_split_multiplier_is_outside_the_proof():
    # One notary blinding with a different d stays consistent with the
    # commitments half by half, so the proof passes even though the
    # outcome is wrong. The proof binds X + Y, not equal multipliers.
    hook = field_hook("d", 1, step="ii", payload_class="share", limit=1)
    t = ppc_run(4, 9, P, random.Random(3), d_a=2, d_b=2, hooks=[hook])
    assert t.tampered and t.verify()
    assert t.outcome is Outcome.GREATER


def test_view_restrictions_hold():
    for seed in range(30):
        rng = random.Random(seed)
        t = ppc_run(rng.randrange(12), rng.randrange(12), P, rng)
        assert view_violations(t) == []
    cs = t.view(Role.COORDINATOR)
    assert {m.payload_class for m in cs.messages} == {
        PayloadClass.COMMITMENT, PayloadClass.SUM, PayloadClass.HELP_RELAY, PayloadClass.LIFT
    }


def test_coordinator_never_sees_raw_multipliers():
    t = worked_example_run()
    for msg in t.view(Role.COORDINATOR).messages:
        assert "d" not in msg.delivered


@pytest.mark.parametrize(
    "roles, expect",
    [
        ((Role.NOTARY_A1, Role.NOTARY_A2), {"x"}),
        # Bob's notaries also receive u1 and v1 in step iii
        ((Role.NOTARY_B1, Role.NOTARY_B2), {"x", "y"}),
        ((Role.COORDINATOR, Role.NOTARY_A1, Role.NOTARY_B1), {"x", "y"}),
        ((Role.COORDINATOR, Role.NOTARY_A2, Role.NOTARY_B1), {"x", "y"}),
        ((Role.COORDINATOR, Role.NOTARY_A1, Role.NOTARY_B2), {"x", "y"}),
        ((Role.COORDINATOR, Role.NOTARY_A2, Role.NOTARY_B2), {"x", "y"}),
        ((Role.COORDINATOR,), set()),
        ((Role.NOTARY_A1,), set()),
        ((Role.NOTARY_A1, Role.NOTARY_B1), set()),
    ],
)
def test_collusion_reconstruction(roles, expect):
    for seed in range(10):
        rng = random.Random(seed)
        x, y = rng.randrange(12), rng.randrange(12)
        t = ppc_run(x, y, P, rng)
        got = reconstruct(t, roles)
        assert set(got) == expect
        assert all(got[k] == {"x": x, "y": y}[k] for k in got)


def test_legacy_leaks_difference():
    t = legacy_vc_run(7, 6, P, random.Random(0))
    assert t.visible_sum == 1 and t.outcome is Outcome.GREATER
    assert len(t.log) == 8
    assert legacy_vc_run(4, 4, P, random.Random(1)).outcome is Outcome.EQUAL
    rng = random.Random(5)
    for _ in range(1000):
        x, y = rng.randrange(297), rng.randrange(297)
        assert legacy_vc_run(x, y, P, rng).visible_sum == (x - y) % P.q
    with pytest.raises(DomainError):
        legacy_vc_run(297, 0, P, rng)


def test_transcript_export():
    t = worked_example_run()
    lines = t.export_lines()
    header, result = json.loads(lines[0]), json.loads(lines[-1])
    assert header["seed"] == "paper"
    assert header["roles"]["Coordinator"] == "Coordinator"
    assert len(lines) == 2 + 28
    assert result["zkp"]["C"] == "899" and result["outcome"] == "greater"
    steps = {json.loads(line)["step"] for line in lines[1:-1]}
    assert steps == {"i", "ii", "iii", "iv", "v", "zkp-1", "zkp-2"}


def test_same_seed_same_transcript():
    a = ppc_run(3, 8, P, random.Random(42), seed=42).export_lines()
    b = ppc_run(3, 8, P, random.Random(42), seed=42).export_lines()
    assert a == b


def test_larger_group_commitments_verify():
    params = GroupParams(P.p, P.q, P.g, 1)
    t = ppc_run(100, 250, params, random.Random(0))
    assert t.outcome is Outcome.LESS and t.verify()
    assert commit(0, 0, 9, params).c == 1


def test_negated_commitment_is_refused():
    # p - c lifts to the same value under an even exponent, so membership
    # in the order-q subgroup has to be checked separately
    def negate(payload):
        payload["first"] = P.p - payload["first"]
        return payload

    hook = TamperHook(lambda m: m.step == "i" and m.payload.get("value") == "y", negate, limit=1)
    with pytest.raises(ProtocolError, match="not a group element"):
        ppc_run(3, 9, P, random.Random(0), d_a=2, d_b=2, hooks=[hook])
    t = worked_example_run()
    flipped = replace(t.committed_b, first=CommittedShare(P.p - t.committed_b.first.c))
    assert t.verify() and not replace(t, committed_b=flipped).verify()
