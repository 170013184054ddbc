"""Single-field tamper trials against the comparison proof.

A trial runs one honest-but-tampered comparison: exactly one numeric field of
one message (or one of the coordinator's derived ``H`` values) is shifted by a
nonzero delta, and the proof is checked. Owner multipliers are not targets: a
changed multiplier is just a different valid blinding, and the run stays
consistent with the commitments. A trial the coordinator refuses at receipt
(a commitment outside the group) counts as rejected.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from functools import lru_cache

from .errors import ProtocolError
from .group import GroupParams, RandomSource, sample_multiplier, sample_scalar
from .ppc import PpcRun, zkp_verify
from .simnet import Message, TamperHook

DERIVED_TARGETS = ("H1", "H2")
SKIP_FIELDS = {"d"}


@dataclass(frozen=True)
class Target:
    seq: int | None
    step: str
    field: str

    def describe(self) -> str:
        return self.field if self.seq is None else f"msg {self.seq} step {self.step} field {self.field}"


@lru_cache(maxsize=8)
def targets(params: GroupParams) -> tuple[Target, ...]:
    """Every tamperable numeric field of a full comparison plus the ``H`` values."""
    run = PpcRun(params, random.Random(0))
    run.compare(0, 0)
    run.prove()
    found = [
        Target(m.seq, m.step, k)
        for m in run.net.log
        for k, v in m.payload.items()
        if isinstance(v, int) and k not in SKIP_FIELDS
    ]
    found.extend(Target(None, "derived", name) for name in DERIVED_TARGETS)
    return tuple(found)


def _hook(target: Target, delta: int) -> TamperHook:
    def predicate(msg: Message) -> bool:
        return msg.seq == target.seq

    def mutate(payload: dict) -> dict:
        payload[target.field] = payload[target.field] + delta
        return payload

    return TamperHook(predicate, mutate, limit=1)


@dataclass(frozen=True)
class TrialResult:
    target: Target
    delta: int
    verified: bool
    aborted: bool = False


def tamper_trial(params: GroupParams, rng: RandomSource, target: Target | None = None) -> TrialResult:
    """Tamper once with a delta in ``[1, q - 1]`` and report whether the proof still verifies."""
    pool = targets(params)
    if target is None:
        target = pool[sample_scalar(len(pool), rng)]
    delta = 1 + sample_scalar(params.q - 1, rng)
    limit = params.operand_limit
    x, y = sample_scalar(limit, rng), sample_scalar(limit, rng)
    d_a, d_b = sample_multiplier(params.d_max, rng), sample_multiplier(params.d_max, rng)
    hooks = [] if target.seq is None else [_hook(target, delta)]
    run = PpcRun(params, rng, hooks=hooks)
    try:
        t = run.compare(x, y, d_a, d_b)
        record = run.prove()
    except ProtocolError:
        # the coordinator refused a malformed message before any proof existed
        return TrialResult(target, delta, False, aborted=True)
    if target.field == "H1":
        record = replace(record, h1=(record.h1 + delta) % params.q)
    elif target.field == "H2":
        record = replace(record, h2=(record.h2 + delta) % params.q)
    ok = zkp_verify(record, t.x_sum, t.y_sum, run.alice.keys.public, run.bob.keys.public, params)
    return TrialResult(target, delta, ok)


def honest_trial(params: GroupParams, rng: RandomSource) -> bool:
    limit = params.operand_limit
    run = PpcRun(params, rng)
    t = run.compare(sample_scalar(limit, rng), sample_scalar(limit, rng))
    run.prove()
    return t.verify()
