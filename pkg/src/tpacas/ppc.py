"""Privacy-preserving comparison (PPC) of two committed integers.

Parties are plain objects that talk only through a :class:`~tpacas.simnet.Net`.
A run is driven step by step; each party acts on its own state and mailbox.

The notary-to-coordinator core (steps iii-v plus both proof rounds) is shared
with the auction, where values are shared with notaries once after bidding
and then compared many times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .commitments import CommittedPair, CommittedShare, PairOpening, commit_rep, rand_rep
from .errors import DomainError, NoInverseError, ProtocolError
from .group import (
    GroupParams,
    KeyPair,
    RandomSource,
    bounded_dlog,
    generate_keypair,
    keypair_from_secret,
    mod_inv,
    sample_multiplier,
    sample_scalar,
    toy_group,
    ScriptedSource,
)
from .simnet import Message, Net, PayloadClass, TamperHook, View, audit_views

PC = PayloadClass

STEP_CLASSES: dict[str, set[PayloadClass]] = {
    "i": {PC.COMMITMENT},
    "ii": {PC.SHARE},
    "iii": {PC.SHARE},
    "iv": {PC.SCALED_RELAY, PC.SUM},
    "v": {PC.SUM},
    "zkp-1": {PC.HELP_RELAY},
    "zkp-2": {PC.LIFT},
}

PPC_MESSAGES = 12
ZKP_MESSAGES = 16
CORE_MESSAGES = 6


class Role(str, Enum):
    OWNER_A = "Owner-A"
    OWNER_B = "Owner-B"
    NOTARY_A1 = "Notary-A1"
    NOTARY_A2 = "Notary-A2"
    NOTARY_B1 = "Notary-B1"
    NOTARY_B2 = "Notary-B2"
    COORDINATOR = "Coordinator"


NOTARY_ROLES = (Role.NOTARY_A1, Role.NOTARY_A2, Role.NOTARY_B1, Role.NOTARY_B2)


class Outcome(str, Enum):
    GREATER = "greater"
    LESS = "less"
    EQUAL = "equal"


def decide(x_sum: int, y_sum: int, params: GroupParams) -> Outcome:
    """Coordinator's rule: zero is equal, the lower half of ``Z_q`` is greater."""
    s = (x_sum + y_sum) % params.q
    if s == 0:
        return Outcome.EQUAL
    if s <= (params.q - 1) // 2:
        return Outcome.GREATER
    return Outcome.LESS


def plain_outcome(x: int, y: int) -> Outcome:
    if x == y:
        return Outcome.EQUAL
    return Outcome.GREATER if x > y else Outcome.LESS


# ---------------------------------------------------------------------------
# ZKP record and verification


@dataclass(frozen=True)
class ZkpRecord:
    """Coordinator-assembled proof values for one comparison.

    ``d_r*`` are the doubly multiplied help values, ``lifted`` the four
    commitments raised to ``D`` in the order ``(u1, u2, v1, v2)``.
    """

    d_r1: int
    d_r1p: int
    d_r2: int
    d_r2p: int
    h1: int
    h2: int
    c: int
    lifted: tuple[int, int, int, int]

    def to_record(self) -> dict[str, object]:
        return {
            "d_r1": str(self.d_r1),
            "d_r1p": str(self.d_r1p),
            "d_r2": str(self.d_r2),
            "d_r2p": str(self.d_r2p),
            "H1": str(self.h1),
            "H2": str(self.h2),
            "C": str(self.c),
            "lifted": [str(v) for v in self.lifted],
        }

    @classmethod
    def from_record(cls, rec: dict) -> ZkpRecord:
        lifted = tuple(int(v) for v in rec["lifted"])
        if len(lifted) != 4:
            raise ValueError("expected four lifted commitments")
        return cls(
            int(rec["d_r1"]),
            int(rec["d_r1p"]),
            int(rec["d_r2"]),
            int(rec["d_r2p"]),
            int(rec["H1"]),
            int(rec["H2"]),
            int(rec["C"]),
            lifted,  # type: ignore[arg-type]
        )


def assemble_proof(relays: dict[str, int], lifts: dict[str, int], params: GroupParams) -> ZkpRecord:
    p, q = params.p, params.q
    h1 = (relays["r1"] + relays["r1p"]) % q
    h2 = -(relays["r2"] + relays["r2p"]) % q
    lifted = (lifts["u1"], lifts["u2"], lifts["v1"], lifts["v2"])
    try:
        c = lifted[0] * mod_inv(lifted[1], p) * lifted[2] * mod_inv(lifted[3], p) % p
    except NoInverseError:
        c = 0
    return ZkpRecord(relays["r1"], relays["r1p"], relays["r2"], relays["r2p"], h1, h2, c, lifted)


def zkp_equation_holds(
    c: int, x_sum: int, y_sum: int, h1: int, h2: int, key_a: int, key_b: int, params: GroupParams
) -> bool:
    """``C == g^(X+Y) * h_A^H1 * h_B^H2 (mod p)``."""
    p, q = params.p, params.q
    rhs = pow(params.g, (x_sum + y_sum) % q, p) * pow(key_a, h1 % q, p) * pow(key_b, h2 % q, p) % p
    return c % p == rhs and 0 < c < p


def zkp_verify(record: ZkpRecord, x_sum: int, y_sum: int, key_a: int, key_b: int, params: GroupParams) -> bool:
    """Check a proof record against the sums the coordinator decided on.

    Besides the verification equation, the record must be internally
    consistent: ``H1``/``H2`` follow from the relayed help values and ``C``
    from the lifted commitments.
    """
    q = params.q
    if record.h1 != (record.d_r1 + record.d_r1p) % q:
        return False
    if record.h2 != -(record.d_r2 + record.d_r2p) % q:
        return False
    recomputed = assemble_proof(
        {"r1": record.d_r1, "r1p": record.d_r1p, "r2": record.d_r2, "r2p": record.d_r2p},
        dict(zip(("u1", "u2", "v1", "v2"), record.lifted)),
        params,
    )
    if recomputed.c != record.c:
        return False
    return zkp_equation_holds(record.c, x_sum, y_sum, record.h1, record.h2, key_a, key_b, params)


# ---------------------------------------------------------------------------
# Parties


@dataclass
class _Holding:
    half: str
    share: int
    help: int | None


class Notary:
    """Holds one share per value it is entrusted with, plus owners' multipliers."""

    def __init__(self, name: str, params: GroupParams, net: Net) -> None:
        self.name = name
        self.params = params
        self.net = net
        self._holdings: dict[str, _Holding] = {}
        self._mults: dict[str, int] = {}
        net.register(name)

    def hold(self, handle: str, half: str, share: int, help_value: int | None) -> None:
        self._holdings[handle] = _Holding(half, share % self.params.q, help_value)

    def set_multiplier(self, key: str, value: int) -> None:
        self._mults[key] = value

    def _holding(self, handle: str) -> _Holding:
        try:
            return self._holdings[handle]
        except KeyError:
            raise ProtocolError(f"{self.name} holds no share of {handle!r}") from None

    def _mult(self, key: str) -> int:
        try:
            return self._mults[key]
        except KeyError:
            raise ProtocolError(f"{self.name} has no multiplier {key!r}") from None

    def accept_share(self, step: str = "ii") -> None:
        msg = self.net.recv(self.name, step, PC.SHARE)
        self.hold(msg["value"], msg["half"], msg["share"], msg.get("help"))
        if "d" in msg:
            self.set_multiplier(msg["value"], msg["d"])

    # step iii
    def send_share(self, handle: str, to: str) -> None:
        h = self._holding(handle)
        self.net.send(self.name, to, "iii", PC.SHARE, {"value": handle, "half": h.half, "share": h.share})

    # step iv, blinded
    def scale_difference(self, handle: str, mult: str, to: str) -> None:
        incoming = self.net.recv(self.name, "iii", PC.SHARE)
        q = self.params.q
        diff = (incoming["share"] - self._holding(handle).share) % q
        self.net.send(self.name, to, "iv", PC.SCALED_RELAY, {"value": self._mult(mult) * diff % q})

    # step v
    def finish_sum(self, mult: str, to: str, label: str) -> None:
        incoming = self.net.recv(self.name, "iv", PC.SCALED_RELAY)
        self.net.send(self.name, to, "v", PC.SUM, {label: self._mult(mult) * incoming["value"] % self.params.q})

    # baseline step iv: own share minus the peer's
    def plain_difference(self, handle: str, to: str, label: str) -> None:
        incoming = self.net.recv(self.name, "iii", PC.SHARE)
        val = (self._holding(handle).share - incoming["share"]) % self.params.q
        self.net.send(self.name, to, "iv", PC.SUM, {label: val})

    # zkp-1
    def relay_help(self, handle: str, mult: str, to: str, label: str) -> None:
        h = self._holding(handle)
        if h.help is None:
            raise ProtocolError(f"{self.name} has no help value for {handle!r}")
        self.net.send(self.name, to, "zkp-1", PC.HELP_RELAY, {label: self._mult(mult) * h.help % self.params.q})

    def forward_help(self, mult: str, to: str) -> None:
        incoming = self.net.recv(self.name, "zkp-1", PC.HELP_RELAY)
        (label, value), = incoming.items()
        self.net.send(self.name, to, "zkp-1", PC.HELP_RELAY, {label: self._mult(mult) * value % self.params.q})

    # zkp-2: lifts start from the public commitment, never from the notary's share
    def lift(self, commitment: CommittedShare, mult: str, to: str, label: str) -> None:
        lifted = pow(commitment.c, self._mult(mult), self.params.p)
        self.net.send(self.name, to, "zkp-2", PC.LIFT, {label: lifted})

    def forward_lift(self, mult: str, to: str) -> None:
        incoming = self.net.recv(self.name, "zkp-2", PC.LIFT)
        (label, value), = incoming.items()
        self.net.send(self.name, to, "zkp-2", PC.LIFT, {label: pow(value, self._mult(mult), self.params.p)})


class Coordinator:
    """The central server: sees commitments, blinded sums and proof values only."""

    def __init__(self, name: str, params: GroupParams, net: Net) -> None:
        self.name = name
        self.params = params
        self.net = net
        self.board: dict[str, CommittedPair] = {}
        net.register(name)

    def accept_commitment(self) -> str:
        msg = self.net.recv(self.name, "i", PC.COMMITMENT)
        pair = CommittedPair(CommittedShare(msg["first"]), CommittedShare(msg["second"]))
        if not pair.well_formed(self.params):
            raise ProtocolError(f"commitment to {msg['value']!r} is not a group element")
        self.board[msg["value"]] = pair
        return msg["value"]

    def collect_sums(self, step: str = "v") -> dict[str, int]:
        sums: dict[str, int] = {}
        for _ in range(2):
            cls = PC.SUM
            sums.update(self.net.recv(self.name, step, cls))
        return sums

    def collect_proof(self) -> ZkpRecord:
        relays: dict[str, int] = {}
        lifts: dict[str, int] = {}
        for _ in range(4):
            relays.update(self.net.recv(self.name, "zkp-1", PC.HELP_RELAY))
        for _ in range(4):
            lifts.update(self.net.recv(self.name, "zkp-2", PC.LIFT))
        if set(relays) != {"r1", "r1p", "r2", "r2p"} or set(lifts) != {"u1", "u2", "v1", "v2"}:
            raise ProtocolError("incomplete proof material")
        return assemble_proof(relays, lifts, self.params)


@dataclass
class Owner:
    name: str
    keys: KeyPair
    params: GroupParams
    net: Net
    handle: str = ""
    opening: PairOpening | None = None
    pair: CommittedPair | None = None
    multiplier: int | None = None

    def __post_init__(self) -> None:
        self.net.register(self.name)

    def prepare(self, handle: str, value: int, multiplier: int, rng: RandomSource, commit: bool = True) -> None:
        self.handle = handle
        self.multiplier = multiplier
        if commit:
            self.pair, self.opening = commit_rep(value, self.keys.public, self.params, rng)
        else:
            rep = rand_rep(value, self.params, rng)
            self.pair = None
            self.opening = PairOpening(rep, None, None)  # type: ignore[arg-type]

    def send_commitment(self, to: str) -> None:
        assert self.pair is not None
        self.net.send(
            self.name, to, "i", PC.COMMITMENT,
            {"value": self.handle, "first": self.pair.first.c, "second": self.pair.second.c},
        )

    def send_shares(self, first: str, second: str, with_help: bool = True) -> None:
        assert self.opening is not None
        rep = self.opening.rep
        for to, half, share, op in (
            (first, "u", rep.u, self.opening.first),
            (second, "v", rep.v, self.opening.second),
        ):
            payload: dict[str, object] = {"value": self.handle, "half": half, "share": share}
            if with_help:
                payload["help"] = op.help
                payload["d"] = self.multiplier
            self.net.send(self.name, to, "ii", PC.SHARE, payload)


# ---------------------------------------------------------------------------
# The shared core: steps iii-v and the proof rounds


@dataclass(frozen=True)
class Side:
    """One operand of a comparison as seen by the driver.

    ``first``/``second`` are the notaries holding the ``u``/``v`` shares under
    ``handle``; ``mult`` names the owner's multiplier on those notaries.
    """

    owner: str
    first: str
    second: str
    handle: str
    mult: str
    pair: CommittedPair
    key: int


def exchange(notaries: dict[str, Notary], coordinator: Coordinator, left: Side, right: Side) -> tuple[int, int]:
    """Steps iii-v; returns the blinded sums ``(X, Y)`` held by the coordinator."""
    halves = (("first", "X"), ("second", "Y"))
    for attr, _ in halves:
        notaries[getattr(left, attr)].send_share(left.handle, getattr(right, attr))
    for attr, _ in halves:
        notaries[getattr(right, attr)].scale_difference(right.handle, right.mult, getattr(left, attr))
    for attr, label in halves:
        notaries[getattr(left, attr)].finish_sum(left.mult, coordinator.name, label)
    sums = coordinator.collect_sums()
    return sums["X"], sums["Y"]


def prove(notaries: dict[str, Notary], coordinator: Coordinator, left: Side, right: Side) -> ZkpRecord:
    """Both proof rounds; 8 help relays then 8 lifts."""
    cs = coordinator.name
    chains = (
        (left, right, "first", "r1"),
        (left, right, "second", "r1p"),
        (right, left, "first", "r2"),
        (right, left, "second", "r2p"),
    )
    for src, dst, attr, label in chains:
        notaries[getattr(src, attr)].relay_help(src.handle, src.mult, getattr(dst, attr), label)
        notaries[getattr(dst, attr)].forward_help(dst.mult, cs)
    lifts = (
        (left, right, "first", "u1"),
        (right, left, "first", "u2"),
        (left, right, "second", "v1"),
        (right, left, "second", "v2"),
    )
    for src, dst, attr, label in lifts:
        notaries[getattr(src, attr)].lift(getattr(src.pair, attr), src.mult, getattr(dst, attr), label)
        notaries[getattr(dst, attr)].forward_lift(dst.mult, cs)
    return coordinator.collect_proof()


# ---------------------------------------------------------------------------
# Standalone runs


@dataclass
class PpcTranscript:
    group: GroupParams
    roles: dict[Role, str]
    keys: dict[Role, int]
    committed_a: CommittedPair | None
    committed_b: CommittedPair | None
    x_sum: int
    y_sum: int
    outcome: Outcome
    log: list[Message]
    zkp: ZkpRecord | None = None
    seed: object = None
    tampered: list[int] = field(default_factory=list)

    @property
    def message_count(self) -> int:
        return len(self.log)

    def view(self, *roles: Role) -> View:
        return audit_views(self.log, (self.roles[r] for r in roles))

    def verify(self) -> bool:
        if self.zkp is None:
            return False
        for pair in (self.committed_a, self.committed_b):
            if pair is None or not pair.well_formed(self.group):
                return False
        return zkp_verify(
            self.zkp, self.x_sum, self.y_sum, self.keys[Role.OWNER_A], self.keys[Role.OWNER_B], self.group
        )

    def export_lines(self) -> list[str]:
        header = {
            "format": "ppc-transcript/1",
            "seed": self.seed,
            "group": self.group.to_record(),
            "roles": {r.value: n for r, n in self.roles.items()},
            "keys": {r.value: str(k) for r, k in self.keys.items()},
        }
        result: dict[str, object] = {
            "record": "result",
            "X": str(self.x_sum),
            "Y": str(self.y_sum),
            "outcome": self.outcome.value,
            "messages": self.message_count,
        }
        if self.zkp is not None:
            result["zkp"] = self.zkp.to_record()
            result["zkp_verified"] = self.verify()
        net = Net()
        net.log = self.log
        lines = net.export_lines(header)
        lines.append(json.dumps(result, sort_keys=True, separators=(",", ":")))
        return lines


class PpcRun:
    """One comparison between two owners, with its own net and parties.

    Randomness is drawn in a fixed order: owner keys (A, then B) when not
    supplied, the notary draw, multipliers (A, then B) when not supplied,
    then each owner's ``u`` and two help values (A, then B).
    """

    def __init__(
        self,
        params: GroupParams,
        rng: RandomSource,
        *,
        keys: tuple[KeyPair, KeyPair] | None = None,
        pool: int = 4,
        hooks: Iterable[TamperHook] = (),
        seed: object = None,
    ) -> None:
        if pool < 4:
            raise DomainError("PPC needs four distinct notaries")
        self.params = params
        self.rng = rng
        self.seed = seed
        self.net = Net(hooks, STEP_CLASSES)
        if keys is None:
            keys = (generate_keypair(params, rng), generate_keypair(params, rng))
        self.alice = Owner(Role.OWNER_A.value, keys[0], params, self.net)
        self.bob = Owner(Role.OWNER_B.value, keys[1], params, self.net)
        self.coordinator = Coordinator(Role.COORDINATOR.value, params, self.net)
        pool_names = [f"notary-{i}" for i in range(pool)]
        self.notaries = {n: Notary(n, params, self.net) for n in pool_names}
        remaining = list(pool_names)
        self.roles: dict[Role, str] = {
            Role.OWNER_A: self.alice.name,
            Role.OWNER_B: self.bob.name,
            Role.COORDINATOR: self.coordinator.name,
        }
        for role in NOTARY_ROLES:
            self.roles[role] = remaining.pop(sample_scalar(len(remaining), rng))
        self.transcript: PpcTranscript | None = None
        self._sides: tuple[Side, Side] | None = None

    @property
    def keys(self) -> dict[Role, int]:
        return {Role.OWNER_A: self.alice.keys.public, Role.OWNER_B: self.bob.keys.public}

    def _check_multiplier(self, d: int) -> None:
        if not 1 <= d <= self.params.d_max:
            raise DomainError(f"multiplier {d} outside [1, {self.params.d_max}]")

    def compare(self, x: int, y: int, d_a: int | None = None, d_b: int | None = None) -> PpcTranscript:
        params, rng = self.params, self.rng
        limit = params.operand_limit
        for v in (x, y):
            if not 0 <= v < limit:
                raise DomainError(f"operand {v} outside [0, {limit})")
        for d in (d_a, d_b):
            if d is not None:
                self._check_multiplier(d)
        if d_a is None:
            d_a = sample_multiplier(params.d_max, rng)
        if d_b is None:
            d_b = sample_multiplier(params.d_max, rng)
        self.alice.prepare("x", x, d_a, rng)
        self.bob.prepare("y", y, d_b, rng)
        cs = self.coordinator
        # i
        self.alice.send_commitment(cs.name)
        self.bob.send_commitment(cs.name)
        cs.accept_commitment()
        cs.accept_commitment()
        # ii
        r = self.roles
        for owner, first, second in (
            (self.alice, r[Role.NOTARY_A1], r[Role.NOTARY_A2]),
            (self.bob, r[Role.NOTARY_B1], r[Role.NOTARY_B2]),
        ):
            owner.send_shares(first, second)
            self.notaries[first].accept_share()
            self.notaries[second].accept_share()
        left = Side(self.alice.name, r[Role.NOTARY_A1], r[Role.NOTARY_A2], "x", "x",
                    cs.board["x"], self.alice.keys.public)
        right = Side(self.bob.name, r[Role.NOTARY_B1], r[Role.NOTARY_B2], "y", "y",
                     cs.board["y"], self.bob.keys.public)
        self._sides = (left, right)
        x_sum, y_sum = exchange(self.notaries, cs, left, right)
        self.transcript = PpcTranscript(
            group=params,
            roles=dict(self.roles),
            keys=self.keys,
            committed_a=cs.board["x"],
            committed_b=cs.board["y"],
            x_sum=x_sum,
            y_sum=y_sum,
            outcome=decide(x_sum, y_sum, params),
            log=self.net.log,
            seed=self.seed,
            tampered=self.net.tamper_log,
        )
        return self.transcript

    def prove(self) -> ZkpRecord:
        if self.transcript is None or self._sides is None:
            raise ProtocolError("no comparison has run; notaries hold no help values")
        record = prove(self.notaries, self.coordinator, *self._sides)
        self.transcript.zkp = record
        return record


def ppc_run(
    x: int,
    y: int,
    params: GroupParams,
    rng: RandomSource,
    *,
    d_a: int | None = None,
    d_b: int | None = None,
    keys: tuple[KeyPair, KeyPair] | None = None,
    hooks: Iterable[TamperHook] = (),
    with_proof: bool = True,
    pool: int = 4,
    seed: object = None,
) -> PpcTranscript:
    """Compare ``x`` (Alice) with ``y`` (Bob), optionally followed by the proof."""
    run = PpcRun(params, rng, keys=keys, hooks=hooks, pool=pool, seed=seed)
    transcript = run.compare(x, y, d_a, d_b)
    if with_proof:
        run.prove()
    return transcript


def zkp_prove(run: PpcRun) -> ZkpRecord:
    return run.prove()


@dataclass
class LegacyTranscript:
    group: GroupParams
    roles: dict[Role, str]
    val_1: int
    val_2: int
    outcome: Outcome
    log: list[Message]

    @property
    def visible_sum(self) -> int:
        """What the coordinator learns: ``(x - y) mod q``."""
        return (self.val_1 + self.val_2) % self.group.q

    def view(self, *roles: Role) -> View:
        return audit_views(self.log, (self.roles[r] for r in roles))


def legacy_vc_run(
    x: int,
    y: int,
    params: GroupParams,
    rng: RandomSource,
    *,
    hooks: Iterable[TamperHook] = (),
    pool: int = 4,
) -> LegacyTranscript:
    """The unblinded baseline comparison; the coordinator learns ``x - y``."""
    for v in (x, y):
        if not 0 <= 2 * v < params.q:
            raise DomainError(f"operand {v} outside [0, q/2)")
    keys = (keypair_from_secret(1, params), keypair_from_secret(1, params))
    run = PpcRun(params, rng, keys=keys, hooks=hooks, pool=pool)
    alice, bob, cs, r = run.alice, run.bob, run.coordinator, run.roles
    alice.prepare("x", x, 1, rng, commit=False)
    bob.prepare("y", y, 1, rng, commit=False)
    n = run.notaries
    for owner, first, second in (
        (alice, r[Role.NOTARY_A1], r[Role.NOTARY_A2]),
        (bob, r[Role.NOTARY_B1], r[Role.NOTARY_B2]),
    ):
        owner.send_shares(first, second, with_help=False)
        n[first].accept_share()
        n[second].accept_share()
    n[r[Role.NOTARY_B1]].send_share("y", r[Role.NOTARY_A1])
    n[r[Role.NOTARY_B2]].send_share("y", r[Role.NOTARY_A2])
    n[r[Role.NOTARY_A1]].plain_difference("x", cs.name, "val_1")
    n[r[Role.NOTARY_A2]].plain_difference("x", cs.name, "val_2")
    sums = cs.collect_sums(step="iv")
    return LegacyTranscript(
        params, dict(r), sums["val_1"], sums["val_2"], decide(sums["val_1"], sums["val_2"], params), run.net.log
    )


# ---------------------------------------------------------------------------
# View audits


def view_violations(t: PpcTranscript) -> list[str]:
    """Check the per-party information restrictions of an honest run."""
    problems = []
    cs = t.view(Role.COORDINATOR)
    allowed = {PC.COMMITMENT, PC.SUM, PC.HELP_RELAY, PC.LIFT}
    extra = cs.classes() - allowed
    if extra:
        problems.append(f"coordinator received {sorted(c.value for c in extra)}")
    sums = {k for m, k, _ in cs.items(PC.SUM)}
    if sums != {"X", "Y"}:
        problems.append(f"coordinator sums {sorted(sums)}")
    handles = {m.delivered["value"] for m in cs.messages if m.payload_class == PC.COMMITMENT}
    if handles != {"x", "y"}:
        problems.append("coordinator did not receive exactly E(R(x)) and E(R(y))")
    for role in NOTARY_ROLES:
        halves: dict[str, set[str]] = {}
        for msg in t.view(role).messages:
            if msg.payload_class == PC.SHARE:
                halves.setdefault(msg.delivered["value"], set()).add(msg.delivered["half"])
        for handle, got in halves.items():
            if len(got) > 1:
                problems.append(f"{role.value} holds both shares of {handle}")
    sides = {t.roles[Role.NOTARY_A1]: "A", t.roles[Role.NOTARY_A2]: "A",
             t.roles[Role.NOTARY_B1]: "B", t.roles[Role.NOTARY_B2]: "B"}
    for msg in t.log:
        s, r = sides.get(msg.sender), sides.get(msg.receiver)
        if s is not None and s == r:
            problems.append(f"message {msg.seq} between notaries of side {s}")
    return problems


def reconstruct(t: PpcTranscript, roles: Sequence[Role]) -> dict[str, int]:
    """Values of ``x`` and ``y`` recoverable by merging the views of ``roles``.

    Uses the merged received payloads plus public data (commitments, keys,
    group, operand bound). A value counts as recovered when both its shares
    are present, when the other value and ``x - y`` are known, or when one
    share and the other share's help value pin it down by a bounded search
    over the operand range.
    """
    params = t.group
    q = params.q
    view = t.view(*roles)
    shares: dict[tuple[str, str], int] = {}
    helps: dict[tuple[str, str], int] = {}
    mults: dict[str, int] = {}
    sums: dict[str, int] = {}
    relays: dict[str, list[tuple[str, int]]] = {}
    cs_name = t.roles[Role.COORDINATOR]
    for msg in view.messages:
        pay = msg.delivered
        if msg.payload_class == PC.SHARE:
            shares[(pay["value"], pay["half"])] = pay["share"] % q
            if "help" in pay:
                helps[(pay["value"], pay["half"])] = pay["help"] % q
            if "d" in pay:
                mults[pay["value"]] = pay["d"]
        elif msg.payload_class == PC.SUM:
            sums.update(pay)
        elif msg.payload_class == PC.HELP_RELAY:
            for label, value in pay.items():
                hop = "D" if msg.receiver == cs_name else msg.sender
                relays.setdefault(label, []).append((hop, value))
    # which owner scaled each first hop: left-side notaries relay r1/r1p with d_A, right side r2/r2p with d_B
    label_owner = {"r1": ("x", "u"), "r1p": ("x", "v"), "r2": ("y", "u"), "r2p": ("y", "v")}
    big_d = mults["x"] * mults["y"] % q if {"x", "y"} <= set(mults) else None
    for label, seen in relays.items():
        handle, half = label_owner[label]
        for hop, value in seen:
            if hop == "D" and big_d is not None:
                helps.setdefault((handle, half), value * mod_inv(big_d, q) % q)
            elif hop != "D" and handle in mults:
                helps.setdefault((handle, half), value * mod_inv(mults[handle], q) % q)

    known: dict[str, int] = {}
    for handle in ("x", "y"):
        if (handle, "u") in shares and (handle, "v") in shares:
            known[handle] = (shares[(handle, "u")] + shares[(handle, "v")]) % q

    diff = None
    if big_d is not None and {"X", "Y"} <= set(sums):
        diff = (sums["X"] + sums["Y"]) * mod_inv(big_d, q) % q
        if diff > q // 2:
            diff -= q

    def propagate() -> None:
        if diff is None:
            return
        if "x" in known and "y" not in known:
            known["y"] = (known["x"] - diff) % q
        elif "y" in known and "x" not in known:
            known["x"] = (known["y"] + diff) % q

    propagate()
    pairs = {"x": (t.committed_a, t.keys[Role.OWNER_A]), "y": (t.committed_b, t.keys[Role.OWNER_B])}
    for handle in ("x", "y"):
        if handle in known:
            continue
        pair, key = pairs[handle]
        if pair is None:
            continue
        for have, other, c in (("u", "v", pair.second), ("v", "u", pair.first)):
            if (handle, have) in shares and (handle, other) in helps:
                # g^value = E(other) * h^-r_other * g^share_have
                target = c.c * pow(key, -helps[(handle, other)], params.p) * pow(
                    params.g, shares[(handle, have)], params.p
                ) % params.p
                found = bounded_dlog(target, params.g, params.operand_limit, params)
                if found is not None:
                    known[handle] = found
                    break
        propagate()
    return known


# ---------------------------------------------------------------------------
# The worked example


EXAMPLE_KEYS = (2, 3)
EXAMPLE_MULTIPLIERS = (2, 3)


def example_source() -> ScriptedSource:
    """Random draws that replay the worked example of a 7-vs-6 comparison.

    Order follows :class:`PpcRun`: notary draw (identity permutation of a
    four-notary pool), multipliers ``d - 1``, then ``u``, ``r``, ``r'`` for
    Alice (350, 11, 4) and Bob (300, 12, 15). Keys are passed explicitly.
    """
    return ScriptedSource([0, 0, 0, 0, 1, 2, 350, 11, 4, 300, 12, 15])


def example_keys(params: GroupParams | None = None) -> tuple[KeyPair, KeyPair]:
    params = params or toy_group()
    return keypair_from_secret(EXAMPLE_KEYS[0], params), keypair_from_secret(EXAMPLE_KEYS[1], params)


def worked_example_run(with_proof: bool = True) -> PpcTranscript:
    params = toy_group()
    return ppc_run(7, 6, params, example_source(), keys=example_keys(params), with_proof=with_proof, seed="paper")
