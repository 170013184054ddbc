"""The private combinatorial auction for single-minded bidders.

Agents commit to their bids on the bulletin board and hand shares to a
dedicated notary pair. The auctioneer (AU) then sorts bids and tests bundle
intersections using only blinded comparisons, each backed by a published
proof. Payments are computed by the critical agent's notary from openings.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .commitments import (
    CommittedPair,
    CommittedShare,
    Opening,
    PairOpening,
    combine,
    commit_fresh,
    commit_rep,
    verify_opening,
)
from .errors import (
    BidRejected,
    ComparisonFailed,
    DomainError,
    OpeningRejected,
    ProtocolError,
    SetupError,
)
from .group import (
    GroupParams,
    KeyPair,
    RandomSource,
    generate_group,
    generate_keypair,
    in_subgroup,
    sample_multiplier,
    sample_scalar,
    validate_group,
)
from .oracle import AuctionInstance, scaled_payment, scaled_weight, threshold_weight
from .ppc import STEP_CLASSES, Coordinator, Notary, Outcome, Side, ZkpRecord, decide, exchange, prove, zkp_verify
from .sbb import Sbb, read_records
from .simnet import Net, PayloadClass, TamperHook, audit_views

PC = PayloadClass
AU = "AU"
ID_SPACE = 1 << 32

AUCTION_STEPS = dict(STEP_CLASSES)
AUCTION_STEPS.update(
    {
        "setup": {PC.CONTROL},
        "bid": {PC.COMMITMENT},
        "handoff": {PC.SHARE},
        "payment": {PC.OPENING, PC.CONTROL},
    }
)


def default_d_max(bits: int) -> int:
    """Multiplier bound leaving roughly half of ``q``'s bits for operands."""
    return 1 << max(0, (bits - 2) // 4)


@dataclass(frozen=True)
class AuctionConfig:
    group: GroupParams
    m: int
    precision: int = 2
    item_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.m < 1:
            raise SetupError("need at least one item")
        if self.precision < 0:
            raise SetupError("precision must be non-negative")
        if self.item_ids:
            if len(self.item_ids) != self.m:
                raise SetupError(f"expected {self.m} item ids, got {len(self.item_ids)}")
            if len(set(self.item_ids)) != self.m:
                raise SetupError("item ids must be distinct")
            if not all(0 <= i < self.group.q for i in self.item_ids):
                raise SetupError("item ids must lie in [0, q)")


@dataclass(frozen=True)
class BidTuple:
    commit_value: CommittedShare
    commit_size: CommittedShare
    commit_w: CommittedPair

    def to_record(self) -> dict[str, Any]:
        return {
            "value": self.commit_value.to_record(),
            "size": self.commit_size.to_record(),
            "w": self.commit_w.to_record(),
        }

    def well_formed(self, params: GroupParams) -> bool:
        return (
            self.commit_value.well_formed(params)
            and self.commit_size.well_formed(params)
            and self.commit_w.well_formed(params)
        )

    @classmethod
    def from_record(cls, rec: dict) -> BidTuple:
        return cls(
            CommittedShare(int(rec["value"])), CommittedShare(int(rec["size"])), CommittedPair.from_record(rec["w"])
        )


@dataclass(frozen=True)
class ItemBundle:
    commitments: tuple[CommittedPair, ...]

    def to_record(self) -> list[list[str]]:
        return [c.to_record() for c in self.commitments]

    def well_formed(self, params: GroupParams) -> bool:
        return all(c.well_formed(params) for c in self.commitments)

    @classmethod
    def from_record(cls, rec: list) -> ItemBundle:
        return cls(tuple(CommittedPair.from_record(c) for c in rec))


@dataclass
class _BidSecrets:
    valuation: int
    size: int
    w: int
    slots: list[int]
    value_open: Opening
    size_open: Opening
    w_open: PairOpening
    slot_opens: list[PairOpening]
    d: int
    d2: int


class Agent:
    def __init__(self, name: str, params: GroupParams, net: Net) -> None:
        self.name = name
        self.endpoint = f"agent:{name}"
        self.params = params
        self.net = net
        self.ident: int | None = None
        self.keys: KeyPair | None = None
        self.item_ids: tuple[int, ...] = ()
        self.notaries: tuple[str, str] = ("", "")
        self.secrets: _BidSecrets | None = None
        net.register(self.endpoint)

    def receive_setup(self, rng: RandomSource) -> None:
        msg = self.net.recv(self.endpoint, "setup", PC.CONTROL)
        self.ident = msg["id"]
        self.item_ids = tuple(msg["items"])
        self.notaries = tuple(msg["notaries"])  # type: ignore[assignment]
        self.keys = generate_keypair(self.params, rng)
        self.net.send(self.endpoint, AU, "setup", PC.CONTROL, {"id": self.ident, "key": self.keys.public})

    def make_bid(self, valuation: int, items: Iterable[int], precision: int, rng: RandomSource) -> tuple[BidTuple, ItemBundle]:
        """Build the committed bid; raises :class:`BidRejected` before anything is sent."""
        params = self.params
        labels = sorted(set(items))
        m = len(self.item_ids)
        if valuation <= 0:
            raise BidRejected(f"{self.name}: valuation must be positive", self.name)
        if len(labels) < 2:
            raise BidRejected(f"{self.name}: bundles must contain at least two items", self.name)
        if not all(1 <= k <= m for k in labels):
            raise BidRejected(f"{self.name}: items must be numbered 1..{m}", self.name)
        w = scaled_weight(valuation, len(labels), precision)
        if w >= params.operand_limit:
            raise BidRejected(
                f"{self.name}: scaled bid {w} exceeds the comparison bound {params.operand_limit - 1}", self.name
            )
        assert self.keys is not None
        key = self.keys.public
        d = sample_multiplier(params.d_max, rng)
        d2 = sample_multiplier(params.q - 1, rng)
        c_value, o_value = commit_fresh(valuation, key, params, rng)
        c_size, o_size = commit_fresh(len(labels), key, params, rng)
        c_w, o_w = commit_rep(w, key, params, rng)
        slots = labels + [labels[sample_scalar(len(labels), rng)] for _ in range(m - len(labels))]
        for k in range(len(slots) - 1, 0, -1):
            j = sample_scalar(k + 1, rng)
            slots[k], slots[j] = slots[j], slots[k]
        ids = [self.item_ids[k - 1] for k in slots]
        committed = [commit_rep(i, key, params, rng) for i in ids]
        self.secrets = _BidSecrets(
            valuation, len(labels), w, ids, o_value, o_size, o_w, [o for _, o in committed], d, d2
        )
        return BidTuple(c_value, c_size, c_w), ItemBundle(tuple(c for c, _ in committed))

    def send_bid(self, bid: BidTuple, bundle: ItemBundle) -> None:
        self.net.send(
            self.endpoint, AU, "bid", PC.COMMITMENT,
            {"id": self.ident, "bid": bid.to_record(), "bundle": bundle.to_record()},
        )

    def handoff(self) -> None:
        s = self.secrets
        if s is None:
            raise ProtocolError(f"{self.name} has no bid to hand off")
        for to, half in zip(self.notaries, ("u", "v")):
            pick = (lambda o: [o.rep.u, o.first.help]) if half == "u" else (lambda o: [o.rep.v, o.second.help])
            payload = {
                "owner": self.ident,
                "half": half,
                "w": pick(s.w_open),
                "items": [pick(o) for o in s.slot_opens],
                "d": s.d,
                "d2": s.d2,
            }
            self.net.send(self.endpoint, to, "handoff", PC.SHARE, payload)

    def open_w(self) -> None:
        s = self.secrets
        assert s is not None
        help_sum = (s.w_open.first.help + s.w_open.second.help) % self.params.q
        self.net.send(self.endpoint, self.notaries[0], "payment", PC.OPENING, {"owner": self.ident, "w": s.w, "help": help_sum})

    def open_size(self) -> None:
        s = self.secrets
        assert s is not None
        self.net.send(
            self.endpoint, AU, "payment", PC.OPENING, {"owner": self.ident, "size": s.size, "help": s.size_open.help}
        )


class AuctionNotary(Notary):
    def accept_handoff(self) -> None:
        msg = self.net.recv(self.name, "handoff", PC.SHARE)
        owner, half = msg["owner"], msg["half"]
        self.hold(value_handle(owner), half, *msg["w"])
        for k, (share, help_value) in enumerate(msg["items"]):
            self.hold(item_handle(owner, k), half, share, help_value)
        self.set_multiplier(f"{owner}:d", msg["d"])
        self.set_multiplier(f"{owner}:d2", msg["d2"])

    def compute_payment(self, w_pair: CommittedPair, key: int) -> None:
        """Check the critical agent's ``w`` opening, then price the winner's size."""
        opening = self.net.recv(self.name, "payment", PC.OPENING)
        size_msg = self.net.recv(self.name, "payment", PC.OPENING)
        combined = combine(w_pair.first, w_pair.second, self.params)
        if not verify_opening(combined, opening["w"], opening["help"], key, self.params):
            raise OpeningRejected(f"w opening of {opening['owner']} does not match its commitment", str(opening["owner"]))
        t = threshold_weight(opening["w"], size_msg["wins_ties"])
        sigma = scaled_payment(t, size_msg["size"])
        self.net.send(self.name, AU, "payment", PC.CONTROL, {"owner": size_msg["owner"], "sigma": sigma})


def value_handle(ident: int) -> str:
    return f"{ident}:w"


def item_handle(ident: int, slot: int) -> str:
    return f"{ident}:i{slot}"


def merge_sort(items: Sequence[int], before: Callable[[int, int], bool]) -> list[int]:
    """Top-down merge sort; the comparison sequence depends only on the input order."""
    if len(items) <= 1:
        return list(items)
    mid = len(items) // 2
    left, right = merge_sort(items[:mid], before), merge_sort(items[mid:], before)
    out: list[int] = []
    i = j = 0
    while i < len(left) and j < len(right):
        if before(left[i], right[j]):
            out.append(left[i])
            i += 1
        else:
            out.append(right[j])
            j += 1
    return out + left[i:] + right[j:]


def greedy_winners(order: Sequence[int], conflict: Callable[[int, int], bool]) -> list[int]:
    winners: list[int] = []
    for a in order:
        if all(not conflict(a, w) for w in winners):
            winners.append(a)
    return winners


def displacing_agent(i: int, order: Sequence[int], conflict: Callable[[int, int], bool]) -> int | None:
    """First agent admitted in a greedy pass without ``i`` that conflicts with ``i``."""
    kept: list[int] = []
    for j in order:
        if j == i or any(conflict(j, k) for k in kept):
            continue
        if conflict(i, j):
            return j
        kept.append(j)
    return None


@dataclass
class Payment:
    winner: int
    critical: int | None
    sigma: int
    size: int | None = None
    size_help: int | None = None

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.winner,
            "critical": self.critical,
            "sigma": str(self.sigma),
            "size": None if self.size is None else str(self.size),
            "size_help": None if self.size_help is None else str(self.size_help),
        }


@dataclass
class AuctionOutcome:
    order: list[int]
    winners: list[int]
    payments: dict[int, Payment]
    precision: int
    proofs: list[int]

    def payment(self, ident: int) -> Fraction:
        return Fraction(self.payments[ident].sigma, 10**self.precision)

    def to_record(self) -> dict[str, Any]:
        return {
            "order": self.order,
            "winners": self.winners,
            "payments": [self.payments[w].to_record() for w in self.winners],
            "precision": self.precision,
            "proofs": self.proofs,
        }


class Auction:
    """One auction run. Phases must be called in order:
    :meth:`setup`, :meth:`submit_bid` per agent, :meth:`handoff`,
    :meth:`sort_bids`, :meth:`determine_winners`, :meth:`determine_payments`.
    """

    def __init__(
        self,
        config: AuctionConfig,
        rng: RandomSource,
        *,
        hooks: Iterable[TamperHook] = (),
        seed: object = None,
    ) -> None:
        self.config = config
        self.params = config.group
        self.rng = rng
        self.seed = seed
        self.net = Net(hooks, AUCTION_STEPS)
        self.au = Coordinator(AU, self.params, self.net)
        self.sbb = Sbb()
        self.agents: dict[str, Agent] = {}
        self.notaries: dict[str, AuctionNotary] = {}
        self.keys: dict[int, int] = {}
        self.bids: dict[int, BidTuple] = {}
        self.bundles: dict[int, ItemBundle] = {}
        self.bid_order: list[int] = []
        self.rejected: dict[str, str] = {}
        self.item_ids: tuple[int, ...] = ()
        self.order: list[int] | None = None
        self.winners: list[int] | None = None
        self.outcome: AuctionOutcome | None = None
        self.counts = {"value": 0, "item": 0}
        self._pairs: dict[int, tuple[str, str]] = {}
        self._intersections: dict[frozenset[int], bool] = {}
        self._proofs: list[int] = []
        self._names: dict[int, str] = {}

    # -- setup --------------------------------------------------------------

    def setup(self, agent_names: Sequence[str], pool: int | None = None) -> None:
        params, rng, m = self.params, self.rng, self.config.m
        n = len(agent_names)
        if n < 2:
            raise SetupError("an auction needs at least two agents")
        if len(set(agent_names)) != n:
            raise SetupError("agent names must be distinct")
        pool = 2 * n if pool is None else pool
        if pool < 2 * n:
            raise SetupError(f"{n} agents need a pool of at least {2 * n} notaries, got {pool}")
        if self.config.item_ids:
            self.item_ids = self.config.item_ids
        else:
            if m > params.q:
                raise SetupError("more items than elements of Z_q")
            ids: list[int] = []
            while len(ids) < m:
                i = sample_scalar(params.q, rng)
                if i not in ids:
                    ids.append(i)
            self.item_ids = tuple(ids)
        idents: list[int] = []
        while len(idents) < n:
            i = sample_scalar(ID_SPACE, rng)
            if i not in idents:
                idents.append(i)
        names = [f"notary-{k}" for k in range(pool)]
        for k in range(pool - 1, 0, -1):
            j = sample_scalar(k + 1, rng)
            names[k], names[j] = names[j], names[k]
        for k in range(pool):
            self.notaries[f"notary-{k}"] = AuctionNotary(f"notary-{k}", params, self.net)
        self.sbb.append(
            "announcement",
            {"group": params.to_record(), "items": m, "precision": self.config.precision, "agents": n},
        )
        for k, (name, ident) in enumerate(zip(agent_names, idents)):
            agent = Agent(name, params, self.net)
            self.agents[name] = agent
            self._names[ident] = name
            pair = (names[2 * k], names[2 * k + 1])
            self._pairs[ident] = pair
            self.net.send(AU, agent.endpoint, "setup", PC.CONTROL, {"id": ident, "items": list(self.item_ids), "notaries": list(pair)})
            agent.receive_setup(rng)
            msg = self.net.recv(AU, "setup", PC.CONTROL)
            if not in_subgroup(msg["key"], params):
                raise SetupError(f"public key of {name} is not in the subgroup")
            self.keys[msg["id"]] = msg["key"]
            self.sbb.append("public-key", {"id": msg["id"], "key": str(msg["key"])})

    # -- bidding ------------------------------------------------------------

    def submit_bid(self, name: str, valuation: int, items: Iterable[int]) -> tuple[BidTuple, ItemBundle]:
        agent = self.agents.get(name)
        if agent is None:
            raise SetupError(f"unknown agent {name!r}")
        if agent.ident in self.bids:
            raise BidRejected(f"{name} already bid", name)
        bid, bundle = agent.make_bid(valuation, items, self.config.precision, self.rng)
        agent.send_bid(bid, bundle)
        msg = self.net.recv(AU, "bid", PC.COMMITMENT)
        ident = msg["id"]
        tuple_, items_ = BidTuple.from_record(msg["bid"]), ItemBundle.from_record(msg["bundle"])
        if not (tuple_.well_formed(self.params) and items_.well_formed(self.params)):
            raise BidRejected(f"{name} sent commitments outside the group", name)
        self.bids[ident] = tuple_
        self.bundles[ident] = items_
        self.bid_order.append(ident)
        self.sbb.append("bid", {"id": ident, **msg["bid"]})
        self.sbb.append("bundle", {"id": ident, "bundle": msg["bundle"]})
        return bid, bundle

    def handoff(self) -> None:
        for ident in self.bid_order:
            self.agents[self._names[ident]].handoff()
            for notary in self._pairs[ident]:
                self.notaries[notary].accept_handoff()

    # -- comparisons --------------------------------------------------------

    def _side(self, ident: int, slot: int | None) -> Side:
        first, second = self._pairs[ident]
        if slot is None:
            return Side(f"agent:{self._names[ident]}", first, second, value_handle(ident), f"{ident}:d",
                        self.bids[ident].commit_w, self.keys[ident])
        return Side(f"agent:{self._names[ident]}", first, second, item_handle(ident, slot), f"{ident}:d2",
                    self.bundles[ident].commitments[slot], self.keys[ident])

    def _compare(self, a: int, b: int, slot_a: int | None = None, slot_b: int | None = None) -> Outcome:
        kind = "value" if slot_a is None else "item"
        left, right = self._side(a, slot_a), self._side(b, slot_b)
        x_sum, y_sum = exchange(self.notaries, self.au, left, right)  # type: ignore[arg-type]
        record = prove(self.notaries, self.au, left, right)  # type: ignore[arg-type]
        outcome = decide(x_sum, y_sum, self.params)
        body = {
            "kind": kind,
            "left": {"id": a, "slot": slot_a},
            "right": {"id": b, "slot": slot_b},
            "X": str(x_sum),
            "Y": str(y_sum),
            "outcome": outcome.value,
            "zkp": record.to_record(),
        }
        if not zkp_verify(record, x_sum, y_sum, left.key, right.key, self.params):
            raise ComparisonFailed(f"{kind} comparison {a} vs {b} failed proof verification", body)
        self._proofs.append(self.sbb.append("comparison-proof", body).index)
        self.counts[kind] += 1
        return outcome

    def _before(self, a: int, b: int) -> bool:
        outcome = self._compare(a, b)
        if outcome is Outcome.EQUAL:
            return a < b
        return outcome is Outcome.GREATER

    def intersects(self, a: int, b: int) -> bool:
        """Whether two bundles share an item, via pairwise equality comparisons."""
        key = frozenset((a, b))
        if key not in self._intersections:
            m = self.config.m
            self._intersections[key] = any(
                self._compare(a, b, k, l) is Outcome.EQUAL for k in range(m) for l in range(m)
            )
        return self._intersections[key]

    def sort_bids(self) -> list[int]:
        self.order = merge_sort(self.bid_order, self._before)
        return self.order

    def determine_winners(self) -> list[int]:
        if self.order is None:
            raise ProtocolError("bids are not sorted yet")
        self.winners = greedy_winners(self.order, self.intersects)
        return self.winners

    def determine_payments(self) -> AuctionOutcome:
        if self.winners is None or self.order is None:
            raise ProtocolError("winners are not determined yet")
        params = self.params
        payments: dict[int, Payment] = {}
        for i in self.winners:
            j = displacing_agent(i, self.order, self.intersects)
            if j is None:
                payments[i] = Payment(i, None, 0)
                continue
            agent_i, agent_j = self.agents[self._names[i]], self.agents[self._names[j]]
            notary = self.notaries[self._pairs[j][0]]
            agent_j.open_w()
            agent_i.open_size()
            opening = self.net.recv(AU, "payment", PC.OPENING)
            if not verify_opening(self.bids[i].commit_size, opening["size"], opening["help"], self.keys[i], params):
                raise OpeningRejected(f"size opening of {i} does not match its commitment", str(i))
            self.net.send(AU, notary.name, "payment", PC.OPENING,
                          {"owner": i, "size": opening["size"], "wins_ties": i < j})
            notary.compute_payment(self.bids[j].commit_w, self.keys[j])
            reply = self.net.recv(AU, "payment", PC.CONTROL)
            payments[i] = Payment(i, j, reply["sigma"], opening["size"], opening["help"])
        self.outcome = AuctionOutcome(list(self.order), list(self.winners), payments, self.config.precision, list(self._proofs))
        self.sbb.append("outcome", self.outcome.to_record())
        return self.outcome

    # -- exports ------------------------------------------------------------

    def keys_record(self) -> dict[str, Any]:
        return {
            "format": "tpacas-keys/1",
            "group": self.params.to_record(),
            "keys": {str(i): str(k) for i, k in self.keys.items()},
        }

    def name_of(self, ident: int) -> str:
        return self._names[ident]

    def ident_of(self, name: str) -> int:
        ident = self.agents[name].ident
        assert ident is not None
        return ident


@dataclass
class AuctionResult:
    auction: Auction
    outcome: AuctionOutcome
    rejected: dict[str, str]

    @property
    def winners(self) -> list[str]:
        return [self.auction.name_of(i) for i in self.outcome.winners]

    @property
    def order(self) -> list[str]:
        return [self.auction.name_of(i) for i in self.outcome.order]

    @property
    def payments_scaled(self) -> dict[str, int]:
        return {self.auction.name_of(i): p.sigma for i, p in self.outcome.payments.items()}

    @property
    def payments(self) -> dict[str, Fraction]:
        return {self.auction.name_of(i): self.outcome.payment(i) for i in self.outcome.payments}

    @property
    def tie_keys(self) -> dict[str, int]:
        return {name: self.auction.ident_of(name) for name in self.auction.agents}

    def export_lines(self) -> list[str]:
        return self.auction.sbb.export_lines()

    def keys_record(self) -> dict[str, Any]:
        return self.auction.keys_record()

    @property
    def counts(self) -> dict[str, int]:
        a = self.auction
        return {
            "messages": len(a.net.log),
            "value_comparisons": a.counts["value"],
            "item_comparisons": a.counts["item"],
            "proofs": len(self.outcome.proofs),
            "sbb_records": len(a.sbb.records),
        }


def auction_group(bits: int, seed: object = 0, d_max: int | None = None) -> GroupParams:
    """A fresh safe-prime group, reproducible from ``bits`` and ``seed``."""
    return generate_group(bits, d_max or default_d_max(bits), random.Random(f"group:{bits}:{seed}"))


def run_auction(
    instance: AuctionInstance,
    *,
    group: GroupParams | None = None,
    seed: object = 0,
    precision: int | None = None,
    bits: int = 256,
    hooks: Iterable[TamperHook] = (),
    pool: int | None = None,
    item_ids: tuple[int, ...] = (),
) -> AuctionResult:
    """Run every phase on ``instance``. Rejected bids are reported, not fatal."""
    if precision is None:
        precision = instance.precision if instance.precision is not None else 2
    if group is None:
        group = auction_group(instance.bits or bits, seed)
    config = AuctionConfig(group, instance.m, precision, item_ids)
    rng = random.Random(f"auction:{seed}")
    auction = Auction(config, rng, hooks=hooks, seed=seed)
    auction.setup([b.name for b in instance.bids], pool)
    for b in instance.bids:
        try:
            auction.submit_bid(b.name, b.valuation, b.bundle)
        except BidRejected as exc:
            auction.rejected[b.name] = str(exc)
    if not auction.bid_order:
        raise SetupError("no bid was accepted")
    auction.handoff()
    auction.sort_bids()
    auction.determine_winners()
    outcome = auction.determine_payments()
    return AuctionResult(auction, outcome, dict(auction.rejected))


# ---------------------------------------------------------------------------
# Public verification


@dataclass(frozen=True)
class Verdict:
    ok: bool
    index: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _fail(index: int, reason: str) -> Verdict:
    return Verdict(False, index, reason)


def verify_auction(lines: Iterable[str], keys: dict[str, Any]) -> Verdict:
    """Check an SBB export end to end and report the first failing record.

    Covers the hash chain, the announced group, the published keys against
    ``keys`` (the keys file contents), every comparison proof, and that the
    outcome record follows from the proven comparison outcomes.
    """
    records, failure = read_records(lines)
    try:
        key_group = GroupParams.from_record(keys["group"])
        key_map = {int(i): int(k) for i, k in keys["keys"].items()}
    except (KeyError, TypeError, ValueError, AttributeError):
        return _fail(-1, "malformed keys file")
    params: GroupParams | None = None
    m = precision = 0
    published: dict[int, int] = {}
    bids: dict[int, BidTuple] = {}
    bundles: dict[int, ItemBundle] = {}
    bid_order: list[int] = []
    values: dict[tuple[int, int], Outcome] = {}
    items: dict[frozenset[int], dict[tuple, Outcome]] = {}
    proofs: list[int] = []
    seen_outcome = False
    for rec in records:
        k, body = rec.index, rec.body
        try:
            if seen_outcome:
                return _fail(k, "record after the outcome")
            if k == 0:
                if rec.kind != "announcement":
                    return _fail(k, "first record is not the announcement")
                params = GroupParams.from_record(body["group"])
                validate_group(params)
                if params != key_group:
                    return _fail(k, "announced group differs from the keys file")
                m, precision = int(body["items"]), int(body["precision"])
                continue
            assert params is not None
            if rec.kind == "announcement":
                return _fail(k, "second announcement")
            if rec.kind == "public-key":
                ident, key = int(body["id"]), int(body["key"])
                if ident in published or key_map.get(ident) != key or not in_subgroup(key, params):
                    return _fail(k, f"public key of {ident} does not match the keys file")
                published[ident] = key
            elif rec.kind == "bid":
                ident = int(body["id"])
                if ident not in published or ident in bids:
                    return _fail(k, f"bid from unknown or repeated id {ident}")
                bids[ident] = BidTuple.from_record(body)
                if not bids[ident].well_formed(params):
                    return _fail(k, f"bid of {ident} holds a commitment outside the group")
                bid_order.append(ident)
            elif rec.kind == "bundle":
                ident = int(body["id"])
                bundle = ItemBundle.from_record(body["bundle"])
                if ident not in bids or ident in bundles or len(bundle.commitments) != m:
                    return _fail(k, f"bad bundle record for {ident}")
                if not bundle.well_formed(params):
                    return _fail(k, f"bundle of {ident} holds a commitment outside the group")
                bundles[ident] = bundle
            elif rec.kind == "comparison-proof":
                reason = _check_comparison(body, params, published, bundles, m, values, items)
                if reason:
                    return _fail(k, reason)
                proofs.append(k)
            elif rec.kind == "outcome":
                seen_outcome = True
                reason = _check_outcome(body, params, m, precision, bids, bid_order, values, items, proofs, published)
                if reason:
                    return _fail(k, reason)
        except (KeyError, TypeError, ValueError, AttributeError, AssertionError) as exc:
            return _fail(k, f"malformed {rec.kind} record: {exc}")
    if failure is not None:
        return _fail(failure.index, failure.reason)
    if not seen_outcome:
        return _fail(len(records), "export truncated: no outcome record")
    return Verdict(True)


def _check_comparison(
    body: dict,
    params: GroupParams,
    keys: dict[int, int],
    bundles: dict[int, ItemBundle],
    m: int,
    values: dict[tuple[int, int], Outcome],
    items: dict[frozenset[int], dict[tuple, Outcome]],
) -> str:
    a, b = int(body["left"]["id"]), int(body["right"]["id"])
    if a == b or a not in bundles or b not in bundles:
        return "comparison refers to unknown bids"
    x_sum, y_sum = int(body["X"]), int(body["Y"])
    if not (0 <= x_sum < params.q and 0 <= y_sum < params.q):
        return "sums outside Z_q"
    zkp = ZkpRecord.from_record(body["zkp"])
    if not zkp_verify(zkp, x_sum, y_sum, keys[a], keys[b], params):
        return "comparison proof does not verify"
    outcome = Outcome(body["outcome"])
    if outcome is not decide(x_sum, y_sum, params):
        return "recorded outcome does not follow from X and Y"
    if body["kind"] == "value":
        if body["left"]["slot"] is not None or body["right"]["slot"] is not None:
            return "value comparison with item slots"
        if (a, b) in values or (b, a) in values:
            return "repeated value comparison"
        values[(a, b)] = outcome
    elif body["kind"] == "item":
        sa, sb = int(body["left"]["slot"]), int(body["right"]["slot"])
        if not (0 <= sa < m and 0 <= sb < m):
            return "item slot out of range"
        cell = (a, sa, b, sb) if a < b else (b, sb, a, sa)
        items.setdefault(frozenset((a, b)), {})[cell] = outcome
    else:
        return f"unknown comparison kind {body['kind']!r}"
    return ""


def _check_outcome(
    body: dict,
    params: GroupParams,
    m: int,
    precision: int,
    bids: dict[int, BidTuple],
    bid_order: list[int],
    values: dict[tuple[int, int], Outcome],
    items: dict[frozenset[int], dict[tuple, Outcome]],
    proofs: list[int],
    keys: dict[int, int],
) -> str:
    class Missing(Exception):
        pass

    def before(a: int, b: int) -> bool:
        if (a, b) in values:
            o = values[(a, b)]
        elif (b, a) in values:
            o = {Outcome.GREATER: Outcome.LESS, Outcome.LESS: Outcome.GREATER}.get(values[(b, a)], Outcome.EQUAL)
        else:
            raise Missing(f"no proven comparison between {a} and {b}")
        return a < b if o is Outcome.EQUAL else o is Outcome.GREATER

    def conflict(a: int, b: int) -> bool:
        cells = items.get(frozenset((a, b)), {})
        if any(o is Outcome.EQUAL for o in cells.values()):
            return True
        if len(cells) == m * m:
            return False
        raise Missing(f"intersection of {a} and {b} is not fully proven")

    if int(body["precision"]) != precision:
        return "outcome precision differs from the announcement"
    if sorted(int(p) for p in body["proofs"]) != proofs:
        return "outcome does not reference exactly the published proofs"
    try:
        order = merge_sort(bid_order, before)
        if [int(i) for i in body["order"]] != order:
            return "order is not entailed by the comparison proofs"
        winners = greedy_winners(order, conflict)
        if [int(i) for i in body["winners"]] != winners:
            return "winner set is not entailed by the comparison proofs"
        payments = body["payments"]
        if [int(p["id"]) for p in payments] != winners:
            return "payments are not defined exactly for the winners"
        for p in payments:
            i = int(p["id"])
            j = displacing_agent(i, order, conflict)
            crit = None if p["critical"] is None else int(p["critical"])
            if crit != j:
                return f"critical agent of {i} is not entailed by the comparison proofs"
            if j is None:
                if int(p["sigma"]) != 0:
                    return f"winner {i} has no critical agent but a nonzero payment"
            elif not verify_opening(bids[i].commit_size, int(p["size"]), int(p["size_help"]), keys[i], params):
                return f"size opening of winner {i} does not match its commitment"
    except Missing as exc:
        return str(exc)
    return ""


# ---------------------------------------------------------------------------
# Audits and analysis


def auction_view_violations(result: AuctionResult, check_item_ids: bool = True) -> list[str]:
    """Information-flow checks on an honest run's log.

    AU may receive commitments, sums, proof values, public keys, sizes of
    priced winners and computed prices. Each notary may hold at most one
    share of any committed value and never sees an item id in the clear.
    """
    a = result.auction
    problems = []
    au_view = audit_views(a.net.log, [AU])
    allowed = {PC.COMMITMENT, PC.SUM, PC.HELP_RELAY, PC.LIFT, PC.OPENING, PC.CONTROL}
    if au_view.classes() - allowed:
        problems.append("AU received shares or relays")
    for msg in au_view.messages:
        if msg.payload_class == PC.OPENING and set(msg.delivered) != {"owner", "size", "help"}:
            problems.append(f"AU received opening {sorted(msg.delivered)}")
        if msg.payload_class == PC.CONTROL and set(msg.delivered) - {"id", "key", "owner", "sigma"}:
            problems.append(f"AU received control fields {sorted(msg.delivered)}")
    item_ids = set(a.item_ids)
    for name in a.notaries:
        halves: dict[str, set[str]] = {}
        for msg in audit_views(a.net.log, [name]).messages:
            pay = msg.delivered
            if msg.step == "handoff":
                owner = pay["owner"]
                halves.setdefault(value_handle(owner), set()).add(pay["half"])
                for k in range(len(pay["items"])):
                    halves.setdefault(item_handle(owner, k), set()).add(pay["half"])
            elif msg.payload_class == PC.SHARE:
                halves.setdefault(pay["value"], set()).add(pay["half"])
            if check_item_ids and _ints(pay) & item_ids:
                problems.append(f"{name} saw an item id in message {msg.seq}")
        for handle, got in halves.items():
            if len(got) > 1:
                problems.append(f"{name} holds both shares of {handle}")
    return problems


def _ints(payload: Any) -> set[int]:
    if isinstance(payload, bool):
        return set()
    if isinstance(payload, int):
        return {payload}
    if isinstance(payload, dict):
        return set().union(*(_ints(v) for v in payload.values())) if payload else set()
    if isinstance(payload, (list, tuple)):
        return set().union(*(_ints(v) for v in payload)) if payload else set()
    return set()


def topology_leak_probability(s: int, m: int) -> Fraction:
    """Chance that AU guesses a winner's exact bundle given its size ``s``: ``1/(2^m - 2^(m-s))``."""
    if not 1 <= s <= m:
        raise DomainError(f"need 1 <= s <= m, got s={s}, m={m}")
    return Fraction(1, 2**m - 2 ** (m - s))
