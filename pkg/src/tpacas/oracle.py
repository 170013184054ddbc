"""Plaintext single-minded greedy auction and brute-force optimal welfare.

This is the ground truth the private auction is checked against. It shares
only the fixed-point helpers with the private implementation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import DomainError, InstanceError
from .group import RandomSource

MAX_EXHAUSTIVE_BIDS = 20


def scaled_weight(valuation: int, size: int, precision: int) -> int:
    """``floor(10**precision * valuation / sqrt(size))`` in exact integer arithmetic."""
    if size < 1 or valuation < 0 or precision < 0:
        raise DomainError("need size >= 1, valuation >= 0, precision >= 0")
    return math.isqrt(10 ** (2 * precision) * valuation * valuation // size)


def scaled_payment(w: int, size: int) -> int:
    """``ceil(w * sqrt(size))``: the critical price at the same scale as ``w``.

    Rounding up keeps the charge at or above the exact critical value, so a
    winner at the threshold is never undercharged by truncation.
    """
    sq = w * w * size
    root = math.isqrt(sq)
    return root if root * root == sq else root + 1


def threshold_weight(w_critical: int, wins_ties: bool) -> int:
    """Smallest scaled weight that still ranks ahead of the critical agent."""
    return w_critical if wins_ties else w_critical + 1


@dataclass(frozen=True)
class Bid:
    name: str
    valuation: int
    bundle: frozenset[int]


@dataclass(frozen=True)
class AuctionInstance:
    m: int
    bids: tuple[Bid, ...]
    seed: object = None
    precision: int | None = None
    bits: int | None = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise InstanceError("items must be at least 1")
        names = [b.name for b in self.bids]
        if len(set(names)) != len(names):
            raise InstanceError("agent names must be distinct")
        for b in self.bids:
            if b.valuation <= 0:
                raise InstanceError(f"agent {b.name}: valuation must be positive")
            if not b.bundle or not b.bundle <= set(range(1, self.m + 1)):
                raise InstanceError(f"agent {b.name}: bundle must be a non-empty subset of 1..{self.m}")

    def to_dict(self) -> dict:
        out: dict = {
            "items": self.m,
            "agents": [
                {"name": b.name, "valuation": b.valuation, "bundle": sorted(b.bundle)} for b in self.bids
            ],
        }
        for key in ("seed", "precision", "bits"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out

    def with_valuation(self, index: int, valuation: int) -> AuctionInstance:
        bids = list(self.bids)
        bids[index] = Bid(bids[index].name, valuation, bids[index].bundle)
        return AuctionInstance(self.m, tuple(bids), self.seed, self.precision, self.bits)


def _line_of(text: str, needle: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return lineno
    return None


def parse_instance(text: str) -> AuctionInstance:
    """Read the JSON instance format; errors carry a line number when known."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(exc.msg, exc.lineno) from None
    if not isinstance(data, dict):
        raise InstanceError("top level must be an object", 1)
    if "items" not in data or "agents" not in data:
        raise InstanceError("missing 'items' or 'agents'", 1)
    m = data["items"]
    if not isinstance(m, int) or isinstance(m, bool):
        raise InstanceError("'items' must be an integer", _line_of(text, '"items"'))
    agents = data["agents"]
    if not isinstance(agents, list):
        raise InstanceError("'agents' must be a list", _line_of(text, '"agents"'))
    bids = []
    for i, a in enumerate(agents):
        where = _line_of(text, json.dumps(a.get("name"))) if isinstance(a, dict) else None
        try:
            name = str(a["name"])
            valuation = a["valuation"]
            bundle = a["bundle"]
            if not isinstance(valuation, int) or isinstance(valuation, bool):
                raise TypeError("valuation must be an integer")
            if not isinstance(bundle, list) or not all(isinstance(x, int) for x in bundle):
                raise TypeError("bundle must be a list of item numbers")
        except (KeyError, TypeError) as exc:
            raise InstanceError(f"agent {i}: {exc}", where) from None
        bids.append(Bid(name, valuation, frozenset(bundle)))
    try:
        return AuctionInstance(m, tuple(bids), data.get("seed"), data.get("precision"), data.get("bits"))
    except InstanceError as exc:
        raise InstanceError(str(exc), _line_of(text, '"agents"')) from None


def load_instance(path: str | Path) -> AuctionInstance:
    return parse_instance(Path(path).read_text())


@dataclass
class IcasmResult:
    order: list[int]
    winners: list[int]
    critical: dict[int, int | None]
    payments_scaled: dict[int, int]
    weights: list[int]
    precision: int
    names: list[str] = field(default_factory=list)

    def payment(self, i: int) -> Fraction:
        return Fraction(self.payments_scaled[i], 10**self.precision)

    def welfare(self, instance: AuctionInstance) -> int:
        return sum(instance.bids[i].valuation for i in self.winners)

    def utility(self, i: int, true_valuation: int) -> Fraction:
        if i not in self.payments_scaled:
            return Fraction(0)
        return true_valuation - self.payment(i)

    def by_name(self) -> tuple[list[str], dict[str, int]]:
        return [self.names[i] for i in self.winners], {self.names[i]: s for i, s in self.payments_scaled.items()}


def greedy_order(weights: Sequence[int], tie_break: Sequence[int]) -> list[int]:
    return sorted(range(len(weights)), key=lambda i: (-weights[i], tie_break[i]))


def select_winners(order: Sequence[int], conflict: Callable[[int, int], bool]) -> list[int]:
    winners: list[int] = []
    for a in order:
        if not any(conflict(a, w) for w in winners):
            winners.append(a)
    return winners


def critical_agent(
    i: int, order: Sequence[int], conflict: Callable[[int, int], bool], rule: str = "critical"
) -> int | None:
    """Agent whose weight sets winner ``i``'s price, or None if ``i`` pays nothing.

    ``critical``: rerun the greedy pass without ``i``; the first admitted agent
    that conflicts with ``i`` is the one that would have displaced it.
    ``literal``: the first ``j`` conflicting with ``i`` such that no earlier
    agent other than ``i`` conflicts with ``j``.
    """
    if rule == "critical":
        admitted: list[int] = []
        for j in order:
            if j == i or any(conflict(j, k) for k in admitted):
                continue
            if conflict(i, j):
                return j
            admitted.append(j)
        return None
    if rule == "literal":
        for pos, j in enumerate(order):
            if j == i or not conflict(i, j):
                continue
            if all(not conflict(k, j) for k in order[:pos] if k != i):
                return j
        return None
    raise ValueError(f"unknown payment rule {rule!r}")


def icasm_solve(
    instance: AuctionInstance,
    tie_break: Sequence[int] | None = None,
    precision: int = 2,
    rule: str = "critical",
) -> IcasmResult:
    """Sort by scaled ``valuation / sqrt(|S|)``, admit greedily, charge critical prices.

    ``tie_break`` gives each bid a key; equal weights go to the smaller key.
    The default key is the bid's position.
    """
    bids = instance.bids
    keys = list(tie_break) if tie_break is not None else list(range(len(bids)))
    weights = [scaled_weight(b.valuation, len(b.bundle), precision) for b in bids]
    order = greedy_order(weights, keys)

    def conflict(a: int, b: int) -> bool:
        return not bids[a].bundle.isdisjoint(bids[b].bundle)

    winners = select_winners(order, conflict)
    critical = {i: critical_agent(i, order, conflict, rule) for i in winners}
    payments = {
        i: 0 if j is None else scaled_payment(threshold_weight(weights[j], keys[i] < keys[j]), len(bids[i].bundle))
        for i, j in critical.items()
    }
    return IcasmResult(order, winners, critical, payments, weights, precision, [b.name for b in bids])


def optimal_welfare(instance: AuctionInstance) -> int:
    """Best total valuation over conflict-free subsets, by branch and bound."""
    bids = instance.bids
    if len(bids) > MAX_EXHAUSTIVE_BIDS:
        raise DomainError(f"{len(bids)} bids exceed the exhaustive limit of {MAX_EXHAUSTIVE_BIDS}")
    masks = [sum(1 << (i - 1) for i in b.bundle) for b in bids]
    idx = sorted(range(len(bids)), key=lambda i: -bids[i].valuation)
    vals = [bids[i].valuation for i in idx]
    ms = [masks[i] for i in idx]
    suffix = [0] * (len(vals) + 1)
    for k in range(len(vals) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + vals[k]
    best = 0

    def dfs(k: int, used: int, total: int) -> None:
        nonlocal best
        if total > best:
            best = total
        if k == len(vals) or total + suffix[k] <= best:
            return
        if not used & ms[k]:
            dfs(k + 1, used | ms[k], total + vals[k])
        dfs(k + 1, used, total)

    dfs(0, 0, 0)
    return best


def approximation_ratio(instance: AuctionInstance, precision: int = 2) -> Fraction:
    approx = icasm_solve(instance, precision=precision).welfare(instance)
    return Fraction(optimal_welfare(instance), approx)


def random_instance(
    n: int, m: int, rng: RandomSource, value_range: tuple[int, int] = (1, 100), min_size: int = 2
) -> AuctionInstance:
    """``n`` bids on ``m`` items; bundles uniform over subsets of size ``>= min_size``."""
    if m < min_size:
        raise DomainError(f"need at least {min_size} items")
    lo, hi = value_range
    bids = []
    for i in range(n):
        while True:
            mask = rng.randrange(1 << m)
            if mask.bit_count() >= min_size:
                break
        bundle = frozenset(k + 1 for k in range(m) if mask >> k & 1)
        bids.append(Bid(f"b{i + 1}", lo + rng.randrange(hi - lo + 1), bundle))
    return AuctionInstance(m, tuple(bids))


def deviation_gains(
    instance: AuctionInstance,
    grid: Iterable[int],
    tie_break: Sequence[int] | None = None,
    precision: int = 2,
    rule: str = "critical",
) -> list[tuple[int, int, Fraction]]:
    """Every unilateral valuation misreport that strictly beats truth-telling.

    Returns ``(agent, reported valuation, utility gain)`` triples; an empty
    list means no profitable deviation on the grid.
    """
    truthful = icasm_solve(instance, tie_break, precision, rule)
    gains = []
    grid = list(grid)
    for i, bid in enumerate(instance.bids):
        base = truthful.utility(i, bid.valuation)
        for report in grid:
            if report == bid.valuation or report <= 0:
                continue
            res = icasm_solve(instance.with_valuation(i, report), tie_break, precision, rule)
            u = res.utility(i, bid.valuation)
            if u > base:
                gains.append((i, report, u - base))
    return gains
