"""Pedersen commitments over ``G_q`` and random number representation.

Public objects (:class:`CommittedShare`, :class:`CommittedPair`) carry only
group elements. The committed message and help value stay with whoever
created them, in an :class:`Opening`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .group import GroupParams, RandomSource, in_subgroup, sample_scalar


@dataclass(frozen=True)
class RandRep:
    u: int
    v: int

    def value(self, q: int) -> int:
        return (self.u + self.v) % q


@dataclass(frozen=True)
class CommittedShare:
    c: int

    def to_record(self) -> str:
        return str(self.c)

    def well_formed(self, params: GroupParams) -> bool:
        # a value outside the order-q subgroup can pass the proof when the
        # lift exponent is even, e.g. p - c in place of c
        return in_subgroup(self.c, params)


@dataclass(frozen=True)
class CommittedPair:
    first: CommittedShare
    second: CommittedShare

    def to_record(self) -> list[str]:
        return [self.first.to_record(), self.second.to_record()]

    def well_formed(self, params: GroupParams) -> bool:
        return self.first.well_formed(params) and self.second.well_formed(params)

    @classmethod
    def from_record(cls, record: list) -> CommittedPair:
        first, second = record
        return cls(CommittedShare(int(first)), CommittedShare(int(second)))


@dataclass(frozen=True)
class Opening:
    """What the committer keeps: the message and its help value."""

    message: int
    help: int


@dataclass(frozen=True)
class PairOpening:
    rep: RandRep
    first: Opening
    second: Opening


def rand_rep(x: int, params: GroupParams, rng: RandomSource) -> RandRep:
    """Split ``x`` into ``(u, v)`` with ``u`` uniform and ``u + v = x mod q``."""
    q = params.q
    if not 0 <= x < q:
        raise DomainError(f"{x} is not in [0, q)")
    u = sample_scalar(q, rng)
    return RandRep(u, (x - u) % q)


def commit(x: int, r: int, key: int, params: GroupParams) -> CommittedShare:
    """``E(x, r) = g^x * h^r mod p`` under public key ``h = key``."""
    p, q = params.p, params.q
    return CommittedShare(pow(params.g, x % q, p) * pow(key, r % q, p) % p)


def combine(c1: CommittedShare, c2: CommittedShare, params: GroupParams) -> CommittedShare:
    return CommittedShare(c1.c * c2.c % params.p)


def verify_opening(c: CommittedShare, x: int, r: int, key: int, params: GroupParams) -> bool:
    return commit(x, r, key, params).c == c.c


def commit_fresh(x: int, key: int, params: GroupParams, rng: RandomSource) -> tuple[CommittedShare, Opening]:
    r = sample_scalar(params.q, rng)
    return commit(x, r, key, params), Opening(x % params.q, r)


def commit_rep(x: int, key: int, params: GroupParams, rng: RandomSource) -> tuple[CommittedPair, PairOpening]:
    """``E(R(x))``: represent ``x`` and commit both shares with fresh help values.

    Draw order is ``u``, then the help value for ``u``, then for ``v``.
    """
    rep = rand_rep(x, params, rng)
    c1, o1 = commit_fresh(rep.u, key, params, rng)
    c2, o2 = commit_fresh(rep.v, key, params, rng)
    return CommittedPair(c1, c2), PairOpening(rep, o1, o2)
