"""Schnorr-group parameters and modular arithmetic.

Everything downstream works in ``Z_q`` (exponents, shares, help values)
and in the order-``q`` subgroup ``G_q`` of ``Z*_p`` (commitments).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Protocol

from .errors import DomainError, GroupError, NoInverseError

MR_ROUNDS = 40

_SMALL_PRIMES: list[int] = []


def _small_primes(limit: int = 20000) -> list[int]:
    if not _SMALL_PRIMES:
        sieve = bytearray([1]) * (limit + 1)
        sieve[0:2] = b"\x00\x00"
        for i in range(2, math.isqrt(limit) + 1):
            if sieve[i]:
                sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
        _SMALL_PRIMES.extend(i for i, flag in enumerate(sieve) if flag)
    return _SMALL_PRIMES


class RandomSource(Protocol):
    def randrange(self, stop: int) -> int: ...


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int
    d_max: int

    @property
    def big_d_max(self) -> int:
        """Largest possible product of two multipliers, ``d_max ** 2``."""
        return self.d_max * self.d_max

    @property
    def operand_limit(self) -> int:
        """Exclusive upper bound for values compared with blinded PPC.

        ``x < q / (2 * D_max)``, kept in integers.
        """
        return (self.q - 1) // (2 * self.big_d_max) + 1

    def to_record(self) -> dict[str, str]:
        return {"p": str(self.p), "q": str(self.q), "g": str(self.g), "d_max": str(self.d_max)}

    @classmethod
    def from_record(cls, record: dict) -> GroupParams:
        try:
            return cls(*(int(record[k]) for k in ("p", "q", "g", "d_max")))
        except (KeyError, TypeError, ValueError) as exc:
            raise GroupError(f"malformed group record: {exc}") from exc

    def summary(self) -> str:
        return f"p:{self.p.bit_length()}b q:{self.q.bit_length()}b d_max={self.d_max}"


@dataclass(frozen=True)
class KeyPair:
    secret: int
    public: int


def mod_exp(base: int, exponent: int, params: GroupParams) -> int:
    """``base ** exponent mod p``; negative exponents go through the inverse."""
    base %= params.p
    if exponent < 0 and base == 0:
        raise NoInverseError("0 has no inverse modulo p")
    return pow(base, exponent, params.p)


def mod_inv(value: int, modulus: int) -> int:
    try:
        return pow(value, -1, modulus)
    except ValueError as exc:
        raise NoInverseError(f"{value} is not invertible modulo {modulus}") from exc


def sample_scalar(range_max: int, rng: RandomSource) -> int:
    """Uniform integer in ``[0, range_max)`` drawn from ``rng``."""
    if range_max < 1:
        raise DomainError("range_max must be at least 1")
    return rng.randrange(range_max)


def sample_multiplier(upper: int, rng: RandomSource) -> int:
    """Uniform integer in ``[1, upper]``."""
    return 1 + sample_scalar(upper, rng)


def is_probable_prime(n: int, rounds: int = MR_ROUNDS) -> bool:
    """Miller-Rabin with ``rounds`` bases; error below ``4 ** -rounds``.

    Bases come from a generator seeded by ``n`` so the verdict is reproducible
    and never touches a caller's random stream.
    """
    if n < 2:
        return False
    for s in _small_primes()[:60]:
        if n == s:
            return True
        if n % s == 0:
            return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    bases = random.Random(n)
    for i in range(rounds):
        a = 2 if i == 0 else bases.randrange(3, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def validate_group(params: GroupParams) -> None:
    """Raise :class:`GroupError` unless every parameter invariant holds."""
    p, q, g = params.p, params.q, params.g
    if not is_probable_prime(q):
        raise GroupError("q is not prime")
    if not is_probable_prime(p):
        raise GroupError("p is not prime")
    if (p - 1) % q:
        raise GroupError("q does not divide p - 1")
    if not 1 < g < p or pow(g, q, p) != 1:
        raise GroupError("g does not generate the order-q subgroup")
    if params.d_max < 1:
        raise GroupError("d_max must be positive")
    if params.big_d_max >= q:
        raise GroupError("d_max ** 2 must be smaller than q")


def in_subgroup(value: int, params: GroupParams) -> bool:
    return 0 < value < params.p and pow(value, params.q, params.p) == 1


def generate_group(bit_length: int, d_max: int, rng: RandomSource, window: int = 4096) -> GroupParams:
    """Safe-prime group with a ``bit_length``-bit ``q`` and ``p = 2q + 1``.

    Candidates for ``q`` are scanned in windows that are first sieved so that
    neither ``q`` nor ``2q + 1`` has a small factor.
    """
    if bit_length < 16:
        raise DomainError("bit_length must be at least 16")
    if d_max < 1:
        raise GroupError("d_max must be positive")
    if d_max * d_max >= 1 << (bit_length - 1):
        raise GroupError(f"d_max ** 2 = {d_max * d_max} does not fit below q")
    primes = [s for s in _small_primes() if s.bit_length() < bit_length - 1]
    while True:
        start = (1 << (bit_length - 1)) | sample_scalar(1 << (bit_length - 1), rng) | 1
        alive = bytearray([1]) * window
        for s in primes[1:]:
            # q = start + 2k; strike k where s | q or s | 2q + 1.
            half = mod_inv(2, s)
            k0 = (-start) * half % s
            alive[k0::s] = bytes(len(alive[k0::s]))
            k1 = (-(2 * start + 1)) * mod_inv(4, s) % s
            alive[k1::s] = bytes(len(alive[k1::s]))
        for k in range(window):
            if not alive[k]:
                continue
            q = start + 2 * k
            if q.bit_length() != bit_length:
                break
            p = 2 * q + 1
            if pow(2, q - 1, q) != 1 or pow(2, p - 1, p) != 1:
                continue
            if is_probable_prime(q) and is_probable_prime(p):
                g = _subgroup_generator(p, q, rng)
                params = GroupParams(p, q, g, d_max)
                validate_group(params)
                return params


def _subgroup_generator(p: int, q: int, rng: RandomSource) -> int:
    # Squares generate the quadratic residues, which are exactly G_q when p = 2q + 1.
    while True:
        h = 2 + sample_scalar(p - 3, rng)
        g = h * h % p
        if g != 1:
            return g


def generate_keypair(params: GroupParams, rng: RandomSource) -> KeyPair:
    secret = sample_multiplier(params.q - 1, rng)
    return KeyPair(secret, pow(params.g, secret, params.p))


def keypair_from_secret(secret: int, params: GroupParams) -> KeyPair:
    secret %= params.q
    if secret == 0:
        raise DomainError("secret key must be non-zero modulo q")
    return KeyPair(secret, pow(params.g, secret, params.p))


def bounded_dlog(target: int, base: int, bound: int, params: GroupParams) -> int | None:
    """Smallest ``e`` in ``[0, bound)`` with ``base ** e == target``, else None.

    Baby-step giant-step; memory grows with ``sqrt(bound)``.
    """
    p = params.p
    step = math.isqrt(max(bound - 1, 0)) + 1
    table: dict[int, int] = {}
    cur = 1
    for j in range(step):
        table.setdefault(cur, j)
        cur = cur * base % p
    giant = pow(base, -step, p)
    cur = target % p
    for i in range(step + 1):
        j = table.get(cur)
        if j is not None and i * step + j < bound:
            return i * step + j
        cur = cur * giant % p
    return None


def toy_group() -> GroupParams:
    """The worked-example group: ``p = 1187 = 2 * 593 + 1``, ``g = 3``, ``d_max = 5``."""
    return GroupParams(p=1187, q=593, g=3, d_max=5)


# RFC 2409 second Oakley group; p is a safe prime and 2 has order (p - 1) / 2.
_MODP_1024_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
    "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
    "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
    "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE65381"
    "FFFFFFFFFFFFFFFF",
    16,
)


def modp_1024(d_max: int = 1 << 32) -> GroupParams:
    """A fixed 1024-bit safe-prime group for full-size runs."""
    return GroupParams(p=_MODP_1024_P, q=(_MODP_1024_P - 1) // 2, g=2, d_max=d_max)


class ScriptedSource:
    """Random source that replays a fixed list of draws, in order.

    Used to reproduce hand-worked examples exactly. Each draw is checked
    against the range the caller asked for.
    """

    def __init__(self, draws: list[int]) -> None:
        self._draws = list(draws)
        self._pos = 0

    def randrange(self, stop: int) -> int:
        if self._pos >= len(self._draws):
            raise DomainError("scripted random source exhausted")
        value = self._draws[self._pos]
        self._pos += 1
        if not 0 <= value < stop:
            raise DomainError(f"scripted draw {value} outside [0, {stop})")
        return value

    @property
    def remaining(self) -> int:
        return len(self._draws) - self._pos
