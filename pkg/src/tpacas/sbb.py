"""Append-only, hash-chained bulletin board.

Each record's ``chain`` is ``sha256(previous chain || canonical record)``.
Exports are JSON lines: a header naming the digest, then one record per line
in canonical form (sorted keys, no whitespace), so any byte edit to a record
is caught at that record's index.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable

KINDS = ("announcement", "public-key", "bid", "bundle", "comparison-proof", "outcome")
FORMAT = "tpacas-sbb/1"
DIGEST = "sha256"
GENESIS = "0" * 64


def canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def chain_digest(prev: str, index: int, timestamp: int, kind: str, body: Any) -> str:
    content = canonical({"index": index, "timestamp": timestamp, "kind": kind, "body": body})
    return hashlib.sha256((prev + content).encode()).hexdigest()


@dataclass(frozen=True)
class SbbRecord:
    index: int
    timestamp: int
    kind: str
    body: Any
    chain: str

    def to_dict(self) -> dict[str, Any]:
        return {"index": self.index, "timestamp": self.timestamp, "kind": self.kind, "body": self.body, "chain": self.chain}

    def to_line(self) -> str:
        return canonical(self.to_dict())


@dataclass
class Sbb:
    """The board. Only :meth:`append` adds records; nothing removes them."""

    records: list[SbbRecord] = field(default_factory=list)
    clock: int = 0

    @property
    def head(self) -> str:
        return self.records[-1].chain if self.records else GENESIS

    def append(self, kind: str, body: Any) -> SbbRecord:
        if kind not in KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        # round-trip so the stored body is exactly what an export will carry
        body = json.loads(canonical(body))
        self.clock += 1
        index = len(self.records)
        rec = SbbRecord(index, self.clock, kind, body, chain_digest(self.head, index, self.clock, kind, body))
        self.records.append(rec)
        return rec

    def of_kind(self, kind: str) -> list[SbbRecord]:
        return [r for r in self.records if r.kind == kind]

    def export_lines(self) -> list[str]:
        return [canonical({"format": FORMAT, "digest": DIGEST})] + [r.to_line() for r in self.records]


@dataclass(frozen=True)
class ChainFailure:
    index: int
    reason: str


def read_records(lines: Iterable[str]) -> tuple[list[SbbRecord], ChainFailure | None]:
    """Parse and chain-check an export.

    Returns the records up to (not including) the first bad one, and the
    failure if any. Index ``-1`` marks a bad header.
    """
    lines = [ln for ln in (raw.rstrip("\n") for raw in lines) if ln.strip()]
    if not lines:
        return [], ChainFailure(-1, "empty export")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        return [], ChainFailure(-1, "unreadable header")
    if header != {"format": FORMAT, "digest": DIGEST}:
        return [], ChainFailure(-1, f"unsupported header {lines[0]}")
    records: list[SbbRecord] = []
    prev, last_time = GENESIS, 0
    for k, line in enumerate(lines[1:]):
        try:
            raw = json.loads(line)
            rec = SbbRecord(raw["index"], raw["timestamp"], raw["kind"], raw["body"], raw["chain"])
        except (json.JSONDecodeError, KeyError, TypeError):
            return records, ChainFailure(k, "unreadable record")
        if set(raw) != {"index", "timestamp", "kind", "body", "chain"} or rec.to_line() != line:
            return records, ChainFailure(k, "record is not in canonical form")
        if rec.index != k:
            return records, ChainFailure(k, f"index {rec.index} at position {k}")
        if not isinstance(rec.timestamp, int) or rec.timestamp <= last_time:
            return records, ChainFailure(k, "timestamp does not increase")
        if rec.kind not in KINDS:
            return records, ChainFailure(k, f"unknown kind {rec.kind!r}")
        if chain_digest(prev, rec.index, rec.timestamp, rec.kind, rec.body) != rec.chain:
            return records, ChainFailure(k, "hash chain mismatch")
        records.append(rec)
        prev, last_time = rec.chain, rec.timestamp
    return records, None


def rechain(lines: Iterable[str]) -> list[str]:
    """Recompute every chain value; lets tests edit a record's content and
    still exercise the semantic checks behind the chain."""
    lines = list(lines)
    out = [lines[0]]
    prev = GENESIS
    for line in lines[1:]:
        raw = json.loads(line)
        raw["chain"] = chain_digest(prev, raw["index"], raw["timestamp"], raw["kind"], raw["body"])
        prev = raw["chain"]
        out.append(canonical(raw))
    return out
