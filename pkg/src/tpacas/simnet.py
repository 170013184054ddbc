"""In-memory confidential channels between named parties.

Every send is logged in order. Delivery is FIFO per recipient. Tamper hooks
sit between the log and the recipient's mailbox so a test can corrupt a
payload in flight while the log keeps both versions.
"""

from __future__ import annotations

import json
import shlex
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator

from .errors import ProtocolError, RoutingError


class PayloadClass(str, Enum):
    COMMITMENT = "commitment"
    SHARE = "share"
    SCALED_RELAY = "scaled-relay"
    SUM = "sum"
    HELP_RELAY = "help-relay"
    LIFT = "lift"
    OPENING = "opening"
    CONTROL = "control"


@dataclass
class Message:
    seq: int
    sender: str
    receiver: str
    step: str
    payload_class: PayloadClass
    payload: dict[str, Any]
    tampered: dict[str, Any] | None = None

    @property
    def delivered(self) -> dict[str, Any]:
        """The payload the recipient actually saw."""
        return self.payload if self.tampered is None else self.tampered

    def to_record(self) -> dict[str, Any]:
        rec = {
            "seq": self.seq,
            "step": self.step,
            "from": self.sender,
            "to": self.receiver,
            "class": self.payload_class.value,
            "payload": encode(self.payload),
        }
        if self.tampered is not None:
            rec["tampered"] = encode(self.tampered)
        return rec


def encode(value: Any) -> Any:
    """Integers become decimal strings, recursively; everything else is kept."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, dict):
        return {k: encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    return value


@dataclass
class TamperHook:
    predicate: Callable[[Message], bool]
    mutate: Callable[[dict[str, Any]], dict[str, Any]]
    limit: int | None = None
    fired: int = 0

    def matches(self, msg: Message) -> bool:
        if self.limit is not None and self.fired >= self.limit:
            return False
        return bool(self.predicate(msg))


@dataclass(frozen=True)
class Receipt:
    seq: int
    tampered: bool


class Net:
    """Mailboxes, the ordered message log, and the tamper hooks of one run."""

    def __init__(
        self,
        hooks: Iterable[TamperHook] = (),
        step_classes: dict[str, set[PayloadClass]] | None = None,
    ) -> None:
        self.hooks = list(hooks)
        self.step_classes = step_classes
        self.log: list[Message] = []
        self.tamper_log: list[int] = []
        self._boxes: dict[str, deque[Message]] = {}

    def register(self, name: str) -> None:
        self._boxes.setdefault(name, deque())

    def is_registered(self, name: str) -> bool:
        return name in self._boxes

    def send(
        self,
        sender: str,
        receiver: str,
        step: str,
        payload_class: PayloadClass,
        payload: dict[str, Any],
    ) -> Receipt:
        for end in (sender, receiver):
            if end not in self._boxes:
                raise RoutingError(f"unregistered endpoint {end!r}")
        if self.step_classes is not None:
            allowed = self.step_classes.get(step)
            if allowed is not None and payload_class not in allowed:
                raise ProtocolError(f"class {payload_class.value} not allowed in step {step}")
        msg = Message(len(self.log), sender, receiver, step, PayloadClass(payload_class), dict(payload))
        self.log.append(msg)
        for hook in self.hooks:
            if hook.matches(msg):
                hook.fired += 1
                msg.tampered = hook.mutate(dict(msg.delivered))
                self.tamper_log.append(msg.seq)
        self._boxes[receiver].append(msg)
        return Receipt(msg.seq, msg.tampered is not None)

    def recv(
        self,
        name: str,
        step: str | None = None,
        payload_class: PayloadClass | None = None,
    ) -> dict[str, Any]:
        """Pop the oldest message for ``name`` and return its delivered payload."""
        box = self._boxes.get(name)
        if box is None:
            raise RoutingError(f"unregistered endpoint {name!r}")
        if not box:
            raise ProtocolError(f"{name} expected a message but its mailbox is empty")
        msg = box.popleft()
        if step is not None and msg.step != step:
            raise ProtocolError(f"{name} expected step {step}, got {msg.step}")
        if payload_class is not None and msg.payload_class != payload_class:
            raise ProtocolError(f"{name} expected {payload_class.value}, got {msg.payload_class.value}")
        return dict(msg.delivered)

    def pending(self, name: str) -> int:
        return len(self._boxes[name])

    def export_lines(self, header: dict[str, Any]) -> list[str]:
        lines = [json.dumps(encode(header), sort_keys=True, separators=(",", ":"))]
        lines.extend(json.dumps(m.to_record(), sort_keys=True, separators=(",", ":")) for m in self.log)
        return lines


@dataclass(frozen=True)
class View:
    """Everything a set of parties received during a run."""

    members: frozenset[str]
    messages: tuple[Message, ...]

    def items(self, payload_class: PayloadClass | None = None) -> Iterator[tuple[Message, str, Any]]:
        for msg in self.messages:
            if payload_class is None or msg.payload_class == payload_class:
                for key, value in msg.delivered.items():
                    yield msg, key, value

    def classes(self) -> set[PayloadClass]:
        return {m.payload_class for m in self.messages}

    def __len__(self) -> int:
        return len(self.messages)


def audit_views(log: Iterable[Message], grouping: Iterable[str]) -> View:
    members = frozenset(grouping)
    return View(members, tuple(m for m in log if m.receiver in members))


def field_hook(
    field_name: str,
    delta: int | None = None,
    *,
    value: int | None = None,
    step: str | None = None,
    sender: str | None = None,
    receiver: str | None = None,
    payload_class: PayloadClass | str | None = None,
    limit: int | None = 1,
) -> TamperHook:
    """Hook that adds ``delta`` to (or overwrites) one payload field."""
    if (delta is None) == (value is None):
        raise ValueError("give exactly one of delta or value")
    cls = PayloadClass(payload_class) if payload_class is not None else None

    def predicate(msg: Message) -> bool:
        return (
            (step is None or msg.step == step)
            and (sender is None or msg.sender == sender)
            and (receiver is None or msg.receiver == receiver)
            and (cls is None or msg.payload_class == cls)
            and field_name in msg.payload
        )

    def mutate(payload: dict[str, Any]) -> dict[str, Any]:
        payload[field_name] = value if value is not None else payload[field_name] + delta
        return payload

    return TamperHook(predicate, mutate, limit)


_SELECTOR_KEYS = {"step": "step", "from": "sender", "to": "receiver", "class": "payload_class"}


def parse_hooks(text: str) -> list[TamperHook]:
    """Parse a tamper scenario: one hook per line of ``key=value`` tokens.

    Selectors: ``step``, ``from``, ``to``, ``class``. Mutation: ``field`` plus
    ``add=N`` or ``set=N``. Optional ``limit=N`` (default 1). ``#`` starts a
    comment.
    """
    hooks = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            opts = dict(tok.split("=", 1) for tok in shlex.split(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: expected key=value tokens") from exc
        kwargs: dict[str, Any] = {_SELECTOR_KEYS[k]: v for k, v in opts.items() if k in _SELECTOR_KEYS}
        unknown = set(opts) - set(_SELECTOR_KEYS) - {"field", "add", "set", "limit"}
        if unknown or "field" not in opts:
            raise ValueError(f"line {lineno}: bad hook specification")
        if "limit" in opts:
            kwargs["limit"] = None if opts["limit"] == "none" else int(opts["limit"])
        try:
            hooks.append(
                field_hook(
                    opts["field"],
                    int(opts["add"]) if "add" in opts else None,
                    value=int(opts["set"]) if "set" in opts else None,
                    **kwargs,
                )
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    return hooks


def load_hooks(path: str | Path) -> list[TamperHook]:
    return parse_hooks(Path(path).read_text())
