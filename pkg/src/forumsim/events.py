"""Append-only event log: record type and newline-delimited JSON IO.

The event log is the sole input to every analysis. One JSON object per
line, UTF-8, fields in a fixed order with absent fields omitted, so a
seeded rerun writes a byte-identical file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

EVENT_TYPES = (
    "join",
    "churn",
    "activate",
    "post",
    "comment",
    "read",
    "search",
    "follow",
    "mention_reply",
)

# Serialization order; also the exhaustive set of wire field names.
EVENT_FIELDS = (
    "seq",
    "day",
    "round",
    "type",
    "agent",
    "post_id",
    "comment_id",
    "parent_id",
    "root_id",
    "followee",
    "title",
    "text",
    "url",
    "topics",
    "mentions",
)

# Event types that count as agent actions (for activity and churn purposes).
ACTION_EVENT_TYPES = frozenset(
    {"post", "comment", "mention_reply", "read", "search", "follow"}
)
# Comment-like events: both create CommentRecords and enter thread stats.
COMMENT_EVENT_TYPES = frozenset({"comment", "mention_reply"})


class EventLogError(ValueError):
    """Raised on malformed event-log input; carries the offending line."""

    def __init__(self, message: str, lineno: int | None = None, seq: int | None = None):
        self.lineno = lineno
        self.seq = seq
        where = []
        if lineno is not None:
            where.append(f"line {lineno}")
        if seq is not None:
            where.append(f"seq {seq}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


@dataclass(frozen=True)
class EventRecord:
    seq: int
    day: int
    round: int
    type: str
    agent: int | None = None
    post_id: int | None = None
    comment_id: int | None = None
    parent_id: int | None = None
    root_id: int | None = None
    followee: int | None = None
    title: str | None = None
    text: str | None = None
    url: str | None = None
    topics: tuple[str, ...] | None = None
    mentions: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        out = {}
        for name in EVENT_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = list(value)
            out[name] = value
        return out

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))


def parse_event_line(line: str, lineno: int | None = None) -> EventRecord:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise EventLogError(f"invalid JSON: {exc.msg}", lineno=lineno) from exc
    if not isinstance(raw, dict):
        raise EventLogError("event line is not an object", lineno=lineno)
    unknown = set(raw) - set(EVENT_FIELDS)
    if unknown:
        raise EventLogError(
            f"unknown fields {sorted(unknown)}", lineno=lineno, seq=raw.get("seq")
        )
    for required in ("seq", "day", "round", "type"):
        if required not in raw:
            raise EventLogError(f"missing field {required!r}", lineno=lineno, seq=raw.get("seq"))
    if raw["type"] not in EVENT_TYPES:
        raise EventLogError(
            f"unknown event type {raw['type']!r}", lineno=lineno, seq=raw.get("seq")
        )
    if "topics" in raw:
        raw["topics"] = tuple(raw["topics"])
    if "mentions" in raw:
        raw["mentions"] = tuple(raw["mentions"])
    try:
        return EventRecord(**raw)
    except TypeError as exc:
        raise EventLogError(str(exc), lineno=lineno, seq=raw.get("seq")) from exc


def write_events(path, events: Iterable[EventRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(ev.to_json_line())
            fh.write("\n")


def iter_events(path) -> Iterator[EventRecord]:
    last_seq = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            ev = parse_event_line(line, lineno=lineno)
            if ev.seq <= last_seq:
                raise EventLogError(
                    f"seq not strictly increasing (after {last_seq})",
                    lineno=lineno,
                    seq=ev.seq,
                )
            last_seq = ev.seq
            yield ev


def read_events(path) -> list[EventRecord]:
    return list(iter_events(path))
