"""Interaction events, item catalogs, event logs, and per-user sequences.

The canonical on-disk format is a UTF-8 CSV with header
``user_id,item_id,timestamp,event_type`` where the timestamp is integer
seconds and the event type is one of ``like``, ``dislike``, ``play``,
``skip``. Play-only datasets use ``play`` on every row.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import EmptyLogError, ParseError

EVENT_TYPES = ("like", "dislike", "play", "skip")
CSV_HEADER = ("user_id", "item_id", "timestamp", "event_type")

DEFAULT_MAX_SEQ_LEN = 150


@dataclass(frozen=True)
class InteractionEvent:
    """One timestamped (user, item, event-type) record."""

    user: str
    item: str
    timestamp: int
    event_type: str

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp {self.timestamp}")
        if self.event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event type {self.event_type!r}")


class Catalog:
    """Bijective map between raw item ids and dense indices 0..N-1."""

    def __init__(self, items: Iterable[str]):
        self._items: list[str] = list(items)
        self._index: dict[str, int] = {raw: i for i, raw in enumerate(self._items)}
        if len(self._index) != len(self._items):
            raise ValueError("duplicate item id in catalog")

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, raw: str) -> bool:
        return raw in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Catalog) and self._items == other._items

    def index(self, raw: str) -> int:
        return self._index[raw]

    def raw(self, index: int) -> str:
        return self._items[index]

    @property
    def items(self) -> list[str]:
        return list(self._items)


@dataclass(frozen=True)
class UserSequence:
    """Ordered item indices for one user, truncated to the most recent l_max."""

    user: str
    items: np.ndarray  # int64 catalog indices, event order
    l_max: int = DEFAULT_MAX_SEQ_LEN

    def __len__(self) -> int:
        return len(self.items)


class EventLog:
    """Immutable, timestamp-sorted event collection with a catalog.

    Ties in timestamp keep input order (the sort is stable), so ingestion is
    deterministic and round-trips through the CSV format.
    """

    def __init__(self, events: Iterable[InteractionEvent], catalog: Catalog):
        self.events: tuple[InteractionEvent, ...] = tuple(events)
        self.catalog = catalog
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.timestamp < prev.timestamp:
                raise ValueError("events not sorted by timestamp")
        self._by_user: dict[str, list[int]] = {}
        for pos, ev in enumerate(self.events):
            if ev.item not in catalog:
                raise ValueError(f"item {ev.item!r} missing from catalog")
            self._by_user.setdefault(ev.user, []).append(pos)

    @classmethod
    def from_events(cls, events: Iterable[InteractionEvent]) -> "EventLog":
        """Sort events (stable) and build the catalog by first appearance."""
        ordered = sorted(events, key=lambda ev: ev.timestamp)
        seen: dict[str, None] = {}
        for ev in ordered:
            if ev.item not in seen:
                seen[ev.item] = None
        return cls(ordered, Catalog(seen))

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return (isinstance(other, EventLog)
                and self.events == other.events
                and self.catalog == other.catalog)

    @property
    def users(self) -> list[str]:
        return list(self._by_user)

    def user_events(self, user: str) -> list[InteractionEvent]:
        return [self.events[i] for i in self._by_user.get(user, [])]

    def user_item_indices(self, user: str) -> np.ndarray:
        idx = [self.catalog.index(self.events[i].item)
               for i in self._by_user.get(user, [])]
        return np.asarray(idx, dtype=np.int64)

    def filtered(self, keep) -> "EventLog":
        """New log over the same catalog, keeping events where keep(ev)."""
        return EventLog([ev for ev in self.events if keep(ev)], self.catalog)

    def item_counts(self) -> np.ndarray:
        """Global per-item interaction counts, indexed by catalog position."""
        idx = np.fromiter((self.catalog.index(ev.item) for ev in self.events),
                          dtype=np.int64, count=len(self.events))
        return np.bincount(idx, minlength=len(self.catalog))


def ingest_events(source: IO[str]) -> EventLog:
    """Parse the canonical event CSV from a readable character stream.

    Raises ParseError with the offending 1-based line number for malformed
    rows, and EmptyLogError when the stream holds no events.
    """
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyLogError("no input") from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise ParseError(1, f"expected header {','.join(CSV_HEADER)}")

    events: list[InteractionEvent] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(lineno, f"expected 4 fields, got {len(row)}")
        user, item, ts_text, etype = (f.strip() for f in row)
        try:
            timestamp = int(ts_text)
        except ValueError:
            raise ParseError(lineno, f"non-integer timestamp {ts_text!r}") from None
        if timestamp < 0:
            raise ParseError(lineno, f"negative timestamp {timestamp}")
        if etype not in EVENT_TYPES:
            raise ParseError(lineno, f"unknown event type {etype!r}")
        events.append(InteractionEvent(user, item, timestamp, etype))

    if not events:
        raise EmptyLogError("no events in input")
    return EventLog.from_events(events)


def emit_events(log: EventLog, sink: IO[str]) -> None:
    """Write a log back to the canonical CSV format."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for ev in log.events:
        writer.writerow((ev.user, ev.item, ev.timestamp, ev.event_type))


def load_events(path) -> EventLog:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return ingest_events(fh)


def save_events(log: EventLog, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        emit_events(log, fh)


def user_sequences(log: EventLog, l_max: int | None = DEFAULT_MAX_SEQ_LEN
                   ) -> dict[str, UserSequence]:
    """Per-user item-index sequences in event order.

    Users with more than l_max events keep only the most recent l_max;
    l_max=None disables truncation (used for full scoring histories).
    """
    if l_max is not None and l_max < 1:
        raise ValueError("l_max must be positive")
    out: dict[str, UserSequence] = {}
    for user in log.users:
        items = log.user_item_indices(user)
        if l_max is not None and len(items) > l_max:
            items = items[-l_max:]
        out[user] = UserSequence(user, items, len(items) if l_max is None else l_max)
    return out
