# scheduler.py
"""Deterministic event queue over integer femtosecond timestamps."""

import heapq
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any


class EventKind(IntEnum):
    """Processing order for events that share a timestamp (lower first)."""
    DRIFT = 0
    PIPELINE = 1
    LOCK = 2
    EDGE = 3
    RECORD = 4


@dataclass(order=True)
class ScheduledEvent:
    """
    Heap item ordering policy:
    1. time
    2. priority (lower value wins)
    3. seq (submission order tie-break)
    """
    time: int
    priority: int
    seq: int
    kind: Any = field(compare=False)
    node: int | None = field(default=None, compare=False)
    payload: Any = field(default=None, compare=False)


class EventQueue:
    def __init__(self, start: int = 0):
        self._now = start
        self._queue: list[ScheduledEvent] = []
        self._next_seq = 0

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, time: int, kind, node=None, payload=None) -> ScheduledEvent:
        if time < self._now:
            raise ValueError(f"cannot schedule at {time} before now={self._now}")
        event = ScheduledEvent(time, int(kind), self._next_seq, kind, node, payload)
        self._next_seq += 1
        heapq.heappush(self._queue, event)
        return event

    def has_pending(self) -> bool:
        return bool(self._queue)

    def peek_time(self) -> int | None:
        return self._queue[0].time if self._queue else None

    def pop(self) -> ScheduledEvent | None:
        if not self._queue:
            return None
        event = heapq.heappop(self._queue)
        self._now = event.time
        return event

    def __len__(self):
        return len(self._queue)


__all__ = ['EventKind', 'ScheduledEvent', 'EventQueue']
