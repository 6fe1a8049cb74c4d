"""Очередь событий суперкадра"""
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, List, Optional

from app.errors import ArgumentError

# Порядок видов событий при совпадении времени и узла
KIND_ORDER = {
    "sense": 0,
    "slot": 1,
    "aggregate": 2,
    "decision": 3,
    "frame_end": 4,
}


@dataclass(order=True)
class Event:
    time_ms: float
    node_id: int
    order: int
    seq: int
    kind: str = field(compare=False)
    data: Any = field(default=None, compare=False)


class EventQueue:
    """Куча событий с детерминированным порядком (время, узел, вид)"""

    def __init__(self):
        self._heap: List[Event] = []
        self._counter = itertools.count()
        self.last_time_ms = 0.0
        self.total_scheduled = 0
        self.total_processed = 0

    def __len__(self) -> int:
        return len(self._heap)

    def has_events(self) -> bool:
        return bool(self._heap)

    def schedule(self, time_ms: float, node_id: int, kind: str, data: Any = None) -> Event:
        if kind not in KIND_ORDER:
            raise ArgumentError(f"Неизвестный вид события {kind}")
        event = Event(time_ms, node_id, KIND_ORDER[kind], next(self._counter), kind, data)
        heapq.heappush(self._heap, event)
        self.total_scheduled += 1
        return event

    def pop(self) -> Optional[Event]:
        if not self._heap:
            return None
        event = heapq.heappop(self._heap)
        self.last_time_ms = event.time_ms
        self.total_processed += 1
        return event
