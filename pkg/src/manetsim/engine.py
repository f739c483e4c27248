"""Deterministic discrete-event core.

Virtual time is kept as integer microseconds so that event ordering is
identical on every platform.  Ties between events with the same timestamp
are broken by insertion order.
"""

import hashlib
import heapq
import random
from enum import Enum

US_PER_S = 1_000_000


def to_us(seconds):
    """Convert seconds (float) to integer microseconds."""
    return int(round(seconds * US_PER_S))


def to_s(us):
    """Convert integer microseconds back to seconds."""
    return us / US_PER_S


class SchedulingInPast(Exception):
    """Raised when an event is scheduled before the current clock."""


class EventKind(Enum):
    FRAME_ARRIVAL = "frame_arrival"
    TIMER_EXPIRY = "timer_expiry"
    MOBILITY_UPDATE = "mobility_update"
    TRAFFIC_TICK = "traffic_tick"
    SIMULATION_END = "simulation_end"


class Event:
    """A timed occurrence, ordered by (fire_at, seq).

    The returned object doubles as the cancellation handle.  If ``payload``
    is callable it is invoked on dispatch, otherwise the event is handed to
    the simulator's registered handler.
    """

    __slots__ = ("fire_at", "kind", "target", "payload", "seq", "cancelled", "fired")

    def __init__(self, fire_at, kind=EventKind.TIMER_EXPIRY, target=-1, payload=None):
        self.fire_at = fire_at
        self.kind = kind
        self.target = target
        self.payload = payload
        self.seq = -1
        self.cancelled = False
        self.fired = False


def _stream_seed(master_seed, stream_id):
    digest = hashlib.sha256(f"{master_seed}:{stream_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream(random.Random):
    """Named random stream derived from a master seed by a labeled hash.

    Identical (seed, stream_id) pairs yield identical draw sequences, and
    draws on one stream never perturb another.
    """

    def __new__(cls, master_seed, stream_id):
        return super().__new__(cls)

    def __init__(self, master_seed, stream_id):
        self.master_seed = master_seed
        self.stream_id = stream_id
        super().__init__(_stream_seed(master_seed, stream_id))


class Simulator:
    """Single-threaded event loop with a monotone virtual clock."""

    def __init__(self, log_dispatch=False):
        self.now = 0
        self._heap = []
        self._next_seq = 0
        self.handler = None
        self.dispatch_log = [] if log_dispatch else None

    def schedule(self, event):
        """Enqueue *event*; returns it as a cancellation handle."""
        if event.fire_at < self.now:
            raise SchedulingInPast(
                f"fire_at {event.fire_at} < clock {self.now}"
            )
        event.seq = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.seq, event))
        return event

    def at(self, fire_at, fn, kind=EventKind.TIMER_EXPIRY, target=-1):
        """Schedule callable *fn* at absolute time *fire_at* (microseconds)."""
        return self.schedule(Event(fire_at, kind, target, fn))

    def after(self, delay, fn, kind=EventKind.TIMER_EXPIRY, target=-1):
        return self.at(self.now + delay, fn, kind, target)

    def cancel(self, handle):
        """Cancel a pending event.  Returns False if it already fired."""
        if handle.fired or handle.cancelled:
            return False
        handle.cancelled = True
        return True

    def run_until(self, end):
        """Dispatch every event with fire_at <= end; clock ends at *end*.

        Returns the number of dispatched (non-cancelled) events.
        """
        heap = self._heap
        log = self.dispatch_log
        count = 0
        while heap and heap[0][0] <= end:
            fire_at, _seq, event = heapq.heappop(heap)
            if event.cancelled:
                continue
            self.now = fire_at
            event.fired = True
            if log is not None:
                log.append((fire_at, event.seq, event.kind.value, event.target))
            count += 1
            payload = event.payload
            if callable(payload):
                payload()
            else:
                self.handler(event)
        self.now = end
        return count
