"""Wireless link abstraction: fixed-radius connectivity, frame delivery
with transmission delay, a receiver-centric collision model, and
link-failure feedback for the routing layer.

Two modes exist.  The realistic MAC serializes each node's transmissions,
models collisions as overlapping airtimes at a common receiver, and
retries unicasts before declaring a link broken.  The ideal MAC is
lossless within range with no queueing or collisions; it exists for
oracle tests.
"""

import math
from collections import Counter

import numpy as np

from .engine import EventKind

BROADCAST = -1

DEFAULT_RANGE_M = 250.0        # nominal two-ray-ground range at default power
DEFAULT_BANDWIDTH_BPS = 2_000_000
DEFAULT_LATENCY_US = 1000
DEFAULT_RETRY_LIMIT = 3        # MAC retries before a unicast is declared broken


class LinkModel:
    __slots__ = ("range_m", "bandwidth_bps", "per_hop_latency_us")

    def __init__(self, range_m=DEFAULT_RANGE_M, bandwidth_bps=DEFAULT_BANDWIDTH_BPS,
                 per_hop_latency_us=DEFAULT_LATENCY_US):
        if range_m <= 0 or bandwidth_bps <= 0:
            raise ValueError("range and bandwidth must be positive")
        self.range_m = range_m
        self.bandwidth_bps = bandwidth_bps
        self.per_hop_latency_us = per_hop_latency_us


class Frame:
    __slots__ = ("src", "dst", "size", "kind", "payload", "tx_start")

    def __init__(self, src, dst, size, kind, payload):
        self.src = src
        self.dst = dst
        self.size = size
        self.kind = kind
        self.payload = payload
        self.tx_start = -1


class Radio:
    """Shared medium connecting all nodes of one simulation run."""

    def __init__(self, sim, mobility, node_count, link=None, ideal=False,
                 retry_limit=DEFAULT_RETRY_LIMIT):
        self.sim = sim
        self.mobility = mobility
        self.node_count = node_count
        self.link = link or LinkModel()
        self.ideal = ideal
        self.retry_limit = retry_limit
        self.on_receive = None       # fn(node_id, frame)
        self.on_transmit = None      # accounting hook, fn(frame)
        self._link_break = {}        # node_id -> fn(dead_neighbor, frame)
        self._busy_until = [0] * node_count
        # Per receiver: disjoint, start-sorted airtime entries [start, end, rec]
        # where rec is the signal record [start, end, collided] of a lone
        # transmission, or None for a region merged out of collided ones.
        self._signals = [[] for _ in range(node_count)]
        self.stats = Counter()

    # -- connectivity -------------------------------------------------

    def airtime_us(self, size):
        return int(math.ceil(size * 8 * 1_000_000 / self.link.bandwidth_bps))

    def in_range(self, a, b, t_us):
        ax, ay = self.mobility.position(a, t_us)
        bx, by = self.mobility.position(b, t_us)
        r = self.link.range_m
        return (ax - bx) ** 2 + (ay - by) ** 2 <= r * r

    def neighbors(self, node, t_us):
        """Nodes within Euclidean distance <= range, ascending, excluding
        node itself."""
        xs, ys = self.mobility.positions_xy(t_us)
        dx = xs - xs[node]
        dy = ys - ys[node]
        rsq = self.link.range_m * self.link.range_m
        hits = np.flatnonzero(dx * dx + dy * dy <= rsq).tolist()
        hits.remove(node)
        return hits

    def register_link_break(self, node, callback):
        self._link_break[node] = callback

    # -- transmission -------------------------------------------------

    def _tx_slot(self, src, air):
        """Reserve the next transmit slot on src's FIFO queue."""
        now = self.sim.now
        if self.ideal:
            return now
        start = max(now, self._busy_until[src])
        self._busy_until[src] = start + air
        return start

    def _note_signals(self, receivers, start, end):
        """Record an airtime interval heard at each receiver; returns the
        per-receiver records.

        Collisions are flagged eagerly: any overlap between two recorded
        intervals sets both records' collided flag, so the later arrival
        check is a single list read.  Overlapping entries are merged so the
        busy region stays a short disjoint sorted list.
        """
        signals = self._signals
        now = self.sim.now
        recs = []
        for receiver in receivers:
            rec = [start, end, False]
            recs.append(rec)
            entries = signals[receiver]
            # Entries that ended before now can never overlap a future send
            # (whose start is >= now), so drop them from the front.
            i = 0
            n = len(entries)
            while i < n and entries[i][1] <= now:
                i += 1
            if i:
                del entries[:i]
                n -= i
            # Storm fast path: recent traffic merged into one busy region.
            if n == 1:
                e = entries[0]
                if e[0] < end and e[1] > start:
                    rec[2] = True
                    other = e[2]
                    if other is not None:
                        other[2] = True
                        e[2] = None
                    if start < e[0]:
                        e[0] = start
                    if end > e[1]:
                        e[1] = end
                    continue
            # Disjointness makes both starts and ends sorted, so the entries
            # overlapping [start, end) form one contiguous run.
            j = n
            while j and entries[j - 1][0] >= end:
                j -= 1
            k = j
            while k and entries[k - 1][1] > start:
                k -= 1
            if k == j:
                entries.insert(k, [start, end, rec])
            else:
                rec[2] = True
                lo, hi = start, end
                for e_start, e_end, e_rec in entries[k:j]:
                    if e_rec is not None:
                        e_rec[2] = True
                    if e_start < lo:
                        lo = e_start
                    if e_end > hi:
                        hi = e_end
                entries[k:j] = [[lo, hi, None]]
        return recs

    def broadcast(self, src, frame):
        """Send to every current neighbor; returns the recipient count.

        Broadcast has no acknowledgment and no retry: collided copies are
        simply lost at the affected receivers.
        """
        sim = self.sim
        air = self.airtime_us(frame.size)
        start = self._tx_slot(src, air)
        end = start + air
        frame.tx_start = start
        if self.on_transmit is not None:
            self.on_transmit(frame)
        self.stats["tx_broadcast"] += 1
        receivers = self.neighbors(src, sim.now)
        if not receivers:
            return 0
        if self.ideal:
            recs = None
        else:
            recs = self._note_signals(receivers, start, end)
        sim.at(end + self.link.per_hop_latency_us,
               lambda: self._bcast_arrivals(src, receivers, recs, frame),
               kind=EventKind.FRAME_ARRIVAL, target=src)
        return len(receivers)

    def _bcast_arrivals(self, src, receivers, recs, frame):
        stats = self.stats
        xs, ys = self.mobility.positions_xy(self.sim.now)
        dx = xs - xs[src]
        dy = ys - ys[src]
        d2 = (dx * dx + dy * dy).tolist()
        rsq = self.link.range_m * self.link.range_m
        on_receive = self.on_receive
        for idx, r in enumerate(receivers):
            if recs is not None and recs[idx][2]:
                stats["rx_collision"] += 1
                continue
            if d2[r] > rsq:
                stats["rx_out_of_range"] += 1
                continue
            stats["rx_delivered"] += 1
            on_receive(r, frame)

    def unicast(self, src, dst, frame):
        """Send to a specific next hop with MAC retries.

        After retry_limit failed attempts the registered link-failure
        callback on src fires with (dst, frame).  Failure is a modeled
        outcome, not an error.
        """
        tries = 1 if self.ideal else 1 + self.retry_limit
        self._unicast_attempt(src, dst, frame, tries)

    def _unicast_attempt(self, src, dst, frame, tries_left):
        sim = self.sim
        air = self.airtime_us(frame.size)
        start = self._tx_slot(src, air)
        end = start + air
        frame.tx_start = start
        if self.on_transmit is not None:
            self.on_transmit(frame)
        self.stats["tx_unicast"] += 1
        in_range_at_start = self.in_range(src, dst, sim.now)
        rec = None
        if not self.ideal and in_range_at_start:
            # The transmission is heard (and interferes) at every node in range.
            nbrs = self.neighbors(src, sim.now)
            noted = self._note_signals(nbrs, start, end)
            rec = noted[nbrs.index(dst)]
        arrive = end + self.link.per_hop_latency_us

        def resolve():
            ok = in_range_at_start and self.in_range(src, dst, sim.now)
            if ok and rec is not None and rec[2]:
                ok = False
                self.stats["rx_collision"] += 1
            if ok:
                self.stats["rx_delivered"] += 1
                self.on_receive(dst, frame)
            elif tries_left > 1:
                self.stats["mac_retry"] += 1
                self._unicast_attempt(src, dst, frame, tries_left - 1)
            else:
                self.stats["link_broken"] += 1
                cb = self._link_break.get(src)
                if cb is not None:
                    cb(dst, frame)

        sim.at(arrive, resolve, kind=EventKind.FRAME_ARRIVAL, target=dst)
