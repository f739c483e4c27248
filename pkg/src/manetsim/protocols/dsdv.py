"""Proactive destination-sequenced distance-vector routing.

Every node periodically floods a full table dump carrying per-destination
sequence numbers.  An advertised route replaces the stored one when its
sequence number is newer, or when it is equally fresh with a strictly
smaller hop count; otherwise the advertisement is ignored.  Broken links
invalidate routes by making their sequence number odd.
"""

from .base import MAX_HOPS, DataPacket, RoutingProtocol

ADVERTISE_INTERVAL_US = 15_000_000
ADVERTISE_JITTER = 0.2              # +-20% around the nominal interval
FIRST_ADVERTISE_MAX_US = 1_000_000  # startup beacon spread
TRIGGER_SPACING_US = 1_000_000      # triggered updates at most once per second

# Hold-down: when a fresher advertisement worsens the metric, keep
# forwarding over the previous (still valid) route until an equally fresh
# route confirms the worse metric or the hold-down lapses.  Damps the
# route fluctuation that periodic sequence waves cause in stable
# topologies.
SETTLE_US = 2 * ADVERTISE_INTERVAL_US

INFINITY = 1 << 20                  # hop-count sentinel for invalidated routes

UPDATE_HEADER_BYTES = 20
UPDATE_ENTRY_BYTES = 12

UPDATE = "dsdv-update"
DATA = "data"


class DsdvEntry:
    __slots__ = ("dest", "next_hop", "hops", "seq", "install_us")

    def __init__(self, dest, next_hop, hops, seq, install_us):
        self.dest = dest
        self.next_hop = next_hop
        self.hops = hops
        self.seq = seq
        self.install_us = install_us

    @property
    def valid(self):
        return self.seq % 2 == 0 and self.hops < INFINITY


class DsdvRouter(RoutingProtocol):
    name = "dsdv"

    def __init__(self, node_id, sim, radio, trace, rng, flood_jitter_us=0):
        super().__init__(node_id, sim, radio, trace, rng, flood_jitter_us)
        self.own_seq = 0
        self.table = {node_id: DsdvEntry(node_id, node_id, 0, 0, 0)}
        self._settling = {}       # dest -> (prev_next_hop, prev_hops, deadline_us)
        self._last_dump_us = -TRIGGER_SPACING_US
        self._trigger_pending = False

    def start(self):
        first = self.rng.randrange(FIRST_ADVERTISE_MAX_US + 1)
        self.sim.at(first, self._periodic, target=self.node_id)

    # -- advertising --------------------------------------------------

    def _periodic(self):
        self.periodic_advertise()
        jitter = 1.0 + ADVERTISE_JITTER * (2.0 * self.rng.random() - 1.0)
        self.sim.after(int(ADVERTISE_INTERVAL_US * jitter), self._periodic,
                       target=self.node_id)

    def periodic_advertise(self):
        """Bump own sequence number by two (stays even) and dump the table."""
        self.own_seq += 2
        self.table[self.node_id].seq = self.own_seq
        self._dump()

    def _dump(self):
        me = self.node_id
        entries = [(me, self.own_seq, 0)]
        entries.extend((e.dest, e.seq, e.hops)
                       for e in self.table.values() if e.dest != me)
        size = UPDATE_HEADER_BYTES + UPDATE_ENTRY_BYTES * len(entries)
        self._last_dump_us = self.sim.now
        self._trigger_pending = False
        self.radio.broadcast(self.node_id, self._frame(-1, size, UPDATE, (me, tuple(entries))))

    def _trigger_update(self):
        """Broadcast a (rate-limited) triggered full dump."""
        if self._trigger_pending:
            return
        due = self._last_dump_us + TRIGGER_SPACING_US
        if due <= self.sim.now:
            self._trigger_pending = True
            self._jittered(self._dump_if_pending)
        else:
            self._trigger_pending = True
            self.sim.at(due, self._dump_if_pending, target=self.node_id)

    def _dump_if_pending(self):
        if self._trigger_pending:
            self._dump()

    # -- update acceptance --------------------------------------------

    def apply_update_entry(self, dest, adv_seq, adv_hops, origin):
        """Process one advertised (dest, seq, hops) triple from a neighbor.

        Returns True when the route is installed per the acceptance rule:
        newer sequence number always wins; an equally fresh route wins only
        with a strictly smaller hop count.
        """
        if dest == self.node_id:
            return False  # own entry is never overwritten
        hops = adv_hops + 1 if adv_hops < INFINITY else INFINITY
        now = self.sim.now
        cur = self.table.get(dest)
        if cur is None:
            self.table[dest] = DsdvEntry(dest, origin, hops, adv_seq, now)
            return True
        if adv_seq > cur.seq:
            was_valid = cur.valid
            prev_next, prev_hops = cur.next_hop, cur.hops
            cur.next_hop = origin
            cur.hops = hops
            cur.seq = adv_seq
            cur.install_us = now
            if was_valid and cur.valid and hops > prev_hops and origin != prev_next:
                self._settling[dest] = (prev_next, prev_hops, now + SETTLE_US)
            else:
                self._note_settled(dest, hops)
            return True
        if adv_seq == cur.seq and hops < cur.hops:
            cur.next_hop = origin
            cur.hops = hops
            cur.install_us = now
            self._note_settled(dest, hops)
            return True
        return False

    def _note_settled(self, dest, hops):
        sh = self._settling.get(dest)
        if sh is not None and hops <= sh[1]:
            del self._settling[dest]

    def handle_update(self, msg):
        """Apply a full-dump update message; returns changed destinations.

        Inlines apply_update_entry: a full dump touches every destination,
        so this loop dominates DSDV's run time.
        """
        origin, entries = msg
        changed = []
        table = self.table
        me = self.node_id
        now = self.sim.now
        settling = self._settling
        for dest, adv_seq, adv_hops in entries:
            if dest == me:
                continue
            cur = table.get(dest)
            if cur is None:
                hops = adv_hops + 1 if adv_hops < INFINITY else INFINITY
                table[dest] = DsdvEntry(dest, origin, hops, adv_seq, now)
                changed.append(dest)
                continue
            cur_seq = cur.seq
            if adv_seq > cur_seq:
                hops = adv_hops + 1 if adv_hops < INFINITY else INFINITY
                prev_hops = cur.hops
                prev_next = cur.next_hop
                was_valid = cur_seq % 2 == 0 and prev_hops < INFINITY
                now_valid = adv_seq % 2 == 0 and hops < INFINITY
                cur.next_hop = origin
                cur.hops = hops
                cur.seq = adv_seq
                cur.install_us = now
                if was_valid and now_valid and hops > prev_hops \
                        and origin != prev_next:
                    settling[dest] = (prev_next, prev_hops, now + SETTLE_US)
                else:
                    sh = settling.get(dest)
                    if sh is not None and hops <= sh[1]:
                        del settling[dest]
                if hops != prev_hops or was_valid != now_valid:
                    changed.append(dest)
            elif adv_seq == cur_seq:
                hops = adv_hops + 1 if adv_hops < INFINITY else INFINITY
                if hops < cur.hops:
                    cur.next_hop = origin
                    cur.hops = hops
                    cur.install_us = now
                    sh = settling.get(dest)
                    if sh is not None and hops <= sh[1]:
                        del settling[dest]
                    changed.append(dest)
        if changed:
            self._trigger_update()
        return changed

    # -- link failure -------------------------------------------------

    def handle_link_break(self, dead_neighbor, frame):
        if frame.kind == DATA:
            self.drop("link_break")
        invalidated = self.invalidate_via(dead_neighbor)
        if invalidated:
            self._trigger_update()

    def invalidate_via(self, dead_neighbor):
        """Mark every route through dead_neighbor broken (odd seq, infinite
        hops); returns the invalidated destinations."""
        out = []
        for entry in self.table.values():
            if entry.next_hop == dead_neighbor and entry.dest != self.node_id \
                    and entry.valid:
                entry.seq += 1
                entry.hops = INFINITY
                out.append(entry.dest)
        for dest, sh in list(self._settling.items()):
            if sh[0] == dead_neighbor:
                del self._settling[dest]
        return out

    # -- forwarding ---------------------------------------------------

    def route_lookup(self, dest):
        """Next hop for dest, or None.  DSDV has no on-demand discovery."""
        if dest == self.node_id:
            return self.node_id
        sh = self._settling.get(dest)
        if sh is not None:
            if self.sim.now < sh[2]:
                return sh[0]
            del self._settling[dest]
        entry = self.table.get(dest)
        if entry is not None and entry.valid:
            return entry.next_hop
        return None

    def send_app_packet(self, pkt):
        self._forward(DataPacket(pkt))

    def _forward(self, data):
        next_hop = self.route_lookup(data.app.dst)
        if next_hop is None:
            self.drop("no_route")
            return
        self.radio.unicast(self.node_id, next_hop,
                           self._frame(next_hop, data.app.size, DATA, data))

    def handle_frame(self, frame):
        if frame.kind == UPDATE:
            self.handle_update(frame.payload)
        elif frame.kind == DATA:
            data = frame.payload
            data.hops += 1
            if data.app.dst == self.node_id:
                self.deliver(data)
            elif data.hops >= MAX_HOPS:
                self.drop("hop_limit")
            else:
                self._forward(data)
