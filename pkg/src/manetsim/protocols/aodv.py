"""Reactive distance-vector routing with on-demand route discovery.

Routes are discovered by flooding route requests; replies come from the
destination or from an intermediate node whose cached destination
sequence number is at least as fresh as the one the request asks for,
and travel back along the reverse path the request installed.
"""

from collections import deque

from .base import MAX_HOPS, DataPacket, RoutingProtocol

ACTIVE_ROUTE_TIMEOUT_US = 10_000_000
DISCOVERY_TIMEOUT_US = 1_000_000
RREQ_RETRIES = 2                    # retries after the initial attempt
BUFFER_CAPACITY = 64                # per-destination; overflow drops oldest

RREQ_BYTES = 24
RREP_BYTES = 20
RERR_BASE_BYTES = 12
RERR_PER_DEST_BYTES = 8

RREQ = "aodv-rreq"
RREP = "aodv-rrep"
RERR = "aodv-rerr"
DATA = "data"

UNKNOWN = None  # dest_seq_known sentinel, treated as lower than any number


def _fresher(seq, than):
    if seq is None:
        return False
    return than is None or seq > than


class AodvEntry:
    __slots__ = ("dest", "next_hop", "hops", "dest_seq", "expires_at", "valid")

    def __init__(self, dest, next_hop, hops, dest_seq, expires_at):
        self.dest = dest
        self.next_hop = next_hop
        self.hops = hops
        self.dest_seq = dest_seq
        self.expires_at = expires_at
        self.valid = True


class Rreq:
    __slots__ = ("origin", "rreq_id", "dest", "dest_seq_known", "origin_seq",
                 "hop_count")

    def __init__(self, origin, rreq_id, dest, dest_seq_known, origin_seq,
                 hop_count=0):
        self.origin = origin
        self.rreq_id = rreq_id
        self.dest = dest
        self.dest_seq_known = dest_seq_known
        self.origin_seq = origin_seq
        self.hop_count = hop_count


class Rrep:
    __slots__ = ("dest", "dest_seq", "hop_count", "origin")

    def __init__(self, dest, dest_seq, hop_count, origin):
        self.dest = dest
        self.dest_seq = dest_seq
        self.hop_count = hop_count
        self.origin = origin


class AodvRouter(RoutingProtocol):
    name = "aodv"

    def __init__(self, node_id, sim, radio, trace, rng, flood_jitter_us=0):
        super().__init__(node_id, sim, radio, trace, rng, flood_jitter_us)
        self.own_seq = 0
        self.rreq_id = 0
        self.table = {}          # dest -> AodvEntry
        self.buffers = {}        # dest -> deque of DataPacket
        self.pending = {}        # dest -> [attempts_done, timer_handle]
        self.seen_rreqs = set()  # (origin, rreq_id)

    # -- table maintenance --------------------------------------------

    def _install(self, dest, next_hop, hops, dest_seq):
        """Install/refresh a route if it is fresher, or equally fresh with
        fewer hops.  Returns True when the table changed."""
        cur = self.table.get(dest)
        if cur is not None:
            if cur.valid and self.sim.now < cur.expires_at:
                if not _fresher(dest_seq, cur.dest_seq):
                    same = dest_seq == cur.dest_seq or (dest_seq is None
                                                        and cur.dest_seq is None)
                    if not (same and hops < cur.hops):
                        return False
            else:
                # A broken route is replaced only by one at least as fresh.
                if cur.dest_seq is not None and dest_seq is not None \
                        and dest_seq < cur.dest_seq:
                    return False
        expires = self.sim.now + ACTIVE_ROUTE_TIMEOUT_US
        if cur is None:
            self.table[dest] = AodvEntry(dest, next_hop, hops, dest_seq, expires)
        else:
            cur.next_hop = next_hop
            cur.hops = hops
            if dest_seq is not None:
                cur.dest_seq = dest_seq
            cur.expires_at = expires
            cur.valid = True
        return True

    def route_lookup(self, dest):
        """Next hop for dest, or None.  Using a route refreshes its expiry."""
        if dest == self.node_id:
            return self.node_id
        entry = self.table.get(dest)
        if entry is None or not entry.valid or self.sim.now >= entry.expires_at:
            return None
        entry.expires_at = self.sim.now + ACTIVE_ROUTE_TIMEOUT_US
        return entry.next_hop

    # -- discovery ----------------------------------------------------

    def originate_rreq(self, dest):
        self.rreq_id += 1
        self.own_seq += 1
        entry = self.table.get(dest)
        known = entry.dest_seq if entry is not None else UNKNOWN
        rreq = Rreq(self.node_id, self.rreq_id, dest, known, self.own_seq)
        self.seen_rreqs.add((self.node_id, self.rreq_id))
        self.radio.broadcast(self.node_id, self._frame(-1, RREQ_BYTES, RREQ, rreq))
        return rreq

    def _start_discovery(self, dest):
        if dest in self.pending:
            return
        self.originate_rreq(dest)
        timer = self.sim.after(DISCOVERY_TIMEOUT_US,
                               lambda: self._discovery_timeout(dest),
                               target=self.node_id)
        self.pending[dest] = [0, timer]

    def _discovery_timeout(self, dest):
        state = self.pending.get(dest)
        if state is None:
            return
        if self.route_lookup(dest) is not None:
            del self.pending[dest]
            return
        if state[0] < RREQ_RETRIES:
            state[0] += 1
            self.originate_rreq(dest)
            state[1] = self.sim.after(DISCOVERY_TIMEOUT_US,
                                      lambda: self._discovery_timeout(dest),
                                      target=self.node_id)
        else:
            del self.pending[dest]
            buffered = self.buffers.pop(dest, None)
            if buffered:
                for _ in buffered:
                    self.drop("no_route_ever")

    def handle_rreq(self, rreq, prev_hop):
        key = (rreq.origin, rreq.rreq_id)
        if key in self.seen_rreqs:
            return
        self.seen_rreqs.add(key)
        self._install(rreq.origin, prev_hop, rreq.hop_count + 1, rreq.origin_seq)
        self._flush_buffer(rreq.origin)
        if rreq.dest == self.node_id:
            if rreq.dest_seq_known is not None:
                self.own_seq = max(self.own_seq, rreq.dest_seq_known)
            reply = Rrep(self.node_id, self.own_seq, 0, rreq.origin)
            self.radio.unicast(self.node_id, prev_hop,
                               self._frame(prev_hop, RREP_BYTES, RREP, reply))
            return
        entry = self.table.get(rreq.dest)
        if entry is not None and entry.valid and self.sim.now < entry.expires_at \
                and entry.dest_seq is not None \
                and (rreq.dest_seq_known is None
                     or entry.dest_seq >= rreq.dest_seq_known):
            reply = Rrep(rreq.dest, entry.dest_seq, entry.hops, rreq.origin)
            self.radio.unicast(self.node_id, prev_hop,
                               self._frame(prev_hop, RREP_BYTES, RREP, reply))
            return
        fwd = Rreq(rreq.origin, rreq.rreq_id, rreq.dest, rreq.dest_seq_known,
                   rreq.origin_seq, rreq.hop_count + 1)
        self._jittered(lambda: self.radio.broadcast(
            self.node_id, self._frame(-1, RREQ_BYTES, RREQ, fwd)))

    def handle_rrep(self, rrep, prev_hop):
        installed = self._install(rrep.dest, prev_hop, rrep.hop_count + 1,
                                  rrep.dest_seq)
        if rrep.origin == self.node_id:
            state = self.pending.pop(rrep.dest, None)
            if state is not None:
                self.sim.cancel(state[1])
            self._flush_buffer(rrep.dest)
            return
        if not installed:
            self.drop("redundant_rrep")
            return
        back = self.route_lookup(rrep.origin)
        if back is None:
            self.drop("reverse_path_missing")
            return
        fwd = Rrep(rrep.dest, rrep.dest_seq, rrep.hop_count + 1, rrep.origin)
        self.radio.unicast(self.node_id, back,
                           self._frame(back, RREP_BYTES, RREP, fwd))

    def _flush_buffer(self, dest):
        buffered = self.buffers.get(dest)
        if not buffered:
            return
        if self.route_lookup(dest) is None:
            return
        del self.buffers[dest]
        state = self.pending.pop(dest, None)
        if state is not None:
            self.sim.cancel(state[1])
        for data in buffered:
            self._forward(data)

    # -- link failure -------------------------------------------------

    def handle_link_break(self, dead_neighbor, frame):
        if frame.kind == DATA:
            self.drop("link_break")
        elif frame.kind == RREP:
            self.drop("rrep_return_broken")
            return
        elif frame.kind == RERR:
            return
        unreachable = []
        for entry in self.table.values():
            if entry.valid and entry.next_hop == dead_neighbor:
                entry.valid = False
                if entry.dest_seq is not None:
                    entry.dest_seq += 1
                else:
                    entry.dest_seq = 1
                unreachable.append((entry.dest, entry.dest_seq))
        if unreachable:
            size = RERR_BASE_BYTES + RERR_PER_DEST_BYTES * len(unreachable)
            self.radio.broadcast(self.node_id, self._frame(-1, size, RERR, tuple(unreachable)))

    def handle_rerr(self, unreachable, prev_hop):
        affected = []
        for dest, seq in unreachable:
            entry = self.table.get(dest)
            if entry is not None and entry.valid and entry.next_hop == prev_hop:
                entry.valid = False
                if seq is not None and (entry.dest_seq is None
                                        or seq > entry.dest_seq):
                    entry.dest_seq = seq
                affected.append((dest, entry.dest_seq))
        if affected:
            size = RERR_BASE_BYTES + RERR_PER_DEST_BYTES * len(affected)
            self.radio.broadcast(self.node_id, self._frame(-1, size, RERR, tuple(affected)))

    # -- forwarding ---------------------------------------------------

    def send_app_packet(self, pkt):
        data = DataPacket(pkt)
        if self.route_lookup(pkt.dst) is not None:
            self._forward(data)
        else:
            self._buffer(pkt.dst, data)
            self._start_discovery(pkt.dst)

    def _buffer(self, dest, data):
        buf = self.buffers.setdefault(dest, deque())
        if len(buf) >= BUFFER_CAPACITY:
            buf.popleft()
            self.drop("buffer_overflow")
        buf.append(data)

    def _forward(self, data):
        next_hop = self.route_lookup(data.app.dst)
        if next_hop is None:
            self.drop("no_route")
            return
        self.radio.unicast(self.node_id, next_hop,
                           self._frame(next_hop, data.app.size, DATA, data))

    def handle_frame(self, frame):
        kind = frame.kind
        if kind == DATA:
            data = frame.payload
            data.hops += 1
            if data.app.dst == self.node_id:
                self.deliver(data)
            elif data.hops >= MAX_HOPS:
                self.drop("hop_limit")
            else:
                self._forward(data)
        elif kind == RREQ:
            self.handle_rreq(frame.payload, frame.src)
        elif kind == RREP:
            self.handle_rrep(frame.payload, frame.src)
        elif kind == RERR:
            self.handle_rerr(frame.payload, frame.src)
