"""Reactive source routing with per-node route caches.

Data packets carry the full node-address path in their header.  Route
requests accumulate the traversed addresses; replies come from the
destination or from an intermediate node's cache, and every node on the
return path caches the path and its prefixes.  Route errors purge every
cached path containing the broken link.
"""

from collections import deque

from .base import DataPacket, RoutingProtocol

CACHE_CAPACITY = 64              # paths per node, FIFO eviction, no expiry
DISCOVERY_TIMEOUT_US = 1_000_000
RREQ_RETRIES = 2                 # same retry policy as AODV for comparability
BUFFER_CAPACITY = 64

DATA_HEADER_BASE_BYTES = 16
DATA_HEADER_PER_HOP_BYTES = 4
RREQ_BASE_BYTES = 16
RREQ_PER_HOP_BYTES = 4
RREP_BASE_BYTES = 16
RREP_PER_HOP_BYTES = 4
RERR_BYTES = 16

RREQ = "dsr-rreq"
RREP = "dsr-rrep"
RERR = "dsr-rerr"
DATA = "data"


class MalformedRoute(Exception):
    pass


def make_source_route(hops):
    """Validate and freeze a node-address path; loop-free by construction."""
    route = tuple(hops)
    if len(set(route)) != len(route):
        raise MalformedRoute(f"repeated node in source route {route}")
    return route


def data_header_bytes(route):
    return DATA_HEADER_BASE_BYTES + DATA_HEADER_PER_HOP_BYTES * len(route)


class RouteCache:
    """Bounded per-node store of known source routes, insertion-ordered."""

    def __init__(self, capacity=CACHE_CAPACITY):
        self.capacity = capacity
        self.paths = []

    def insert(self, route):
        route = make_source_route(route)
        if len(route) < 2 or route in self.paths:
            return
        if len(self.paths) >= self.capacity:
            self.paths.pop(0)
        self.paths.append(route)

    def find(self, src, dest):
        """Shortest cached path from src to dest (ties: oldest)."""
        best = None
        for path in self.paths:
            if path[0] == src and path[-1] == dest:
                if best is None or len(path) < len(best):
                    best = path
        return best

    def purge_link(self, a, b):
        """Remove every path using link a-b in either direction."""
        def uses(path):
            for i in range(len(path) - 1):
                if (path[i] == a and path[i + 1] == b) or \
                        (path[i] == b and path[i + 1] == a):
                    return True
            return False
        self.paths = [p for p in self.paths if not uses(p)]


class _Rreq:
    __slots__ = ("origin", "request_id", "dest", "record")

    def __init__(self, origin, request_id, dest, record):
        self.origin = origin
        self.request_id = request_id
        self.dest = dest
        self.record = record  # tuple of traversed nodes, origin first


class _Rrep:
    __slots__ = ("path",)

    def __init__(self, path):
        self.path = path      # full source route, origin .. destination


class _Rerr:
    __slots__ = ("reporter", "broken_link", "original_source", "dest",
                 "return_path")

    def __init__(self, reporter, broken_link, original_source, dest,
                 return_path):
        self.reporter = reporter
        self.broken_link = broken_link
        self.original_source = original_source
        self.dest = dest
        self.return_path = return_path  # reporter back to source, inclusive


class DsrRouter(RoutingProtocol):
    name = "dsr"

    def __init__(self, node_id, sim, radio, trace, rng, flood_jitter_us=0):
        super().__init__(node_id, sim, radio, trace, rng, flood_jitter_us)
        self.cache = RouteCache()
        self.request_id = 0
        self.seen_rreqs = set()
        self.buffers = {}   # dest -> deque of DataPacket
        self.pending = {}   # dest -> [attempts_done, timer_handle]

    # -- sending ------------------------------------------------------

    def send_app_packet(self, pkt):
        dest = pkt.dst
        data = DataPacket(pkt)
        if dest == self.node_id:
            self.deliver(data)
            return
        route = self.cache.find(self.node_id, dest)
        if route is not None:
            self._emit(data, route)
        else:
            self._buffer(dest, data)
            self._start_discovery(dest)

    def _buffer(self, dest, data):
        buf = self.buffers.setdefault(dest, deque())
        if len(buf) >= BUFFER_CAPACITY:
            buf.popleft()
            self.drop("buffer_overflow")
        buf.append(data)

    def _emit(self, data, route):
        data.route = route
        data.idx = 1
        size = data.app.size + data_header_bytes(route)
        self.radio.unicast(self.node_id, route[1],
                           self._frame(route[1], size, DATA, data))

    # -- discovery ----------------------------------------------------

    def _start_discovery(self, dest):
        if dest in self.pending:
            return
        self._send_rreq(dest)
        timer = self.sim.after(DISCOVERY_TIMEOUT_US,
                               lambda: self._discovery_timeout(dest),
                               target=self.node_id)
        self.pending[dest] = [0, timer]

    def _send_rreq(self, dest):
        self.request_id += 1
        rreq = _Rreq(self.node_id, self.request_id, dest, (self.node_id,))
        self.seen_rreqs.add((self.node_id, self.request_id))
        size = RREQ_BASE_BYTES + RREQ_PER_HOP_BYTES * len(rreq.record)
        self.radio.broadcast(self.node_id, self._frame(-1, size, RREQ, rreq))

    def _discovery_timeout(self, dest):
        state = self.pending.get(dest)
        if state is None:
            return
        if self.cache.find(self.node_id, dest) is not None:
            del self.pending[dest]
            return
        if state[0] < RREQ_RETRIES:
            state[0] += 1
            self._send_rreq(dest)
            state[1] = self.sim.after(DISCOVERY_TIMEOUT_US,
                                      lambda: self._discovery_timeout(dest),
                                      target=self.node_id)
        else:
            del self.pending[dest]
            buffered = self.buffers.pop(dest, None)
            if buffered:
                for _ in buffered:
                    self.drop("no_route_ever")

    def handle_rreq(self, rreq):
        key = (rreq.origin, rreq.request_id)
        if key in self.seen_rreqs or self.node_id in rreq.record:
            return
        self.seen_rreqs.add(key)
        if rreq.dest == self.node_id:
            path = make_source_route(rreq.record + (self.node_id,))
            self._send_rrep(path, path.index(self.node_id))
            return
        cached = self.cache.find(self.node_id, rreq.dest)
        if cached is not None:
            candidate = rreq.record + cached
            if len(set(candidate)) == len(candidate):
                path = make_source_route(candidate)
                self._send_rrep(path, path.index(self.node_id))
                return
        record = rreq.record + (self.node_id,)
        fwd = _Rreq(rreq.origin, rreq.request_id, rreq.dest, record)
        size = RREQ_BASE_BYTES + RREQ_PER_HOP_BYTES * len(record)
        self._jittered(lambda: self.radio.broadcast(
            self.node_id, self._frame(-1, size, RREQ, fwd)))

    def _send_rrep(self, path, my_index):
        """Send (or forward) a route reply backward along the record."""
        if my_index == 0:
            self._accept_rrep(path)
            return
        prev = path[my_index - 1]
        size = RREP_BASE_BYTES + RREP_PER_HOP_BYTES * len(path)
        self.radio.unicast(self.node_id, prev,
                           self._frame(prev, size, RREP, _Rrep(path)))

    def handle_rrep(self, rrep):
        path = rrep.path
        my_index = path.index(self.node_id)
        self._cache_suffixes(path, my_index)
        self._send_rrep(path, my_index)

    def _cache_suffixes(self, path, my_index):
        for j in range(my_index + 1, len(path)):
            self.cache.insert(path[my_index:j + 1])

    def _accept_rrep(self, path):
        self._cache_suffixes(path, 0)
        dest = path[-1]
        state = self.pending.pop(dest, None)
        if state is not None:
            self.sim.cancel(state[1])
        buffered = self.buffers.pop(dest, None)
        if buffered:
            route = self.cache.find(self.node_id, dest)
            for data in buffered:
                self._emit(DataPacket(data.app), route)

    # -- source-routed forwarding -------------------------------------

    def forward_source_routed(self, data):
        route = data.route
        if data.idx >= len(route) or route[data.idx] != self.node_id:
            self.drop("malformed_route")
            return
        if self.node_id == route[-1]:
            self.deliver(data)
            return
        data.idx += 1
        next_hop = route[data.idx]
        size = data.app.size + data_header_bytes(route)
        self.radio.unicast(self.node_id, next_hop,
                           self._frame(next_hop, size, DATA, data))

    # -- maintenance --------------------------------------------------

    def handle_link_break(self, dead_neighbor, frame):
        if frame.kind == DATA:
            data = frame.payload
            self.drop("link_break")
            self._report_broken_link(dead_neighbor, data)
        elif frame.kind == RREP:
            self.drop("rrep_return_broken")
        # RERR return failures are dropped silently.

    def _report_broken_link(self, dead_neighbor, data):
        broken = (self.node_id, dead_neighbor)
        self.cache.purge_link(*broken)
        route = data.route
        source = route[0]
        my_index = data.idx - 1  # idx was advanced to the dead hop
        if self.node_id == source:
            self._source_reroute(route[-1])
            return
        return_path = tuple(reversed(route[:my_index + 1]))
        err = _Rerr(self.node_id, broken, source, route[-1], return_path)
        self.radio.unicast(self.node_id, return_path[1],
                           self._frame(return_path[1], RERR_BYTES, RERR, err))

    def handle_route_error(self, err):
        self.cache.purge_link(*err.broken_link)
        if self.node_id == err.original_source:
            self._source_reroute(err.dest)
            return
        rp = err.return_path
        i = rp.index(self.node_id)
        if i + 1 < len(rp):
            self.radio.unicast(self.node_id, rp[i + 1],
                               self._frame(rp[i + 1], RERR_BYTES, RERR, err))

    def _source_reroute(self, dest):
        """After a route error: re-send pending data over a surviving path,
        or start exactly one fresh discovery."""
        buffered = self.buffers.get(dest)
        if not buffered:
            return
        route = self.cache.find(self.node_id, dest)
        if route is not None:
            del self.buffers[dest]
            state = self.pending.pop(dest, None)
            if state is not None:
                self.sim.cancel(state[1])
            for data in buffered:
                self._emit(DataPacket(data.app), route)
        else:
            self._start_discovery(dest)

    def handle_frame(self, frame):
        kind = frame.kind
        if kind == DATA:
            data = frame.payload
            data.hops += 1
            self.forward_source_routed(data)
        elif kind == RREQ:
            self.handle_rreq(frame.payload)
        elif kind == RREP:
            self.handle_rrep(frame.payload)
        elif kind == RERR:
            self.handle_route_error(frame.payload)
