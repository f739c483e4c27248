"""Shared plumbing for the three routing protocols."""

from ..radio import Frame

# Safety valve against transient forwarding loops in the distance-vector
# protocols; DSR routes are loop-free by construction.
MAX_HOPS = 32


class DataPacket:
    """Application packet in flight, with per-hop traversal count.

    DSR additionally carries the full source route and the sender's index
    into it; the other protocols leave those fields unset.
    """

    __slots__ = ("app", "hops", "route", "idx")

    def __init__(self, app):
        self.app = app
        self.hops = 0
        self.route = None
        self.idx = 0


class RoutingProtocol:
    """Per-node protocol instance, driven entirely by engine events."""

    name = "?"

    def __init__(self, node_id, sim, radio, trace, rng, flood_jitter_us=0):
        self.node_id = node_id
        self.sim = sim
        self.radio = radio
        self.trace = trace
        self.rng = rng
        # Jitter applied before rebroadcasting flooded control packets; zero
        # under the ideal MAC where there is nothing to desynchronize.
        self.flood_jitter_us = flood_jitter_us
        radio.register_link_break(node_id, self.handle_link_break)

    def start(self):
        """Called once at t=0 before any traffic."""

    def send_app_packet(self, pkt):
        raise NotImplementedError

    def handle_frame(self, frame):
        raise NotImplementedError

    def handle_link_break(self, dead_neighbor, frame):
        raise NotImplementedError

    # -- helpers ------------------------------------------------------

    def _frame(self, dst, size, kind, payload):
        return Frame(self.node_id, dst, size, kind, payload)

    def deliver(self, data):
        app = data.app
        self.trace.record_received(app.flow_id, app.seq, self.sim.now, data.hops)

    def drop(self, reason):
        self.trace.record_drop(f"{self.name}:{reason}")

    def _jittered(self, fn):
        """Run fn now (no jitter) or after a small random delay."""
        if self.flood_jitter_us <= 0:
            fn()
        else:
            delay = self.rng.randrange(self.flood_jitter_us)
            if delay == 0:
                fn()
            else:
                self.sim.after(delay, fn, target=self.node_id)
