"""Shared fixtures: hand-wired mini networks with scripted node placement."""

import pytest

from manetsim.engine import RngStream, Simulator
from manetsim.metrics import PacketTrace
from manetsim.mobility import FixedPositions
from manetsim.protocols import make_router
from manetsim.radio import LinkModel, Radio
from manetsim.traffic import AppPacket


class Net:
    """A Simulator + Radio + one router per node over fixed positions."""

    def __init__(self, positions, protocol="AODV", ideal=True, seed=1,
                 range_m=250.0, flood_jitter_us=0, retry_limit=3):
        self.sim = Simulator()
        self.mobility = FixedPositions(positions)
        n = self.mobility.node_count
        self.trace = PacketTrace()
        self.radio = Radio(self.sim, self.mobility, n,
                           link=LinkModel(range_m=range_m), ideal=ideal,
                           retry_limit=retry_limit)
        self.routers = [
            make_router(protocol, i, self.sim, self.radio, self.trace,
                        RngStream(seed, f"protocol:{i}"),
                        flood_jitter_us=flood_jitter_us)
            for i in range(n)
        ]
        self.radio.on_receive = lambda node, frame: self.routers[node].handle_frame(frame)
        for r in self.routers:
            r.start()

    def send(self, src, dst, flow_id=0, seq=None, size=512):
        """Generate one app packet at the current sim time and hand it to src."""
        if seq is None:
            seq = self._next_seq = getattr(self, "_next_seq", -1) + 1
        pkt = AppPacket(flow_id, seq, self.sim.now, size, src, dst)
        self.trace.record_generated(flow_id, seq, self.sim.now, size)
        self.routers[src].send_app_packet(pkt)
        return (flow_id, seq)

    def run(self, until_s):
        self.sim.run_until(int(until_s * 1_000_000))

    def delivered(self, key):
        rec = self.trace.records[key]
        return rec[1] is not None

    def hops(self, key):
        return self.trace.records[key][2]


@pytest.fixture
def chain3():
    """0 -- 1 -- 2 in a line; 0 and 2 are out of range of each other."""
    return lambda **kw: Net([(0, 0), (200, 0), (400, 0)], **kw)


@pytest.fixture
def chain4():
    return lambda **kw: Net([(0, 0), (200, 0), (400, 0), (600, 0)], **kw)
