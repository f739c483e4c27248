"""Scenario assembly: build engine, mobility, radio, routers and traffic
from a ScenarioConfig and run one simulation."""

import math
from dataclasses import dataclass, field, fields

from .engine import US_PER_S, EventKind, RngStream, Simulator, to_us
from .metrics import PacketTrace, summarize, write_trace_csv
from .mobility import STATIC, FixedPositions, RandomWaypoint
from .protocols import make_router
from .radio import LinkModel, Radio
from .traffic import TrafficGenerator, setup_flows

# Rebroadcast jitter under the realistic MAC; floods need desynchronizing
# once collisions exist.
FLOOD_JITTER_US = 10_000

PROTOCOL_NAMES = ("DSDV", "AODV", "DSR")
MAC_MODES = ("realistic", "ideal")


class ConfigInvalid(Exception):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ScenarioConfig:
    protocol: str = "AODV"
    node_count: int = 50
    area_width: float = 500.0
    area_height: float = 500.0
    max_speed: float = 10.0
    min_speed: float = 0.1
    pause_time: float = 20.0        # seconds, or math.inf for a static network
    sim_time: float = 100.0
    n_flows: int = 10
    rate: float = 4.0
    packet_size: int = 512
    seed: int = 1
    mac_mode: str = "realistic"
    warmup: float = 10.0            # seconds excluded from metrics
    drain: float = 2.0              # extra run time so in-flight packets land
    radio_range: float = 250.0
    bandwidth: int = 2_000_000
    per_hop_latency: float = 0.001
    retry_limit: int = 3

    def validate(self):
        errors = []
        if self.protocol.upper() not in PROTOCOL_NAMES:
            errors.append(f"protocol must be one of {PROTOCOL_NAMES}, got {self.protocol!r}")
        if self.node_count < 2:
            errors.append(f"node_count must be >= 2, got {self.node_count}")
        if self.area_width <= 0 or self.area_height <= 0:
            errors.append("area dimensions must be positive")
        if self.max_speed <= 0:
            errors.append("max_speed must be positive")
        if not (0 < self.min_speed <= self.max_speed):
            errors.append("need 0 < min_speed <= max_speed")
        if self.pause_time != STATIC and self.pause_time < 0:
            errors.append("pause_time must be >= 0 or static")
        if not self.sim_time > self.warmup >= 0:
            errors.append("need sim_time > warmup >= 0")
        if self.n_flows < 1 or self.n_flows > self.node_count // 2:
            errors.append(f"n_flows must be in [1, node_count/2], got {self.n_flows}")
        if self.rate <= 0:
            errors.append("rate must be positive")
        if self.packet_size < 1:
            errors.append("packet_size must be positive")
        if self.mac_mode not in MAC_MODES:
            errors.append(f"mac_mode must be one of {MAC_MODES}, got {self.mac_mode!r}")
        if self.radio_range <= 0 or self.bandwidth <= 0:
            errors.append("radio_range and bandwidth must be positive")
        return errors

    def check(self):
        errors = self.validate()
        if errors:
            raise ConfigInvalid(errors)


def build_simulation(config, mobility=None):
    """Wire up one run; returns (sim, radio, routers, trace, flows)."""
    config.check()
    sim = Simulator()
    trace = PacketTrace()
    if mobility is None:
        mobility = RandomWaypoint(
            config.node_count, config.area_width, config.area_height,
            config.max_speed, config.seed, min_speed=config.min_speed,
            pause_time=config.pause_time,
        )
    ideal = config.mac_mode == "ideal"
    link = LinkModel(config.radio_range, config.bandwidth,
                     to_us(config.per_hop_latency))
    radio = Radio(sim, mobility, config.node_count, link=link, ideal=ideal,
                  retry_limit=config.retry_limit)
    jitter = 0 if ideal else FLOOD_JITTER_US
    routers = [
        make_router(config.protocol, node, sim, radio, trace,
                    RngStream(config.seed, f"protocol:{node}"),
                    flood_jitter_us=jitter)
        for node in range(config.node_count)
    ]
    radio.on_receive = lambda node, frame: routers[node].handle_frame(frame)
    radio.on_transmit = _control_counter(trace)

    traffic_rng = RngStream(config.seed, "traffic")
    flows = setup_flows(config.n_flows, range(config.node_count), traffic_rng,
                        rate=config.rate, packet_size=config.packet_size,
                        stop_s=config.sim_time)
    generator = TrafficGenerator(sim, flows, trace,
                                 lambda src, pkt: routers[src].send_app_packet(pkt))
    return sim, radio, routers, trace, flows, generator


def _control_counter(trace):
    def on_transmit(frame):
        if frame.kind != "data":
            trace.record_control(frame.kind, frame.size)
    return on_transmit


def run_scenario(config, trace_path=None, move_trace_path=None,
                 move_trace_interval=1.0, mobility=None):
    """Run one scenario; returns (MetricsRecord, full PacketTrace).

    Metrics are computed over packets generated in [warmup, sim_time]; the
    engine runs a short drain past sim_time so in-flight packets can land.
    """
    sim, radio, routers, trace, flows, generator = build_simulation(config, mobility)
    for router in routers:
        router.start()
    generator.start()

    move_rows = [] if move_trace_path else None
    if move_rows is not None:
        interval_us = to_us(move_trace_interval)

        def sample():
            t = sim.now
            for node in range(config.node_count):
                x, y = radio.mobility.position(node, t)
                move_rows.append((t, node, x, y))
            if t + interval_us <= to_us(config.sim_time):
                sim.after(interval_us, sample, kind=EventKind.MOBILITY_UPDATE)

        sim.at(0, sample, kind=EventKind.MOBILITY_UPDATE)

    sim.run_until(to_us(config.sim_time + config.drain))

    windowed = trace.window(to_us(config.warmup), to_us(config.sim_time))
    record = summarize(windowed)
    if trace_path:
        write_trace_csv(trace, trace_path)
    if move_trace_path:
        with open(move_trace_path, "w") as fh:
            fh.write("time,node,x,y\n")
            for t, node, x, y in move_rows:
                fh.write(f"{t / US_PER_S:.6f},{node},{x:.3f},{y:.3f}\n")
    return record, trace
