"""Random waypoint mobility with lazily evaluated positions.

Positions are computed on demand from each node's current leg instead of
being advanced on a fixed tick, so queries are exact and the event queue
stays small.  Leg state lives in numpy arrays: only the occasional
waypoint arrival runs per-node Python, while position queries are one
vector expression.  Per-node RNG streams keep node trajectories
independent of query interleaving.
"""

import math

import numpy as np

from .engine import US_PER_S, RngStream

# Pause-time sentinel: nodes never move (static network mode).
STATIC = math.inf

# Known speed-decay pathology of random waypoint with min speed 0.
DEFAULT_MIN_SPEED = 0.1


class InvalidNodeCount(Exception):
    pass


def init_positions(node_count, rng, width, height):
    """Draw node_count positions uniformly over the area rectangle."""
    if node_count < 1:
        raise InvalidNodeCount(f"node_count must be >= 1, got {node_count}")
    return [(rng.uniform(0.0, width), rng.uniform(0.0, height)) for _ in range(node_count)]


class RandomWaypoint:
    """Classic random waypoint: uniform destination, uniform speed in
    (min_speed, max_speed], fixed pause at each waypoint.

    Each node is always on a "leg" [t0, t1) from (x0,y0) to (x1,y1); a
    pause is a leg whose endpoints coincide.  Queries must come at
    non-decreasing times.
    """

    def __init__(self, node_count, width, height, max_speed, seed,
                 min_speed=DEFAULT_MIN_SPEED, pause_time=20.0):
        self.node_count = node_count
        self.width = width
        self.height = height
        self.min_speed = min_speed
        self.max_speed = max_speed
        init_rng = RngStream(seed, "mobility:init")
        start = init_positions(node_count, init_rng, width, height)
        self.static = pause_time == STATIC
        self._memo_t = -1
        self._memo_x = None
        self._memo_y = None
        if self.static:
            self._fixed = start
            self._fx = np.array([p[0] for p in start])
            self._fy = np.array([p[1] for p in start])
            return
        self._fixed = None
        self._pause_us = int(round(pause_time * US_PER_S))
        self._rngs = [RngStream(seed, f"mobility:{i}") for i in range(node_count)]
        self._x0 = np.array([p[0] for p in start])
        self._y0 = np.array([p[1] for p in start])
        self._x1 = np.empty(node_count)
        self._y1 = np.empty(node_count)
        self._t0 = np.zeros(node_count, dtype=np.int64)
        self._t1 = np.zeros(node_count, dtype=np.int64)
        self._pausing = np.zeros(node_count, dtype=bool)
        for i in range(node_count):
            self._new_leg(i, 0)
        self._next_transition = int(self._t1.min())

    def _new_leg(self, i, depart_us):
        rng = self._rngs[i]
        x1 = rng.uniform(0.0, self.width)
        y1 = rng.uniform(0.0, self.height)
        speed = rng.uniform(self.min_speed, self.max_speed)
        dist = math.hypot(x1 - self._x0[i], y1 - self._y0[i])
        self._x1[i] = x1
        self._y1[i] = y1
        self._t0[i] = depart_us
        self._t1[i] = depart_us + max(1, int(math.ceil(dist / speed * US_PER_S)))
        self._pausing[i] = False

    def _advance(self, i, t_us):
        """Step node i's leg state machine until t_us falls inside a leg."""
        while t_us >= self._t1[i]:
            end = int(self._t1[i])
            if self._pausing[i]:
                self._new_leg(i, end)
            else:
                # Arrived: rest at the waypoint for the configured pause.
                self._x0[i] = self._x1[i]
                self._y0[i] = self._y1[i]
                if self._pause_us > 0:
                    self._t0[i] = end
                    self._t1[i] = end + self._pause_us
                    self._pausing[i] = True
                else:
                    self._new_leg(i, end)

    def _eval(self, t_us):
        if t_us == self._memo_t:
            return
        if t_us >= self._next_transition:
            for i in np.flatnonzero(self._t1 <= t_us):
                self._advance(i, t_us)
            self._next_transition = int(self._t1.min())
        frac = (t_us - self._t0) / (self._t1 - self._t0)
        self._memo_x = self._x0 + (self._x1 - self._x0) * frac
        self._memo_y = self._y0 + (self._y1 - self._y0) * frac
        self._memo_t = t_us

    def positions_xy(self, t_us):
        """Positions of all nodes at t_us as an (xs, ys) array pair."""
        if self.static:
            return self._fx, self._fy
        self._eval(t_us)
        return self._memo_x, self._memo_y

    def position(self, node, t_us):
        if self.static:
            return self._fixed[node]
        self._eval(t_us)
        return (float(self._memo_x[node]), float(self._memo_y[node]))

    def positions(self, t_us):
        if self.static:
            return self._fixed
        self._eval(t_us)
        return list(zip(self._memo_x.tolist(), self._memo_y.tolist()))


class FixedPositions:
    """Scripted placement for tests: positions only change via move()."""

    def __init__(self, positions):
        self._pos = [tuple(p) for p in positions]
        self.node_count = len(self._pos)
        self.static = True

    def move(self, node, xy):
        self._pos[node] = tuple(xy)

    def position(self, node, t_us):
        return self._pos[node]

    def positions(self, t_us):
        return self._pos

    def positions_xy(self, t_us):
        return (np.array([p[0] for p in self._pos]),
                np.array([p[1] for p in self._pos]))


def write_movement_trace(path, mobility, end_us, interval_us):
    """Export a CSV movement trace: time,node,x,y at a fixed sampling step."""
    with open(path, "w") as fh:
        fh.write("time,node,x,y\n")
        t = 0
        while t <= end_us:
            for node in range(mobility.node_count):
                x, y = mobility.position(node, t)
                fh.write(f"{t / US_PER_S:.6f},{node},{x:.3f},{y:.3f}\n")
            t += interval_us
