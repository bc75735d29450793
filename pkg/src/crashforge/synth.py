"""Deterministic synthetic scene generator.

Produces 20 s, 2 Hz collision-free scenarios on three map kinds:

  straight  - two same-direction lanes; followers and leaders.
  two_lane  - one lane each way; oncoming traffic.
  four_way  - a boulevard intersection (one lane each way on both roads)
              with crossing approaches and a left-turn connector, so every
              collision pattern is constructible.

A fixed (kind, seed) pair always yields the same scenario, byte for byte.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import OrientedBox, Pose2D, overlap_depth
from .scene import AgentTrack, LanePolyline, RoadMap, Scenario

N_FRAMES = 41  # 20 s at 2 Hz
ARM = 108.0  # half-length of every road
EGO_LENGTH, EGO_WIDTH = 4.5, 2.0

_KIND_CODES = {"straight": 1, "two_lane": 2, "four_way": 3}

# boulevard geometry: lane centers sit half a lane + half a median off axis
_FW_OFF = 5.25
_FW_HALF_ROAD = 8.0
_TURN_R = 8.0


class _Path:
    """Arc-length parameterized polyline."""

    def __init__(self, points: list[tuple[float, float]]):
        self.pts = np.asarray(points, dtype=float)
        seg = np.diff(self.pts, axis=0)
        self.cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
        self.total = float(self.cum[-1])

    def pose(self, s: float) -> Pose2D:
        s = min(max(s, 0.0), self.total)
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(i, len(self.pts) - 2)
        seg_len = self.cum[i + 1] - self.cum[i]
        t = 0.0 if seg_len == 0 else (s - self.cum[i]) / seg_len
        p = self.pts[i] * (1 - t) + self.pts[i + 1] * t
        d = self.pts[i + 1] - self.pts[i]
        return Pose2D(float(p[0]), float(p[1]), math.atan2(d[1], d[0]))


def _line(x0, y0, x1, y1, step=1.0) -> list[tuple[float, float]]:
    n = max(2, int(round(math.hypot(x1 - x0, y1 - y0) / step)) + 1)
    return [(x0 + (x1 - x0) * k / (n - 1), y0 + (y1 - y0) * k / (n - 1)) for k in range(n)]

def _arc(cx, cy, r, a0, a1, step=1.0) -> list[tuple[float, float]]:
    n = max(2, int(round(abs(a1 - a0) * r / step)) + 1)
    return [(cx + r * math.cos(a0 + (a1 - a0) * k / (n - 1)),
             cy + r * math.sin(a0 + (a1 - a0) * k / (n - 1))) for k in range(n)]


def _straight_map() -> RoadMap:
    lanes = [
        LanePolyline("e0", _line(-ARM, 0.0, ARM, 0.0)),
        LanePolyline("e1", _line(-ARM, 3.5, ARM, 3.5)),
    ]
    drivable = [[(-ARM - 5, -2.75), (ARM + 5, -2.75), (ARM + 5, 6.25), (-ARM - 5, 6.25)]]
    return RoadMap(lanes=lanes, drivable=drivable)


def _two_lane_map() -> RoadMap:
    lanes = [
        LanePolyline("e0", _line(-ARM, 0.0, ARM, 0.0)),
        LanePolyline("w0", _line(ARM, 3.5, -ARM, 3.5)),
    ]
    drivable = [[(-ARM - 5, -2.75), (ARM + 5, -2.75), (ARM + 5, 6.25), (-ARM - 5, 6.25)]]
    return RoadMap(lanes=lanes, drivable=drivable)


def _four_way_map() -> RoadMap:
    d, h = _FW_OFF, _FW_HALF_ROAD
    lanes = [
        LanePolyline("e0", _line(-ARM, -d, ARM, -d)),
        LanePolyline("w0", _line(ARM, d, -ARM, d)),
        LanePolyline("n0", _line(d, -ARM, d, ARM)),
        LanePolyline("s0", _line(-d, ARM, -d, -ARM)),
        # left-turn connectors (quarter arcs of radius _TURN_R)
        LanePolyline("wl", _arc(_TURN_R - d, -(_TURN_R - d), _TURN_R,
                                math.pi / 2, math.pi)),
        LanePolyline("el", _arc(-(_TURN_R - d), _TURN_R - d, _TURN_R,
                                -math.pi / 2, 0.0)),
    ]
    drivable = [
        [(-ARM - 5, -h), (ARM + 5, -h), (ARM + 5, h), (-ARM - 5, h)],
        [(-h, -ARM - 5), (h, -ARM - 5), (h, ARM + 5), (-h, ARM + 5)],
    ]
    return RoadMap(lanes=lanes, drivable=drivable)


def _speeds(rng: np.random.Generator, v_mean: float) -> np.ndarray:
    amp = rng.uniform(0.01, 0.04)
    freq = rng.integers(1, 3)
    phase = rng.uniform(0, 2 * math.pi)
    k = np.arange(N_FRAMES)
    return v_mean * (1.0 + amp * np.sin(2 * math.pi * freq * k / (N_FRAMES - 1) + phase))


def _track(agent_id: str, path: _Path, s0: float, speeds: np.ndarray,
           length: float, width: float) -> AgentTrack:
    poses = []
    s = s0
    for k in range(N_FRAMES):
        poses.append(path.pose(s))
        s += speeds[k] * 0.5
    return AgentTrack(id=agent_id, length=length, width=width,
                      states=poses, valid=[True] * N_FRAMES)


def _clear_of(track: AgentTrack, kept: list[AgentTrack], min_gap: float = 0.25) -> bool:
    for other in kept:
        for k in range(N_FRAMES):
            a = OrientedBox(track.states[k], track.length, track.width)
            b = OrientedBox(other.states[k], other.length, other.width)
            if overlap_depth(a, b) > -min_gap:
                return False
    return True


def _footprint(rng: np.random.Generator) -> tuple[float, float]:
    return float(rng.uniform(4.2, 4.8)), float(rng.uniform(1.85, 2.05))


def _place(rng, kept, agent_id, path, s0_draw, v_draw, tries=40) -> AgentTrack | None:
    for _ in range(tries):
        s0, v = s0_draw(rng), v_draw(rng)
        length, width = _footprint(rng)
        cand = _track(agent_id, path, s0, _speeds(rng, v), length, width)
        if _clear_of(cand, kept):
            return cand
    return None


def synth_scene(kind: str, seed: int) -> Scenario:
    """Build one deterministic collision-free scenario of the given kind."""
    if kind not in _KIND_CODES:
        raise ValueError(f"unknown scene kind {kind!r}; expected one of {sorted(_KIND_CODES)}")
    rng = np.random.default_rng([_KIND_CODES[kind], int(seed)])
    builder = {"straight": _synth_straight, "two_lane": _synth_two_lane,
               "four_way": _synth_four_way}[kind]
    scenario = builder(rng, f"{kind}-{int(seed):04d}")
    scenario.validate()
    return scenario


def _synth_straight(rng: np.random.Generator, sid: str) -> Scenario:
    road = _straight_map()
    paths = {l.id: _Path(l.points) for l in road.lanes}
    x0 = rng.uniform(-80, -30)
    v_ego = rng.uniform(4.5, 6.5)
    ego = _track("ego", paths["e0"], x0 + ARM, _speeds(rng, v_ego), EGO_LENGTH, EGO_WIDTH)
    kept = [ego]
    n_others = int(rng.integers(2, 5))
    idx = 0
    for _ in range(n_others):
        lane = "e0" if rng.random() < 0.5 else "e1"
        track = _place(
            rng, kept, f"v{idx}", paths[lane],
            s0_draw=lambda r: x0 + ARM + r.uniform(-40, 40),
            v_draw=lambda r: r.uniform(3.2, 8.0),
        )
        if track is not None:
            kept.append(track)
            idx += 1
    return Scenario(id=sid, map=road, agents=kept, ego_id="ego")


def _synth_two_lane(rng: np.random.Generator, sid: str) -> Scenario:
    road = _two_lane_map()
    paths = {l.id: _Path(l.points) for l in road.lanes}
    x0 = rng.uniform(-80, -30)
    v_ego = rng.uniform(4.5, 6.5)
    ego = _track("ego", paths["e0"], x0 + ARM, _speeds(rng, v_ego), EGO_LENGTH, EGO_WIDTH)
    kept = [ego]
    idx = 0
    for _ in range(int(rng.integers(1, 3))):  # same-lane traffic
        track = _place(
            rng, kept, f"v{idx}", paths["e0"],
            s0_draw=lambda r: x0 + ARM + r.uniform(-35, 35),
            v_draw=lambda r: r.uniform(3.2, 7.5),
        )
        if track is not None:
            kept.append(track)
            idx += 1
    for _ in range(int(rng.integers(1, 3))):  # oncoming
        track = _place(
            rng, kept, f"v{idx}", paths["w0"],
            s0_draw=lambda r: ARM - r.uniform(25, 80),  # arc position on the westbound path
            v_draw=lambda r: r.uniform(4.0, 6.5),
        )
        if track is not None:
            kept.append(track)
            idx += 1
    return Scenario(id=sid, map=road, agents=kept, ego_id="ego")


def _synth_four_way(rng: np.random.Generator, sid: str) -> Scenario:
    road = _four_way_map()
    d = _FW_OFF
    paths = {l.id: _Path(l.points) for l in road.lanes}
    # composite turner path: westbound approach, left-turn arc, southbound exit
    turn_pts = (_line(ARM, d, _TURN_R - d, d)[:-1]
                + _arc(_TURN_R - d, -(_TURN_R - d), _TURN_R, math.pi / 2, math.pi)
                + _line(-d, -(_TURN_R - d), -d, -ARM)[1:])
    turn_path = _Path(turn_pts)

    x0 = rng.uniform(-80, -30)
    v_ego = rng.uniform(4.5, 6.5)
    ego = _track("ego", paths["e0"], x0 + ARM, _speeds(rng, v_ego), EGO_LENGTH, EGO_WIDTH)
    kept = [ego]
    idx = 0

    follower = _place(
        rng, kept, f"v{idx}", paths["e0"],
        s0_draw=lambda r: x0 + ARM - r.uniform(10, 20),
        v_draw=lambda r: max(3.2, v_ego - r.uniform(0.3, 1.2)),
    )
    if follower is not None:
        kept.append(follower)
        idx += 1
    oncoming = _place(
        rng, kept, f"v{idx}", paths["w0"],
        s0_draw=lambda r: ARM - r.uniform(25, 75),
        v_draw=lambda r: r.uniform(4.5, 6.0),
    )
    if oncoming is not None:
        kept.append(oncoming)
        idx += 1
    for _ in range(int(rng.integers(2, 4))):  # crossing traffic
        lane = "n0" if rng.random() < 0.5 else "s0"
        track = _place(
            rng, kept, f"v{idx}", paths[lane],
            s0_draw=lambda r: ARM - r.uniform(20, 90),
            v_draw=lambda r: r.uniform(3.5, 6.5),
        )
        if track is not None:
            kept.append(track)
            idx += 1
    # turner: time the arc exit inside the window so the ~90 deg turn is on record
    arc_exit_s = (ARM - (_TURN_R - d)) + math.pi / 2 * _TURN_R
    turner = None
    for _ in range(80):
        v = rng.uniform(3.5, 5.0)
        tau = rng.uniform(8.0, 16.0)
        s0 = arc_exit_s - v * tau
        length, width = _footprint(rng)
        cand = _track(f"v{idx}", turn_path, s0, _speeds(rng, v), length, width)
        if _clear_of(cand, kept):
            turner = cand
            break
    if turner is not None:
        kept.append(turner)
        idx += 1
    return Scenario(id=sid, map=road, agents=kept, ego_id="ego")
