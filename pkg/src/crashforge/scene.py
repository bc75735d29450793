"""Maps, agent tracks and scenarios, plus JSONL serialization.

One scenario per JSONL line with fixed keys:
  {"id", "rate_hz", "map": {"lanes": [{"id", "points", "successors"}],
   "drivable": [[[x, y], ...], ...]},
   "agents": [{"id", "length", "width", "states": [[x, y, theta], ...],
   "valid": [...]}], "ego_id"}
Angles in radians, distances in meters. Corpus lines may additionally carry
"pattern" and "request" objects (see pipeline); those keys are ignored here.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import Pose2D, point_in_polygon

RATE_HZ = 2.0
LANE_WIDTH = 3.5


class ScenarioError(ValueError):
    """Raised when a scenario violates a structural invariant."""


@dataclass
class LanePolyline:
    id: str
    points: list[tuple[float, float]]
    successors: list[str] = field(default_factory=list)

    def heading_at(self, index: int) -> float:
        i = min(index, len(self.points) - 2)
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        return math.atan2(y1 - y0, x1 - x0)


@dataclass
class RoadMap:
    lanes: list[LanePolyline]
    drivable: list[list[tuple[float, float]]]

    def lane_by_id(self, lane_id: str) -> LanePolyline:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        raise KeyError(lane_id)

    def contains(self, x: float, y: float) -> bool:
        return any(point_in_polygon(x, y, poly) for poly in self.drivable)


@dataclass
class AgentTrack:
    id: str
    length: float
    width: float
    states: list[Pose2D]
    valid: list[bool]

    def pose_at(self, frame: int) -> Pose2D:
        if not (0 <= frame < len(self.states)) or not self.valid[frame]:
            raise IndexError(f"agent {self.id} has no state at frame {frame}")
        return self.states[frame]

    def first_valid(self) -> int:
        return self.valid.index(True)

    def last_valid(self) -> int:
        return len(self.valid) - 1 - self.valid[::-1].index(True)

    def speed_at(self, frame: int, rate_hz: float = RATE_HZ) -> float:
        """Backward-difference speed; falls back to the forward difference at the start."""
        lo, hi = self.first_valid(), self.last_valid()
        if frame <= lo:
            a, b = lo, min(lo + 1, hi)
        else:
            a, b = frame - 1, frame
        if a == b:
            return 0.0
        pa, pb = self.states[a], self.states[b]
        return math.hypot(pb.x - pa.x, pb.y - pa.y) * rate_hz / (b - a)

    def displacement(self, f0: int, f1: int) -> float:
        p0, p1 = self.states[f0], self.states[f1]
        return math.hypot(p1.x - p0.x, p1.y - p0.y)


@dataclass
class Scenario:
    id: str
    map: RoadMap
    agents: list[AgentTrack]
    ego_id: str
    rate_hz: float = RATE_HZ

    @property
    def n_frames(self) -> int:
        return max(len(a.states) for a in self.agents)

    @property
    def duration_s(self) -> float:
        return (self.n_frames - 1) / self.rate_hz

    def agent_by_id(self, agent_id: str) -> AgentTrack:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)

    @property
    def ego(self) -> AgentTrack:
        return self.agent_by_id(self.ego_id)

    def validate(self) -> None:
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ScenarioError(f"scenario {self.id}: duplicate agent ids")
        if self.ego_id not in ids:
            raise ScenarioError(f"scenario {self.id}: ego_id {self.ego_id!r} not among agents")
        if self.rate_hz != RATE_HZ:
            raise ScenarioError(f"scenario {self.id}: rate_hz must be {RATE_HZ}")
        for lane in self.map.lanes:
            if len(lane.points) < 2:
                raise ScenarioError(f"scenario {self.id}: lane {lane.id} has < 2 points")
            for (x0, y0), (x1, y1) in zip(lane.points, lane.points[1:]):
                d = math.hypot(x1 - x0, y1 - y0)
                if d == 0.0:
                    raise ScenarioError(f"scenario {self.id}: lane {lane.id} repeats a point")
                if d > 2.0 + 1e-9:
                    raise ScenarioError(
                        f"scenario {self.id}: lane {lane.id} point spacing {d:.3f} m > 2 m")
            for succ in lane.successors:
                try:
                    self.map.lane_by_id(succ)
                except KeyError:
                    raise ScenarioError(
                        f"scenario {self.id}: lane {lane.id} successor {succ!r} unresolved")
            for x, y in lane.points:
                if not self.map.contains(x, y):
                    raise ScenarioError(
                        f"scenario {self.id}: lane {lane.id} leaves the drivable area")
        for agent in self.agents:
            if len(agent.states) != len(agent.valid):
                raise ScenarioError(
                    f"scenario {self.id}: agent {agent.id} states/valid length mismatch")
            if not any(agent.valid):
                raise ScenarioError(f"scenario {self.id}: agent {agent.id} never valid")
            lo, hi = agent.first_valid(), agent.last_valid()
            if not all(agent.valid[lo:hi + 1]):
                raise ScenarioError(
                    f"scenario {self.id}: agent {agent.id} presence is not contiguous")
            if agent.length <= 0 or agent.width <= 0:
                raise ScenarioError(f"scenario {self.id}: agent {agent.id} bad footprint")


def ego_pose_at(scenario: Scenario, frame: int) -> Pose2D:
    return scenario.ego.pose_at(frame)


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "id": s.id,
        "rate_hz": s.rate_hz,
        "map": {
            "lanes": [
                {"id": l.id, "points": [[x, y] for x, y in l.points],
                 "successors": list(l.successors)}
                for l in s.map.lanes
            ],
            "drivable": [[[x, y] for x, y in poly] for poly in s.map.drivable],
        },
        "agents": [
            {"id": a.id, "length": a.length, "width": a.width,
             "states": [[p.x, p.y, p.theta] for p in a.states],
             "valid": list(a.valid)}
            for a in s.agents
        ],
        "ego_id": s.ego_id,
    }


def scenario_from_dict(d: dict) -> Scenario:
    road = RoadMap(
        lanes=[
            LanePolyline(
                id=ld["id"],
                points=[(float(x), float(y)) for x, y in ld["points"]],
                successors=[str(v) for v in ld.get("successors", [])],
            )
            for ld in d["map"]["lanes"]
        ],
        drivable=[[(float(x), float(y)) for x, y in poly] for poly in d["map"]["drivable"]],
    )
    agents = [
        AgentTrack(
            id=ad["id"],
            length=float(ad["length"]),
            width=float(ad["width"]),
            states=[Pose2D(float(x), float(y), float(t)) for x, y, t in ad["states"]],
            valid=[bool(v) for v in ad["valid"]],
        )
        for ad in d["agents"]
    ]
    s = Scenario(id=str(d["id"]), map=road, agents=agents, ego_id=str(d["ego_id"]),
                 rate_hz=float(d["rate_hz"]))
    s.validate()
    return s


def save_scenarios(scenarios: list[Scenario], path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for s in scenarios:
            fh.write(json.dumps(scenario_to_dict(s), separators=(",", ":")) + "\n")


def load_scenarios(path: str | Path) -> list[Scenario]:
    path = Path(path)
    out: list[Scenario] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                out.append(scenario_from_dict(d))
            except ScenarioError:
                raise
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioError(f"{path}:{lineno}: malformed scenario: {exc}") from exc
    return out
