"""Transform a non-collision scenario plus (collision type, TTA) into a
collision scenario by replacing one agent's future trajectory.

The ego keeps its logged track. A candidate attacker is retargeted onto a
bumper-contact pose against the ego box at the collision frame, realized with
quintic boundary-value segments, and the result is kept only if it is
kinematically feasible, stays on the road, leaves third parties untouched,
and first meets the ego exactly at the requested frame.

Realization is type-structured so the classification-defining headings are
exact by construction:

  rear_end / lane_change / opposite_direction - one quintic over the horizon;
  junction_crossing - quintic approach, then a 2 s straight final approach at
      the sampled impact heading;
  ltap - quintic approach to a turn pivot on the opposing heading, then a 2 s
      left-turn quintic into the contact pose.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import OrientedBox, Pose2D, boxes_overlap, normalize_angle
from .patterns import (CollisionPattern, CollisionType, TTA_MAX_S, TTA_MIN_S,
                       angle_band, nominal_angle, target_pose)
from .quintic import (BoundaryState, FeasibilityLimits, QuinticSpec, Trajectory,
                      boundary_state_from_pose, feasible, plan)
from .scene import AgentTrack, Scenario, scenario_from_dict, scenario_to_dict

T_HIST_FRAMES = 8  # 4 s of history at 2 Hz
ENTRY_LOOKBACK_FRAMES = 4  # 2 s
FINAL_PHASE_S = 2.0  # straight-approach / turn duration for the 90-degree types
FINE_RATE_HZ = 10.0

TTA_BUCKETS = [(4.5, 6.0), (6.0, 7.5), (7.5, 9.0)]
_BUCKET_TTAS = {0: [4.5, 5.0, 5.5], 1: [6.0, 6.5, 7.0], 2: [7.5, 8.0, 8.5, 9.0]}

INFEASIBLE_REASONS = ("no_candidates", "kinematics", "off_road",
                      "third_party_collision", "early_collision")
_REASON_RANK = {r: i for i, r in enumerate(INFEASIBLE_REASONS)}


def tta_bucket_label(tta_s: float) -> str:
    for lo, hi in TTA_BUCKETS:
        if lo <= tta_s < hi or (hi == 9.0 and tta_s == 9.0):
            return f"{lo}-{hi}"
    raise ValueError(f"tta {tta_s} outside buckets")


@dataclass(frozen=True)
class GenerationRequest:
    ctype: CollisionType
    tta_s: float
    seed: int

    def __post_init__(self):
        if not (TTA_MIN_S <= self.tta_s <= TTA_MAX_S):
            raise ValueError(f"tta_s {self.tta_s} outside [{TTA_MIN_S}, {TTA_MAX_S}]")

    @property
    def tta_frames(self) -> int:
        return round(2.0 * self.tta_s)

    def to_dict(self) -> dict:
        return {"ctype": self.ctype.value, "tta_s": self.tta_s, "seed": self.seed}

    @staticmethod
    def from_dict(d: dict) -> "GenerationRequest":
        return GenerationRequest(CollisionType(d["ctype"]), d["tta_s"], d["seed"])


@dataclass(frozen=True)
class Infeasible:
    reason: str

    def __post_init__(self):
        if self.reason not in INFEASIBLE_REASONS:
            raise ValueError(f"unknown infeasibility reason {self.reason!r}")


@dataclass
class GeneratedScenario:
    base: Scenario  # attacker track replaced from t_hist onward
    pattern: CollisionPattern
    request: GenerationRequest
    t_hist: int = T_HIST_FRAMES

    @property
    def impact_frame(self) -> int:
        return self.t_hist + self.request.tta_frames


def candidate_attackers(scenario: Scenario, t_hist: int = T_HIST_FRAMES) -> list[str]:
    """Moving non-ego agents with full history, nearest to the ego first."""
    if t_hist < 4:
        raise ValueError("need at least 4 frames of history")
    ego_pose = scenario.ego.pose_at(t_hist)
    out = []
    for agent in scenario.agents:
        if agent.id == scenario.ego_id:
            continue
        if not all(agent.valid[: t_hist + 1]):
            continue
        if agent.displacement(t_hist - 4, t_hist) <= 1.0:
            continue
        d = math.hypot(agent.states[t_hist].x - ego_pose.x,
                       agent.states[t_hist].y - ego_pose.y)
        out.append((d, agent.id))
    out.sort()
    return [aid for _, aid in out]


def _derived_rng(scenario_id: str, request: GenerationRequest) -> np.random.Generator:
    key = f"{scenario_id}|{request.ctype.value}|{request.tta_s}|{request.seed}"
    digest = hashlib.sha256(key.encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _segments_for(ctype: CollisionType, start: BoundaryState, target: Pose2D,
                  v_end: float, tta_s: float,
                  approach_heading: float | None) -> list[QuinticSpec] | None:
    """Trajectory as one or two boundary-value segments; None when degenerate."""
    end = boundary_state_from_pose(target, v_end)
    if ctype in (CollisionType.REAR_END, CollisionType.LANE_CHANGE,
                 CollisionType.OPPOSITE_DIRECTION):
        return [QuinticSpec(start=start, end=end, horizon=tta_s)]

    lead_t = tta_s - FINAL_PHASE_S
    if lead_t <= 0.5:
        return None
    if ctype is CollisionType.JUNCTION_CROSSING:
        # straight final approach along the impact heading
        c, s = math.cos(target.theta), math.sin(target.theta)
        mid_pos = (target.x - FINAL_PHASE_S * v_end * c,
                   target.y - FINAL_PHASE_S * v_end * s)
        mid = BoundaryState(pos=mid_pos, vel=(v_end * c, v_end * s))
        return [QuinticSpec(start=start, end=mid, horizon=lead_t),
                QuinticSpec(start=mid, end=end, horizon=FINAL_PHASE_S)]

    # LTAP: 2 s turn from the opposing heading into the contact pose
    h_app = approach_heading if approach_heading is not None else target.theta + math.pi / 2
    turn = normalize_angle(target.theta - h_app)
    if abs(turn) < math.radians(30):
        return None
    radius = v_end * FINAL_PHASE_S / abs(turn)
    sgn = 1.0 if turn > 0 else -1.0
    center = (target.x + radius * math.cos(target.theta + sgn * math.pi / 2),
              target.y + radius * math.sin(target.theta + sgn * math.pi / 2))
    pos_angle_target = target.theta - sgn * math.pi / 2
    pos_angle_pivot = pos_angle_target - turn
    pivot_pos = (center[0] + radius * math.cos(pos_angle_pivot),
                 center[1] + radius * math.sin(pos_angle_pivot))
    mid = BoundaryState(pos=pivot_pos,
                        vel=(v_end * math.cos(h_app), v_end * math.sin(h_app)))
    # the pivot must lie ahead of the attacker, not behind it
    vx, vy = start.vel
    sp = math.hypot(vx, vy)
    if sp > 0.5:
        ahead = ((pivot_pos[0] - start.pos[0]) * vx + (pivot_pos[1] - start.pos[1]) * vy) / sp
        if ahead < 2.0:
            return None
    return [QuinticSpec(start=start, end=mid, horizon=lead_t),
            QuinticSpec(start=mid, end=end, horizon=FINAL_PHASE_S)]


def _sample_segments(segments: list[QuinticSpec], rate_hz: float) -> Trajectory:
    poses, speeds = [], []
    for i, spec in enumerate(segments):
        traj = plan(spec, rate_hz)
        skip = 1 if i > 0 else 0
        poses.extend(traj.poses[skip:])
        speeds.extend(traj.speeds[skip:])
    return Trajectory(rate_hz=rate_hz, poses=poses, speeds=speeds)


def _end_speeds(ctype: CollisionType, scenario: Scenario, attacker: AgentTrack,
                t_hist: int, impact_frame: int) -> list[float]:
    """Impact-speed candidates, preferred first; default is the history speed."""
    v_hist = attacker.speed_at(t_hist)
    if ctype is CollisionType.REAR_END:
        # keep a closing margin so contact does not arrive a frame early
        return [max(v_hist, scenario.ego.speed_at(impact_frame) + 2.0)]
    if ctype is CollisionType.LTAP:
        return [min(max(v_hist, 3.5), 6.0)]  # turn-compatible speed
    if ctype is CollisionType.JUNCTION_CROSSING:
        # varying the final-approach speed shifts its start point, absorbing
        # timing mismatch between the crosser and the requested frame
        return [max(v_hist, 2.0), 3.0, 4.5, 6.0, 7.5]
    return [max(v_hist, 2.0)]


class _Gate:
    """Feasibility gate shared by the pipeline and the learned generator."""

    def __init__(self, scenario: Scenario, t_hist: int, impact_frame: int,
                 limits: FeasibilityLimits):
        self.scenario = scenario
        self.t_hist = t_hist
        self.impact_frame = impact_frame
        self.limits = limits

    def check(self, attacker: AgentTrack, segments: list[QuinticSpec]) -> str | None:
        """None when the realization passes; otherwise the discard reason."""
        for spec in segments:
            dist = math.hypot(spec.end.pos[0] - spec.start.pos[0],
                              spec.end.pos[1] - spec.start.pos[1])
            if dist / spec.horizon > self.limits.v_max:
                return "kinematics"
        fine = _sample_segments(segments, FINE_RATE_HZ)
        if not feasible(fine, self.limits):
            return "kinematics"
        for p in fine.poses:
            if not self.scenario.map.contains(p.x, p.y):
                return "off_road"
        coarse = _sample_segments(segments, self.scenario.rate_hz)
        track = replace_track(attacker, coarse, self.t_hist, self.scenario.n_frames)
        for frame in range(self.t_hist, self.impact_frame):
            abox = OrientedBox(track.states[frame], track.length, track.width)
            for other in self.scenario.agents:
                if other.id in (attacker.id, self.scenario.ego_id):
                    continue
                if not other.valid[frame]:
                    continue
                if boxes_overlap(abox, OrientedBox(other.states[frame],
                                                   other.length, other.width)):
                    return "third_party_collision"
        ego = self.scenario.ego
        for frame in range(self.t_hist, self.impact_frame):
            abox = OrientedBox(track.states[frame], track.length, track.width)
            if boxes_overlap(abox, OrientedBox(ego.states[frame], ego.length, ego.width)):
                return "early_collision"
        abox = OrientedBox(track.states[self.impact_frame], track.length, track.width)
        ebox = OrientedBox(ego.states[self.impact_frame], ego.length, ego.width)
        if not boxes_overlap(abox, ebox):
            return "kinematics"
        return None


def replace_track(attacker: AgentTrack, coarse: Trajectory, t_hist: int,
                  n_frames: int) -> AgentTrack:
    """Attacker track with frames from t_hist onward replaced by the realization.

    Past frames keep the log; after impact the wreck stays frozen in place.
    """
    states = list(attacker.states[:t_hist]) + list(coarse.poses)
    while len(states) < n_frames:
        states.append(states[-1])
    return AgentTrack(id=attacker.id, length=attacker.length, width=attacker.width,
                      states=states[:n_frames], valid=[True] * n_frames)


def _angle_plan(ctype: CollisionType, rng: np.random.Generator) -> list[float]:
    lo, hi = angle_band(ctype)
    nom = nominal_angle(ctype)
    primary = float(rng.uniform(lo, hi))
    grid = [lo + (hi - lo) * k / 4 for k in range(5)]
    grid.sort(key=lambda a: (abs(a - nom), a))
    return [primary] + grid


def build(scenario: Scenario, request: GenerationRequest,
          t_hist: int = T_HIST_FRAMES,
          limits: FeasibilityLimits = FeasibilityLimits(),
          ) -> GeneratedScenario | Infeasible:
    """Replace one attacker's future so it hits the ego at the requested frame."""
    impact_frame = t_hist + request.tta_frames
    ego = scenario.ego
    if impact_frame >= len(ego.states) or not ego.valid[impact_frame]:
        raise ValueError(
            f"ego not valid through frame {impact_frame} in scenario {scenario.id}")
    ego_pose_imp = ego.pose_at(impact_frame)
    ego_box = OrientedBox(ego_pose_imp, ego.length, ego.width)
    candidates = candidate_attackers(scenario, t_hist)
    if not candidates:
        return Infeasible("no_candidates")

    rng = _derived_rng(scenario.id, request)
    angles = _angle_plan(request.ctype, rng)
    fracs = ([0.0, -0.6, 0.6]
             if request.ctype in (CollisionType.LANE_CHANGE,
                                  CollisionType.JUNCTION_CROSSING, CollisionType.LTAP)
             else [0.0])
    gate = _Gate(scenario, t_hist, impact_frame, limits)
    worst = "kinematics"

    for attacker_id in candidates:
        attacker = scenario.agent_by_id(attacker_id)
        start_pose = attacker.pose_at(t_hist)
        start = boundary_state_from_pose(start_pose, attacker.speed_at(t_hist))
        v_ends = _end_speeds(request.ctype, scenario, attacker, t_hist, impact_frame)
        rel = start_pose.relative_to(ego_pose_imp)
        if request.ctype is CollisionType.JUNCTION_CROSSING:
            # crossing direction decides the struck flank
            side = -1 if math.sin(rel.theta) > 0 else 1
        else:
            side = 1 if rel.y >= 0 else -1
        approach_heading = None
        if request.ctype is CollisionType.LTAP:
            entry_frame = max(ego.first_valid(), impact_frame - ENTRY_LOOKBACK_FRAMES)
            approach_heading = normalize_angle(ego.pose_at(entry_frame).theta + math.pi)
        for k, angle in enumerate(angles):
            for frac in (fracs if k > 0 else [0.0]):
                target = target_pose(ego_box, request.ctype, angle,
                                     attacker_size=(attacker.length, attacker.width),
                                     contact_frac=frac, side=side)
                for v_end in v_ends:
                    segments = _segments_for(request.ctype, start, target, v_end,
                                             request.tta_s, approach_heading)
                    if segments is None:
                        continue
                    reason = gate.check(attacker, segments)
                    if reason is not None:
                        if _REASON_RANK[reason] > _REASON_RANK[worst]:
                            worst = reason
                        continue
                    coarse = _sample_segments(segments, scenario.rate_hz)
                    track = replace_track(attacker, coarse, t_hist, scenario.n_frames)
                    agents = [track if a.id == attacker_id else a for a in scenario.agents]
                    gen = Scenario(id=f"{scenario.id}-{request.ctype.value}"
                                      f"-t{request.tta_s:g}-s{request.seed}",
                                   map=scenario.map, agents=agents,
                                   ego_id=scenario.ego_id, rate_hz=scenario.rate_hz)
                    pattern = CollisionPattern(
                        ego_box=ego_box,
                        attacker_box=OrientedBox(target, attacker.length, attacker.width),
                        attacker_id=attacker_id, ctype=request.ctype,
                        tta_s=request.tta_s)
                    return GeneratedScenario(base=gen, pattern=pattern,
                                             request=request, t_hist=t_hist)
    return Infeasible(worst)


def first_overlap_frame(scenario: Scenario, attacker_id: str,
                        start_frame: int = 0) -> int | None:
    """First frame at which the ego and the named agent overlap under replay."""
    ego = scenario.ego
    attacker = scenario.agent_by_id(attacker_id)
    for frame in range(start_frame, scenario.n_frames):
        if not (ego.valid[frame] and attacker.valid[frame]):
            continue
        if boxes_overlap(OrientedBox(ego.states[frame], ego.length, ego.width),
                         OrientedBox(attacker.states[frame], attacker.length,
                                     attacker.width)):
            return frame
    return None


def realized_type(gen: GeneratedScenario) -> CollisionType | None:
    """Classify the collision actually present in the generated scenario."""
    from .patterns import classify

    frame = first_overlap_frame(gen.base, gen.pattern.attacker_id)
    if frame is None:
        return None
    ego = gen.base.ego
    attacker = gen.base.agent_by_id(gen.pattern.attacker_id)
    entry = max(0, frame - ENTRY_LOOKBACK_FRAMES)
    return classify(ego.pose_at(frame), attacker.pose_at(frame),
                    ego.pose_at(max(entry, ego.first_valid())).theta,
                    attacker.pose_at(max(entry, attacker.first_valid())).theta)


def build_corpus(scenarios: list[Scenario], per_cell: int, seed: int,
                 t_hist: int = T_HIST_FRAMES,
                 limits: FeasibilityLimits = FeasibilityLimits(),
                 max_attempts_per_cell: int | None = None,
                 ) -> tuple[list[GeneratedScenario], dict]:
    """Fill every (type, TTA bucket) cell with up to per_cell successes."""
    if per_cell < 1:
        raise ValueError("per_cell must be >= 1")
    if not scenarios:
        raise ValueError("no input scenarios")
    cap = max_attempts_per_cell or max(10 * per_cell, 3 * len(scenarios))
    corpus: list[GeneratedScenario] = []
    cells = []
    for ctype in CollisionType:
        for bi, (lo, hi) in enumerate(TTA_BUCKETS):
            succeeded = 0
            failures: dict[str, int] = {}
            attempts = 0
            ttas = _BUCKET_TTAS[bi]
            while succeeded < per_cell and attempts < cap:
                scn = scenarios[attempts % len(scenarios)]
                tta = ttas[(attempts // len(scenarios)) % len(ttas)]
                key = f"{seed}|{ctype.value}|{bi}|{attempts}"
                rseed = int.from_bytes(hashlib.sha256(key.encode()).digest()[:4], "little")
                request = GenerationRequest(ctype=ctype, tta_s=tta, seed=rseed)
                result = build(scn, request, t_hist=t_hist, limits=limits)
                attempts += 1
                if isinstance(result, GeneratedScenario):
                    corpus.append(result)
                    succeeded += 1
                else:
                    failures[result.reason] = failures.get(result.reason, 0) + 1
            cells.append({"ctype": ctype.value, "tta_bucket": f"{lo}-{hi}",
                          "requested": attempts, "succeeded": succeeded,
                          "failures": failures})
    return corpus, {"cells": cells}


def save_corpus(corpus: list[GeneratedScenario], path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for gen in corpus:
            d = scenario_to_dict(gen.base)
            d["pattern"] = gen.pattern.to_dict()
            d["request"] = gen.request.to_dict()
            d["t_hist"] = gen.t_hist
            fh.write(json.dumps(d, separators=(",", ":")) + "\n")


def load_corpus(path: str | Path) -> list[GeneratedScenario]:
    out = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out.append(GeneratedScenario(
                base=scenario_from_dict(d),
                pattern=CollisionPattern.from_dict(d["pattern"]),
                request=GenerationRequest.from_dict(d["request"]),
                t_hist=d.get("t_hist", T_HIST_FRAMES)))
    return out
