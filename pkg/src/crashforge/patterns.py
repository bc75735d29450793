"""The five collision types: nominal angles, impact classification, and
construction of attacker target poses in bumper contact with the ego box.

Angle bands are +/-10 degrees around each nominal. The two 90-degree types are
told apart by the relative heading of the two tracks two seconds before
impact: junction crossing keeps orthogonal paths, a left turn across path
starts from opposing ones.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .geometry import OrientedBox, Pose2D, normalize_angle, overlap_depth, relative_heading

ANGLE_TOL_DEG = 10.0
TTA_MIN_S, TTA_MAX_S = 4.5, 9.0
ENTRY_LOOKBACK_S = 2.0
# nudge keeping constructed boxes measurably in contact under float rounding
CONTACT_INSET = 1e-9


class CollisionType(enum.Enum):
    LANE_CHANGE = "lane_change"
    OPPOSITE_DIRECTION = "opposite_direction"
    REAR_END = "rear_end"
    JUNCTION_CROSSING = "junction_crossing"
    LTAP = "ltap"


_NOMINAL_DEG = {
    CollisionType.REAR_END: 0.0,
    CollisionType.LANE_CHANGE: 20.0,
    CollisionType.OPPOSITE_DIRECTION: 180.0,
    CollisionType.JUNCTION_CROSSING: 90.0,
    CollisionType.LTAP: 90.0,
}


def nominal_angle(ctype: CollisionType) -> float:
    return _NOMINAL_DEG[ctype]


def angle_band(ctype: CollisionType) -> tuple[float, float]:
    """Sampling band for relative-heading draws, degrees.

    Lane change is trimmed half a degree at the bottom so its samples never
    tie with the rear-end band edge at exactly 10 degrees.
    """
    nom = nominal_angle(ctype)
    lo, hi = nom - ANGLE_TOL_DEG, nom + ANGLE_TOL_DEG
    if ctype is CollisionType.LANE_CHANGE:
        lo += 0.5
    return lo, hi


@dataclass(frozen=True)
class CollisionPattern:
    """Ego/attacker configuration at the impact instant."""

    ego_box: OrientedBox
    attacker_box: OrientedBox
    attacker_id: str
    ctype: CollisionType
    tta_s: float

    def __post_init__(self):
        if not (TTA_MIN_S <= self.tta_s <= TTA_MAX_S):
            raise ValueError(f"tta_s {self.tta_s} outside [{TTA_MIN_S}, {TTA_MAX_S}]")

    def to_dict(self) -> dict:
        def box(b: OrientedBox) -> dict:
            return {"x": b.center.x, "y": b.center.y, "theta": b.center.theta,
                    "length": b.length, "width": b.width}
        return {"ego_box": box(self.ego_box), "attacker_box": box(self.attacker_box),
                "attacker_id": self.attacker_id, "ctype": self.ctype.value,
                "tta_s": self.tta_s}

    @staticmethod
    def from_dict(d: dict) -> "CollisionPattern":
        def box(bd: dict) -> OrientedBox:
            return OrientedBox(Pose2D(bd["x"], bd["y"], bd["theta"]),
                               bd["length"], bd["width"])
        return CollisionPattern(ego_box=box(d["ego_box"]), attacker_box=box(d["attacker_box"]),
                                attacker_id=d["attacker_id"],
                                ctype=CollisionType(d["ctype"]), tta_s=d["tta_s"])


def classify(ego_pose_impact: Pose2D, atk_pose_impact: Pose2D,
             ego_entry_heading: float, atk_entry_heading: float) -> CollisionType | None:
    """Type whose nominal angle is within 10 degrees of the impact heading.

    Returns None (unclassified) when no band matches. Equidistant nominals
    resolve to the smaller nominal, so a 10-degree impact is rear-end. The
    90-degree band needs the entry headings: orthogonal entries make junction
    crossing, opposing entries make LTAP, anything else is unclassified.
    """
    tol = ANGLE_TOL_DEG + 1e-9
    impact = relative_heading(ego_pose_impact, atk_pose_impact)
    candidates: list[tuple[float, float, CollisionType]] = []
    for ctype in (CollisionType.REAR_END, CollisionType.LANE_CHANGE,
                  CollisionType.OPPOSITE_DIRECTION):
        dist = abs(impact - nominal_angle(ctype))
        if dist <= tol:
            candidates.append((dist, nominal_angle(ctype), ctype))
    if abs(impact - 90.0) <= tol:
        entry = abs(math.degrees(normalize_angle(ego_entry_heading - atk_entry_heading)))
        if 80.0 - 1e-9 <= entry <= 100.0 + 1e-9:
            candidates.append((abs(impact - 90.0), 90.0, CollisionType.JUNCTION_CROSSING))
        elif entry >= 170.0 - 1e-9:
            candidates.append((abs(impact - 90.0), 90.0, CollisionType.LTAP))
    if not candidates:
        return None
    candidates.sort(key=lambda c: (c[0], c[1]))
    return candidates[0][2]


# contact construction tables, all in the ego-at-impact frame:
#   face: outward normal angle of the ego face the attacker touches
#   heading: attacker heading as a function of the sampled relative angle
_SIDE_LEFT, _SIDE_RIGHT = 1, -1


def _contact_config(ctype: CollisionType, angle_deg: float, side: int) -> tuple[float, float]:
    """(face normal angle, attacker heading), radians, in the ego frame."""
    a = math.radians(angle_deg)
    if ctype is CollisionType.REAR_END:
        return math.pi, a
    if ctype is CollisionType.OPPOSITE_DIRECTION:
        return 0.0, a
    if ctype is CollisionType.LANE_CHANGE:
        # approach from the adjacent lane side: right side for side=-1
        return (side * math.pi / 2), -side * a
    if ctype is CollisionType.JUNCTION_CROSSING:
        # orthogonal crossing; side picks which flank the attacker arrives on
        return (side * math.pi / 2), -side * a
    if ctype is CollisionType.LTAP:
        # left turn across the ego path arrives on the far (left) side
        return math.pi / 2, -a
    raise ValueError(ctype)


def _support_offset(heading: float, normal: float, length: float, width: float,
                    ) -> tuple[float, float]:
    """Local offset from box center to its support point in direction -normal."""
    rel = heading - normal
    c, s = math.cos(rel), math.sin(rel)
    # corner signs maximizing projection on -normal, in the box frame
    sx = -1.0 if c > 0 else 1.0
    sy = 1.0 if s > 0 else -1.0
    if abs(c) < 1e-12:  # face-parallel contact: use the face midpoint
        sx = 0.0
    if abs(s) < 1e-12:
        sy = 0.0
    lx, ly = sx * 0.5 * length, sy * 0.5 * width
    ch, sh = math.cos(heading), math.sin(heading)
    return ch * lx - sh * ly, sh * lx + ch * ly


def target_pose(ego_box_at_impact: OrientedBox, ctype: CollisionType, angle_sample: float,
                attacker_size: tuple[float, float] | None = None,
                contact_frac: float = 0.0, side: int = _SIDE_LEFT) -> Pose2D:
    """Attacker pose in bumper contact with the ego box at the sampled angle.

    `contact_frac` in [-1, 1] sweeps the contact point along the touched ego
    face; `side` picks which flank a lane-change attacker comes from (+1 left,
    -1 right). The attacker footprint defaults to the ego's.
    """
    lo, hi = angle_band(ctype)
    if not (lo - 1e-9 <= angle_sample <= hi + 1e-9):
        raise ValueError(f"angle {angle_sample} outside band [{lo}, {hi}] for {ctype.value}")
    la, wa = attacker_size if attacker_size is not None else (ego_box_at_impact.length,
                                                              ego_box_at_impact.width)
    face, heading = _contact_config(ctype, angle_sample, side)
    le, we = ego_box_at_impact.length, ego_box_at_impact.width
    fc, fs = math.cos(face), math.sin(face)
    half_out = 0.5 * (le if abs(fc) > 0.5 else we)  # face plane distance from ego center
    half_span = 0.5 * (we if abs(fc) > 0.5 else le)  # lateral half extent of that face
    # contact point on the face, then back the attacker center off its support point
    px = fc * half_out - fs * half_span * contact_frac
    py = fs * half_out + fc * half_span * contact_frac
    ox, oy = _support_offset(heading, face, la, wa)
    cx = px - ox + fc * -CONTACT_INSET
    cy = py - oy + fs * -CONTACT_INSET
    local = Pose2D(cx, cy, heading)
    return ego_box_at_impact.center.compose(local)


def enumerate_candidates(ego_box_at_impact: OrientedBox, ctype: CollisionType,
                         n_angles: int, attacker_size: tuple[float, float] | None = None,
                         side: int = _SIDE_LEFT) -> list[Pose2D]:
    """Uniform angle grid over the band; side-contact types also sweep the face."""
    if n_angles < 1:
        raise ValueError("n_angles must be >= 1")
    lo, hi = angle_band(ctype)
    nom = nominal_angle(ctype)
    if n_angles == 1:
        angles = [nom if lo <= nom <= hi else 0.5 * (lo + hi)]
    else:
        angles = [lo + (hi - lo) * k / (n_angles - 1) for k in range(n_angles)]
    fracs = [0.0]
    if n_angles > 1 and ctype in (CollisionType.LANE_CHANGE,
                                  CollisionType.JUNCTION_CROSSING, CollisionType.LTAP):
        fracs = [0.0, -0.6, 0.6]
    return [
        target_pose(ego_box_at_impact, ctype, a, attacker_size=attacker_size,
                    contact_frac=fracs[k % len(fracs)], side=side)
        for k, a in enumerate(angles)
    ]


def attacker_box_at(pose: Pose2D, attacker_size: tuple[float, float]) -> OrientedBox:
    return OrientedBox(pose, attacker_size[0], attacker_size[1])


def contact_penetration(ego_box: OrientedBox, attacker_box: OrientedBox) -> float:
    """SAT minimum-overlap measure of the constructed contact (0 = exact touch)."""
    return overlap_depth(ego_box, attacker_box)
