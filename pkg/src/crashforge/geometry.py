"""Planar pose algebra, oriented-box overlap tests, and angle utilities.

All angles are counterclockwise-positive radians internally; degrees appear
only at classification and report boundaries. Everything here is a pure
function over immutable values and safe to call from any thread.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU = math.tau


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    if not math.isfinite(a):
        raise ValueError(f"non-finite angle: {a!r}")
    r = math.remainder(a, TAU)
    if r <= -math.pi:
        r += TAU
    return r


@dataclass(frozen=True)
class Pose2D:
    """Position (m) and heading (rad, CCW from +x), heading stored in (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def transform_point(self, px: float, py: float) -> tuple[float, float]:
        """Map a point from this pose's local frame into the parent frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return self.x + c * px - s * py, self.y + s * px + c * py

    def inverse_transform_point(self, px: float, py: float) -> tuple[float, float]:
        """Map a parent-frame point into this pose's local frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx, dy = px - self.x, py - self.y
        return c * dx + s * dy, -s * dx + c * dy

    def compose(self, other: "Pose2D") -> "Pose2D":
        """Pose of `other` (given in this pose's frame) in the parent frame."""
        x, y = self.transform_point(other.x, other.y)
        return Pose2D(x, y, self.theta + other.theta)

    def relative_to(self, base: "Pose2D") -> "Pose2D":
        """This pose expressed in `base`'s frame (inverse of compose)."""
        x, y = base.inverse_transform_point(self.x, self.y)
        return Pose2D(x, y, self.theta - base.theta)


def relative_heading(a: Pose2D, b: Pose2D) -> float:
    """Absolute heading difference between two poses, in degrees within [0, 180]."""
    return abs(math.degrees(normalize_angle(a.theta - b.theta)))


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle with pose `center`, extent `length` along heading and `width` across."""

    center: Pose2D
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"box extents must be positive: {self.length} x {self.width}")

    def corners(self) -> list[tuple[float, float]]:
        """Corners in CCW order: front-left, rear-left, rear-right, front-right."""
        hl, hw = 0.5 * self.length, 0.5 * self.width
        local = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
        return [self.center.transform_point(px, py) for px, py in local]

    def contains_point(self, px: float, py: float, tol: float = 0.0) -> bool:
        lx, ly = self.center.inverse_transform_point(px, py)
        return abs(lx) <= 0.5 * self.length + tol and abs(ly) <= 0.5 * self.width + tol


def _axes(box: OrientedBox) -> list[tuple[float, float]]:
    c, s = math.cos(box.center.theta), math.sin(box.center.theta)
    return [(c, s), (-s, c)]


def overlap_depth(a: OrientedBox, b: OrientedBox) -> float:
    """Signed SAT margin over the 4 edge normals.

    Positive = minimum penetration depth, negative = a separating axis exists
    with at least that gap. Zero means exact touch.
    """
    ca, cb = a.corners(), b.corners()
    margin = math.inf
    for ax, ay in _axes(a) + _axes(b):
        pa = [ax * x + ay * y for x, y in ca]
        pb = [ax * x + ay * y for x, y in cb]
        margin = min(margin, min(max(pa), max(pb)) - max(min(pa), min(pb)))
    return margin


def boxes_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Separating-axis test over the 4 edge normals; touching edges count as overlap."""
    dx = a.center.x - b.center.x
    dy = a.center.y - b.center.y
    reach = 0.5 * (math.hypot(a.length, a.width) + math.hypot(b.length, b.width))
    if dx * dx + dy * dy > reach * reach:
        return False
    ca, cb = a.corners(), b.corners()
    for ax, ay in _axes(a) + _axes(b):
        pa = [ax * x + ay * y for x, y in ca]
        pb = [ax * x + ay * y for x, y in cb]
        if max(pa) < min(pb) or max(pb) < min(pa):
            return False
    return True


def box_separation(a: OrientedBox, b: OrientedBox) -> float:
    """Euclidean distance between two boxes (0 when overlapping)."""
    if boxes_overlap(a, b):
        return 0.0
    ca, cb = a.corners(), b.corners()
    best = math.inf
    for i in range(4):
        for j in range(4):
            p, q = ca[i], ca[(i + 1) % 4]
            r, s = cb[j], cb[(j + 1) % 4]
            best = min(best, _segment_distance(p, q, r, s))
    return best


def _segment_distance(p, q, r, s) -> float:
    return min(
        _point_segment_distance(p, r, s),
        _point_segment_distance(q, r, s),
        _point_segment_distance(r, p, q),
        _point_segment_distance(s, p, q),
    )


def _point_segment_distance(pt, a, b) -> float:
    ax, ay = a
    bx, by = b
    px, py = pt
    vx, vy = bx - ax, by - ay
    denom = vx * vx + vy * vy
    t = 0.0 if denom == 0.0 else max(0.0, min(1.0, ((px - ax) * vx + (py - ay) * vy) / denom))
    return math.hypot(px - (ax + t * vx), py - (ay + t * vy))


def corners_array(x, y, theta, length, width) -> np.ndarray:
    """Corner coordinates for N boxes at once; inputs broadcast, output (N, 4, 2)."""
    x, y, theta, length, width = np.broadcast_arrays(
        *(np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, y, theta, length, width))
    )
    hl, hw = 0.5 * length, 0.5 * width
    local = np.stack(
        [
            np.stack([hl, hw], axis=-1),
            np.stack([-hl, hw], axis=-1),
            np.stack([-hl, -hw], axis=-1),
            np.stack([hl, -hw], axis=-1),
        ],
        axis=-2,
    )  # (N, 4, 2)
    c, s = np.cos(theta), np.sin(theta)
    wx = x[..., None] + c[..., None] * local[..., 0] - s[..., None] * local[..., 1]
    wy = y[..., None] + s[..., None] * local[..., 0] + c[..., None] * local[..., 1]
    return np.stack([wx, wy], axis=-1)


def boxes_overlap_batch(ca: np.ndarray, cb: np.ndarray) -> np.ndarray:
    """Vectorized SAT over pairs of corner arrays shaped (N, 4, 2) -> bool (N,).

    Agrees with boxes_overlap pairwise; used on hot paths (planner candidate
    pruning) where per-pair Python calls are too slow.
    """
    edges_a = np.roll(ca, -1, axis=1) - ca
    edges_b = np.roll(cb, -1, axis=1) - cb
    axes = np.concatenate([edges_a[:, :2], edges_b[:, :2]], axis=1)  # (N, 4, 2)
    normals = np.stack([-axes[..., 1], axes[..., 0]], axis=-1)
    pa = np.einsum("nke,nce->nkc", normals, ca)  # (N, 4 axes, 4 corners)
    pb = np.einsum("nke,nce->nkc", normals, cb)
    sep = (pa.max(axis=2) < pb.min(axis=2)) | (pb.max(axis=2) < pa.min(axis=2))
    return ~sep.any(axis=1)


def point_in_polygon(px: float, py: float, polygon: list[tuple[float, float]]) -> bool:
    """Even-odd ray-cast containment; points on the boundary count as inside."""
    n = len(polygon)
    inside = False
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        # boundary hit
        if (min(x1, x2) - 1e-12 <= px <= max(x1, x2) + 1e-12
                and min(y1, y2) - 1e-12 <= py <= max(y1, y2) + 1e-12):
            cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
            seg2 = (x2 - x1) ** 2 + (y2 - y1) ** 2
            if cross * cross <= 1e-18 * max(seg2, 1.0):
                return True
        if (y1 > py) != (y2 > py):
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < xint:
                inside = not inside
    return inside
