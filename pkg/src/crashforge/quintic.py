"""Two-point boundary-value solves with quintic polynomials, per axis.

The attacker trajectory realizer: given start/end position, velocity and
acceleration plus a horizon, fit x(t) and y(t) independently in the world
frame and sample them at a fixed rate. Feasibility screening (speed,
acceleration, curvature) uses finite differences on the samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Pose2D


@dataclass(frozen=True)
class BoundaryState:
    pos: tuple[float, float]
    vel: tuple[float, float] = (0.0, 0.0)
    acc: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for v in (*self.pos, *self.vel, *self.acc):
            if not math.isfinite(v):
                raise ValueError(f"non-finite boundary state component: {v!r}")


@dataclass(frozen=True)
class QuinticSpec:
    start: BoundaryState
    end: BoundaryState
    horizon: float

    def __post_init__(self):
        if not (self.horizon > 0):
            raise ValueError(f"horizon must be > 0, got {self.horizon}")


@dataclass
class Trajectory:
    """Sampled motion: one pose and one speed per frame at `rate_hz`."""

    rate_hz: float
    poses: list[Pose2D]
    speeds: list[float]

    def __len__(self) -> int:
        return len(self.poses)


def solve_quintic_1d(p0: float, v0: float, a0: float,
                     pT: float, vT: float, aT: float, T: float) -> tuple[float, ...]:
    """Coefficients c0..c5 of p(t) = sum c_k t^k meeting all six boundary conditions.

    The first three coefficients are read off the start conditions; the tail is
    the closed-form elimination of the remaining 3x3 system.
    """
    for v in (p0, v0, a0, pT, vT, aT, T):
        if not math.isfinite(v):
            raise ValueError(f"non-finite quintic input: {v!r}")
    if T <= 0:
        raise ValueError(f"horizon must be > 0, got {T}")
    c0, c1, c2 = p0, v0, 0.5 * a0
    e1 = pT - (c0 + c1 * T + c2 * T * T)
    e2 = vT - (c1 + 2.0 * c2 * T)
    e3 = aT - 2.0 * c2
    T2, T3 = T * T, T * T * T
    c3 = (20.0 * e1 - 8.0 * e2 * T + e3 * T2) / (2.0 * T3)
    c4 = (-30.0 * e1 + 14.0 * e2 * T - 2.0 * e3 * T2) / (2.0 * T3 * T)
    c5 = (12.0 * e1 - 6.0 * e2 * T + e3 * T2) / (2.0 * T3 * T2)
    return (c0, c1, c2, c3, c4, c5)


def poly_eval(c: tuple[float, ...], t: float) -> float:
    acc = 0.0
    for ck in reversed(c):
        acc = acc * t + ck
    return acc


def poly_derivative(c: tuple[float, ...]) -> tuple[float, ...]:
    return tuple(k * c[k] for k in range(1, len(c)))


def plan(spec: QuinticSpec, rate_hz: float) -> Trajectory:
    """Sample the boundary-value solution over [0, horizon] at `rate_hz`.

    The horizon must land on the sampling grid (within 1e-6 of a frame); the
    last sample is placed exactly at the horizon.
    """
    T = spec.horizon
    n = round(T * rate_hz)
    if n < 1 or abs(n - T * rate_hz) > 1e-6:
        raise ValueError(f"horizon {T} s does not align with rate {rate_hz} Hz")
    cx = solve_quintic_1d(spec.start.pos[0], spec.start.vel[0], spec.start.acc[0],
                          spec.end.pos[0], spec.end.vel[0], spec.end.acc[0], T)
    cy = solve_quintic_1d(spec.start.pos[1], spec.start.vel[1], spec.start.acc[1],
                          spec.end.pos[1], spec.end.vel[1], spec.end.acc[1], T)
    dcx, dcy = poly_derivative(cx), poly_derivative(cy)

    xs, ys, vxs, vys = [], [], [], []
    for k in range(n + 1):
        t = T if k == n else k / rate_hz
        xs.append(poly_eval(cx, t))
        ys.append(poly_eval(cy, t))
        vxs.append(poly_eval(dcx, t))
        vys.append(poly_eval(dcy, t))

    speeds = [math.hypot(vx, vy) for vx, vy in zip(vxs, vys)]
    headings: list[float] = []
    for vx, vy, sp in zip(vxs, vys, speeds):
        headings.append(math.atan2(vy, vx) if sp > 0.1 else math.nan)
    _fill_headings(headings)
    poses = [Pose2D(x, y, h) for x, y, h in zip(xs, ys, headings)]
    return Trajectory(rate_hz=rate_hz, poses=poses, speeds=speeds)


def _fill_headings(headings: list[float]) -> None:
    # carry headings through slow frames; default 0 when motion never resolves one
    last = math.nan
    for i, h in enumerate(headings):
        if math.isnan(h):
            headings[i] = last
        else:
            last = h
    nxt = math.nan
    for i in range(len(headings) - 1, -1, -1):
        if math.isnan(headings[i]):
            headings[i] = nxt
        else:
            nxt = headings[i]
    for i, h in enumerate(headings):
        if math.isnan(h):
            headings[i] = 0.0


@dataclass(frozen=True)
class FeasibilityLimits:
    v_max: float = 20.0
    a_max: float = 5.0
    kappa_max: float = 0.3


def feasible(traj: Trajectory, limits: FeasibilityLimits = FeasibilityLimits()) -> bool:
    """Finite-difference speed/acceleration/curvature screening over the samples."""
    if len(traj) < 3:
        raise ValueError("feasibility check needs at least 3 samples")
    dt = 1.0 / traj.rate_hz
    pts = [(p.x, p.y) for p in traj.poses]
    tol = 1e-9
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if math.hypot(x1 - x0, y1 - y0) / dt > limits.v_max + tol:
            return False
    for (x0, y0), (x1, y1), (x2, y2) in zip(pts, pts[1:], pts[2:]):
        ax = (x2 - 2 * x1 + x0) / (dt * dt)
        ay = (y2 - 2 * y1 + y0) / (dt * dt)
        if math.hypot(ax, ay) > limits.a_max + tol:
            return False
        if _menger_curvature((x0, y0), (x1, y1), (x2, y2)) > limits.kappa_max + tol:
            return False
    return True


def _menger_curvature(a, b, c) -> float:
    # 4 * triangle area / product of side lengths; 0 for near-coincident points
    lab = math.hypot(b[0] - a[0], b[1] - a[1])
    lbc = math.hypot(c[0] - b[0], c[1] - b[1])
    lca = math.hypot(a[0] - c[0], a[1] - c[1])
    if min(lab, lbc, lca) < 1e-6:
        return 0.0
    area2 = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    return 2.0 * area2 / (lab * lbc * lca)


def boundary_state_from_pose(pose: Pose2D, speed: float, acc: float = 0.0) -> BoundaryState:
    """Boundary state with velocity (and optional acceleration) directed along the heading."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return BoundaryState(pos=(pose.x, pose.y), vel=(speed * c, speed * s), acc=(acc * c, acc * s))
