"""Taut-path extraction through a channel with clearance.

The taut cord of radius-c motion through a triangle channel alternates
straight tangent segments with circular arcs of radius c around channel
vertices.  This module implements the funnel algorithm generalized to
disks: chain disks wrapped counterclockwise on the path's left, clockwise
on its right, tangents chosen consistently with the wrap senses, and chain
tightening decided by arc sweeps instead of point turns.

Pure transformations: no global state, safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InfeasibleQueryError, InputError, InternalInvariantError
from .geom import Point, dist_point_segment, orient_xy
from .mesh import EdgeRef, ObstacleSet, TriMesh, _NEXT, _PREV
from .roadmap import Channel

TWO_PI = 2.0 * math.pi
_TINY_SWEEP = 1e-12


@dataclass(frozen=True)
class PathSegment:
    a: Point
    b: Point

    def length(self) -> float:
        return math.dist(self.a, self.b)


@dataclass(frozen=True)
class PathArc:
    """Arc of `radius` around `center` from angle `a0` to `a1`, counter-
    clockwise when ccw else clockwise; angles in radians."""

    center: Point
    radius: float
    a0: float
    a1: float
    ccw: bool

    def sweep(self) -> float:
        d = self.a1 - self.a0 if self.ccw else self.a0 - self.a1
        return d % TWO_PI

    def length(self) -> float:
        return self.radius * self.sweep()

    def point_at(self, t: float) -> Point:
        ang = self.a0 + (1.0 if self.ccw else -1.0) * t * self.sweep()
        return Point(
            self.center.x + self.radius * math.cos(ang),
            self.center.y + self.radius * math.sin(ang),
        )


PathElement = Union[PathSegment, PathArc]


@dataclass
class ClearancePath:
    start: Point
    end: Point
    clearance: float
    elements: List[PathElement] = field(default_factory=list)


def path_length(path: ClearancePath) -> float:
    """Total length: straight segments plus radius times swept angle."""
    return sum(e.length() for e in path.elements)


# ---------------------------------------------------------------------------
# oriented disks and tangents


@dataclass(frozen=True)
class _Disk:
    x: float
    y: float
    r: float
    sense: int  # +1 wrap counterclockwise, -1 clockwise, 0 for points
    vid: int = -1


class _Tangent(Tuple):
    pass


def _tangent(d1: _Disk, d2: _Disk):
    """Directed common tangent from d1 to d2 consistent with both wrap
    senses (outer tangent for equal senses, crossing tangent otherwise).

    Returns (p1, p2, ang1, ang2, ux, uy): touch points, touch angles on
    each circle, and the unit direction of travel.
    """
    dx, dy = d2.x - d1.x, d2.y - d1.y
    dist = math.hypot(dx, dy)
    if dist <= 0.0:
        raise InternalInvariantError("tangent between coincident disk centers")
    dxu, dyu = dx / dist, dy / dist
    s1 = d1.sense if d1.r > 0.0 else (d2.sense if d2.sense else 1)
    s2 = d2.sense if d2.r > 0.0 else s1
    if d1.r == 0.0 and d2.r == 0.0:
        p1 = Point(d1.x, d1.y)
        p2 = Point(d2.x, d2.y)
        ang = math.atan2(-dxu, dyu)  # normal angle; arbitrary but consistent
        return (p1, p2, ang, ang, dxu, dyu)
    same = s1 == s2
    k = (d1.r - d2.r) / dist if same else (d1.r + d2.r) / dist
    k = max(-1.0, min(1.0, k))
    root = math.sqrt(max(0.0, 1.0 - k * k))
    tau = -float(s1)
    # unit normal at d1's touch point
    nx = k * dxu + tau * root * (-dyu)
    ny = k * dyu + tau * root * dxu
    n2x, n2y = (nx, ny) if same else (-nx, -ny)
    p1 = Point(d1.x + d1.r * nx, d1.y + d1.r * ny)
    p2 = Point(d2.x + d2.r * n2x, d2.y + d2.r * n2y)
    ux, uy = p2.x - p1.x, p2.y - p1.y
    un = math.hypot(ux, uy)
    if un == 0.0:
        ux, uy = (dyu, -dxu) if s1 > 0 else (-dyu, dxu)
    else:
        ux, uy = ux / un, uy / un
    return (p1, p2, math.atan2(ny, nx), math.atan2(n2y, n2x), ux, uy)


def _sweep(a0: float, a1: float, sense: int) -> float:
    """Arc angle from a0 to a1 rotating in `sense`, in [0, 2*pi)."""
    d = a1 - a0 if sense >= 0 else a0 - a1
    return d % TWO_PI


# ---------------------------------------------------------------------------
# the funnel


@dataclass
class _ChainItem:
    disk: _Disk
    arr: float  # touch angle of the incoming tangent on this disk
    tangent: tuple  # tangent from the predecessor (chain or apex)


class _Funnel:
    """Incremental taut-cord state: an apex disk with its frozen entry
    angle, and one tightening chain of disks per side."""

    def __init__(self, start: Point):
        self.apex = _Disk(start.x, start.y, 0.0, 0)
        self.apex_entry = 0.0
        self.left: List[_ChainItem] = []
        self.right: List[_ChainItem] = []
        self.elements: List[PathElement] = []
        self.last_vid = {1: -2, -1: -2}

    def _apex_tangent(self, d: _Disk):
        """Tangent from the apex to d; when the cord need not wrap the apex
        disk any further (the straight departure from the frozen entry point
        clears the disk), it leaves there with a zero arc instead.

        Returns (tangent, departure sweep along the apex wrap).
        """
        t = _tangent(self.apex, d)
        if self.apex.r == 0.0:
            return t, 0.0
        pin = Point(
            self.apex.x + self.apex.r * math.cos(self.apex_entry),
            self.apex.y + self.apex.r * math.sin(self.apex_entry),
        )
        tc = _tangent(_Disk(pin.x, pin.y, 0.0, 0, self.apex.vid), d)
        # A straight departure from the entry point clears the disk exactly
        # when its direction does not point inward there; a segment leaving
        # outward from a circle point never re-enters.
        outward = tc[4] * math.cos(self.apex_entry) + tc[5] * math.sin(self.apex_entry)
        if outward >= 0.0:
            return (tc[0], tc[1], self.apex_entry, tc[3], tc[4], tc[5]), 0.0
        return t, _sweep(self.apex_entry, t[2], self.apex.sense)

    def _advance(self, side: int):
        """Move the apex to the head of the `side` chain, emitting the apex
        arc and the connecting tangent."""
        chain = self.left if side > 0 else self.right
        head = chain.pop(0)
        t = head.tangent
        if self.apex.r > 0.0:
            sweep = _sweep(self.apex_entry, t[2], self.apex.sense)
            # skip grazing contacts; sweeps within noise of a full turn are
            # zero-turn contacts read from the wrong side
            if _TINY_SWEEP < sweep < TWO_PI - 1e-6:
                self.elements.append(
                    PathArc(
                        Point(self.apex.x, self.apex.y),
                        self.apex.r,
                        self.apex_entry,
                        t[2],
                        self.apex.sense > 0,
                    )
                )
        self.elements.append(PathSegment(t[0], t[1]))
        self.apex = head.disk
        self.apex_entry = head.arr

    def _binds(self, pred_is_apex: bool, pred: _Disk, q: _ChainItem, d: _Disk):
        """Whether chain disk q still pins the cord between its predecessor
        and the incoming disk d.

        A wrap of at most half a turn is decided by the turn direction alone.
        Readings beyond half a turn are ambiguous (a deep genuine wrap and a
        wrong-way turn produce the same tangent pair), so those are settled
        by whether the straightened cord (the direct predecessor -> d
        tangent) would cut into q's disk."""
        if q.disk.r == 0.0:
            # classical point turn: binding iff the turn keeps its side;
            # exactly collinear contacts stay (they may become lift-off
            # vertices later and cost nothing meanwhile)
            t = _tangent(q.disk, d)
            cr = q.tangent[4] * t[5] - q.tangent[5] * t[4]
            return (1 if q.disk.sense >= 0 else -1) * cr > -1e-12
        t = _tangent(q.disk, d)
        sigma = _sweep(q.arr, t[2], q.disk.sense)
        if sigma <= math.pi + 1e-9:
            return True
        if pred_is_apex:
            direct, _ = self._apex_tangent(d)
        else:
            direct = _tangent(pred, d)
        gap = dist_point_segment((q.disk.x, q.disk.y), direct[0], direct[1])
        slack = 1e-9 * (math.dist(direct[0], direct[1]) + q.disk.r)
        return gap <= q.disk.r + slack

    def add(self, d: _Disk, side: int):
        """Insert disk d on the given side (+1 left, -1 right), tightening
        the chain and advancing the apex as needed."""
        if d.vid >= 0 and self.last_vid[side] == d.vid:
            return
        self.last_vid[side] = d.vid
        chain = self.left if side > 0 else self.right
        other = self.right if side > 0 else self.left
        while True:
            if chain:
                q = chain[-1]
                if len(chain) >= 2:
                    keep = self._binds(False, chain[-2].disk, q, d)
                else:
                    keep = self._binds(True, self.apex, q, d)
                if not keep:
                    chain.pop()
                    continue
                t = _tangent(q.disk, d)
                chain.append(_ChainItem(d, t[3], t))
                return
            t, sigma = self._apex_tangent(d)
            if sigma > TWO_PI - 1e-6:
                sigma = 0.0
            if other:
                h = other[0]
                if self.apex.r > 0.0:
                    sigma_h = _sweep(self.apex_entry, h.tangent[2], self.apex.sense)
                    if sigma_h > TWO_PI - 1e-6:
                        sigma_h = 0.0
                    if sigma > _TINY_SWEEP or sigma_h > _TINY_SWEEP:
                        # the boundary on the apex's own wrap side hugs the
                        # disk and departs later; the funnel inverts when the
                        # opposite boundary would depart after it
                        if side == self.apex.sense:
                            crossed = sigma_h > sigma
                        else:
                            crossed = sigma > sigma_h
                    else:
                        # both boundaries leave from the frozen entry point
                        cr = h.tangent[4] * t[5] - h.tangent[5] * t[4]
                        crossed = side * cr < 0.0
                else:
                    cr = h.tangent[4] * t[5] - h.tangent[5] * t[4]
                    crossed = side * cr < 0.0
                if crossed:
                    self._advance(-side)
                    continue
            chain.append(_ChainItem(d, t[3], t))
            return

    def finish(self, end: Point) -> List[PathElement]:
        self.add(_Disk(end.x, end.y, 0.0, 0), 1)
        while self.left:
            self._advance(1)
        return self.elements


# ---------------------------------------------------------------------------
# distances


def _dist_point_to_element(px: float, py: float, e: PathElement) -> float:
    if isinstance(e, PathSegment):
        return dist_point_segment((px, py), e.a, e.b)
    dx, dy = px - e.center.x, py - e.center.y
    d = math.hypot(dx, dy)
    ang = math.atan2(dy, dx)
    if _sweep(e.a0, ang, 1 if e.ccw else -1) <= e.sweep():
        return abs(d - e.radius)
    return min(
        math.dist((px, py), e.point_at(0.0)), math.dist((px, py), e.point_at(1.0))
    )


def _element_points(e: PathElement, pitch: float):
    if isinstance(e, PathSegment):
        n = max(2, int(math.ceil(e.length() / pitch)) + 1)
        ts = np.linspace(0.0, 1.0, n)
        return (
            e.a.x + (e.b.x - e.a.x) * ts,
            e.a.y + (e.b.y - e.a.y) * ts,
        )
    n = max(2, int(math.ceil(e.length() / pitch)) + 1)
    sw = e.sweep() * (1.0 if e.ccw else -1.0)
    angs = e.a0 + sw * np.linspace(0.0, 1.0, n)
    return (
        e.center.x + e.radius * np.cos(angs),
        e.center.y + e.radius * np.sin(angs),
    )


def path_clearance(path: ClearancePath, obstacles: ObstacleSet) -> float:
    """Minimum distance from the path to any obstacle point or segment,
    measured on a dense sampling of the path (pitch c/100, floored at
    1e-3 of the obstacle bounding-box diagonal)."""
    pts = np.asarray([(p[0], p[1]) for p in obstacles.points], dtype=float)
    segs = obstacles.all_segments()
    if pts.size == 0:
        return math.inf
    diag = math.hypot(
        float(pts[:, 0].max() - pts[:, 0].min()),
        float(pts[:, 1].max() - pts[:, 1].min()),
    )
    pitch = max(path.clearance / 100.0, 1e-3 * max(diag, 1e-300))
    xs, ys = [], []
    if not path.elements:
        xs.append(np.asarray([path.start.x]))
        ys.append(np.asarray([path.start.y]))
    for e in path.elements:
        ex, ey = _element_points(e, pitch)
        xs.append(ex)
        ys.append(ey)
    sx = np.concatenate(xs)
    sy = np.concatenate(ys)
    best = np.full(sx.shape, np.inf)
    # distance to obstacle points
    for i in range(0, len(pts), 512):
        chunk = pts[i : i + 512]
        d = np.sqrt(
            (sx[:, None] - chunk[None, :, 0]) ** 2
            + (sy[:, None] - chunk[None, :, 1]) ** 2
        )
        best = np.minimum(best, d.min(axis=1))
    # distance to obstacle segments
    for a, b in segs:
        ax, ay = obstacles.points[a][0], obstacles.points[a][1]
        bx, by = obstacles.points[b][0], obstacles.points[b][1]
        dx, dy = bx - ax, by - ay
        n2 = dx * dx + dy * dy
        t = np.clip(((sx - ax) * dx + (sy - ay) * dy) / n2, 0.0, 1.0)
        d = np.sqrt((sx - (ax + t * dx)) ** 2 + (sy - (ay + t * dy)) ** 2)
        best = np.minimum(best, d)
    return float(best.min())


def _min_obstacle_dist(mesh: TriMesh, p) -> Tuple[float, str]:
    """Distance from p to the nearest mesh obstacle (vertex or original
    constrained segment), with a human-readable name for diagnostics."""
    best = math.inf
    what = "nothing"
    for v in range(mesh.n_vertices):
        d = math.hypot(p[0] - mesh.vx[v], p[1] - mesh.vy[v])
        if d < best:
            best, what = d, f"vertex {v}"
    for sid, (a, b) in enumerate(mesh.segments):
        d = dist_point_segment(p, mesh.point(a), mesh.point(b))
        if d < best:
            best, what = d, f"segment {sid}"
    return best, what


# ---------------------------------------------------------------------------
# extraction


def _portals(mesh: TriMesh, channel: Channel):
    """Per-gate (left vid, right vid) as seen when crossing each gate in
    channel order."""
    out = []
    for i, gate in enumerate(channel.gates):
        g = gate
        if g.tri != channel.triangles[i]:
            opp = mesh.opposite(g)
            if opp is None or opp.tri != channel.triangles[i]:
                raise InputError(f"gate {i} does not belong to channel triangle")
            g = opp
        base = 3 * g.tri
        right = mesh.tv[base + _NEXT[g.slot]]
        left = mesh.tv[base + _PREV[g.slot]]
        out.append((left, right))
    return out


def _point_in_triangle(mesh: TriMesh, t: int, p) -> bool:
    base = 3 * t
    a, b, c = mesh.tv[base], mesh.tv[base + 1], mesh.tv[base + 2]
    vx, vy = mesh.vx, mesh.vy
    return (
        orient_xy(vx[a], vy[a], vx[b], vy[b], p[0], p[1]) >= 0
        and orient_xy(vx[b], vy[b], vx[c], vy[c], p[0], p[1]) >= 0
        and orient_xy(vx[c], vy[c], vx[a], vy[a], p[0], p[1]) >= 0
    )


def _run_funnel(mesh, portals, start, end, c, extra_pre, extra_post):
    f = _Funnel(start)
    for vid, side in extra_pre:
        f.add(_Disk(mesh.vx[vid], mesh.vy[vid], c, side, vid), side)
    for (lv, rv) in portals:
        f.add(_Disk(mesh.vx[rv], mesh.vy[rv], c, -1, rv), -1)
        f.add(_Disk(mesh.vx[lv], mesh.vy[lv], c, 1, lv), 1)
    for vid, side in extra_post:
        f.add(_Disk(mesh.vx[vid], mesh.vy[vid], c, side, vid), side)
    return f.finish(end)


def extract_path(
    mesh: TriMesh, channel: Channel, start, end, c: float
) -> ClearancePath:
    """Locally shortest radius-c path through the channel from start to end:
    straight segments tangent to radius-c arcs around channel vertices.

    Preconditions (each validated): start in the first triangle, end in the
    last, every gate at least 2c wide, both endpoints at distance >= c from
    all obstacles.
    """
    if c < 0:
        raise InputError("clearance must be nonnegative")
    if not channel.triangles:
        raise InputError("empty channel")
    start = Point(float(start[0]), float(start[1]))
    end = Point(float(end[0]), float(end[1]))
    if not _point_in_triangle(mesh, channel.triangles[0], start):
        raise InfeasibleQueryError("start point is not in the channel's first triangle")
    if not _point_in_triangle(mesh, channel.triangles[-1], end):
        raise InfeasibleQueryError("end point is not in the channel's last triangle")
    for i, gate in enumerate(channel.gates):
        w = mesh.edge_length(gate)
        if w < 2.0 * c:
            raise InfeasibleQueryError(
                f"gate {i} (width {w:.6g}) is narrower than twice the clearance"
            )
    if c > 0:
        for label, p in (("start", start), ("end", end)):
            d, what = _min_obstacle_dist(mesh, p)
            if d < c:
                raise InfeasibleQueryError(
                    f"{label} point is {d:.6g} from {what}, closer than the clearance"
                )
    portals = _portals(mesh, channel)
    channel_vids = sorted(
        {mesh.tv[3 * t + s] for t in channel.triangles for s in range(3)}
    )
    portal_vids = {v for lr in portals for v in lr}
    extra_pre: List[Tuple[int, int]] = []
    extra_post: List[Tuple[int, int]] = []
    elements = _run_funnel(mesh, portals, start, end, c, extra_pre, extra_post)
    if c > 0:
        # The funnel wraps portal disks exactly; the non-gate corners of the
        # first and last triangle can still be clipped.  Promote any such
        # corner to an explicit wrap disk and rerun.
        first_tris = set(channel.triangles[:1])
        for _ in range(4):
            viol = _first_corner_violation(
                mesh, elements, channel_vids, portal_vids, c
            )
            if viol is None:
                break
            vid, side = viol
            portal_vids.add(vid)
            in_first = any(
                mesh.tv[3 * t + s] == vid for t in first_tris for s in range(3)
            )
            if in_first and len(channel.triangles) > 1:
                extra_pre.append((vid, side))
            else:
                extra_post.append((vid, side))
            if len(channel.triangles) == 1:
                extra_pre.sort(
                    key=lambda vs: (mesh.vx[vs[0]] - start.x) * (end.x - start.x)
                    + (mesh.vy[vs[0]] - start.y) * (end.y - start.y)
                )
            elements = _run_funnel(mesh, portals, start, end, c, extra_pre, extra_post)
    return ClearancePath(start, end, c, elements)


def _first_corner_violation(mesh, elements, channel_vids, portal_vids, c):
    """First (in path order) channel vertex whose disk the path enters,
    with the wrap side that shortens the detour; None if the path is clean."""
    for e in elements:
        for vid in channel_vids:
            if vid in portal_vids:
                continue
            vxp, vyp = mesh.vx[vid], mesh.vy[vid]
            if isinstance(e, PathArc) and (
                e.center.x == vxp and e.center.y == vyp
            ):
                continue
            d = _dist_point_to_element(vxp, vyp, e)
            if d < c * (1.0 - 1e-9):
                if isinstance(e, PathSegment):
                    o = orient_xy(e.a.x, e.a.y, e.b.x, e.b.y, vxp, vyp)
                    side = 1 if o > 0 else -1
                else:
                    side = 1 if e.ccw else -1
                return vid, side
    return None

