"""Constrained-Delaunay triangle mesh: construction, navigation, mutation.

A `TriMesh` is the single mutable structure of the package.  Triangles are
stored in flat parallel lists (three entries each): vertex ids in
counterclockwise order, neighbor triangle ids (slot i is the edge opposite
vertex i, -1 at the region boundary), per-edge constrained flags, and the
id of the input segment each constrained edge derives from.

Mutation is single-writer: build once, refine once, then treat the mesh as
immutable; concurrent readers are then safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import core, geom
from .errors import InputError, InternalInvariantError
from .geom import Point, acute_xy, incircle_xy, orient_xy

OBSTACLE = 0
STEINER = 1

_NEXT = (1, 2, 0)
_PREV = (2, 0, 1)


class EdgeRef(NamedTuple):
    """A triangle-side handle: the edge of triangle `tri` opposite vertex
    slot `slot` (its endpoints are the other two vertices)."""

    tri: int
    slot: int


class Vertex(NamedTuple):
    id: int
    position: Point
    kind: int


class Triangle(NamedTuple):
    id: int
    vertices: tuple
    neighbors: tuple
    constrained: tuple


# ---------------------------------------------------------------------------
# obstacle input


@dataclass
class ObstacleSet:
    """Planar obstacle input: points, constrained segments, obstacle polygons
    (index cycles, expanded to segments), and the required outer boundary
    cycle that closes the planning region.
    """

    points: list
    segments: list = field(default_factory=list)
    polygons: list = field(default_factory=list)
    boundary: list = field(default_factory=list)

    def validate(self):
        n = len(self.points)
        for i, p in enumerate(self.points):
            if not (math.isfinite(p[0]) and math.isfinite(p[1])):
                raise InputError(f"point {i} has non-finite coordinates")
        # exact duplicate detection
        seen = {}
        for i, p in enumerate(self.points):
            key = (float(p[0]), float(p[1]))
            if key in seen:
                raise InputError(f"duplicate points: {seen[key]} and {i}")
            seen[key] = i
        for a, b in self.segments:
            self._check_index(a)
            self._check_index(b)
            if a == b:
                raise InputError(f"degenerate segment ({a}, {b})")
        for cycle in self.polygons:
            if len(cycle) < 3:
                raise InputError("polygon needs at least 3 vertices")
            for v in cycle:
                self._check_index(v)
            if len(set(cycle)) != len(cycle):
                raise InputError("polygon repeats a vertex")
        if len(self.boundary) < 3:
            raise InputError("region not closed: no outer boundary cycle")
        for v in self.boundary:
            self._check_index(v)
        if len(set(self.boundary)) != len(self.boundary):
            raise InputError("boundary repeats a vertex")
        bx = [float(self.points[v][0]) for v in self.boundary]
        by = [float(self.points[v][1]) for v in self.boundary]
        bset = set(self.boundary)
        for i, p in enumerate(self.points):
            if i in bset:
                continue
            if point_in_polygon(float(p[0]), float(p[1]), bx, by) < 0:
                raise InputError(f"region not closed: point {i} lies outside the boundary")

    def _check_index(self, v):
        if not 0 <= v < len(self.points):
            raise InputError(f"point index {v} out of range")

    def all_segments(self):
        """Constrained segments with polygon and boundary cycles expanded,
        deduplicated, in declaration order.  Index in this list is the
        segment id carried by mesh edges."""
        out = []
        seen = set()

        def add(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in seen:
                seen.add(key)
                out.append((a, b))

        for a, b in self.segments:
            add(a, b)
        for cycle in self.polygons:
            for i in range(len(cycle)):
                add(cycle[i], cycle[(i + 1) % len(cycle)])
        for i in range(len(self.boundary)):
            add(self.boundary[i], self.boundary[(i + 1) % len(self.boundary)])
        return out


def point_in_polygon(x, y, xs, ys):
    """Winding-number point-in-polygon test with exact orientation.

    Returns +1 strictly inside, 0 on the boundary, -1 strictly outside.
    """
    wn = 0
    n = len(xs)
    for i in range(n):
        x1, y1 = xs[i], ys[i]
        x2, y2 = xs[(i + 1) % n], ys[(i + 1) % n]
        o = orient_xy(x1, y1, x2, y2, x, y)
        if (
            o == 0
            and min(x1, x2) <= x <= max(x1, x2)
            and min(y1, y2) <= y <= max(y1, y2)
        ):
            return 0
        if y1 <= y:
            if y2 > y and o > 0:
                wn += 1
        elif y2 <= y and o < 0:
            wn -= 1
    return 1 if wn != 0 else -1


def polygon_signed_area(xs, ys):
    s = 0.0
    n = len(xs)
    for i in range(n):
        j = (i + 1) % n
        s += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * s


def _morton_order(x, y):
    """Insertion order along a Z-order curve; keeps consecutive insertions
    spatially close so point-location walks stay short."""
    n = len(x)
    xmin, ymin = x.min(), y.min()
    w = max(float(x.max() - xmin), 1e-300)
    h = max(float(y.max() - ymin), 1e-300)
    xi = np.minimum((x - xmin) * (65535.0 / w), 65535.0).astype(np.uint64)
    yi = np.minimum((y - ymin) * (65535.0 / h), 65535.0).astype(np.uint64)

    def spread(a):
        a = (a | (a << 8)) & np.uint64(0x00FF00FF)
        a = (a | (a << 4)) & np.uint64(0x0F0F0F0F)
        a = (a | (a << 2)) & np.uint64(0x33333333)
        a = (a | (a << 1)) & np.uint64(0x55555555)
        return a

    code = (spread(yi) << np.uint64(1)) | spread(xi)
    return np.lexsort((np.arange(n), code))


# ---------------------------------------------------------------------------
# the mesh


class TriMesh:
    """Triangle soup with full adjacency and constrained-edge bookkeeping."""

    def __init__(self, vx, vy, vkind, tv, tn, tc, ts, segments, obstacles=None):
        self.vx = vx
        self.vy = vy
        self.vkind = vkind
        self.tv = tv
        self.tn = tn
        self.tc = tc
        self.ts = ts
        self.segments = segments  # original constrained segments: (vid, vid)
        self.obstacles = obstacles

    # -- construction ---------------------------------------------------

    @classmethod
    def from_kernel_arrays(cls, px, py, tri_v, tri_n, tri_c, tri_s, segments, obstacles=None):
        return cls(
            [float(v) for v in px],
            [float(v) for v in py],
            [OBSTACLE] * len(px),
            [int(v) for v in np.asarray(tri_v).ravel()],
            [int(v) for v in np.asarray(tri_n).ravel()],
            [int(v) for v in np.asarray(tri_c).ravel()],
            [int(v) for v in np.asarray(tri_s).ravel()],
            list(segments),
            obstacles,
        )

    @classmethod
    def from_triangles(cls, points, triangles, constrained=(), kinds=None):
        """Assemble a mesh from explicit triangles; test and fixture helper.

        `constrained` lists vertex-id pairs; each becomes its own original
        segment.  Adjacency is derived from shared edges; triangles are
        reoriented counterclockwise if needed.
        """
        vx = [float(p[0]) for p in points]
        vy = [float(p[1]) for p in points]
        vkind = list(kinds) if kinds is not None else [OBSTACLE] * len(points)
        tv, tn, tc, ts = [], [], [], []
        for (a, b, c) in triangles:
            if orient_xy(vx[a], vy[a], vx[b], vy[b], vx[c], vy[c]) <= 0:
                b, c = c, b
            if orient_xy(vx[a], vy[a], vx[b], vy[b], vx[c], vy[c]) <= 0:
                raise InputError(f"degenerate triangle ({a}, {b}, {c})")
            tv.extend((a, b, c))
            tn.extend((-1, -1, -1))
            tc.extend((0, 0, 0))
            ts.extend((-1, -1, -1))
        edge_map = {}
        ntri = len(triangles)
        for t in range(ntri):
            for s in range(3):
                key = (tv[3 * t + _NEXT[s]], tv[3 * t + _PREV[s]])
                if key in edge_map:
                    raise InputError(f"edge {key} appears twice with same orientation")
                edge_map[key] = (t, s)
        for (a, b), (t, s) in edge_map.items():
            rev = edge_map.get((b, a))
            if rev is not None:
                tn[3 * t + s] = rev[0]
        segments = []
        seg_ids = {}
        for (a, b) in constrained:
            key = (a, b) if a < b else (b, a)
            if key not in seg_ids:
                seg_ids[key] = len(segments)
                segments.append((a, b))
        for t in range(ntri):
            for s in range(3):
                key_ = (tv[3 * t + _NEXT[s]], tv[3 * t + _PREV[s]])
                key = key_ if key_[0] < key_[1] else (key_[1], key_[0])
                if key in seg_ids:
                    tc[3 * t + s] = 1
                    ts[3 * t + s] = seg_ids[key]
        return cls(vx, vy, vkind, tv, tn, tc, ts, segments)

    # -- basic accessors --------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.vx)

    @property
    def n_triangles(self):
        return len(self.tv) // 3

    def point(self, v) -> Point:
        return Point(self.vx[v], self.vy[v])

    def vertex(self, v) -> Vertex:
        return Vertex(v, self.point(v), self.vkind[v])

    def triangle(self, t) -> Triangle:
        base = 3 * t
        return Triangle(
            t,
            tuple(self.tv[base : base + 3]),
            tuple(self.tn[base : base + 3]),
            tuple(bool(c) for c in self.tc[base : base + 3]),
        )

    def edge_vertices(self, edge: EdgeRef):
        base = 3 * edge.tri
        return self.tv[base + _NEXT[edge.slot]], self.tv[base + _PREV[edge.slot]]

    def edge_length(self, edge: EdgeRef) -> float:
        a, b = self.edge_vertices(edge)
        return math.hypot(self.vx[a] - self.vx[b], self.vy[a] - self.vy[b])

    def opposite(self, edge: EdgeRef) -> Optional[EdgeRef]:
        """The same edge seen from the adjacent triangle, or None at the
        region boundary."""
        nb = self.tn[3 * edge.tri + edge.slot]
        if nb < 0:
            return None
        return EdgeRef(nb, self._nslot(nb, edge.tri))

    def is_constrained(self, edge: EdgeRef) -> bool:
        return bool(self.tc[3 * edge.tri + edge.slot])

    def segment_of(self, edge: EdgeRef) -> int:
        return self.ts[3 * edge.tri + edge.slot]

    def triangle_area(self, t) -> float:
        base = 3 * t
        a, b, c = self.tv[base], self.tv[base + 1], self.tv[base + 2]
        return 0.5 * (
            (self.vx[b] - self.vx[a]) * (self.vy[c] - self.vy[a])
            - (self.vy[b] - self.vy[a]) * (self.vx[c] - self.vx[a])
        )

    def total_area(self) -> float:
        return sum(self.triangle_area(t) for t in range(self.n_triangles))

    def _nslot(self, t, nb):
        base = 3 * t
        if self.tn[base] == nb:
            return 0
        if self.tn[base + 1] == nb:
            return 1
        if self.tn[base + 2] == nb:
            return 2
        raise InternalInvariantError(f"triangles {t} and {nb} not adjacent")

    def _slot_of_vertex(self, t, v):
        base = 3 * t
        if self.tv[base] == v:
            return 0
        if self.tv[base + 1] == v:
            return 1
        if self.tv[base + 2] == v:
            return 2
        raise InternalInvariantError(f"vertex {v} not in triangle {t}")

    def iter_edges(self) -> Iterable[EdgeRef]:
        """Each undirected edge exactly once (the lower triangle id owns it)."""
        for t in range(self.n_triangles):
            base = 3 * t
            for s in range(3):
                nb = self.tn[base + s]
                if nb < 0 or nb > t:
                    yield EdgeRef(t, s)

    # -- Delaunay tests ----------------------------------------------------

    def is_locally_delaunay(self, edge: EdgeRef) -> bool:
        """Constrained edges are exempt; for the rest the opposite vertex
        must not be strictly inside the circumcircle."""
        opp = self.opposite(edge)
        if opp is None:
            raise InputError("local Delaunay test needs an interior edge")
        if self.is_constrained(edge):
            return True
        base = 3 * edge.tri
        a, b, c = self.tv[base], self.tv[base + 1], self.tv[base + 2]
        d = self.tv[3 * opp.tri + opp.slot]
        vx, vy = self.vx, self.vy
        return (
            incircle_xy(vx[a], vy[a], vx[b], vy[b], vx[c], vy[c], vx[d], vy[d]) <= 0
        )

    def is_cdt(self) -> bool:
        """Full scan: every interior unconstrained edge is locally Delaunay."""
        for edge in self.iter_edges():
            if self.tn[3 * edge.tri + edge.slot] < 0:
                continue
            if not self.is_locally_delaunay(edge):
                return False
        return True

    # -- mutation ------------------------------------------------------------

    def flip(self, edge: EdgeRef) -> EdgeRef:
        """Replace the diagonal of the strictly convex quadrilateral formed
        by the two triangles adjacent to `edge`.  Returns the new diagonal.
        """
        if self.is_constrained(edge):
            raise InputError("cannot flip a constrained edge")
        opp = self.opposite(edge)
        if opp is None:
            raise InputError("cannot flip a boundary edge")
        t, st = edge
        u, su = opp
        tv, tn, tc, ts = self.tv, self.tn, self.tc, self.ts
        at = tv[3 * t + st]
        p = tv[3 * t + _NEXT[st]]
        q = tv[3 * t + _PREV[st]]
        au = tv[3 * u + su]
        vx, vy = self.vx, self.vy
        # strict convexity of (at, p, au, q)
        if (
            orient_xy(vx[at], vy[at], vx[p], vy[p], vx[au], vy[au]) <= 0
            or orient_xy(vx[p], vy[p], vx[au], vy[au], vx[q], vy[q]) <= 0
            or orient_xy(vx[au], vy[au], vx[q], vy[q], vx[at], vy[at]) <= 0
            or orient_xy(vx[q], vy[q], vx[at], vy[at], vx[p], vy[p]) <= 0
        ):
            raise InputError("flip needs a strictly convex quadrilateral")
        # neighbors and flags around the quad
        nA = tn[3 * t + _NEXT[st]]  # across (q, at)
        fA, sA = tc[3 * t + _NEXT[st]], ts[3 * t + _NEXT[st]]
        nB = tn[3 * t + _PREV[st]]  # across (at, p)
        fB, sB = tc[3 * t + _PREV[st]], ts[3 * t + _PREV[st]]
        nC = tn[3 * u + _NEXT[su]]  # across (p, au) as read in u: edge after au
        fC, sC = tc[3 * u + _NEXT[su]], ts[3 * u + _NEXT[su]]
        nD = tn[3 * u + _PREV[su]]  # across (au, q)
        fD, sD = tc[3 * u + _PREV[su]], ts[3 * u + _PREV[su]]
        # t := (at, p, au); u := (at, au, q)
        tv[3 * t : 3 * t + 3] = [at, p, au]
        tn[3 * t : 3 * t + 3] = [nC, u, nB]
        tc[3 * t : 3 * t + 3] = [fC, 0, fB]
        ts[3 * t : 3 * t + 3] = [sC, -1, sB]
        tv[3 * u : 3 * u + 3] = [at, au, q]
        tn[3 * u : 3 * u + 3] = [nD, nA, t]
        tc[3 * u : 3 * u + 3] = [fD, fA, 0]
        ts[3 * u : 3 * u + 3] = [sD, sA, -1]
        if nC >= 0:
            tn[3 * nC + self._nslot(nC, u)] = t
        if nA >= 0:
            tn[3 * nA + self._nslot(nA, t)] = u
        return EdgeRef(t, 1)

    def snap_to_segment(self, p, sid):
        """Project p onto the line of original segment `sid`; returns the
        snapped point and its normalized parameter along the segment."""
        a, b = self.segments[sid]
        ax, ay = self.vx[a], self.vy[a]
        bx, by = self.vx[b], self.vy[b]
        dx, dy = bx - ax, by - ay
        t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / (dx * dx + dy * dy)
        return Point(ax + t * dx, ay + t * dy), t

    def segment_param(self, v, sid):
        """Normalized parameter of vertex v along original segment `sid`."""
        a, b = self.segments[sid]
        ax, ay = self.vx[a], self.vy[a]
        bx, by = self.vx[b], self.vy[b]
        dx, dy = bx - ax, by - ay
        return ((self.vx[v] - ax) * dx + (self.vy[v] - ay) * dy) / (dx * dx + dy * dy)

    def split_constrained_edge(self, edge: EdgeRef, p, side_hint=None, tol=1e-12):
        """Insert a Steiner vertex at p (snapped onto the original segment)
        splitting constrained `edge` into two constrained sub-edges; the
        adjacent triangles on both sides are each split in two.

        `side_hint` names a vertex whose side is fragmented first (it only
        affects the ids of the new triangles).  Returns the new vertex id.
        """
        if not self.is_constrained(edge):
            raise InputError("cannot split an unconstrained edge")
        if side_hint is not None:
            opp = self.opposite(edge)
            if opp is not None and self.tv[3 * opp.tri + opp.slot] == side_hint:
                edge = opp
        sid = self.segment_of(edge)
        snapped, t = self.snap_to_segment(p, sid)
        # collinearity tolerance on the raw point, relative to segment length
        a, b = self.segments[sid]
        seg_len = math.hypot(self.vx[b] - self.vx[a], self.vy[b] - self.vy[a])
        if math.hypot(p[0] - snapped.x, p[1] - snapped.y) > 1e-6 * seg_len:
            raise InputError("split point is not on the constrained segment")
        u, v = self.edge_vertices(edge)
        tu, tv_ = self.segment_param(u, sid), self.segment_param(v, sid)
        lo, hi = (tu, tv_) if tu < tv_ else (tv_, tu)
        if not (lo + tol < t < hi - tol):
            raise InputError("split point is not interior to the edge")
        return self._split(edge, snapped, sid)[0]

    def _split(self, edge: EdgeRef, pt: Point, sid):
        """Unchecked edge split; `pt` is the final Steiner position.
        Returns (new vertex id, ids of the fragment triangles)."""
        tv, tn, tc, ts = self.tv, self.tn, self.tc, self.ts
        t, st = edge
        w = tv[3 * t + st]
        u = tv[3 * t + _NEXT[st]]
        v = tv[3 * t + _PREV[st]]
        opp = self.opposite(edge)
        svid = len(self.vx)
        self.vx.append(pt.x)
        self.vy.append(pt.y)
        self.vkind.append(STEINER)
        nA = tn[3 * t + _NEXT[st]]  # across (v, w)
        fA, sA = tc[3 * t + _NEXT[st]], ts[3 * t + _NEXT[st]]
        nB = tn[3 * t + _PREV[st]]  # across (w, u)
        fB, sB = tc[3 * t + _PREV[st]], ts[3 * t + _PREV[st]]
        t2 = self.n_triangles
        # t := (u, S, w), appended t2 := (S, v, w)
        tv[3 * t : 3 * t + 3] = [u, svid, w]
        tn[3 * t : 3 * t + 3] = [t2, nB, -1]
        tc[3 * t : 3 * t + 3] = [0, fB, 1]
        ts[3 * t : 3 * t + 3] = [-1, sB, sid]
        tv.extend((svid, v, w))
        tn.extend((nA, t, -1))
        tc.extend((fA, 0, 1))
        ts.extend((sA, -1, sid))
        if nA >= 0:
            tn[3 * nA + self._nslot(nA, t)] = t2
        if opp is not None:
            o, so = opp
            x = tv[3 * o + so]
            nC = tn[3 * o + _NEXT[so]]  # across (u, x)
            fC, sC = tc[3 * o + _NEXT[so]], ts[3 * o + _NEXT[so]]
            nD = tn[3 * o + _PREV[so]]  # across (x, v)
            fD, sD = tc[3 * o + _PREV[so]], ts[3 * o + _PREV[so]]
            o2 = self.n_triangles
            # o := (v, S, x), appended o2 := (S, u, x)
            tv[3 * o : 3 * o + 3] = [v, svid, x]
            tn[3 * o : 3 * o + 3] = [o2, nD, t2]
            tc[3 * o : 3 * o + 3] = [0, fD, 1]
            ts[3 * o : 3 * o + 3] = [-1, sD, sid]
            tv.extend((svid, u, x))
            tn.extend((nC, o, t))
            tc.extend((fC, 0, 1))
            ts.extend((sC, -1, sid))
            if nC >= 0:
                tn[3 * nC + self._nslot(nC, o)] = o2
            tn[3 * t + 2] = o2
            tn[3 * t2 + 2] = o
            return svid, [t, t2, o, o2]
        return svid, [t, t2]

    # -- point location -------------------------------------------------------

    def locate(self, p) -> Optional[int]:
        """Triangle containing p, or None outside the triangulated region.
        Points exactly on an edge or vertex resolve to the lowest containing
        triangle id."""
        if self.n_triangles == 0:
            return None
        x, y = float(p[0]), float(p[1])
        t = 0
        limit = 2 * self.n_triangles + 16
        vx, vy, tv, tn = self.vx, self.vy, self.tv, self.tn
        for _ in range(limit):
            base = 3 * t
            a, b, c = tv[base], tv[base + 1], tv[base + 2]
            o0 = orient_xy(vx[a], vy[a], vx[b], vy[b], x, y)
            o1 = orient_xy(vx[b], vy[b], vx[c], vy[c], x, y)
            o2 = orient_xy(vx[c], vy[c], vx[a], vy[a], x, y)
            if o0 >= 0 and o1 >= 0 and o2 >= 0:
                if o0 == 0 or o1 == 0 or o2 == 0:
                    return self._locate_brute(x, y)
                return t
            if o0 < 0:
                nxt = tn[base + 2]
            elif o1 < 0:
                nxt = tn[base]
            else:
                nxt = tn[base + 1]
            if nxt < 0:
                return self._locate_brute(x, y)
            t = nxt
        return self._locate_brute(x, y)

    def _locate_brute(self, x, y) -> Optional[int]:
        vx, vy, tv = self.vx, self.vy, self.tv
        for t in range(self.n_triangles):
            base = 3 * t
            a, b, c = tv[base], tv[base + 1], tv[base + 2]
            if (
                orient_xy(vx[a], vy[a], vx[b], vy[b], x, y) >= 0
                and orient_xy(vx[b], vy[b], vx[c], vy[c], x, y) >= 0
                and orient_xy(vx[c], vy[c], vx[a], vy[a], x, y) >= 0
            ):
                return t
        return None

    # -- constraint chains ------------------------------------------------------

    def constraint_chain(self, sid) -> list:
        """Ordered vertex chain covering original segment `sid`, endpoints
        included.  Reconstructed geometrically so overlapping declarations
        cannot hide chain members."""
        a, b = self.segments[sid]
        ax, ay = self.vx[a], self.vy[a]
        bx, by = self.vx[b], self.vy[b]
        members = {a, b}
        for edge in self.iter_edges():
            if not self.is_constrained(edge):
                continue
            u, v = self.edge_vertices(edge)
            ok = True
            for w in (u, v):
                if w in members:
                    continue
                if orient_xy(ax, ay, bx, by, self.vx[w], self.vy[w]) != 0:
                    ok = False
                    break
                tw = self.segment_param(w, sid)
                if not 0.0 <= tw <= 1.0:
                    ok = False
                    break
            if ok:
                members.add(u)
                members.add(v)
        chain = sorted(members, key=lambda v: self.segment_param(v, sid))
        return chain

    # -- housekeeping ---------------------------------------------------------

    def as_obstacles(self) -> ObstacleSet:
        """Obstacle geometry equivalent to this mesh: every vertex is an
        obstacle point; the original segments are the walls."""
        if self.obstacles is not None:
            return self.obstacles
        pts = [Point(self.vx[i], self.vy[i]) for i in range(self.n_vertices)]
        return ObstacleSet(points=pts, segments=list(self.segments))

    def copy(self) -> "TriMesh":
        return TriMesh(
            list(self.vx),
            list(self.vy),
            list(self.vkind),
            list(self.tv),
            list(self.tn),
            list(self.tc),
            list(self.ts),
            list(self.segments),
            self.obstacles,
        )

    def validate(self):
        """Structural audit: CCW orientation, symmetric adjacency, symmetric
        constraint flags.  Raises InternalInvariantError on the first defect."""
        vx, vy, tv, tn, tc = self.vx, self.vy, self.tv, self.tn, self.tc
        for t in range(self.n_triangles):
            base = 3 * t
            a, b, c = tv[base], tv[base + 1], tv[base + 2]
            if orient_xy(vx[a], vy[a], vx[b], vy[b], vx[c], vy[c]) <= 0:
                raise InternalInvariantError(f"triangle {t} is not counterclockwise")
            for s in range(3):
                nb = tn[base + s]
                if nb < 0:
                    continue
                k = self._nslot(nb, t)
                ea = {tv[base + _NEXT[s]], tv[base + _PREV[s]]}
                eb = {tv[3 * nb + _NEXT[k]], tv[3 * nb + _PREV[k]]}
                if ea != eb:
                    raise InternalInvariantError(
                        f"adjacency mismatch between triangles {t} and {nb}"
                    )
                if tc[base + s] != tc[3 * nb + k]:
                    raise InternalInvariantError(
                        f"constraint flag mismatch on edge between {t} and {nb}"
                    )

    def stats(self):
        n_steiner = sum(1 for k in self.vkind if k == STEINER)
        return {
            "vertices": self.n_vertices,
            "steiner": n_steiner,
            "triangles": self.n_triangles,
            "constrained_edges": sum(
                1 for e in self.iter_edges() if self.is_constrained(e)
            ),
        }


# ---------------------------------------------------------------------------
# construction entry point


def build_cdt(obstacles: ObstacleSet) -> TriMesh:
    """Constrained Delaunay triangulation of an obstacle set.

    Obstacle segments may meet only at shared endpoints (a vertex lying
    exactly inside another segment is allowed and produces a collinear
    chain).  Triangles outside the outer boundary or inside obstacle
    polygons are removed.
    """
    obstacles.validate()
    px = np.asarray([p[0] for p in obstacles.points], dtype=np.float64)
    py = np.asarray([p[1] for p in obstacles.points], dtype=np.float64)
    if len(px) < 3:
        raise InputError("need at least 3 points")
    segments = obstacles.all_segments()
    seg_a = np.asarray([s[0] for s in segments], dtype=np.int32)
    seg_b = np.asarray([s[1] for s in segments], dtype=np.int32)
    polys = []
    for cycle in obstacles.polygons:
        xs = [float(px[v]) for v in cycle]
        ys = [float(py[v]) for v in cycle]
        area = polygon_signed_area(xs, ys)
        if area == 0.0:
            raise InputError("obstacle polygon has zero area")
        polys.append(list(cycle) if area > 0 else list(reversed(cycle)))
    order = _morton_order(px, py)
    kernel = core.kernel()
    tri_v, tri_n, tri_c, tri_s = kernel.build_cdt_arrays(px, py, order, seg_a, seg_b, polys)
    if len(tri_v) == 0:
        raise InputError("region not closed: no triangles remain inside the boundary")
    return TriMesh.from_kernel_arrays(px, py, tri_v, tri_n, tri_c, tri_s, segments, obstacles)
