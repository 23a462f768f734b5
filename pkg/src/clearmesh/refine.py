"""Steiner refinement of a constrained Delaunay triangulation.

A triangulation's dual graph answers clearance queries by gate widths alone
only if no *pinch vertex* exists: a vertex whose perpendicular gap to a
wall (a constrained edge it projects into) is narrower than every passage
a path squeezing past it would have to traverse.  The refinement sweep
finds every triangle side-pair that could admit such a vertex and inserts
the apex's wall projection as a Steiner vertex, splitting the wall, until
none remain.  Termination follows because each inserted foot creates right
triangles whose apexes no longer project inside their opposite sides.

`refine` drives the compiled kernel when it is available; the functions in
this module are the pure-Python twin and the unit-level reference.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import core
from .errors import InputError, InternalInvariantError
from .geom import (
    Point,
    acute_xy,
    circumcenter,
    incircle_xy,
    orient_xy,
    parallel_circle_point,
    segments_properly_cross,
)
from .mesh import EdgeRef, TriMesh, _NEXT, _PREV


class ProbeResult(NamedTuple):
    """Outcome of a wall probe: whether a constrained edge was hit, and
    which one (anchored on the triangle facing the probed point)."""

    found: bool
    hit_edge: Optional[EdgeRef]


@dataclass
class RefineStats:
    steiner_inserted: int = 0
    triangles_before: int = 0
    triangles_after: int = 0
    check_calls: int = 0
    flips: int = 0
    skipped_insertions: int = 0
    wall_time: float = 0.0


def apex_projects_inside(mesh: TriMesh, tri: int, apex_slot: int) -> bool:
    """Whether the apex of this side-pair projects strictly inside the
    opposite side; only then can the pair admit a pinch vertex.

    This is the gating test of the sweep: both angles at the opposite
    side's endpoints must be strictly acute, decided exactly.
    """
    base = 3 * tri
    a1 = mesh.tv[base + apex_slot]
    a2 = mesh.tv[base + _NEXT[apex_slot]]
    a3 = mesh.tv[base + _PREV[apex_slot]]
    vx, vy = mesh.vx, mesh.vy
    return (
        acute_xy(vx[a1], vy[a1], vx[a2], vy[a2], vx[a3], vy[a3]) > 0
        and acute_xy(vx[a1], vy[a1], vx[a3], vy[a3], vx[a2], vy[a2]) > 0
    )


def probe_for_wall(
    mesh: TriMesh, x, start_edge: EdgeRef, max_dist: float, stats: RefineStats = None
) -> ProbeResult:
    """Walk the triangulation away from point x across `start_edge`, looking
    for a constrained edge whose line is perpendicular-reachable from x
    within `max_dist`.

    At each edge: if x does not project strictly inside it, or the
    perpendicular distance reaches `max_dist`, the probe fails; if the edge
    is constrained it is the hit; otherwise the walk continues into the far
    triangle through the longer of the two far sides.  Distance comparisons
    are squared doubles; interiority is exact.
    """
    if stats is not None:
        stats.check_calls += 1
    vx, vy, tv, tn, tc = mesh.vx, mesh.vy, mesh.tv, mesh.tn, mesh.tc
    xx, xy = float(x[0]), float(x[1])
    lam2 = max_dist * max_dist
    tri, slot = start_edge
    ai = tv[3 * tri + _NEXT[slot]]
    aj = tv[3 * tri + _PREV[slot]]
    prev_tri = tri
    cur_tri, cur_slot = tri, slot
    limit = 4 * mesh.n_triangles + 16
    for _ in range(limit):
        aix, aiy = vx[ai], vy[ai]
        ajx, ajy = vx[aj], vy[aj]
        if (
            acute_xy(xx, xy, aix, aiy, ajx, ajy) <= 0
            or acute_xy(xx, xy, ajx, ajy, aix, aiy) <= 0
        ):
            return ProbeResult(False, None)
        dx, dy = ajx - aix, ajy - aiy
        cr = dx * (xy - aiy) - dy * (xx - aix)
        d2 = cr * cr / (dx * dx + dy * dy)
        if d2 >= lam2:
            return ProbeResult(False, None)
        if tc[3 * cur_tri + cur_slot]:
            # anchor the hit on the side facing x
            o = orient_xy(aix, aiy, ajx, ajy, xx, xy)
            apex = tv[3 * cur_tri + cur_slot]
            oa = orient_xy(aix, aiy, ajx, ajy, vx[apex], vy[apex])
            if o == 0 or oa == 0 or (o > 0) == (oa > 0):
                return ProbeResult(True, EdgeRef(cur_tri, cur_slot))
            nb = tn[3 * cur_tri + cur_slot]
            if nb < 0:
                return ProbeResult(True, EdgeRef(cur_tri, cur_slot))
            return ProbeResult(True, EdgeRef(nb, mesh._nslot(nb, cur_tri)))
        # far triangle: the adjacent triangle on the other side of the edge
        o = orient_xy(aix, aiy, ajx, ajy, xx, xy)
        nb = tn[3 * cur_tri + cur_slot]
        if o != 0:
            apex = tv[3 * cur_tri + cur_slot]
            oa = orient_xy(aix, aiy, ajx, ajy, vx[apex], vy[apex])
            far = nb if (o > 0) == (oa > 0) else cur_tri
        else:
            far = nb if prev_tri == cur_tri else (cur_tri if prev_tri == nb else nb)
        if far < 0:
            raise InternalInvariantError(
                "wall probe reached an unconstrained boundary edge; region not closed"
            )
        fslot = None
        fbase = 3 * far
        for s in range(3):
            if tv[fbase + s] != ai and tv[fbase + s] != aj:
                fslot = s
                break
        ak = tv[fbase + fslot]
        akx, aky = vx[ak], vy[ak]
        di = (akx - aix) ** 2 + (aky - aiy) ** 2
        dj = (akx - ajx) ** 2 + (aky - ajy) ** 2
        if di >= dj:
            # continue through (ak, ai): the remaining far vertex is aj
            cur_tri, cur_slot = far, mesh._slot_of_vertex(far, aj)
            ai, aj = ak, ai
        else:
            cur_tri, cur_slot = far, mesh._slot_of_vertex(far, ai)
            ai, aj = ak, aj
        prev_tri = far
    raise InternalInvariantError("wall probe did not terminate")


def legalize_around(mesh: TriMesh, vid: int, edge: EdgeRef, stats=None, dirty=None):
    """Restore the local Delaunay property around a freshly inserted vertex.

    `edge` names the side opposite `vid` in a triangle containing it
    (edge.tri's vertex at edge.slot must be vid).  Flips cascade outward
    through the two outer sides of every flipped quadrilateral; constrained
    edges are never flipped.
    """
    vx, vy = mesh.vx, mesh.vy
    stack = [(edge.tri, edge.slot)]
    while stack:
        t, s = stack.pop()
        base = 3 * t
        if mesh.tv[base + s] != vid:
            raise InternalInvariantError("legalization handle went stale")
        if mesh.tc[base + s]:
            continue
        nb = mesh.tn[base + s]
        if nb < 0:
            continue
        k = mesh._nslot(nb, t)
        a, b, c = mesh.tv[base], mesh.tv[base + 1], mesh.tv[base + 2]
        d = mesh.tv[3 * nb + k]
        if (
            incircle_xy(vx[a], vy[a], vx[b], vy[b], vx[c], vy[c], vx[d], vy[d])
            <= 0
        ):
            continue
        mesh.flip(EdgeRef(t, s))
        # after the flip t = (vid, p, d) and nb = (vid, d, q); the edges
        # opposite vid are the quadrilateral's outer sides
        if stats is not None:
            stats.flips += 1
        if dirty is not None:
            dirty.append(t)
            dirty.append(nb)
        stack.append((nb, 0))
        stack.append((t, 0))


def _insert_foot(mesh, a1, hit: EdgeRef, tol, stats, dirty) -> bool:
    """Insert the projection of vertex a1 onto the original segment behind
    the hit constrained edge; split the edge and re-legalize locally.

    Skips (and counts) insertions whose foot lands within `tol` of a
    sub-edge endpoint: either the constraint is already split there or the
    projection is not interior at double precision.
    """
    sid = mesh.segment_of(hit)
    if sid < 0:
        raise InternalInvariantError("constrained edge without a source segment")
    foot, t = mesh.snap_to_segment(mesh.point(a1), sid)
    u, v = mesh.edge_vertices(hit)
    tu = mesh.segment_param(u, sid)
    tw = mesh.segment_param(v, sid)
    lo, hi = (tu, tw) if tu < tw else (tw, tu)
    if not (lo + tol < t < hi - tol):
        stats.skipped_insertions += 1
        return False
    # fragment the triangle on the same side as a1 first
    vx, vy = mesh.vx, mesh.vy
    o = orient_xy(vx[u], vy[u], vx[v], vy[v], vx[a1], vy[a1])
    apex = mesh.tv[3 * hit.tri + hit.slot]
    oa = orient_xy(vx[u], vy[u], vx[v], vy[v], vx[apex], vy[apex])
    if o != 0 and oa != 0 and (o > 0) != (oa > 0):
        opp = mesh.opposite(hit)
        if opp is not None:
            hit = opp
    svid, prods = mesh._split(hit, foot, sid)
    stats.steiner_inserted += 1
    dirty.extend(prods)
    for pt in prods:
        legalize_around(mesh, svid, EdgeRef(pt, mesh._slot_of_vertex(pt, svid)), stats, dirty)
    return True


def refine_pair(mesh: TriMesh, tri: int, apex_slot: int, tol, stats, dirty) -> bool:
    """Run the two-stage wall probe for one side-pair and insert the apex's
    wall foot on success.  Returns True iff the mesh changed."""
    base = 3 * tri
    if mesh.tc[base + _NEXT[apex_slot]] or mesh.tc[base + _PREV[apex_slot]]:
        return False
    if not apex_projects_inside(mesh, tri, apex_slot):
        return False
    a1 = mesh.tv[base + apex_slot]
    a2 = mesh.tv[base + _NEXT[apex_slot]]
    a3 = mesh.tv[base + _PREV[apex_slot]]
    vx, vy = mesh.vx, mesh.vy
    d2 = (vx[a2] - vx[a1]) ** 2 + (vy[a2] - vy[a1]) ** 2
    d3 = (vx[a3] - vx[a1]) ** 2 + (vy[a3] - vy[a1]) ** 2
    lam = math.sqrt(d2 if d2 <= d3 else d3)
    start = EdgeRef(tri, apex_slot)
    res = probe_for_wall(mesh, mesh.point(a1), start, lam, stats)
    if not res.found:
        p = parallel_circle_point(mesh.point(a1), mesh.point(a2), mesh.point(a3))
        if p.x == vx[a1] and p.y == vy[a1]:
            return False  # tangent: no second circle point, nothing to probe
        res = probe_for_wall(mesh, p, start, lam, stats)
    if not res.found:
        return False
    return _insert_foot(mesh, a1, res.hit_edge, tol, stats, dirty)


def _process_triangle(mesh, t, tol, stats, dirty) -> bool:
    for s in (0, 1, 2):
        if refine_pair(mesh, t, s, tol, stats, dirty):
            return True
    return False


def _refine_walls_first(mesh: TriMesh, tol, stats: RefineStats):
    """Sweep to a fixpoint, inspecting triangles with exactly one
    constrained side first; triangles created or reshaped re-enter the
    queue."""
    nt = mesh.n_triangles
    tc = mesh.tc

    def ccount(t):
        return tc[3 * t] + tc[3 * t + 1] + tc[3 * t + 2]

    queue = deque(
        [t for t in range(nt) if ccount(t) == 1]
        + [t for t in range(nt) if ccount(t) != 1]
    )
    in_queue = [True] * nt

    def push(t):
        while t >= len(in_queue):
            in_queue.append(False)
        if not in_queue[t]:
            in_queue[t] = True
            queue.append(t)

    dirty = []
    while queue:
        t = queue.popleft()
        in_queue[t] = False
        dirty.clear()
        if _process_triangle(mesh, t, tol, stats, dirty):
            for d in dirty:
                push(d)
            push(t)


def _dry_probe_count(mesh, t) -> int:
    """Number of wall probes that processing triangle t would issue right
    now (no mutation).  Used by the adversarial scheduling test mode."""
    calls = 0
    base = 3 * t
    vx, vy = mesh.vx, mesh.vy
    for s in (0, 1, 2):
        if mesh.tc[base + _NEXT[s]] or mesh.tc[base + _PREV[s]]:
            continue
        if not apex_projects_inside(mesh, t, s):
            continue
        a1 = mesh.tv[base + s]
        a2 = mesh.tv[base + _NEXT[s]]
        a3 = mesh.tv[base + _PREV[s]]
        d2 = (vx[a2] - vx[a1]) ** 2 + (vy[a2] - vy[a1]) ** 2
        d3 = (vx[a3] - vx[a1]) ** 2 + (vy[a3] - vy[a1]) ** 2
        lam = math.sqrt(d2 if d2 <= d3 else d3)
        calls += 1
        res = probe_for_wall(mesh, mesh.point(a1), EdgeRef(t, s), lam)
        if not res.found:
            p = parallel_circle_point(mesh.point(a1), mesh.point(a2), mesh.point(a3))
            if not (p.x == vx[a1] and p.y == vy[a1]):
                calls += 1
    return calls


def _refine_naive(mesh: TriMesh, tol, stats: RefineStats):
    """Deliberately bad scheduling: always process the triangle whose
    inspection issues the most probes.  Exists to exercise the quadratic
    worst case; not a supported configuration."""
    pool = set(range(mesh.n_triangles))
    dirty = []
    while pool:
        best_t, best_calls = -1, -1
        for t in sorted(pool):
            calls = _dry_probe_count(mesh, t)
            if calls > best_calls:
                best_t, best_calls = t, calls
        dirty.clear()
        if _process_triangle(mesh, best_t, tol, stats, dirty):
            pool = set(range(mesh.n_triangles))
        else:
            pool.discard(best_t)


def refine(mesh: TriMesh, tol: float = 1e-12, order: str = "walls-first") -> RefineStats:
    """Insert Steiner points until no side-pair admits a pinch vertex.

    Mutates the mesh in place and returns sweep statistics.  The mesh must
    be a constrained Delaunay triangulation; it still is afterwards, with
    only Steiner vertices added and every original constraint still covered.
    `order` selects the scheduling policy: "walls-first" (default) or
    "naive" (adversarial test mode, pure-Python only).
    """
    if order not in ("walls-first", "naive"):
        raise InputError(f"unknown refinement order {order!r}")
    stats = RefineStats()
    stats.triangles_before = mesh.n_triangles
    t0 = time.perf_counter()
    kern = core.kernel()
    if order == "walls-first" and hasattr(kern, "refine_arrays"):
        _refine_compiled(kern, mesh, tol, stats)
    elif order == "walls-first":
        _refine_walls_first(mesh, tol, stats)
    else:
        _refine_naive(mesh, tol, stats)
    stats.wall_time = time.perf_counter() - t0
    stats.triangles_after = mesh.n_triangles
    return stats


def _refine_compiled(kern, mesh: TriMesh, tol, stats: RefineStats):
    seg_a = np.asarray([s[0] for s in mesh.segments], dtype=np.int32)
    seg_b = np.asarray([s[1] for s in mesh.segments], dtype=np.int32)
    out = kern.refine_arrays(
        np.asarray(mesh.vx, dtype=np.float64),
        np.asarray(mesh.vy, dtype=np.float64),
        np.asarray(mesh.vkind, dtype=np.uint8),
        np.asarray(mesh.tv, dtype=np.int32),
        np.asarray(mesh.tn, dtype=np.int32),
        np.asarray(mesh.tc, dtype=np.int32),
        np.asarray(mesh.ts, dtype=np.int32),
        seg_a,
        seg_b,
        float(tol),
    )
    vx, vy, vkind, tv, tn, tc, ts, steiner, checks, flips, skipped = out
    mesh.vx = vx.tolist()
    mesh.vy = vy.tolist()
    mesh.vkind = vkind.tolist()
    mesh.tv = tv.tolist()
    mesh.tn = tn.tolist()
    mesh.tc = tc.tolist()
    mesh.ts = ts.tolist()
    stats.steiner_inserted = steiner
    stats.check_calls = checks
    stats.flips = flips
    stats.skipped_insertions = skipped


# ---------------------------------------------------------------------------
# brute-force oracle


def _on_segment_closed(px_, py_, ax, ay, bx, by) -> bool:
    if orient_xy(ax, ay, bx, by, px_, py_) != 0:
        return False
    return (
        min(ax, bx) <= px_ <= max(ax, bx) and min(ay, by) <= py_ <= max(ay, by)
    )


def _foot_visible(mesh, x_pt, foot, walls) -> bool:
    """True if segment [x, foot] meets every wall in at most one of its own
    endpoints (the visibility notion used for pinch vertices)."""
    for (_, p, q) in walls:
        px_, py_ = mesh.vx[p], mesh.vy[p]
        qx, qy = mesh.vx[q], mesh.vy[q]
        if not segments_properly_cross(x_pt, foot, (px_, py_), (qx, qy)):
            continue
        o1 = orient_xy(px_, py_, qx, qy, x_pt[0], x_pt[1])
        o2 = orient_xy(px_, py_, qx, qy, foot[0], foot[1])
        if o1 == 0 and o2 == 0:
            # collinear: the overlap must be a single endpoint of [x, foot]
            dx, dy = qx - px_, qy - py_
            n2 = dx * dx + dy * dy
            t_x = ((x_pt[0] - px_) * dx + (x_pt[1] - py_) * dy) / n2
            t_f = ((foot[0] - px_) * dx + (foot[1] - py_) * dy) / n2
            lo, hi = min(t_x, t_f), max(t_x, t_f)
            olo, ohi = max(lo, 0.0), min(hi, 1.0)
            if ohi > olo:
                return False
        else:
            x_on = _on_segment_closed(x_pt[0], x_pt[1], px_, py_, qx, qy)
            f_on = _on_segment_closed(foot[0], foot[1], px_, py_, qx, qy)
            if not (x_on or f_on):
                return False
    return True


def find_pinch_vertices(mesh: TriMesh, tol: float = 1e-12):
    """Exhaustive scan for pinch vertices: every (triangle, side-pair,
    vertex, wall) combination is tested literally, including visibility of
    the wall foot.  Independent test oracle; the sweep never calls it.

    Returns a list of (vertex id, (triangle, apex slot), wall EdgeRef).
    """
    out = []
    nt = mesh.n_triangles
    if nt == 0:
        return out
    VX = np.asarray(mesh.vx)
    VY = np.asarray(mesh.vy)
    used = np.zeros(len(VX), dtype=bool)
    used[np.asarray(mesh.tv).reshape(-1)] = True
    walls = []
    for e in mesh.iter_edges():
        if mesh.is_constrained(e):
            u, v = mesh.edge_vertices(e)
            walls.append((e, u, v))
    if not walls:
        return out
    wpx = VX[[w[1] for w in walls]]
    wpy = VY[[w[1] for w in walls]]
    wqx = VX[[w[2] for w in walls]]
    wqy = VY[[w[2] for w in walls]]
    wdx, wdy = wqx - wpx, wqy - wpy
    wn2 = wdx * wdx + wdy * wdy
    # vertex-to-wall geometry is pair-independent: compute it once
    TT = ((VX[:, None] - wpx) * wdx + (VY[:, None] - wpy) * wdy) / wn2
    DIST = np.hypot(
        VX[:, None] - (wpx + TT * wdx), VY[:, None] - (wpy + TT * wdy)
    )
    INTERIOR = (TT > tol) & (TT < 1.0 - tol)
    vx, vy = mesh.vx, mesh.vy
    for t in range(nt):
        base = 3 * t
        for s in (0, 1, 2):
            if mesh.tc[base + _NEXT[s]] or mesh.tc[base + _PREV[s]]:
                continue
            a1 = mesh.tv[base + s]
            a2 = mesh.tv[base + _NEXT[s]]
            a3 = mesh.tv[base + _PREV[s]]
            d2 = (vx[a2] - vx[a1]) ** 2 + (vy[a2] - vy[a1]) ** 2
            d3 = (vx[a3] - vx[a1]) ** 2 + (vy[a3] - vy[a1]) ** 2
            # a1 sits strictly left of a2->a3 in a counterclockwise triangle;
            # swapping for the shorter-side convention flips its known side
            a1_side = 1
            if d2 > d3:
                a2, a3 = a3, a2
                d2, d3 = d3, d2
                a1_side = -1
            short_side = math.sqrt(d2)
            a2x, a2y = vx[a2], vy[a2]
            a3x, a3y = vx[a3], vy[a3]
            ex, ey = a3x - a2x, a3y - a2y
            side = ex * (VY - a2y) - ey * (VX - a2x)
            cand = np.nonzero(used & (a1_side * side > 0.0))[0]
            if cand.size == 0:
                continue
            cx = VX[cand][:, None]
            cy = VY[cand][:, None]
            bound = np.minimum(
                short_side,
                np.minimum(
                    np.hypot(cx - a2x, cy - a2y), np.hypot(cx - a3x, cy - a3y)
                ),
            )
            mask = INTERIOR[cand] & (DIST[cand] < bound)
            for ci, k in zip(*np.nonzero(mask)):
                xv = int(cand[ci])
                xvx, xvy = vx[xv], vy[xv]
                if orient_xy(a2x, a2y, a3x, a3y, xvx, xvy) != a1_side:
                    continue
                foot = (
                    float(wpx[k] + TT[xv, k] * wdx[k]),
                    float(wpy[k] + TT[xv, k] * wdy[k]),
                )
                if not segments_properly_cross(
                    (xvx, xvy), foot, (a2x, a2y), (a3x, a3y)
                ):
                    continue
                if not _foot_visible(mesh, (xvx, xvy), foot, walls):
                    continue
                out.append((xv, (t, s), walls[int(k)][0]))
    return out

