"""Pure-Python constrained-Delaunay kernel.

This is the fallback twin of the compiled kernel in `_core.pyx`: same
algorithms, same processing order, same outputs, down to triangle slot
assignment.  Keep the two in sync; the backend-equivalence tests compare
their raw output arrays.

Internal representation: flat parallel lists, three entries per triangle.
`tv` holds vertex ids (counterclockwise), `tn` neighbor triangle ids
(slot i is the edge opposite vertex i), `tc` constrained flags, `ts` the
id of the input segment an edge derives from (-1 if unconstrained).

The triangulation carries one symbolic vertex GHOST (-1): every hull edge
has a ghost triangle (v, u, GHOST) on its outside, where the hull reads
the edge (u, v).  Ghosts keep the outer boundary navigable and are
stripped before the arrays are returned.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, InternalInvariantError
from .geom import acute_xy, incircle_xy, orient_xy

GHOST = -1

_NEXT = (1, 2, 0)
_PREV = (2, 0, 1)


class _Builder:
    def __init__(self, px, py):
        self.px = px
        self.py = py
        self.tv = []
        self.tn = []
        self.tc = []
        self.ts = []
        self.alive = []
        self.free = []
        self.vert_tri = [-1] * len(px)
        self.mark = []
        self.stamp = 0
        self.last_real = -1

    # -- storage ------------------------------------------------------

    def _alloc(self, a, b, c):
        if self.free:
            t = self.free.pop()
            base = 3 * t
            self.tv[base] = a
            self.tv[base + 1] = b
            self.tv[base + 2] = c
            self.tn[base] = -1
            self.tn[base + 1] = -1
            self.tn[base + 2] = -1
            self.tc[base] = 0
            self.tc[base + 1] = 0
            self.tc[base + 2] = 0
            self.ts[base] = -1
            self.ts[base + 1] = -1
            self.ts[base + 2] = -1
            self.alive[t] = True
        else:
            t = len(self.alive)
            self.tv.extend((a, b, c))
            self.tn.extend((-1, -1, -1))
            self.tc.extend((0, 0, 0))
            self.ts.extend((-1, -1, -1))
            self.alive.append(True)
            self.mark.append(0)
        for v in (a, b, c):
            if v != GHOST:
                self.vert_tri[v] = t
        return t

    def _kill(self, t):
        self.alive[t] = False
        self.free.append(t)

    def _slot_of(self, t, v):
        base = 3 * t
        if self.tv[base] == v:
            return 0
        if self.tv[base + 1] == v:
            return 1
        if self.tv[base + 2] == v:
            return 2
        raise InternalInvariantError(f"vertex {v} not in triangle {t}")

    def _nslot_of(self, t, nb):
        base = 3 * t
        if self.tn[base] == nb:
            return 0
        if self.tn[base + 1] == nb:
            return 1
        if self.tn[base + 2] == nb:
            return 2
        raise InternalInvariantError(f"triangles {t} and {nb} not adjacent")

    def _is_ghost(self, t):
        return self.tv[3 * t + 2] == GHOST

    def _orient_v(self, a, b, c):
        px, py = self.px, self.py
        return orient_xy(px[a], py[a], px[b], py[b], px[c], py[c])

    def _between_strict(self, w, a, b):
        # w known collinear with segment (a, b): strictly inside?
        px, py = self.px, self.py
        return (
            acute_xy(px[w], py[w], px[a], py[a], px[b], py[b]) > 0
            and acute_xy(px[w], py[w], px[b], py[b], px[a], py[a]) > 0
        )

    # -- seeding ------------------------------------------------------

    def seed(self, order):
        px, py = self.px, self.py
        i0, i1 = order[0], order[1]
        k = 2
        o = 0
        while k < len(order):
            o = self._orient_v(i0, i1, order[k])
            if o != 0:
                break
            k += 1
        if k == len(order):
            raise InputError("all input points are collinear; no region to triangulate")
        order[2], order[k] = order[k], order[2]
        if o < 0:
            i0, i1 = i1, i0
            order[0], order[1] = order[1], order[0]
        i2 = order[2]
        t = self._alloc(i0, i1, i2)
        g0 = self._alloc(i2, i1, GHOST)
        g1 = self._alloc(i0, i2, GHOST)
        g2 = self._alloc(i1, i0, GHOST)
        self.tn[3 * t : 3 * t + 3] = [g0, g1, g2]
        self.tn[3 * g0 : 3 * g0 + 3] = [g2, g1, t]
        self.tn[3 * g1 : 3 * g1 + 3] = [g0, g2, t]
        self.tn[3 * g2 : 3 * g2 + 3] = [g1, g0, t]
        self.last_real = t

    # -- point location ----------------------------------------------

    def _locate(self, x, y):
        px, py = self.px, self.py
        tv, tn = self.tv, self.tn
        t = self.last_real
        limit = 4 * len(self.alive) + 16
        steps = 0
        while True:
            base = 3 * t
            a, b, c = tv[base], tv[base + 1], tv[base + 2]
            if c == GHOST:
                return t
            if orient_xy(px[a], py[a], px[b], py[b], x, y) < 0:
                t = tn[base + 2]
            elif orient_xy(px[b], py[b], px[c], py[c], x, y) < 0:
                t = tn[base]
            elif orient_xy(px[c], py[c], px[a], py[a], x, y) < 0:
                t = tn[base + 1]
            else:
                return t
            steps += 1
            if steps > limit:
                raise InternalInvariantError("point-location walk did not terminate")

    def _conflicts(self, t, x, y):
        px, py = self.px, self.py
        base = 3 * t
        a, b, c = self.tv[base], self.tv[base + 1], self.tv[base + 2]
        if c == GHOST:
            # Limit circle of the ghost over hull edge (b, a): the open half
            # plane strictly outside the hull, plus the open edge itself.
            o = orient_xy(px[a], py[a], px[b], py[b], x, y)
            if o > 0:
                return True
            if o < 0:
                return False
            return (
                acute_xy(x, y, px[a], py[a], px[b], py[b]) > 0
                and acute_xy(x, y, px[b], py[b], px[a], py[a]) > 0
            )
        return (
            incircle_xy(px[a], py[a], px[b], py[b], px[c], py[c], x, y) > 0
        )

    # -- incremental insertion ----------------------------------------

    def insert(self, p):
        x, y = self.px[p], self.py[p]
        seed = self._locate(x, y)
        if not self._conflicts(seed, x, y):
            raise InternalInvariantError(f"inserted point {p} conflicts with nothing")
        self.stamp += 1
        stamp, mark = self.stamp, self.mark
        mark[seed] = stamp
        cavity = [seed]
        stack = [seed]
        tn = self.tn
        while stack:
            t = stack.pop()
            base = 3 * t
            for s in (0, 1, 2):
                nb = tn[base + s]
                if mark[nb] != stamp and self._conflicts(nb, x, y):
                    mark[nb] = stamp
                    cavity.append(nb)
                    stack.append(nb)
        # boundary edges in deterministic order
        boundary = []
        tv = self.tv
        for t in cavity:
            base = 3 * t
            for s in (0, 1, 2):
                nb = tn[base + s]
                if mark[nb] != stamp:
                    bx = tv[base + _NEXT[s]]
                    by_ = tv[base + _PREV[s]]
                    boundary.append((bx, by_, nb, self._nslot_of(nb, t)))
        for t in cavity:
            self._kill(t)
        # star the point to every boundary edge
        by_x = {}
        recs = []
        for (ex, ey, o, oslot) in boundary:
            if ex == GHOST:
                t = self._alloc(ey, p, GHOST)
                sxy, syp, spx = 1, 2, 0
            elif ey == GHOST:
                t = self._alloc(p, ex, GHOST)
                sxy, syp, spx = 0, 1, 2
            else:
                t = self._alloc(p, ex, ey)
                sxy, syp, spx = 0, 1, 2
                self.last_real = t
            self.tn[3 * t + sxy] = o
            self.tn[3 * o + oslot] = t
            by_x[ex] = (t, spx)
            recs.append((t, ey, syp))
        for (t, ey, syp) in recs:
            sib, sib_spx = by_x[ey]
            self.tn[3 * t + syp] = sib
            self.tn[3 * sib + sib_spx] = t

    # -- constraint enforcement ---------------------------------------

    def _incident(self, v):
        """All alive triangles around v as (tri, slot_of_v), full ring."""
        t0 = self.vert_tri[v]
        t = t0
        out = []
        while True:
            i = self._slot_of(t, v)
            out.append((t, i))
            t = self.tn[3 * t + _NEXT[i]]
            if t == t0:
                return out
            if len(out) > len(self.alive):
                raise InternalInvariantError(f"fan around vertex {v} does not close")

    def _mark_edge(self, t, s, sid):
        base = 3 * t + s
        if not self.tc[base]:
            self.tc[base] = 1
            self.ts[base] = sid
        nb = self.tn[base]
        k = self._nslot_of(nb, t)
        if not self.tc[3 * nb + k]:
            self.tc[3 * nb + k] = 1
            self.ts[3 * nb + k] = sid

    def enforce(self, a, b, sid):
        guard = 0
        while a != b:
            a = self._enforce_step(a, b, sid)
            guard += 1
            if guard > len(self.px):
                raise InternalInvariantError("segment enforcement did not terminate")

    def _enforce_step(self, a, b, sid):
        tv = self.tv
        for (t, ia) in self._incident(a):
            if self._is_ghost(t):
                continue
            base = 3 * t
            u = tv[base + _NEXT[ia]]
            w = tv[base + _PREV[ia]]
            if u == b:
                self._mark_edge(t, _PREV[ia], sid)
                return b
            if w == b:
                self._mark_edge(t, _NEXT[ia], sid)
                return b
            ou = self._orient_v(a, b, u)
            if ou == 0 and self._between_strict(u, a, b):
                self._mark_edge(t, _PREV[ia], sid)
                return u
            ow = self._orient_v(a, b, w)
            if ow == 0 and self._between_strict(w, a, b):
                self._mark_edge(t, _NEXT[ia], sid)
                return w
            # in counterclockwise (a, u, w) the segment enters the wedge at a
            # iff u lies strictly right and w strictly left of a->b
            if ou < 0 and ow > 0 and self._orient_v(u, w, b) < 0:
                return self._pipe(a, b, t, ia, sid)
        raise InternalInvariantError(
            f"no path from vertex {a} toward vertex {b} for segment {sid}"
        )

    def _pipe(self, a, b, t_entry, ia, sid):
        """Carve the run of triangles crossed by segment (a, b) starting in
        t_entry (crossed edge opposite slot ia), and retriangulate the two
        resulting pockets.  Returns the vertex actually reached (b, or an
        intermediate vertex lying exactly on the segment)."""
        tv, tn, tc, ts = self.tv, self.tn, self.tc, self.ts
        base = 3 * t_entry
        right = tv[base + _NEXT[ia]]
        left = tv[base + _PREV[ia]]
        upper = [left]
        lower = [right]
        dead = [t_entry]
        if tc[base + ia]:
            raise InputError(
                f"constraint segments cross: segment {sid} crosses segment {ts[base + ia]}"
            )
        cur = tn[base + ia]
        while True:
            if self._is_ghost(cur):
                raise InternalInvariantError("segment walk left the hull")
            dead.append(cur)
            # apex = vertex of cur not on the crossed edge
            cbase = 3 * cur
            if tv[cbase] != left and tv[cbase] != right:
                sx = 0
            elif tv[cbase + 1] != left and tv[cbase + 1] != right:
                sx = 1
            else:
                sx = 2
            x = tv[cbase + sx]
            if x == b:
                self._retriangulate(a, b, upper, lower, dead, sid)
                return b
            o = self._orient_v(a, b, x)
            if o == 0:
                if not self._between_strict(x, a, b):
                    raise InternalInvariantError(
                        f"collinear vertex {x} outside segment span during walk"
                    )
                self._retriangulate(a, x, upper, lower, dead, sid)
                return x
            if o > 0:
                upper.append(x)
                nslot = self._slot_of(cur, left)
                left = x
            else:
                lower.append(x)
                nslot = self._slot_of(cur, right)
                right = x
            if tc[cbase + nslot]:
                raise InputError(
                    f"constraint segments cross: segment {sid} crosses "
                    f"segment {ts[cbase + nslot]}"
                )
            cur = tn[cbase + nslot]

    def _tri_pp(self, lo, hi, chain, out):
        if not chain:
            return
        px, py = self.px, self.py
        ci = 0
        xl, yl = px[lo], py[lo]
        xh, yh = px[hi], py[hi]
        for k in range(1, len(chain)):
            c = chain[ci]
            v = chain[k]
            if incircle_xy(xl, yl, xh, yh, px[c], py[c], px[v], py[v]) > 0:
                ci = k
        c = chain[ci]
        self._tri_pp(lo, c, chain[:ci], out)
        self._tri_pp(c, hi, chain[ci + 1 :], out)
        out.append((lo, hi, c))

    def _retriangulate(self, lo, hi, upper, lower, dead, sid):
        tn, tc, ts = self.tn, self.tc, self.ts
        # remember the surviving neighbors (and their constraint flags)
        dead_set = set(dead)
        outer = {}
        tv = self.tv
        for t in dead:
            base = 3 * t
            for s in (0, 1, 2):
                nb = tn[base + s]
                if nb not in dead_set:
                    ex = tv[base + _NEXT[s]]
                    ey = tv[base + _PREV[s]]
                    outer[(ex, ey)] = (
                        nb,
                        self._nslot_of(nb, t),
                        tc[base + s],
                        ts[base + s],
                    )
        for t in dead:
            self._kill(t)
        tris = []
        self._tri_pp(lo, hi, upper, tris)
        self._tri_pp(hi, lo, list(reversed(lower)), tris)
        edge_map = {}
        new_ids = []
        for (v0, v1, v2) in tris:
            t = self._alloc(v0, v1, v2)
            new_ids.append(t)
            edge_map[(v1, v2)] = (t, 0)
            edge_map[(v2, v0)] = (t, 1)
            edge_map[(v0, v1)] = (t, 2)
        for (ex, ey), (t, s) in edge_map.items():
            rev = edge_map.get((ey, ex))
            if rev is not None:
                self.tn[3 * t + s] = rev[0]
            else:
                nb, nbslot, flag, seg = outer[(ex, ey)]
                self.tn[3 * t + s] = nb
                self.tn[3 * nb + nbslot] = t
                self.tc[3 * t + s] = flag
                self.ts[3 * t + s] = seg
        t, s = edge_map[(lo, hi)]
        self._mark_edge(t, s, sid)

    # -- region classification ----------------------------------------

    def classify(self, polys):
        """Mark exterior triangles (flood from the ghosts) and obstacle
        interiors (flood from the interior side of each polygon edge).
        Returns the removal flags."""
        ntri = len(self.alive)
        dead = [False] * ntri
        stack = []
        for t in range(ntri):
            if self.alive[t] and self._is_ghost(t):
                dead[t] = True
                stack.append(t)
        self._flood(stack, dead)
        for cycle in polys:
            m = len(cycle)
            for i in range(m):
                self._seed_polygon_edge(cycle[i], cycle[(i + 1) % m], dead)
        return dead

    def _flood(self, stack, dead):
        tn, tc = self.tn, self.tc
        while stack:
            t = stack.pop()
            base = 3 * t
            for s in (0, 1, 2):
                if tc[base + s]:
                    continue
                nb = tn[base + s]
                if nb >= 0 and not dead[nb]:
                    dead[nb] = True
                    stack.append(nb)

    def _seed_polygon_edge(self, u, v, dead):
        """Flood the triangles on the left of polygon edge u->v (the polygon
        interior side for a counterclockwise cycle), following the enforced
        constrained chain covering the edge."""
        cur = u
        guard = 0
        while cur != v:
            found = False
            for (t, i) in self._incident(cur):
                if self._is_ghost(t):
                    continue
                base = 3 * t
                nxt = self.tv[base + _NEXT[i]]
                prv = self.tv[base + _PREV[i]]
                # edge (cur -> nxt) reads counterclockwise in t: t is on its left
                if self.tc[base + _PREV[i]] and self._on_chain(nxt, u, v, cur):
                    if not dead[t]:
                        dead[t] = True
                        self._flood([t], dead)
                    cur = nxt
                    found = True
                    break
                # edge (prv -> cur): left side is t's neighbor across it
                if self.tc[base + _NEXT[i]] and self._on_chain(prv, u, v, cur):
                    # walking cur -> prv, left triangle is across the edge
                    nb = self.tn[base + _NEXT[i]]
                    if nb >= 0 and not self._is_ghost(nb) and not dead[nb]:
                        dead[nb] = True
                        self._flood([nb], dead)
                    cur = prv
                    found = True
                    break
            if not found:
                raise InternalInvariantError(
                    f"polygon edge ({u}, {v}) is not covered by constrained edges"
                )
            guard += 1
            if guard > len(self.px):
                raise InternalInvariantError("polygon chain walk did not terminate")

    def _on_chain(self, w, u, v, cur):
        """w qualifies as the next chain vertex from cur toward v along
        the polygon edge (u, v)."""
        if w == v:
            return True
        if w == u:
            return False
        if self._orient_v(u, v, w) != 0:
            return False
        # strictly between cur and v
        px, py = self.px, self.py
        return (
            acute_xy(px[w], py[w], px[cur], py[cur], px[v], py[v]) > 0
            and acute_xy(px[w], py[w], px[v], py[v], px[cur], py[cur]) > 0
        )

    # -- output --------------------------------------------------------

    def compact(self, dead):
        ntri = len(self.alive)
        remap = [-1] * ntri
        nkeep = 0
        for t in range(ntri):
            if self.alive[t] and not dead[t]:
                remap[t] = nkeep
                nkeep += 1
        tri_v = np.empty((nkeep, 3), dtype=np.int32)
        tri_n = np.empty((nkeep, 3), dtype=np.int32)
        tri_c = np.empty((nkeep, 3), dtype=np.uint8)
        tri_s = np.empty((nkeep, 3), dtype=np.int32)
        tv, tn, tc, ts = self.tv, self.tn, self.tc, self.ts
        for t in range(ntri):
            k = remap[t]
            if k < 0:
                continue
            base = 3 * t
            for s in (0, 1, 2):
                tri_v[k, s] = tv[base + s]
                nb = tn[base + s]
                tri_n[k, s] = remap[nb] if nb >= 0 else -1
                tri_c[k, s] = tc[base + s]
                tri_s[k, s] = ts[base + s]
        return tri_v, tri_n, tri_c, tri_s


def build_cdt_arrays(px, py, order, seg_a, seg_b, polys):
    """Build a constrained Delaunay triangulation.

    px, py: vertex coordinates (float64 arrays, pre-validated).
    order: insertion order (a permutation of vertex ids, spatially sorted).
    seg_a, seg_b: constrained segment endpoint ids.
    polys: obstacle polygons as counterclockwise vertex cycles; their
        interiors are removed, as is everything reachable from outside
        without crossing a constrained edge.

    Returns (tri_v, tri_n, tri_c, tri_s) arrays of the surviving triangles.
    """
    b = _Builder(list(map(float, px)), list(map(float, py)))
    order = [int(i) for i in order]
    b.seed(order)
    for k in range(3, len(order)):
        b.insert(order[k])
    for sid in range(len(seg_a)):
        b.enforce(int(seg_a[sid]), int(seg_b[sid]), sid)
    dead = b.classify(polys)
    return b.compact(dead)
