# cython: language_level=3
# distutils: language = c++
"""Compiled kernel: constrained-Delaunay construction and Steiner
refinement over flat triangle arrays.

This is the hot twin of `_pycore` (build) and the pure sweep in `refine`;
the algorithms, processing order, and slot policies mirror those modules
exactly so both backends produce identical arrays.  Keep them in sync.
"""

from libcpp.vector cimport vector
from libcpp.deque cimport deque
from libc.math cimport sqrt, hypot

import numpy as np

from .errors import InputError, InternalInvariantError
from . import geom as _geom

cdef double ORIENT_FILTER = _geom.ORIENT_FILTER
cdef double INCIRCLE_FILTER = _geom.INCIRCLE_FILTER

_orient_exact = _geom._orient2d_exact
_incircle_exact = _geom._incircle_exact
_acute_exact = _geom._acute_exact

cdef int GHOST = -1

cdef inline int _next(int s) nogil:
    return (s + 1) % 3

cdef inline int _prev(int s) nogil:
    return (s + 2) % 3


cdef int _orient(double ax, double ay, double bx, double by,
                 double cx, double cy):
    cdef double detleft = (ax - cx) * (by - cy)
    cdef double detright = (ay - cy) * (bx - cx)
    cdef double det = detleft - detright
    cdef double bound = ORIENT_FILTER * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return _orient_exact(ax, ay, bx, by, cx, cy)


cdef int _acute(double ax, double ay, double bx, double by,
                double cx, double cy):
    cdef double d1 = (ax - bx) * (cx - bx)
    cdef double d2 = (ay - by) * (cy - by)
    cdef double dot = d1 + d2
    cdef double bound = ORIENT_FILTER * (abs(d1) + abs(d2))
    if dot > bound:
        return 1
    if dot < -bound:
        return -1
    return _acute_exact(ax, ay, bx, by, cx, cy)


cdef int _incircle(double ax, double ay, double bx, double by,
                   double cx, double cy, double dx, double dy):
    cdef double adx = ax - dx, ady = ay - dy
    cdef double bdx = bx - dx, bdy = by - dy
    cdef double cdx = cx - dx, cdy = cy - dy
    cdef double bdxcdy = bdx * cdy
    cdef double cdxbdy = cdx * bdy
    cdef double alift = adx * adx + ady * ady
    cdef double cdxady = cdx * ady
    cdef double adxcdy = adx * cdy
    cdef double blift = bdx * bdx + bdy * bdy
    cdef double adxbdy = adx * bdy
    cdef double bdxady = bdx * ady
    cdef double clift = cdx * cdx + cdy * cdy
    cdef double det = (alift * (bdxcdy - cdxbdy)
                       + blift * (cdxady - adxcdy)
                       + clift * (adxbdy - bdxady))
    cdef double permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                             + (abs(cdxady) + abs(adxcdy)) * blift
                             + (abs(adxbdy) + abs(bdxady)) * clift)
    cdef double bound = INCIRCLE_FILTER * permanent
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


# ---------------------------------------------------------------------------
# triangulation builder


cdef class _Build:
    cdef vector[double] px, py
    cdef vector[int] tv, tn, ts, mark, free_stack, vert_tri
    cdef vector[signed char] tc, alive
    cdef int stamp, last_real

    def __cinit__(self):
        self.stamp = 0
        self.last_real = -1

    cdef int _ntri(self):
        return <int>self.alive.size()

    cdef int _alloc(self, int a, int b, int c):
        cdef int t, base, k
        if self.free_stack.size() > 0:
            t = self.free_stack.back()
            self.free_stack.pop_back()
            base = 3 * t
            self.tv[base] = a
            self.tv[base + 1] = b
            self.tv[base + 2] = c
            for k in range(3):
                self.tn[base + k] = -1
                self.tc[base + k] = 0
                self.ts[base + k] = -1
            self.alive[t] = 1
        else:
            t = <int>self.alive.size()
            self.tv.push_back(a)
            self.tv.push_back(b)
            self.tv.push_back(c)
            for k in range(3):
                self.tn.push_back(-1)
                self.tc.push_back(0)
                self.ts.push_back(-1)
            self.alive.push_back(1)
            self.mark.push_back(0)
        if a != GHOST:
            self.vert_tri[a] = t
        if b != GHOST:
            self.vert_tri[b] = t
        if c != GHOST:
            self.vert_tri[c] = t
        return t

    cdef void _kill(self, int t):
        self.alive[t] = 0
        self.free_stack.push_back(t)

    cdef int _slot_of(self, int t, int v) except -2:
        cdef int base = 3 * t
        if self.tv[base] == v:
            return 0
        if self.tv[base + 1] == v:
            return 1
        if self.tv[base + 2] == v:
            return 2
        raise InternalInvariantError(f"vertex {v} not in triangle {t}")

    cdef int _nslot_of(self, int t, int nb) except -2:
        cdef int base = 3 * t
        if self.tn[base] == nb:
            return 0
        if self.tn[base + 1] == nb:
            return 1
        if self.tn[base + 2] == nb:
            return 2
        raise InternalInvariantError(f"triangles {t} and {nb} not adjacent")

    cdef bint _is_ghost(self, int t):
        return self.tv[3 * t + 2] == GHOST

    cdef int _orient_v(self, int a, int b, int c):
        return _orient(self.px[a], self.py[a], self.px[b], self.py[b],
                       self.px[c], self.py[c])

    cdef bint _between_strict(self, int w, int a, int b):
        return (_acute(self.px[w], self.py[w], self.px[a], self.py[a],
                       self.px[b], self.py[b]) > 0
                and _acute(self.px[w], self.py[w], self.px[b], self.py[b],
                           self.px[a], self.py[a]) > 0)

    # -- seeding ------------------------------------------------------

    cdef void seed(self, vector[int]& order) except *:
        cdef int i0 = order[0]
        cdef int i1 = order[1]
        cdef int k = 2
        cdef int o = 0, tmp
        cdef int n = <int>order.size()
        while k < n:
            o = self._orient_v(i0, i1, order[k])
            if o != 0:
                break
            k += 1
        if k == n:
            raise InputError("all input points are collinear; no region to triangulate")
        tmp = order[2]; order[2] = order[k]; order[k] = tmp
        if o < 0:
            tmp = i0; i0 = i1; i1 = tmp
            order[0] = i0; order[1] = i1
        cdef int i2 = order[2]
        cdef int t = self._alloc(i0, i1, i2)
        cdef int g0 = self._alloc(i2, i1, GHOST)
        cdef int g1 = self._alloc(i0, i2, GHOST)
        cdef int g2 = self._alloc(i1, i0, GHOST)
        self.tn[3 * t] = g0; self.tn[3 * t + 1] = g1; self.tn[3 * t + 2] = g2
        self.tn[3 * g0] = g2; self.tn[3 * g0 + 1] = g1; self.tn[3 * g0 + 2] = t
        self.tn[3 * g1] = g0; self.tn[3 * g1 + 1] = g2; self.tn[3 * g1 + 2] = t
        self.tn[3 * g2] = g1; self.tn[3 * g2 + 1] = g0; self.tn[3 * g2 + 2] = t
        self.last_real = t

    # -- point location -----------------------------------------------

    cdef int _locate(self, double x, double y) except -2:
        cdef int t = self.last_real
        cdef long limit = 4 * <long>self.alive.size() + 16
        cdef long steps = 0
        cdef int base, a, b, c
        while True:
            base = 3 * t
            a = self.tv[base]; b = self.tv[base + 1]; c = self.tv[base + 2]
            if c == GHOST:
                return t
            if _orient(self.px[a], self.py[a], self.px[b], self.py[b], x, y) < 0:
                t = self.tn[base + 2]
            elif _orient(self.px[b], self.py[b], self.px[c], self.py[c], x, y) < 0:
                t = self.tn[base]
            elif _orient(self.px[c], self.py[c], self.px[a], self.py[a], x, y) < 0:
                t = self.tn[base + 1]
            else:
                return t
            steps += 1
            if steps > limit:
                raise InternalInvariantError("point-location walk did not terminate")

    cdef bint _conflicts(self, int t, double x, double y):
        cdef int base = 3 * t
        cdef int a = self.tv[base]
        cdef int b = self.tv[base + 1]
        cdef int c = self.tv[base + 2]
        cdef int o
        if c == GHOST:
            o = _orient(self.px[a], self.py[a], self.px[b], self.py[b], x, y)
            if o > 0:
                return True
            if o < 0:
                return False
            return (_acute(x, y, self.px[a], self.py[a], self.px[b], self.py[b]) > 0
                    and _acute(x, y, self.px[b], self.py[b], self.px[a], self.py[a]) > 0)
        return _incircle(self.px[a], self.py[a], self.px[b], self.py[b],
                         self.px[c], self.py[c], x, y) > 0

    # -- incremental insertion ------------------------------------------

    cdef void insert(self, int p) except *:
        cdef double x = self.px[p]
        cdef double y = self.py[p]
        cdef int seed = self._locate(x, y)
        if not self._conflicts(seed, x, y):
            raise InternalInvariantError(f"inserted point {p} conflicts with nothing")
        self.stamp += 1
        cdef int stamp = self.stamp
        self.mark[seed] = stamp
        cdef vector[int] cavity, stack
        cavity.push_back(seed)
        stack.push_back(seed)
        cdef int t, base, s, nb
        while stack.size() > 0:
            t = stack.back(); stack.pop_back()
            base = 3 * t
            for s in range(3):
                nb = self.tn[base + s]
                if self.mark[nb] != stamp and self._conflicts(nb, x, y):
                    self.mark[nb] = stamp
                    cavity.push_back(nb)
                    stack.push_back(nb)
        # boundary records: x, y vertices, outside tri + its slot
        cdef vector[int] bx, by_, bo, bos
        cdef size_t ci
        for ci in range(cavity.size()):
            t = cavity[ci]
            base = 3 * t
            for s in range(3):
                nb = self.tn[base + s]
                if self.mark[nb] != stamp:
                    bx.push_back(self.tv[base + _next(s)])
                    by_.push_back(self.tv[base + _prev(s)])
                    bo.push_back(nb)
                    bos.push_back(self._nslot_of(nb, t))
        for ci in range(cavity.size()):
            self._kill(cavity[ci])
        # star p onto every boundary edge
        cdef vector[int] tri_of, syp_of, spx_of, ey_of, firstx
        cdef int ex, ey, o, oslot, sxy, syp, spx
        cdef size_t bi
        for bi in range(bx.size()):
            ex = bx[bi]; ey = by_[bi]; o = bo[bi]; oslot = bos[bi]
            if ex == GHOST:
                t = self._alloc(ey, p, GHOST)
                sxy = 1; syp = 2; spx = 0
            elif ey == GHOST:
                t = self._alloc(p, ex, GHOST)
                sxy = 0; syp = 1; spx = 2
            else:
                t = self._alloc(p, ex, ey)
                sxy = 0; syp = 1; spx = 2
                self.last_real = t
            self.tn[3 * t + sxy] = o
            self.tn[3 * o + oslot] = t
            firstx.push_back(ex)
            tri_of.push_back(t)
            syp_of.push_back(syp)
            spx_of.push_back(spx)
            ey_of.push_back(ey)
        cdef size_t bj
        cdef int sib, sib_spx
        for bi in range(tri_of.size()):
            ey = ey_of[bi]
            sib = -1
            for bj in range(tri_of.size()):
                if firstx[bj] == ey:
                    sib = tri_of[bj]
                    sib_spx = spx_of[bj]
                    break
            if sib < 0:
                raise InternalInvariantError("cavity boundary is not a cycle")
            self.tn[3 * tri_of[bi] + syp_of[bi]] = sib
            self.tn[3 * sib + sib_spx] = tri_of[bi]

    # -- constraint enforcement -----------------------------------------

    cdef void _mark_edge(self, int t, int s, int sid) except *:
        cdef int base = 3 * t + s
        cdef int nb, k
        if not self.tc[base]:
            self.tc[base] = 1
            self.ts[base] = sid
        nb = self.tn[base]
        k = self._nslot_of(nb, t)
        if not self.tc[3 * nb + k]:
            self.tc[3 * nb + k] = 1
            self.ts[3 * nb + k] = sid

    cdef void enforce(self, int a, int b, int sid) except *:
        cdef long guard = 0
        while a != b:
            a = self._enforce_step(a, b, sid)
            guard += 1
            if guard > <long>self.px.size():
                raise InternalInvariantError("segment enforcement did not terminate")

    cdef int _enforce_step(self, int a, int b, int sid) except -2:
        cdef int t0 = self.vert_tri[a]
        cdef int t = t0
        cdef int ia, base, u, w, ou, ow
        cdef long guard = 0
        while True:
            ia = self._slot_of(t, a)
            if not self._is_ghost(t):
                base = 3 * t
                u = self.tv[base + _next(ia)]
                w = self.tv[base + _prev(ia)]
                if u == b:
                    self._mark_edge(t, _prev(ia), sid)
                    return b
                if w == b:
                    self._mark_edge(t, _next(ia), sid)
                    return b
                ou = self._orient_v(a, b, u)
                if ou == 0 and self._between_strict(u, a, b):
                    self._mark_edge(t, _prev(ia), sid)
                    return u
                ow = self._orient_v(a, b, w)
                if ow == 0 and self._between_strict(w, a, b):
                    self._mark_edge(t, _next(ia), sid)
                    return w
                if ou < 0 and ow > 0 and self._orient_v(u, w, b) < 0:
                    return self._pipe(a, b, t, ia, sid)
            t = self.tn[3 * t + _next(ia)]
            guard += 1
            if t == t0 or guard > <long>self.alive.size():
                break
        raise InternalInvariantError(
            f"no path from vertex {a} toward vertex {b} for segment {sid}")

    cdef int _pipe(self, int a, int b, int t_entry, int ia, int sid) except -2:
        cdef int base = 3 * t_entry
        cdef int right = self.tv[base + _next(ia)]
        cdef int left = self.tv[base + _prev(ia)]
        cdef vector[int] upper, lower, dead
        upper.push_back(left)
        lower.push_back(right)
        dead.push_back(t_entry)
        if self.tc[base + ia]:
            raise InputError(
                f"constraint segments cross: segment {sid} crosses segment {self.ts[base + ia]}")
        cdef int cur = self.tn[base + ia]
        cdef int cbase, sx, x, o, nslot
        while True:
            if self._is_ghost(cur):
                raise InternalInvariantError("segment walk left the hull")
            dead.push_back(cur)
            cbase = 3 * cur
            if self.tv[cbase] != left and self.tv[cbase] != right:
                sx = 0
            elif self.tv[cbase + 1] != left and self.tv[cbase + 1] != right:
                sx = 1
            else:
                sx = 2
            x = self.tv[cbase + sx]
            if x == b:
                self._retriangulate(a, b, upper, lower, dead, sid)
                return b
            o = self._orient_v(a, b, x)
            if o == 0:
                if not self._between_strict(x, a, b):
                    raise InternalInvariantError(
                        f"collinear vertex {x} outside segment span during walk")
                self._retriangulate(a, x, upper, lower, dead, sid)
                return x
            if o > 0:
                upper.push_back(x)
                nslot = self._slot_of(cur, left)
                left = x
            else:
                lower.push_back(x)
                nslot = self._slot_of(cur, right)
                right = x
            if self.tc[cbase + nslot]:
                raise InputError(
                    f"constraint segments cross: segment {sid} crosses "
                    f"segment {self.ts[cbase + nslot]}")
            cur = self.tn[cbase + nslot]

    cdef void _tri_pp(self, int lo, int hi, vector[int]& chain, int begin,
                      int end, vector[int]& out) except *:
        if begin >= end:
            return
        cdef int ci = begin
        cdef int k, c, v
        cdef double xl = self.px[lo], yl = self.py[lo]
        cdef double xh = self.px[hi], yh = self.py[hi]
        for k in range(begin + 1, end):
            c = chain[ci]
            v = chain[k]
            if _incircle(xl, yl, xh, yh, self.px[c], self.py[c],
                         self.px[v], self.py[v]) > 0:
                ci = k
        c = chain[ci]
        self._tri_pp(lo, c, chain, begin, ci, out)
        self._tri_pp(c, hi, chain, ci + 1, end, out)
        out.push_back(lo)
        out.push_back(hi)
        out.push_back(c)

    cdef void _retriangulate(self, int lo, int hi, vector[int]& upper,
                             vector[int]& lower, vector[int]& dead,
                             int sid) except *:
        # surviving-neighbor records
        cdef vector[int] oex, oey, onb, onbs, ofl, osg
        cdef size_t di, dj
        cdef int t, base, s, nb
        cdef bint in_dead
        for di in range(dead.size()):
            t = dead[di]
            base = 3 * t
            for s in range(3):
                nb = self.tn[base + s]
                in_dead = False
                for dj in range(dead.size()):
                    if dead[dj] == nb:
                        in_dead = True
                        break
                if not in_dead:
                    oex.push_back(self.tv[base + _next(s)])
                    oey.push_back(self.tv[base + _prev(s)])
                    onb.push_back(nb)
                    onbs.push_back(self._nslot_of(nb, t))
                    ofl.push_back(self.tc[base + s])
                    osg.push_back(self.ts[base + s])
        for di in range(dead.size()):
            self._kill(dead[di])
        cdef vector[int] tris, rev_lower
        self._tri_pp(lo, hi, upper, 0, <int>upper.size(), tris)
        cdef int k
        for k in range(<int>lower.size() - 1, -1, -1):
            rev_lower.push_back(lower[k])
        self._tri_pp(hi, lo, rev_lower, 0, <int>rev_lower.size(), tris)
        # allocate and remember directed edges
        cdef vector[int] ea, eb, et, es
        cdef int v0, v1, v2
        cdef size_t m = tris.size() // 3
        cdef size_t mi, mj
        for mi in range(m):
            v0 = tris[3 * mi]; v1 = tris[3 * mi + 1]; v2 = tris[3 * mi + 2]
            t = self._alloc(v0, v1, v2)
            ea.push_back(v1); eb.push_back(v2); et.push_back(t); es.push_back(0)
            ea.push_back(v2); eb.push_back(v0); et.push_back(t); es.push_back(1)
            ea.push_back(v0); eb.push_back(v1); et.push_back(t); es.push_back(2)
        cdef int ex, ey, found, fslot
        for mi in range(ea.size()):
            ex = ea[mi]; ey = eb[mi]
            found = -1
            for mj in range(ea.size()):
                if ea[mj] == ey and eb[mj] == ex:
                    found = et[mj]
                    break
            if found >= 0:
                self.tn[3 * et[mi] + es[mi]] = found
            else:
                fslot = -1
                for mj in range(oex.size()):
                    if oex[mj] == ex and oey[mj] == ey:
                        fslot = <int>mj
                        break
                if fslot < 0:
                    raise InternalInvariantError("pocket edge without a neighbor")
                nb = onb[fslot]
                self.tn[3 * et[mi] + es[mi]] = nb
                self.tn[3 * nb + onbs[fslot]] = et[mi]
                self.tc[3 * et[mi] + es[mi]] = <signed char>ofl[fslot]
                self.ts[3 * et[mi] + es[mi]] = osg[fslot]
        # the new base edge is the enforced constraint
        for mi in range(ea.size()):
            if ea[mi] == lo and eb[mi] == hi:
                self._mark_edge(et[mi], es[mi], sid)
                return
        raise InternalInvariantError("enforced edge missing after retriangulation")

    # -- region classification -------------------------------------------

    cdef void _flood(self, vector[int]& stack, vector[signed char]& dead):
        cdef int t, base, s, nb
        while stack.size() > 0:
            t = stack.back(); stack.pop_back()
            base = 3 * t
            for s in range(3):
                if self.tc[base + s]:
                    continue
                nb = self.tn[base + s]
                if nb >= 0 and not dead[nb]:
                    dead[nb] = 1
                    stack.push_back(nb)

    cdef bint _on_chain(self, int w, int u, int v, int cur):
        if w == v:
            return True
        if w == u:
            return False
        if self._orient_v(u, v, w) != 0:
            return False
        return (_acute(self.px[w], self.py[w], self.px[cur], self.py[cur],
                       self.px[v], self.py[v]) > 0
                and _acute(self.px[w], self.py[w], self.px[v], self.py[v],
                           self.px[cur], self.py[cur]) > 0)

    cdef void _seed_polygon_edge(self, int u, int v,
                                 vector[signed char]& dead) except *:
        cdef int cur = u
        cdef long guard = 0
        cdef int t0, t, i, base, nxt, prv, nb
        cdef bint found
        cdef vector[int] stack
        cdef long fan_guard
        while cur != v:
            found = False
            t0 = self.vert_tri[cur]
            t = t0
            fan_guard = 0
            while True:
                i = self._slot_of(t, cur)
                if not self._is_ghost(t):
                    base = 3 * t
                    nxt = self.tv[base + _next(i)]
                    prv = self.tv[base + _prev(i)]
                    if self.tc[base + _prev(i)] and self._on_chain(nxt, u, v, cur):
                        if not dead[t]:
                            dead[t] = 1
                            stack.clear()
                            stack.push_back(t)
                            self._flood(stack, dead)
                        cur = nxt
                        found = True
                        break
                    if self.tc[base + _next(i)] and self._on_chain(prv, u, v, cur):
                        nb = self.tn[base + _next(i)]
                        if nb >= 0 and not self._is_ghost(nb) and not dead[nb]:
                            dead[nb] = 1
                            stack.clear()
                            stack.push_back(nb)
                            self._flood(stack, dead)
                        cur = prv
                        found = True
                        break
                t = self.tn[3 * t + _next(i)]
                fan_guard += 1
                if t == t0 or fan_guard > <long>self.alive.size():
                    break
            if not found:
                raise InternalInvariantError(
                    f"polygon edge ({u}, {v}) is not covered by constrained edges")
            guard += 1
            if guard > <long>self.px.size():
                raise InternalInvariantError("polygon chain walk did not terminate")


def build_cdt_arrays(px, py, order, seg_a, seg_b, polys):
    """Compiled twin of `_pycore.build_cdt_arrays`; same contract."""
    cdef _Build b = _Build()
    cdef double[::1] pxv = np.ascontiguousarray(px, dtype=np.float64)
    cdef double[::1] pyv = np.ascontiguousarray(py, dtype=np.float64)
    cdef long[::1] orderv = np.ascontiguousarray(order, dtype=np.int64)
    cdef int n = pxv.shape[0]
    cdef int i
    b.px.resize(n)
    b.py.resize(n)
    b.vert_tri.resize(n)
    for i in range(n):
        b.px[i] = pxv[i]
        b.py[i] = pyv[i]
        b.vert_tri[i] = -1
    cdef vector[int] order_c
    order_c.resize(orderv.shape[0])
    for i in range(orderv.shape[0]):
        order_c[i] = <int>orderv[i]
    b.seed(order_c)
    for i in range(3, <int>order_c.size()):
        b.insert(order_c[i])
    cdef int[::1] sa = np.ascontiguousarray(seg_a, dtype=np.int32)
    cdef int[::1] sb = np.ascontiguousarray(seg_b, dtype=np.int32)
    for i in range(sa.shape[0]):
        b.enforce(sa[i], sb[i], i)
    # classification
    cdef int ntri = b._ntri()
    cdef vector[signed char] dead
    dead.resize(ntri)
    cdef vector[int] stack
    cdef int t
    for t in range(ntri):
        dead[t] = 0
    for t in range(ntri):
        if b.alive[t] and b._is_ghost(t):
            dead[t] = 1
            stack.push_back(t)
    b._flood(stack, dead)
    cdef int m, j
    for cycle in polys:
        m = len(cycle)
        for j in range(m):
            b._seed_polygon_edge(cycle[j], cycle[(j + 1) % m], dead)
    # compaction
    cdef vector[int] remap
    remap.resize(ntri)
    cdef int nkeep = 0
    for t in range(ntri):
        if b.alive[t] and not dead[t]:
            remap[t] = nkeep
            nkeep += 1
        else:
            remap[t] = -1
    tri_v = np.empty((nkeep, 3), dtype=np.int32)
    tri_n = np.empty((nkeep, 3), dtype=np.int32)
    tri_c = np.empty((nkeep, 3), dtype=np.uint8)
    tri_s = np.empty((nkeep, 3), dtype=np.int32)
    cdef int[:, ::1] tvv = tri_v
    cdef int[:, ::1] tnv = tri_n
    cdef unsigned char[:, ::1] tcv = tri_c
    cdef int[:, ::1] tsv = tri_s
    cdef int k, base, s, nb
    for t in range(ntri):
        k = remap[t]
        if k < 0:
            continue
        base = 3 * t
        for s in range(3):
            tvv[k, s] = b.tv[base + s]
            nb = b.tn[base + s]
            tnv[k, s] = remap[nb] if nb >= 0 else -1
            tcv[k, s] = <unsigned char>b.tc[base + s]
            tsv[k, s] = b.ts[base + s]
    return tri_v, tri_n, tri_c, tri_s


# ---------------------------------------------------------------------------
# refinement sweep


cdef class _Refine:
    cdef vector[double] vx, vy
    cdef vector[signed char] vkind
    cdef vector[int] tv, tn, ts
    cdef vector[signed char] tc
    cdef vector[int] seg_a, seg_b
    cdef double tol
    cdef long steiner, checks, flips, skipped

    cdef int _ntri(self):
        return <int>(self.tv.size() // 3)

    cdef int _nslot(self, int t, int nb) except -2:
        cdef int base = 3 * t
        if self.tn[base] == nb:
            return 0
        if self.tn[base + 1] == nb:
            return 1
        if self.tn[base + 2] == nb:
            return 2
        raise InternalInvariantError(f"triangles {t} and {nb} not adjacent")

    cdef int _slot_of_vertex(self, int t, int v) except -2:
        cdef int base = 3 * t
        if self.tv[base] == v:
            return 0
        if self.tv[base + 1] == v:
            return 1
        if self.tv[base + 2] == v:
            return 2
        raise InternalInvariantError(f"vertex {v} not in triangle {t}")

    cdef bint _apex_projects_inside(self, int tri, int s):
        cdef int base = 3 * tri
        cdef int a1 = self.tv[base + s]
        cdef int a2 = self.tv[base + _next(s)]
        cdef int a3 = self.tv[base + _prev(s)]
        return (_acute(self.vx[a1], self.vy[a1], self.vx[a2], self.vy[a2],
                       self.vx[a3], self.vy[a3]) > 0
                and _acute(self.vx[a1], self.vy[a1], self.vx[a3], self.vy[a3],
                           self.vx[a2], self.vy[a2]) > 0)

    cdef int _probe(self, double xx, double xy, int tri, int slot,
                    double max_dist, int* hit_tri, int* hit_slot) except -2:
        """Wall probe; returns 1 on hit (hit_tri/hit_slot anchored on the
        side facing x), 0 otherwise.  Mirrors refine.probe_for_wall."""
        self.checks += 1
        cdef double lam2 = max_dist * max_dist
        cdef int ai = self.tv[3 * tri + _next(slot)]
        cdef int aj = self.tv[3 * tri + _prev(slot)]
        cdef int prev_tri = tri
        cdef int cur_tri = tri, cur_slot = slot
        cdef long limit = 4 * <long>self._ntri() + 16
        cdef long step
        cdef double aix, aiy, ajx, ajy, dx, dy, cr, d2, di, dj
        cdef int o, apex, oa, nb, far, fslot, sidx, ak
        for step in range(limit):
            aix = self.vx[ai]; aiy = self.vy[ai]
            ajx = self.vx[aj]; ajy = self.vy[aj]
            if (_acute(xx, xy, aix, aiy, ajx, ajy) <= 0
                    or _acute(xx, xy, ajx, ajy, aix, aiy) <= 0):
                return 0
            dx = ajx - aix; dy = ajy - aiy
            cr = dx * (xy - aiy) - dy * (xx - aix)
            d2 = cr * cr / (dx * dx + dy * dy)
            if d2 >= lam2:
                return 0
            if self.tc[3 * cur_tri + cur_slot]:
                o = _orient(aix, aiy, ajx, ajy, xx, xy)
                apex = self.tv[3 * cur_tri + cur_slot]
                oa = _orient(aix, aiy, ajx, ajy, self.vx[apex], self.vy[apex])
                if o == 0 or oa == 0 or (o > 0) == (oa > 0):
                    hit_tri[0] = cur_tri
                    hit_slot[0] = cur_slot
                    return 1
                nb = self.tn[3 * cur_tri + cur_slot]
                if nb < 0:
                    hit_tri[0] = cur_tri
                    hit_slot[0] = cur_slot
                    return 1
                hit_tri[0] = nb
                hit_slot[0] = self._nslot(nb, cur_tri)
                return 1
            o = _orient(aix, aiy, ajx, ajy, xx, xy)
            nb = self.tn[3 * cur_tri + cur_slot]
            if o != 0:
                apex = self.tv[3 * cur_tri + cur_slot]
                oa = _orient(aix, aiy, ajx, ajy, self.vx[apex], self.vy[apex])
                far = nb if (o > 0) == (oa > 0) else cur_tri
            else:
                if prev_tri == cur_tri:
                    far = nb
                elif prev_tri == nb:
                    far = cur_tri
                else:
                    far = nb
            if far < 0:
                raise InternalInvariantError(
                    "wall probe reached an unconstrained boundary edge; region not closed")
            fslot = -1
            for sidx in range(3):
                if self.tv[3 * far + sidx] != ai and self.tv[3 * far + sidx] != aj:
                    fslot = sidx
                    break
            ak = self.tv[3 * far + fslot]
            di = (self.vx[ak] - aix) ** 2 + (self.vy[ak] - aiy) ** 2
            dj = (self.vx[ak] - ajx) ** 2 + (self.vy[ak] - ajy) ** 2
            if di >= dj:
                cur_tri = far
                cur_slot = self._slot_of_vertex(far, aj)
                aj = ai
                ai = ak
            else:
                cur_tri = far
                cur_slot = self._slot_of_vertex(far, ai)
                ai = ak
            prev_tri = far
        raise InternalInvariantError("wall probe did not terminate")

    cdef void _flip(self, int t, int st) except *:
        """Mirror of TriMesh.flip with the canonical slot layout."""
        cdef int u = self.tn[3 * t + st]
        cdef int su = self._nslot(u, t)
        cdef int at = self.tv[3 * t + st]
        cdef int p = self.tv[3 * t + _next(st)]
        cdef int q = self.tv[3 * t + _prev(st)]
        cdef int au = self.tv[3 * u + su]
        cdef int nA = self.tn[3 * t + _next(st)]
        cdef int fA = self.tc[3 * t + _next(st)]
        cdef int sA = self.ts[3 * t + _next(st)]
        cdef int nB = self.tn[3 * t + _prev(st)]
        cdef int fB = self.tc[3 * t + _prev(st)]
        cdef int sB = self.ts[3 * t + _prev(st)]
        cdef int nC = self.tn[3 * u + _next(su)]
        cdef int fC = self.tc[3 * u + _next(su)]
        cdef int sC = self.ts[3 * u + _next(su)]
        cdef int nD = self.tn[3 * u + _prev(su)]
        cdef int fD = self.tc[3 * u + _prev(su)]
        cdef int sD = self.ts[3 * u + _prev(su)]
        self.tv[3 * t] = at; self.tv[3 * t + 1] = p; self.tv[3 * t + 2] = au
        self.tn[3 * t] = nC; self.tn[3 * t + 1] = u; self.tn[3 * t + 2] = nB
        self.tc[3 * t] = <signed char>fC; self.tc[3 * t + 1] = 0
        self.tc[3 * t + 2] = <signed char>fB
        self.ts[3 * t] = sC; self.ts[3 * t + 1] = -1; self.ts[3 * t + 2] = sB
        self.tv[3 * u] = at; self.tv[3 * u + 1] = au; self.tv[3 * u + 2] = q
        self.tn[3 * u] = nD; self.tn[3 * u + 1] = nA; self.tn[3 * u + 2] = t
        self.tc[3 * u] = <signed char>fD; self.tc[3 * u + 1] = <signed char>fA
        self.tc[3 * u + 2] = 0
        self.ts[3 * u] = sD; self.ts[3 * u + 1] = sA; self.ts[3 * u + 2] = -1
        if nC >= 0:
            self.tn[3 * nC + self._nslot(nC, u)] = t
        if nA >= 0:
            self.tn[3 * nA + self._nslot(nA, t)] = u

    cdef void _legalize(self, int vid, int t0, int s0,
                        vector[int]& dirty) except *:
        cdef vector[int] stack
        stack.push_back(3 * t0 + s0)
        cdef int h, t, s, base, nb, k, a, b, c, d
        while stack.size() > 0:
            h = stack.back(); stack.pop_back()
            t = h // 3; s = h % 3
            base = 3 * t
            if self.tv[base + s] != vid:
                raise InternalInvariantError("legalization handle went stale")
            if self.tc[base + s]:
                continue
            nb = self.tn[base + s]
            if nb < 0:
                continue
            k = self._nslot(nb, t)
            a = self.tv[base]; b = self.tv[base + 1]; c = self.tv[base + 2]
            d = self.tv[3 * nb + k]
            if _incircle(self.vx[a], self.vy[a], self.vx[b], self.vy[b],
                         self.vx[c], self.vy[c], self.vx[d], self.vy[d]) <= 0:
                continue
            self._flip(t, s)
            self.flips += 1
            dirty.push_back(t)
            dirty.push_back(nb)
            stack.push_back(3 * nb + 0)
            stack.push_back(3 * t + 0)

    cdef int _split(self, int t, int st, double ptx, double pty, int sid,
                    vector[int]& prods) except -2:
        """Mirror of TriMesh._split; returns the new Steiner vertex id."""
        cdef int w = self.tv[3 * t + st]
        cdef int u = self.tv[3 * t + _next(st)]
        cdef int v = self.tv[3 * t + _prev(st)]
        cdef int opp = self.tn[3 * t + st]
        cdef int svid = <int>self.vx.size()
        self.vx.push_back(ptx)
        self.vy.push_back(pty)
        self.vkind.push_back(1)
        cdef int nA = self.tn[3 * t + _next(st)]
        cdef int fA = self.tc[3 * t + _next(st)]
        cdef int sA = self.ts[3 * t + _next(st)]
        cdef int nB = self.tn[3 * t + _prev(st)]
        cdef int fB = self.tc[3 * t + _prev(st)]
        cdef int sB = self.ts[3 * t + _prev(st)]
        cdef int t2 = self._ntri()
        self.tv[3 * t] = u; self.tv[3 * t + 1] = svid; self.tv[3 * t + 2] = w
        self.tn[3 * t] = t2; self.tn[3 * t + 1] = nB; self.tn[3 * t + 2] = -1
        self.tc[3 * t] = 0; self.tc[3 * t + 1] = <signed char>fB; self.tc[3 * t + 2] = 1
        self.ts[3 * t] = -1; self.ts[3 * t + 1] = sB; self.ts[3 * t + 2] = sid
        self.tv.push_back(svid); self.tv.push_back(v); self.tv.push_back(w)
        self.tn.push_back(nA); self.tn.push_back(t); self.tn.push_back(-1)
        self.tc.push_back(<signed char>fA); self.tc.push_back(0); self.tc.push_back(1)
        self.ts.push_back(sA); self.ts.push_back(-1); self.ts.push_back(sid)
        if nA >= 0:
            self.tn[3 * nA + self._nslot(nA, t)] = t2
        prods.push_back(t)
        prods.push_back(t2)
        cdef int o, so, x, nC, fC, sC, nD, fD, sD, o2
        if opp >= 0:
            o = opp
            so = self._nslot_via_edge(o, u, v)
            x = self.tv[3 * o + so]
            nC = self.tn[3 * o + _next(so)]
            fC = self.tc[3 * o + _next(so)]
            sC = self.ts[3 * o + _next(so)]
            nD = self.tn[3 * o + _prev(so)]
            fD = self.tc[3 * o + _prev(so)]
            sD = self.ts[3 * o + _prev(so)]
            o2 = self._ntri()
            self.tv[3 * o] = v; self.tv[3 * o + 1] = svid; self.tv[3 * o + 2] = x
            self.tn[3 * o] = o2; self.tn[3 * o + 1] = nD; self.tn[3 * o + 2] = t2
            self.tc[3 * o] = 0; self.tc[3 * o + 1] = <signed char>fD
            self.tc[3 * o + 2] = 1
            self.ts[3 * o] = -1; self.ts[3 * o + 1] = sD; self.ts[3 * o + 2] = sid
            self.tv.push_back(svid); self.tv.push_back(u); self.tv.push_back(x)
            self.tn.push_back(nC); self.tn.push_back(o); self.tn.push_back(t)
            self.tc.push_back(<signed char>fC); self.tc.push_back(0)
            self.tc.push_back(1)
            self.ts.push_back(sC); self.ts.push_back(-1); self.ts.push_back(sid)
            if nC >= 0:
                self.tn[3 * nC + self._nslot(nC, o)] = o2
            self.tn[3 * t + 2] = o2
            self.tn[3 * t2 + 2] = o
            prods.push_back(o)
            prods.push_back(o2)
        return svid

    cdef int _nslot_via_edge(self, int o, int u, int v) except -2:
        # slot of o's vertex that is neither u nor v
        cdef int base = 3 * o
        cdef int s
        for s in range(3):
            if self.tv[base + s] != u and self.tv[base + s] != v:
                return s
        raise InternalInvariantError("degenerate neighbor in split")

    cdef double _seg_param(self, double x, double y, int sid):
        cdef int a = self.seg_a[sid]
        cdef int b = self.seg_b[sid]
        cdef double ax = self.vx[a], ay = self.vy[a]
        cdef double dx = self.vx[b] - ax, dy = self.vy[b] - ay
        return ((x - ax) * dx + (y - ay) * dy) / (dx * dx + dy * dy)

    cdef int _insert_foot(self, int a1, int hit_tri, int hit_slot,
                          vector[int]& dirty) except -2:
        cdef int sid = self.ts[3 * hit_tri + hit_slot]
        if sid < 0:
            raise InternalInvariantError("constrained edge without a source segment")
        cdef int sa = self.seg_a[sid]
        cdef int sb = self.seg_b[sid]
        cdef double ax = self.vx[sa], ay = self.vy[sa]
        cdef double dx = self.vx[sb] - ax, dy = self.vy[sb] - ay
        cdef double t = ((self.vx[a1] - ax) * dx + (self.vy[a1] - ay) * dy) / (dx * dx + dy * dy)
        cdef double footx = ax + t * dx
        cdef double footy = ay + t * dy
        cdef int u = self.tv[3 * hit_tri + _next(hit_slot)]
        cdef int v = self.tv[3 * hit_tri + _prev(hit_slot)]
        cdef double tu = self._seg_param(self.vx[u], self.vy[u], sid)
        cdef double tw = self._seg_param(self.vx[v], self.vy[v], sid)
        cdef double lo = tu if tu < tw else tw
        cdef double hi = tw if tu < tw else tu
        if not (lo + self.tol < t < hi - self.tol):
            self.skipped += 1
            return 0
        # fragment the triangle on the same side as a1 first
        cdef int o = _orient(self.vx[u], self.vy[u], self.vx[v], self.vy[v],
                             self.vx[a1], self.vy[a1])
        cdef int apex = self.tv[3 * hit_tri + hit_slot]
        cdef int oa = _orient(self.vx[u], self.vy[u], self.vx[v], self.vy[v],
                              self.vx[apex], self.vy[apex])
        cdef int nb
        if o != 0 and oa != 0 and (o > 0) != (oa > 0):
            nb = self.tn[3 * hit_tri + hit_slot]
            if nb >= 0:
                hit_slot = self._nslot(nb, hit_tri)
                hit_tri = nb
        cdef vector[int] prods
        cdef int svid = self._split(hit_tri, hit_slot, footx, footy, sid, prods)
        self.steiner += 1
        cdef size_t pi
        for pi in range(prods.size()):
            dirty.push_back(prods[pi])
        for pi in range(prods.size()):
            self._legalize(svid, prods[pi],
                           self._slot_of_vertex(prods[pi], svid), dirty)
        return 1

    cdef int _refine_pair(self, int tri, int s, vector[int]& dirty) except -2:
        cdef int base = 3 * tri
        if self.tc[base + _next(s)] or self.tc[base + _prev(s)]:
            return 0
        if not self._apex_projects_inside(tri, s):
            return 0
        cdef int a1 = self.tv[base + s]
        cdef int a2 = self.tv[base + _next(s)]
        cdef int a3 = self.tv[base + _prev(s)]
        cdef double d2 = (self.vx[a2] - self.vx[a1]) ** 2 + (self.vy[a2] - self.vy[a1]) ** 2
        cdef double d3 = (self.vx[a3] - self.vx[a1]) ** 2 + (self.vy[a3] - self.vy[a1]) ** 2
        cdef double lam = sqrt(d2 if d2 <= d3 else d3)
        cdef int hit_tri = -1, hit_slot = -1
        cdef int found = self._probe(self.vx[a1], self.vy[a1], tri, s, lam,
                                     &hit_tri, &hit_slot)
        cdef double a1x, a1y, a2x, a2y, a3x, a3y
        cdef double bax, bay, cax, cay, b2, c2, dd, ox, oy, ux, uy, norm2, tt
        cdef double px_, py_
        if not found:
            # second probe point: far intersection of the circumcircle with
            # the line through a1 parallel to a2-a3
            a1x = self.vx[a1]; a1y = self.vy[a1]
            a2x = self.vx[a2]; a2y = self.vy[a2]
            a3x = self.vx[a3]; a3y = self.vy[a3]
            bax = a2x - a1x; bay = a2y - a1y
            cax = a3x - a1x; cay = a3y - a1y
            b2 = bax * bax + bay * bay
            c2 = cax * cax + cay * cay
            dd = 2.0 * (bax * cay - bay * cax)
            ox = a1x + (cay * b2 - bay * c2) / dd
            oy = a1y + (bax * c2 - cax * b2) / dd
            ux = a3x - a2x; uy = a3y - a2y
            norm2 = ux * ux + uy * uy
            tt = ((ox - a1x) * ux + (oy - a1y) * uy) / norm2
            if tt == 0.0:
                return 0
            px_ = a1x + 2.0 * tt * ux
            py_ = a1y + 2.0 * tt * uy
            found = self._probe(px_, py_, tri, s, lam, &hit_tri, &hit_slot)
        if not found:
            return 0
        return self._insert_foot(a1, hit_tri, hit_slot, dirty)

    cdef void run(self) except *:
        cdef int nt = self._ntri()
        cdef deque[int] queue
        cdef vector[signed char] in_queue
        in_queue.resize(nt)
        cdef int t, s, cc
        for t in range(nt):
            cc = self.tc[3 * t] + self.tc[3 * t + 1] + self.tc[3 * t + 2]
            if cc == 1:
                queue.push_back(t)
                in_queue[t] = 1
        for t in range(nt):
            cc = self.tc[3 * t] + self.tc[3 * t + 1] + self.tc[3 * t + 2]
            if cc != 1:
                queue.push_back(t)
                in_queue[t] = 1
        cdef vector[int] dirty
        cdef size_t di
        cdef int d, inserted
        while queue.size() > 0:
            t = queue.front(); queue.pop_front()
            in_queue[t] = 0
            dirty.clear()
            inserted = 0
            for s in range(3):
                if self._refine_pair(t, s, dirty):
                    inserted = 1
                    break
            if inserted:
                while <int>in_queue.size() < self._ntri():
                    in_queue.push_back(0)
                for di in range(dirty.size()):
                    d = dirty[di]
                    if not in_queue[d]:
                        in_queue[d] = 1
                        queue.push_back(d)
                if not in_queue[t]:
                    in_queue[t] = 1
                    queue.push_back(t)


def refine_arrays(vx, vy, vkind, tv, tn, tc, ts, seg_a, seg_b, double tol):
    """Compiled walls-first refinement sweep; mirrors the pure loop in
    `clearmesh.refine`.  Returns the grown arrays plus counters."""
    cdef _Refine r = _Refine()
    cdef double[::1] vxv = np.ascontiguousarray(vx, dtype=np.float64)
    cdef double[::1] vyv = np.ascontiguousarray(vy, dtype=np.float64)
    cdef unsigned char[::1] vkv = np.ascontiguousarray(vkind, dtype=np.uint8)
    cdef int[::1] tvv = np.ascontiguousarray(tv, dtype=np.int32).ravel()
    cdef int[::1] tnv = np.ascontiguousarray(tn, dtype=np.int32).ravel()
    cdef int[::1] tcv = np.ascontiguousarray(tc, dtype=np.int32).ravel()
    cdef int[::1] tsv = np.ascontiguousarray(ts, dtype=np.int32).ravel()
    cdef int[::1] sav = np.ascontiguousarray(seg_a, dtype=np.int32)
    cdef int[::1] sbv = np.ascontiguousarray(seg_b, dtype=np.int32)
    cdef int i
    r.tol = tol
    r.vx.resize(vxv.shape[0]); r.vy.resize(vxv.shape[0])
    r.vkind.resize(vxv.shape[0])
    for i in range(vxv.shape[0]):
        r.vx[i] = vxv[i]
        r.vy[i] = vyv[i]
        r.vkind[i] = <signed char>vkv[i]
    r.tv.resize(tvv.shape[0]); r.tn.resize(tvv.shape[0])
    r.tc.resize(tvv.shape[0]); r.ts.resize(tvv.shape[0])
    for i in range(tvv.shape[0]):
        r.tv[i] = tvv[i]
        r.tn[i] = tnv[i]
        r.tc[i] = <signed char>tcv[i]
        r.ts[i] = tsv[i]
    r.seg_a.resize(sav.shape[0]); r.seg_b.resize(sav.shape[0])
    for i in range(sav.shape[0]):
        r.seg_a[i] = sav[i]
        r.seg_b[i] = sbv[i]
    r.steiner = 0; r.checks = 0; r.flips = 0; r.skipped = 0
    r.run()
    nvx = np.empty(r.vx.size(), dtype=np.float64)
    nvy = np.empty(r.vx.size(), dtype=np.float64)
    nvk = np.empty(r.vx.size(), dtype=np.uint8)
    cdef double[::1] nvxv = nvx
    cdef double[::1] nvyv = nvy
    cdef unsigned char[::1] nvkv = nvk
    for i in range(<int>r.vx.size()):
        nvxv[i] = r.vx[i]
        nvyv[i] = r.vy[i]
        nvkv[i] = <unsigned char>r.vkind[i]
    ntv = np.empty(r.tv.size(), dtype=np.int32)
    ntn = np.empty(r.tv.size(), dtype=np.int32)
    ntc = np.empty(r.tv.size(), dtype=np.int32)
    nts = np.empty(r.tv.size(), dtype=np.int32)
    cdef int[::1] ntvv = ntv
    cdef int[::1] ntnv = ntn
    cdef int[::1] ntcv = ntc
    cdef int[::1] ntsv = nts
    for i in range(<int>r.tv.size()):
        ntvv[i] = r.tv[i]
        ntnv[i] = r.tn[i]
        ntcv[i] = r.tc[i]
        ntsv[i] = r.ts[i]
    return (nvx, nvy, nvk, ntv, ntn, ntc, nts,
            r.steiner, r.checks, r.flips, r.skipped)
