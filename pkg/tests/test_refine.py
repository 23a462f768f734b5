import math

import numpy as np
import pytest

from clearmesh import core
from clearmesh.cli import generate_obstacles
from clearmesh.errors import InputError
from clearmesh.geom import segments_properly_cross
from clearmesh.mesh import EdgeRef, ObstacleSet, TriMesh, build_cdt
from clearmesh.refine import (
    RefineStats,
    apex_projects_inside,
    find_pinch_vertices,
    legalize_around,
    probe_for_wall,
    refine,
    refine_pair,
)

from test_mesh import random_scene


def fig_triangle():
    """Apex (0,2) over constrained base (-1,0)-(3,0): the canonical
    one-insertion configuration."""
    return TriMesh.from_triangles(
        [(0, 2), (-1, 0), (3, 0)], [(0, 1, 2)], constrained=[(1, 2)]
    )


def apex_slot_of(mesh, t, vid):
    return mesh._slot_of_vertex(t, vid)


class TestApexProjectsInside:
    def test_equilateral(self):
        m = TriMesh.from_triangles(
            [(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)], [(0, 1, 2)]
        )
        for s in range(3):
            assert apex_projects_inside(m, 0, s)

    def test_right_triangle_endpoint(self):
        m = TriMesh.from_triangles([(0, 1), (0, 0), (2, 0)], [(0, 1, 2)])
        s = apex_slot_of(m, 0, 0)  # apex (0,1) projects onto the corner (0,0)
        assert not apex_projects_inside(m, 0, s)

    def test_interior_projection(self):
        m = TriMesh.from_triangles([(1, 5), (0, 0), (3, 0)], [(0, 1, 2)])
        s = apex_slot_of(m, 0, 0)
        assert apex_projects_inside(m, 0, s)


class TestProbe:
    def test_fig_hit(self):
        m = fig_triangle()
        res = probe_for_wall(m, (0, 2), EdgeRef(0, apex_slot_of(m, 0, 0)), math.sqrt(5))
        assert res.found
        assert set(m.edge_vertices(res.hit_edge)) == {1, 2}

    def test_distance_gate(self):
        # |XX'| = 2 >= 1.5 stops the probe
        m = fig_triangle()
        res = probe_for_wall(m, (0, 2), EdgeRef(0, apex_slot_of(m, 0, 0)), 1.5)
        assert res == (False, None)

    def two_tri_square(self):
        # square (-2,0),(2,0),(2,-1),(-2,-1); bottom constrained, top open
        return TriMesh.from_triangles(
            [(-2, 0), (2, 0), (2, -1), (-2, -1)],
            [(0, 1, 2), (0, 2, 3)],
            constrained=[(3, 2)],
        )

    def test_multi_hop_walk(self):
        m = self.two_tri_square()
        top = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 1})
        if top.tri != 0:
            top = m.opposite(top)
        # x = (0, 0.5) above the open top edge; distances along the walk:
        # top 0.5, diagonal |4*0.5 + 2| / sqrt(17) ~= 0.970, bottom 1.5
        res = probe_for_wall(m, (0, 0.5), top, 2.0)
        assert res.found
        assert set(m.edge_vertices(res.hit_edge)) == {2, 3}
        # the bottom wall sits at distance 1.5 >= 1, out of a tighter budget
        res = probe_for_wall(m, (0, 0.5), top, 1.0)
        assert res == (False, None)

    def test_hit_matches_direct_computation(self):
        m = self.two_tri_square()
        top = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 1})
        if top.tri != 0:
            top = m.opposite(top)
        diag_dist = abs(4 * 0.5 - (-1) * 2) / math.sqrt(17.0)
        assert diag_dist < 1.0  # the walk may pass the diagonal either way
        res = probe_for_wall(m, (0, 0.5), top, 1.6)
        assert res.found  # 1.5 < 1.6 reaches the bottom wall


class TestLegalize:
    def test_no_flip_when_delaunay(self):
        m = build_cdt(
            ObstacleSet(points=[(0, 0), (2, 0), (2, 2), (0, 2)], boundary=[0, 1, 2, 3])
        )
        stats = RefineStats()
        dirty = []
        e = next(e for e in m.iter_edges() if not m.is_constrained(e))
        vid = m.tv[3 * e.tri + e.slot]
        legalize_around(m, vid, e, stats, dirty)
        assert stats.flips == 0

    def test_single_flip(self):
        pts = [(0, 0), (3, 0), (3.2, 1), (0, 1)]
        m = TriMesh.from_triangles(pts, [(0, 1, 2), (0, 2, 3)])
        diag = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 2})
        bad = not m.is_locally_delaunay(diag)
        if diag.tri != 0:
            diag = m.opposite(diag)
        stats = RefineStats()
        legalize_around(m, m.tv[3 * diag.tri + diag.slot], diag, stats, [])
        if bad:
            assert stats.flips == 1
        for e in m.iter_edges():
            if m.opposite(e) is not None:
                assert m.is_locally_delaunay(e)

    def test_cascade_on_fan(self):
        # split a wall inside a pre-built CDT and confirm full legality after
        obs = random_scene(2, 50, n_walls=6)
        m = build_cdt(obs)
        assert m.is_cdt()
        wall = next(e for e in m.iter_edges() if m.is_constrained(e))
        u, v = m.edge_vertices(wall)
        mid = ((m.vx[u] + m.vx[v]) / 2, (m.vy[u] + m.vy[v]) / 2)
        svid, prods = m._split(wall, type(m.point(0))(*mid), m.segment_of(wall))
        stats = RefineStats()
        for t in prods:
            legalize_around(m, svid, EdgeRef(t, m._slot_of_vertex(t, svid)), stats, [])
        m.validate()
        assert m.is_cdt()


class TestRefineFig:
    def test_single_insertion_at_foot(self):
        m = fig_triangle()
        stats = refine(m)
        assert stats.steiner_inserted == 1
        assert m.n_vertices == 4
        assert m.point(3) == (0.0, 0.0)
        assert m.n_triangles == 2
        assert m.is_cdt()
        m.validate()

    def test_pinch_before_and_after(self):
        m = fig_triangle()
        found = find_pinch_vertices(m)
        assert len(found) == 1
        vid, (tri, slot), wall = found[0]
        assert vid == 0  # the apex itself
        assert set(m.edge_vertices(wall)) == {1, 2}
        refine(m)
        assert find_pinch_vertices(m) == []

    def test_right_triangle_untouched(self):
        m = TriMesh.from_triangles(
            [(0, 1), (0, 0), (2, 0)], [(0, 1, 2)], constrained=[(1, 2)]
        )
        stats = refine(m)
        assert stats.steiner_inserted == 0
        assert m.n_triangles == 1

    def test_second_probe_point_insertion_uses_apex_foot(self):
        # find real side-pairs where the apex's own probe fails but the
        # circle point's succeeds; the inserted Steiner vertex must still be
        # the apex's projection onto the hit wall, not the circle point's
        from clearmesh.geom import parallel_circle_point

        cases = 0
        for seed in range(6):
            m = build_cdt(random_scene(seed, 60, n_walls=7))
            for t in range(m.n_triangles):
                for s in range(3):
                    base = 3 * t
                    if m.tc[base + (s + 1) % 3] or m.tc[base + (s + 2) % 3]:
                        continue
                    if not apex_projects_inside(m, t, s):
                        continue
                    a1 = m.tv[base + s]
                    a2 = m.tv[base + (s + 1) % 3]
                    a3 = m.tv[base + (s + 2) % 3]
                    lam = min(
                        math.dist(m.point(a1), m.point(a2)),
                        math.dist(m.point(a1), m.point(a3)),
                    )
                    if probe_for_wall(m, m.point(a1), EdgeRef(t, s), lam).found:
                        continue
                    p = parallel_circle_point(
                        m.point(a1), m.point(a2), m.point(a3)
                    )
                    if p == m.point(a1):
                        continue
                    res = probe_for_wall(m, p, EdgeRef(t, s), lam)
                    if not res.found:
                        continue
                    work = m.copy()
                    nv = work.n_vertices
                    stats = RefineStats()
                    if not refine_pair(work, t, s, 1e-12, stats, []):
                        continue  # foot skipped at a sub-edge endpoint
                    cases += 1
                    sid = m.segment_of(res.hit_edge)
                    expected, _ = m.snap_to_segment(m.point(a1), sid)
                    assert work.point(nv) == expected
            if cases:
                break
        assert cases > 0


class TestRefineRandom:
    def make(self, seed, n, walls):
        obs = random_scene(seed, n, n_walls=walls)
        return build_cdt(obs)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_pinch_free_and_cdt(self, seed):
        m = self.make(seed, 80 + 17 * seed, walls=8)
        refine(m)
        m.validate()
        assert m.is_cdt()
        assert find_pinch_vertices(m) == []

    def test_idempotent(self):
        m = self.make(9, 120, walls=10)
        refine(m)
        again = refine(m)
        assert again.steiner_inserted == 0

    def test_only_steiner_added_and_constraints_covered(self):
        m = self.make(4, 90, walls=9)
        n0 = m.n_vertices
        refine(m)
        assert all(m.vkind[v] == 1 for v in range(n0, m.n_vertices))
        for sid, (a, b) in enumerate(m.segments):
            chain = m.constraint_chain(sid)
            assert chain[0] == a and chain[-1] == b
            # walk the chain: consecutive members joined by constrained edges
            params = [m.segment_param(v, sid) for v in chain]
            assert params == sorted(params)

    def test_area_preserved(self):
        m = self.make(5, 100, walls=8)
        a0 = m.total_area()
        refine(m)
        assert m.total_area() == pytest.approx(a0, rel=1e-9)

    def test_probe_hits_verify(self):
        # wall-probe soundness: every hit admits the geometric certificate
        m = self.make(6, 70, walls=7)
        stats = RefineStats()
        checked = 0
        for t in range(m.n_triangles):
            for s in range(3):
                base = 3 * t
                if m.tc[base + (s + 1) % 3] or m.tc[base + (s + 2) % 3]:
                    continue
                if not apex_projects_inside(m, t, s):
                    continue
                a1 = m.tv[base + s]
                a2 = m.tv[base + (s + 1) % 3]
                a3 = m.tv[base + (s + 2) % 3]
                lam = min(
                    math.dist(m.point(a1), m.point(a2)),
                    math.dist(m.point(a1), m.point(a3)),
                )
                res = probe_for_wall(m, m.point(a1), EdgeRef(t, s), lam, stats)
                if not res.found:
                    continue
                checked += 1
                # certificate: some wall point within lam of the apex whose
                # sight line crosses the pair's opposite side
                u, v = m.edge_vertices(res.hit_edge)
                pu, pv = m.point(u), m.point(v)
                ok = False
                for k in range(1001):
                    f = k / 1000.0
                    y = (
                        pu.x + f * (pv.x - pu.x),
                        pu.y + f * (pv.y - pu.y),
                    )
                    if math.dist(m.point(a1), y) < lam and segments_properly_cross(
                        m.point(a1), y, m.point(a2), m.point(a3)
                    ):
                        ok = True
                        break
                assert ok
        assert checked > 0

    def test_growth_band_at_paper_scale(self):
        obs = generate_obstacles(1227, 0)
        m = build_cdt(obs)
        p0, t0 = m.n_vertices, m.n_triangles
        refine(m)
        assert 1.02 <= m.n_vertices / p0 <= 1.35
        assert m.n_triangles / t0 <= 1.10

    def test_safe_zone_property(self):
        # after refinement every side-pair admits a disk of half the shorter
        # side sliding through the apex wedge: the center arc around the
        # apex at that radius stays clear of every wall
        for seed in (0, 5):
            m = self.make(seed, 60, walls=6)
            refine(m)
            wall_pts = []
            for e in m.iter_edges():
                if m.is_constrained(e):
                    u, v = m.edge_vertices(e)
                    for f in np.linspace(0.0, 1.0, 24):
                        wall_pts.append(
                            (
                                m.vx[u] + f * (m.vx[v] - m.vx[u]),
                                m.vy[u] + f * (m.vy[v] - m.vy[u]),
                            )
                        )
            W = np.asarray(wall_pts)
            for t in range(m.n_triangles):
                base = 3 * t
                for s in (0, 1, 2):
                    if m.tc[base + (s + 1) % 3] or m.tc[base + (s + 2) % 3]:
                        continue
                    a1 = m.tv[base + s]
                    a2 = m.tv[base + (s + 1) % 3]
                    a3 = m.tv[base + (s + 2) % 3]
                    d2 = math.dist(m.point(a1), m.point(a2))
                    d3 = math.dist(m.point(a1), m.point(a3))
                    if d2 > d3:
                        a2, a3 = a3, a2
                        d2, d3 = d3, d2
                    r = d2 / 2.0
                    p_in = (
                        (m.vx[a1] + m.vx[a2]) / 2,
                        (m.vy[a1] + m.vy[a2]) / 2,
                    )
                    p_out = (
                        (m.vx[a1] + m.vx[a3]) / 2,
                        (m.vy[a1] + m.vy[a3]) / 2,
                    )
                    cx, cy = _disk_center_path(m.point(a1), r, p_in, p_out)
                    d = np.hypot(
                        cx[:, None] - W[None, :, 0], cy[:, None] - W[None, :, 1]
                    ).min()
                    assert d >= r * (1 - 1e-6)


def _disk_center_path(apex, r, p_in, p_out, n=16):
    """Sampled taut path of a radius-r disk center between two gate
    midpoints: straight if it clears the apex disk, tangent-arc-tangent
    hugging it otherwise."""
    from clearmesh.channel import _Disk, _sweep, _tangent
    from clearmesh.geom import dist_point_segment, orient2d

    if dist_point_segment(apex, p_in, p_out) >= r * (1 - 1e-12):
        ts = np.linspace(0.0, 1.0, n)
        return (
            p_in[0] + (p_out[0] - p_in[0]) * ts,
            p_in[1] + (p_out[1] - p_in[1]) * ts,
        )
    sense = 1 if orient2d(p_in, p_out, apex) > 0 else -1
    disk = _Disk(apex[0], apex[1], r, sense)
    t1 = _tangent(_Disk(p_in[0], p_in[1], 0.0, 0), disk)
    t2 = _tangent(disk, _Disk(p_out[0], p_out[1], 0.0, 0))
    sweep = _sweep(t1[3], t2[2], sense)
    angs = t1[3] + sense * sweep * np.linspace(0.0, 1.0, n)
    xs = np.concatenate(
        (
            np.linspace(p_in[0], t1[1].x, n),
            apex[0] + r * np.cos(angs),
            np.linspace(t2[1].x, p_out[0], n),
        )
    )
    ys = np.concatenate(
        (
            np.linspace(p_in[1], t1[1].y, n),
            apex[1] + r * np.sin(angs),
            np.linspace(t2[1].y, p_out[1], n),
        )
    )
    return xs, ys


class TestNaiveOrder:
    def test_small_instance_matches_quality(self):
        obs = random_scene(8, 30, n_walls=4)
        core.set_backend("pure")
        try:
            m1 = build_cdt(obs)
            refine(m1, order="naive")
            assert find_pinch_vertices(m1) == []
            assert m1.is_cdt()
            m2 = build_cdt(obs)
            refine(m2, order="naive")
            assert m1.vx == m2.vx and m1.tv == m2.tv  # deterministic
        finally:
            core.set_backend("auto")

    def test_unknown_order_rejected(self):
        m = fig_triangle()
        with pytest.raises(InputError):
            refine(m, order="bogus")
