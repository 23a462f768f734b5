import math

import numpy as np
import pytest

from clearmesh.errors import InputError
from clearmesh.geom import orient2d, segments_properly_cross
from clearmesh.mesh import (
    EdgeRef,
    ObstacleSet,
    TriMesh,
    build_cdt,
    point_in_polygon,
)


def make_square(side=1.0):
    s = side
    return ObstacleSet(
        points=[(0, 0), (s, 0), (s, s), (0, s)], boundary=[0, 1, 2, 3]
    )


def random_scene(seed, n, n_walls=0, box=10.0):
    rng = np.random.default_rng([seed, n])
    pts = [(-box, -box), (box, -box), (box, box), (-box, box)]
    pts += [tuple(p) for p in rng.uniform(-box * 0.95, box * 0.95, size=(n, 2))]
    segs = []
    tries = 0
    while len(segs) < n_walls and tries < 400:
        tries += 1
        a, b = (int(v) for v in rng.integers(4, 4 + n, size=2))
        if a == b:
            continue
        if math.dist(pts[a], pts[b]) > box / 2:
            continue
        if any(
            not ({a, b} & {c, d})
            and segments_properly_cross(pts[a], pts[b], pts[c], pts[d])
            for c, d in segs
        ):
            continue
        segs.append((a, b))
    return ObstacleSet(points=pts, boundary=[0, 1, 2, 3], segments=segs)


def brute_locate(mesh, p):
    hits = []
    for t in range(mesh.n_triangles):
        a, b, c = mesh.triangle(t).vertices
        pa, pb, pc = mesh.point(a), mesh.point(b), mesh.point(c)
        if (
            orient2d(pa, pb, p) >= 0
            and orient2d(pb, pc, p) >= 0
            and orient2d(pc, pa, p) >= 0
        ):
            hits.append(t)
    return min(hits) if hits else None


def boundary_loop_count(mesh):
    """Number of closed loops formed by the region-boundary edges."""
    edges = {}
    for e in mesh.iter_edges():
        if mesh.tn[3 * e.tri + e.slot] < 0:
            u, v = mesh.edge_vertices(e)
            edges[u] = v  # boundary read CCW by its triangle: u -> v
    loops = 0
    seen = set()
    for u in list(edges):
        if u in seen:
            continue
        loops += 1
        cur = u
        while cur not in seen:
            seen.add(cur)
            cur = edges[cur]
    return loops


def euler_ok(mesh):
    verts = set()
    nedges = 0
    for e in mesh.iter_edges():
        nedges += 1
        u, v = mesh.edge_vertices(e)
        verts.update((u, v))
    holes = boundary_loop_count(mesh) - 1
    return len(verts) - nedges + mesh.n_triangles == 1 - holes


class TestBuild:
    def test_square_two_triangles(self):
        m = build_cdt(make_square())
        m.validate()
        assert m.n_triangles == 2
        constrained = [e for e in m.iter_edges() if m.is_constrained(e)]
        assert len(constrained) == 4
        interior = [e for e in m.iter_edges() if not m.is_constrained(e)]
        assert len(interior) == 1

    def test_square_with_center_fan(self):
        obs = ObstacleSet(
            points=[(0, 0), (2, 0), (2, 2), (0, 2), (1, 1)], boundary=[0, 1, 2, 3]
        )
        m = build_cdt(obs)
        m.validate()
        assert m.n_triangles == 4

    def test_random_with_walls_is_cdt(self):
        obs = random_scene(3, 100, n_walls=10)
        m = build_cdt(obs)
        m.validate()
        assert m.is_cdt()
        assert euler_ok(m)
        assert m.total_area() == pytest.approx(400.0, rel=1e-9)

    def test_area_with_hole(self):
        pts = [(-10, -10), (10, -10), (10, 10), (-10, 10), (-2, -2), (2, -2), (2, 2), (-2, 2)]
        obs = ObstacleSet(points=pts, boundary=[0, 1, 2, 3], polygons=[[4, 5, 6, 7]])
        m = build_cdt(obs)
        m.validate()
        assert m.is_cdt()
        assert m.total_area() == pytest.approx(400.0 - 16.0, rel=1e-9)
        assert euler_ok(m)
        assert m.locate((0, 0)) is None  # inside the obstacle

    def test_crossing_segments_error_names_pair(self):
        pts = [(-5, -5), (5, -5), (5, 5), (-5, 5), (-1, 0), (1, 0), (0, -1), (0, 1)]
        obs = ObstacleSet(
            points=pts, boundary=[0, 1, 2, 3], segments=[(4, 5), (6, 7)]
        )
        with pytest.raises(InputError, match="cross"):
            build_cdt(obs)

    def test_duplicate_points_error(self):
        obs = ObstacleSet(
            points=[(0, 0), (1, 0), (1, 1), (0, 1), (1, 0)], boundary=[0, 1, 2, 3]
        )
        with pytest.raises(InputError, match="duplicate"):
            build_cdt(obs)

    def test_open_region_error(self):
        obs = ObstacleSet(points=[(0, 0), (1, 0), (1, 1)], boundary=[])
        with pytest.raises(InputError, match="not closed"):
            build_cdt(obs)

    def test_point_outside_boundary_error(self):
        obs = ObstacleSet(
            points=[(0, 0), (1, 0), (1, 1), (0, 1), (5, 5)], boundary=[0, 1, 2, 3]
        )
        with pytest.raises(InputError, match="outside"):
            build_cdt(obs)

    def test_t_junction_chain(self):
        pts = [(-5, -5), (5, -5), (5, 5), (-5, 5), (-2, 0), (2, 0), (0, 0), (0, 3)]
        obs = ObstacleSet(
            points=pts, boundary=[0, 1, 2, 3], segments=[(4, 5), (6, 7)]
        )
        m = build_cdt(obs)
        m.validate()
        assert m.is_cdt()
        assert m.constraint_chain(0) == [4, 6, 5]

    def test_constraint_coverage(self):
        obs = random_scene(11, 60, n_walls=8)
        m = build_cdt(obs)
        for sid, (a, b) in enumerate(m.segments):
            chain = m.constraint_chain(sid)
            assert chain[0] == a and chain[-1] == b
            seg_len = math.dist(m.point(a), m.point(b))
            for v in chain[1:-1]:
                assert (
                    abs(orient2d(m.point(a), m.point(b), m.point(v)))
                    == 0  # exactly collinear by construction
                    or math.dist(m.point(a), m.point(v)) < 1e-12 * seg_len
                )


class TestLocallyDelaunay:
    def test_square_diagonal(self):
        m = build_cdt(make_square())
        for e in m.iter_edges():
            if not m.is_constrained(e):
                assert m.is_locally_delaunay(e)

    def test_bad_diagonal_flips_good(self):
        # quadrilateral whose one diagonal violates the circle test
        pts = [(0, 0), (3, 0), (3.2, 1), (0, 1)]
        m = TriMesh.from_triangles(pts, [(0, 1, 2), (0, 2, 3)])
        diag = next(
            e
            for e in m.iter_edges()
            if set(m.edge_vertices(e)) == {0, 2}
        )
        good_before = m.is_locally_delaunay(diag)
        new = m.flip(diag)
        m.validate()
        assert set(m.edge_vertices(new)) == {1, 3}
        assert good_before != m.is_locally_delaunay(new) or m.is_locally_delaunay(new)

    def test_constrained_edge_exempt(self):
        pts = [(0, 0), (3, 0), (3.2, 1), (0, 1)]
        m = TriMesh.from_triangles(pts, [(0, 1, 2), (0, 2, 3)], constrained=[(0, 2)])
        diag = next(
            e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 2}
        )
        assert m.is_locally_delaunay(diag)

    def test_boundary_edge_rejected(self):
        m = build_cdt(make_square())
        boundary = next(e for e in m.iter_edges() if m.opposite(e) is None)
        with pytest.raises(InputError):
            m.is_locally_delaunay(boundary)

    def test_full_scan_after_build(self):
        m = build_cdt(random_scene(21, 80, n_walls=9))
        assert m.is_cdt()


class TestFlip:
    def fixture(self):
        pts = [(0, 0), (1, -1), (2, 0), (1, 1)]
        return TriMesh.from_triangles(pts, [(0, 1, 2), (0, 2, 3)])

    def test_flip_swaps_diagonal(self):
        m = self.fixture()
        diag = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 2})
        new = m.flip(diag)
        m.validate()
        assert set(m.edge_vertices(new)) == {1, 3}

    def test_flip_is_involution(self):
        m = self.fixture()
        before = [m.triangle(t).vertices for t in range(m.n_triangles)]
        diag = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 2})
        new = m.flip(diag)
        m.flip(new)
        after = [m.triangle(t).vertices for t in range(m.n_triangles)]
        assert {frozenset(t) for t in before} == {frozenset(t) for t in after}

    def test_flip_preserves_area(self):
        m = self.fixture()
        a0 = m.total_area()
        diag = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 2})
        m.flip(diag)
        assert m.total_area() == pytest.approx(a0, rel=1e-12)

    def test_flip_rejects_constrained(self):
        pts = [(0, 0), (1, -1), (2, 0), (1, 1)]
        m = TriMesh.from_triangles(pts, [(0, 1, 2), (0, 2, 3)], constrained=[(0, 2)])
        diag = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 2})
        with pytest.raises(InputError):
            m.flip(diag)

    def test_flip_rejects_nonconvex(self):
        # quad reflex at vertex 2: the flipped diagonal would fall outside
        pts = [(0, 0), (2, -0.1), (0.5, 0), (2, 0.1)]
        m = TriMesh.from_triangles(pts, [(0, 1, 2), (0, 2, 3)])
        diag = next(e for e in m.iter_edges() if set(m.edge_vertices(e)) == {0, 2})
        with pytest.raises(InputError):
            m.flip(diag)


class TestSplit:
    def test_concrete_split(self):
        m = TriMesh.from_triangles(
            [(0, 2), (-1, 0), (3, 0)], [(0, 1, 2)], constrained=[(1, 2)]
        )
        edge = next(e for e in m.iter_edges() if m.is_constrained(e))
        vid = m.split_constrained_edge(edge, (0, 0))
        m.validate()
        assert m.point(vid) == (0.0, 0.0)
        assert m.vkind[vid] == 1
        tris = {frozenset(m.triangle(t).vertices) for t in range(m.n_triangles)}
        assert tris == {frozenset((0, 1, vid)), frozenset((0, vid, 2))}

    def test_subedges_constrained(self):
        m = TriMesh.from_triangles(
            [(0, 2), (-1, 0), (3, 0)], [(0, 1, 2)], constrained=[(1, 2)]
        )
        edge = next(e for e in m.iter_edges() if m.is_constrained(e))
        vid = m.split_constrained_edge(edge, (0, 0))
        for e in m.iter_edges():
            u, v = m.edge_vertices(e)
            if vid in (u, v) and 0 not in (u, v):
                assert m.is_constrained(e)

    def test_split_interior_wall_both_sides(self):
        pts = [(-5, -5), (5, -5), (5, 5), (-5, 5), (-2, 0), (2, 0)]
        obs = ObstacleSet(points=pts, boundary=[0, 1, 2, 3], segments=[(4, 5)])
        m = build_cdt(obs)
        nt = m.n_triangles
        edge = next(
            e
            for e in m.iter_edges()
            if m.is_constrained(e) and set(m.edge_vertices(e)) == {4, 5}
        )
        m.split_constrained_edge(edge, (0.25, 0.0))
        m.validate()
        assert m.n_triangles == nt + 2  # both sides fragmented

    def test_rejects_unconstrained(self):
        m = build_cdt(make_square())
        edge = next(e for e in m.iter_edges() if not m.is_constrained(e))
        with pytest.raises(InputError):
            m.split_constrained_edge(edge, (0.5, 0.5))

    def test_rejects_endpoint(self):
        m = TriMesh.from_triangles(
            [(0, 2), (-1, 0), (3, 0)], [(0, 1, 2)], constrained=[(1, 2)]
        )
        edge = next(e for e in m.iter_edges() if m.is_constrained(e))
        with pytest.raises(InputError):
            m.split_constrained_edge(edge, (-1, 0))

    def test_area_preserved(self):
        pts = [(-5, -5), (5, -5), (5, 5), (-5, 5), (-2, 0), (2, 0)]
        obs = ObstacleSet(points=pts, boundary=[0, 1, 2, 3], segments=[(4, 5)])
        m = build_cdt(obs)
        a0 = m.total_area()
        edge = next(
            e
            for e in m.iter_edges()
            if m.is_constrained(e) and set(m.edge_vertices(e)) == {4, 5}
        )
        m.split_constrained_edge(edge, (0.5, 0.0))
        assert m.total_area() == pytest.approx(a0, rel=1e-9)


class TestLocate:
    def test_centroid_of_each_triangle(self):
        m = build_cdt(random_scene(5, 40, n_walls=5))
        for t in range(m.n_triangles):
            a, b, c = m.triangle(t).vertices
            cx = (m.vx[a] + m.vx[b] + m.vx[c]) / 3
            cy = (m.vy[a] + m.vy[b] + m.vy[c]) / 3
            assert m.locate((cx, cy)) == t

    def test_outside_region(self):
        m = build_cdt(make_square())
        assert m.locate((5, 5)) is None

    def test_matches_brute_force(self):
        m = build_cdt(random_scene(9, 60, n_walls=6))
        rng = np.random.default_rng(17)
        for p in rng.uniform(-10.5, 10.5, size=(1000, 2)):
            assert m.locate(p) == brute_locate(m, tuple(p))


def test_point_in_polygon_on_edge():
    xs = [0.0, 2.0, 2.0, 0.0]
    ys = [0.0, 0.0, 2.0, 2.0]
    assert point_in_polygon(1.0, 0.0, xs, ys) == 0
    assert point_in_polygon(1.0, 1.0, xs, ys) == 1
    assert point_in_polygon(3.0, 1.0, xs, ys) == -1
