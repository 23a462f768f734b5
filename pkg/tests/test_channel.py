import math

import numpy as np
import pytest

from clearmesh.channel import (
    ClearancePath,
    PathArc,
    PathSegment,
    _element_points,
    extract_path,
    path_clearance,
    path_length,
)
from clearmesh.errors import InfeasibleQueryError
from clearmesh.geom import Point, dist_point_segment
from clearmesh.mesh import ObstacleSet, TriMesh, build_cdt
from clearmesh.refine import refine
from clearmesh.roadmap import build_roadmap, shortest_channel

from test_mesh import random_scene


def two_triangle_fixture():
    """Gate from (0,-5) up to (0,-0.1); constrained floor on both sides."""
    pts = [(-5, 0), (0, -5), (5, 0), (0, -0.1)]
    m = TriMesh.from_triangles(pts, [(0, 1, 3), (1, 2, 3)], constrained=[(0, 1), (1, 2)])
    g = build_roadmap(m)
    ch = shortest_channel(g, 0, 1, 0.0)
    return m, ch


def dense_polyline_length(path, pitch=1e-5):
    total = 0.0
    for e in path.elements:
        xs, ys = _element_points(e, max(pitch, e.length() / 4e5 if e.length() else pitch))
        total += float(np.sum(np.hypot(np.diff(xs), np.diff(ys))))
    return total


def sample_path(path, n=400):
    pts = []
    for e in path.elements:
        xs, ys = _element_points(e, max(e.length() / n, 1e-9))
        pts.extend(zip(xs, ys))
    if not pts:
        pts = [path.start]
    return pts


def min_tangent_arc_length(s, e, center, c, ccw):
    """Numeric oracle: minimize |s - P(a)| + arc(a..b) + |P(b) - e| over the
    touch angles, wrapping the disk in the channel's fixed sense; the
    optimum is the taut tangent-arc-tangent path of that homotopy."""

    def plen(a, b, ccw):
        pa = (center[0] + c * math.cos(a), center[1] + c * math.sin(a))
        pb = (center[0] + c * math.cos(b), center[1] + c * math.sin(b))
        # both connector segments must clear the disk
        if dist_point_segment(center, s, pa) < c * (1 - 1e-9):
            return math.inf
        if dist_point_segment(center, pb, e) < c * (1 - 1e-9):
            return math.inf
        sw = (b - a) % (2 * math.pi) if ccw else (a - b) % (2 * math.pi)
        return math.dist(s, pa) + c * sw + math.dist(pb, e)

    best, va, vb, vccw = math.inf, 0.0, 0.0, ccw
    grid = np.linspace(0, 2 * math.pi, 720, endpoint=False)
    for a in grid:
        for b in grid[::6]:
            v = plen(a, b, ccw)
            if v < best:
                best, va, vb = v, a, b
    # refine around the best grid point
    for _ in range(60):
        step = 1e-2
        improved = True
        while improved:
            improved = False
            for da, db in ((step, 0), (-step, 0), (0, step), (0, -step)):
                v = plen(va + da, vb + db, vccw)
                if v < best - 1e-15:
                    best, va, vb = v, va + da, vb + db
                    improved = True
        step *= 0.5
    return best


class TestBasicShapes:
    def test_straight_when_unblocked(self):
        m, ch = two_triangle_fixture()
        p = extract_path(m, ch, (-2, -2), (2, -2), 0.0)
        assert len(p.elements) == 1
        assert isinstance(p.elements[0], PathSegment)
        assert path_length(p) == pytest.approx(4.0)

    def test_zero_clearance_bends_at_vertex(self):
        m, ch = two_triangle_fixture()
        s, e = (-2, -0.07), (2, -0.07)
        p = extract_path(m, ch, s, e, 0.0)
        assert len(p.elements) == 2
        v = (0.0, -0.1)
        assert path_length(p) == pytest.approx(math.dist(s, v) + math.dist(v, e))
        assert p.elements[0].b == v and p.elements[1].a == v

    def test_tangent_arc_tangent_against_minimizer(self):
        m, ch = two_triangle_fixture()
        s, e, c = (-2.0, -0.07), (2.0, -0.07), 0.3
        p = extract_path(m, ch, s, e, c)
        kinds = [type(el).__name__ for el in p.elements]
        assert kinds == ["PathSegment", "PathArc", "PathSegment"]
        arc = p.elements[1]
        assert arc.center == (0.0, -0.1) and arc.radius == c
        # tangent length closed form
        d = math.dist(s, arc.center)
        expected_tangents = 2 * math.sqrt(d * d - c * c)
        assert sum(
            el.length() for el in p.elements if isinstance(el, PathSegment)
        ) == pytest.approx(expected_tangents, rel=1e-12)
        oracle = min_tangent_arc_length(s, e, arc.center, c, arc.ccw)
        assert path_length(p) == pytest.approx(oracle, abs=1e-4)
        assert path_length(p) <= oracle + 1e-9

    def test_tangent_continuity(self):
        m, ch = two_triangle_fixture()
        p = extract_path(m, ch, (-2, -0.07), (2, -0.07), 0.3)
        prev_end = None
        for el in p.elements:
            start = el.a if isinstance(el, PathSegment) else el.point_at(0.0)
            end = el.b if isinstance(el, PathSegment) else el.point_at(1.0)
            if prev_end is not None:
                assert math.dist(prev_end, start) < 1e-9
            prev_end = end


class TestPathLength:
    def test_single_segment(self):
        p = ClearancePath(Point(0, 0), Point(3, 4), 0.0, [PathSegment(Point(0, 0), Point(3, 4))])
        assert path_length(p) == 5.0

    def test_full_circle(self):
        arc = PathArc(Point(0, 0), 1.0, 0.0, 0.0, True)
        # a0 == a1 sweeps a full turn counterclockwise under modular sweep
        assert arc.sweep() == pytest.approx(0.0)
        half = PathArc(Point(0, 0), 1.0, 0.0, math.pi, True)
        p = ClearancePath(Point(1, 0), Point(-1, 0), 1.0, [half, half])
        assert path_length(p) == pytest.approx(2 * math.pi, rel=1e-12)

    def test_composite_matches_discretization(self):
        m, ch = two_triangle_fixture()
        p = extract_path(m, ch, (-2, -0.07), (2, -0.07), 0.3)
        assert path_length(p) == pytest.approx(
            dense_polyline_length(p), rel=1e-6
        )


class TestPathClearance:
    def test_segment_vs_point(self):
        obs = ObstacleSet(points=[(0, 1)])
        p = ClearancePath(
            Point(-3, 0), Point(3, 0), 0.5, [PathSegment(Point(-3, 0), Point(3, 0))]
        )
        assert path_clearance(p, obs) == pytest.approx(1.0, rel=1e-4)

    def test_arc_vs_center(self):
        obs = ObstacleSet(points=[(0, 0)])
        arc = PathArc(Point(0, 0), 0.75, 0.0, math.pi, True)
        p = ClearancePath(arc.point_at(0), arc.point_at(1), 0.75, [arc])
        assert path_clearance(p, obs) == pytest.approx(0.75, rel=1e-9)


class TestPreconditions:
    def test_start_outside_first_triangle(self):
        m, ch = two_triangle_fixture()
        with pytest.raises(InfeasibleQueryError):
            extract_path(m, ch, (4, -0.5), (2, -2), 0.0)

    def test_gate_too_narrow(self):
        m, ch = two_triangle_fixture()
        with pytest.raises(InfeasibleQueryError, match="gate"):
            extract_path(m, ch, (-2, -2), (2, -2), 3.0)

    def test_endpoint_clearance(self):
        m, ch = two_triangle_fixture()
        with pytest.raises(InfeasibleQueryError, match="closer than"):
            extract_path(m, ch, (-2, -0.2), (2, -2), 1.0)


def random_feasible_query(mesh, graph, rng, tries=300):
    """A (start, goal, c, channel) tuple drawn inside the free region with
    endpoint clearance margin."""
    from clearmesh.channel import _min_obstacle_dist

    for _ in range(tries):
        c = float(rng.uniform(0.05, 0.8))
        pts = rng.uniform(-9.5, 9.5, size=(2, 2))
        ts = mesh.locate(pts[0])
        tg = mesh.locate(pts[1])
        if ts is None or tg is None:
            continue
        if _min_obstacle_dist(mesh, pts[0])[0] < c * 1.25:
            continue
        if _min_obstacle_dist(mesh, pts[1])[0] < c * 1.25:
            continue
        ch = shortest_channel(graph, ts, tg, c)
        if ch is None or len(ch.triangles) < 2:
            continue
        return tuple(pts[0]), tuple(pts[1]), c, ch
    return None


class TestRandomChannels:
    def setup_method(self):
        self.cases = []
        for seed in (0, 1, 2):
            m = build_cdt(random_scene(seed, 60, n_walls=6))
            refine(m)
            g = build_roadmap(m)
            rng = np.random.default_rng([seed, 77])
            for _ in range(6):
                q = random_feasible_query(m, g, rng)
                if q is not None:
                    self.cases.append((m, *q))
        assert len(self.cases) >= 8

    def test_clearance_bound(self):
        for (m, s, e, c, ch) in self.cases:
            p = extract_path(m, ch, s, e, c)
            assert path_clearance(p, m.as_obstacles()) >= c - 1e-6 * c

    def test_local_optimality(self):
        for (m, s, e, c, ch) in self.cases:
            p = extract_path(m, ch, s, e, c)
            arcs = [el for el in p.elements if isinstance(el, PathArc)]
            if not arcs:
                continue
            base = path_length(p)
            for k, arc in enumerate(arcs):
                for dend in ("a0", "a1"):
                    for eps in (1e-5, -1e-5):
                        l = perturbed_length(p, k, dend, eps)
                        assert l >= base - 1e-9

    def test_not_longer_than_sampled_homotopic_paths(self):
        rng = np.random.default_rng(123)
        for (m, s, e, c, ch) in self.cases[:6]:
            p = extract_path(m, ch, s, e, c)
            plen = path_length(p)
            obstacles = m.as_obstacles()
            accepted = 0
            for _ in range(200):
                if accepted >= 40:
                    break
                way = [s]
                ok = True
                for gate in ch.gates:
                    u, v = m.edge_vertices(gate)
                    w = m.edge_length(gate)
                    lo = min(c / w, 0.5)
                    f = float(rng.uniform(lo, 1 - lo))
                    way.append(
                        (
                            m.vx[u] + f * (m.vx[v] - m.vx[u]),
                            m.vy[u] + f * (m.vy[v] - m.vy[u]),
                        )
                    )
                way.append(e)
                cand = ClearancePath(
                    Point(*s),
                    Point(*e),
                    c,
                    [
                        PathSegment(Point(*a), Point(*b))
                        for a, b in zip(way, way[1:])
                    ],
                )
                if path_clearance(cand, obstacles) < c:
                    continue
                accepted += 1
                assert plen <= path_length(cand) + 1e-9

    def test_zero_clearance_limit(self):
        for (m, s, e, c, ch) in self.cases[:4]:
            p0 = extract_path(m, ch, s, e, 0.0)
            pe = extract_path(m, ch, s, e, 1e-7)
            h = hausdorff(p0, pe)
            assert h < 1e-5


def perturbed_length(path, arc_index, which, eps):
    """Path length after nudging one touch angle of one arc; the adjacent
    tangent segments reconnect to the moved touch points."""
    els = list(path.elements)
    arcs = [i for i, el in enumerate(els) if isinstance(el, PathArc)]
    i = arcs[arc_index]
    arc = els[i]
    a0 = arc.a0 + (eps if which == "a0" else 0.0)
    a1 = arc.a1 + (eps if which == "a1" else 0.0)
    new_arc = PathArc(arc.center, arc.radius, a0, a1, arc.ccw)
    new_els = list(els)
    new_els[i] = new_arc
    if i > 0 and isinstance(els[i - 1], PathSegment):
        new_els[i - 1] = PathSegment(els[i - 1].a, new_arc.point_at(0.0))
    if i + 1 < len(els) and isinstance(els[i + 1], PathSegment):
        new_els[i + 1] = PathSegment(new_arc.point_at(1.0), els[i + 1].b)
    return sum(el.length() for el in new_els)


def hausdorff(path_a, path_b):
    """Symmetric Hausdorff distance between two paths, measured from dense
    samples of one to the exact elements of the other (no sampling floor)."""
    from clearmesh.channel import _dist_point_to_element

    def one_sided(pa, pb):
        worst = 0.0
        for (x, y) in sample_path(pa):
            d = min(_dist_point_to_element(x, y, el) for el in pb.elements)
            worst = max(worst, d)
        return worst

    if not path_a.elements or not path_b.elements:
        return 0.0 if not path_a.elements and not path_b.elements else math.inf
    return max(one_sided(path_a, path_b), one_sided(path_b, path_a))
