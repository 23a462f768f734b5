"""Scenario ingestion, query orchestration, SVG rendering, benchmarks.

Scenario files are line-oriented text:

    # comment
    p <x> <y>                 a point obstacle (index = declaration order)
    s <i> <j>                 a constrained wall between points i and j
    poly <i> <j> <k> ...      a closed obstacle polygon (interior removed)
    boundary <i> <j> <k> ...  the outer cycle closing the region (required)
    q <sx> <sy> <gx> <gy> <c> a query: start, goal, clearance

Every command is deterministic given the input file, flags, and seed;
wall-clock timing fields are the only output that varies between runs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import core
from .channel import (
    ClearancePath,
    PathArc,
    PathSegment,
    extract_path,
    path_clearance,
    path_length,
)
from .errors import (
    ClearmeshError,
    InfeasibleQueryError,
    InputError,
    InternalInvariantError,
)
from .geom import segments_properly_cross
from .mesh import ObstacleSet, TriMesh, build_cdt
from .refine import RefineStats, find_pinch_vertices, refine
from .roadmap import RoadmapGraph, build_roadmap, shortest_channel

CSV_HEADER = "points,triangles,refined_points,refined_triangles,time_ms"


@dataclass
class Scenario:
    obstacles: ObstacleSet
    queries: List[Tuple[float, float, float, float, float]] = field(
        default_factory=list
    )


# ---------------------------------------------------------------------------
# scenario text format


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text; diagnostics carry line numbers."""
    points: List[Tuple[float, float]] = []
    segments: List[Tuple[int, int]] = []
    seg_lines: List[int] = []
    polygons: List[List[int]] = []
    boundary: List[int] = []
    queries = []

    def fail(lineno, msg):
        raise InputError(f"line {lineno}: {msg}")

    def parse_index(lineno, tok):
        try:
            v = int(tok)
        except ValueError:
            fail(lineno, f"expected a point index, got {tok!r}")
        if not 0 <= v < len(points):
            fail(lineno, f"point index {v} out of range (have {len(points)} points)")
        return v

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        cmd, args = parts[0], parts[1:]
        if cmd == "p":
            if len(args) != 2:
                fail(lineno, "p takes exactly two coordinates")
            try:
                x, y = float(args[0]), float(args[1])
            except ValueError:
                fail(lineno, f"bad coordinates {args!r}")
            if not (math.isfinite(x) and math.isfinite(y)):
                fail(lineno, "coordinates must be finite")
            points.append((x, y))
        elif cmd == "s":
            if len(args) != 2:
                fail(lineno, "s takes exactly two point indices")
            a, b = parse_index(lineno, args[0]), parse_index(lineno, args[1])
            if a == b:
                fail(lineno, "segment endpoints must differ")
            segments.append((a, b))
            seg_lines.append(lineno)
        elif cmd == "poly":
            if len(args) < 3:
                fail(lineno, "poly needs at least three indices")
            polygons.append([parse_index(lineno, t) for t in args])
        elif cmd == "boundary":
            if boundary:
                fail(lineno, "boundary declared twice")
            if len(args) < 3:
                fail(lineno, "boundary needs at least three indices")
            boundary = [parse_index(lineno, t) for t in args]
        elif cmd == "q":
            if len(args) != 5:
                fail(lineno, "q takes sx sy gx gy c")
            try:
                vals = [float(t) for t in args]
            except ValueError:
                fail(lineno, f"bad query numbers {args!r}")
            if vals[4] < 0:
                fail(lineno, "clearance must be nonnegative")
            queries.append(tuple(vals))
        else:
            fail(lineno, f"unknown directive {cmd!r}")
    obstacles = ObstacleSet(
        points=points, segments=segments, polygons=polygons, boundary=boundary
    )
    obstacles.validate()
    _check_crossings(obstacles, seg_lines)
    return Scenario(obstacles=obstacles, queries=queries)


def _check_crossings(obstacles: ObstacleSet, seg_lines: List[int]):
    """Exact pairwise crossing check over all declared constrained segments
    (walls, polygon edges, boundary edges).  Segments may share endpoints,
    and a declared point may lie exactly inside a segment (that splits it
    into a collinear chain); any other overlap is an error."""
    pts = obstacles.points
    allsegs = obstacles.all_segments()
    n = len(allsegs)
    for i in range(n):
        a, b = allsegs[i]
        pa, pb = pts[a], pts[b]
        for j in range(i + 1, n):
            c, d = allsegs[j]
            if a in (c, d) or b in (c, d):
                continue
            if segments_properly_cross(pa, pb, pts[c], pts[d]):
                # a declared vertex sitting exactly inside the other segment
                # is a legal T-junction, not a crossing
                if _crossing_is_declared_vertex(pts, (a, b), (c, d)):
                    continue
                ni = f"segment {i}" + (
                    f" (line {seg_lines[i]})" if i < len(seg_lines) else ""
                )
                nj = f"segment {j}" + (
                    f" (line {seg_lines[j]})" if j < len(seg_lines) else ""
                )
                raise InputError(f"constraint segments cross: {ni} and {nj}")


def _crossing_is_declared_vertex(pts, s1, s2):
    from .geom import orient2d

    for (u, v), (p, q) in ((s1, s2), (s2, s1)):
        for w in (u, v):
            if orient2d(pts[p], pts[q], pts[w]) == 0:
                x0, y0 = pts[w]
                if (
                    min(pts[p][0], pts[q][0]) <= x0 <= max(pts[p][0], pts[q][0])
                    and min(pts[p][1], pts[q][1]) <= y0 <= max(pts[p][1], pts[q][1])
                ):
                    return True
    return False


def emit_scenario(scenario: Scenario) -> str:
    """Canonical text for a scenario; parse(emit(s)) == s."""
    out = []
    for (x, y) in scenario.obstacles.points:
        out.append(f"p {x!r} {y!r}")
    for (a, b) in scenario.obstacles.segments:
        out.append(f"s {a} {b}")
    for cycle in scenario.obstacles.polygons:
        out.append("poly " + " ".join(str(v) for v in cycle))
    if scenario.obstacles.boundary:
        out.append("boundary " + " ".join(str(v) for v in scenario.obstacles.boundary))
    for (sx, sy, gx, gy, c) in scenario.queries:
        out.append(f"q {sx!r} {sy!r} {gx!r} {gy!r} {c!r}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# queries


def connect_endpoints(mesh: TriMesh, start, goal) -> Tuple[int, int]:
    """Containing triangles for the two query endpoints via point location.

    Endpoints are not inserted into the triangulation; queries whose
    endpoints fall outside the region (or inside an obstacle) are rejected.
    """
    ts = mesh.locate(start)
    if ts is None:
        raise InfeasibleQueryError(
            f"start point ({start[0]}, {start[1]}) is outside the triangulated region"
        )
    tg = mesh.locate(goal)
    if tg is None:
        raise InfeasibleQueryError(
            f"goal point ({goal[0]}, {goal[1]}) is outside the triangulated region"
        )
    return ts, tg


def run_query(
    mesh: TriMesh,
    graph: RoadmapGraph,
    query,
    obstacles: Optional[ObstacleSet] = None,
) -> dict:
    """Answer one (start, goal, clearance) query on a refined mesh."""
    sx, sy, gx, gy, c = query
    report = {
        "query": {"start": [sx, sy], "goal": [gx, gy], "clearance": c},
        "feasible": False,
    }
    t0 = time.perf_counter()
    try:
        ts, tg = connect_endpoints(mesh, (sx, sy), (gx, gy))
        channel = shortest_channel(graph, ts, tg, c)
        t1 = time.perf_counter()
        if channel is None:
            report["reason"] = "no channel wide enough at this clearance"
            report["timings_ms"] = {"search": (t1 - t0) * 1e3}
            return report
        path = extract_path(mesh, channel, (sx, sy), (gx, gy), c)
    except InfeasibleQueryError as exc:
        report["reason"] = str(exc)
        return report
    t2 = time.perf_counter()
    clr = path_clearance(path, obstacles if obstacles is not None else mesh.as_obstacles())
    report["feasible"] = True
    report["channel"] = list(channel.triangles)
    report["path"] = {
        "elements": serialize_path(path),
        "length": path_length(path),
        "clearance": clr,
    }
    report["timings_ms"] = {
        "search": (t1 - t0) * 1e3,
        "funnel": (t2 - t1) * 1e3,
    }
    return report


def serialize_path(path: ClearancePath) -> list:
    out = []
    for e in path.elements:
        if isinstance(e, PathSegment):
            out.append(
                {"type": "segment", "from": [e.a.x, e.a.y], "to": [e.b.x, e.b.y]}
            )
        else:
            out.append(
                {
                    "type": "arc",
                    "center": [e.center.x, e.center.y],
                    "radius": e.radius,
                    "from_angle": e.a0,
                    "to_angle": e.a1,
                    "ccw": e.ccw,
                }
            )
    return out


# ---------------------------------------------------------------------------
# SVG rendering


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def render_svg(
    mesh: Optional[TriMesh],
    graph: Optional[RoadmapGraph] = None,
    paths: Optional[List[ClearancePath]] = None,
    obstacles: Optional[ObstacleSet] = None,
) -> str:
    """Deterministic SVG: constrained edges, unconstrained edges, Steiner
    markers, obstacle fills, roadmap overlay, and paths with exact arcs.
    Byte-identical for identical inputs."""
    xs: List[float] = []
    ys: List[float] = []
    if mesh is not None and mesh.n_vertices:
        xs += mesh.vx
        ys += mesh.vy
    if obstacles is not None:
        xs += [p[0] for p in obstacles.points]
        ys += [p[1] for p in obstacles.points]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    w = max(xmax - xmin, 1e-9)
    h = max(ymax - ymin, 1e-9)
    margin = 0.03 * max(w, h)
    marker = 0.006 * max(w, h)

    def X(x):
        return _fmt(x)

    def Y(y):
        return _fmt(-y)  # flip so +y points up on screen

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_fmt(xmin - margin)} '
        f'{_fmt(-(ymax + margin))} {_fmt(w + 2 * margin)} {_fmt(h + 2 * margin)}">',
        "<style>"
        ".edge{stroke:#b8b8b8;stroke-width:0.25%;fill:none}"
        ".wall{stroke:#c42b2b;stroke-width:0.45%;fill:none}"
        ".hole{fill:#e5e0da;stroke:none}"
        ".steiner{fill:#1767c4;stroke:none}"
        ".node{fill:#777;stroke:none}"
        ".link{stroke:#9fc3e8;stroke-width:0.18%;fill:none}"
        ".path{stroke:#15803d;stroke-width:0.6%;fill:none}"
        "</style>",
    ]
    if obstacles is not None:
        for cycle in obstacles.polygons:
            pts = " ".join(
                f"{X(obstacles.points[v][0])},{Y(obstacles.points[v][1])}"
                for v in cycle
            )
            lines.append(f'<polygon class="hole" points="{pts}"/>')
    if mesh is not None:
        plain = []
        walls = []
        for e in mesh.iter_edges():
            a, b = mesh.edge_vertices(e)
            d = (
                f"M {X(mesh.vx[a])} {Y(mesh.vy[a])} "
                f"L {X(mesh.vx[b])} {Y(mesh.vy[b])}"
            )
            (walls if mesh.is_constrained(e) else plain).append(d)
        if plain:
            lines.append(f'<path class="edge" d="{" ".join(plain)}"/>')
        if walls:
            lines.append(f'<path class="wall" d="{" ".join(walls)}"/>')
        for v in range(mesh.n_vertices):
            if mesh.vkind[v] == 1:
                lines.append(
                    f'<circle class="steiner" cx="{X(mesh.vx[v])}" '
                    f'cy="{Y(mesh.vy[v])}" r="{_fmt(marker)}"/>'
                )
    if graph is not None:
        links = []
        for t in range(graph.n_nodes):
            for (nb, _, _, _) in graph.adj[t]:
                if nb > t:
                    a, b = graph.anchors[t], graph.anchors[nb]
                    links.append(f"M {X(a.x)} {Y(a.y)} L {X(b.x)} {Y(b.y)}")
        if links:
            lines.append(f'<path class="link" d="{" ".join(links)}"/>')
        for t in range(graph.n_nodes):
            a = graph.anchors[t]
            lines.append(
                f'<circle class="node" cx="{X(a.x)}" cy="{Y(a.y)}" '
                f'r="{_fmt(0.6 * marker)}"/>'
            )
    for path in paths or []:
        if not path.elements:
            continue
        parts = []
        first = path.elements[0]
        p0 = first.a if isinstance(first, PathSegment) else first.point_at(0.0)
        parts.append(f"M {X(p0.x)} {Y(p0.y)}")
        for e in path.elements:
            if isinstance(e, PathSegment):
                parts.append(f"L {X(e.b.x)} {Y(e.b.y)}")
            else:
                q = e.point_at(1.0)
                large = 1 if e.sweep() > math.pi else 0
                sweep_flag = 1 if e.ccw else 0
                parts.append(
                    f"A {_fmt(e.radius)} {_fmt(e.radius)} 0 {large} {sweep_flag} "
                    f"{X(q.x)} {Y(q.y)}"
                )
        lines.append(f'<path class="path" d="{" ".join(parts)}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# random instances and benchmark


def generate_obstacles(
    n_vertices: int, seed: int, wall_fraction: float = 0.006
) -> ObstacleSet:
    """Random obstacle set with a fixed total vertex count: jittered-grid
    point obstacles (unit mean spacing), short wall segments between points,
    and a rectangular outer boundary.

    Walls are placed in spatially disjoint 3x3-cell blocks, so they cannot
    cross by construction; no rejection pass is needed and generation stays
    O(n) and reproducible from the seed.
    """
    if n_vertices < 8:
        raise InputError("need at least 8 vertices")
    rng = np.random.default_rng([seed, n_vertices])
    n_inner = n_vertices - 4
    g = max(3, math.ceil(math.sqrt(n_inner)))
    points: List[Tuple[float, float]] = [
        (-1.0, -1.0),
        (g + 1.0, -1.0),
        (g + 1.0, g + 1.0),
        (-1.0, g + 1.0),
    ]
    cells = rng.choice(g * g, size=n_inner, replace=False)
    cells.sort()
    jitter = rng.uniform(0.08, 0.92, size=(n_inner, 2))
    cell_vertex = {}
    for k, ci in enumerate(cells):
        i, j = int(ci) % g, int(ci) // g
        cell_vertex[(i, j)] = len(points)
        points.append((i + float(jitter[k, 0]), j + float(jitter[k, 1])))
    segments: List[Tuple[int, int]] = []
    n_walls = max(1, round(wall_fraction * n_vertices))
    stride = 4
    nb = max(1, (g - 3) // stride + 1) if g >= 3 else 0
    blocks = [
        (bi * stride, bj * stride)
        for bj in range(nb)
        for bi in range(nb)
        if bi * stride + 2 < g and bj * stride + 2 < g
    ]
    if blocks:
        order = rng.permutation(len(blocks))
        for bidx in order[: min(n_walls, len(blocks))]:
            bx, by = blocks[int(bidx)]
            # pick two occupied cells far apart within the block
            occupied = [
                (i, j)
                for i in range(bx, bx + 3)
                for j in range(by, by + 3)
                if (i, j) in cell_vertex
            ]
            if len(occupied) < 2:
                continue
            best = None
            for i1 in range(len(occupied)):
                for i2 in range(i1 + 1, len(occupied)):
                    c1, c2 = occupied[i1], occupied[i2]
                    d = (c1[0] - c2[0]) ** 2 + (c1[1] - c2[1]) ** 2
                    if best is None or d > best[0]:
                        best = (d, c1, c2)
            _, c1, c2 = best
            segments.append((cell_vertex[c1], cell_vertex[c2]))
    return ObstacleSet(points=points, segments=segments, boundary=[0, 1, 2, 3])


def benchmark(sizes: List[int], seed: int, order: str = "walls-first") -> List[str]:
    """One CSV row per size: input points and triangles, refined points and
    triangles, and the refinement time (median of 5 timed runs after one
    warmup; triangulation time is excluded)."""
    rows = [CSV_HEADER]
    for n in sizes:
        obstacles = generate_obstacles(n, seed)
        base = build_cdt(obstacles)
        times = []
        result = None
        for rep in range(6):
            m = base.copy()
            stats = refine(m, order=order)
            if rep > 0:
                times.append(stats.wall_time)
            result = (m, stats)
        m, stats = result
        times.sort()
        med_ms = 1e3 * times[len(times) // 2]
        rows.append(
            f"{base.n_vertices},{base.n_triangles},"
            f"{m.n_vertices},{m.n_triangles},{med_ms:.3f}"
        )
    return rows


# ---------------------------------------------------------------------------
# entry point


def _cmd_refine(args) -> int:
    scenario = parse_scenario(open(args.file, encoding="utf-8").read())
    mesh = build_cdt(scenario.obstacles)
    pts0, tris0 = mesh.n_vertices, mesh.n_triangles
    order = "naive" if args.naive_order else "walls-first"
    if args.naive_order:
        core.set_backend("pure")
    stats = refine(mesh, tol=args.tolerance, order=order)
    print(
        f"refined: {pts0} -> {mesh.n_vertices} points, "
        f"{tris0} -> {mesh.n_triangles} triangles, "
        f"{stats.steiner_inserted} steiner, {stats.flips} flips, "
        f"{stats.wall_time * 1e3:.3f} ms"
    )
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            fh.write(CSV_HEADER + "\n")
            fh.write(
                f"{pts0},{tris0},{mesh.n_vertices},{mesh.n_triangles},"
                f"{stats.wall_time * 1e3:.3f}\n"
            )
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(mesh, obstacles=scenario.obstacles))
    if args.graph:
        from .roadmap import dump_graph

        with open(args.graph, "w", encoding="utf-8") as fh:
            fh.write(dump_graph(build_roadmap(mesh)))
    return 0


def _cmd_query(args) -> int:
    scenario = parse_scenario(open(args.file, encoding="utf-8").read())
    if not scenario.queries:
        raise InputError("scenario has no queries")
    mesh = build_cdt(scenario.obstacles)
    refine(mesh, tol=args.tolerance)
    graph = build_roadmap(mesh)
    reports = []
    paths = []
    for q in scenario.queries:
        rep = run_query(mesh, graph, q, scenario.obstacles)
        reports.append(rep)
        if rep["feasible"]:
            paths.append(_path_from_report(rep, q))
    if args.format == "json":
        print(json.dumps(reports, indent=2))
    elif args.format == "csv":
        print("sx,sy,gx,gy,c,feasible,path_length,path_clearance")
        for q, rep in zip(scenario.queries, reports):
            if rep["feasible"]:
                print(
                    f"{q[0]!r},{q[1]!r},{q[2]!r},{q[3]!r},{q[4]!r},1,"
                    f"{rep['path']['length']!r},{rep['path']['clearance']!r}"
                )
            else:
                print(f"{q[0]!r},{q[1]!r},{q[2]!r},{q[3]!r},{q[4]!r},0,,")
    elif args.format == "svg":
        print(render_svg(mesh, paths=paths, obstacles=scenario.obstacles), end="")
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(mesh, paths=paths, obstacles=scenario.obstacles))
    if any(not rep["feasible"] for rep in reports):
        return 2
    return 0


def _path_from_report(rep, q) -> ClearancePath:
    elements = []
    for e in rep["path"]["elements"]:
        if e["type"] == "segment":
            elements.append(
                PathSegment(
                    a=_pt(e["from"]),
                    b=_pt(e["to"]),
                )
            )
        else:
            elements.append(
                PathArc(
                    center=_pt(e["center"]),
                    radius=e["radius"],
                    a0=e["from_angle"],
                    a1=e["to_angle"],
                    ccw=e["ccw"],
                )
            )
    return ClearancePath(_pt(rep["query"]["start"]), _pt(rep["query"]["goal"]), q[4], elements)


def _pt(xy):
    from .geom import Point

    return Point(xy[0], xy[1])


def _cmd_check(args) -> int:
    scenario = parse_scenario(open(args.file, encoding="utf-8").read())
    mesh = build_cdt(scenario.obstacles)
    refine(mesh, tol=args.tolerance)
    pinch = find_pinch_vertices(mesh)
    cdt_ok = mesh.is_cdt()
    print(f"pinch_vertices: {len(pinch)}")
    print(f"cdt_scan: {'ok' if cdt_ok else 'violated'}")
    if pinch or not cdt_ok:
        return 3
    return 0


def _cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if sizes != sorted(sizes):
        raise InputError("sizes must be ascending")
    rows = benchmark(sizes, args.seed)
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="clearmesh",
        description="clearance-parametric roadmaps from refined constrained "
        "Delaunay triangulations",
    )
    parser.add_argument(
        "--backend",
        choices=["auto", "pure", "compiled"],
        default="auto",
        help="kernel backend selection",
    )
    parser.add_argument(
        "--tolerance",
        type=float,
        default=1e-12,
        help="relative epsilon for Steiner endpoint snapping",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine", help="build and refine a scenario's mesh")
    p.add_argument("file")
    p.add_argument("--svg", help="write the refined mesh as SVG")
    p.add_argument("--stats", help="write a one-row stats CSV")
    p.add_argument("--graph", help="write the roadmap dual-graph dump")
    p.add_argument(
        "--naive-order",
        action="store_true",
        help="adversarial scheduling test mode (pure backend, slow)",
    )
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("query", help="answer a scenario's queries")
    p.add_argument("file")
    p.add_argument("--svg", help="write mesh plus paths as SVG")
    p.add_argument("--format", choices=["json", "csv", "svg"], default="json")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("check", help="refine, then run the pinch-vertex oracle")
    p.add_argument("file")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("bench", help="random-instance refinement benchmark")
    p.add_argument("--sizes", required=True, help="comma-separated vertex counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_bench)

    args = parser.parse_args(argv)
    try:
        core.set_backend(args.backend)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleQueryError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except InternalInvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
