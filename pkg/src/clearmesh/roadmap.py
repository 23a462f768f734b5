"""Dual roadmap graph of a refined triangulation and clearance queries.

Nodes are triangles; an edge exists where two triangles share an
unconstrained side (a *gate*), annotated with the gate width.  On a refined
mesh, a channel is traversable by a disk of radius c exactly when every
gate on it is at least 2c wide, so one graph serves every clearance value.
The graph is immutable once built; all queries are read-only.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import InputError
from .geom import Point, circumcenter, orient_xy
from .mesh import EdgeRef, TriMesh, _NEXT, _PREV


@dataclass
class Channel:
    """An ordered triangle walk and the gates crossed between consecutive
    triangles (one fewer gate than triangles)."""

    triangles: List[int]
    gates: List[EdgeRef]

    def bottleneck(self, graph: "RoadmapGraph") -> float:
        if not self.gates:
            return math.inf
        return min(graph.gate_width(g) for g in self.gates)


@dataclass
class RoadmapGraph:
    """Adjacency-list dual graph: `adj[node]` holds (neighbor, gate_width,
    cost, gate EdgeRef) tuples; `anchors` the per-triangle search anchor."""

    anchors: List[Point]
    adj: List[List[Tuple[int, float, float, EdgeRef]]]

    @property
    def n_nodes(self) -> int:
        return len(self.anchors)

    def gate_width(self, edge: EdgeRef) -> float:
        for (nb, width, _, gate) in self.adj[edge.tri]:
            if gate.slot == edge.slot:
                return width
        raise InputError(f"edge {edge} is not a gate")

    def _check_node(self, t):
        if not 0 <= t < self.n_nodes:
            raise InputError(f"unknown roadmap node {t}")


def _triangle_anchor(mesh: TriMesh, t: int) -> Point:
    """Circumcenter, falling back to the centroid when the circumcenter
    leaves the triangle (obtuse triangles); a cost-metric choice only."""
    base = 3 * t
    a, b, c = mesh.tv[base], mesh.tv[base + 1], mesh.tv[base + 2]
    vx, vy = mesh.vx, mesh.vy
    cc = circumcenter((vx[a], vy[a]), (vx[b], vy[b]), (vx[c], vy[c]))
    inside = (
        orient_xy(vx[a], vy[a], vx[b], vy[b], cc.x, cc.y) >= 0
        and orient_xy(vx[b], vy[b], vx[c], vy[c], cc.x, cc.y) >= 0
        and orient_xy(vx[c], vy[c], vx[a], vy[a], cc.x, cc.y) >= 0
    )
    if inside:
        return cc
    return Point((vx[a] + vx[b] + vx[c]) / 3.0, (vy[a] + vy[b] + vy[c]) / 3.0)


def build_roadmap(mesh: TriMesh) -> RoadmapGraph:
    """Dual graph of the mesh: one node per triangle, one undirected edge
    per shared unconstrained side.  O(#triangles)."""
    nt = mesh.n_triangles
    anchors = [_triangle_anchor(mesh, t) for t in range(nt)]
    adj: List[List[Tuple[int, float, float, EdgeRef]]] = [[] for _ in range(nt)]
    for t in range(nt):
        base = 3 * t
        for s in range(3):
            nb = mesh.tn[base + s]
            if nb < 0 or mesh.tc[base + s]:
                continue
            width = mesh.edge_length(EdgeRef(t, s))
            cost = math.dist(anchors[t], anchors[nb])
            adj[t].append((nb, width, cost, EdgeRef(t, s)))
    return RoadmapGraph(anchors, adj)


def reachable(graph: RoadmapGraph, src: int, dst: int, c: float) -> bool:
    """Whether dst can be reached from src using only gates of width >= 2c."""
    graph._check_node(src)
    graph._check_node(dst)
    if c < 0:
        raise InputError("clearance must be nonnegative")
    if src == dst:
        return True
    need = 2.0 * c
    seen = bytearray(graph.n_nodes)
    seen[src] = 1
    stack = [src]
    while stack:
        t = stack.pop()
        for (nb, width, _, _) in graph.adj[t]:
            if width >= need and not seen[nb]:
                if nb == dst:
                    return True
                seen[nb] = 1
                stack.append(nb)
    return False


def shortest_channel(
    graph: RoadmapGraph, src: int, dst: int, c: float
) -> Optional[Channel]:
    """Cheapest triangle walk from src to dst among those whose gates are
    all at least 2c wide, under the anchor-distance metric; ties break
    toward lower node ids.  None when unreachable.

    The anchor metric approximates plane length; the realized path through
    the channel is computed by the funnel, and a cheaper channel under this
    metric is not always the globally shortest plane path.
    """
    graph._check_node(src)
    graph._check_node(dst)
    if c < 0:
        raise InputError("clearance must be nonnegative")
    if src == dst:
        return Channel([src], [])
    need = 2.0 * c
    n = graph.n_nodes
    dist = [math.inf] * n
    parent: Dict[int, Tuple[int, EdgeRef]] = {}
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, t = heapq.heappop(heap)
        if d > dist[t]:
            continue
        if t == dst:
            break
        for (nb, width, cost, gate) in graph.adj[t]:
            if width < need:
                continue
            nd = d + cost
            if nd < dist[nb]:
                dist[nb] = nd
                parent[nb] = (t, gate)
                heapq.heappush(heap, (nd, nb))
    if math.isinf(dist[dst]):
        return None
    tris = [dst]
    gates: List[EdgeRef] = []
    t = dst
    while t != src:
        t, gate = parent[t]
        tris.append(t)
        gates.append(gate)
    tris.reverse()
    gates.reverse()
    return Channel(tris, gates)


def max_clearance(graph: RoadmapGraph, src: int, dst: int) -> Optional[float]:
    """Largest clearance at which dst stays reachable from src: half the
    maximin gate width over all walks.  math.inf when src == dst (no gate
    constrains it), None when unreachable even at zero clearance."""
    graph._check_node(src)
    graph._check_node(dst)
    if src == dst:
        return math.inf
    n = graph.n_nodes
    best = [-math.inf] * n
    best[src] = math.inf
    heap = [(-math.inf, src)]
    while heap:
        neg, t = heapq.heappop(heap)
        w = -neg
        if w < best[t]:
            continue
        if t == dst:
            return w / 2.0
        for (nb, width, _, _) in graph.adj[t]:
            nw = min(w, width)
            if nw > best[nb]:
                best[nb] = nw
                heapq.heappush(heap, (-nw, nb))
    if best[dst] == -math.inf:
        return None
    return best[dst] / 2.0


def dump_graph(graph: RoadmapGraph) -> str:
    """Plain-text dump: one `n <id> <x> <y>` line per node, then one
    `e <id1> <id2> <gate_width> <cost>` line per undirected gate."""
    lines = []
    for t in range(graph.n_nodes):
        a = graph.anchors[t]
        lines.append(f"n {t} {a.x!r} {a.y!r}")
    for t in range(graph.n_nodes):
        for (nb, width, cost, _) in graph.adj[t]:
            if nb > t:
                lines.append(f"e {t} {nb} {width!r} {cost!r}")
    return "\n".join(lines) + "\n"


class ReachabilityIndex:
    """Union-find over gates sorted by width, for repeated reachability
    queries.  Efficient when queried at non-increasing clearance (gates are
    merged incrementally); a clearance increase rebuilds from scratch.
    """

    def __init__(self, graph: RoadmapGraph):
        self.n = graph.n_nodes
        edges = []
        for t in range(graph.n_nodes):
            for (nb, width, _, _) in graph.adj[t]:
                if nb > t:
                    edges.append((width, t, nb))
        edges.sort(key=lambda e: (-e[0], e[1], e[2]))
        self.edges = edges
        self._reset()

    def _reset(self):
        self.parent = list(range(self.n))
        self.pos = 0
        self.threshold = math.inf

    def _find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def reachable(self, src: int, dst: int, c: float) -> bool:
        need = 2.0 * c
        if need > self.threshold:
            self._reset()
        self.threshold = need
        while self.pos < len(self.edges) and self.edges[self.pos][0] >= need:
            _, a, b = self.edges[self.pos]
            ra, rb = self._find(a), self._find(b)
            if ra != rb:
                self.parent[max(ra, rb)] = min(ra, rb)
            self.pos += 1
        return self._find(src) == self._find(dst)
