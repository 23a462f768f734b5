"""Low-level planar predicates and constructions.

The predicates (`orient2d`, `incircle`, `acute_sign`) are exact: a cheap
floating-point filter handles the vast majority of calls, and an arbitrary
precision rational fallback decides the near-degenerate ones, so a sign is
never wrong.  The constructions (`circumcircle`, `parallel_circle_point`,
projections) are ordinary double precision: they produce coordinates, and
callers tolerate rounding there.

All functions accept any 2-sequence as a point; constructions return `Point`.
Everything here is a pure function and safe to call concurrently.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .errors import InputError

PointLike = Sequence[float]


class Point(NamedTuple):
    x: float
    y: float


class Circle(NamedTuple):
    center: Point
    radius: float


# Shewchuk-style static filter bounds for double precision.
_EPS = math.ulp(1.0) / 2.0  # 2^-53
ORIENT_FILTER = (3.0 + 16.0 * _EPS) * _EPS
INCIRCLE_FILTER = (10.0 + 96.0 * _EPS) * _EPS


def _orient2d_exact(ax, ay, bx, by, cx, cy) -> int:
    ax, ay = Fraction(ax), Fraction(ay)
    bx, by = Fraction(bx), Fraction(by)
    cx, cy = Fraction(cx), Fraction(cy)
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    ax, ay = Fraction(ax), Fraction(ay)
    bx, by = Fraction(bx), Fraction(by)
    cx, cy = Fraction(cx), Fraction(cy)
    dx, dy = Fraction(dx), Fraction(dy)
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def _acute_exact(ax, ay, bx, by, cx, cy) -> int:
    ax, ay = Fraction(ax), Fraction(ay)
    bx, by = Fraction(bx), Fraction(by)
    cx, cy = Fraction(cx), Fraction(cy)
    dot = (ax - bx) * (cx - bx) + (ay - by) * (cy - by)
    if dot > 0:
        return 1
    if dot < 0:
        return -1
    return 0


def orient_xy(ax, ay, bx, by, cx, cy) -> int:
    """Coordinate-level orient2d; see `orient2d`."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    bound = ORIENT_FILTER * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def orient2d(a: PointLike, b: PointLike, c: PointLike) -> int:
    """Sign of the orientation of the triple (a, b, c).

    Returns +1 if c lies strictly to the left of the directed line a->b,
    -1 if strictly to the right, 0 if the three points are collinear.
    """
    return orient_xy(a[0], a[1], b[0], b[1], c[0], c[1])


def incircle_xy(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    """Coordinate-level incircle; see `incircle`."""
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady
    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy
    det = (
        alift * (bdxcdy - cdxbdy)
        + blift * (cdxady - adxcdy)
        + clift * (adxbdy - bdxady)
    )
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    bound = INCIRCLE_FILTER * permanent
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


def incircle(a: PointLike, b: PointLike, c: PointLike, d: PointLike) -> int:
    """Sign of the in-circumcircle test: +1 if d is strictly inside the
    circumcircle of the counterclockwise triangle (a, b, c), -1 if strictly
    outside, 0 if on it.

    The caller must supply (a, b, c) in counterclockwise order.
    """
    return incircle_xy(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1])


def acute_xy(ax, ay, bx, by, cx, cy) -> int:
    """Coordinate-level acute_sign; see `acute_sign`."""
    d1 = (ax - bx) * (cx - bx)
    d2 = (ay - by) * (cy - by)
    dot = d1 + d2
    bound = ORIENT_FILTER * (abs(d1) + abs(d2))
    if dot > bound:
        return 1
    if dot < -bound:
        return -1
    return _acute_exact(ax, ay, bx, by, cx, cy)


def acute_sign(a: PointLike, corner: PointLike, c: PointLike) -> int:
    """Sign of the dot product (a - corner) . (c - corner).

    +1 means the angle at `corner` in the corner a-corner-c is strictly
    acute, 0 exactly right, -1 obtuse (or a/c coincides with corner).
    """
    return acute_xy(a[0], a[1], corner[0], corner[1], c[0], c[1])


def project_onto_segment_interior(
    p: PointLike, a: PointLike, b: PointLike
) -> Optional[Point]:
    """Orthogonal projection of p onto the line a-b, if it falls strictly
    inside the open segment (a, b); otherwise None.

    Interiority is the strict parametric criterion 0 < t < 1 with
    t = ((p-a).(b-a)) / |b-a|^2, decided exactly: a projection landing
    exactly on an endpoint is not interior.  The returned coordinates are
    double precision.
    """
    ax, ay = a[0], a[1]
    bx, by = b[0], b[1]
    if ax == bx and ay == by:
        raise InputError("degenerate segment: endpoints coincide")
    # t > 0 iff angle at a is acute; t < 1 iff angle at b is acute.
    if acute_sign(p, a, b) <= 0 or acute_sign(p, b, a) <= 0:
        return None
    px, py = p[0], p[1]
    dx, dy = bx - ax, by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    return Point(ax + t * dx, ay + t * dy)


def circumcenter(a: PointLike, b: PointLike, c: PointLike) -> Point:
    """Center of the circle through three non-collinear points."""
    if orient2d(a, b, c) == 0:
        raise InputError("circumcircle of collinear points is undefined")
    ax, ay = a[0], a[1]
    bax, bay = b[0] - ax, b[1] - ay
    cax, cay = c[0] - ax, c[1] - ay
    b2 = bax * bax + bay * bay
    c2 = cax * cax + cay * cay
    d = 2.0 * (bax * cay - bay * cax)
    ux = (cay * b2 - bay * c2) / d
    uy = (bax * c2 - cax * b2) / d
    return Point(ax + ux, ay + uy)


def circumcircle(a: PointLike, b: PointLike, c: PointLike) -> Circle:
    """Circle through three non-collinear points."""
    center = circumcenter(a, b, c)
    r = math.dist(center, (a[0], a[1]))
    return Circle(center, r)


def parallel_circle_point(a1: PointLike, a2: PointLike, a3: PointLike) -> Point:
    """Second intersection of the circumcircle of (a1, a2, a3) with the line
    through a1 parallel to a2-a3.

    When that line is tangent to the circle (a1 sits at the extreme of the
    circle in the direction perpendicular to a2-a3), there is no second
    point and a1 itself is returned; callers treat that as "skip".
    """
    o = circumcenter(a1, a2, a3)
    ux, uy = a3[0] - a2[0], a3[1] - a2[1]
    norm2 = ux * ux + uy * uy
    t = ((o.x - a1[0]) * ux + (o.y - a1[1]) * uy) / norm2
    if t == 0.0:
        return Point(a1[0], a1[1])
    return Point(a1[0] + 2.0 * t * ux, a1[1] + 2.0 * t * uy)


def _collinear_point_on_segment(p: PointLike, a: PointLike, b: PointLike) -> bool:
    # p is known collinear with a-b; closed containment via exact dot signs.
    if (p[0] == a[0] and p[1] == a[1]) or (p[0] == b[0] and p[1] == b[1]):
        return True
    # strictly between iff both angles (b at a side) are acute
    return acute_sign(p, a, b) > 0 and acute_sign(p, b, a) > 0


def segments_properly_cross(
    p: PointLike, q: PointLike, r: PointLike, s: PointLike
) -> bool:
    """True iff the closed segments [p, q] and [r, s] intersect.

    Shared endpoints and mere touching count as intersecting.
    """
    o1 = orient2d(p, q, r)
    o2 = orient2d(p, q, s)
    o3 = orient2d(r, s, p)
    o4 = orient2d(r, s, q)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _collinear_point_on_segment(r, p, q):
        return True
    if o2 == 0 and _collinear_point_on_segment(s, p, q):
        return True
    if o3 == 0 and _collinear_point_on_segment(p, r, s):
        return True
    if o4 == 0 and _collinear_point_on_segment(q, r, s):
        return True
    return False


def dist_point_segment(p: PointLike, a: PointLike, b: PointLike) -> float:
    """Euclidean distance from p to the closed segment [a, b]."""
    px, py = p[0], p[1]
    ax, ay = a[0], a[1]
    bx, by = b[0], b[1]
    dx, dy = bx - ax, by - ay
    norm2 = dx * dx + dy * dy
    if norm2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / norm2
    if t <= 0.0:
        return math.hypot(px - ax, py - ay)
    if t >= 1.0:
        return math.hypot(px - bx, py - by)
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))
