"""Exact-decision planar geometry primitives.

Predicates (orientation, incircle) run a floating-point filter first and fall
back to exact rational arithmetic on the original float coordinates, so every
sign decision equals the exact evaluation.  Cocircular ties are broken by a
symbolic perturbation indexed by point id: point ``i`` behaves as if its lift
onto the paraboloid were lowered by ``delta**(i + 1)`` for an infinitesimal
``delta > 0``.  Lower-indexed points therefore count as (infinitesimally)
inside in an exact tie.  The rule is realizable by an actual perturbation,
hence globally consistent.
"""

from fractions import Fraction

import numpy as np

# Shewchuk-style static filter constants for double precision.
_ORIENT_EPS = 3.3306690738754716e-16
_INCIRCLE_EPS = 1.1102230246251565e-15


def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of the signed area of triangle (a, b, c): +1 CCW, -1 CW, 0 collinear."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    if detleft > 0:
        if detright <= 0:
            return _sign(det)
        detsum = detleft + detright
    elif detleft < 0:
        if detright >= 0:
            return _sign(det)
        detsum = -detleft - detright
    else:
        return _sign(det)
    if abs(det) >= _ORIENT_EPS * detsum:
        return _sign(det)
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def _sign(x):
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _orient2d_exact(ax, ay, bx, by, cx, cy):
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (ax, ay, bx, by, cx, cy))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return _sign(det)


def _incircle_det_exact(ax, ay, bx, by, cx, cy, dx, dy):
    ax, ay, bx, by, cx, cy, dx, dy = (
        Fraction(v) for v in (ax, ay, bx, by, cx, cy, dx, dy))
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - bdy * cdx)
           - blift * (adx * cdy - ady * cdx)
           + clift * (adx * bdy - ady * bdx))
    return det


def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """+1 iff d is strictly inside the circumcircle of CCW triangle (a, b, c).

    Exact-zero (cocircular) is returned as 0; callers wanting the perturbed
    decision use :func:`incircle_perturbed`.
    """
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    t1 = bdx * cdy - bdy * cdx
    t2 = adx * cdy - ady * cdx
    t3 = adx * bdy - ady * bdx
    det = alift * t1 - blift * t2 + clift * t3
    permanent = alift * (abs(bdx * cdy) + abs(bdy * cdx)) \
        + blift * (abs(adx * cdy) + abs(ady * cdx)) \
        + clift * (abs(adx * bdy) + abs(ady * bdx))
    if abs(det) > _INCIRCLE_EPS * permanent:
        return _sign(det)
    return _sign(_incircle_det_exact(ax, ay, bx, by, cx, cy, dx, dy))


def incircle_perturbed(pts, ia, ib, ic, id_):
    """Perturbed incircle decision on indexed points; never returns 0.

    ``pts`` is an (N, 2) float array; (ia, ib, ic) must be CCW.  Returns +1
    iff point ``id_`` is inside the circumcircle of (ia, ib, ic) under the
    index-symbolic perturbation documented in the module docstring.
    """
    ax, ay = pts[ia]
    bx, by = pts[ib]
    cx, cy = pts[ic]
    dx, dy = pts[id_]
    s = incircle(ax, ay, bx, by, cx, cy, dx, dy)
    if s != 0:
        return s
    # Exact tie: sign of the first nonvanishing perturbation coefficient,
    # scanned in increasing point index (largest perturbation first).
    coefs = {
        ia: lambda: -orient2d(dx, dy, bx, by, cx, cy),
        ib: lambda: orient2d(dx, dy, ax, ay, cx, cy),
        ic: lambda: -orient2d(dx, dy, ax, ay, bx, by),
        id_: lambda: orient2d(ax, ay, bx, by, cx, cy),
    }
    for idx in sorted(coefs):
        s = coefs[idx]()
        if s != 0:
            return s
    raise ValueError("four collinear points in incircle query")


def incircle_batch(pa, pb, pc, pd):
    """Vectorized float incircle determinant plus a safe error bound.

    Returns (det, errbound) arrays; ``|det| <= errbound`` marks entries whose
    sign must be decided exactly.
    """
    adx = pa[:, 0] - pd[:, 0]
    ady = pa[:, 1] - pd[:, 1]
    bdx = pb[:, 0] - pd[:, 0]
    bdy = pb[:, 1] - pd[:, 1]
    cdx = pc[:, 0] - pd[:, 0]
    cdy = pc[:, 1] - pd[:, 1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - bdy * cdx)
           - blift * (adx * cdy - ady * cdx)
           + clift * (adx * bdy - ady * bdx))
    permanent = (alift * (np.abs(bdx * cdy) + np.abs(bdy * cdx))
                 + blift * (np.abs(adx * cdy) + np.abs(ady * cdx))
                 + clift * (np.abs(adx * bdy) + np.abs(ady * bdx)))
    return det, _INCIRCLE_EPS * permanent


def orient_batch(pa, pb, pc):
    """Vectorized orientation determinant plus safe error bound."""
    det = ((pa[:, 0] - pc[:, 0]) * (pb[:, 1] - pc[:, 1])
           - (pa[:, 1] - pc[:, 1]) * (pb[:, 0] - pc[:, 0]))
    bound = _ORIENT_EPS * (
        np.abs((pa[:, 0] - pc[:, 0]) * (pb[:, 1] - pc[:, 1]))
        + np.abs((pa[:, 1] - pc[:, 1]) * (pb[:, 0] - pc[:, 0])))
    return det, bound


def squared_distance_compare(p, a, b):
    """-1/0/+1 as |p-a|^2 vs |p-b|^2, decided exactly near ties."""
    da = (p[0] - a[0]) ** 2 + (p[1] - a[1]) ** 2
    db = (p[0] - b[0]) ** 2 + (p[1] - b[1]) ** 2
    diff = da - db
    scale = da + db
    if abs(diff) > 1e-12 * scale:
        return _sign(diff)
    pf = (Fraction(p[0]), Fraction(p[1]))
    af = (Fraction(a[0]), Fraction(a[1]))
    bf = (Fraction(b[0]), Fraction(b[1]))
    dae = (pf[0] - af[0]) ** 2 + (pf[1] - af[1]) ** 2
    dbe = (pf[0] - bf[0]) ** 2 + (pf[1] - bf[1]) ** 2
    return _sign(dae - dbe)


def points_in_polygon(points, polygon):
    """Boolean mask: which of ``points`` lie strictly inside ``polygon``.

    Ray casting with half-open edges; points exactly on the boundary are not
    guaranteed either way (callers keep such cases out by construction).
    """
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return np.zeros(0, dtype=bool)
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]
    poly = np.asarray(polygon, dtype=float)
    x1 = poly[:, 0][None, :]
    y1 = poly[:, 1][None, :]
    x2 = np.roll(poly[:, 0], -1)[None, :]
    y2 = np.roll(poly[:, 1], -1)[None, :]
    crosses = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    hits = crosses & (xint > px)
    return hits.sum(axis=1) % 2 == 1


def point_in_convex_polygon(point, polygon, include_boundary=True):
    """Exact containment test for a convex CCW polygon."""
    n = len(polygon)
    for i in range(n):
        a = polygon[i]
        b = polygon[(i + 1) % n]
        s = orient2d(a[0], a[1], b[0], b[1], point[0], point[1])
        if s < 0 or (s == 0 and not include_boundary):
            return False
    return True


def clip_convex_by_halfplane(polygon, a, b):
    """Clip convex CCW polygon to the left side of directed line a -> b."""
    out = []
    n = len(polygon)
    for i in range(n):
        p = polygon[i]
        q = polygon[(i + 1) % n]
        sp = orient2d(a[0], a[1], b[0], b[1], p[0], p[1])
        sq = orient2d(a[0], a[1], b[0], b[1], q[0], q[1])
        if sp >= 0:
            out.append(p)
        if (sp > 0 and sq < 0) or (sp < 0 and sq > 0):
            out.append(_line_segment_intersection(a, b, p, q))
    return out


def _line_segment_intersection(a, b, p, q):
    # Intersection of line (a, b) with segment (p, q); caller guarantees a crossing.
    d1x, d1y = b[0] - a[0], b[1] - a[1]
    d2x, d2y = q[0] - p[0], q[1] - p[1]
    denom = d1x * d2y - d1y * d2x
    t = ((p[0] - a[0]) * d1y - (p[1] - a[1]) * d1x) / -denom
    return (p[0] + t * d2x, p[1] + t * d2y)


def segments_intersect(p1, p2, q1, q2):
    """True iff closed segments p1p2 and q1q2 share at least one point."""
    d1 = orient2d(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1])
    d2 = orient2d(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1])
    d3 = orient2d(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1])
    d4 = orient2d(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1])
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0
            and (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def _on_segment(a, b, p):
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def polygon_area(polygon):
    """Signed area (positive for CCW)."""
    poly = np.asarray(polygon, dtype=float)
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
