"""Embedded triangulated planar map: the Delaunay graph of a configuration.

The triangulation is the unique Delaunay triangulation under the index-based
symbolic perturbation of :mod:`planarcolor.geometry`: a fast construction
(Qhull when available, a lexicographic sweep otherwise) is legalized by Lawson
flips driven by the exact perturbed incircle predicate, then the structure is
canonicalized so identical inputs give bit-identical maps regardless of the
construction path.

The outer face plays the role of infinity.  Queries whose answer would flow
through the outer face for a claim about interior structure raise
``BoundaryCensored`` instead of guessing.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (BoundaryCensored, DegenerateInput, InternalInvariantViolation,
                     PreconditionError)
from .geometry import (incircle_batch, incircle_perturbed, orient2d,
                       points_in_polygon)
from .pointproc import canonical_rank


@dataclass(frozen=True)
class Cycle:
    """Cycle of a map, vertices in cyclic order (each consecutive pair adjacent,
    last adjacent to first)."""

    vertices: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        if len(set(self.vertices)) != len(self.vertices):
            raise PreconditionError("cycle vertices must be distinct")

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    @property
    def even(self):
        return len(self.vertices) % 2 == 0

    def vertex_set(self):
        return frozenset(self.vertices)

    def canonical(self, rank):
        """Rotate/orient so the least-rank vertex comes first, followed by the
        smaller-rank of its two cycle neighbors."""
        verts = self.vertices
        n = len(verts)
        i0 = min(range(n), key=lambda i: rank[verts[i]])
        fwd = verts[(i0 + 1) % n]
        bwd = verts[(i0 - 1) % n]
        if rank[fwd] <= rank[bwd]:
            rotated = tuple(verts[(i0 + j) % n] for j in range(n))
        else:
            rotated = tuple(verts[(i0 - j) % n] for j in range(n))
        return Cycle(rotated)


def as_vertex_set(vs):
    """Normalize an iterable of vertex ids to a sorted int64 array."""
    arr = np.unique(np.asarray(list(vs) if not isinstance(vs, np.ndarray) else vs,
                               dtype=np.int64))
    return arr


class PlanarMap:
    """Triangulated planar map with a half-edge (DCEL) rotation system.

    Half-edge ``e`` has origin ``he_org[e]``; inner half-edges are ``3*t + k``
    for triangle ``t`` (CCW), boundary half-edges of the outer face follow.
    ``he_face`` is the triangle index, or ``ntri`` for the outer face.
    """

    def __init__(self, ps, triangles):
        self.ps = ps
        self.points = ps.points
        n = len(self.points)
        self.nverts = n
        tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        tri = _canonical_triangles(tri)
        self.triangles = tri
        t = len(tri)
        self.ntri = t
        self.outer_face = t

        org = tri.reshape(-1)
        dst = tri[:, [1, 2, 0]].reshape(-1)
        keys = org * n + dst
        rev = dst * n + org
        key_to_he = {int(k): e for e, k in enumerate(keys)}
        twin = np.full(3 * t, -1, dtype=np.int64)
        for e in range(3 * t):
            m = key_to_he.get(int(rev[e]), -1)
            twin[e] = m
        hull_he = np.where(twin == -1)[0]
        nb = len(hull_he)
        nhe = 3 * t + nb
        he_org = np.empty(nhe, dtype=np.int64)
        he_org[:3 * t] = org
        he_twin = np.empty(nhe, dtype=np.int64)
        he_twin[:3 * t] = twin
        he_next = np.empty(nhe, dtype=np.int64)
        he_prev = np.empty(nhe, dtype=np.int64)
        he_face = np.empty(nhe, dtype=np.int64)
        base = np.arange(t, dtype=np.int64) * 3
        for k in range(3):
            he_next[base + k] = base + (k + 1) % 3
            he_prev[base + k] = base + (k + 2) % 3
            he_face[base + k] = np.arange(t)
        # boundary ring: reversed hull edges, outer face on the left
        borg_of = {}
        for j, e in enumerate(hull_he):
            b = 3 * t + j
            he_org[b] = dst[e]
            he_twin[b] = e
            he_twin[e] = b
            he_face[b] = t
            borg_of[int(dst[e])] = b
        for j, e in enumerate(hull_he):
            b = 3 * t + j
            # next boundary he starts at this one's destination (= org of e)
            he_next[b] = borg_of[int(org[e])]
            he_prev[he_next[b]] = b
        self.he_org = he_org
        self.he_twin = he_twin
        self.he_next = he_next
        self.he_prev = he_prev
        self.he_face = he_face
        self.n_boundary = nb

        # rotation system: neighbors in CCW order per vertex
        out_min = np.full(n, -1, dtype=np.int64)
        for e in range(nhe - 1, -1, -1):
            out_min[he_org[e]] = e
        nbr_lists = []
        indptr = np.zeros(n + 1, dtype=np.int64)
        for v in range(n):
            e0 = out_min[v]
            if e0 == -1:
                nbr_lists.append(np.empty(0, dtype=np.int64))
                continue
            cyc = []
            e = e0
            while True:
                cyc.append(he_org[he_twin[e]] if he_twin[e] != -1 else -1)
                e = he_twin[he_prev[e]]
                if e == e0:
                    break
            nbr_lists.append(np.asarray(cyc, dtype=np.int64))
        self.neighbors = nbr_lists
        indptr[1:] = np.cumsum([len(a) for a in nbr_lists])
        self.indptr = indptr
        self.indices = (np.concatenate(nbr_lists) if n else
                        np.empty(0, dtype=np.int64))

        # every undirected edge keyed as min(u,v) * n + max(u,v)
        ku = np.minimum(org, dst).astype(np.int64) * n + np.maximum(org, dst)
        self._edge_keys = set(int(k) for k in np.unique(ku))
        self.nedges = len(self._edge_keys)

        # order hull CW along the boundary ring, then flip to CCW
        ring = []
        if nb:
            b = 3 * t
            for _ in range(nb):
                ring.append(int(he_org[b]))
                b = he_next[b]
        self.hull = np.asarray(ring[::-1], dtype=np.int64)
        self._hull_set = set(int(v) for v in self.hull)
        self._rank = None

    # -- basic queries ----------------------------------------------------

    @property
    def rank(self):
        if self._rank is None:
            self._rank = canonical_rank(self.ps)
        return self._rank

    def nbrs(self, v):
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v):
        return int(self.indptr[v + 1] - self.indptr[v])

    def edge_exists(self, u, v):
        if u > v:
            u, v = v, u
        return (u * self.nverts + v) in self._edge_keys

    def edges(self):
        """(E, 2) array of undirected edges, u < v, lexicographically sorted."""
        ks = np.fromiter(self._edge_keys, dtype=np.int64, count=self.nedges)
        ks.sort()
        return np.stack([ks // self.nverts, ks % self.nverts], axis=1)

    def is_hull_vertex(self, v):
        return int(v) in self._hull_set

    def euler_characteristic(self):
        return self.nverts - self.nedges + (self.ntri + 1)

    def face_vertices(self, f):
        if f == self.outer_face:
            return list(self.hull)
        return list(self.triangles[f])


def _canonical_triangles(tri):
    rolled = np.empty_like(tri)
    mi = np.argmin(tri, axis=1)
    for k in range(3):
        sel = mi == k
        rolled[sel] = np.stack([tri[sel, k], tri[sel, (k + 1) % 3],
                                tri[sel, (k + 2) % 3]], axis=1)
    order = np.lexsort((rolled[:, 2], rolled[:, 1], rolled[:, 0]))
    return rolled[order]


# -- construction ---------------------------------------------------------


def build_delaunay(ps):
    """Delaunay triangulation of a configuration, exact and canonical.

    Raises DegenerateInput for < 3 points, coincident points (rejected by
    PointSet already) or an all-collinear configuration.
    """
    pts = ps.points
    n = len(pts)
    if n < 3:
        raise DegenerateInput("need at least 3 points")
    if _all_collinear(pts):
        raise DegenerateInput("all points are collinear")
    tri = _initial_triangulation(pts)
    tri = _legalize(pts, tri)
    m = PlanarMap(ps, tri)
    _validate_map(m)
    return m


def _all_collinear(pts):
    a = pts[0]
    b = None
    for i in range(1, len(pts)):
        if pts[i][0] != a[0] or pts[i][1] != a[1]:
            b = pts[i]
            break
    if b is None:
        return True
    for i in range(1, len(pts)):
        if orient2d(a[0], a[1], b[0], b[1], pts[i][0], pts[i][1]) != 0:
            return False
    return True


def _initial_triangulation(pts):
    """Some valid triangulation of the convex hull (not yet Delaunay)."""
    try:
        from scipy.spatial import Delaunay as _SciDelaunay
        from scipy.spatial import QhullError
        try:
            simp = _SciDelaunay(pts).simplices
        except QhullError:
            return _sweep_triangulation(pts)
        tri = _orient_ccw(pts, simp)
        if tri is None or not _valid_triangulation(pts, tri):
            return _sweep_triangulation(pts)
        return tri
    except ImportError:  # pragma: no cover
        return _sweep_triangulation(pts)


def _orient_ccw(pts, simp):
    pa = pts[simp[:, 0]]
    pb = pts[simp[:, 1]]
    pc = pts[simp[:, 2]]
    det = ((pa[:, 0] - pc[:, 0]) * (pb[:, 1] - pc[:, 1])
           - (pa[:, 1] - pc[:, 1]) * (pb[:, 0] - pc[:, 0]))
    out = simp.copy()
    flip = det < 0
    out[flip, 0], out[flip, 1] = simp[flip, 1], simp[flip, 0]
    # exact check for the near-degenerate ones
    sus = np.abs(det) <= 1e-7 * (np.abs(pa[:, 0] - pc[:, 0]) + np.abs(pb[:, 1] - pc[:, 1]) + 1.0)
    for t in np.where(sus)[0]:
        a, b, c = out[t]
        s = orient2d(pts[a][0], pts[a][1], pts[b][0], pts[b][1], pts[c][0], pts[c][1])
        if s == 0:
            return None
        if s < 0:
            out[t, 0], out[t, 1] = out[t, 1], out[t, 0]
    return out


def _valid_triangulation(pts, tri):
    """Each directed edge used at most once, Euler relation holds."""
    n = len(pts)
    org = tri.reshape(-1)
    dst = tri[:, [1, 2, 0]].reshape(-1)
    keys = org.astype(np.int64) * n + dst
    if len(np.unique(keys)) != len(keys):
        return False
    und = np.unique(np.minimum(org, dst).astype(np.int64) * n + np.maximum(org, dst))
    v_used = np.unique(tri.reshape(-1))
    if len(v_used) != n:
        return False
    euler = n - len(und) + len(tri) + 1
    return euler == 2


def _sweep_triangulation(pts):
    """Lexicographic incremental hull sweep; handles exactly-degenerate inputs."""
    n = len(pts)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    tris = []
    hull = []  # CCW polygon as a list of point ids
    path = [int(order[0])]  # collinear prefix
    started = False
    for oi in range(1, n):
        p = int(order[oi])
        if not started:
            a = pts[path[0]]
            collin = True
            if len(path) >= 2:
                b = pts[path[1]]
                collin = orient2d(a[0], a[1], b[0], b[1], pts[p][0], pts[p][1]) == 0
            if collin:
                path.append(p)
                continue
            # fan-connect p to the collinear path
            for i in range(len(path) - 1):
                u, v = path[i], path[i + 1]
                s = orient2d(pts[u][0], pts[u][1], pts[v][0], pts[v][1],
                             pts[p][0], pts[p][1])
                tris.append((u, v, p) if s > 0 else (v, u, p))
            first = pts[path[0]]
            last = pts[path[-1]]
            s = orient2d(first[0], first[1], last[0], last[1], pts[p][0], pts[p][1])
            hull = list(path) + [p] if s > 0 else list(reversed(path)) + [p]
            started = True
            continue
        h = len(hull)
        vis = [orient2d(pts[hull[i]][0], pts[hull[i]][1],
                        pts[hull[(i + 1) % h]][0], pts[hull[(i + 1) % h]][1],
                        pts[p][0], pts[p][1]) < 0
               for i in range(h)]
        if not any(vis):
            raise InternalInvariantViolation("sweep point inside current hull")
        # visible edges form a contiguous arc; find its start
        start = next(i for i in range(h) if vis[i] and not vis[(i - 1) % h])
        run = 0
        while vis[(start + run) % h]:
            run += 1
        for j in range(run):
            i = (start + j) % h
            u, v = hull[i], hull[(i + 1) % h]
            tris.append((v, u, p))
        keep_from = (start + run) % h
        new_hull = []
        i = keep_from
        while True:
            new_hull.append(hull[i])
            if i == start:
                break
            i = (i + 1) % h
        new_hull.append(p)
        hull = new_hull
    if not started:
        raise DegenerateInput("all points are collinear")
    return np.asarray(tris, dtype=np.int64)


def _legalize(pts, tri):
    """Lawson flips to the unique symbolically-perturbed Delaunay triangulation."""
    n = len(pts)
    tris = [list(t) for t in tri]
    edge_map = {}
    for t, (a, b, c) in enumerate(tris):
        edge_map[(a, b)] = t
        edge_map[(b, c)] = t
        edge_map[(c, a)] = t

    def apex(t, u, v):
        a, b, c = tris[t]
        if (a, b) == (u, v):
            return c
        if (b, c) == (u, v):
            return a
        return b

    # fast vectorized prefilter: only edges whose float test is illegal or
    # uncertain go through the exact perturbed predicate
    org = tri.reshape(-1)
    dst = tri[:, [1, 2, 0]].reshape(-1)
    seen = set()
    queue = []
    cand_u, cand_v, cand_p, cand_q = [], [], [], []
    cand_edges = []
    for e in range(len(org)):
        u, v = int(org[e]), int(dst[e])
        if (v, u) not in edge_map or (min(u, v), max(u, v)) in seen:
            continue
        seen.add((min(u, v), max(u, v)))
        cand_edges.append((u, v))
        cand_u.append(u)
        cand_v.append(v)
        cand_p.append(apex(edge_map[(u, v)], u, v))
        cand_q.append(apex(edge_map[(v, u)], v, u))
    if cand_edges:
        det, bound = incircle_batch(pts[cand_u], pts[cand_v], pts[cand_p],
                                    pts[np.asarray(cand_q)])
        for i, (u, v) in enumerate(cand_edges):
            if det[i] > -bound[i]:   # illegal or uncertain
                queue.append((u, v))
    flips = 0
    max_flips = 12 * len(tris) + 4096
    while queue:
        u, v = queue.pop()
        t1 = edge_map.get((u, v))
        t2 = edge_map.get((v, u))
        if t1 is None or t2 is None:
            continue
        p = apex(t1, u, v)
        q = apex(t2, v, u)
        if incircle_perturbed(pts, u, v, p, q) <= 0:
            continue
        flips += 1
        if flips > max_flips:
            raise InternalInvariantViolation("legalization did not terminate")
        # flip uv -> pq: (u,v,p),(v,u,q) become (u,q,p),(v,p,q)
        for a, b, c in ((u, v, p), (v, u, q)):
            for k in ((a, b), (b, c), (c, a)):
                edge_map.pop(k, None)
        tris[t1] = [u, q, p]
        tris[t2] = [v, p, q]
        for t, (a, b, c) in ((t1, tris[t1]), (t2, tris[t2])):
            edge_map[(a, b)] = t
            edge_map[(b, c)] = t
            edge_map[(c, a)] = t
        for a, b in ((u, q), (q, v), (v, p), (p, u)):
            if (a, b) in edge_map and (b, a) in edge_map:
                queue.append((a, b))
    return np.asarray(tris, dtype=np.int64)


def _validate_map(m):
    if m.euler_characteristic() != 2:
        raise InternalInvariantViolation(
            f"Euler relation violated: chi={m.euler_characteristic()}")
    pa = m.points[m.triangles[:, 0]]
    pb = m.points[m.triangles[:, 1]]
    pc = m.points[m.triangles[:, 2]]
    det = ((pa[:, 0] - pc[:, 0]) * (pb[:, 1] - pc[:, 1])
           - (pa[:, 1] - pc[:, 1]) * (pb[:, 0] - pc[:, 0]))
    bad = np.where(det <= 0)[0]
    for t in bad:
        a, b, c = m.triangles[t]
        if orient2d(m.points[a][0], m.points[a][1], m.points[b][0], m.points[b][1],
                    m.points[c][0], m.points[c][1]) <= 0:
            raise InternalInvariantViolation(f"non-CCW triangle {t}")


# -- graph operations ------------------------------------------------------


def exterior_boundary(m, H):
    """The exterior boundary cycle O(H): vertices adjacent to H that are
    visible from infinity (here: from the outer face).

    Raises PreconditionError if H is disconnected, BoundaryCensored if H (or
    its boundary walk) touches the outer face so that "infinity" is censored.
    """
    Hset = set(int(v) for v in as_vertex_set(H))
    if not Hset:
        raise PreconditionError("H must be nonempty")
    if not _is_connected(m, Hset):
        raise PreconditionError("H must be connected in the map")
    if Hset & m._hull_set:
        raise BoundaryCensored("H touches the window boundary")
    return _exterior_boundary_of_connected(m, Hset)


def _exterior_boundary_of_connected(m, Hset, region=None):
    """Core of exterior_boundary; ``region`` optionally restricts the flood to
    a vertex set known to contain H, its boundary, and every non-outer pocket
    (vertices outside the region are treated as outer-reachable)."""
    boundary = set()
    for v in Hset:
        for w in m.nbrs(v):
            w = int(w)
            if w not in Hset:
                boundary.add(w)
    blocked = Hset | boundary
    # flood the outer region in G minus (H and its boundary)
    if region is None:
        seeds = [int(v) for v in m.hull if int(v) not in blocked]
        allowed = None
    else:
        region = set(int(v) for v in region)
        seeds = []
        for v in region:
            if v in blocked:
                continue
            if v in m._hull_set:
                seeds.append(v)
                continue
            for w in m.nbrs(v):
                if int(w) not in region:
                    seeds.append(v)
                    break
        allowed = region
    reach = set(seeds)
    stack = list(seeds)
    while stack:
        v = stack.pop()
        for w in m.nbrs(v):
            w = int(w)
            if w in blocked or w in reach:
                continue
            if allowed is not None and w not in allowed:
                continue
            reach.add(w)
            stack.append(w)
    visible = []
    for x in boundary:
        if x in m._hull_set:
            visible.append(x)
            continue
        for w in m.nbrs(x):
            w = int(w)
            if w in reach or (allowed is not None and w not in allowed and w not in blocked):
                visible.append(x)
                break
    vis = set(visible)
    if any(v in m._hull_set for v in vis):
        raise BoundaryCensored("exterior boundary touches the window boundary")
    # the visible set must induce a single cycle (triangulated plane guarantee)
    nbr_in = {}
    for x in vis:
        inn = [int(w) for w in m.nbrs(x) if int(w) in vis]
        if len(inn) != 2:
            raise InternalInvariantViolation(
                "exterior boundary is not a simple cycle", witness=x)
        nbr_in[x] = inn
    start = min(vis, key=lambda v: m.rank[v])
    prev = start
    cur = min(nbr_in[start], key=lambda v: m.rank[v])
    cyc = [start]
    while cur != start:
        cyc.append(cur)
        a, b = nbr_in[cur]
        nxt = a if a != prev else b
        prev, cur = cur, nxt
    if len(cyc) != len(vis):
        raise InternalInvariantViolation("exterior boundary splits into several cycles")
    return Cycle(tuple(cyc))


def _is_connected(m, vset):
    it = iter(vset)
    start = next(it)
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in m.nbrs(v):
            w = int(w)
            if w in vset and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(vset)


def is_nonselftouching(m, c):
    """True iff the cycle's vertex set induces exactly the cycle edges."""
    verts = list(c.vertices)
    k = len(verts)
    for i, v in enumerate(verts):
        if not m.edge_exists(v, verts[(i + 1) % k]):
            raise PreconditionError("cycle vertices must be consecutively adjacent")
    vset = set(verts)
    induced = 0
    for v in verts:
        for w in m.nbrs(v):
            if int(w) in vset:
                induced += 1
    return induced // 2 == k


def interior(m, c):
    """Vertices strictly inside the closed curve traced by the cycle."""
    if not is_nonselftouching(m, c):
        raise PreconditionError("cycle must be non-selftouching")
    poly = m.points[list(c.vertices)]
    inside = points_in_polygon(m.points, poly)
    inside[list(c.vertices)] = False
    return np.where(inside)[0].astype(np.int64)


def graph_distance(m, A, B, cap=None):
    """Minimum hop count between vertex sets; 0 iff they intersect.

    With ``cap`` given, returns ``cap + 1`` as soon as the distance is known
    to exceed it.  Returns ``math.inf`` for disconnected pairs.
    """
    import math as _math
    A = as_vertex_set(A)
    B = as_vertex_set(B)
    if len(A) == 0 or len(B) == 0:
        raise PreconditionError("A and B must be nonempty")
    if len(B) < len(A):
        A, B = B, A
    inB = np.zeros(m.nverts, dtype=bool)
    inB[B] = True
    if inB[A].any():
        return 0
    dist = np.full(m.nverts, -1, dtype=np.int64)
    dist[A] = 0
    frontier = list(int(v) for v in A)
    d = 0
    while frontier:
        d += 1
        if cap is not None and d > cap:
            return cap + 1
        nxt = []
        for v in frontier:
            for w in m.nbrs(v):
                w = int(w)
                if dist[w] == -1:
                    if inB[w]:
                        return d
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return _math.inf
