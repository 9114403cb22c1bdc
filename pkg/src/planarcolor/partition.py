"""Equivariant hierarchy of plane partitions.

Level i: an equivariant sparse subset of the configuration (pairwise distance
>= n(i)) seeds a Voronoi decomposition; each seed's region is cut by a square
grid of side 2**i centered on the seed, with the grid axis pointing from the
seed to its nearest configuration point.  Every ingredient is a function of
the point configuration alone, so the whole hierarchy commutes with plane
isometries; the window enters only as a censor (cells too close to its edge
are never declared good).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import BoundaryCensored, ParameterError, PreconditionError
from .geometry import clip_convex_by_halfplane, orient2d, squared_distance_compare
from .pointproc import canonical_rank
from .profiles import GOOD_CELL_CLEARANCE, DecayProfile


@dataclass(frozen=True)
class SparseSubset:
    """Equivariantly chosen subset with pairwise separation >= n."""

    indices: np.ndarray      # into the parent PointSet, in keep order
    points: np.ndarray
    separation: float


@dataclass
class Cell:
    """One cell of a partition level."""

    level: int
    seed_pos: int            # position of the owning seed in the sparse subset
    gu: int                  # grid coordinates in the seed frame
    gv: int
    polygon: list            # CCW vertices; the full square for square cells
    is_square: bool
    core_polygon: list = None
    good: bool = None        # None = undetermined (no map seen yet)
    vertex_ids: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    @property
    def key(self):
        return (self.seed_pos, self.gu, self.gv)


@dataclass
class PartitionLevel:
    index: int               # i; cell side is 2**i
    side: float
    separation: float        # n(i)
    subset: SparseSubset
    anchors: np.ndarray      # (S, 2) grid centers (= seed points)
    axes: np.ndarray         # (S, 2) unit axis per seed
    cells: list              # Cells containing at least one vertex, canonical order
    owner: np.ndarray        # (N, 3) int: seed_pos, gu, gv per configuration point
    cell_index: dict         # key -> position in cells


@dataclass
class PartitionHierarchy:
    ps: object
    levels: list

    def level(self, i):
        for lev in self.levels:
            if lev.index == i:
                return lev
        raise ParameterError(f"hierarchy has no level {i}")


def sparse_subset(ps, n):
    """Greedy signature-priority thinning: visit points in canonical order,
    keep a point iff no kept point lies within distance n."""
    if not n > 0:
        raise ParameterError("separation must be positive")
    pts = ps.points
    npts = len(pts)
    if npts == 0:
        return SparseSubset(np.empty(0, np.int64), pts.reshape(0, 2), float(n))
    rank = canonical_rank(ps)
    order = np.argsort(rank)
    cell = {}
    inv = 1.0 / n
    kept = []
    for idx in order:
        x, y = pts[idx]
        cx, cy = int(math.floor(x * inv)), int(math.floor(y * inv))
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for j in cell.get((cx + dx, cy + dy), ()):
                    ddx = pts[j][0] - x
                    ddy = pts[j][1] - y
                    if ddx * ddx + ddy * ddy < n * n:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            kept.append(int(idx))
            cell.setdefault((cx, cy), []).append(int(idx))
    kept = np.asarray(kept, dtype=np.int64)
    return SparseSubset(kept, pts[kept], float(n))


def _seed_frames(ps, subset):
    """Grid frame per seed: center = seed point, axis = unit vector toward the
    seed's nearest other configuration point (canonical tie-break)."""
    pts = ps.points
    tree = cKDTree(pts)
    axes = np.empty((len(subset.indices), 2))
    for s, idx in enumerate(subset.indices):
        p = pts[idx]
        dists, nbrs = tree.query(p, k=min(4, len(pts)))
        best = None
        for d, j in zip(np.atleast_1d(dists), np.atleast_1d(nbrs)):
            if j != idx:
                best = j
                break
        if best is None:
            axes[s] = (1.0, 0.0)
            continue
        v = pts[best] - p
        axes[s] = v / np.hypot(v[0], v[1])
    return subset.points.copy(), axes


def _owner_triples(ps, subset, anchors, axes, side):
    """(seed_pos, gu, gv) ownership for every configuration point.

    The seed is the nearest subset point (exact comparison near ties); the
    grid cell is centered frames: cell (0,0) is the square centered on the
    seed."""
    pts = ps.points
    n = len(pts)
    if len(subset.indices) == 1:
        seed_pos = np.zeros(n, dtype=np.int64)
    else:
        tree = cKDTree(anchors)
        dd, seed_pos = tree.query(pts, k=2)
        near_tie = (dd[:, 1] - dd[:, 0]) <= 1e-9 * (dd[:, 0] + 1.0)
        seed_pos = seed_pos[:, 0].astype(np.int64)
        for i in np.where(near_tie)[0]:
            a = int(seed_pos[i])
            tree_all = sorted(range(len(anchors)),
                              key=lambda s: (np.hypot(*(pts[i] - anchors[s])), s))
            best = tree_all[0]
            for s in tree_all[1:]:
                c = squared_distance_compare(pts[i], anchors[best], anchors[s])
                if c > 0:
                    best = s
            seed_pos[i] = best
    a = anchors[seed_pos]
    ax = axes[seed_pos]
    rel = pts - a
    u = rel[:, 0] * ax[:, 0] + rel[:, 1] * ax[:, 1]
    v = -rel[:, 0] * ax[:, 1] + rel[:, 1] * ax[:, 0]
    gu = np.floor(u / side + 0.5).astype(np.int64)
    gv = np.floor(v / side + 0.5).astype(np.int64)
    return np.stack([seed_pos, gu, gv], axis=1)


def _square_polygon(anchor, axis, side, gu, gv, inset=0.0):
    """Corners (CCW) of grid cell (gu, gv) in the seed frame, optionally inset."""
    ux, uy = axis
    vx, vy = -uy, ux
    cu = gu * side
    cv = gv * side
    h = side / 2.0 - inset
    corners = []
    for du, dv in ((-h, -h), (h, -h), (h, h), (-h, h)):
        fu, fv = cu + du, cv + dv
        corners.append((anchor[0] + fu * ux + fv * vx,
                        anchor[1] + fu * uy + fv * vy))
    return corners


def _cell_is_square(corners, seed_pos, anchors):
    """A grid square is a true cell iff all four corners are (weakly) nearest
    to the owning seed; exact comparisons on ties."""
    s = anchors[seed_pos]
    for c in corners:
        for q in range(len(anchors)):
            if q == seed_pos:
                continue
            if squared_distance_compare(c, s, anchors[q]) > 0:
                return False
    return True


def _clip_to_seed_region(corners, seed_pos, anchors):
    poly = list(corners)
    s = anchors[seed_pos]
    for q in range(len(anchors)):
        if q == seed_pos or not poly:
            continue
        t = anchors[q]
        mid = ((s[0] + t[0]) / 2.0, (s[1] + t[1]) / 2.0)
        d = (t[1] - s[1], s[0] - t[0])     # bisector direction; s on the left
        a = mid
        b = (mid[0] + d[0], mid[1] + d[1])
        if orient2d(a[0], a[1], b[0], b[1], s[0], s[1]) < 0:
            a, b = b, a
        poly = clip_convex_by_halfplane(poly, a, b)
    return poly


def build_level(ps, i, n_i, decay):
    side = float(2 ** i)
    if n_i < 8 * side:
        raise ParameterError(
            f"schedule violates n(i) >= 8 * 2^i at level {i}: n={n_i} < {8 * side}")
    subset = sparse_subset(ps, n_i)
    if len(subset.indices) == 0:
        raise ParameterError("empty configuration")
    anchors, axes = _seed_frames(ps, subset)
    owner = _owner_triples(ps, subset, anchors, axes, side)
    ann = decay.annulus(side)
    cells = []
    index = {}
    trip_keys = {}
    for vid, trip in enumerate(owner):
        trip_keys.setdefault((int(trip[0]), int(trip[1]), int(trip[2])), []).append(vid)
    for key in sorted(trip_keys):
        sp, gu, gv = key
        corners = _square_polygon(anchors[sp], axes[sp], side, gu, gv)
        sq = _cell_is_square(corners, sp, anchors)
        if sq:
            poly = corners
            core = _square_polygon(anchors[sp], axes[sp], side, gu, gv, inset=ann) \
                if ann < side / 2.0 else []
        else:
            poly = _clip_to_seed_region(corners, sp, anchors)
            core = None
        cells.append(Cell(level=i, seed_pos=sp, gu=gu, gv=gv, polygon=poly,
                          is_square=sq, core_polygon=core,
                          vertex_ids=np.asarray(trip_keys[key], dtype=np.int64)))
        index[key] = len(cells) - 1
    return PartitionLevel(index=i, side=side, separation=float(n_i), subset=subset,
                          anchors=anchors, axes=axes, cells=cells, owner=owner,
                          cell_index=index)


def build_hierarchy(ps, levels, n_schedule, decay):
    """Partition levels for the given level indices and separation schedule."""
    levels = list(levels)
    n_schedule = list(n_schedule)
    if len(levels) != len(n_schedule):
        raise ParameterError("levels and n_schedule must have equal length")
    if any(b <= a for a, b in zip(n_schedule, n_schedule[1:])):
        raise ParameterError("n_schedule must be strictly increasing")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ParameterError("levels must be strictly increasing")
    max_side = 2 ** max(levels)
    if max_side >= 2 * ps.window.half_width:
        raise ParameterError(
            f"window too small for level {max(levels)} (side {max_side})")
    built = [build_level(ps, i, n, decay) for i, n in zip(levels, n_schedule)]
    return PartitionHierarchy(ps=ps, levels=built)


def cell_of(h, i, x):
    """The unique cell of level i containing point x (on-demand for cells with
    no configuration points)."""
    lev = h.level(i)
    x = np.asarray(x, dtype=float)
    if not h.ps.window.contains(x[None, :])[0]:
        raise BoundaryCensored("query point outside the window")
    anchors = lev.anchors
    best = 0
    for s in range(1, len(anchors)):
        c = squared_distance_compare(x, anchors[best], anchors[s])
        if c > 0:
            best = s
    ax = lev.axes[best]
    rel = x - anchors[best]
    u = rel[0] * ax[0] + rel[1] * ax[1]
    v = -rel[0] * ax[1] + rel[1] * ax[0]
    gu = int(math.floor(u / lev.side + 0.5))
    gv = int(math.floor(v / lev.side + 0.5))
    key = (best, gu, gv)
    if key in lev.cell_index:
        return lev.cells[lev.cell_index[key]]
    corners = _square_polygon(anchors[best], lev.axes[best], lev.side, gu, gv)
    sq = _cell_is_square(corners, best, anchors)
    poly = corners if sq else _clip_to_seed_region(corners, best, anchors)
    return Cell(level=i, seed_pos=best, gu=gu, gv=gv, polygon=poly, is_square=sq)


def _frame_coords(lev, cell, points):
    a = lev.anchors[cell.seed_pos]
    ax = lev.axes[cell.seed_pos]
    rel = np.atleast_2d(points) - a
    u = rel[:, 0] * ax[0] + rel[:, 1] * ax[1] - cell.gu * lev.side
    v = -rel[:, 0] * ax[1] + rel[:, 1] * ax[0] - cell.gv * lev.side
    return u, v


def core_vertex_ids(m, lev, cell, decay):
    """Configuration points inside the cell's core C^o."""
    if not cell.is_square:
        return np.empty(0, dtype=np.int64)
    ann = decay.annulus(lev.side)
    h = lev.side / 2.0 - ann
    if h <= 0:
        return np.empty(0, dtype=np.int64)
    ids = cell.vertex_ids
    if len(ids) == 0:
        return ids
    u, v = _frame_coords(lev, cell, m.points[ids])
    mask = (np.abs(u) < h) & (np.abs(v) < h)
    return ids[mask]


def is_good_cell(m, h, i, cell, decay):
    """Square cell whose core cannot be reached from the cell's complement by
    a path of <= 4 edges, with full clearance from the window edge."""
    lev = h.level(i)
    if not cell.is_square:
        return False
    ann = decay.annulus(lev.side)
    if ann >= lev.side / 2.0:
        return False
    clearance = ann + GOOD_CELL_CLEARANCE
    dilated = _square_polygon(lev.anchors[cell.seed_pos], lev.axes[cell.seed_pos],
                              lev.side, cell.gu, cell.gv, inset=-clearance)
    if not m.ps.window.contains(np.asarray(dilated)).all():
        return False
    core = core_vertex_ids(m, lev, cell, decay)
    if len(core) == 0:
        return False
    # vertices in the closed cell (frame box); everything else is "outside"
    u, v = _frame_coords(lev, cell, m.points)
    hh = lev.side / 2.0
    in_cell = (np.abs(u) <= hh) & (np.abs(v) <= hh)
    in_core = np.zeros(m.nverts, dtype=bool)
    in_core[core] = True
    # BFS depth <= 4 from the complement of the cell.  Any violating path's
    # last outside-cell vertex is adjacent to an in-cell vertex, so those
    # vertices are a sufficient (and exact) source set.
    sources = set()
    for w in np.where(in_cell)[0]:
        for x in m.nbrs(w):
            x = int(x)
            if not in_cell[x]:
                sources.add(x)
    dist = np.full(m.nverts, 127, dtype=np.int8)
    frontier = []
    for w in sources:
        if in_core[w]:
            return False
        dist[w] = 0
        frontier.append(w)
    for d in range(1, 5):
        nxt = []
        for w in frontier:
            for x in m.nbrs(w):
                x = int(x)
                if dist[x] > d:
                    if in_core[x]:
                        return False
                    dist[x] = d
                    nxt.append(x)
        frontier = nxt
    return True


def mark_goodness(m, h, decay):
    """Fill the good flag of every enumerated cell."""
    for lev in h.levels:
        for cell in lev.cells:
            cell.good = is_good_cell(m, h, lev.index, cell, decay)
    return h
