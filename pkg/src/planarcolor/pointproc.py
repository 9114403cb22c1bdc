"""Point-process configurations and the isometry-invariant index function.

Everything downstream makes its "local choices" through the signatures defined
here: a signature is the sorted vector of distances to the k nearest
neighbors, canonically rounded.  Distances are isometry invariants of the
configuration, so signatures (and every choice derived from them) commute with
rotations, translations and reflections of the input.

Windows carry an orientation angle so that applying an isometry to a point set
transforms its observation region along with it; a window is only a record of
where the configuration was sampled and which part of it is censored.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParameterError, PreconditionError, SymmetryDetected
from .rng import stream

# Decimal digits kept when canonically rounding signature distances.  Exact
# cross-run equality after an isometry needs the rounding grid to be coarse
# relative to float rotation noise (~1e-14 on desk-scale coordinates).
SIGNATURE_DECIMALS = 6

# Initial neighbor count for signatures; doubled until all are distinct.
SIGNATURE_K0 = 12

PROCESS_TAGS = ("poisson", "tri", "grid")


@dataclass(frozen=True)
class Window:
    """Square observation window: center, half width, censoring margin.

    ``angle`` is the square's orientation; sampled windows are axis-aligned
    (angle 0), nonzero angles only arise by transforming a point set.
    """

    center: tuple = (0.0, 0.0)
    half_width: float = 1.0
    margin: float = 0.0
    angle: float = 0.0

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ParameterError("window half_width must be positive and finite")
        if not (0 <= self.margin < self.half_width):
            raise ParameterError("window margin must satisfy 0 <= margin < half_width")

    @property
    def area(self):
        return (2.0 * self.half_width) ** 2

    def contains(self, points, inset=0.0):
        """Mask of points inside the (inset) window square."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts - np.asarray(self.center, dtype=float)
        c, s = math.cos(-self.angle), math.sin(-self.angle)
        u = c * rel[:, 0] - s * rel[:, 1]
        v = s * rel[:, 0] + c * rel[:, 1]
        h = self.half_width - inset
        return (np.abs(u) <= h) & (np.abs(v) <= h)

    def core_contains(self, points, extra=0.0):
        return self.contains(points, inset=self.margin + extra)

    def corners(self, inset=0.0):
        h = self.half_width - inset
        c, s = math.cos(self.angle), math.sin(self.angle)
        cx, cy = self.center
        return [
            (cx + c * x - s * y, cy + s * x + c * y)
            for x, y in ((-h, -h), (h, -h), (h, h), (-h, h))
        ]


@dataclass(frozen=True)
class Isometry:
    """Plane isometry: optional reflection across the x-axis, then rotation,
    then translation."""

    angle: float = 0.0
    translation: tuple = (0.0, 0.0)
    reflect: bool = False

    def apply(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        if self.reflect:
            y = -y
        c, s = math.cos(self.angle), math.sin(self.angle)
        out = np.empty_like(pts)
        out[:, 0] = c * x - s * y + self.translation[0]
        out[:, 1] = s * x + c * y + self.translation[1]
        return out

    def apply_point(self, point):
        return tuple(self.apply([point])[0])

    def inverse(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        tx, ty = self.translation
        if self.reflect:
            # inverse of x -> R(a) F x + t is y -> R(a) F y - R(a) F t
            return Isometry(angle=self.angle,
                            translation=(-(c * tx + s * ty), -(s * tx - c * ty)),
                            reflect=True)
        return Isometry(angle=-self.angle,
                        translation=(-(c * tx + s * ty), -(-s * tx + c * ty)),
                        reflect=False)

    def apply_window(self, window):
        cx, cy = self.apply_point(window.center)
        theta = (-window.angle if self.reflect else window.angle) + self.angle
        theta = theta % (math.pi / 2.0)
        return replace(window, center=(cx, cy), angle=theta)


@dataclass(frozen=True)
class PointSet:
    """Finite configuration inside a window, with provenance."""

    points: np.ndarray
    window: Window
    seed: int
    process: str
    intensity: float = None

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 2))
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        if self.process not in PROCESS_TAGS:
            raise ParameterError(f"unknown process tag {self.process!r}")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("points must be finite")
        if len(pts) and not self.window.contains(pts).all():
            raise ParameterError("all points must lie inside the window")
        if len(pts) > 1:
            if len(np.unique(pts, axis=0)) != len(pts):
                raise ParameterError("coincident points are not allowed")

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.window == other.window and self.seed == other.seed
                and self.process == other.process and self.intensity == other.intensity
                and self.points.shape == other.points.shape
                and np.array_equal(self.points, other.points))

    def restricted(self, window):
        """The same realization observed through a smaller window."""
        mask = window.contains(self.points)
        return PointSet(self.points[mask], window, self.seed, self.process,
                        self.intensity)


@dataclass(frozen=True)
class Signature:
    """Sorted k-nearest-neighbor distance vector, canonically rounded."""

    distances: tuple
    k: int
    tiebreak_depth: int

    def __post_init__(self):
        if len(self.distances) != self.k:
            raise ValueError("signature length must equal k")
        if any(b < a for a, b in zip(self.distances, self.distances[1:])):
            raise ValueError("signature distances must be nondecreasing")


def sample_poisson(intensity, window, seed):
    """Homogeneous Poisson sample in the window; pure function of (args, seed)."""
    if not (isinstance(intensity, (int, float)) and math.isfinite(intensity)):
        raise ParameterError("intensity must be a finite number")
    if intensity < 0:
        raise ParameterError("intensity must be nonnegative")
    if window.angle != 0.0:
        raise ParameterError("samplers require an axis-aligned window")
    rng = stream(seed, "pointproc", "poisson")
    n = int(rng.poisson(intensity * window.area))
    cx, cy = window.center
    h = window.half_width
    pts = rng.uniform(-h, h, size=(n, 2)) + (cx, cy)
    return PointSet(pts, window, seed, "poisson", intensity=float(intensity))


_TRI_H = math.sqrt(3.0) / 2.0


def triangular_lattice_with_centers(window, translate=(0.0, 0.0)):
    """Exact unit triangular lattice plus triangle centroids covering the window.

    Returns (points, kinds) where kind 0 marks lattice vertices and 1 centers.
    Deterministic enumeration order: lattice row-major, then centers row-major.
    """
    cx, cy = window.center
    h = window.half_width
    slack = 2.0
    jmin = int(math.floor((cy - h - translate[1] - slack) / _TRI_H)) - 1
    jmax = int(math.ceil((cy + h - translate[1] + slack) / _TRI_H)) + 1
    pts = []
    kinds = []
    for j in range(jmin, jmax + 1):
        y = j * _TRI_H + translate[1]
        xoff = 0.5 * j + translate[0]
        imin = int(math.floor(cx - h - xoff - slack)) - 1
        imax = int(math.ceil(cx + h - xoff + slack)) + 1
        for i in range(imin, imax + 1):
            pts.append((i + xoff, y))
            kinds.append(0)
    for j in range(jmin, jmax):
        y = j * _TRI_H + translate[1]
        xoff = 0.5 * j + translate[0]
        imin = int(math.floor(cx - h - xoff - slack)) - 1
        imax = int(math.ceil(cx + h - xoff + slack)) + 1
        for i in range(imin, imax + 1):
            # centroids of the up- and down-triangle of cell (i, j)
            pts.append((i + xoff + 0.5, y + _TRI_H / 3.0))
            pts.append((i + xoff + 1.0, y + 2.0 * _TRI_H / 3.0))
            kinds.append(1)
            kinds.append(1)
    return np.asarray(pts, dtype=float), np.asarray(kinds, dtype=np.int8)


def sample_perturbed_triangular(window, seed, radius=0.01, translate=True):
    """Randomly translated triangular grid with triangle centers, each point
    relocated uniformly within ``radius`` of its lattice position.

    ``radius=0`` and ``translate=False`` give the exact degenerate lattice.
    """
    if window.angle != 0.0:
        raise ParameterError("samplers require an axis-aligned window")
    if window.half_width < 1.0:
        raise ParameterError("window too small to contain a lattice cell")
    rng = stream(seed, "pointproc", "tri")
    if translate:
        # uniform in the fundamental rhombus {u*a1 + v*a2 : u, v in [0,1)}
        u, v = rng.uniform(0.0, 1.0, size=2)
        t = (u + 0.5 * v, v * _TRI_H)
    else:
        t = (0.0, 0.0)
    pts, _ = triangular_lattice_with_centers(window, t)
    if radius > 0:
        ang = rng.uniform(0.0, 2.0 * math.pi, size=len(pts))
        rad = radius * np.sqrt(rng.uniform(0.0, 1.0, size=len(pts)))
        pts = pts + np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    else:
        rng.uniform(size=2 * len(pts))  # keep stream layout stable
    mask = window.contains(pts)
    return PointSet(pts[mask], window, seed, "tri")


def sample_grid_geometric(window, seed):
    """Per-column interval endpoints: column i is partitioned into intervals of
    length 2**(2**xi_i) (xi geometric with parameter 1/2), uniform offset."""
    if window.angle != 0.0:
        raise ParameterError("samplers require an axis-aligned window")
    cx, cy = window.center
    h = window.half_width
    imin = int(math.ceil(cx - h))
    imax = int(math.floor(cx + h))
    if imin > imax:
        raise ParameterError("window does not span an integer column")
    rng = stream(seed, "pointproc", "grid")
    pts = []
    for i in range(imin, imax + 1):
        xi = int(rng.geometric(0.5)) - 1     # P[xi = k] = 2**-(k+1), k >= 0
        length = 2 ** (2 ** xi) if xi < 6 else 2 ** 64  # beyond any desk window
        offset = int(rng.integers(0, length))
        jmin = int(math.ceil(cy - h))
        jmax = int(math.floor(cy + h))
        j0 = offset + length * int(math.ceil((jmin - offset) / length))
        for j in range(j0, jmax + 1, length):
            pts.append((float(i), float(j)))
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return PointSet(pts, window, seed, "grid")


def grid_column_draws(window, seed):
    """The (xi, offset, length) draws behind :func:`sample_grid_geometric`,
    exposed for distribution tests."""
    cx = window.center[0]
    h = window.half_width
    imin = int(math.ceil(cx - h))
    imax = int(math.floor(cx + h))
    rng = stream(seed, "pointproc", "grid")
    draws = []
    for i in range(imin, imax + 1):
        xi = int(rng.geometric(0.5)) - 1
        length = 2 ** (2 ** xi) if xi < 6 else 2 ** 64
        offset = int(rng.integers(0, length))
        draws.append((i, xi, length, offset))
    return draws


def apply_isometry(ps, g):
    """Pointwise image of a configuration; the window transforms along, point
    order is preserved."""
    pts = g.apply(ps.points)
    win = g.apply_window(ps.window)
    return PointSet(pts, win, ps.seed, ps.process, ps.intensity)


def _knn_matrix(points, k):
    tree = cKDTree(points)
    dists, _ = tree.query(points, k=k + 1)
    return np.round(dists[:, 1:], SIGNATURE_DECIMALS)


def signature_matrix(ps, k0=SIGNATURE_K0):
    """Rounded k-NN distance rows for every point, k doubled until all rows are
    distinct.  Returns (matrix, k, extensions).  Raises SymmetryDetected when
    even k = N - 1 cannot separate the points."""
    n = len(ps)
    if n < 2:
        return np.zeros((n, 0)), 0, 0
    k = min(k0, n - 1)
    extensions = 0
    while True:
        mat = _knn_matrix(ps.points, k)
        if len(np.unique(mat, axis=0)) == n:
            return mat, k, extensions
        if k >= n - 1:
            raise SymmetryDetected(
                "indistinguishable points: the configuration admits a nontrivial "
                "symmetry within the window")
        k = min(2 * k, n - 1)
        extensions += 1


def canonical_rank(ps, k0=SIGNATURE_K0):
    """Total order on points by signature: rank[i] = position of point i.

    The order is an equivariant function of the configuration (distances only).
    """
    n = len(ps)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    mat, _, _ = signature_matrix(ps, k0)
    order = np.lexsort(mat.T[::-1])
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    return rank


def local_signature(x, ps, k):
    """Signature of one point of the configuration.

    ``x`` may be a point index or a coordinate pair equal to a configuration
    point.  ``tiebreak_depth`` counts the doublings needed before the point's
    row differs from every other point's row.
    """
    n = len(ps)
    if isinstance(x, (int, np.integer)):
        idx = int(x)
        if not 0 <= idx < n:
            raise PreconditionError("point index out of range")
    else:
        target = np.asarray(x, dtype=float)
        matches = np.where((ps.points == target).all(axis=1))[0]
        if len(matches) == 0:
            raise PreconditionError("x is not a point of the configuration")
        idx = int(matches[0])
    if not 0 < k < n:
        raise PreconditionError("k must satisfy 0 < k < |points|")
    kk = k
    depth = 0
    while True:
        mat = _knn_matrix(ps.points, kk)
        row = mat[idx]
        others = np.delete(mat, idx, axis=0)
        if not (others == row).all(axis=1).any():
            dists = tuple(float(v) for v in mat[idx][:kk])
            return Signature(distances=dists, k=kk, tiebreak_depth=depth)
        if kk >= n - 1:
            raise SymmetryDetected(
                "point is indistinguishable from another: nontrivial symmetry")
        kk = min(2 * kk, n - 1)
        depth += 1
