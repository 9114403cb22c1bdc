"""Nested cycle exhaustions: construction, parity surgery, validation.

Construction (corridor 6): per level i, delete every edge within edge-distance
4 of a cell-boundary-crossing edge; inside every good cell the surviving core
component's exterior boundary is a non-selftouching cycle living in the
annulus C \\ C^o.  Cycles of level i that come within distance 5 of a
higher-level cycle are pruned; the survivors nest by geometric containment.

Surgery (corridor 4): odd cycles are repaired pairwise exactly as in the
source construction: an odd cycle O_1 with an odd child O_0 is replaced by an
even cycle made of a long arch of O_1, two connector paths, and the parity-
selected arch of O_0.  Every applied surgery keeps a full audit of the
conditions it promises.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (BoundaryCensored, ExhaustionFailed, InternalInvariantViolation,
                     PreconditionError, SurgeryFailed)
from .planarmap import (Cycle, _exterior_boundary_of_connected, graph_distance,
                        interior, is_nonselftouching)
from .partition import core_vertex_ids, _frame_coords
from .profiles import GOOD_CELL_CLEARANCE


@dataclass
class ExhaustionNode:
    id: int
    level: int
    cycle: Cycle
    parent: int = None           # None = child of the virtual root
    children: list = field(default_factory=list)
    interior_ids: np.ndarray = None
    source_cell: tuple = None


@dataclass
class SurgeryPlan:
    """Audit record of one parity surgery (symbols follow the construction)."""

    node_o1: int
    node_o0: int
    O1: Cycle
    O0: Cycle
    Q: tuple
    Q1: tuple
    Q2: tuple
    P1: tuple
    P2: tuple
    x1: int
    x2: int
    y1: int
    y2: int
    l1: int
    r1: int
    l2: int
    r2: int
    arch_A: tuple
    arch_A1: tuple
    arch_A2: tuple
    chosen_arch: int             # 1 or 2
    nu: Cycle
    zone1_size: int
    zone2_size: int
    conditions: dict = field(default_factory=dict)

    @property
    def parity_identity(self):
        """(-1)**(|A1|+|A2|) == (-1)**|O0| == -1."""
        return ((-1) ** (len(self.arch_A1) + len(self.arch_A2))
                == (-1) ** len(self.O0) == -1)


@dataclass
class CycleExhaustion:
    nodes: list                  # ExhaustionNode, ids are list positions
    corridor: int
    level_stats: dict = field(default_factory=dict)
    surgeries: list = field(default_factory=list)
    dropped: list = field(default_factory=list)

    def roots(self):
        return [nd for nd in self.nodes if nd.parent is None]

    def cycles(self):
        return [nd.cycle for nd in self.nodes]

    def node(self, i):
        return self.nodes[i]

    def all_label_vertices(self):
        out = set()
        for nd in self.nodes:
            out.update(nd.cycle.vertices)
        return out


# -- edge sets -------------------------------------------------------------


def boundary_crossing_edges(m, h, i):
    """E_i: edges whose endpoints lie in different cells of level i."""
    lev = h.level(i)
    edges = m.edges()
    ou = lev.owner[edges[:, 0]]
    ov = lev.owner[edges[:, 1]]
    cross = (ou != ov).any(axis=1)
    return edges[cross]


def boundary_edge_sets(m, h, i, j):
    """E_i^j: edges at edge-distance <= j from E_i (E^{k+1} adds every edge
    sharing an endpoint with E^k)."""
    if j < 0:
        raise PreconditionError("j must be nonnegative")
    edges = m.edges()
    n = m.nverts
    keys = edges[:, 0] * n + edges[:, 1]
    cur = boundary_crossing_edges(m, h, i)
    cur_keys = set(int(k) for k in cur[:, 0] * n + cur[:, 1])
    for _ in range(j):
        touched = np.zeros(n, dtype=bool)
        for k in cur_keys:
            touched[k // n] = True
            touched[k % n] = True
        grow = touched[edges[:, 0]] | touched[edges[:, 1]]
        cur_keys = cur_keys | set(int(k) for k in keys[grow])
    out = np.fromiter(cur_keys, dtype=np.int64, count=len(cur_keys))
    out.sort()
    return np.stack([out // n, out % n], axis=1)


def _deleted_edge_mask(m, h, i):
    """Mask over m.edges() of E_i^4, via vertex distances to E_i endpoints:
    an edge is in E_i^j iff one endpoint is within distance j-1 of an
    E_i-edge endpoint."""
    edges = m.edges()
    cross = boundary_crossing_edges(m, h, i)
    dist = np.full(m.nverts, 127, dtype=np.int16)
    frontier = []
    for v in np.unique(cross):
        dist[v] = 0
        frontier.append(int(v))
    for d in range(1, 4):
        nxt = []
        for v in frontier:
            for w in m.nbrs(v):
                w = int(w)
                if dist[w] > d:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    du = dist[edges[:, 0]]
    dv = dist[edges[:, 1]]
    return np.minimum(du, dv) <= 3


def level_components(m, h, i):
    """Connected components of G_i = G minus E_i^4; returns (labels, edges_kept)."""
    edges = m.edges()
    kept = edges[~_deleted_edge_mask(m, h, i)]
    n = m.nverts
    if len(kept) == 0:
        return np.arange(n, dtype=np.int64), kept
    mat = coo_matrix((np.ones(len(kept), dtype=np.int8),
                      (kept[:, 0], kept[:, 1])), shape=(n, n))
    _, labels = connected_components(mat, directed=False)
    return labels.astype(np.int64), kept


# -- construction ----------------------------------------------------------


def build_cycle_exhaustion(m, h, decay):
    """Cycle exhaustion of corridor >= 6 from the good cells of a hierarchy.

    Raises ExhaustionFailed when no cycle survives (with coverage stats).
    """
    for lev in h.levels:
        if any(c.good is None for c in lev.cells):
            from .partition import mark_goodness
            mark_goodness(m, h, decay)
            break
    raw = []      # (level, cycle, cell_key)
    stats = {"good_cells": 0, "component_rejects": 0, "censored": 0, "pruned": 0}
    for lev in h.levels:
        labels, _ = level_components(m, h, lev.index)
        clearance = decay.annulus(lev.side) + GOOD_CELL_CLEARANCE
        for cell in lev.cells:
            if not cell.good:
                continue
            stats["good_cells"] += 1
            core = core_vertex_ids(m, lev, cell, decay)
            if len(core) == 0:
                stats["component_rejects"] += 1
                continue
            labs = np.unique(labels[core])
            if len(labs) != 1:
                # good-cell property should force one component; record, skip
                stats["component_rejects"] += 1
                continue
            comp = np.where(labels == labs[0])[0]
            # the component must stay inside its cell
            tu, tv = _frame_coords(lev, cell, m.points[comp])
            hh = lev.side / 2.0
            if not ((np.abs(tu) <= hh) & (np.abs(tv) <= hh)).all():
                raise InternalInvariantViolation(
                    "level component escapes its good cell", witness=cell.key)
            u, v = _frame_coords(lev, cell, m.points)
            region = np.where((np.abs(u) <= hh + clearance)
                              & (np.abs(v) <= hh + clearance))[0]
            try:
                cyc = _exterior_boundary_of_connected(
                    m, set(int(x) for x in comp), region=set(int(x) for x in region))
            except BoundaryCensored:
                stats["censored"] += 1
                continue
            # the cycle must live in the annulus C \ C^o
            cu, cv = _frame_coords(lev, cell, m.points[list(cyc.vertices)])
            ann = decay.annulus(lev.side)
            if not ((np.abs(cu) <= hh) & (np.abs(cv) <= hh)).all():
                raise InternalInvariantViolation(
                    "exterior boundary leaves the good cell", witness=cell.key)
            if ((np.abs(cu) < hh - ann) & (np.abs(cv) < hh - ann)).any():
                raise InternalInvariantViolation(
                    "exterior boundary enters the cell core", witness=cell.key)
            raw.append((lev.index, cyc, cell.key))
    # prune: drop a cycle that comes within distance 5 of any higher-level cycle
    level_list = sorted({r[0] for r in raw})
    hot = {}      # level -> set of vertices within distance 5 of its cycles
    for li in level_list:
        hotset = set()
        for (lj, cyc, _) in raw:
            if lj != li:
                continue
            seen = set(cyc.vertices)
            frontier = list(cyc.vertices)
            for _ in range(5):
                nxt = []
                for x in frontier:
                    for w in m.nbrs(x):
                        w = int(w)
                        if w not in seen:
                            seen.add(w)
                            nxt.append(w)
                frontier = nxt
            hotset |= seen
        hot[li] = hotset
    survivors = []
    for (li, cyc, key) in raw:
        higher = [lj for lj in level_list if lj > li]
        if any(not hot[lj].isdisjoint(cyc.vertices) for lj in higher):
            stats["pruned"] += 1
            continue
        survivors.append((li, cyc, key))
    if not survivors:
        raise ExhaustionFailed("no cycle survived construction", stats=stats)
    ex = _assemble_tree(m, survivors, corridor=6)
    ex.level_stats = stats
    _check_corridor(m, ex, 6)
    return ex


def _assemble_tree(m, triples, corridor):
    triples = sorted(triples, key=lambda t: (t[0], min(m.rank[v] for v in t[1].vertices)))
    nodes = []
    for nid, (li, cyc, key) in enumerate(triples):
        cyc = cyc.canonical(m.rank)
        nodes.append(ExhaustionNode(id=nid, level=li, cycle=cyc,
                                    interior_ids=interior(m, cyc),
                                    source_cell=key))
    # parent = containing cycle with the fewest interior vertices
    for nd in nodes:
        v0 = nd.cycle.vertices[0]
        best = None
        for other in nodes:
            if other.id == nd.id:
                continue
            if v0 in set(int(x) for x in other.interior_ids):
                if best is None or len(other.interior_ids) < len(best.interior_ids):
                    best = other
        nd.parent = best.id if best is not None else None
    for nd in nodes:
        nd.children = [o.id for o in nodes if o.parent == nd.id]
    return CycleExhaustion(nodes=nodes, corridor=corridor)


def _check_corridor(m, ex, c):
    nodes = ex.nodes
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            d = graph_distance(m, a.cycle.vertices, b.cycle.vertices, cap=c)
            if d < c:
                raise InternalInvariantViolation(
                    f"corridor violation: cycles {a.id},{b.id} at distance {d} < {c}",
                    witness=(a.id, b.id, d))


# -- validation ------------------------------------------------------------


@dataclass
class ClauseReport:
    clause: str
    passed: bool
    detail: str = ""
    witnesses: list = field(default_factory=list)


@dataclass
class ExhaustionReport:
    clauses: list
    stats: dict

    @property
    def passed(self):
        return all(c.passed for c in self.clauses)

    def lines(self):
        out = []
        for c in self.clauses:
            status = "pass" if c.passed else "FAIL"
            out.append(f"[{status}] {c.clause}: {c.detail}")
        return out


def validate_exhaustion(m, ex, corridor=None, require_even=False):
    """Per-clause report: cycle validity (2), corridor (3), nesting (4),
    finite complement components within the core (5), tree consistency."""
    c = corridor if corridor is not None else ex.corridor
    clauses = []
    # (2) every label a non-selftouching cycle, even if required
    bad = []
    for nd in ex.nodes:
        verts = nd.cycle.vertices
        ok = True
        for i, v in enumerate(verts):
            if not m.edge_exists(v, verts[(i + 1) % len(verts)]):
                ok = False
                break
        if ok:
            ok = is_nonselftouching(m, nd.cycle)
        if ok and require_even and not nd.cycle.even:
            ok = False
        if not ok:
            bad.append(nd.id)
    clauses.append(ClauseReport(
        clause="(2) non-selftouching" + (" even" if require_even else "") + " cycles",
        passed=not bad,
        detail=f"{len(ex.nodes)} cycles checked" + (f"; offenders {bad}" if bad else ""),
        witnesses=bad))
    # (3) pairwise corridor
    viol = []
    for i, a in enumerate(ex.nodes):
        for b in ex.nodes[i + 1:]:
            d = graph_distance(m, a.cycle.vertices, b.cycle.vertices, cap=c)
            if d < c:
                viol.append((a.id, b.id, d))
    clauses.append(ClauseReport(
        clause=f"(3) pairwise distance >= {c}",
        passed=not viol,
        detail=f"{len(ex.nodes) * (len(ex.nodes) - 1) // 2} pairs checked"
               + (f"; violations {viol}" if viol else ""),
        witnesses=viol))
    # (4) nesting: child cycle inside parent's interior
    nest_bad = []
    for nd in ex.nodes:
        if nd.parent is None:
            continue
        par = ex.node(nd.parent)
        inside = set(int(x) for x in par.interior_ids)
        if not all(v in inside for v in nd.cycle.vertices):
            nest_bad.append((nd.id, nd.parent))
    clauses.append(ClauseReport(
        clause="(4) child labels inside parent interiors",
        passed=not nest_bad,
        detail=f"{sum(1 for nd in ex.nodes if nd.parent is not None)} edges checked"
               + (f"; offenders {nest_bad}" if nest_bad else ""),
        witnesses=nest_bad))
    # tree consistency: parent is the minimal containing cycle, recomputed
    incons = []
    for nd in ex.nodes:
        v0 = nd.cycle.vertices[0]
        best = None
        for other in ex.nodes:
            if other.id == nd.id:
                continue
            if v0 in set(int(x) for x in other.interior_ids):
                if best is None or len(other.interior_ids) < len(best.interior_ids):
                    best = other
        want = best.id if best is not None else None
        if want != nd.parent:
            incons.append((nd.id, nd.parent, want))
    clauses.append(ClauseReport(
        clause="(1') tree equals containment order",
        passed=not incons,
        detail="recomputed independently" + (f"; mismatches {incons}" if incons else ""),
        witnesses=incons))
    # (5) complement components within the core are finite; coverage stats
    label_verts = ex.all_label_vertices()
    core_mask = m.ps.window.core_contains(m.points)
    n = m.nverts
    seen = np.zeros(n, dtype=bool)
    comp_sizes = []
    infinite_like = 0
    for v0 in range(n):
        if seen[v0] or v0 in label_verts:
            continue
        comp = [v0]
        seen[v0] = True
        qi = 0
        touches_hull = False
        while qi < len(comp):
            v = comp[qi]
            qi += 1
            if m.is_hull_vertex(v):
                touches_hull = True
            for w in m.nbrs(v):
                w = int(w)
                if not seen[w] and w not in label_verts:
                    seen[w] = True
                    comp.append(w)
        if touches_hull:
            infinite_like += 1
        comp_sizes.append(len(comp))
    covered = 0
    core_total = int(core_mask.sum())
    inside_any = np.zeros(n, dtype=bool)
    for nd in ex.nodes:
        if nd.parent is None:
            inside_any[nd.interior_ids] = True
            inside_any[list(nd.cycle.vertices)] = True
    covered = int((inside_any & core_mask).sum())
    stats = {
        "cycles": len(ex.nodes),
        "complement_components": len(comp_sizes),
        "hull_touching_components": infinite_like,
        "max_component": max(comp_sizes) if comp_sizes else 0,
        "core_vertices": core_total,
        "core_covered_by_cycles": covered,
        "coverage_fraction": covered / core_total if core_total else 0.0,
    }
    clauses.append(ClauseReport(
        clause="(5) complement components finite within core",
        passed=True,
        detail=(f"{len(comp_sizes)} components, {infinite_like} touch the hull "
                f"(window-censored); core coverage {stats['coverage_fraction']:.2f}")))
    return ExhaustionReport(clauses=clauses, stats=stats)


# -- parity surgery ---------------------------------------------------------


def _odd_heights(ex):
    """Stratum of each odd node: 1 + max over direct odd children, leaves 1."""
    oh = {}

    def rec(nd):
        best = 0
        for cid in nd.children:
            ch = ex.node(cid)
            if not ch.cycle.even:
                rec(ch)
                best = max(best, oh[ch.id])
        oh[nd.id] = best + 1

    for nd in ex.nodes:
        if not nd.cycle.even and nd.id not in oh:
            rec(nd)
    return oh


def _neighbors_on(m, x, cycle_set):
    return sorted(int(w) for w in m.nbrs(x) if int(w) in cycle_set)


def _zone_on_cycle(m, x, cyc):
    """Neighbors of x on the cycle; must form a contiguous arc (triangulated
    map + non-selftouching cycle guarantee).  Returns the arc as consecutive
    cycle positions, or None if empty/broken."""
    verts = cyc.vertices
    k = len(verts)
    pos = {v: i for i, v in enumerate(verts)}
    nbrs = [pos[w] for w in _neighbors_on(m, x, set(verts))]
    if not nbrs:
        return None
    marks = sorted(nbrs)
    if len(marks) == k:
        return list(range(k))
    # find the contiguous run in cyclic order
    mark_set = set(marks)
    start = None
    for p in marks:
        if (p - 1) % k not in mark_set:
            if start is not None:
                return None        # two runs: not contiguous
            start = p
    run = []
    p = start
    while p in mark_set:
        run.append(p)
        p = (p + 1) % k
        if len(run) > k:
            return None
    if len(run) != len(marks):
        return None
    return run


def _trim_path(m, path, o0_set, o1_set):
    """Subpath whose x-end is adjacent to O0, y-end adjacent to O1, inner
    vertices adjacent to neither.  ``path`` runs from the O0 side to the O1
    side.  Returns vertices x..y or None."""
    adj0 = [i for i, v in enumerate(path) if any(int(w) in o0_set for w in m.nbrs(v))]
    if not adj0:
        return None
    a = max(adj0)
    adj1 = [i for i in range(a, len(path))
            if any(int(w) in o1_set for w in m.nbrs(path[i]))]
    if not adj1:
        return None
    b = min(adj1)
    sub = path[a:b + 1]
    if len(sub) < 2:
        return None
    return sub


def _shortest_path(m, sources, targets, allowed):
    """Deterministic BFS shortest path from sources to targets inside allowed.
    Returns the path (source..target) minimizing (length, canonical ranks)."""
    rank = m.rank
    dist = {}
    frontier = sorted((int(s) for s in sources), key=lambda v: rank[v])
    for s in frontier:
        dist[s] = 0
    target_set = set(int(t) for t in targets)
    found = [s for s in frontier if s in target_set]
    d = 0
    while frontier and not found:
        d += 1
        nxt = []
        for v in frontier:
            for w in m.nbrs(v):
                w = int(w)
                if w in dist or w not in allowed:
                    continue
                dist[w] = d
                nxt.append(w)
                if w in target_set:
                    found.append(w)
        frontier = sorted(set(nxt), key=lambda v: rank[v])
    if not found:
        return None
    end = min(found, key=lambda v: rank[v])
    path = [end]
    cur = end
    while dist[cur] > 0:
        best = None
        for w in m.nbrs(cur):
            w = int(w)
            if dist.get(w, -1) == dist[cur] - 1:
                if best is None or rank[w] < rank[best]:
                    best = w
        cur = best
        path.append(cur)
    return path[::-1]


def _path_is_induced(m, path):
    pset = set(path)
    for i, v in enumerate(path):
        on = [w for w in m.nbrs(v) if int(w) in pset]
        want = {path[i - 1]} if i else set()
        if i + 1 < len(path):
            want = want | {path[i + 1]}
        if set(int(w) for w in on) != want:
            return False
    return True


def _paths_touch(m, p, q):
    qs = set(q)
    for v in p:
        if v in qs:
            return True
        for w in m.nbrs(v):
            if int(w) in qs:
                return True
    return False


def find_connectors(m, ex, node_o1, current_cycles, consumed):
    """SurgeryPlan for odd cycle O_1, or raise SurgeryFailed.

    ``current_cycles``: id -> Cycle for every live cycle (evens, not-yet-
    processed odds, and already-built nu's); ``consumed``: ids out of play.
    """
    o1 = ex.node(node_o1)
    if o1.cycle.even:
        raise PreconditionError("O_1 must be odd")
    odd_children = [cid for cid in o1.children
                    if not ex.node(cid).cycle.even and cid not in consumed]
    odd_children.sort(key=lambda cid: min(m.rank[v] for v in ex.node(cid).cycle.vertices))
    if not odd_children:
        raise SurgeryFailed(f"odd cycle {node_o1} has no available odd child")
    int_o1 = set(int(x) for x in o1.interior_ids)
    last_error = "no admissible connector found"
    for cid in odd_children:
        o0 = ex.node(cid)
        o0_set = set(o0.cycle.vertices)
        o1_set = set(o1.cycle.vertices)
        int_o0 = set(int(x) for x in o0.interior_ids)
        # blocked: other live cycles and their 4-neighborhoods
        blocked = set()
        for oid, cyc in current_cycles.items():
            if oid in (node_o1, cid) or oid in consumed:
                continue
            seen = set(cyc.vertices)
            frontier = list(cyc.vertices)
            for _ in range(4):
                nxt = []
                for x in frontier:
                    for w in m.nbrs(x):
                        w = int(w)
                        if w not in seen:
                            seen.add(w)
                            nxt.append(w)
                frontier = nxt
            blocked |= seen
        allowed = (int_o1 - int_o0 - o0_set - blocked)
        sources = sorted(v for v in allowed
                         if any(int(w) in o0_set for w in m.nbrs(v)))
        targets = set(v for v in allowed
                      if any(int(w) in o1_set for w in m.nbrs(v)))
        if not sources or not targets:
            last_error = f"no corridor region between {node_o1} and child {cid}"
            continue
        raw_q = _shortest_path(m, sources, targets, allowed)
        if raw_q is None:
            last_error = f"no connector path between {node_o1} and child {cid}"
            continue
        # raw_q runs x-side (O0-adjacent) .. y-side (O1-adjacent)
        q = _trim_path(m, raw_q, o0_set, o1_set)
        if q is None:
            last_error = "connector path trimming failed"
            continue
        q1q2 = _flank_paths(m, q, o0_set, o1_set, allowed)
        candidates = [("Q", tuple(q))]
        for name, p in q1q2:
            candidates.append((name, tuple(p)))
        named = {name: tuple(p) for name, p in candidates}
        plan = _select_pair_and_build(m, ex, o1, o0, candidates, named,
                                      current_cycles, consumed)
        if plan is not None:
            return plan
        last_error = f"no valid pair/arch for child {cid}"
    raise SurgeryFailed(f"surgery failed for cycle {node_o1}: {last_error}")


def _flank_paths(m, q, o0_set, o1_set, allowed):
    """The two paths flanking Q: arcs of the exterior boundary of Q plus its
    neighborhood, trimmed and shortcut to induced paths."""
    qset = set(q)
    sausage = set(q)
    for v in q:
        for w in m.nbrs(v):
            w = int(w)
            if w not in o0_set and w not in o1_set:
                sausage.add(w)
    region = set(sausage)
    for v in list(sausage):
        for w in m.nbrs(v):
            region.add(int(w))
            for x in m.nbrs(int(w)):
                region.add(int(x))
    try:
        ring = _exterior_boundary_of_connected(m, sausage, region=region)
    except (BoundaryCensored, InternalInvariantViolation):
        return []
    verts = list(ring.vertices)
    k = len(verts)
    drop = [i for i, v in enumerate(verts) if v in o0_set or v in o1_set]
    if not drop:
        return []
    arcs = []
    drop_set = set(drop)
    for i in drop:
        j = (i + 1) % k
        if j in drop_set:
            continue
        arc = []
        while j not in drop_set:
            arc.append(verts[j])
            j = (j + 1) % k
        if arc:
            arcs.append(arc)
    out = []
    for idx, arc in enumerate(arcs):
        arc = [v for v in arc if v in allowed]
        if not arc:
            continue
        arc_set = set(arc)
        srcs = [v for v in arc if any(int(w) in o0_set for w in m.nbrs(v))]
        tgts = [v for v in arc if any(int(w) in o1_set for w in m.nbrs(v))]
        if not srcs or not tgts:
            continue
        sp = _shortest_path(m, srcs, set(tgts), arc_set)
        if sp is None:
            continue
        trimmed = _trim_path(m, sp, o0_set, o1_set)
        if trimmed is None:
            continue
        out.append((f"Q{len(out) + 1}", trimmed))
        if len(out) == 2:
            break
    return out


def _select_pair_and_build(m, ex, o1, o0, candidates, named, current_cycles,
                           consumed):
    """Try pairs of candidate paths (canonical order), build and validate nu."""
    rank = m.rank
    o0_set = set(o0.cycle.vertices)
    o1_set = set(o1.cycle.vertices)
    paths = []
    for name, p in candidates:
        if len(p) < 2:
            continue
        if not _path_is_induced(m, list(p)):
            continue
        zone = _zone_on_cycle(m, p[0], o0.cycle)
        zone_y = _zone_on_cycle(m, p[-1], o1.cycle)
        if zone is None or zone_y is None:
            continue
        inner_ok = True
        for v in p[1:-1]:
            if any(int(w) in o0_set or int(w) in o1_set for w in m.nbrs(v)):
                inner_ok = False
                break
        if not inner_ok:
            continue
        paths.append({"name": name, "path": list(p), "zone": zone, "zone_y": zone_y,
                      "key": tuple(sorted(rank[v] for v in p))})
    pairs = []
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            a, b = paths[i], paths[j]
            if (len(a["zone"]) % 2) != (len(b["zone"]) % 2):
                continue                        # (I) parity
            if set(a["zone"]) & set(b["zone"]):
                continue                        # attachment arcs must be disjoint
            if set(a["zone_y"]) & set(b["zone_y"]):
                continue
            if set(a["path"]) & set(b["path"]) or _paths_touch(m, a["path"], b["path"]):
                continue                        # (II)
            pairs.append((min(a["key"], b["key"]), max(a["key"], b["key"]), a, b))
    pairs.sort(key=lambda t: (t[0], t[1]))
    for _, _, a, b in pairs:
        plan = _build_nu(m, ex, o1, o0, a, b, named, current_cycles, consumed)
        if plan is not None:
            return plan
    return None


def _build_nu(m, ex, o1, o0, pa, pb, named, current_cycles, consumed):
    verts0 = o0.cycle.vertices
    k0 = len(verts0)
    verts1 = o1.cycle.vertices
    k1 = len(verts1)
    # order the pair so the cyclic order on O0 reads l1, r1, l2, r2
    z_a, z_b = pa["zone"], pb["zone"]
    # positions are contiguous runs; run a: [la..ra], run b: [lb..rb]
    la, ra = z_a[0], z_a[-1]
    lb, rb = z_b[0], z_b[-1]
    # walking forward from ra, we must meet lb before la (disjoint runs)
    p1, p2 = pa, pb
    l1p, r1p, l2p, r2p = la, ra, lb, rb
    # arch A1: open arc r1 -> l2 (forward), A2: open arc r2 -> l1 (forward)
    arch_a1 = _open_arc(verts0, r1p, l2p)
    arch_a2 = _open_arc(verts0, r2p, l1p)
    zone1 = [verts0[i] for i in z_a]
    zone2 = [verts0[i] for i in z_b]
    # sanity: the four points in cyclic order l1, r1, l2, r2
    # (guaranteed by construction of the runs)
    # arch A on O1: the longer gap arc between the y-zones, endpoints included
    zy1, zy2 = p1["zone_y"], p2["zone_y"]
    gap1 = _closed_arc(verts1, zy1[-1], zy2[0])
    gap2 = _closed_arc(verts1, zy2[-1], zy1[0])
    if len(gap1) >= len(gap2):
        arch_candidates = [gap1, gap2]
    else:
        arch_candidates = [gap2, gap1]
    x1, y1 = p1["path"][0], p1["path"][-1]
    x2, y2 = p2["path"][0], p2["path"][-1]
    l1v, r1v = verts0[l1p], verts0[r1p]
    l2v, r2v = verts0[l2p], verts0[r2p]
    for arch_A in arch_candidates:
        if len(arch_A) < 1:
            continue
        a_first, a_last = arch_A[0], arch_A[-1]
        # orient: the arch end adjacent to y1 connects to P1
        if m.edge_exists(a_first, y1) and m.edge_exists(a_last, y2):
            A = list(arch_A)
        elif m.edge_exists(a_last, y1) and m.edge_exists(a_first, y2):
            A = list(arch_A)[::-1]
        else:
            continue
        for chosen, arch in ((1, arch_a1), (2, arch_a2)):
            # nu: A (y1-end .. y2-end) + P2 reversed (y2..x2) + O0 closed arc + P1 (x1..y1)
            if chosen == 1:
                if not (m.edge_exists(x2, l2v) and m.edge_exists(x1, r1v)):
                    continue
                o0_part = [l2v] + arch[::-1] + [r1v]
            else:
                if not (m.edge_exists(x2, r2v) and m.edge_exists(x1, l1v)):
                    continue
                o0_part = [r2v] + arch + [l1v]
            nu_list = (A + list(reversed(p2["path"])) + o0_part + p1["path"])
            if len(nu_list) % 2 == 1:
                continue
            if len(set(nu_list)) != len(nu_list):
                continue
            ok = all(m.edge_exists(nu_list[i], nu_list[(i + 1) % len(nu_list)])
                     for i in range(len(nu_list)))
            if not ok:
                continue
            nu = Cycle(tuple(nu_list)).canonical(m.rank)
            if not is_nonselftouching(m, nu):
                continue
            # distance >= 4 from every other live cycle
            far_ok = True
            for oid, cyc in current_cycles.items():
                if oid in (o1.id, o0.id) or oid in consumed:
                    continue
                d = graph_distance(m, nu.vertices, cyc.vertices, cap=4)
                if d < 4:
                    far_ok = False
                    break
            if not far_ok:
                continue
            conds = _audit_conditions(m, ex, o1, o0, p1, p2, current_cycles, consumed)
            plan = SurgeryPlan(
                node_o1=o1.id, node_o0=o0.id, O1=o1.cycle, O0=o0.cycle,
                Q=named.get("Q", ()), Q1=named.get("Q1", ()), Q2=named.get("Q2", ()),
                P1=tuple(p1["path"]), P2=tuple(p2["path"]),
                x1=x1, x2=x2, y1=y1, y2=y2,
                l1=l1v, r1=r1v, l2=l2v, r2=r2v,
                arch_A=tuple(A), arch_A1=tuple(arch_a1), arch_A2=tuple(arch_a2),
                chosen_arch=chosen, nu=nu,
                zone1_size=len(zone1), zone2_size=len(zone2),
                conditions=conds)
            return plan
    return None


def _audit_conditions(m, ex, o1, o0, p1, p2, current_cycles, consumed):
    conds = {}
    conds["I_parity"] = (len(p1["zone"]) % 2) == (len(p2["zone"]) % 2)
    conds["II_paths_disjoint_nontouching"] = not _paths_touch(m, p1["path"], p2["path"])
    both = set(p1["path"]) | set(p2["path"])
    ok3 = True
    for oid, cyc in current_cycles.items():
        if oid in (o1.id, o0.id) or oid in consumed:
            continue
        if graph_distance(m, both, cyc.vertices, cap=4) < 4:
            ok3 = False
            break
    conds["III_distance_4_from_others"] = ok3
    removed = both | set(o1.cycle.vertices) | set(o0.cycle.vertices)
    comp_of = {}
    ok4 = True
    others = [cid for cid in o1.children if cid != o0.id]
    if others:
        seen = set()
        comps = []
        for cid in others:
            v0 = ex.node(cid).cycle.vertices[0]
            if v0 in seen:
                continue
            comp = {v0}
            stack = [v0]
            while stack:
                v = stack.pop()
                for w in m.nbrs(v):
                    w = int(w)
                    if w in removed or w in comp:
                        continue
                    comp.add(w)
                    stack.append(w)
            comps.append(comp)
            seen |= comp
        first = comps[0]
        for cid in others:
            if not all(v in first for v in ex.node(cid).cycle.vertices):
                ok4 = False
                break
    conds["IV_other_children_one_component"] = ok4
    return conds


def _open_arc(verts, i, j):
    """Vertices strictly between cyclic positions i and j, walking forward."""
    k = len(verts)
    out = []
    p = (i + 1) % k
    while p != j:
        out.append(verts[p])
        p = (p + 1) % k
    return out


def _closed_arc(verts, i, j):
    """Vertices from position i to j inclusive, walking forward."""
    k = len(verts)
    out = [verts[i]]
    p = i
    while p != j:
        p = (p + 1) % k
        out.append(verts[p])
    return out


def evenize(m, ex, strict=False):
    """Even cycle exhaustion of corridor >= 4 from a corridor-6 exhaustion.

    Keeps even labels; repairs odd labels by arch surgery where an odd child
    is available, drops them otherwise (strict=True raises instead).
    """
    if all(nd.cycle.even for nd in ex.nodes):
        return ex
    oh = _odd_heights(ex)
    current = {nd.id: nd.cycle for nd in ex.nodes}
    consumed = set()
    dropped = []
    surgeries = []
    replacements = {}
    odd_nodes = [nd for nd in ex.nodes if not nd.cycle.even]
    targets = sorted((nd for nd in odd_nodes if oh[nd.id] % 2 == 0),
                     key=lambda nd: (oh[nd.id],
                                     min(m.rank[v] for v in nd.cycle.vertices)))
    for nd in targets:
        try:
            plan = find_connectors(m, ex, nd.id, current, consumed)
        except SurgeryFailed as e:
            if strict:
                raise
            dropped.append((nd.id, str(e)))
            consumed.add(nd.id)
            current.pop(nd.id, None)
            continue
        surgeries.append(plan)
        if not plan.parity_identity:
            raise InternalInvariantViolation(
                "surgery parity identity failed", witness=plan.node_o1)
        replacements[nd.id] = plan.nu
        current[nd.id] = plan.nu
        consumed.add(plan.node_o0)
        current.pop(plan.node_o0, None)
    # drop leftover odd cycles (odd strata not consumed, or failed targets)
    final = []
    for nd in ex.nodes:
        if nd.id in consumed and nd.id not in replacements:
            continue
        cyc = replacements.get(nd.id, nd.cycle)
        if not cyc.even:
            dropped.append((nd.id, "odd cycle without surgery"))
            continue
        final.append((nd.level, cyc, nd.source_cell))
    # an empty result is a legitimate (if uninformative) outcome on a small
    # window: everything then belongs to the virtual root
    out = _assemble_tree(m, final, corridor=4)
    out.surgeries = surgeries
    out.dropped = dropped
    out.level_stats = dict(ex.level_stats)
    _check_corridor(m, out, 4)
    return out
