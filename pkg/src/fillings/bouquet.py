"""Bouquets of loops at an interior basepoint.

A bouquet on a genus-G surface with one boundary circle is a family of 2G
simple loops through a basepoint ``x``, pairwise disjoint away from ``x``,
whose complement is an annulus.  It is built in G rounds on a progressively
cut mesh:

* the first step of round one is the shortest nonseparating loop at ``x``;
* every later odd step is the shortest nonseparating arc between copies of
  ``x`` on the boundary component that carries them;
* every even step is the shortest arc joining the two boundary components
  that carry copies of ``x``.

All lengths are edge-graph lengths.  Topology is certified by cutting and
reading off the Euler characteristic and boundary count of the result.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .geodesic import distance_field, shortest_path
from .mesh import (
    MeshError,
    SurfaceMesh,
    VertexPath,
    _path_edge_ids,
    area,
    boundary_loops,
    components,
    cut_edges,
    genus,
)


class BouquetError(MeshError):
    def __init__(self, message: str, cut_log=None):
        super().__init__(message)
        self.cut_log = cut_log or []


# -- graph helpers --------------------------------------------------------------

def _interior_graph(mesh: SurfaceMesh, allowed: np.ndarray) -> sp.csr_matrix:
    """Edge graph restricted to interior edges with both ends in ``allowed``."""
    e = mesh.edges
    keep = ~mesh.boundary_edge_mask & allowed[e[:, 0]] & allowed[e[:, 1]]
    u, v, w = e[keep, 0], e[keep, 1], mesh.lengths[keep]
    n = mesh.n_vertices
    return sp.coo_matrix((np.r_[w, w], (np.r_[u, v], np.r_[v, u])), shape=(n, n)).tocsr()


def _lowest_pred(graph: sp.csr_matrix, dist: np.ndarray, sources) -> np.ndarray:
    """Predecessor tree choosing the lowest-index exact predecessor."""
    m = graph.tocoo()
    ok = np.isfinite(dist[m.row]) & (dist[m.row] + m.data <= dist[m.col])
    pred = np.full(graph.shape[0], -1, dtype=np.int64)
    best = np.full(graph.shape[0], np.iinfo(np.int64).max)
    np.minimum.at(best, m.col[ok], m.row[ok])
    has = best != np.iinfo(np.int64).max
    pred[has] = best[has]
    pred[np.asarray(sources, dtype=np.int64)] = -1
    return pred


def _tree_path(pred: np.ndarray, v: int) -> list[int]:
    out = [int(v)]
    while pred[out[-1]] >= 0:
        out.append(int(pred[out[-1]]))
    return out[::-1]


def _branches(pred: np.ndarray, order: np.ndarray, sources) -> np.ndarray:
    """Label each reached vertex by its first step away from its source.

    Sources get label ``-1 - source``; unreached vertices ``-2**62``.
    """
    lab = np.full(len(pred), -(2 ** 62), dtype=np.int64)
    for s in sources:
        lab[s] = -1 - int(s)
    for v in order:
        p = pred[v]
        if p < 0:
            continue
        lab[v] = v if lab[p] < 0 else lab[p]
    return lab


class _DualTest:
    """Quick separation test: is the face graph still connected after a cut?"""

    def __init__(self, mesh: SurfaceMesh):
        he = mesh.halfedge_edge
        order = np.argsort(he, kind="stable")
        se = he[order]
        starts = np.flatnonzero(np.r_[True, se[1:] != se[:-1]])
        ends = np.r_[starts[1:], len(order)]
        keep = ends - starts == 2
        self.edge = se[starts[keep]]
        self.f1 = order[starts[keep]] // 3
        self.f2 = order[starts[keep] + 1] // 3
        self.n = mesh.n_faces
        self.faces = mesh.faces
        self.face_edges = mesh.halfedge_edge.reshape(-1, 3)

    def sides(self, edge_ids):
        """Component count and label per face once ``edge_ids`` are cut."""
        keep = ~np.isin(self.edge, np.asarray(edge_ids, dtype=np.int64))
        g = sp.coo_matrix((np.ones(int(keep.sum())), (self.f1[keep], self.f2[keep])),
                          shape=(self.n, self.n))
        return connected_components(g, directed=False)

    def connected_after(self, edge_ids) -> bool:
        return self.sides(edge_ids)[0] == 1

    def side_chis(self, edge_ids) -> list[int]:
        """Euler characteristic of each piece after cutting along ``edge_ids``."""
        n, lab = self.sides(edge_ids)
        out = []
        for c in range(n):
            sel = lab == c
            out.append(len(np.unique(self.faces[sel])) - len(np.unique(self.face_edges[sel]))
                       + int(sel.sum()))
        return out


def _dual_test(mesh: SurfaceMesh) -> _DualTest:
    cached = mesh.__dict__.get("_dual_test")
    if cached is None:
        cached = mesh.__dict__["_dual_test"] = _DualTest(mesh)
    return cached


def is_noncontractible(mesh: SurfaceMesh, path: VertexPath,
                       require_nonseparating: bool = False) -> bool:
    """Certify a simple loop or boundary-to-boundary arc by cutting.

    Nonseparating curves are always accepted.  A separating curve counts as
    noncontractible only when neither side is a disc, and only when
    ``require_nonseparating`` is off.
    """
    ids = _path_edge_ids(mesh, path)
    test = _dual_test(mesh)
    if test.connected_after(ids):
        return True
    if require_nonseparating:
        return False
    # a compact connected piece with chi = 1 is a disc
    return 1 not in test.side_chis(ids)


# -- shortest loops and arcs ----------------------------------------------------

def _candidates(mesh: SurfaceMesh, sources, allowed: np.ndarray):
    """Tree-cycle candidates ``path(s1 -> u) + (u, v) + path(v -> s2)``, shortest first.

    Yields ``(length, vertices)``; ``u`` and ``v`` lie on different branches
    of the multi-source shortest-path tree, so every candidate is simple.
    """
    sources = [int(s) for s in sources]
    graph = _interior_graph(mesh, allowed)
    dist = dijkstra(graph, directed=False, indices=sources, min_only=True)
    pred = _lowest_pred(graph, dist, sources)
    order = np.argsort(dist, kind="stable")
    lab = _branches(pred, order[np.isfinite(dist[order])], sources)
    m = sp.triu(graph).tocoo()
    u, v, w = m.row, m.col, m.data
    ok = np.isfinite(dist[u]) & np.isfinite(dist[v]) & (lab[u] != lab[v])
    # drop tree edges, they close no cycle
    ok &= (pred[u] != v) & (pred[v] != u)
    u, v, w = u[ok], v[ok], w[ok]
    total = dist[u] + w + dist[v]
    for i in np.lexsort((v, u, total)):
        pu = _tree_path(pred, int(u[i]))
        pv = _tree_path(pred, int(v[i]))
        yield float(total[i]), pu + pv[::-1]


def shortest_noncontractible_loop(mesh: SurfaceMesh, x: int,
                                  require_nonseparating: bool = False) -> VertexPath:
    """Shortest certified noncontractible loop through the interior vertex ``x``.

    Searches the tree-cycle family of the shortest-path tree from ``x`` over
    interior vertices.

    Raises
    ------
    MeshError
        ``"no noncontractible loop"`` when no candidate passes.
    """
    x = int(x)
    if mesh.boundary_vertex_mask[x]:
        raise MeshError("basepoint must be interior")
    allowed = ~mesh.boundary_vertex_mask
    for _, verts in _candidates(mesh, [x], allowed):
        path = VertexPath.along(mesh, verts)
        if is_noncontractible(mesh, path, require_nonseparating):
            return path
    raise MeshError("no noncontractible loop")


def _arc_allowed(mesh: SurfaceMesh, ends) -> np.ndarray:
    allowed = ~mesh.boundary_vertex_mask
    allowed[np.asarray(list(ends), dtype=np.int64)] = True
    return allowed


def shortest_intercopy_arc(cut_mesh: SurfaceMesh, copyA, copyB) -> VertexPath:
    """Shortest arc from ``copyA`` to ``copyB`` through interior vertices only.

    Either argument may be a list of candidate copies; the shortest arc over
    all pairs is returned.

    Raises
    ------
    MeshError
        ``"cut disconnected surface"`` when no such arc exists.
    """
    A = [int(a) for a in np.atleast_1d(copyA)]
    B = [int(b) for b in np.atleast_1d(copyB)]
    if set(A) & set(B):
        raise ValueError("copies must differ")
    allowed = _arc_allowed(cut_mesh, A + B)
    g = _interior_graph(cut_mesh, allowed).tocoo()
    # targets are sinks and sources are left at once, so the arc meets no copy twice
    isA = np.isin(g.row, A) & np.isin(g.col, A)
    keep = ~np.isin(g.row, B) & ~isA & ~np.isin(g.col, A)
    graph = sp.coo_matrix((g.data[keep], (g.row[keep], g.col[keep])), shape=g.shape).tocsr()
    dist = dijkstra(graph, directed=True, indices=A, min_only=True)
    reach = dist[B]
    if not np.any(np.isfinite(reach)):
        raise MeshError("cut disconnected surface")
    pred = _lowest_pred(graph, dist, A)
    # lowest-index target among the nearest ones
    best = float(np.min(reach))
    target = min(b for b, d in zip(B, reach) if d == best)
    return VertexPath.along(cut_mesh, _tree_path(pred, target))


def shortest_nonseparating_arc(cut_mesh: SurfaceMesh, copies) -> VertexPath:
    """Shortest arc between copies that does not disconnect ``cut_mesh``."""
    copies = [int(c) for c in copies]
    allowed = _arc_allowed(cut_mesh, copies)
    for _, verts in _candidates(cut_mesh, copies, allowed):
        if len(verts) < 2:
            continue
        path = VertexPath.along(cut_mesh, verts)
        try:
            ok = is_noncontractible(cut_mesh, path, require_nonseparating=True)
        except MeshError:
            continue
        if ok:
            return path
    raise MeshError("no nonseparating arc between basepoint copies")


# -- bouquet construction -------------------------------------------------------------

@dataclass
class StageAudit:
    step: int
    kind: str
    V: int
    E: int
    F: int
    chi: int
    b: int
    genus: int
    n_components: int
    area: float
    path_length: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(eq=False)
class Bouquet:
    """Loops through ``basepoint`` given in vertex ids of the uncut mesh."""

    basepoint: int
    loops: list
    cut_log: list = field(default_factory=list)
    final_mesh: SurfaceMesh | None = None

    def to_dict(self) -> dict:
        return {
            "basepoint": int(self.basepoint),
            "loops": [list(p.vertices) for p in self.loops],
            "lengths": [float(p.length) for p in self.loops],
            "audit": [a.to_dict() for a in self.cut_log],
        }


def _audit(mesh: SurfaceMesh, step: int, kind: str, length: float) -> StageAudit:
    comps = components(mesh)
    b = len(boundary_loops(mesh))
    chi = mesh.euler_characteristic
    g = (2 - chi - b) // 2 if len(comps) == 1 else -1
    return StageAudit(step, kind, mesh.n_vertices, len(mesh.edges), mesh.n_faces,
                      chi, b, g, len(comps), area(mesh), length)


def _copy_loops(mesh: SurfaceMesh, x: int):
    """Boundary loops carrying copies of ``x``, with those copies."""
    out = []
    for loop in boundary_loops(mesh):
        c = [int(v) for v in loop.vertices if mesh.origin[v] == x]
        if c:
            out.append(c)
    return out


def build_bouquet(mesh: SurfaceMesh, x: int) -> Bouquet:
    """Cut ``mesh`` open along 2G loops through ``x``, leaving an annulus.

    Raises
    ------
    MeshError
        ``"nothing to cut"`` for genus 0.
    BouquetError
        If a stage audit deviates from the expected topology; carries the log.
    """
    x = int(x)
    G = genus(mesh)
    if G == 0:
        raise MeshError("nothing to cut")
    if len(boundary_loops(mesh)) != 1:
        raise MeshError("expected a surface with one boundary circle")
    if mesh.boundary_vertex_mask[x]:
        raise MeshError("basepoint must be interior")
    base = SurfaceMesh(mesh.n_vertices, mesh.faces, mesh.edge_lengths, mesh.positions,
                       np.arange(mesh.n_vertices), mesh.meta)
    A0 = area(base)
    log = [_audit(base, 0, "start", 0.0)]
    loops = []
    cur = base
    for rnd in range(1, G + 1):
        if rnd == 1:
            path = shortest_noncontractible_loop(cur, x, require_nonseparating=True)
        else:
            carriers = _copy_loops(cur, x)
            if len(carriers) != 1:
                raise BouquetError("copies of the basepoint lie on several boundaries", log)
            path = shortest_nonseparating_arc(cur, carriers[0])
        cur = _cut_step(cur, path, loops, log, "loop")
        _expect(log, G - rnd, 3, A0)

        carriers = _copy_loops(cur, x)
        if len(carriers) != 2:
            raise BouquetError("expected copies of the basepoint on two boundaries", log)
        path = shortest_intercopy_arc(cur, carriers[0], carriers[1])
        cur = _cut_step(cur, path, loops, log, "arc")
        _expect(log, G - rnd, 2, A0)
    return Bouquet(x, loops, log, cur)


def _cut_step(cur: SurfaceMesh, path: VertexPath, loops: list, log: list, kind: str):
    loops.append(VertexPath(tuple(int(cur.origin[v]) for v in path.vertices), path.length))
    nxt = cut_edges(cur, _path_edge_ids(cur, path))
    log.append(_audit(nxt, len(log), kind, path.length))
    return nxt


def _expect(log, g: int, b: int, A0: float):
    a = log[-1]
    if a.n_components != 1 or a.genus != g or a.b != b:
        raise BouquetError(
            f"stage {a.step}: expected connected, genus {g}, b = {b}; "
            f"got {a.n_components} component(s), genus {a.genus}, b = {a.b}", log)
    if abs(a.area - A0) > 1e-12 * max(1.0, A0):
        raise BouquetError(f"stage {a.step}: area changed by cutting", log)


# -- certification -------------------------------------------------------------------

@dataclass
class BouquetCertificate:
    annulus: bool
    disjoint: bool
    probes_clear: bool
    n_loops: int
    cut_topology: dict
    overlaps: list
    probe_failures: list
    n_probes: int

    @property
    def passed(self) -> bool:
        return self.annulus and self.disjoint and self.probes_clear

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def _loop_edge_ids(mesh: SurfaceMesh, loops) -> list[int]:
    ids = []
    for p in loops:
        for a, b in p.edges:
            key = (a, b) if a < b else (b, a)
            if key not in mesh.edge_index:
                raise MeshError(f"loop leaves the mesh at ({a}, {b})")
            ids.append(mesh.edge_index[key])
    return ids


def verify_bouquet(mesh: SurfaceMesh, bouquet: Bouquet, probe_count: int = 32,
                   seed: int = 0, steiner: int = 0) -> BouquetCertificate:
    """Check the three defining properties of a bouquet.

    (a) cutting along every loop leaves a connected genus-0 surface with two
    boundary circles; (b) loops share no vertex or edge except the basepoint;
    (c) shortest paths from the basepoint to ``probe_count`` random boundary
    vertices meet the loops only at the basepoint.  With ``steiner > 0`` a
    probe also fails when it passes a Steiner node on a loop edge.
    """
    x = int(bouquet.basepoint)
    loops = list(bouquet.loops)
    ids = _loop_edge_ids(mesh, loops)
    topo = {}
    try:
        cut = cut_edges(mesh, ids)
        comps = components(cut)
        b = len(boundary_loops(cut))
        chi = cut.euler_characteristic
        topo = {"components": len(comps), "chi": chi, "b": b,
                "genus": (2 - chi - b) // 2 if len(comps) == 1 else None}
        annulus = len(comps) == 1 and chi == 0 and b == 2
    except MeshError as exc:
        topo = {"error": str(exc)}
        annulus = False

    overlaps = []
    vsets = [set(p.vertices) - {x} for p in loops]
    esets = []
    for p in loops:
        esets.append({(a, b) if a < b else (b, a) for a, b in p.edges})
    for i in range(len(loops)):
        for j in range(i + 1, len(loops)):
            if vsets[i] & vsets[j] or esets[i] & esets[j]:
                overlaps.append((i, j))
    for i, p in enumerate(loops):
        inner = p.vertices[1:-1] if p.is_loop else p.vertices
        if p.vertices[0] != x or p.vertices[-1] != x or len(set(inner)) != len(inner):
            overlaps.append((i, i))

    bverts = np.flatnonzero(mesh.boundary_vertex_mask)
    rng = np.random.default_rng(seed)
    probes = rng.choice(bverts, size=min(probe_count, len(bverts)), replace=False)
    field_ = distance_field(mesh, x, steiner)
    blocked = set().union(*vsets) if vsets else set()
    if steiner > 0:
        V = mesh.n_vertices
        for e in set(ids):
            blocked.update(V + e * steiner + s for s in range(steiner))
    failures = []
    for q in probes:
        path = shortest_path(field_, int(q))
        hit = blocked & set(path.vertices)
        if hit:
            failures.append({"probe": int(q), "hits": sorted(int(h) for h in hit)})
    return BouquetCertificate(annulus, not overlaps, not failures, len(loops), topo,
                              overlaps, failures, len(probes))


# -- exhaustive oracle -------------------------------------------------------------

def z2_cocycles(mesh: SurfaceMesh) -> np.ndarray:
    """Basis of Z/2 cocycles vanishing on a spanning tree, shape ``(k, E)``.

    ``k = 2G + b - 1``; a cycle is Z/2-null-homologous iff every row sums to
    zero along it.  Nonseparating simple loops are never null-homologous.
    """
    from scipy.sparse.csgraph import breadth_first_tree

    tree = breadth_first_tree(mesh.adjacency, 0, directed=False).tocoo()
    in_tree = np.zeros(len(mesh.edges), dtype=bool)
    for a, b in zip(tree.row, tree.col):
        in_tree[mesh.edge_index[(min(a, b), max(a, b))]] = True
    free = np.flatnonzero(~in_tree)
    # rows: faces; columns: non-tree edges; solve M phi = 0 over Z/2
    M = np.zeros((mesh.n_faces, len(free)), dtype=np.uint8)
    col = {int(e): j for j, e in enumerate(free)}
    for f, es in enumerate(mesh.halfedge_edge.reshape(-1, 3)):
        for e in es:
            if int(e) in col:
                M[f, col[int(e)]] ^= 1
    pivots = []
    r = 0
    for c in range(M.shape[1]):
        rows = np.flatnonzero(M[r:, c]) + r
        if len(rows) == 0:
            continue
        M[[r, rows[0]]] = M[[rows[0], r]]
        hit = np.flatnonzero(M[:, c])
        hit = hit[hit != r]
        M[hit] ^= M[r]
        pivots.append(c)
        r += 1
        if r == M.shape[0]:
            break
    free_cols = [c for c in range(M.shape[1]) if c not in set(pivots)]
    basis = np.zeros((len(free_cols), len(mesh.edges)), dtype=np.uint8)
    for i, fc in enumerate(free_cols):
        phi = np.zeros(M.shape[1], dtype=np.uint8)
        phi[fc] = 1
        for row, pc in enumerate(pivots):
            phi[pc] = M[row, fc]
        basis[i, free] = phi
    return basis


def _homology_lower_bound(mesh: SurfaceMesh, graph: sp.csr_matrix, x: int):
    """Per-edge class masks and ``lb[v, h]``: shortest return to ``x`` closing a nonzero class."""
    basis = z2_cocycles(mesh)
    k = len(basis)
    weights = (1 << np.arange(k)) if k else np.zeros(0, dtype=np.int64)
    emask = (basis.T.astype(np.int64) * weights).sum(axis=1) if k else np.zeros(len(mesh.edges), np.int64)
    m = graph.tocoo()
    eid = np.array([mesh.edge_index[(min(a, b), max(a, b))] for a, b in zip(m.row, m.col)],
                   dtype=np.int64)
    V, S = mesh.n_vertices, 1 << k
    rows, cols, data = [], [], []
    for h in range(S):
        rows.append(m.row + V * h)
        cols.append(m.col + V * (h ^ emask[eid]))
        data.append(m.data)
    cover = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(V * S, V * S)).tocsr()
    d = dijkstra(cover, directed=True, indices=x).reshape(S, V).T  # d[v, c]
    lb = np.full((V, S), np.inf)
    for h in range(S):
        others = [c for c in range(S) if c != h]
        if others:
            lb[:, h] = d[:, others].min(axis=1)
    return emask, lb


def enumerate_shortest_loop(mesh: SurfaceMesh, x: int, require_nonseparating: bool = False,
                            max_edges: int = 500, growth: float = 1.25, slack: float = 1e-9):
    """Shortest certified loop through ``x`` over *all* simple cycles.

    Depth-first search over simple cycles through ``x`` in the interior edge
    graph.  A branch is dropped once its length plus a lower bound on the
    way back reaches the current bound: the plain distance to ``x``, or the
    distance in the Z/2 homology cover to a sheet that closes a nonzero
    class.  The latter applies to nonseparating loops and, on genus-0
    surfaces, to all noncontractible ones.  Every closed cycle is certified with
    :func:`is_noncontractible`.  The bound starts at the shortest cycle
    through ``x`` and grows by ``growth`` until a certified cycle turns up,
    so the search never relies on the tree-cycle family.

    Returns
    -------
    (float, VertexPath)
    """
    if len(mesh.edges) > max_edges:
        raise ValueError(f"mesh too large for exhaustive enumeration ({len(mesh.edges)} edges)")
    x = int(x)
    allowed = ~mesh.boundary_vertex_mask
    graph = _interior_graph(mesh, allowed)
    # nonseparating loops, and noncontractible ones on planar surfaces, carry a nonzero class
    use_homology = require_nonseparating or genus(mesh) == 0
    if use_homology:
        emask, lb = _homology_lower_bound(mesh, graph, x)
    else:
        emask = np.zeros(len(mesh.edges), dtype=np.int64)
        lb = dijkstra(graph, directed=False, indices=x)[:, None]
    nbrs, wts, masks = [], [], []
    for v in range(mesh.n_vertices):
        nb = graph.indices[graph.indptr[v]:graph.indptr[v + 1]]
        nbrs.append([int(u) for u in nb])
        wts.append([float(w) for w in graph.data[graph.indptr[v]:graph.indptr[v + 1]]])
        masks.append([int(emask[mesh.edge_index[(min(v, u), max(v, u))]]) for u in nb])
    lb = lb.tolist()
    on_path = np.zeros(mesh.n_vertices, dtype=bool)
    on_path[x] = True
    stack_path = [x]
    best = [math.inf, None]

    def dfs(v: int, length: float, cls: int):
        for u, w, mk in zip(nbrs[v], wts[v], masks[v]):
            nl = length + w
            nc = cls ^ mk
            if u == x:
                # each cycle is met in both directions; certify one
                if (len(stack_path) >= 3 and nl < best[0] - slack
                        and stack_path[1] < stack_path[-1]):
                    p = VertexPath(tuple(stack_path + [x]), nl)
                    if is_noncontractible(mesh, p, require_nonseparating):
                        best[0], best[1] = nl, p
                continue
            if on_path[u] or nl + lb[u][nc if use_homology else 0] >= best[0] - slack:
                continue
            on_path[u] = True
            stack_path.append(u)
            dfs(u, nl, nc)
            stack_path.pop()
            on_path[u] = False

    # the shortest cycle through x at all: a tree cycle, found without any certification
    lo = min((t for t, _ in _candidates(mesh, [x], allowed)), default=math.inf)
    if not math.isfinite(lo):
        raise MeshError("no noncontractible loop")
    bound = lo * growth
    cap = 2 * float(mesh.lengths.sum())
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * mesh.n_vertices + 100))
    try:
        while best[1] is None:
            if bound > cap:
                raise MeshError("no noncontractible loop")
            best[0] = bound
            dfs(x, 0.0, 0)
            bound *= growth
    finally:
        sys.setrecursionlimit(old)
    return best[0], best[1]
