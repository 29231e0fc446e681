"""Graph geodesics on triangle meshes.

Distances are single-source shortest paths in a Steiner graph: every edge
carries ``steiner`` evenly spaced auxiliary nodes, and inside each face all
pairs of boundary nodes on different sides are joined by straight segments
(lengths measured in the face flattened by its edge lengths).  With
``steiner=0`` this is the plain edge graph and recovered paths run along
mesh edges.

Nodes ``0 .. V-1`` are the mesh vertices; node ``V + e*steiner + (s-1)``
is the s-th Steiner point of edge ``e`` counted from ``edges[e, 0]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

from .mesh import MeshError, SurfaceMesh, VertexPath, boundary_loops


class DisconnectedMesh(MeshError):
    pass


def flatten_faces(mesh: SurfaceMesh) -> np.ndarray:
    """Planar corner coordinates per face, shape (F, 3, 2).

    Corner 0 at the origin, corner 1 on the positive x axis, corner 2 above.
    """
    cached = mesh.__dict__.get("_flat_faces")
    if cached is not None:
        return cached
    fl = mesh.face_lengths
    l01, l12, l20 = fl[:, 0], fl[:, 1], fl[:, 2]
    x2 = (l01 ** 2 + l20 ** 2 - l12 ** 2) / (2 * l01)
    y2 = np.sqrt(np.maximum(l20 ** 2 - x2 ** 2, 0.0))
    out = np.zeros((len(fl), 3, 2))
    out[:, 1, 0] = l01
    out[:, 2, 0] = x2
    out[:, 2, 1] = y2
    mesh.__dict__["_flat_faces"] = out
    return out


@dataclass(eq=False)
class SteinerGraph:
    mesh: SurfaceMesh
    steiner: int
    matrix: sp.csr_matrix

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    def node_location(self, node: int):
        """``(edge, t)`` for a Steiner node (t measured from ``edges[edge, 0]``), else ``None``."""
        V = self.mesh.n_vertices
        if node < V:
            return None
        e, s = divmod(node - V, self.steiner)
        return e, (s + 1) / (self.steiner + 1)

    def link_length(self, u: int, v: int) -> float:
        return float(self.matrix[u, v])


def _face_pairs(k: int):
    """Local node pairs of one face that are not on a common side."""
    n = 3 + 3 * k
    sides = []
    for s in range(3):
        members = {s, (s + 1) % 3} | {3 + s * k + i for i in range(k)}
        sides.append(members)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)
             if not any(i in m and j in m for m in sides)]
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def steiner_graph(mesh: SurfaceMesh, steiner: int = 0) -> SteinerGraph:
    """Build (and memoise on the mesh) the Steiner graph."""
    if steiner < 0:
        raise ValueError("steiner must be >= 0")
    cache = mesh.__dict__.setdefault("_graph_cache", {})
    if steiner not in cache:
        cache[steiner] = _build_graph(mesh, steiner)
    return cache[steiner]


def _build_graph(mesh: SurfaceMesh, k: int) -> SteinerGraph:
    V, E = mesh.n_vertices, len(mesh.edges)
    N = V + E * k
    edges = mesh.edges
    L = mesh.lengths
    rows, cols, vals = [], [], []
    if k == 0:
        rows.append(edges[:, 0]); cols.append(edges[:, 1]); vals.append(L)
    else:
        # chain along each edge: a, s1, ..., sk, b
        chain = np.empty((E, k + 2), dtype=np.int64)
        chain[:, 0] = edges[:, 0]
        chain[:, -1] = edges[:, 1]
        chain[:, 1:-1] = V + np.arange(E)[:, None] * k + np.arange(k)[None, :]
        seg = np.repeat((L / (k + 1))[:, None], k + 1, axis=1)
        rows.append(chain[:, :-1].ravel()); cols.append(chain[:, 1:].ravel())
        vals.append(seg.ravel())
        # straight links across faces
        F = mesh.n_faces
        P = flatten_faces(mesh)
        nloc = 3 + 3 * k
        gid = np.empty((F, nloc), dtype=np.int64)
        pos = np.empty((F, nloc, 2))
        gid[:, :3] = mesh.faces
        pos[:, :3] = P
        he = mesh.halfedge_edge.reshape(F, 3)
        ts = np.arange(1, k + 1) / (k + 1)
        for s in range(3):
            e = he[:, s]
            a = mesh.faces[:, s]
            forward = edges[e, 0] == a
            idx = np.where(forward[:, None], np.arange(k)[None, :],
                           (k - 1 - np.arange(k))[None, :])
            gid[:, 3 + s * k:3 + (s + 1) * k] = V + e[:, None] * k + idx
            p0, p1 = P[:, s], P[:, (s + 1) % 3]
            pos[:, 3 + s * k:3 + (s + 1) * k] = (p0[:, None, :] * (1 - ts)[None, :, None]
                                                 + p1[:, None, :] * ts[None, :, None])
        pairs = _face_pairs(k)
        d = np.linalg.norm(pos[:, pairs[:, 0]] - pos[:, pairs[:, 1]], axis=2)
        rows.append(gid[:, pairs[:, 0]].ravel()); cols.append(gid[:, pairs[:, 1]].ravel())
        vals.append(d.ravel())
    r = np.concatenate(rows); c = np.concatenate(cols); w = np.concatenate(vals)
    m = sp.csr_matrix((np.r_[w, w], (np.r_[r, c], np.r_[c, r])), shape=(N, N))
    return SteinerGraph(mesh, k, m)


@dataclass(eq=False)
class DistanceField:
    """Distances from one source vertex.

    ``dist`` covers mesh vertices; ``node_dist`` and ``pred`` cover every
    node of the Steiner graph (``pred[source] == -1``).
    """

    source: int
    dist: np.ndarray
    node_dist: np.ndarray
    pred: np.ndarray
    graph: SteinerGraph


def _lowest_index_pred(graph: SteinerGraph, node_dist: np.ndarray, pred: np.ndarray,
                       source: int) -> np.ndarray:
    """Replace predecessors by the lowest-index neighbour realising the distance exactly."""
    m = graph.matrix.tocoo()
    ok = node_dist[m.row] + m.data <= node_dist[m.col]
    ok &= m.col != source
    u, v = m.row[ok], m.col[ok]
    out = pred.copy()
    if len(v):
        best = np.full(len(pred), np.iinfo(np.int64).max)
        np.minimum.at(best, v, u)
        has = best != np.iinfo(np.int64).max
        out[has] = best[has]
    out[source] = -1
    return out


def distance_fields(mesh: SurfaceMesh, sources, steiner: int = 0) -> list[DistanceField]:
    """Shortest-path fields from several sources over a shared graph."""
    sources = [int(s) for s in np.atleast_1d(sources)]
    for s in sources:
        if not 0 <= s < mesh.n_vertices:
            raise ValueError(f"source {s} not in mesh")
    g = steiner_graph(mesh, steiner)
    if connected_components(g.matrix, directed=False)[0] > 1:
        raise DisconnectedMesh("mesh is disconnected")
    if not sources:
        return []
    D, P = dijkstra(g.matrix, directed=False, indices=sources, return_predecessors=True)
    V = mesh.n_vertices
    out = []
    for i, s in enumerate(sources):
        pred = _lowest_index_pred(g, D[i], P[i].astype(np.int64), s)
        out.append(DistanceField(s, D[i, :V], D[i], pred, g))
    return out


def distance_field(mesh: SurfaceMesh, source: int, steiner: int = 0) -> DistanceField:
    """Single-source shortest-path distances from ``source``."""
    return distance_fields(mesh, [source], steiner)[0]


def shortest_path(field: DistanceField, target: int) -> VertexPath:
    """Recover the path ``source -> target`` from a field.

    With ``steiner > 0`` the returned node ids may include Steiner nodes
    (ids ``>= V``).
    """
    if not np.isfinite(field.node_dist[target]):
        raise MeshError("target unreachable")
    nodes = [int(target)]
    v = int(target)
    while v != field.source:
        v = int(field.pred[v])
        if v < 0:
            raise MeshError("target unreachable")
        nodes.append(v)
    nodes.reverse()
    g = field.graph
    length = float(sum(g.link_length(a, b) for a, b in zip(nodes[:-1], nodes[1:])))
    return VertexPath(tuple(nodes), length)


def refine(mesh: SurfaceMesh, steiner_per_edge: int) -> SurfaceMesh:
    """Uniformly subdivide every face into ``(k+1)**2`` triangles.

    New vertices on edges are shared between neighbouring faces; lengths
    come from each face's flattening, so the piecewise-flat metric and the
    total area are unchanged.
    """
    k = int(steiner_per_edge)
    if k < 0:
        raise ValueError("steiner_per_edge must be >= 0")
    if k == 0:
        return mesh
    m = k + 1
    V, E, F = mesh.n_vertices, len(mesh.edges), mesh.n_faces
    edges = mesh.edges
    n_int = (k * (k - 1)) // 2
    P = flatten_faces(mesh)
    he = mesh.halfedge_edge.reshape(F, 3)
    lattice = [(a, b) for a in range(m + 1) for b in range(m + 1 - a)]
    interior = [(a, b) for (a, b) in lattice if a > 0 and b > 0 and a + b < m]
    int_index = {ab: i for i, ab in enumerate(interior)}
    nv = V + E * k + F * n_int
    lengths = {}
    faces_out = []
    pos = None
    if mesh.positions is not None:
        pos = np.zeros((nv, 3))
        pos[:V] = mesh.positions
    for f in range(F):
        corners = mesh.faces[f]

        def node(a, b, f=f, corners=corners):
            w = (m - a - b, a, b)
            nz = [i for i in range(3) if w[i] > 0]
            if len(nz) == 1:
                return int(corners[nz[0]])
            if len(nz) == 2:
                i, j = nz
                side = i if (i + 1) % 3 == j else j
                e = he[f, side]
                ea = edges[e, 0]
                wb = w[j] if corners[i] == ea else w[i]
                return int(V + e * k + wb - 1)
            return int(V + E * k + f * n_int + int_index[(a, b)])

        def xy(a, b, f=f):
            return ((m - a - b) * P[f, 0] + a * P[f, 1] + b * P[f, 2]) / m

        tris = []
        for a in range(m):
            for b in range(m - a):
                tris.append(((a, b), (a + 1, b), (a, b + 1)))
                if a + b <= m - 2:
                    tris.append(((a + 1, b), (a + 1, b + 1), (a, b + 1)))
        for t in tris:
            ids = [node(*ab) for ab in t]
            faces_out.append(ids)
            for s in range(3):
                u, w_ = ids[s], ids[(s + 1) % 3]
                key = (u, w_) if u < w_ else (w_, u)
                if key not in lengths:
                    lengths[key] = float(np.linalg.norm(xy(*t[s]) - xy(*t[(s + 1) % 3])))
        if pos is not None:
            for ab in lattice:
                wgt = np.array([m - ab[0] - ab[1], ab[0], ab[1]]) / m
                pos[node(*ab)] = wgt @ mesh.positions[corners]
    return SurfaceMesh(nv, np.array(faces_out), lengths, pos, None,
                       dict(mesh.meta, refined=k))


@dataclass(eq=False)
class BoundaryDistanceMatrix:
    """Pairwise distances between boundary samples.

    ``params`` are normalised arc-length parameters in ``[0, 1)``;
    ``vertices`` the sampled mesh vertices.
    """

    params: np.ndarray
    vertices: np.ndarray
    d: np.ndarray
    fields: list | None = None

    def __len__(self):
        return len(self.params)


def sample_boundary(mesh: SurfaceMesh, n_samples: int | None = None):
    """Boundary vertices closest to equally spaced arc-length parameters.

    ``n_samples=None`` takes every boundary vertex.  Returns
    ``(vertices, params)``.
    """
    loops = boundary_loops(mesh)
    if len(loops) != 1:
        raise MeshError("expected filling boundary (exactly one boundary loop)")
    loop = loops[0]
    if n_samples is None:
        return loop.vertices.copy(), loop.params.copy()
    if n_samples < 1 or n_samples > len(loop):
        raise ValueError("n_samples out of range")
    targets = np.arange(n_samples) / n_samples
    diff = np.abs(loop.params[None, :] - targets[:, None])
    diff = np.minimum(diff, 1 - diff)
    idx = np.argmin(diff, axis=1)
    if len(np.unique(idx)) != n_samples:
        raise MeshError("boundary too coarse for the requested sample count")
    return loop.vertices[idx], loop.params[idx]


def boundary_distance_matrix(mesh: SurfaceMesh, n_samples: int | None = None,
                             steiner: int = 0) -> BoundaryDistanceMatrix:
    """Distances between boundary samples; keeps the per-sample fields."""
    if n_samples is not None and n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    verts, params = sample_boundary(mesh, n_samples)
    fields = distance_fields(mesh, verts, steiner)
    d = np.array([f.dist[verts] for f in fields])
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return BoundaryDistanceMatrix(params, verts, d, fields)


def domination_violation(d0: BoundaryDistanceMatrix, d: BoundaryDistanceMatrix) -> float:
    """``max(d0 - d)`` over all sample pairs."""
    if len(d0) != len(d) or not np.allclose(d0.params, d.params, atol=1e-9):
        raise ValueError("sample mismatch")
    return float(np.max(d0.d - d.d))


def verify_boundary_domination(d0: BoundaryDistanceMatrix, d: BoundaryDistanceMatrix,
                               slack: float = 0.0) -> bool:
    """True iff ``d0[i, j] <= d[i, j] + slack`` for every pair."""
    return domination_violation(d0, d) <= slack
