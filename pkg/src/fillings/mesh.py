"""Orientable triangle meshes with boundary and an edge-length metric.

A :class:`SurfaceMesh` is combinatorial: a vertex count, a list of
consistently oriented triangles and a positive length for every edge.
Vertex positions are optional and only used to seed lengths and to draw
pictures; all geometry (areas, distances, gradients) is computed from the
edge lengths.

Cutting (:func:`cut_along`) returns a new mesh in which the vertices along
the cut are duplicated.  Every mesh carries an ``origin`` array mapping its
vertices back to the vertices of the uncut mesh, so the copies of a vertex
can be recovered after any number of cuts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class MeshError(ValueError):
    """Invalid mesh input or an operation that would break mesh invariants."""


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Triangle mesh with an intrinsic metric given by edge lengths.

    Parameters
    ----------
    n_vertices : int
    faces : array_like, shape (F, 3)
        Vertex indices, counterclockwise with respect to the orientation.
    edge_lengths : dict, optional
        Maps sorted vertex pairs ``(i, j)`` to lengths.  Missing entries are
        taken from ``positions``.
    positions : array_like, shape (V, 2) or (V, 3), optional
    origin : array_like, shape (V,), optional
        Vertex of the uncut ancestor mesh each vertex descends from.
    meta : dict
        Free-form annotations (generator name, landmarks, seeds).
    """

    n_vertices: int
    faces: np.ndarray
    edge_lengths: dict = field(default_factory=dict, repr=False)
    positions: np.ndarray | None = field(default=None, repr=False)
    origin: np.ndarray | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "faces", faces)
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=float)
            if pos.shape[1] == 2:
                pos = np.column_stack([pos, np.zeros(len(pos))])
            object.__setattr__(self, "positions", pos)
        if self.origin is None:
            object.__setattr__(self, "origin", np.arange(self.n_vertices))
        else:
            object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.int64))
        if faces.size and (faces.min() < 0 or faces.max() >= self.n_vertices):
            raise MeshError("face index out of range")
        lengths = np.empty(len(self.edges))
        for k, (i, j) in enumerate(self.edges):
            key = (int(i), int(j))
            if key in self.edge_lengths:
                lengths[k] = self.edge_lengths[key]
            elif self.positions is not None:
                lengths[k] = np.linalg.norm(self.positions[i] - self.positions[j])
            else:
                raise MeshError(f"no length for edge {key}")
        object.__setattr__(self, "_lengths", lengths)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_positions(cls, positions, faces, **kw) -> "SurfaceMesh":
        positions = np.asarray(positions, dtype=float)
        return cls(len(positions), faces, positions=positions, **kw)

    # -- combinatorics ----------------------------------------------------------

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def _halfedges(self):
        f = self.faces
        tail = f.reshape(-1)
        head = f[:, [1, 2, 0]].reshape(-1)
        return tail, head

    @cached_property
    def _edge_data(self):
        tail, head = self._halfedges
        keys = np.stack([np.minimum(tail, head), np.maximum(tail, head)], axis=1)
        edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True,
                                           return_counts=True)
        return edges, inverse.reshape(-1), counts

    @property
    def edges(self) -> np.ndarray:
        """Sorted vertex pairs, shape (E, 2)."""
        return self._edge_data[0]

    @property
    def halfedge_edge(self) -> np.ndarray:
        """Edge index of half-edge ``3 * f + k`` (from corner k to k+1 of face f)."""
        return self._edge_data[1]

    @property
    def edge_face_count(self) -> np.ndarray:
        return self._edge_data[2]

    @property
    def lengths(self) -> np.ndarray:
        """Edge lengths aligned with :attr:`edges`."""
        return self._lengths

    @cached_property
    def edge_index(self) -> dict:
        return {(int(a), int(b)): k for k, (a, b) in enumerate(self.edges)}

    def length(self, u: int, v: int) -> float:
        key = (u, v) if u < v else (v, u)
        try:
            return float(self._lengths[self.edge_index[key]])
        except KeyError:
            raise MeshError(f"({u}, {v}) is not an edge") from None

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self.edge_index

    @cached_property
    def face_lengths(self) -> np.ndarray:
        """Per-face lengths ``(l01, l12, l20)`` of the three sides."""
        return self._lengths[self.halfedge_edge].reshape(-1, 3)

    @cached_property
    def boundary_edge_mask(self) -> np.ndarray:
        return self.edge_face_count == 1

    @cached_property
    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.edges[self.boundary_edge_mask].reshape(-1)] = True
        return mask

    def is_interior(self, v: int) -> bool:
        return not self.boundary_vertex_mask[v]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric sparse matrix of edge lengths."""
        e = self.edges
        n = self.n_vertices
        m = sp.coo_matrix((np.r_[self._lengths, self._lengths],
                           (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                          shape=(n, n))
        return m.tocsr()

    @cached_property
    def neighbors(self) -> list:
        adj = self.adjacency
        return [adj.indices[adj.indptr[i]:adj.indptr[i + 1]] for i in range(self.n_vertices)]

    def copies_of(self, original: int) -> np.ndarray:
        """Vertices descending from ``original`` of the uncut ancestor."""
        return np.flatnonzero(self.origin == original)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    def with_lengths_scaled(self, factor: float) -> "SurfaceMesh":
        lengths = {(int(a), int(b)): float(l) * factor
                   for (a, b), l in zip(self.edges, self._lengths)}
        pos = None if self.positions is None else self.positions * factor
        return SurfaceMesh(self.n_vertices, self.faces, lengths, pos, self.origin,
                           dict(self.meta, scale=self.meta.get("scale", 1.0) * factor))


@dataclass(frozen=True)
class BoundaryLoop:
    """Boundary cycle traversed with the surface on its left."""

    vertices: np.ndarray
    params: np.ndarray
    length: float

    def __len__(self):
        return len(self.vertices)


@dataclass(frozen=True)
class VertexPath:
    """Vertex sequence along mesh edges; a loop repeats its first vertex at the end."""

    vertices: tuple
    length: float

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))

    @property
    def is_loop(self) -> bool:
        return len(self.vertices) > 1 and self.vertices[0] == self.vertices[-1]

    @property
    def edges(self):
        return list(zip(self.vertices[:-1], self.vertices[1:]))

    @classmethod
    def along(cls, mesh: SurfaceMesh, vertices) -> "VertexPath":
        vertices = [int(v) for v in vertices]
        total = sum(mesh.length(a, b) for a, b in zip(vertices[:-1], vertices[1:]))
        return cls(tuple(vertices), total)


@dataclass
class Diagnostics:
    V: int
    E: int
    F: int
    chi: int
    b: int
    n_components: int
    errors: list

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {"V": self.V, "E": self.E, "F": self.F, "chi": self.chi, "b": self.b,
                "components": self.n_components, "errors": list(self.errors)}


def _vertex_fans(mesh: SurfaceMesh, cut: np.ndarray | None = None):
    """Labels grouping corners into fans around their vertex.

    Corners ``3 * f + k`` at the same vertex are joined across every interior
    edge not flagged in ``cut``.  Labels increase with the smallest corner
    of each fan.
    """
    nc = 3 * mesh.n_faces
    he_edge = mesh.halfedge_edge
    order = np.argsort(he_edge, kind="stable")
    sorted_edges = he_edge[order]
    starts = np.flatnonzero(np.r_[True, sorted_edges[1:] != sorted_edges[:-1]])
    ends = np.r_[starts[1:], len(order)]
    keep = ends - starts == 2
    if cut is not None:
        keep &= ~cut[sorted_edges[starts]]
    h1, h2 = order[starts[keep]], order[starts[keep] + 1]
    f1, k1 = np.divmod(h1, 3)
    f2, k2 = np.divmod(h2, 3)
    # h1 runs corner k1 -> k1+1 of f1; its twin runs the other way
    a1, b1 = 3 * f1 + k1, 3 * f1 + (k1 + 1) % 3
    a2, b2 = 3 * f2 + k2, 3 * f2 + (k2 + 1) % 3
    twin = mesh.faces[f1, k1] == mesh.faces[f2, (k2 + 1) % 3]
    rows = np.r_[a1, b1]
    cols = np.r_[np.where(twin, b2, a2), np.where(twin, a2, b2)]
    g = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(nc, nc))
    return connected_components(g, directed=False)[1]


def validate(mesh: SurfaceMesh) -> Diagnostics:
    """Check the mesh invariants and report counts.

    Failures are collected, not raised; use :func:`check` to raise.
    """
    errors = []
    V, F = mesh.n_vertices, mesh.n_faces
    E = len(mesh.edges)
    f = mesh.faces
    if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
        errors.append("degenerate face with repeated vertex")
    counts = mesh.edge_face_count
    if np.any(counts > 2):
        bad = mesh.edges[counts > 2][:5].tolist()
        errors.append(f"non-manifold edge(s): {bad}")
    tail, head = mesh._halfedges
    directed = np.unique(np.stack([tail, head], axis=1), axis=0)
    if len(directed) != len(tail):
        errors.append("orientation conflict: half-edge repeated in the same direction")
    if np.any(mesh.lengths <= 0) or not np.all(np.isfinite(mesh.lengths)):
        errors.append("non-positive edge length")
    fl = mesh.face_lengths
    if len(fl):
        srt = np.sort(fl, axis=1)
        viol = srt[:, 0] + srt[:, 1] <= srt[:, 2] * (1 + 1e-14)
        if np.any(viol):
            errors.append(f"triangle inequality violated in {int(viol.sum())} face(s), "
                          f"first {int(np.flatnonzero(viol)[0])}")
    used = np.zeros(V, dtype=bool)
    used[f.reshape(-1)] = True
    if not used.all():
        errors.append(f"{int((~used).sum())} isolated vertices")
    if not errors:
        labels = _vertex_fans(mesh)
        corners_v = f.reshape(-1)
        fans = np.unique(np.stack([corners_v, labels], axis=1), axis=0)
        per_vertex = np.bincount(fans[:, 0], minlength=V)
        if np.any(per_vertex > 1):
            errors.append(f"non-manifold vertex: {int(np.flatnonzero(per_vertex > 1)[0])}")
    ncomp = connected_components(mesh.adjacency, directed=False)[0] if V else 0
    if ncomp > 1:
        errors.append(f"mesh not connected ({ncomp} components)")
    try:
        b = len(boundary_loops(mesh)) if not errors else _count_boundary(mesh)
    except MeshError as exc:
        errors.append(str(exc))
        b = -1
    return Diagnostics(V, E, F, V - E + F, b, int(ncomp), errors)


def _count_boundary(mesh: SurfaceMesh) -> int:
    try:
        return len(boundary_loops(mesh))
    except MeshError:
        return -1


def check(mesh: SurfaceMesh, allow_disconnected: bool = False) -> Diagnostics:
    """Validate and raise :class:`MeshError` on failure."""
    d = validate(mesh)
    errs = [e for e in d.errors if not (allow_disconnected and "not connected" in e)]
    if errs:
        raise MeshError("; ".join(errs))
    return d


def boundary_loops(mesh: SurfaceMesh) -> list[BoundaryLoop]:
    """All boundary cycles, each starting at its smallest vertex index."""
    tail, head = mesh._halfedges
    bmask = mesh.boundary_edge_mask[mesh.halfedge_edge]
    nxt = {}
    for a, b in zip(tail[bmask], head[bmask]):
        a, b = int(a), int(b)
        if a in nxt:
            raise MeshError(f"non-manifold boundary at vertex {a}")
        nxt[a] = b
    seen = set()
    loops = []
    for start in sorted(nxt):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        v = nxt[start]
        while v != start:
            if v in seen or v not in nxt:
                raise MeshError("boundary is not a union of simple cycles")
            cyc.append(v)
            seen.add(v)
            v = nxt[v]
        cyc = np.array(cyc)
        seg = np.array([mesh.length(int(a), int(b)) for a, b in zip(cyc, np.roll(cyc, -1))])
        total = float(seg.sum())
        params = np.r_[0.0, np.cumsum(seg)[:-1]] / total
        loops.append(BoundaryLoop(cyc, params, total))
    return loops


def genus(mesh: SurfaceMesh) -> int:
    """Genus of a connected orientable mesh, ``(2 - chi - b) / 2``."""
    d = validate(mesh)
    if not d.ok:
        raise MeshError("; ".join(d.errors))
    twice = 2 - d.chi - d.b
    if twice % 2 or twice < 0:
        raise MeshError("inconsistent topology")
    return twice // 2


def area(mesh: SurfaceMesh) -> float:
    """Total area, summed in face order."""
    return float(np.sum(face_areas(mesh)))


def face_areas(mesh: SurfaceMesh) -> np.ndarray:
    # Kahan's stable form of Heron's formula
    s = np.sort(mesh.face_lengths, axis=1)[:, ::-1]
    a, b, c = s[:, 0], s[:, 1], s[:, 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(np.maximum(prod, 0.0))


@dataclass
class ComponentTopology:
    vertices: np.ndarray
    chi: int
    b: int

    @property
    def genus(self) -> int:
        return (2 - self.chi - self.b) // 2

    @property
    def is_disc(self) -> bool:
        return self.chi == 1 and self.b == 1

    def to_dict(self) -> dict:
        return {"V": int(len(self.vertices)), "chi": self.chi, "b": self.b,
                "genus": self.genus}


def components(mesh: SurfaceMesh) -> list[ComponentTopology]:
    """Euler characteristic and boundary count of every connected component."""
    n, labels = connected_components(mesh.adjacency, directed=False)
    face_lab = labels[mesh.faces[:, 0]]
    edge_lab = labels[mesh.edges[:, 0]]
    loops = boundary_loops(mesh)
    loop_lab = [labels[l.vertices[0]] for l in loops]
    out = []
    for c in range(n):
        verts = np.flatnonzero(labels == c)
        chi = len(verts) - int(np.sum(edge_lab == c)) + int(np.sum(face_lab == c))
        out.append(ComponentTopology(verts, chi, sum(1 for l in loop_lab if l == c)))
    return out


def cut_edges(mesh: SurfaceMesh, edge_ids) -> SurfaceMesh:
    """Split the mesh open along a set of interior edges.

    Each vertex is replaced by one copy per fan of incident faces that remain
    connected across uncut edges.  Faces, their order and all lengths are
    kept, so areas are preserved exactly.
    """
    cut = np.zeros(len(mesh.edges), dtype=bool)
    cut[np.asarray(list(edge_ids), dtype=np.int64)] = True
    if np.any(cut & mesh.boundary_edge_mask):
        raise MeshError("cut path runs along the boundary")
    labels = _vertex_fans(mesh, cut)
    corner_v = mesh.faces.reshape(-1)
    # new vertex per (old vertex, fan); ordered by old vertex then fan root
    keys = np.stack([corner_v, labels], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    parent = uniq[:, 0]
    new_faces = inverse.reshape(-1, 3)
    new_lengths = {}
    for (a, b) in np.unique(np.sort(np.stack([new_faces.reshape(-1),
                                               new_faces[:, [1, 2, 0]].reshape(-1)], 1),
                                      axis=1), axis=0):
        new_lengths[(int(a), int(b))] = mesh.length(int(parent[a]), int(parent[b]))
    pos = None if mesh.positions is None else mesh.positions[parent]
    return SurfaceMesh(len(parent), new_faces, new_lengths, pos, mesh.origin[parent],
                       dict(mesh.meta))


def _path_edge_ids(mesh: SurfaceMesh, path: VertexPath) -> list[int]:
    verts = list(path.vertices)
    if len(verts) < 2:
        raise MeshError("path has no edges")
    inner = verts[:-1] if path.is_loop else verts
    if len(set(inner)) != len(inner):
        raise MeshError("path is not simple")
    ids = []
    for a, b in zip(verts[:-1], verts[1:]):
        key = (a, b) if a < b else (b, a)
        if key not in mesh.edge_index:
            raise MeshError(f"path leaves the mesh at ({a}, {b})")
        ids.append(mesh.edge_index[key])
    if len(set(ids)) != len(ids):
        raise MeshError("path is not simple")
    return ids


def cut_along(mesh: SurfaceMesh, path: VertexPath) -> SurfaceMesh:
    """Cut along a simple vertex path (an arc or a loop).

    Interior vertices of the path are split in two; an arc endpoint on the
    boundary is split once; an interior arc endpoint stays a single vertex
    (a slit).
    """
    return cut_edges(mesh, _path_edge_ids(mesh, path))


# -- file I/O -----------------------------------------------------------------

def write_off(mesh: SurfaceMesh, path, lengths_path=None):
    """Write an ASCII OFF file and optionally a JSON edge-length sidecar.

    Meshes without positions get zero coordinates, so the sidecar is
    required to read them back.
    """
    pos = mesh.positions if mesh.positions is not None else np.zeros((mesh.n_vertices, 3))
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {len(mesh.edges)}"]
    lines += [" ".join(repr(float(x)) for x in p) for p in pos]
    lines += ["3 " + " ".join(str(int(v)) for v in f) for f in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")
    if lengths_path is not None:
        data = {"edges": [[int(a), int(b), float(l)]
                          for (a, b), l in zip(mesh.edges, mesh.lengths)],
                "meta": _jsonable(mesh.meta)}
        Path(lengths_path).write_text(json.dumps(data))


def read_off(path, lengths_path=None) -> SurfaceMesh:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    p = 4
    pos = np.array(tokens[p:p + 3 * nv], dtype=float).reshape(nv, 3)
    p += 3 * nv
    faces = []
    for _ in range(nf):
        k = int(tokens[p])
        if k != 3:
            raise MeshError("only triangles are supported")
        faces.append([int(t) for t in tokens[p + 1:p + 4]])
        p += 4
    lengths, meta = {}, {}
    if lengths_path is not None:
        data = json.loads(Path(lengths_path).read_text())
        lengths = {(min(a, b), max(a, b)): float(l) for a, b, l in data["edges"]}
        meta = data.get("meta", {})
    return SurfaceMesh(nv, np.array(faces), lengths, pos, None, meta)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
