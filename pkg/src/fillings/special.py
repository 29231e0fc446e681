"""Boundary-distance functions on a filling and on the reference disc.

For a boundary sample ``p`` the function on the filling ``M`` is

    f_p(x) = max_q ( d0(p, q) - d(x, q) )

with ``q`` running over the shared boundary samples, ``d0`` the distances of
the disc ``D`` and ``d`` the distances of ``M``.  On ``D`` itself the same
construction collapses to the distance from ``p``.

A boundary sample ``q`` realising the maximum is a *point of maximum*; the
nearest one (smallest ``d(x, q)``, then lowest sample index) is kept in
``argmax``.  Gradient directions are the first step of the shortest path
from ``x`` to its point of maximum, expressed as an angle in the vertex's
tangent frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .circle import TWO_PI, CirclePointSet, check_cyclic_order
from .geodesic import BoundaryDistanceMatrix, DistanceField, flatten_faces
from .mesh import MeshError, SurfaceMesh, boundary_loops, genus

#: Values within this of the maximum count as points of maximum.
ARGMAX_TOL = 1e-9


class DegenerateConfiguration(ValueError):
    pass


@dataclass(eq=False)
class SampleFields:
    """Distances from every boundary sample of one mesh, stacked as (n_samples, V)."""

    params: np.ndarray
    vertices: np.ndarray
    fields: list

    @cached_property
    def dist(self) -> np.ndarray:
        return np.array([f.dist for f in self.fields])

    @classmethod
    def from_matrix(cls, bdm: BoundaryDistanceMatrix) -> "SampleFields":
        if bdm.fields is None:
            raise ValueError("distance matrix carries no fields")
        return cls(bdm.params, bdm.vertices, bdm.fields)


def _as_sample_fields(obj) -> SampleFields:
    if isinstance(obj, SampleFields):
        return obj
    if isinstance(obj, BoundaryDistanceMatrix):
        return SampleFields.from_matrix(obj)
    raise TypeError("expected SampleFields or BoundaryDistanceMatrix")


@dataclass(eq=False)
class SpecialField:
    p_index: int
    p_param: float
    values: np.ndarray
    argmax: np.ndarray
    samples: SampleFields
    grad_dir: np.ndarray | None = None
    #: "filling" for the max construction on M, "disc" for a plain distance on D
    kind: str = "filling"

    def to_dict(self) -> dict:
        grad = self.grad_dir if self.grad_dir is not None else np.full(len(self.values), np.nan)
        return {
            "p": int(self.p_index),
            "p_param": float(self.p_param),
            "values": [float(v) for v in self.values],
            "argmax": [int(a) for a in self.argmax],
            "grad": [None if not np.isfinite(g) else float(g) for g in grad],
        }


def _max_and_argmax(row: np.ndarray, dist: np.ndarray):
    """Max over samples of ``row[q] - dist[q, x]`` and the nearest maximiser."""
    vals = row[:, None] - dist
    best = vals.max(axis=0)
    cand = vals >= best[None, :] - ARGMAX_TOL
    key = np.where(cand, dist, np.inf)
    return best, np.argmin(key, axis=0)


def special_field(meshM: SurfaceMesh, d0: BoundaryDistanceMatrix, p_index: int,
                  fields) -> SpecialField:
    """Boundary-distance function of sample ``p_index`` on the filling.

    Parameters
    ----------
    meshM : SurfaceMesh
    d0 : BoundaryDistanceMatrix
        Disc distances between the shared boundary samples.
    p_index : int
    fields : SampleFields or BoundaryDistanceMatrix
        Distance fields on ``meshM`` from the same samples.
    """
    sf = _as_sample_fields(fields)
    if len(sf.params) != len(d0) or not np.allclose(sf.params, d0.params, atol=1e-9):
        raise ValueError("sample mismatch")
    if not 0 <= p_index < len(d0):
        raise ValueError("p_index out of range")
    if sf.dist.shape[1] != meshM.n_vertices:
        raise ValueError("fields do not belong to meshM")
    values, argmax = _max_and_argmax(d0.d[p_index], sf.dist)
    return SpecialField(p_index, float(d0.params[p_index]), values, argmax, sf)


def tilde_field(meshD: SurfaceMesh, p_index: int, d0: BoundaryDistanceMatrix) -> SpecialField:
    """Boundary-distance function on the disc: the distance from sample ``p_index``.

    ``argmax`` is still computed from the max formula so gradient directions
    can be read off either way.
    """
    loops = boundary_loops(meshD)
    if len(loops) != 1 or genus(meshD) != 0:
        raise MeshError("tilde field needs a disc")
    sf = _as_sample_fields(d0)
    values = sf.dist[p_index].copy()
    _, argmax = _max_and_argmax(d0.d[p_index], sf.dist)
    return SpecialField(p_index, float(d0.params[p_index]), values, argmax, sf, kind="disc")


# -- tangent frames --------------------------------------------------------------

@dataclass(frozen=True)
class TangentFrame:
    """Corners around an interior vertex in counterclockwise order.

    ``offsets[i]`` is the cumulative corner angle before corner ``i``;
    ``scale`` rescales the total angle to ``2*pi``.
    """

    vertex: int
    faces: np.ndarray
    corners: np.ndarray
    offsets: np.ndarray
    angles: np.ndarray
    scale: float

    @property
    def total_angle(self) -> float:
        return float(self.angles.sum())


def _corner_angles(mesh: SurfaceMesh) -> np.ndarray:
    cache = mesh.__dict__.setdefault("_corner_angles", None)
    if cache is None:
        fl = mesh.face_lengths
        out = np.empty_like(fl)
        for k in range(3):
            # angle at corner k between sides k (k->k+1) and k-1 (k-1->k)
            a, b = fl[:, k], fl[:, (k + 2) % 3]
            c = fl[:, (k + 1) % 3]
            out[:, k] = np.arccos(np.clip((a ** 2 + b ** 2 - c ** 2) / (2 * a * b), -1, 1))
        mesh.__dict__["_corner_angles"] = cache = out
    return cache


def _vertex_corners(mesh: SurfaceMesh):
    cache = mesh.__dict__.get("_vertex_corners")
    if cache is None:
        flat = mesh.faces.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.searchsorted(flat[order], np.arange(mesh.n_vertices + 1))
        cache = (order, bounds)
        mesh.__dict__["_vertex_corners"] = cache
    return cache


def tangent_frame(mesh: SurfaceMesh, x: int) -> TangentFrame:
    if mesh.boundary_vertex_mask[x]:
        raise MeshError("tangent frame needs an interior vertex")
    order, bounds = _vertex_corners(mesh)
    corners = order[bounds[x]:bounds[x + 1]]
    f, k = np.divmod(corners, 3)
    nxt = mesh.faces[f, (k + 1) % 3]
    prv = mesh.faces[f, (k + 2) % 3]
    by_next = {int(v): i for i, v in enumerate(nxt)}
    start = int(np.argmin(f))
    seq = [start]
    while len(seq) < len(corners):
        seq.append(by_next[int(prv[seq[-1]])])
    seq = np.array(seq)
    ang = _corner_angles(mesh)[f[seq], k[seq]]
    offsets = np.r_[0.0, np.cumsum(ang)[:-1]]
    return TangentFrame(x, f[seq], k[seq], offsets, ang, TWO_PI / ang.sum())


def node_direction(mesh: SurfaceMesh, frame: TangentFrame, node: int, graph) -> float:
    """Frame angle (rescaled to ``[0, 2*pi)``) of the straight step from the frame vertex to ``node``."""
    x = frame.vertex
    P = flatten_faces(mesh)
    loc = graph.node_location(node) if node >= mesh.n_vertices else None
    for i, (f, k) in enumerate(zip(frame.faces, frame.corners)):
        tri = mesh.faces[f]
        a, b = int(tri[(k + 1) % 3]), int(tri[(k + 2) % 3])
        # corner-local coordinates: rotate so x is at the origin, a on +x axis
        px, pa, pb = P[f, k], P[f, (k + 1) % 3], P[f, (k + 2) % 3]
        if loc is None:
            if node == a:
                target = pa
            elif node == b:
                target = pb
            else:
                continue
        else:
            e, t = loc
            ea, eb = (int(v) for v in mesh.edges[e])
            if {ea, eb} not in ({a, b}, {x, a}, {x, b}):
                continue
            pts = {x: px, a: pa, b: pb}
            target = (1 - t) * pts[ea] + t * pts[eb]
        u = pa - px
        w = target - px
        local = np.arctan2(u[0] * w[1] - u[1] * w[0], u @ w)
        local = min(max(local, 0.0), frame.angles[i])
        return float(np.mod(frame.scale * (frame.offsets[i] + local), TWO_PI))
    raise MeshError(f"node {node} is not adjacent to vertex {x}")


def gradient_direction(mesh: SurfaceMesh, field: SpecialField, x: int) -> float:
    """Frame angle of the first step from ``x`` toward its nearest point of maximum."""
    if mesh.boundary_vertex_mask[x]:
        raise MeshError("gradient direction needs an interior vertex")
    q = int(field.argmax[x])
    df: DistanceField = field.samples.fields[q]
    nxt = int(df.pred[x])
    if nxt < 0:
        raise MeshError("vertex coincides with its point of maximum")
    return node_direction(mesh, tangent_frame(mesh, x), nxt, df.graph)


def gradient_directions(mesh: SurfaceMesh, field: SpecialField, vertices=None) -> np.ndarray:
    """:func:`gradient_direction` for many vertices; NaN on the boundary."""
    if vertices is None:
        vertices = np.arange(mesh.n_vertices)
    out = np.full(len(vertices), np.nan)
    for i, x in enumerate(vertices):
        if not mesh.boundary_vertex_mask[x]:
            out[i] = gradient_direction(mesh, field, int(x))
    return out


# -- executable checks --------------------------------------------------------------

def check_boundary_agreement(fM: SpecialField, fD: SpecialField, verticesM, verticesD) -> float:
    """Largest ``|fM - fD|`` over corresponding boundary samples."""
    if fM.p_index != fD.p_index:
        raise ValueError("fields belong to different samples")
    return float(np.max(np.abs(fM.values[np.asarray(verticesM)]
                               - fD.values[np.asarray(verticesD)])))


def nonexpansion_violation(field: SpecialField, pair_fields, targets) -> float:
    """Largest ``|f(x) - f(y)| - d(x, y)`` over the given pairs.

    ``pair_fields`` are distance fields from the x vertices; ``targets`` the
    y vertices.
    """
    worst = -np.inf
    for df in pair_fields:
        y = np.asarray(targets)
        gap = np.abs(field.values[df.source] - field.values[y]) - df.dist[y]
        worst = max(worst, float(gap.max()))
    return worst


def maxima_at(d0: BoundaryDistanceMatrix, samples: SampleFields, p_list, x: int,
              d0_matrix=None) -> np.ndarray:
    d = d0.d if d0_matrix is None else d0_matrix
    col = samples.dist[:, x]
    out = []
    for p in p_list:
        vals = d[p] - col
        best = vals.max()
        cand = vals >= best - ARGMAX_TOL
        out.append(int(np.argmin(np.where(cand, col, np.inf))))
    return np.array(out)


def check_order_of_maxima(meshM: SurfaceMesh, d0: BoundaryDistanceMatrix, fields,
                          p_list, x: int, attempts: int = 5, seed: int = 0) -> bool:
    """Do the nearest points of maximum keep the counterclockwise order of ``p_list``?

    Coinciding maxima are broken by symmetric jitter of ``d0`` of size
    ``1e-6`` times the boundary length, up to ``attempts`` times.

    Raises
    ------
    DegenerateConfiguration
        If the maxima stay non-distinct, or some ``q_i`` equals its ``p_i``.
    """
    sf = _as_sample_fields(fields)
    p_list = [int(p) for p in p_list]
    if len(set(p_list)) != len(p_list):
        raise ValueError("p_list must be distinct")
    if len(p_list) <= 1:
        return True
    if meshM.boundary_vertex_mask[x]:
        raise MeshError("x must be interior")
    rng = np.random.default_rng(seed)
    loop_len = boundary_loops(meshM)[0].length
    d = d0.d
    for _ in range(attempts + 1):
        q = maxima_at(d0, sf, p_list, x, d)
        if len(set(q.tolist())) == len(q) and not np.any(q == np.array(p_list)):
            ref = TWO_PI * d0.params[p_list]
            cand = TWO_PI * sf.params[q]
            return check_cyclic_order(CirclePointSet(ref), CirclePointSet(cand))
        jit = rng.uniform(-1, 1, size=d.shape) * 1e-6 * loop_len
        d = d0.d + 0.5 * (jit + jit.T)
        np.fill_diagonal(d, 0.0)
    raise DegenerateConfiguration("degenerate configuration: maxima not distinct or q_i == p_i")


def _in_ccw_arc(start: float, end: float, z: float) -> bool:
    span = (end - start) % 1.0
    off = (z - start) % 1.0
    return off <= span + 1e-12


def check_non_separation(p_i: float, q_i: float, p_j: float, q_j: float) -> bool:
    """True iff ``p_j`` and ``q_i`` lie in one closed arc cut out by ``p_i`` and ``q_j``.

    Arguments are boundary parameters in ``[0, 1)``.
    """
    a = _in_ccw_arc(p_i, q_j, p_j)
    b = _in_ccw_arc(p_i, q_j, q_i)
    on_end = any(abs(((z - w) + 0.5) % 1.0 - 0.5) < 1e-12
                 for z in (p_j, q_i) for w in (p_i, q_j))
    return a == b or on_end
