import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fillings import generators as gen
from fillings.geodesic import (
    DisconnectedMesh,
    boundary_distance_matrix,
    distance_field,
    distance_fields,
    domination_violation,
    flatten_faces,
    refine,
    sample_boundary,
    shortest_path,
    steiner_graph,
    verify_boundary_domination,
)
from fillings.mesh import MeshError, SurfaceMesh, area, genus

DISC = gen.flat_disc(level=4)


def test_flattening_preserves_lengths():
    m = gen.spherical_cap(level=3)
    P = flatten_faces(m)
    fl = m.face_lengths
    for s in range(3):
        d = np.linalg.norm(P[:, s] - P[:, (s + 1) % 3], axis=1)
        assert np.allclose(d, fl[:, s])
    assert np.all(P[:, 2, 1] >= 0)


def test_edge_graph_distance_on_square():
    m = SurfaceMesh.from_positions([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])
    f = distance_field(m, 1, 0)
    assert f.dist[3] == pytest.approx(2.0)
    # Steiner points let the path cut across faces
    f4 = distance_field(m, 1, 4)
    assert f4.dist[3] < 1.7
    assert f4.dist[3] >= math.sqrt(2) - 1e-12


def test_steiner_node_locations():
    g = steiner_graph(DISC, 3)
    V = DISC.n_vertices
    assert g.n_nodes == V + 3 * len(DISC.edges)
    assert g.node_location(0) is None
    assert g.node_location(V) == (0, 0.25)
    assert g.node_location(V + 5) == (1, 0.75)
    with pytest.raises(ValueError):
        steiner_graph(DISC, -1)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_more_steiner_points_never_lengthen(k):
    d0 = distance_field(DISC, 0, 0).dist
    dk = distance_field(DISC, 0, k).dist
    assert np.all(dk <= d0 + 1e-12)


def test_flat_disc_distances_near_euclidean():
    m = gen.flat_disc(level=5)
    f = distance_field(m, 0, 4)
    euclid = np.linalg.norm(m.positions - m.positions[0], axis=1)
    assert np.all(f.dist >= euclid - 1e-5)
    far = euclid > 0.2
    assert np.max(f.dist[far] / euclid[far] - 1) < 0.02


@settings(max_examples=40, deadline=None)
@given(st.integers(0, DISC.n_vertices - 1), st.integers(0, DISC.n_vertices - 1),
       st.integers(0, DISC.n_vertices - 1))
def test_triangle_inequality_and_symmetry(a, b, c):
    fa, fb = distance_fields(DISC, [a, b], 2)
    assert fa.dist[b] == pytest.approx(fb.dist[a], abs=1e-12)
    assert fa.dist[c] <= fa.dist[b] + fb.dist[c] + 1e-12


def test_shortest_path_matches_distance():
    f = distance_field(DISC, 3, 2)
    for t in (0, 17, DISC.n_vertices - 1):
        p = shortest_path(f, t)
        assert p.vertices[0] == 3 and p.vertices[-1] == t
        assert p.length == pytest.approx(f.dist[t], rel=1e-12)


def test_predecessors_use_lowest_index():
    f = distance_field(DISC, 0, 0)
    m = f.graph.matrix.tocsr()
    for v in range(1, DISC.n_vertices):
        nbrs = m.indices[m.indptr[v]:m.indptr[v + 1]]
        w = m.data[m.indptr[v]:m.indptr[v + 1]]
        tight = nbrs[f.node_dist[nbrs] + w <= f.node_dist[v]]
        assert f.pred[v] == tight.min()


def test_invalid_source_and_disconnected_mesh():
    with pytest.raises(ValueError):
        distance_field(DISC, DISC.n_vertices)
    pos = [(0, 0), (1, 0), (0, 1), (5, 0), (6, 0), (5, 1)]
    m = SurfaceMesh.from_positions(pos, [(0, 1, 2), (3, 4, 5)])
    with pytest.raises(DisconnectedMesh):
        distance_field(m, 0)


def test_refine_keeps_metric():
    m = gen.spherical_cap(level=3)
    r = refine(m, 2)
    assert r.n_faces == 9 * m.n_faces
    assert area(r) == pytest.approx(area(m), rel=1e-12)
    assert genus(r) == 0
    assert refine(m, 0) is m
    # refined edge graph realises the Steiner-graph distances along edges
    assert distance_field(r, 0, 0).dist[:m.n_vertices].max() >= \
        distance_field(m, 0, 2).dist.max() - 1e-9


def test_sample_boundary():
    verts, params = sample_boundary(DISC, 8)
    assert len(set(verts.tolist())) == 8
    assert np.allclose(params, np.arange(8) / 8, atol=0.02)
    with pytest.raises(ValueError):
        sample_boundary(DISC, 10_000)
    with pytest.raises(MeshError, match="exactly one boundary"):
        sample_boundary(gen.annulus(level=3))


def test_boundary_matrix_is_symmetric_metric():
    m = boundary_distance_matrix(DISC, 12, 2)
    assert np.array_equal(m.d, m.d.T)
    assert np.all(np.diag(m.d) == 0)
    assert len(m) == 12 and len(m.fields) == 12
    with pytest.raises(ValueError):
        boundary_distance_matrix(DISC, 1)


def test_cap_dominates_disc(d0_disc5, dM_cap5):
    assert verify_boundary_domination(d0_disc5, dM_cap5, 1e-9)
    assert not verify_boundary_domination(dM_cap5, d0_disc5)
    assert domination_violation(d0_disc5, dM_cap5) <= 1e-9


def test_domination_needs_matching_samples():
    a = boundary_distance_matrix(DISC, 8)
    b = boundary_distance_matrix(DISC, 12)
    with pytest.raises(ValueError, match="mismatch"):
        domination_violation(a, b)
