import math

import numpy as np
import pytest

from fillings import generators as gen
from fillings.forms import sample_indices
from fillings.geodesic import BoundaryDistanceMatrix, boundary_distance_matrix, distance_fields
from fillings.mesh import MeshError
from fillings.special import (
    DegenerateConfiguration,
    SampleFields,
    check_boundary_agreement,
    check_non_separation,
    check_order_of_maxima,
    gradient_direction,
    gradient_directions,
    nonexpansion_violation,
    special_field,
    tangent_frame,
    tilde_field,
)


@pytest.fixture(scope="module")
def cap_fields(cap5, d0_disc5, dM_cap5):
    ps = sample_indices(len(d0_disc5), 16)
    return ps, [special_field(cap5, d0_disc5, int(p), dM_cap5) for p in ps]


def test_boundary_values_reproduce_disc_distances(cap5, d0_disc5, dM_cap5, cap_fields):
    ps, fields = cap_fields
    for p, f in zip(ps, fields):
        got = f.values[dM_cap5.vertices]
        assert np.max(np.abs(got - d0_disc5.d[p])) <= 1e-8


def test_special_field_is_nonexpanding(cap5, cap_fields, rng):
    _, fields = cap_fields
    xs = rng.choice(cap5.n_vertices, 20, replace=False)
    ys = rng.choice(cap5.n_vertices, 200, replace=False)
    pair = distance_fields(cap5, xs, 4)
    for f in fields[:4]:
        assert nonexpansion_violation(f, pair, ys) <= 1e-9


def test_boundary_agreement_between_fields(disc5, cap5, d0_disc5, dM_cap5, cap_fields):
    ps, fields = cap_fields
    fD = tilde_field(disc5, int(ps[3]), d0_disc5)
    gap = check_boundary_agreement(fields[3], fD, dM_cap5.vertices, d0_disc5.vertices)
    assert gap <= 1e-8
    with pytest.raises(ValueError, match="different samples"):
        check_boundary_agreement(fields[2], fD, dM_cap5.vertices, d0_disc5.vertices)


def test_tilde_field_on_flat_disc_is_euclidean(disc5, d0_disc5):
    p = 10
    f = tilde_field(disc5, p, d0_disc5)
    src = disc5.positions[d0_disc5.vertices[p]]
    euclid = np.linalg.norm(disc5.positions - src, axis=1)
    far = euclid > 0.2
    assert f.kind == "disc"
    assert np.max(np.abs(f.values[far] / euclid[far] - 1)) < 0.02


def test_tilde_field_needs_disc(cap5, dM_cap5):
    with pytest.raises(MeshError, match="disc"):
        tilde_field(gen.torus_with_hole(level=3), 0, dM_cap5)


def test_special_field_argument_checks(cap5, d0_disc5, dM_cap5):
    with pytest.raises(ValueError, match="out of range"):
        special_field(cap5, d0_disc5, len(d0_disc5), dM_cap5)
    small = boundary_distance_matrix(gen.flat_disc(level=5), 8, 0)
    with pytest.raises(ValueError, match="mismatch"):
        special_field(cap5, small, 0, dM_cap5)
    with pytest.raises(TypeError):
        special_field(cap5, d0_disc5, 0, "fields")


def test_gradient_points_away_from_source_at_centre(disc5, d0_disc5):
    # the disc centre is vertex 0 and is flat, so frame angles are true angles
    frame = tangent_frame(disc5, 0)
    assert frame.total_angle == pytest.approx(2 * math.pi, abs=1e-5)
    offsets = []
    for p in range(0, len(d0_disc5), 8):
        f = tilde_field(disc5, p, d0_disc5)
        theta = 2 * math.pi * d0_disc5.params[p]
        offsets.append((gradient_direction(disc5, f, 0) - theta - math.pi) % (2 * math.pi))
    spread = np.angle(np.exp(1j * (np.array(offsets) - offsets[0])))
    assert np.max(np.abs(spread)) < 0.15


def test_gradient_directions_nan_on_boundary(disc5, d0_disc5):
    f = tilde_field(disc5, 0, d0_disc5)
    b = int(d0_disc5.vertices[5])
    out = gradient_directions(disc5, f, [0, b])
    assert np.isfinite(out[0]) and np.isnan(out[1])
    with pytest.raises(MeshError):
        gradient_direction(disc5, f, b)
    with pytest.raises(MeshError):
        tangent_frame(disc5, b)


def test_order_of_maxima_on_hemisphere(cap5, d0_disc5, dM_cap5, rng):
    ps = sample_indices(len(d0_disc5), 8)
    interior = np.flatnonzero(~cap5.boundary_vertex_mask)
    ok = degenerate = 0
    for x in rng.choice(interior, 10, replace=False):
        try:
            ok += check_order_of_maxima(cap5, d0_disc5, dM_cap5, ps, int(x))
        except DegenerateConfiguration:
            degenerate += 1
    assert ok + degenerate == 10
    assert ok >= 5


def test_order_of_maxima_degenerate_when_all_maxima_coincide(cap5, dM_cap5):
    zero = BoundaryDistanceMatrix(dM_cap5.params, dM_cap5.vertices,
                                  np.zeros_like(dM_cap5.d), None)
    # near the boundary every p shares the one nearest sample as its maximum
    interior = np.flatnonzero(~cap5.boundary_vertex_mask)
    x = int(interior[np.argmin(SampleFields.from_matrix(dM_cap5).dist[0, interior])])
    with pytest.raises(DegenerateConfiguration):
        check_order_of_maxima(cap5, zero, dM_cap5, [10, 30, 60], x)


def test_order_of_maxima_trivial_and_invalid(cap5, d0_disc5, dM_cap5):
    assert check_order_of_maxima(cap5, d0_disc5, dM_cap5, [3], 0)
    with pytest.raises(ValueError, match="distinct"):
        check_order_of_maxima(cap5, d0_disc5, dM_cap5, [3, 3], 0)
    with pytest.raises(MeshError):
        check_order_of_maxima(cap5, d0_disc5, dM_cap5, [1, 2],
                              int(dM_cap5.vertices[0]))


def test_non_separation_cases():
    # p_j and q_i on the same side of the chord p_i q_j
    assert check_non_separation(0.0, 0.1, 0.2, 0.5)
    # interleaved: p_j inside [p_i, q_j] but q_i outside
    assert not check_non_separation(0.0, 0.7, 0.2, 0.5)
    # touching an endpoint counts as not separated
    assert check_non_separation(0.0, 0.5, 0.2, 0.5)


def test_sample_fields_and_to_dict(cap5, dM_cap5, d0_disc5):
    sf = SampleFields.from_matrix(dM_cap5)
    assert sf.dist.shape == (len(dM_cap5), cap5.n_vertices)
    with pytest.raises(ValueError):
        SampleFields.from_matrix(BoundaryDistanceMatrix(sf.params, sf.vertices, dM_cap5.d))
    f = special_field(cap5, d0_disc5, 0, sf)
    d = f.to_dict()
    assert d["p"] == 0 and len(d["values"]) == cap5.n_vertices
    assert all(g is None for g in d["grad"])
