import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fillings import generators as gen
from fillings.circle import cyclic_area_sum
from fillings.forms import (
    BoundaryTrace,
    HypothesisNotSatisfied,
    Tolerances,
    area_integral,
    boundary_integral,
    density_bound_violations,
    face_gradients,
    pullback_density,
    sample_indices,
    stokes_residual,
    verify_main_inequality,
)
from fillings.mesh import MeshError, SurfaceMesh, area, boundary_loops

DISC = gen.flat_disc(level=3)


def coords(m):
    return m.positions[:, 0], m.positions[:, 1]


def test_linear_fields_have_exact_gradients():
    x, y = coords(DISC)
    g = face_gradients(DISC, np.stack([x, y, 2 * x - y], axis=1))
    mag = np.linalg.norm(g, axis=-1)
    assert np.allclose(mag[:, 0], 1) and np.allclose(mag[:, 1], 1)
    assert np.allclose(mag[:, 2], math.sqrt(5))


def test_rotating_linear_fields_give_constant_density():
    x, y = coords(DISC)
    fields = [x, y, -x, -y]
    den = pullback_density(DISC, fields)
    assert np.allclose(den.A_raw, 4.0)
    assert np.allclose(den.A, 4.0)
    assert area_integral(den) == pytest.approx(4 * area(DISC))
    s = stokes_residual(DISC, fields, density=den)
    assert s["pl_residual"] < 1e-12
    assert s["residual"] < 1e-12


def test_two_fields_give_zero_density():
    x, y = coords(DISC)
    den = pullback_density(DISC, [x, y])
    assert np.allclose(den.A, 0) and np.allclose(den.A_raw, 0)


def test_unit_density_is_twice_the_cyclic_sum_of_gradient_angles():
    rng = np.random.default_rng(0)
    fields = [rng.normal(size=DISC.n_vertices) for _ in range(5)]
    den = pullback_density(DISC, fields)
    for f in range(0, DISC.n_faces, 17):
        assert den.A[f] == pytest.approx(2 * cyclic_area_sum(den.angles[f]), abs=1e-12)
    assert np.all(np.abs(den.A) <= 5 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_piecewise_linear_stokes_is_exact(seed, n):
    rng = np.random.default_rng(seed)
    m = gen.spherical_cap(level=2)
    fields = [rng.uniform(-3, 3, size=m.n_vertices) for _ in range(n)]
    s = stokes_residual(m, fields)
    assert s["pl_residual"] <= 1e-10 * (1 + abs(s["boundary_side"]))


def test_density_rejects_bad_input():
    x, _ = coords(DISC)
    with pytest.raises(ValueError, match="two fields"):
        pullback_density(DISC, [x])
    with pytest.raises(ValueError, match="does not match"):
        pullback_density(DISC, [x[:-1], x[:-1]])


def test_degenerate_face_rejected():
    m = SurfaceMesh(3, [(0, 1, 2)], {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 2.0})
    with pytest.raises(MeshError, match="degenerate"):
        face_gradients(m, np.zeros((3, 2)))


def test_boundary_integral_checks_trace():
    loop = boundary_loops(DISC)[0]
    x, y = coords(DISC)
    tr = BoundaryTrace.from_fields(loop, [x, y])
    with pytest.raises(ValueError, match="open trace"):
        boundary_integral(loop, BoundaryTrace(tr.values, closed=False))
    with pytest.raises(ValueError, match="does not match"):
        boundary_integral(loop, BoundaryTrace(tr.values[:-1]))
    # x dy + y dx is exact, so its loop integral vanishes
    assert boundary_integral(loop, tr) == pytest.approx(0.0, abs=1e-12)


def test_constant_trace_integrates_to_zero():
    loop = boundary_loops(DISC)[0]
    tr = BoundaryTrace(np.ones((len(loop), 3)))
    assert boundary_integral(loop, tr) == 0.0


def test_density_bound_violations_counts():
    x, y = coords(DISC)
    den = pullback_density(DISC, [x, y, -x, -y])
    # A/2 = 2 everywhere, below pi
    assert density_bound_violations(den, 0, 0.0)["unflagged"] == 0
    den.A = den.A * 10
    v = density_bound_violations(den, 1, 0.5)
    assert v["unflagged"] == DISC.n_faces and v["max_half_density"] == pytest.approx(20)


def test_sample_indices():
    assert list(sample_indices(96, 8)) == [0, 12, 24, 36, 48, 60, 72, 84]
    assert list(sample_indices(10, 10)) == list(range(10))
    with pytest.raises(ValueError):
        sample_indices(10, 11)
    with pytest.raises(ValueError):
        sample_indices(10, 1)


def test_hemisphere_filling_passes(cap5, disc5, d0_disc5, dM_cap5):
    r = verify_main_inequality(cap5, disc5, 16, 4, d0=d0_disc5, dM=dM_cap5)
    assert r.passed, r.checks
    assert r.G == 0
    assert r.area_D <= r.bound
    assert r.stokes_M["pl_residual"] < 1e-8
    assert 0 < r.disc_gap < 0.2
    assert r.to_dict()["passed"] is True


def test_flat_disc_fills_itself(disc5, d0_disc5):
    r = verify_main_inequality(disc5, disc5, 16, 4, d0=d0_disc5, dM=d0_disc5)
    assert r.passed, r.checks
    assert r.domination_violation == 0
    # the max construction reproduces the plain distance up to graph error
    assert r.integral_M == pytest.approx(r.integral_D, rel=1e-3)


def test_inverted_roles_fail_hypothesis(cap5, disc5, d0_disc5, dM_cap5):
    with pytest.raises(HypothesisNotSatisfied, match="domination fails"):
        verify_main_inequality(disc5, cap5, 16, 4, d0=dM_cap5, dM=d0_disc5)


def test_genus_mismatch_and_non_disc(cap5, disc5, d0_disc5, dM_cap5):
    with pytest.raises(ValueError, match="genus mismatch"):
        verify_main_inequality(cap5, disc5, 16, 4, G=1, d0=d0_disc5, dM=dM_cap5)
    with pytest.raises(MeshError, match="disc"):
        verify_main_inequality(cap5, gen.torus_with_hole(level=3), 16, 4)


def test_tolerances_roundtrip():
    t = Tolerances(stokes=0.03)
    assert Tolerances(**t.to_dict()) == t
