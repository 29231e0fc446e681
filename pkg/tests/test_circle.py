import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fillings import circle
from fillings.circle import (
    ArcPartition,
    CirclePointSet,
    GroupedVectors,
    InvalidConfiguration,
    check_cyclic_order,
    cyclic_area_sum,
    longest_gap,
    oriented_area,
    oriented_area_by_cases,
    verify_grouped_bound,
)

angles = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)


@given(angles, angles)
def test_oriented_area_matches_case_analysis(a, b):
    assert oriented_area(a, b) == pytest.approx(oriented_area_by_cases(a, b), abs=1e-12)


@given(angles, angles)
def test_oriented_area_is_antisymmetric_and_bounded(a, b):
    assert oriented_area(a, b) == -oriented_area(b, a)
    assert abs(oriented_area(a, b)) <= 0.5


@given(angles)
def test_equal_and_antipodal_points_have_zero_area(a):
    assert oriented_area(a, a) == 0.0
    assert oriented_area(a, a + math.pi) == 0.0


def test_oriented_area_sign_convention():
    assert oriented_area(0.0, math.pi / 2) == pytest.approx(0.5)
    assert oriented_area(math.pi / 2, 0.0) == pytest.approx(-0.5)
    # shorter arc from 0 to 3pi/2 runs clockwise
    assert oriented_area(0.0, 1.5 * math.pi) < 0


def test_oriented_area_vectorises():
    a = np.linspace(0, 6, 50)
    out = oriented_area(a, a + 0.3)
    assert out.shape == (50,)
    assert np.allclose(out, 0.5 * math.sin(0.3))


@pytest.mark.parametrize("n", [3, 4, 7, 100, 1000])
def test_equally_spaced_sum_closed_form(n):
    s = cyclic_area_sum(CirclePointSet.equally_spaced(n, offset=0.37))
    assert s == pytest.approx(0.5 * n * math.sin(2 * math.pi / n), abs=1e-10)
    assert s < math.pi


def test_equally_spaced_sum_converges_to_pi():
    assert abs(cyclic_area_sum(CirclePointSet.equally_spaced(10_000)) - math.pi) < 1e-3


def test_open_convention_drops_closing_term():
    pts = [0.0, 1.0, 2.0]
    closed = cyclic_area_sum(CirclePointSet(pts))
    opened = cyclic_area_sum(CirclePointSet(pts, cyclic=False))
    assert closed - opened == pytest.approx(oriented_area(2.0, 0.0))


def test_cyclic_sum_rejects_single_point():
    with pytest.raises(ValueError):
        cyclic_area_sum([1.0])


@given(st.lists(st.floats(0, 2 * math.pi, allow_nan=False), min_size=2, max_size=30),
       st.floats(-10, 10, allow_nan=False))
def test_cyclic_sum_is_rotation_invariant(pts, shift):
    a = cyclic_area_sum(pts)
    b = cyclic_area_sum(np.asarray(pts) + shift)
    assert a == pytest.approx(b, abs=1e-9)


@given(st.lists(st.floats(0, 2 * math.pi, allow_nan=False), min_size=2, max_size=30))
def test_sorted_points_never_exceed_pi(pts):
    sorted_pts = CirclePointSet(pts).sorted_ccw()
    assert cyclic_area_sum(sorted_pts) <= math.pi + 1e-9


def test_longest_gap():
    assert longest_gap([0.0, 1.0, 2.0]) == pytest.approx(2 * math.pi - 2.0)
    with pytest.raises(ValueError):
        longest_gap([])


def test_cyclic_order_detects_rotation_and_reflection():
    ref = [0.1, 1.0, 2.5, 4.0]
    assert check_cyclic_order(ref, [1.1, 2.0, 3.5, 5.0])
    assert check_cyclic_order(ref, [2.5, 4.0, 0.1 + 2 * math.pi - 0.05, 1.0 + 2 * math.pi - 6])
    assert not check_cyclic_order(ref, [4.0, 2.5, 1.0, 0.1])
    assert check_cyclic_order([0.0, 1.0], [1.0, 0.0])


def test_cyclic_order_input_errors():
    with pytest.raises(ValueError, match="size"):
        check_cyclic_order([0.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError, match="duplicate"):
        check_cyclic_order([0.0, 0.0, 1.0], [0.0, 1.0, 2.0])


def _quarter_partition():
    return ArcPartition(np.arange(4) * math.pi / 2, np.full(4, math.pi / 2), 1)


def test_arc_partition_validation():
    with pytest.raises(ValueError, match="4G"):
        ArcPartition([0.0, 1.0], [math.pi, math.pi], 1)
    with pytest.raises(ValueError, match="sum"):
        ArcPartition(np.arange(4), np.ones(4), 1)
    with pytest.raises(ValueError, match="tile"):
        ArcPartition([0.0, 1.0, 3.0, 4.5], [1.0, 1.0, 1.5, 2 * math.pi - 3.5], 1)
    with pytest.raises(ValueError, match="genus"):
        ArcPartition([], [], 0)


def test_grouped_bound_rejects_vector_outside_arc():
    part = _quarter_partition()
    vec = GroupedVectors(([0.2], [0.1], [], []), (True,) * 4)
    with pytest.raises(InvalidConfiguration, match="outside arc 1"):
        verify_grouped_bound(part, vec)


def test_grouped_bound_rejects_wrong_group_order():
    part = _quarter_partition()
    vec = GroupedVectors(([0.3, 0.2], [], [], []), (True,) * 4)
    with pytest.raises(InvalidConfiguration, match="not monotone"):
        verify_grouped_bound(part, vec)


def test_grouped_bound_rejects_group_count():
    with pytest.raises(InvalidConfiguration):
        verify_grouped_bound(_quarter_partition(), GroupedVectors(([0.1],), (True,)))


def test_grouped_bound_simple_case():
    part = _quarter_partition()
    vec = GroupedVectors(([0.1, 1.0], [2.0], [3.5, 4.0], [5.0]), (True,) * 4)
    r = verify_grouped_bound(part, vec)
    assert r.passed and r.groups_passed
    assert r.bound == pytest.approx(math.pi + 2)
    assert r.sum == pytest.approx(cyclic_area_sum([0.1, 1.0, 2.0, 3.5, 4.0, 5.0]))


def test_clockwise_groups():
    part = _quarter_partition()
    eps = 0.01
    groups = tuple([(i + 1) * math.pi / 2 - eps, i * math.pi / 2 + eps] for i in range(4))
    r = verify_grouped_bound(part, GroupedVectors(groups, (False,) * 4))
    assert np.all(r.group_sums < 0)
    assert r.passed and r.groups_passed


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]))
def test_random_configurations_satisfy_bound(seed, g):
    part, vec = circle.random_configuration(np.random.default_rng(seed), g)
    r = verify_grouped_bound(part, vec)
    assert r.passed and r.groups_passed


def test_random_trials_are_deterministic():
    a = [r.sum for r in circle.random_bound_trials(50, seed=3)]
    b = [r.sum for r in circle.random_bound_trials(50, seed=3)]
    assert a == b


def test_configuration_roundtrip(tmp_path):
    part, vec = circle.random_configuration(np.random.default_rng(5), 2)
    path = tmp_path / "cfg.json"
    circle.save_configuration(path, part, vec)
    part2, vec2 = circle.load_configuration(path)
    assert np.array_equal(part.starts, part2.starts)
    assert all(np.array_equal(a, b) for a, b in zip(vec.groups, vec2.groups))
    assert vec.ccw == vec2.ccw
    assert json.loads(path.read_text())["genus"] == 2
    assert verify_grouped_bound(part2, vec2).sum == verify_grouped_bound(part, vec).sum


def test_trials_csv(tmp_path):
    path = tmp_path / "t.csv"
    circle.write_trials_csv(path, circle.random_bound_trials(4))
    lines = path.read_text().splitlines()
    assert lines[0] == "trial,sum,bound,slack,pass"
    assert len(lines) == 5


@pytest.mark.parametrize("g", [1, 2, 3])
def test_batch_matches_scalar_verifier(g):
    batch = circle.random_batch(np.random.default_rng(g), g, 200)
    rep = circle.verify_batch(batch)
    assert rep.invalid == 0
    for t in range(len(batch)):
        ref = verify_grouped_bound(*batch.configuration(t))
        assert rep.sum[t] == pytest.approx(ref.sum, abs=1e-12)
        assert rep.groups_passed[t] == ref.groups_passed


def test_batch_flags_invalid_configurations():
    batch = circle.random_batch(np.random.default_rng(0), 1, 10, max_per_group=3)
    t = int(np.flatnonzero(batch.sizes[:, 0] >= 2)[0])
    batch.angles[t, 0, :2] = batch.angles[t, 0, 1::-1]
    assert circle.verify_batch(batch).invalid == 1


def test_batch_trials_split_across_genera(tmp_path):
    rep = circle.batch_bound_trials(1001, (1, 2), seed=9, chunk=300)
    assert len(rep) == 1001
    assert np.sum(rep.genus == 1) == 501
    assert rep.passed.all() and rep.groups_passed.all()
    circle.write_trials_csv(tmp_path / "b.csv", rep)
    assert len((tmp_path / "b.csv").read_text().splitlines()) == 1002
