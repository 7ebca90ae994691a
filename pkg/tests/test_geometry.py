import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radialqd.geometry import (Domain, OriginSet, SensorPlacement, build_origin_grid, distances, exposed,
                               exposed_mask, max_radius)


def test_grid_on_unit_square_is_cell_centred():
    grid = build_origin_grid(Domain.square(10.0), 4)
    np.testing.assert_allclose(grid.points, [[2.5, 2.5], [7.5, 2.5], [2.5, 7.5], [7.5, 7.5]])


@given(st.integers(1, 200))
def test_grid_has_m_distinct_points_inside(M):
    dom = Domain.square(10.0)
    grid = build_origin_grid(dom, M)
    assert len(grid) == M
    assert len(np.unique(grid.points, axis=0)) == M
    assert dom.contains(grid.points).all()


def test_grid_on_disk_stays_inside():
    dom = Domain.disk(3.0, (1.0, -2.0))
    assert dom.contains(build_origin_grid(dom, 37).points).all()


def test_origin_set_rejects_duplicates_and_empty():
    with pytest.raises(ValueError):
        OriginSet(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        OriginSet(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_degenerate_domain_rejected():
    with pytest.raises(ValueError):
        Domain.rectangle(0, 0, 0, 1)
    with pytest.raises(ValueError):
        Domain.disk(0.0)


def test_max_radius_covers_farthest_corner():
    dom = Domain.square(10.0)
    assert max_radius(dom, [[0.0, 0.0]]) == math.ceil(math.hypot(10, 10)) + 1
    assert max_radius(dom, [[5.0, 5.0]], unit_length=2.0) == math.ceil(math.hypot(5, 5) / 2) + 1


@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_max_radius_exposes_whole_domain(x, y):
    dom = Domain.square(10.0)
    R = max_radius(dom, [[x, y]])
    corners = np.array([[0, 0], [10, 0], [0, 10], [10, 10]], dtype=float)
    assert exposed_mask(distances(corners, [[x, y]]), R).all()


def test_exposure_is_strict():
    assert not exposed((3.0, 0.0), (0.0, 0.0), 3)
    assert exposed((2.999, 0.0), (0.0, 0.0), 3)
    assert not exposed((0.0, 0.0), (0.0, 0.0), 0)
    assert exposed((600.0, 0.0), (0.0, 0.0), 3, unit_length=300.0)


@given(st.lists(st.floats(0, 20), min_size=1, max_size=10), st.integers(0, 25))
def test_exposure_monotone_in_radius(d, r):
    d = np.array(d)
    assert np.all(exposed_mask(d, r) <= exposed_mask(d, r + 1))


def test_distance_matrix_shape():
    D = distances(np.zeros((5, 2)), np.ones((3, 2)))
    assert D.shape == (3, 5)
    np.testing.assert_allclose(D, math.sqrt(2))


@pytest.mark.parametrize("policy", ["uniform-random", "per-slot-resample", "fixed-list"])
def test_placement_is_reproducible_and_inside(policy):
    dom = Domain.square(10.0)
    a = SensorPlacement(dom, 7, policy, seed=3, key=(1, 2))
    b = SensorPlacement(dom, 7, policy, seed=3, key=(1, 2))
    for n in (1, 2, 5):
        np.testing.assert_array_equal(a.snapshot(n).locations, b.snapshot(n).locations)
        assert dom.contains(a.snapshot(n).locations).all()
    changes = not np.array_equal(a.snapshot(1).locations, a.snapshot(2).locations)
    assert changes == (policy != "fixed-list")


def test_fixed_list_keeps_given_locations():
    locs = [[1.0, 2.0], [3.0, 4.0]]
    p = SensorPlacement(Domain.square(10.0), 2, "fixed-list", locations=locs)
    np.testing.assert_array_equal(p.snapshot(9).locations, locs)


def test_zero_sensors_gives_empty_snapshot():
    snap = SensorPlacement(Domain.square(1.0), 0, "per-slot-resample").snapshot(1)
    assert len(snap) == 0


def test_disk_sampling_is_uniform_in_area(rng):
    pts = Domain.disk(1.0).sample_uniform(rng, 40000)
    # P(r < 1/2) = 1/4 under area-uniform sampling
    assert abs(np.mean(np.hypot(*pts.T) < 0.5) - 0.25) < 0.01
