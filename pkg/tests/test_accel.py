"""The numba and numpy hot paths must agree to roundoff."""

import numpy as np
import pytest

from nlparab import accel


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(4)
    pts = rng.uniform(-2, 2, (40, 1))
    vals = rng.standard_normal((3, 40))
    psi = rng.uniform(0, 1, 40)
    return pts, vals, psi


def test_pairwise_matrix_paths_agree(cloud):
    pts, _, _ = cloud
    fast = accel.pairwise_power_matrix(pts, 0.7, 2.0)
    ref = accel._pairwise_power_matrix_numpy(pts, 0.7, 2.0)
    assert np.allclose(fast, ref, rtol=1e-13)
    assert np.all(np.diag(fast) == 0.0)


def test_seminorm_paths_agree(cloud):
    pts, vals, _ = cloud
    fast = accel.seminorm_sq_levels(vals, pts, 2.0)
    ref = accel._seminorm_sq_levels_numpy(vals, pts, 2.0)
    assert np.allclose(fast, ref, rtol=1e-12)


def test_weighted_seminorm_paths_agree(cloud):
    pts, vals, psi = cloud
    fast = accel.weighted_seminorm_sq(vals[0], pts, psi, 2.0)
    ref = accel._weighted_seminorm_sq_numpy(vals[0], pts, psi, 2.0)
    assert fast == pytest.approx(ref, rel=1e-12)


def test_seminorm_matches_direct_double_loop(cloud):
    pts, vals, _ = cloud
    got = accel.seminorm_sq_levels(vals[:1], pts, 2.5)[0]
    acc = 0.0
    for i in range(len(pts)):
        for j in range(len(pts)):
            if i == j:
                continue
            acc += (vals[0, i] - vals[0, j]) ** 2 \
                / abs(pts[i, 0] - pts[j, 0]) ** 2.5
    assert got == pytest.approx(acc, rel=1e-12)


def test_2d_points_supported():
    rng = np.random.default_rng(9)
    pts = rng.uniform(-1, 1, (25, 2))
    vals = rng.standard_normal((1, 25))
    fast = accel.seminorm_sq_levels(vals, pts, 3.0)
    ref = accel._seminorm_sq_levels_numpy(vals, pts, 3.0)
    assert np.allclose(fast, ref, rtol=1e-12)
