import numpy as np
import pytest

from anisolab.geometry import (CoveringStats, VoronoiPartition, covering_count,
                               min_dist_integral, nearest_generator,
                               psi_transform, star_shape_check)
from anisolab.metrics import HurstVector, rho, rho_tilde, unit_rho_ball_measure


def test_nearest_generator_ties_to_lowest_index():
    h = HurstVector([0.5])
    gens = np.array([[1.0], [-1.0], [1.0]])
    # the origin is equidistant from all three; lowest index wins
    assert nearest_generator([0.0], gens, h) == 0
    with pytest.raises(ValueError):
        nearest_generator([0.0], np.empty((0, 1)), h)


def test_voronoi_partition_build_and_verify():
    h = HurstVector([0.5, 0.8])
    rng = np.random.default_rng(0)
    gens = rng.random((6, 2))
    part = VoronoiPartition.build(gens, h, [0.0, 0.0], [1.0, 1.0],
                                  points_per_axis=16)
    assert part.verify()
    assert part.grid.shape == (256, 2)
    # every assignment really is a distance minimizer
    d = rho_tilde(part.grid[:, None, :], gens[None, :, :], h)
    assert np.all(d[np.arange(256), part.assignment] <= d.min(axis=1) + 1e-15)


def test_star_shape_random_trials():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 4))
        h = HurstVector(rng.uniform(0.2, 1.0, n))
        gens = rng.random((int(rng.integers(2, 8)), n))
        t = rng.random(n)
        eps = float(rng.uniform(0.05, 0.95))
        l = nearest_generator(t, gens, h)
        assert star_shape_check(gens, h, l, t, eps)


def test_star_shape_validation():
    h = HurstVector([0.5])
    gens = np.array([[0.2], [0.8]])
    with pytest.raises(ValueError):
        star_shape_check(gens, h, 0, [0.3], eps=1.5)
    with pytest.raises(ValueError):
        # [0.7] belongs to generator 1, not 0
        star_shape_check(gens, h, 0, [0.7], eps=0.5)


def test_psi_transform_unit_sphere_identity():
    rng = np.random.default_rng(2)
    for n in (2, 3):
        h = HurstVector(rng.uniform(0.2, 1.0, n))
        for _ in range(50):
            theta = rng.uniform(0.0, np.pi, n - 1)
            theta[-1] = rng.uniform(0.0, 2.0 * np.pi)
            radius = float(rng.uniform(0.1, 2.0))
            # exponents above 1 push the offset outside (0,1]-H validity,
            # so clamp the test radius for safety of rho itself
            radius = min(radius, 1.0)
            pt = psi_transform(theta, radius, h)
            assert rho(pt, np.zeros(n), h) == pytest.approx(radius, rel=1e-10)


def test_psi_transform_one_dim():
    h = HurstVector([0.5])
    assert psi_transform(-1.0, 0.25, h)[0] == pytest.approx(-0.0625)
    assert psi_transform(+1.0, 0.25, h)[0] == pytest.approx(+0.0625)
    with pytest.raises(ValueError):
        psi_transform([0.1, 0.2], 1.0, HurstVector([0.5, 0.5]))  # needs N-1 angles
    with pytest.raises(ValueError):
        psi_transform([0.1, 0.2], -1.0, HurstVector([0.5, 0.5, 0.5]))


def test_min_dist_integral_beta_zero_is_region_measure():
    h = HurstVector([0.5, 0.5])
    region = ("interval", np.zeros(2), np.ones(2))
    est = min_dist_integral(region, [[0.5, 0.5]], 0.0, h, resolution=32)
    assert est == pytest.approx(1.0, rel=1e-6)
    ball = ("rho_ball", np.zeros(2), 0.5)
    est = min_dist_integral(ball, [], 0.0, h, resolution=64)
    exact = unit_rho_ball_measure(h) * 0.5 ** h.q()
    assert est == pytest.approx(exact, rel=0.01)


def test_min_dist_integral_single_point_ball_analytic():
    # H = (1, 1), beta = 1, rho ball of radius r around the only point:
    # int_B rho(t, 0)^{-1} dt = c_ball * Q/(Q - 1) * r^{Q-1} = 4 r
    h = HurstVector([1.0, 1.0])
    for r in (0.5, 0.25):
        region = ("rho_ball", np.zeros(2), r)
        est = min_dist_integral(region, [], 1.0, h, resolution=128)
        assert est == pytest.approx(4.0 * r, rel=0.02)


def test_min_dist_integral_validation():
    h = HurstVector([0.5])
    region = ("interval", np.zeros(1), np.ones(1))
    with pytest.raises(ValueError):
        min_dist_integral(region, [], h.q(), h)  # beta >= Q diverges
    with pytest.raises(ValueError):
        min_dist_integral(region, [], -1.0, h)


def _covering_count_oracle(s0, points, hurst):
    """Brute-force re-implementation with explicit loops."""
    s0 = np.asarray(s0, dtype=float)
    pts = np.asarray(points, dtype=float)
    count = 0
    for i in range(len(pts)):
        d_ref = float(rho_tilde(pts[i], s0, hurst))
        d_others = [float(rho_tilde(pts[i], pts[j], hurst))
                    for j in range(len(pts)) if j != i]
        if not d_others or d_ref <= min(d_others):
            count += 1
    return count


def test_covering_count_hand_cases():
    h = HurstVector([0.5])
    # two points straddling the reference: each is nearest to it
    assert covering_count([0.0], [[0.3], [-0.3]], h) == 2
    # a chain marching away: only the first point keeps the reference
    # (0.1 is at sqrt(0.1) from it but sqrt(0.2) from the next point)
    assert covering_count([0.0], [[0.1], [0.3], [0.6]], h) == 1
    # ties count as attaining the minimum: 0.2 is exactly as close to the
    # reference as to 0.4, and a slightly nearer companion breaks the tie
    assert covering_count([0.0], [[0.2], [0.4]], h) == 1
    assert covering_count([0.0], [[0.2], [0.35]], h) == 0
    assert covering_count([0.0], [], h) == 0
    with pytest.raises(ValueError):
        covering_count([0.0], [[0.1], [0.1]], h)


def test_covering_count_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n_dim = int(rng.integers(1, 4))
        h = HurstVector(rng.uniform(0.2, 1.0, n_dim))
        pts = rng.random((int(rng.integers(1, 15)), n_dim))
        got = covering_count(np.zeros(n_dim), pts, h)
        assert got == _covering_count_oracle(np.zeros(n_dim), pts, h)


def test_covering_stats_merge_associative():
    h = HurstVector([0.5])
    a = CoveringStats.from_counts(h, [1, 2])
    b = CoveringStats.from_counts(h, [3])
    c = CoveringStats.from_counts(h, [2, 2])
    left = a.merge(b).merge(c)
    right = a.merge(b.merge(c))
    assert left.max_count == right.max_count == 3
    assert np.array_equal(left.counts, right.counts)
    assert left.trials == 5
