import numpy as np
import pytest

from anisolab.covariance import FbmType, SheWhite, Transformed
from anisolab.metrics import HurstVector
from anisolab.sampling import (cholesky_with_jitter, conditional_variance,
                               dump_field_sample, gram_matrix,
                               load_field_sample, replicate_rng, sample,
                               slnd_scan)


def test_replicate_rng_reproducible_and_independent():
    a1 = replicate_rng(7, 0).standard_normal(4)
    a2 = replicate_rng(7, 0).standard_normal(4)
    b = replicate_rng(7, 1).standard_normal(4)
    c = replicate_rng(8, 0).standard_normal(4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)
    assert not np.array_equal(a1, c)


def test_gram_matrix_vectorized_matches_scalar_cov():
    rng = np.random.default_rng(0)
    fbm = FbmType(HurstVector([0.3, 0.7]))
    pts = rng.random((6, 2))
    g = gram_matrix(fbm, pts)
    for i in range(6):
        for j in range(6):
            assert g[i, j] == pytest.approx(float(fbm.cov(pts[i], pts[j])),
                                            rel=1e-12, abs=1e-14)
    she = SheWhite()
    pts = np.column_stack([rng.uniform(0.5, 2.0, 5), rng.uniform(-1, 1, 5)])
    g = gram_matrix(she, pts)
    for i in range(5):
        for j in range(5):
            assert g[i, j] == pytest.approx(float(she.cov(pts[i], pts[j])),
                                            rel=1e-12, abs=1e-14)
    assert np.allclose(g, g.T)


def test_cholesky_with_jitter_policy():
    g = np.array([[1.0, 0.5], [0.5, 1.0]])
    factor, lam = cholesky_with_jitter(g)
    assert lam == 0.0
    assert np.allclose(factor @ factor.T, g)
    # rank-deficient matrix needs jitter but still factors
    v = np.array([1.0, 2.0, 3.0])
    g = np.outer(v, v)
    factor, lam = cholesky_with_jitter(g)
    assert 0.0 < lam <= 1e-8
    assert np.allclose(factor @ factor.T, g, atol=1e-6)
    with pytest.raises(np.linalg.LinAlgError):
        cholesky_with_jitter(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_sample_single_point_variance():
    # scalar field at one point: empirical variance over seeds matches
    # the model variance within 3 standard errors
    model = FbmType(HurstVector([0.5]))
    t = np.array([[2.0]])
    v = float(model.cov(t[0], t[0]))
    factor, _ = cholesky_with_jitter(gram_matrix(model, t))
    n = 100000
    draws = np.array([sample(model, t, 1, seed, factor=factor).values[0, 0]
                      for seed in range(n)])
    est = float(np.var(draws))
    se = v * np.sqrt(2.0 / (n - 1))
    assert abs(est - v) <= 3.0 * se


def test_sample_empirical_gram():
    model = FbmType(HurstVector([0.5]))
    grid = np.array([[0.25], [0.5], [0.75], [1.0]])
    g = gram_matrix(model, grid)
    factor, _ = cholesky_with_jitter(g)
    n = 10000
    vals = np.empty((n, 4))
    for seed in range(n):
        vals[seed] = sample(model, grid, 1, seed, factor=factor).values[:, 0]
    emp = vals.T @ vals / n
    # entrywise: SE of a product-moment estimate is about
    # sqrt((g_ii g_jj + g_ij^2) / n)
    se = np.sqrt((np.outer(np.diag(g), np.diag(g)) + g**2) / n)
    assert np.all(np.abs(emp - g) <= 5.0 * se)


def test_sample_transformed_components():
    inner = FbmType(HurstVector([0.5]))
    a = np.array([[1.0, 0.0], [1.0, 1.0]])
    model = Transformed(a, inner)
    grid = np.array([[1.0]])
    n = 20000
    vals = np.array([sample(model, grid, 2, seed).values[0] for seed in range(n)])
    emp = vals.T @ vals / n
    target = a @ a.T * float(inner.cov(grid[0], grid[0]))
    assert np.allclose(emp, target, atol=0.08)
    with pytest.raises(ValueError):
        sample(model, grid, 3, 0)


def test_conditional_variance_brownian():
    model = FbmType(HurstVector([0.5]))
    # Var(B(2) | B(1)) = 2 - 1 = 1 (independent increments)
    assert conditional_variance(model, [2.0], [[1.0]]) == pytest.approx(1.0)
    # Var(B(1) | B(2)) = 1 - 1/2 (Brownian bridge relation)
    assert conditional_variance(model, [1.0], [[2.0]]) == pytest.approx(0.5)
    # no conditioners: plain variance
    assert conditional_variance(model, [2.0], []) == pytest.approx(2.0)
    # extra points can only reduce the variance
    cv = conditional_variance(model, [2.0], [[1.0], [3.0]])
    assert cv <= 1.0 + 1e-12
    with pytest.raises(np.linalg.LinAlgError):
        conditional_variance(model, [2.0], [[1.0], [1.0]])


def test_conditional_variance_det_identity():
    # det Cov(joint) = det Cov(conditioners) * conditional variance
    model = FbmType(HurstVector([0.5]))
    conds = np.array([[0.5], [1.0], [1.5]])
    t = np.array([2.0])
    joint = gram_matrix(model, np.vstack([conds, t[None, :]]))
    cv = conditional_variance(model, t, conds)
    assert np.linalg.det(joint) == pytest.approx(
        np.linalg.det(joint[:-1, :-1]) * cv, rel=1e-9)


def test_slnd_scan_positive_and_deterministic():
    model = SheWhite()
    h = model.induced_hurst()
    r1 = slnd_scan(model, [1.0, -1.0], [2.0, 1.0], h, 50, 4, seed=3)
    r2 = slnd_scan(model, [1.0, -1.0], [2.0, 1.0], h, 50, 4, seed=3)
    assert np.array_equal(r1.ratios, r2.ratios)
    assert r1.skipped == 0
    assert r1.min_ratio > 0.0
    # adding the origin to the distance min can only shrink the
    # denominator, so every with-origin ratio dominates its counterpart
    assert np.all(r1.ratios_with_origin >= r1.ratios - 1e-15)


def test_field_sample_dump_load_round_trip(tmp_path):
    model = Transformed([[2.0, 0.0], [1.0, 1.0]], FbmType(HurstVector([0.25])))
    grid = np.linspace(0.1, 1.0, 8)[:, None]
    fs = sample(model, grid, 2, seed=11)
    path = tmp_path / "field.csv"
    dump_field_sample(fs, str(path))
    back = load_field_sample(str(path))
    assert back.seed == 11
    assert np.array_equal(back.grid, fs.grid)
    assert np.array_equal(back.values, fs.values)
    assert back.model.to_config() == model.to_config()
