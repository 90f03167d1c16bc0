import numpy as np
import pytest
from scipy import integrate

from anisolab.covariance import (FbmType, SheRiesz, SheWhite, Transformed,
                                 cov_fbm_type, cov_she_riesz, cov_she_white,
                                 cov_she_white_quad, heat_kernel,
                                 model_from_config, she_increment_msq)
from anisolab.metrics import HurstVector


def test_heat_kernel_mass_and_support():
    for t in (0.1, 1.0):
        mass, _ = integrate.quad(lambda x: float(heat_kernel(t, x)), -np.inf, np.inf)
        assert mass == pytest.approx(1.0, rel=1e-8)
    assert heat_kernel(0.0, 1.0) == 0.0
    assert heat_kernel(-1.0, 0.5) == 0.0
    # N = 2 mass via separability
    mass, _ = integrate.dblquad(
        lambda y, x: float(heat_kernel(0.5, np.array([x, y]), spatial_dim=2)),
        -10, 10, -10, 10)
    assert mass == pytest.approx(1.0, rel=1e-6)


def test_she_white_variance_closed_form():
    # Var u(t, x) = sqrt(t / (2 pi)); at t = 1 this is (2 pi)^{-1/2}
    assert float(cov_she_white(1.0, 0.0, 1.0, 0.0)) == pytest.approx(
        0.3989422804014327, rel=1e-12)
    assert float(cov_she_white(4.0, 2.0, 4.0, 2.0)) == pytest.approx(
        2.0 * 0.3989422804014327, rel=1e-12)


def test_she_white_matches_quadrature_oracle():
    rng = np.random.default_rng(0)
    for _ in range(25):
        t, s = rng.uniform(0.2, 3.0, 2)
        x, y = rng.uniform(-2.0, 2.0, 2)
        closed = float(cov_she_white(t, x, s, y))
        quad = cov_she_white_quad(t, x, s, y)
        assert closed == pytest.approx(quad, rel=1e-8, abs=1e-12)
        # symmetry in (t, x) <-> (s, y)
        assert closed == pytest.approx(float(cov_she_white(s, y, t, x)), rel=1e-14)


def test_she_riesz_consistency_with_msq():
    # E|u(t,x) - u(s,y)|^2 assembled from covariances must agree with the
    # single-quadrature cancellation-free form
    flags = []
    cases = [(1.0, np.zeros(2), 1.0, np.array([0.01, 0.0])),
             (1.0, np.zeros(2), 1.05, np.zeros(2)),
             (0.8, np.array([0.1, -0.2]), 1.3, np.array([0.3, 0.1]))]
    for t, x, s, y in cases:
        direct = she_increment_msq(t, x, s, y, 0.5, 2, flags)
        vt = cov_she_riesz(t, x, t, x, 0.5, 2, flags)
        vs = cov_she_riesz(s, y, s, y, 0.5, 2, flags)
        c = cov_she_riesz(t, x, s, y, 0.5, 2, flags)
        assembled = vt + vs - 2.0 * c
        # the assembled form cancels three O(1) terms, so its accuracy is
        # limited to the quadrature tolerance times the term magnitudes
        cancel_tol = 50.0 * 1e-6 * (vt + vs + 2.0 * abs(c))
        assert abs(direct - assembled) <= cancel_tol
        assert direct > 0.0
    assert flags == []


def test_she_riesz_validation():
    with pytest.raises(ValueError):
        cov_she_riesz(1.0, [0.0], 1.0, [0.0], beta=1.5, spatial_dim=1)
    with pytest.raises(ValueError):
        she_increment_msq(1.0, [0.0, 0.0], 1.0, [0.0, 0.0], 2.0, 2)
    with pytest.raises(ValueError):
        SheRiesz(spatial_dim=1, beta=1.0)


def test_induced_hurst_and_q():
    hw = SheWhite().induced_hurst()
    assert np.allclose(hw.h, [0.25, 0.5])
    assert hw.q() == pytest.approx(6.0)
    hr = SheRiesz(2, 0.5).induced_hurst()
    assert np.allclose(hr.h, [0.375, 0.75, 0.75])
    # Q = 2 (2 + N) / (2 - beta)
    assert hr.q() == pytest.approx(2.0 * (2 + 2) / (2.0 - 0.5))


def test_fbm_type_increment_variance_exact():
    h = HurstVector([0.3, 0.7])
    rng = np.random.default_rng(1)
    for _ in range(50):
        t = rng.normal(size=2)
        s = rng.normal(size=2)
        msq = (cov_fbm_type(t, t, h) + cov_fbm_type(s, s, h)
               - 2.0 * cov_fbm_type(t, s, h))
        exact = np.sum(np.abs(t - s) ** (2.0 * h.h))
        assert msq == pytest.approx(exact, rel=1e-10, abs=1e-12)


def test_fbm_type_brownian_special_case():
    h = HurstVector([0.5])
    assert cov_fbm_type(np.array([2.0]), np.array([3.0]), h) == pytest.approx(2.0)
    assert cov_fbm_type(np.array([1.5]), np.array([1.5]), h) == pytest.approx(1.5)


def test_transformed_model():
    inner = FbmType(HurstVector([0.5]))
    a = np.array([[2.0, 0.0], [1.0, 1.0]])
    model = Transformed(a, inner)
    g = a @ a.T
    t, s = np.array([1.0]), np.array([2.0])
    base = float(inner.cov(t, s))
    for i in range(2):
        for j in range(2):
            assert model.cov_components(i, j, t, s) == pytest.approx(g[i, j] * base)
    assert model.d == 2
    with pytest.raises(ValueError):
        Transformed(np.zeros((2, 2)), inner)
    with pytest.raises(ValueError):
        Transformed(np.ones((2, 3)), inner)


def test_model_config_round_trip():
    models = [FbmType(HurstVector([0.3, 0.8])),
              SheWhite(),
              SheRiesz(2, 0.5),
              Transformed([[2.0, 0.0], [1.0, 1.0]], FbmType(HurstVector([0.25])))]
    pts = {2: (np.array([1.0, 0.5]), np.array([1.2, -0.3])),
           1: (np.array([1.0]), np.array([0.4])),
           3: (np.array([1.0, 0.1, -0.2]), np.array([1.1, 0.0, 0.3]))}
    for model in models:
        rebuilt = model_from_config(model.to_config())
        t, s = pts[model.index_dim()]
        assert float(rebuilt.cov(t, s)) == pytest.approx(float(model.cov(t, s)),
                                                         rel=1e-6, abs=1e-12)
    with pytest.raises(ValueError):
        model_from_config({"model.kind": "unknown"})
