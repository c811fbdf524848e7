import numpy as np
import pytest

from latcalc.angles import AngleTuple, dyadic_grid, sphere_coefficients
from latcalc.errors import NonDifferentiableError
from latcalc.homogeneous import (Curvature, HomogeneousFn, certify_curvature,
                                 delta_h_sample, euclidean_norm,
                                 finite_difference_gradient, gini, gradient_at,
                                 pth_power_mean, sample_delta_h,
                                 scaled_geometric_mean, stolarsky)

S2 = np.sqrt(2.0) / 2


def builtins():
    return [stolarsky(2, 4), stolarsky(1, -1), stolarsky(0, 1), stolarsky(-1, 2),
            stolarsky(0.5, 3), gini(1, 2), gini(-1, 2), gini(0, 1),
            euclidean_norm(2), euclidean_norm(3), scaled_geometric_mean(2),
            scaled_geometric_mean(3), pth_power_mean(1), pth_power_mean(2),
            pth_power_mean(3), pth_power_mean(2, 3)]


# --- angles --------------------------------------------------------------

def test_dyadic_grid_examples():
    np.testing.assert_allclose(dyadic_grid(2, 1).angles[:, 0], [np.pi / 4, np.pi / 2])
    np.testing.assert_allclose(dyadic_grid(2, 2).angles[:, 0], np.arange(1, 5) * np.pi / 8)
    g = dyadic_grid(3, 1)
    assert g.count == 4
    want = {(1, 1), (1, 2), (2, 1), (2, 2)}
    got = {tuple(int(round(t / (np.pi / 4))) for t in row) for row in g.angles}
    assert got == want


@pytest.mark.parametrize("m, n", [(2, 5), (3, 4), (4, 2)])
def test_dyadic_grid_count_and_nesting(m, n):
    fine, coarse = dyadic_grid(m, n + 1), dyadic_grid(m, n)
    assert fine.count == 2 ** ((n + 1) * (m - 1))
    fine_set = {tuple(np.round(r, 12)) for r in fine.angles}
    assert all(tuple(np.round(r, 12)) in fine_set for r in coarse.angles)


def test_dyadic_grid_rejections():
    for m, n in [(1, 3), (2, 0), (3, 13), (26, 1)]:
        with pytest.raises(ValueError):
            dyadic_grid(m, n)


def test_sphere_coefficients_unit_and_positive():
    pts = dyadic_grid(4, 3).points()
    assert np.all(pts >= 0)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(sphere_coefficients([np.pi / 2, np.pi / 2]), [0, 0, 1], atol=1e-15)


def test_angle_tuple_bounds():
    assert AngleTuple((0.1, 0.2)).arity == 3
    with pytest.raises(ValueError):
        AngleTuple((2.0,))


# --- built-in functions ----------------------------------------------------

def test_stolarsky_examples():
    assert stolarsky(2, 4)([7.0, 7.0]) == 7.0
    assert stolarsky(1, -1)([4.0, 9.0]) == pytest.approx(6.0, rel=1e-14)
    assert stolarsky(2, 4)([3.0, 4.0]) == pytest.approx(np.sqrt(12.5), rel=1e-14)


@pytest.mark.parametrize("r, s", [(3, 3), (1, 0)])
def test_stolarsky_rejects(r, s):
    with pytest.raises(ValueError):
        stolarsky(r, s)


def test_stolarsky_is_continuous_across_the_diagonal():
    h = stolarsky(2, 4)
    for d in [1e-12, 1e-9, 1e-8, 1e-6, 1e-3]:
        x, y = 3.0, 3.0 * (1 + d)
        assert h([x, y]) == pytest.approx(np.sqrt((x * x + y * y) / 2), rel=1e-13)


def test_stolarsky_geometric_and_logarithmic_cases():
    x, y = 2.0, 5.0
    assert stolarsky(1, -1)([x, y]) == pytest.approx(np.sqrt(x * y), rel=1e-14)
    # mu_{0,1} is the logarithmic mean
    assert stolarsky(0, 1)([x, y]) == pytest.approx((y - x) / np.log(y / x), rel=1e-14)


def test_gini_examples():
    for r, s in [(1, 2), (-1, 2), (0, 3)]:
        assert gini(r, s)([0.0, 0.0]) == 0.0
    assert gini(1, 2)([3.0, 4.0]) == pytest.approx(25 / 7, rel=1e-14)
    assert gini(1, 2)([6.0, 8.0]) == pytest.approx(50 / 7, rel=1e-14)
    with pytest.raises(ValueError):
        gini(2, 2)


def test_norm_geo_pow_examples():
    assert euclidean_norm(2)([3.0, 4.0]) == 5.0
    assert euclidean_norm(4)([1.0, 0, 0, 0]) == 1.0
    assert euclidean_norm(2)([1.0, 1.0]) == pytest.approx(np.sqrt(2))
    assert scaled_geometric_mean(2)([1.0, 4.0]) == pytest.approx(4.0)
    assert scaled_geometric_mean(3)([1.0, 1.0, 1.0]) == pytest.approx(3.0)
    assert scaled_geometric_mean(3)([0.0, 5.0, 2.0]) == 0.0
    assert pth_power_mean(2)([3.0, 4.0]) == pytest.approx(np.sqrt(12.5))
    assert pth_power_mean(1)([3.0, 5.0]) == pytest.approx(4.0)
    assert pth_power_mean(3)([-2.5, 2.5]) == pytest.approx(2.5)
    for bad in (lambda: euclidean_norm(1), lambda: scaled_geometric_mean(1),
                lambda: pth_power_mean(0)):
        with pytest.raises(ValueError):
            bad()


def test_arity_is_checked():
    with pytest.raises(ValueError):
        euclidean_norm(3)([1.0, 2.0])


def test_homogeneity_and_flags():
    rng = np.random.default_rng(0)
    for h in builtins():
        x = rng.normal(size=(200, h.arity))
        lam = rng.uniform(0, 10, 200)
        hx = h(x)
        assert np.all(np.abs(h(lam[:, None] * x) - lam * hx) <= 1e-10 * (1 + np.abs(hx))), h.name
        if h.absolutely_invariant:
            np.testing.assert_array_equal(h(np.abs(x)), hx)
        if h.positive:
            assert np.all(h(np.abs(x)) >= 0)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_power_mean_matches_stolarsky(p):
    rng = np.random.default_rng(p)
    x = rng.normal(size=(200, 2))
    np.testing.assert_allclose(pth_power_mean(p)(x), stolarsky(p, 2 * p)(x), rtol=0, atol=1e-10)


# --- gradients -------------------------------------------------------------

def test_gradient_examples():
    np.testing.assert_allclose(gradient_at(euclidean_norm(2), [0.6, 0.8]), [0.6, 0.8])
    np.testing.assert_allclose(gradient_at(pth_power_mean(1), [0.3, 0.9]), [0.5, 0.5])
    np.testing.assert_allclose(gradient_at(scaled_geometric_mean(2), [S2, S2]), [1, 1])


def test_gradient_rejects_boundary_of_geo():
    with pytest.raises(NonDifferentiableError, match="nondifferentiable point"):
        gradient_at(scaled_geometric_mean(2), [0.0, 1.0])
    # the norm has one-sided partials on the boundary
    np.testing.assert_allclose(gradient_at(euclidean_norm(2), [0.0, 1.0]), [0, 1])


def _interior_unit(rng, m, k=100):
    c = rng.uniform(0.05, 1.0, (k, m))
    return c / np.linalg.norm(c, axis=1, keepdims=True)


def test_euler_and_ray_invariance():
    rng = np.random.default_rng(3)
    for h in builtins():
        c = _interior_unit(rng, h.arity)
        g = h.grad(c)
        tol = 1e-8 if h.has_analytic_gradient else 1e-4
        assert np.max(np.abs(np.sum(g * c, axis=1) - h(c))) <= tol, h.name
        for lam in (0.5, 2.0, 10.0):
            assert np.max(np.abs(h.grad(lam * c) - g)) <= tol, h.name


def test_finite_differences_agree_with_analytic():
    rng = np.random.default_rng(4)
    for h in builtins():
        if not h.has_analytic_gradient:
            continue
        c = _interior_unit(rng, h.arity)
        g, fd = h.grad(c), finite_difference_gradient(h, c)
        rel = np.abs(fd - g) / np.maximum(1.0, np.abs(g))
        assert rel.max() <= 1e-5, h.name


def test_supporting_hyperplane_inequality():
    rng = np.random.default_rng(5)
    for h in builtins():
        if h.curvature not in (Curvature.CONVEX, Curvature.CONCAVE):
            continue
        c = _interior_unit(rng, h.arity, 500)
        x = rng.uniform(0, 1, (500, h.arity))
        lin = np.sum(h.grad(c) * x, axis=1)
        if h.curvature == Curvature.CONVEX:
            assert np.all(lin <= h(x) + 1e-9), h.name
        else:
            assert np.all(lin >= h(x) - 1e-9), h.name


# --- delta_h sampling and curvature -----------------------------------------

def test_sample_delta_h_examples():
    pts = sample_delta_h(euclidean_norm(2), 1)
    np.testing.assert_allclose(pts, [[S2, S2], [0.0, 1.0]], atol=1e-15)
    pts = sample_delta_h(scaled_geometric_mean(2), 1)
    np.testing.assert_allclose(pts, [[S2, S2]])
    for h in builtins():
        pts = sample_delta_h(h, 4)
        assert np.all(pts >= 0)
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_delta_h_sample_reports_skips():
    _, pts, grads, skipped = delta_h_sample(scaled_geometric_mean(3), 3)
    assert skipped == 2 ** 6 - 7 * 7 and pts.shape[0] == 49
    assert np.all(np.isfinite(grads))


def test_certify_curvature_examples():
    assert certify_curvature(euclidean_norm(3), 500) == Curvature.CONVEX
    assert certify_curvature(scaled_geometric_mean(2), 500) == Curvature.CONCAVE
    linear = HomogeneousFn("diff", 2, lambda x: x[..., 0] - x[..., 1])
    assert certify_curvature(linear, 200) == Curvature.CONVEX
    # a convex kink along x = 2y and a concave one along y = 2x
    kinks = HomogeneousFn("kinks", 2, lambda x: np.maximum(x[..., 0], 2 * x[..., 1])
                          + np.minimum(2 * x[..., 0], x[..., 1]))
    assert certify_curvature(kinks, 2000) == Curvature.NEITHER


def test_curvature_of_common_means_is_data():
    # square mean is convex, geometric mean concave; tags stay unverified
    # until certified
    h = stolarsky(2, 4)
    assert h.curvature == Curvature.UNVERIFIED
    assert certify_curvature(h, 500) == Curvature.CONVEX
    assert certify_curvature(stolarsky(1, -1), 500) == Curvature.CONCAVE
