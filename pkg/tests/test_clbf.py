import math

import numpy as np
import pytest

from safefl.clbf import (
    HalfPlaneUnsafe,
    LevelParams,
    MarginPolicy,
    QuadraticCLF,
    RegionBox,
    SigmoidShape,
    WeakCLBF,
    assemble_weak_clbf,
    clbf_eval,
    clbf_grad,
    clf_eval_grad,
    normalize_constraint,
    parameter_bounds,
    select_parameters,
    sigmoid_eval,
    sigmoid_slope,
    v1_min_on_unsafe,
    v1_minimizer_on_unsafe,
)
from safefl.errors import InvalidUnsafeSet, LevelTooSmall, MarginInfeasible
from safefl.numerics import finite_diff_grad

P1 = np.array([[0.9 + 1 / 3 + 1.25, 1 / 3], [1 / 3, 5 / 6]])
SHAPE1 = SigmoidShape(l=4.0, d=-1.0, delta=0.28)


class TestSigmoid:
    def test_center_value(self):
        assert sigmoid_eval(SHAPE1, SHAPE1.d + SHAPE1.delta / 2) == pytest.approx(0.5)

    def test_value_at_unsafe_boundary(self):
        # sigma(d) for the first-axis published shape
        assert sigmoid_eval(SHAPE1, -1.0) == pytest.approx(0.636452, abs=1e-6)

    def test_saturation(self):
        assert sigmoid_eval(SHAPE1, 50.0) < 1e-10
        assert sigmoid_eval(SHAPE1, -50.0) > 1.0 - 1e-10

    def test_open_interval_under_extreme_arguments(self):
        lo = sigmoid_eval(SHAPE1, 1e6)
        hi = sigmoid_eval(SHAPE1, -1e6)
        assert 0.0 < lo < hi < 1.0

    def test_strictly_decreasing(self):
        xs = np.linspace(-3.0, 2.0, 200)
        vals = sigmoid_eval(SHAPE1, xs)
        assert np.all(np.diff(vals) < 0.0)

    def test_slope_at_center(self):
        slope = sigmoid_slope(SHAPE1, SHAPE1.d + SHAPE1.delta / 2)
        assert slope == pytest.approx(-SHAPE1.l / 4.0)

    def test_slope_matches_finite_difference(self):
        rng = np.random.default_rng(3)
        for x1 in rng.uniform(-2.5, 1.5, size=50):
            fd = finite_diff_grad(
                lambda z: sigmoid_eval(SHAPE1, z[0]), np.array([x1, 0.0]), h=1e-6
            )[0]
            assert sigmoid_slope(SHAPE1, x1) == pytest.approx(fd, abs=1e-6)

    def test_slope_negative_and_bounded(self):
        xs = np.linspace(-5, 5, 101)
        slopes = sigmoid_slope(SHAPE1, xs)
        assert np.all(slopes < 0.0)
        assert np.all(np.abs(slopes) <= SHAPE1.l / 4.0 + 1e-12)
        assert abs(sigmoid_slope(SHAPE1, 40.0)) < 1e-12

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            SigmoidShape(l=0.0, d=-1.0, delta=0.1)
        with pytest.raises(ValueError):
            SigmoidShape(l=1.0, d=-1.0, delta=-0.1)


class TestQuadraticCLF:
    def test_zero_at_origin(self):
        value, grad = clf_eval_grad(np.eye(2), np.zeros(2))
        assert value == 0.0
        np.testing.assert_allclose(grad, [0.0, 0.0])

    def test_identity_case(self):
        value, grad = clf_eval_grad(np.eye(2), np.array([1.0, 1.0]))
        assert value == pytest.approx(1.0)
        np.testing.assert_allclose(grad, [1.0, 1.0])

    def test_scenario_initial_value(self):
        value, _ = clf_eval_grad(P1, np.array([-0.7, -1.5]))
        assert value == pytest.approx(1.895917, abs=1e-6)

    def test_grad_matches_finite_difference(self):
        clf = QuadraticCLF.from_matrix(P1)
        rng = np.random.default_rng(11)
        for _ in range(30):
            x = rng.uniform(-2, 2, size=2)
            fd = finite_diff_grad(lambda z: clf.value(z[0], z[1]), x)
            np.testing.assert_allclose(clf.grad(x[0], x[1]), fd, atol=1e-6)

    def test_rejects_non_spd(self):
        with pytest.raises(ValueError):
            QuadraticCLF.from_matrix([[1.0, 2.0], [2.0, 1.0]])

    def test_eigenvalue_range(self):
        clf = QuadraticCLF.from_matrix(P1)
        lo, hi = clf.eigenvalue_range()
        ev = np.linalg.eigvalsh(P1)
        assert lo == pytest.approx(ev[0])
        assert hi == pytest.approx(ev[1])


class TestUnsafeMinimum:
    def test_identity_case(self):
        assert v1_min_on_unsafe(np.eye(2), -1.0) == pytest.approx(0.5)
        np.testing.assert_allclose(v1_minimizer_on_unsafe(np.eye(2), -1.0), (-1.0, 0.0))

    def test_scenario_case(self):
        assert v1_min_on_unsafe(P1, -1.0) == pytest.approx(1.175, abs=1e-6)
        x1, x2 = v1_minimizer_on_unsafe(P1, -1.0)
        assert (x1, x2) == pytest.approx((-1.0, 0.4), abs=1e-9)

    def test_grid_minimization_oracle(self):
        # brute-force minimum of V over the unsafe slice at ~1e-3 spacing
        clf = QuadraticCLF.from_matrix(P1)
        x1 = np.linspace(-1.2, -1.0, 201)
        x2 = np.linspace(-0.5, 1.0, 1501)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        brute = clf.value_on(X1, X2).min()
        assert v1_min_on_unsafe(P1, -1.0) == pytest.approx(brute, abs=1e-5)

    def test_rejects_nonnegative_threshold(self):
        with pytest.raises(InvalidUnsafeSet):
            v1_min_on_unsafe(P1, 0.0)


class TestNormalizeConstraint:
    def test_canonical_passthrough(self):
        unsafe, flip = normalize_constraint("le", -1.0)
        assert unsafe.d == -1.0 and not flip

    def test_flip(self):
        unsafe, flip = normalize_constraint("ge", 1.3)
        assert unsafe.d == -1.3 and flip

    def test_invalid_after_flip(self):
        with pytest.raises(InvalidUnsafeSet):
            normalize_constraint("ge", -0.5)

    def test_unknown_direction(self):
        with pytest.raises(ValueError):
            normalize_constraint("above", 1.0)


BOX1 = RegionBox(-1.2, 0.5, -2.5, 2.5)
UNSAFE1 = HalfPlaneUnsafe(-1.0)


class TestParameterSelection:
    def test_published_row_bounds(self):
        bounds = parameter_bounds(P1, BOX1, UNSAFE1, v2=2.0)
        assert bounds.gamma == pytest.approx(0.5)
        assert bounds.l_max == pytest.approx(4.0)
        assert bounds.v1 == pytest.approx(1.175, abs=1e-9)
        assert bounds.delta_min(4.0) == pytest.approx(0.266, abs=1e-3)
        sigma1, sigma2 = bounds.sigma_endpoints(4.0, 0.28)
        assert sigma1 == pytest.approx(0.636452, abs=1e-6)
        assert sigma2 == pytest.approx(0.363548, abs=1e-6)
        assert bounds.theta_min(4.0, 0.28) == pytest.approx(39.79, abs=1e-2)

    def test_published_row_is_feasible(self):
        cert = assemble_weak_clbf(
            P1, BOX1, UNSAFE1, v2=2.0, l=4.0, delta=0.28, theta=50.0
        )
        assert cert.k == pytest.approx(38.355, abs=1e-3)
        assert cert.theta == 50.0

    def test_identity_example(self):
        box = RegionBox(-2.0, 1.0, -2.0, 2.0)
        unsafe = HalfPlaneUnsafe(-1.0)
        bounds = parameter_bounds(np.eye(2), box, unsafe, v2=1.0)
        assert bounds.v1 == pytest.approx(0.5)
        assert bounds.l_max == pytest.approx(2.0)
        assert bounds.delta_min(2.0) == pytest.approx(math.log(2.0))
        assert bounds.theta_min(2.0, 0.75) == pytest.approx(26.6, abs=0.1)
        cert = assemble_weak_clbf(
            np.eye(2), box, unsafe, v2=1.0, l=2.0, delta=0.75, theta=27.0
        )
        # positivity on the unsafe slice, grid oracle
        x1 = np.linspace(-2.0, -1.0, 200)
        x2 = np.linspace(-2.0, 2.0, 200)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        assert cert.value_on(X1, X2).min() > 0.0

    def test_level_too_small(self):
        with pytest.raises(LevelTooSmall):
            select_parameters(P1, BOX1, UNSAFE1, v2=1.175)
        with pytest.raises(LevelTooSmall):
            select_parameters(P1, BOX1, UNSAFE1, v2=0.3)

    def test_margin_infeasible_when_margin_leaves_region(self):
        box = RegionBox(-1.1, 0.05, -2.0, 2.0)
        unsafe = HalfPlaneUnsafe(-1.0)
        v1 = v1_min_on_unsafe(np.eye(2), -1.0)
        with pytest.raises(MarginInfeasible):
            select_parameters(np.eye(2), box, unsafe, v2=v1 * math.exp(30.0))

    def test_default_policy_respects_bounds(self):
        cert = select_parameters(P1, BOX1, UNSAFE1, v2=2.0)
        bounds = parameter_bounds(P1, BOX1, UNSAFE1, v2=2.0)
        assert cert.shape.l == pytest.approx(4.0)
        assert cert.shape.delta > bounds.delta_min(cert.shape.l)
        assert cert.theta > bounds.theta_min(cert.shape.l, cert.shape.delta)
        assert cert.k == pytest.approx((1 + cert.theta * cert.levels.sigma2) * 2.0)

    def test_slope_override_and_rejection(self):
        cert = select_parameters(P1, BOX1, UNSAFE1, v2=2.0, policy=MarginPolicy(l=2.0))
        assert cert.shape.l == 2.0
        with pytest.raises(MarginInfeasible):
            select_parameters(P1, BOX1, UNSAFE1, v2=2.0, policy=MarginPolicy(l=9.0))

    def test_vacuous_slope_bound_fallback(self):
        # region entirely in x1 <= 0 (origin on the boundary): the slope bound
        # is vacuous and the fallback slope 2 / (0.1 * extent) applies
        box = RegionBox(-3.0, 0.0, -2.0, 2.0)
        unsafe = HalfPlaneUnsafe(-1.0)
        bounds = parameter_bounds(np.eye(2), box, unsafe, v2=1.0)
        assert bounds.l_max is None
        cert = select_parameters(np.eye(2), box, unsafe, v2=1.0)
        assert cert.shape.l == pytest.approx(2.0 / (0.1 * 3.0))

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            MarginPolicy(delta_margin=1.0)
        with pytest.raises(ValueError):
            MarginPolicy(l=-1.0)


@pytest.fixture(scope="module")
def cert():
    return assemble_weak_clbf(P1, BOX1, UNSAFE1, v2=2.0, l=4.0, delta=0.28, theta=50.0)


class TestWeakCLBFEvaluation:

    def test_origin_value(self, cert):
        assert clbf_eval(cert, np.zeros(2)) == pytest.approx(-cert.k)

    def test_lower_bound(self, cert):
        rng = np.random.default_rng(5)
        pts = rng.uniform(-3, 3, size=(500, 2))
        vals = cert.value_on(pts[:, 0], pts[:, 1])
        assert np.all(vals >= -cert.k - 1e-12)

    def test_positive_on_unsafe_grid(self, cert):
        x1 = np.linspace(BOX1.x1_min, -1.0, 150)
        x2 = np.linspace(BOX1.x2_min, BOX1.x2_max, 150)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        assert cert.value_on(X1, X2).min() > 0.0

    def test_corner_evaluates_to_zero(self, cert):
        # x1 = d + delta and V = v2 determine x2 by the quadratic formula
        clf = cert.clf
        x1 = cert.shape.d + cert.shape.delta
        disc = 2.0 * clf.p22 * cert.levels.v2 - clf.det * x1 * x1
        assert disc > 0.0
        x2 = (-clf.p12 * x1 + math.sqrt(disc)) / clf.p22
        assert clf.value(x1, x2) == pytest.approx(cert.levels.v2, abs=1e-12)
        assert cert.value(x1, x2) == pytest.approx(0.0, abs=1e-9)

    def test_grad_zero_at_origin(self, cert):
        np.testing.assert_allclose(clbf_grad(cert, np.zeros(2)), [0.0, 0.0])

    def test_grad_matches_finite_difference(self, cert):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            x = rng.uniform((-1.2, -2.5), (0.5, 2.5))
            fd = finite_diff_grad(lambda z: cert.value(z[0], z[1]), x, h=1e-6)
            grad = clbf_grad(cert, x)
            np.testing.assert_allclose(grad, fd, rtol=1e-6, atol=1e-5)

    def test_grad_on_uncontrolled_line_closed_form(self, cert):
        # on p12 x1 + p22 x2 = 0 the first gradient component collapses to the
        # product form det(P)/p22 * [theta*sigma*(1 - l/2 (1-sigma) x1) + 1] * x1
        clf = cert.clf
        c = clf.p12 / clf.p22
        for x1 in np.linspace(-1.15, 0.45, 37):
            x2 = -c * x1
            g1, _ = cert.grad(x1, x2)
            sigma = sigmoid_eval(cert.shape, x1)
            expected = (
                clf.det
                / clf.p22
                * (cert.theta * sigma * (1.0 - 0.5 * cert.shape.l * (1.0 - sigma) * x1) + 1.0)
                * x1
            )
            assert g1 == pytest.approx(expected, abs=1e-9)

    def test_value_and_grad_consistency(self, cert):
        rng = np.random.default_rng(23)
        for _ in range(100):
            x = rng.uniform(-2, 2, size=2)
            w, g1, g2 = cert.value_and_grad(x[0], x[1])
            assert w == pytest.approx(cert.value(x[0], x[1]), rel=1e-14, abs=1e-14)
            gg = cert.grad(x[0], x[1])
            assert (g1, g2) == pytest.approx(gg, rel=1e-14, abs=1e-14)

    def test_vectorized_matches_scalar(self, cert):
        rng = np.random.default_rng(29)
        pts = rng.uniform(-2, 2, size=(100, 2))
        vec = cert.value_on(pts[:, 0], pts[:, 1])
        g1v, g2v = cert.grad_on(pts[:, 0], pts[:, 1])
        for i, (x1, x2) in enumerate(pts):
            assert vec[i] == pytest.approx(cert.value(x1, x2), rel=1e-13, abs=1e-13)
            g1, g2 = cert.grad(x1, x2)
            assert g1v[i] == pytest.approx(g1, rel=1e-13, abs=1e-13)
            assert g2v[i] == pytest.approx(g2, rel=1e-13, abs=1e-13)


class TestCertificateInvariants:
    def test_sigmoid_endpoint_ratio_identity(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            l = rng.uniform(0.2, 20.0)
            delta = rng.uniform(0.01, 3.0)
            shape = SigmoidShape(l=l, d=-1.0, delta=delta)
            s1 = sigmoid_eval(shape, shape.d)
            s2 = sigmoid_eval(shape, shape.d + shape.delta)
            assert s1 / s2 == pytest.approx(math.exp(0.5 * l * delta), rel=1e-9)

    def test_denominator_positive_for_selected(self):
        for v2 in (1.3, 2.0, 5.0, 20.0):
            cert = select_parameters(P1, BOX1, UNSAFE1, v2=v2)
            lv = cert.levels
            assert lv.sigma1 * lv.v1 - lv.sigma2 * lv.v2 > 0.0

    def test_two_sided_growth_bounds(self):
        cert = select_parameters(P1, BOX1, UNSAFE1, v2=2.0)
        lam_min, lam_max = cert.clf.eigenvalue_range()
        rng = np.random.default_rng(37)
        pts = rng.uniform(-5, 5, size=(10_000, 2))
        w = cert.value_on(pts[:, 0], pts[:, 1])
        norm2 = np.sum(pts * pts, axis=1)
        lower = 0.5 * lam_min * norm2 - cert.k
        upper = 0.5 * (1.0 + cert.theta) * lam_max * norm2 - cert.k
        assert np.all(w >= lower - 1e-9)
        assert np.all(w <= upper + 1e-9)

    def test_slope_condition_on_grid(self):
        cert = select_parameters(P1, BOX1, UNSAFE1, v2=2.0)
        X1, _ = BOX1.grid(200)
        sigma = sigmoid_eval(cert.shape, X1)
        condition = 1.0 - 0.5 * cert.shape.l * (1.0 - sigma) * X1
        assert np.all(condition > 0.0)

    def test_mutant_construction_is_permitted(self):
        # the verifier, not the constructor, judges broken certificates
        base = select_parameters(P1, BOX1, UNSAFE1, v2=2.0)
        mutant = WeakCLBF(
            clf=base.clf, shape=base.shape, theta=0.0, k=2.0, levels=base.levels
        )
        assert mutant.value(0.0, 0.0) == -2.0

    def test_level_params_validation(self):
        with pytest.raises(ValueError):
            LevelParams(v1=2.0, v2=1.0, sigma1=0.6, sigma2=0.4, gamma=0.5)
        with pytest.raises(ValueError):
            LevelParams(v1=1.0, v2=2.0, sigma1=0.4, sigma2=0.6, gamma=0.5)


class TestRegionBox:
    def test_validation(self):
        with pytest.raises(ValueError):
            RegionBox(1.0, -1.0, -1.0, 1.0)
        with pytest.raises(ValueError):
            RegionBox(0.1, 1.0, -1.0, 1.0)  # origin outside

    def test_diameter(self):
        box = RegionBox(-3.0, 1.0, -1.0, 2.0)
        assert box.diameter == pytest.approx(5.0)

    def test_grid_shape(self):
        X1, X2 = BOX1.grid(60)
        assert X1.shape == (60, 60)
        assert X1[0, 0] == BOX1.x1_min and X1[-1, 0] == BOX1.x1_max
