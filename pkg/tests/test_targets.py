import numpy as np
import pytest

from mixdeconv.errors import DomainError
from mixdeconv.grids import GridBox, fourier, grid_from_callable, lp_distance
from mixdeconv.noise import (
    ExponentialNoise,
    GaussianNoise,
    LaplaceNoise,
    UniformConvNoise,
    htilde,
)
from mixdeconv.targets import (
    SmoothnessClass,
    forward_density,
    make_target,
    parse_target,
    sample_mixture,
    smooth_bump,
    spline_holder,
    two_bump,
)


class TestSmoothnessClass:
    def test_qtilde(self):
        assert SmoothnessClass(1, 0.5, 2.0).qtilde == 1.5

    def test_gamma_range(self):
        with pytest.raises(DomainError):
            SmoothnessClass(1, 0.0, 1.0)
        with pytest.raises(DomainError):
            SmoothnessClass(1, 1.5, 1.0)


class TestFamilies:
    def test_bump_boundary_and_mass(self):
        p = smooth_bump()
        assert p.pdf(np.array([-1.0, 1.0])) == pytest.approx([0.0, 0.0])
        assert p.pdf(np.array(0.0)) > 0.0
        y = np.linspace(-1.0, 1.0, 2**16 + 1)
        assert np.trapezoid(p.pdf(y), y) == pytest.approx(1.0, abs=1e-6)

    def test_bump_custom_support(self):
        p = smooth_bump(lo=0.0, hi=3.0)
        assert p.support == (0.0, 3.0)
        assert p.pdf(np.array(1.5)) > 0.0
        assert p.pdf(np.array(3.1)) == 0.0

    def test_twobump_bimodal_with_positive_dip(self):
        p = two_bump()
        y = np.linspace(-1.0, 1.0, 2001)
        v = p.pdf(y)
        center = v[np.argmin(np.abs(y - p.center))]
        assert center > 0.0
        left_mode = np.max(v[y < 0])
        right_mode = np.max(v[y > 0])
        assert left_mode > center and right_mode > center

    def test_spline_normalized(self):
        for qt in (1.5, 2.0, 3.0):
            p = spline_holder(qt)
            y = np.linspace(-1.0, 1.0, 2**16 + 1)
            assert np.trapezoid(p.pdf(y), y) == pytest.approx(1.0, abs=1e-6)
            assert np.all(p.pdf(y) >= 0.0)
            assert p.smoothness.qtilde == pytest.approx(qt)

    def test_spline_q2_kink_is_sharp(self):
        # first derivative Lipschitz but second derivative jumps at the knot
        p = spline_holder(2.0)
        y0 = p.center + 0.25 * (p.support[1] - p.support[0]) / 2.0
        d1 = p.derivative(1)
        deltas = np.array([1e-3, 1e-4, 1e-5])
        right = (d1(y0 + deltas) - d1(np.array(y0))) / deltas
        left = (d1(np.array(y0)) - d1(y0 - deltas)) / deltas
        jump = right - left
        assert np.all(np.abs(jump - jump[0]) < 0.05 * abs(jump[0]))
        assert abs(jump[0]) > 0.1

    def test_derivative_budget_enforced(self):
        p = spline_holder(1.5)  # q = 1
        with pytest.raises(DomainError):
            p.derivative(2)

    def test_make_and_parse(self):
        assert make_target("bump").family == "bump"
        assert parse_target("spline(qtilde=2.0)").smoothness.qtilde == pytest.approx(2.0)
        with pytest.raises(DomainError):
            make_target("histogram")


class TestDerivativeConsistency:
    def test_analytic_matches_finite_difference(self):
        h = 1e-4
        for p in (smooth_bump(), spline_holder(2.0), two_bump()):
            y = np.linspace(-0.95, 0.95, 401)
            fd = (p.pdf(y + h) - p.pdf(y - h)) / (2 * h)
            assert np.max(np.abs(fd - p.derivative(1)(y))) < 1e-5

    def test_second_derivative(self):
        h = 1e-4
        p = smooth_bump()
        y = np.linspace(-0.9, 0.9, 201)
        fd = (p.pdf(y + h) - 2 * p.pdf(y) + p.pdf(y - h)) / h**2
        assert np.max(np.abs(fd - p.derivative(2)(y))) < 1e-4 * max(
            1.0, np.max(np.abs(p.derivative(2)(y)))
        )


class TestModulusCertificate:
    def test_recorded_constant_bounds_measured_modulus(self):
        for p in (smooth_bump(), spline_holder(1.5), spline_holder(2.0)):
            cls = p.smoothness
            dq = p.derivative(cls.q)
            y = np.linspace(p.support[0], p.support[1], 1001)
            vq = dq(y)
            for step in (1, 3, 10):
                delta = y[step] - y[0]
                measured = np.max(np.abs(vq[step:] - vq[:-step]))
                assert measured <= cls.L * delta**cls.gamma * (1 + 1e-6)


class TestForwardDensity:
    def test_mass_and_nonnegativity(self):
        f = forward_density(smooth_bump(), GaussianNoise())
        assert f.mass() == pytest.approx(1.0, abs=1e-4)
        assert np.min(f.values) > -1e-9

    def test_support_minkowski_containment(self):
        # p on [-1,1], h = uniform[-1,1]: supp(f_p) inside [-2,2]
        f = forward_density(smooth_bump(), UniformConvNoise(m=1))
        x = f.box.axis_nodes(0)
        outside = np.abs(x) > 2.0 + 2 * f.box.spacing[0]
        assert np.max(np.abs(f.values[outside])) < 1e-12

    def test_a4_support_containment(self):
        # supp(p) subset supp(f_p) whenever 0 is interior to supp(h)
        for model in (GaussianNoise(), LaplaceNoise(), UniformConvNoise(m=2)):
            p = smooth_bump()
            f = forward_density(p, model)
            x = f.box.axis_nodes(0)
            inside = (x > p.support[0]) & (x < p.support[1])
            assert np.min(f.values[inside]) > 0.0, type(model).__name__

    def test_convolution_theorem_identity(self):
        p = smooth_bump()
        model = GaussianNoise()
        f = forward_density(p, model)
        F = fourier(f)
        P = fourier(grid_from_callable(f.box, p.pdf))
        t = F.box.axis_nodes(0)
        expect = htilde(model, t) * P.values
        assert np.max(np.abs(F.values - expect)) < 1e-10


class TestSampleMixture:
    def test_deterministic(self):
        p = smooth_bump()
        a = sample_mixture(p, GaussianNoise(), 500, seed=9)
        b = sample_mixture(p, GaussianNoise(), 500, seed=9)
        assert np.array_equal(a, b)

    def test_mean_matches_clt(self):
        p = smooth_bump(lo=0.0, hi=2.0)
        x = sample_mixture(p, GaussianNoise(), 10**5, seed=1)
        # var(X) = var(Y) + 1 <= 2; generous 4-sigma band
        assert x.mean() == pytest.approx(p.mean(), abs=4 * np.sqrt(2.0 / 10**5))

    def test_empirical_cdf_matches_forward_density(self):
        p = smooth_bump()
        model = GaussianNoise()
        f = forward_density(p, model)
        x = f.box.axis_nodes(0)
        cdf = np.cumsum(np.real(f.values)) * f.box.spacing[0]
        n = 4096
        failures = 0
        for seed in range(20):
            draws = np.sort(sample_mixture(p, model, n, seed=seed))
            ecdf = np.searchsorted(draws, x, side="right") / n
            if np.max(np.abs(ecdf - cdf)) > 2.0 / np.sqrt(n):
                failures += 1
        assert failures <= 1  # 99%-style stochastic oracle

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            sample_mixture(smooth_bump(), GaussianNoise(), 0, seed=0)
