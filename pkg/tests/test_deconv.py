import math
from dataclasses import dataclass

import numpy as np
import pytest

from mixdeconv.deconv import (
    BandwidthPlan,
    RegularizedTransfer,
    bound_report,
    build_transfer,
    convolution_identity_error,
    derivative_estimate,
    predicted_exponent,
    psi,
    psi_l1_report,
    psi_star,
    reg_S,
    select_bandwidth,
    smoothed_estimate,
    tail_T,
)
from mixdeconv.errors import (
    DegenerateRegionError,
    DomainError,
    MustRegularizeError,
    StructuralError,
    UnsupportedVariantError,
)
from mixdeconv.grids import (
    GridBox,
    GridFunction,
    apply_transfer,
    convolve,
    fourier,
    grid_from_callable,
    lp_distance,
    restrict,
)
from mixdeconv.kernels import MultiIndex, ScaledKernel, build_kernel
from mixdeconv.noise import (
    CauchyNoise,
    ExponentialNoise,
    GaussianNoise,
    LaplaceNoise,
    UniformConvNoise,
    h_density,
)
from mixdeconv.estimators import oracle_inject
from mixdeconv.targets import SmoothnessClass, smooth_bump, spline_holder

BOX = GridBox((-64.0,), (64.0,), (2**14,))
KERNEL = build_kernel(M=2.0, rho=0.5, r=4)


@dataclass(frozen=True)
class _FlatModel:
    """Synthetic noiseless transfer h~ == 1 (division by one)."""

    d: int = 1
    variant: str = "smooth"
    beta: float = 1.0

    def htilde1d(self, t):
        return np.ones_like(np.asarray(t, dtype=float)) + 0j

    def htilde(self, *t):
        return self.htilde1d(t[0])


def sinc_plan(b: float) -> BandwidthPlan:
    return BandwidthPlan(b=b, M=2.0, m=4.0, v_n=b ** (8.0 / 3.0), delta=-1.0 / 3.0,
                         xi=0.5, zeta=1.0 / 3.0, model_tag="uniform")


class TestBandwidthPlan:
    def test_band_limit_formula(self):
        plan = BandwidthPlan(b=0.1, M=2.0, m=4.0, v_n=1e-3)
        assert plan.M_n == pytest.approx(2.0 * 2.0 / 0.1**8)
        assert plan.M_n >= plan.M / plan.b

    def test_guards(self):
        with pytest.raises(DomainError):
            BandwidthPlan(b=0.0)
        with pytest.raises(DomainError):
            BandwidthPlan(b=0.1, m=0.4)


class TestPsi:
    def test_flat_transfer_returns_kernel(self):
        kn = ScaledKernel(KERNEL, 0.25)
        filt = psi(kn, _FlatModel(), BOX)
        kval = kn.sample_on(BOX)
        assert np.max(np.abs(filt.values - kval.values)) < 1e-12

    def test_identity_by_spatial_convolution(self):
        # independent oracle: convolve psi with the sampled noise density
        model = GaussianNoise()
        kn = ScaledKernel(KERNEL, 0.5)
        inner = GridBox((-32.0,), (32.0,), (2**13,))
        filt = restrict(psi(kn, model, BOX), inner)
        h = restrict(grid_from_callable(BOX, lambda x: h_density(model, x)), inner)
        conv = convolve(filt, h)
        kval = kn.sample_on(conv.box)
        assert np.max(np.abs(conv.values - kval.values)) < 1e-3

    def test_l1_mass_monotone_in_bandwidth(self):
        model = GaussianNoise()
        masses = []
        for b in (0.5, 0.25, 0.125):
            filt = psi(ScaledKernel(KERNEL, b), model, BOX)
            masses.append(float(np.sum(np.abs(filt.values)) * BOX.cell_volume))
        assert masses[0] < masses[1] < masses[2]

    def test_oscillatory_band_must_regularize(self):
        with pytest.raises(MustRegularizeError):
            psi(ScaledKernel(KERNEL, 0.2), UniformConvNoise(m=1), BOX)

    def test_overflowing_amplitude_rejected(self):
        with pytest.raises(DomainError):
            psi(ScaledKernel(KERNEL, 0.05), GaussianNoise(), BOX)


class TestConvolutionIdentity:
    def test_extended_precision_path(self):
        # Gaussian at b=0.05 has filter amplitudes ~ e^800, beyond float64
        err = convolution_identity_error(ScaledKernel(KERNEL, 0.05), GaussianNoise(), BOX)
        assert err < 1e-7

    def test_float_path(self):
        err = convolution_identity_error(ScaledKernel(KERNEL, 0.2), ExponentialNoise(), BOX)
        assert err < 1e-12


class TestPsiL1Report:
    def test_ordering_and_bounded_ratio(self):
        for model in (GaussianNoise(), CauchyNoise(), ExponentialNoise()):
            ratios = []
            for b in (0.5, 0.25, 0.125):
                rep = psi_l1_report(ScaledKernel(KERNEL, b), model, BOX)
                assert rep.numeric <= rep.c_hat * rep.mid * (1.0 + 1e-12)
                assert rep.mid <= rep.coarse * (1.0 + 1e-12)
                ratios.append(rep.c_hat)
            assert max(ratios) / min(ratios) <= 3.0, type(model).__name__

    def test_flat_model_bounds_coincide(self):
        rep = psi_l1_report(ScaledKernel(KERNEL, 0.25), _FlatModel(), BOX)
        assert rep.mid == pytest.approx(0.25**-0.5, rel=1e-6)
        assert rep.coarse == pytest.approx(0.25**-0.5, rel=1e-12)


class TestBuildTransfer:
    def test_first_region_width_taylor(self):
        # |h~'(pi)| = 1/pi for the sinc model: width ~ 2 v pi
        model = UniformConvNoise(m=1)
        for v in (1e-3, 1e-4):
            plan = BandwidthPlan(b=0.3, m=4.0, v_n=v, delta=-1.0 / 3.0)
            reg = build_transfer(model, plan).regions[0]
            assert reg.hi - reg.lo == pytest.approx(2.0 * v * math.pi, rel=1e-3)

    def test_width_vanishes_with_threshold(self):
        model = UniformConvNoise(m=1)
        widths = []
        for v in (1e-2, 1e-4, 1e-6):
            plan = BandwidthPlan(b=0.3, m=4.0, v_n=v, delta=-1.0 / 3.0)
            reg = build_transfer(model, plan).regions[0]
            widths.append(reg.hi - reg.lo)
        assert widths[0] > widths[1] > widths[2]
        assert widths[2] < 1e-5

    def test_second_order_root_width_exponent(self):
        model = UniformConvNoise(m=2)
        vs = np.geomspace(1e-6, 1e-5, 5)
        widths = []
        for v in vs:
            plan = BandwidthPlan(b=0.3, m=4.0, v_n=v, delta=-1.2)
            reg = build_transfer(model, plan).regions[0]
            widths.append(reg.hi - reg.lo)
        slope = np.polyfit(np.log(vs), np.log(widths), 1)[0]
        assert slope == pytest.approx(0.5, abs=0.02)

    def test_degenerate_threshold_rejected(self):
        # with delta = -1.2 the thresholds decay slower than the local
        # maxima of |h~|^2 and overtake them within the explicit budget
        model = UniformConvNoise(m=2)
        plan = BandwidthPlan(b=0.3, m=4.0, v_n=1e-4, delta=-1.2)
        with pytest.raises(DegenerateRegionError):
            build_transfer(model, plan)

    def test_non_oscillatory_rejected(self):
        with pytest.raises(UnsupportedVariantError):
            build_transfer(GaussianNoise(), BandwidthPlan(b=0.1, v_n=1e-3))

    def test_transfer_values(self):
        model = UniformConvNoise(m=1)
        plan = sinc_plan(0.2)
        tr = build_transfer(model, plan)
        reg = tr.regions[0]
        mid_root = 0.5 * (reg.lo + reg.hi)
        vals = tr.transfer(np.array([0.5, mid_root, -mid_root]))
        assert vals[0] == pytest.approx(complex(model.htilde1d(np.array(0.5))))
        assert vals[1] == pytest.approx(reg.threshold)
        assert vals[2] == pytest.approx(reg.threshold)  # symmetric mirror

    def test_evaluation_beyond_coverage_rejected(self):
        tr = build_transfer(UniformConvNoise(m=1), sinc_plan(0.2))
        with pytest.raises(StructuralError):
            tr.transfer(np.array([tr.covered + 10.0]))


class TestTailT:
    def test_smooth_slopes(self):
        for model, beta in ((ExponentialNoise(), 1.0), (LaplaceNoise(), 2.0)):
            Ms = np.array([10.0, 20.0, 40.0, 80.0])
            Ts = np.array([tail_T(model, M) for M in Ms])
            slope = np.polyfit(np.log(Ms), np.log(Ts), 1)[0]
            assert slope == pytest.approx(-(beta - 0.5), abs=0.05)

    def test_sinc_half_power(self):
        vals = [tail_T(UniformConvNoise(m=1), M) for M in (100.0, 400.0)]
        assert vals[0] == pytest.approx(100.0**-0.5, rel=0.05)
        assert vals[1] == pytest.approx(400.0**-0.5, rel=0.05)

    def test_gaussian_negligible(self):
        assert tail_T(GaussianNoise(), 10.0) < 1e-9

    def test_guard(self):
        with pytest.raises(DomainError):
            tail_T(GaussianNoise(), 0.0)


class TestRegS:
    def test_empty_regions(self):
        tr = RegularizedTransfer(model=UniformConvNoise(m=1), band=3.0, v_n=1e-3,
                                 delta=-1.0 / 3.0, regions=(), covered=3.0)
        assert reg_S(tr) == 0.0

    def test_sinc_scaling_bounded(self):
        model = UniformConvNoise(m=1)
        ratios = []
        for b in (0.2, 0.1, 0.05):
            plan = sinc_plan(b)
            s = reg_S(build_transfer(model, plan))
            ratios.append(s / (plan.v_n**1.5 * math.sqrt(-8.0 * math.log(b))))
        assert max(ratios) / min(ratios) < 1.2

    def test_general_mu_exponent(self):
        # S ~ v_n^{1 + 1/(2 mu)}: fitted exponent within 0.1
        model = UniformConvNoise(m=2)
        vs = np.geomspace(1e-6, 1e-5, 5)
        ss = []
        for v in vs:
            plan = BandwidthPlan(b=0.3, m=4.0, v_n=v, delta=-1.2)
            ss.append(reg_S(build_transfer(model, plan)))
        slope = np.polyfit(np.log(vs), np.log(ss), 1)[0]
        assert slope == pytest.approx(1.25, abs=0.1)


class TestPsiStar:
    def test_reduces_to_plain_filter_without_regions(self):
        # a transfer whose band stops before the first root never thresholds
        model = UniformConvNoise(m=1)
        tr = RegularizedTransfer(model=model, band=3.0, v_n=1e-3, delta=-1.0 / 3.0,
                                 regions=(), covered=3.0)
        kn = ScaledKernel(KERNEL, 1.0)  # band M/b = 2 < pi
        star, _ = psi_star(kn, tr, BOX)
        plain = psi(kn, model, BOX)
        assert np.max(np.abs(star.values - plain.values)) < 1e-12

    def test_identity_and_l2_scaling(self):
        model = UniformConvNoise(m=1)
        series = []
        for b in (0.2, 0.1, 0.05):
            plan = sinc_plan(b)
            tr = build_transfer(model, plan)
            kn = ScaledKernel(KERNEL, b)
            assert convolution_identity_error(kn, tr, BOX) < 1e-7
            _, l2 = psi_star(kn, tr, BOX)
            series.append(l2 * b ** (3.5 / 3.0) * plan.v_n)
        assert max(series) <= 2.0 * series[0]  # bounded, non-diverging


class TestSelectBandwidth:
    def test_super_smooth_formula(self):
        plan = select_bandwidth(GaussianNoise(), 1e-3, SmoothnessClass(1, 1.0, 1.0), M=2.0)
        assert plan.b**2 == pytest.approx(8.0 / math.log(1000.0))

    def test_smooth_formula(self):
        plan = select_bandwidth(ExponentialNoise(), 1e-2, SmoothnessClass(1, 1.0, 1.0))
        assert plan.b == pytest.approx(1e-2 ** (1.0 / 3.5))

    def test_oscillatory_sinc(self):
        plan = select_bandwidth(UniformConvNoise(m=1), 1e-2, SmoothnessClass(1, 1.0, 1.0),
                                xi=0.5)
        assert plan.delta == -1.0 / 3.0
        assert plan.m == 4.0
        assert plan.zeta == pytest.approx(1.0 / 3.0)
        assert plan.v_n == pytest.approx(plan.b ** (8.0 / 3.0))

    def test_threshold_tilt_exact(self):
        # unit equality of the tilt exponent for (mu, beta) in {(1,1), (2,2)}
        cls = SmoothnessClass(1, 1.0, 1.0)
        assert select_bandwidth(UniformConvNoise(m=1), 1e-2, cls).delta == 1.0 * (1 - 2) / 3
        assert select_bandwidth(UniformConvNoise(m=2), 1e-2, cls).delta == 2.0 * (1 - 4) / 5

    def test_guards(self):
        with pytest.raises(DomainError):
            select_bandwidth(GaussianNoise(), 1.5, SmoothnessClass(1, 1.0, 1.0))
        with pytest.raises(DomainError):
            select_bandwidth(UniformConvNoise(m=1), 1e-2, SmoothnessClass(1, 1.0, 1.0),
                             xi=0.0)


class TestPredictedExponent:
    def test_smooth(self):
        r = predicted_exponent(ExponentialNoise(), SmoothnessClass(1, 1.0, 1.0))
        assert r.scale == "algebraic"
        assert r.exponent == pytest.approx(2.0 / 3.5)

    def test_super_smooth_derivative(self):
        r = predicted_exponent(GaussianNoise(), SmoothnessClass(1, 1.0, 1.0),
                               s=MultiIndex((1,)))
        assert r.scale == "logarithmic"
        assert r.exponent == pytest.approx(0.5)

    def test_oscillatory(self):
        r = predicted_exponent(UniformConvNoise(m=1), SmoothnessClass(1, 1.0, 1.0),
                               zeta=0.0)
        assert r.exponent == pytest.approx(2.0 / 5.5)

    def test_budget_guard(self):
        with pytest.raises(DomainError):
            predicted_exponent(GaussianNoise(), SmoothnessClass(1, 1.0, 1.0),
                               s=MultiIndex((2,)))


class TestSmoothedEstimate:
    def test_mass_preserved(self):
        pg = grid_from_callable(BOX, smooth_bump().pdf)
        sm = smoothed_estimate(pg, BandwidthPlan(b=1.0), KERNEL)
        assert sm.mass() == pytest.approx(1.0, abs=1e-6)

    def test_spectral_identity(self):
        pg = grid_from_callable(BOX, smooth_bump().pdf)
        plan = BandwidthPlan(b=0.25)
        sm = smoothed_estimate(pg, plan, KERNEL)
        F = fourier(sm)
        t = F.box.axis_nodes(0)
        expect = KERNEL.transform(t * plan.b) * fourier(pg).values
        assert np.max(np.abs(F.values - expect)) < 1e-8

    def test_derivative_antisymmetric(self):
        pg = grid_from_callable(BOX, smooth_bump().pdf)  # symmetric about 0
        de = derivative_estimate(pg, BandwidthPlan(b=0.1), MultiIndex((1,)), KERNEL)
        vals = np.asarray(de.values)
        # node at -x is index n - i for node x at index i (grid contains 0)
        flipped = -np.concatenate(([vals[0]], vals[:0:-1]))
        assert np.max(np.abs(vals - flipped)) < 1e-8

    def test_derivative_matches_smoothed_gradient(self):
        pg = grid_from_callable(BOX, smooth_bump().pdf)
        plan = BandwidthPlan(b=0.25)
        de = derivative_estimate(pg, plan, MultiIndex((1,)), KERNEL)
        sm = smoothed_estimate(pg, plan, KERNEL)
        fd = np.gradient(np.real(sm.values), BOX.spacing[0])
        inner = np.abs(BOX.axis_nodes(0)) < 2.0
        assert np.max(np.abs(fd[inner] - np.real(de.values)[inner])) < 1e-3

    def test_budget_guard(self):
        pg = grid_from_callable(BOX, smooth_bump().pdf)
        with pytest.raises(DomainError):
            derivative_estimate(pg, BandwidthPlan(b=0.25), MultiIndex((2,)), KERNEL,
                                budget=1)


class TestKeystoneIdentity:
    def test_kernel_of_difference_equals_filtered_observation_gap(self):
        # K_n*(p_hat - p) = psi*(f_hat - f_p) whenever f_hat = h*p_hat
        p = smooth_bump()
        model = GaussianNoise()
        pg = grid_from_callable(BOX, p.pdf)
        f_p = apply_transfer(pg, model.htilde).real_part()
        p_hat, f_hat = oracle_inject(pg, model, 0.01, u=2.0)
        plan = BandwidthPlan(b=0.25)
        kn = ScaledKernel(KERNEL, plan.b)
        gap_p = GridFunction(BOX, np.real(p_hat.values) - np.real(pg.values))
        lhs = smoothed_estimate(gap_p, plan, KERNEL)

        def filt(t):
            kt = kn.transform(t)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                return np.where(kt != 0.0, kt / np.where(kt != 0.0, model.htilde1d(t), 1.0), 0.0)

        gap_f = GridFunction(BOX, np.real(f_hat.values) - np.real(f_p.values))
        rhs = apply_transfer(gap_f, filt)
        assert np.max(np.abs(lhs.values - rhs.values)) < 1e-7


@pytest.fixture(scope="module")
def injected():
    p = spline_holder(2.0)
    model = ExponentialNoise()
    pg = grid_from_callable(BOX, p.pdf)
    f_p = apply_transfer(pg, model.htilde).real_part()
    p_hat, f_hat = oracle_inject(pg, model, 1e-2, u=2.0)
    return p, model, pg, f_p, p_hat, f_hat


class TestBoundReport:
    def test_identity_pair_reduces_to_approximation(self, injected):
        p, model, pg, f_p, _, _ = injected
        plan = select_bandwidth(model, 1e-2, p.smoothness)
        rep = bound_report(pg, pg, f_p, f_p, plan, model, 2.0, p.smoothness)
        assert rep.a_n == 0.0
        assert rep.transfer_term == 0.0
        assert rep.approx_term > 0.0

    def test_u_shape_and_selection_near_minimum(self, injected):
        p, model, pg, f_p, p_hat, f_hat = injected
        bs = np.geomspace(0.1, 1.0, 9)
        rhss = np.array([
            bound_report(p_hat, pg, f_hat, f_p, BandwidthPlan(b=b), model, 2.0,
                         p.smoothness).rhs
            for b in bs
        ])
        finite = np.isfinite(rhss)
        idx = int(np.argmin(np.where(finite, rhss, np.inf)))
        assert 0 < idx < len(bs) - 1  # interior minimum: U-shape
        plan = select_bandwidth(model, 1e-2, p.smoothness)
        factor = max(plan.b / bs[idx], bs[idx] / plan.b)
        assert factor <= 4.0

    def test_sinc_coefficient_positive(self):
        p = spline_holder(2.0)
        model = UniformConvNoise(m=1)
        pg = grid_from_callable(BOX, p.pdf)
        f_p = apply_transfer(pg, model.htilde).real_part()
        p_hat, f_hat = oracle_inject(pg, model, 1e-3, u=2.0)
        plan = sinc_plan(0.05)
        tr = build_transfer(model, plan)
        rep = bound_report(p_hat, pg, f_hat, f_p, plan, tr, 2.0, p.smoothness)
        assert rep.c_lhs > 0.0
        assert rep.coefficient_positive

    def test_negative_coefficient_flagged_not_raised(self, injected):
        p, model, pg, f_p, p_hat, f_hat = injected
        rep = bound_report(p_hat, pg, f_hat, f_p, BandwidthPlan(b=0.02), model, 2.0,
                           p.smoothness)
        assert not rep.coefficient_positive
        assert rep.rhs == math.inf
