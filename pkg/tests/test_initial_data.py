import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import zeta

from chlab.initial_data import (
    SeedSpec,
    build_ch_seed,
    build_h,
    build_novikov_seed,
    check_sign_pattern,
    divergence_sum,
    eta_window_integral,
    h_block,
    locate_novikov_threshold,
    max_admissible_K,
    novikov_criterion,
    novikov_domain_ok,
    novikov_momentum_samples,
    novikov_seed_quadrature,
    slope_at_zero,
    weight,
)
from chlab.littlewood_paley import DEFAULT_BUMP, NormSpec, besov_norm
from chlab.spectral_core import DomainSpec, SpectralField, derivative, eval_at

TORUS = DomainSpec.torus(4096)
LINE = DomainSpec.line(2**16)


def chi_tilde_moment():
    """``2 int_0^inf s^2 chi_tilde(s) ds`` by adaptive quadrature."""
    f = lambda s: s * s * float(DEFAULT_BUMP.chi_tilde(s))
    return 2.0 * quad(f, 0.85, 1.15, points=[1.0], limit=200)[0]


class TestWeights:
    def test_weight_values(self):
        assert weight(8, 3.0) == pytest.approx(8 ** -0.5)
        assert np.all(weight(np.arange(1, 5), math.inf) == 1.0)

    @pytest.mark.parametrize("r", [1.5, 2.0, 4.0])
    def test_divergence_sum_grows_without_bound(self, r):
        # exponent 2/(1+r) < 1 so the partial sums diverge like K^{1-2/(1+r)}
        e = 1 - 2 / (1 + r)
        ratios = [divergence_sum(K, r) / K**e for K in (100, 1000, 10000)]
        assert ratios[0] < ratios[1] < ratios[2] < 1 / e

    def test_summable_square(self):
        # the r-th powers of the weights are summable: sum k^{-2r/(1+r)} < inf
        r = 2.0
        partial = float(np.sum(weight(np.arange(1, 10**6 + 1), r) ** r))
        # tail beyond 10^6 is about 3 * 10^{-2}
        assert 0 < zeta(4 / 3) - partial < 0.04


class TestSeedSpec:
    @pytest.mark.parametrize("r", [1.0, 0.5])
    def test_rejects_small_r(self, r):
        with pytest.raises(ValueError, match="r must exceed 1"):
            SeedSpec(eps=1.0, p=2.0, r=r, K=4)

    @pytest.mark.parametrize("kw", [{"p": 0.5}, {"K": 0}, {"eps": 0.0}, {"model": "kdv"}])
    def test_rejects_bad_fields(self, kw):
        args = dict(eps=1.0, p=2.0, r=2.0, K=4) | kw
        with pytest.raises(ValueError):
            SeedSpec(**args)


class TestLacunaryProfile:
    def test_admissible_K(self):
        assert max_admissible_K(TORUS) == 10
        assert max_admissible_K(DomainSpec.torus(16384)) == 12
        with pytest.raises(ValueError, match="maximal admissible K is 10"):
            build_h(2.0, 11, domain=TORUS)

    @pytest.mark.parametrize("k", [1, 3, 6])
    def test_blocks_live_on_their_annulus(self, k):
        c = h_block(k, 2.0, DEFAULT_BUMP, LINE)
        xi = LINE.xi
        inside = (xi > 0.85 * 2**k) & (xi < 1.15 * 2**k)
        assert np.all(c[~inside] == 0) and np.any(c[inside] != 0)
        # odd profile: purely imaginary coefficients
        assert np.all(c.real == 0)

    @pytest.mark.parametrize("r", [2.0, 3.0, math.inf])
    def test_slope_against_continuum_integral(self, r):
        # each normalised block contributes -w_k * 2 int s^2 chi_tilde(s) ds
        h = build_h(r, 5, domain=LINE)
        expected = -divergence_sum(5, r) * chi_tilde_moment()
        assert slope_at_zero(h) == pytest.approx(expected, rel=1e-9)

    def test_slope_sum_matches_derivative_on_grid(self):
        h = build_h(2.0, 8, domain=TORUS)
        assert slope_at_zero(h) == pytest.approx(derivative(h).values()[0], rel=1e-12)

    def test_odd(self):
        h = build_h(2.0, 8, domain=TORUS)
        x = np.linspace(-3, 3, 11)
        assert np.allclose(eval_at(h, -x), -eval_at(h, x), atol=1e-14)


class TestCHSeed:
    @given(
        eps=st.floats(1e-3, 10.0),
        p=st.sampled_from([1.0, 2.0, 4.0, math.inf]),
        r=st.sampled_from([1.5, 2.0, 5.0, math.inf]),
        K=st.integers(1, 10),
    )
    @settings(max_examples=25, deadline=None)
    def test_norm_at_most_eps(self, eps, p, r, K):
        u0, cert = build_ch_seed(SeedSpec(eps, p, r, K), domain=TORUS)
        assert cert.besov_value <= eps
        assert besov_norm(u0, NormSpec.critical(p, r)) == cert.besov_value
        assert cert.value_at_zero == pytest.approx(0.0, abs=1e-14 * eps)
        assert cert.oddness_defect < 1e-12

    def test_linear_in_eps(self):
        a, ca = build_ch_seed(SeedSpec(1.0, 2.0, 2.0, 8), domain=TORUS)
        b, cb = build_ch_seed(SeedSpec(0.25, 2.0, 2.0, 8), domain=TORUS)
        assert np.allclose(b.coeffs, 0.25 * a.coeffs, rtol=1e-14, atol=0)
        assert cb.slope_at_zero == pytest.approx(0.25 * ca.slope_at_zero)

    def test_slope_magnitude_increases_with_K(self):
        slopes = [build_ch_seed(SeedSpec(1.0, 2.0, 2.0, K), domain=TORUS)[1].slope_at_zero
                  for K in range(2, 11, 2)]
        assert all(b < a < 0 for a, b in zip(slopes, slopes[1:]))

    def test_certificate_fields(self):
        _, cert = build_ch_seed(SeedSpec(0.5, 2.0, 2.0, 6), domain=TORUS)
        row = cert.as_row()
        assert row["lifespan_stated"] == 0.5
        assert row["lifespan_construction"] == pytest.approx(0.5**10)
        assert row["slope_threshold"] == pytest.approx(-2 * 0.5**-10)
        assert row["slope_threshold_met"] is False
        assert row["h_norm_estimate"] >= row["h_norm_truncated"]
        assert "besov_value = " in cert.report()


class TestNovikovSeed:
    def test_momentum_sign_pattern(self):
        x = LINE.x_signed
        y = novikov_momentum_samples(6, 2.0, x)
        assert check_sign_pattern(y, x)
        assert not check_sign_pattern(-y, x)
        assert y.max() > 0 and y.min() < 0

    def test_domain_requirement(self):
        assert novikov_domain_ok(DomainSpec.line(2**12))
        assert not novikov_domain_ok(DomainSpec.line(2**12, M=32))
        assert not novikov_domain_ok(DomainSpec.torus(2**12))
        with pytest.raises(ValueError, match="line-approximation"):
            build_novikov_seed(3, 2.0, domain=DomainSpec.torus(1024))

    def test_spectral_route_matches_quadrature(self):
        u0, cert = build_novikov_seed(4, 2.0, domain=DomainSpec.line(2**18))
        q = novikov_seed_quadrature(4, 2.0)
        assert cert.sign_condition_ok
        assert cert.value_at_zero == pytest.approx(q.value_at_zero, rel=1e-4)
        assert cert.slope_at_zero == pytest.approx(q.slope_at_zero, rel=1e-4)
        assert cert.novikov_criterion.h1_sq == pytest.approx(q.h1_sq, rel=1e-4)

    def test_eta_window(self):
        assert eta_window_integral(0.0) == 0.0
        # the window covers the whole support for A >= 8/5
        full = eta_window_integral(2.0)
        assert eta_window_integral(200.0) == pytest.approx(full, rel=1e-15)
        assert eta_window_integral(1.25) == pytest.approx(2.5, rel=1e-15)
        assert 2.5 < full < 3.2

    @pytest.mark.parametrize("scale", [0.5, 3.0])
    def test_quadrature_scaling(self, scale):
        a = novikov_seed_quadrature(5, 2.0)
        b = novikov_seed_quadrature(5, 2.0, scale=scale)
        assert b.value_at_zero == pytest.approx(scale * a.value_at_zero, rel=1e-14)
        assert b.h1_sq == pytest.approx(scale**2 * a.h1_sq, rel=1e-14)
        # the criterion m0 < -H/2 is invariant under scaling
        assert b.criterion.passed == a.criterion.passed

    def test_threshold_and_bounded_remainder(self):
        k_star, rows = locate_novikov_threshold(2.0, K_max=14)
        assert k_star == 12
        assert [q.criterion.passed for q in rows] == [False] * 11 + [True] * 3
        rem = [q.slope_at_zero - q.i_term for q in rows]
        # u0'(0) minus its divergent part stays bounded and settles
        assert all(abs(v) < 10 for v in rem)
        assert abs(rem[-1] - rem[-2]) < 0.01
        slopes = [q.slope_at_zero for q in rows]
        assert all(b < a for a, b in zip(slopes, slopes[1:]))


class TestNovikovCriterion:
    def test_sign_failure_not_applicable(self):
        c = novikov_criterion(-10.0, 1.0, sign_ok=False)
        assert not c.applicable and not c.passed and c.T_bound == math.inf

    def test_not_met(self):
        c = novikov_criterion(-0.4, 1.0)
        assert c.applicable and not c.passed

    @given(h=st.floats(0.01, 100.0), f=st.floats(1.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_bound_positive_and_formula(self, h, f):
        m0 = -0.5 * h * f
        c = novikov_criterion(m0, h)
        assert c.passed
        assert c.delta == pytest.approx(1 / f**2)
        t1 = -2 / ((1 - c.delta) * m0)
        t2 = 2 / h * math.log((m0 - h / 2) / (m0 + h / 2))
        assert c.T_bound == pytest.approx(min(t1, t2)) and c.T_bound > 0


def test_field_arithmetic_preserves_domain():
    h = build_h(2.0, 3, domain=TORUS)
    assert isinstance(h * 2.0, SpectralField) and (h * 2.0).domain == TORUS
