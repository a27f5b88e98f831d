import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chlab.littlewood_paley import (
    DEFAULT_BUMP,
    NormSpec,
    _MOLLIFIER_MASS,
    besov_norm,
    block_norms,
    k_max,
    log_interp_sides,
    lp_norm,
    make_bump,
    norm_report_row,
    project,
    project_low,
    smooth_step,
    sobolev_norm,
    write_norm_csv,
)
from chlab.spectral_core import DomainSpec, SpectralField

TORUS = DomainSpec.torus(1024)


def random_field(domain, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(domain.xi.size) + 1j * rng.standard_normal(domain.xi.size)
    c[0] = c[0].real
    c[-1] = 0
    return SpectralField(domain, c)


def sine(m, domain=TORUS):
    """Exact single mode sin(m x)."""
    c = np.zeros(domain.xi.size, complex)
    c[m] = -0.5j
    return SpectralField(domain, c)


class TestCutoff:
    def test_mollifier_mass(self):
        exact = mpmath.quad(lambda t: mpmath.exp(-1 / (1 - t * t)), [-1, 0, 1])
        assert _MOLLIFIER_MASS == pytest.approx(float(exact), rel=1e-15)

    @pytest.mark.parametrize("t", [-0.9, -0.5, -0.1, 0.3, 0.77])
    def test_smooth_step_against_mpmath(self, t):
        f = lambda s: mpmath.exp(-1 / (1 - s * s))
        exact = mpmath.quad(f, [-1, t]) / mpmath.quad(f, [-1, 1])
        assert smooth_step(t)[0] == pytest.approx(float(exact), abs=1e-14)

    def test_plateau_and_support_exact(self):
        xi = np.linspace(0, 2, 20001)
        eta = DEFAULT_BUMP.eta(xi)
        assert np.all(eta[xi <= 1.25] == 1.0)
        assert np.all(eta[xi >= 1.6] == 0.0)
        assert np.all(np.diff(eta) <= 0)

    @pytest.mark.parametrize("w", [0.05, 0.1, 0.175])
    def test_sharpness_keeps_constraints(self, w):
        b = make_bump(w)
        assert b.plateau >= 1.25 - 1e-15 and b.support <= 1.6 + 1e-15

    @pytest.mark.parametrize("w", [0.0, -1.0, 0.2])
    def test_sharpness_range(self, w):
        with pytest.raises(ValueError):
            make_bump(w)

    def test_chi_tilde(self):
        assert DEFAULT_BUMP.chi_tilde(1.0) == pytest.approx(1.0)
        xi = np.linspace(0, 3, 3001)
        v = DEFAULT_BUMP.chi_tilde(xi)
        assert np.all(v[(xi <= 0.85) | (xi >= 1.15)] == 0)
        # chi_tilde * chi_0 = chi_tilde: the annulus sits where chi_0 = 1
        assert np.all(DEFAULT_BUMP.chi(0 + 1, 2 * xi[v > 0]) == 1.0)

    def test_chi_at_eight(self):
        vals = {k: float(DEFAULT_BUMP.chi(k, 8.0)) for k in range(1, 8)}
        assert vals[3] == 1.0
        assert all(v == 0.0 for k, v in vals.items() if k != 3)


class TestProjections:
    def test_sine_lives_in_one_block(self):
        f = sine(8)
        assert np.allclose(project(f, 3).coeffs, f.coeffs)
        for k in range(1, k_max(TORUS) + 1):
            if k != 3:
                assert np.max(np.abs(project(f, k).coeffs)) == 0.0

    def test_zero(self):
        assert np.all(project(SpectralField.zeros(TORUS), 2).coeffs == 0)

    def test_range_checked(self):
        top = k_max(TORUS)
        with pytest.raises(ValueError, match=f"k <= {top}"):
            project(sine(1), top + 1)

    @pytest.mark.parametrize("K", [1, 3, 6])
    def test_telescoping(self, K):
        f = random_field(TORUS, K)
        s = project_low(f, 0)
        for k in range(1, K + 1):
            s = s + project(f, k)
        assert np.allclose(s.coeffs, project_low(f, K).coeffs, atol=1e-14)

    def test_projection_keeps_reality(self):
        f = random_field(TORUS, 0)
        p = project(f, 4)
        assert abs(p.coeffs[0].imag) == 0 and p.coeffs[-1] == 0


class TestNorms:
    @pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
    def test_lp_of_constant(self, p):
        d = DomainSpec.line(64, M=3)
        one = SpectralField.from_function(d, lambda x: 1.0 + 0 * x)
        assert lp_norm(one, p) == pytest.approx((2 * math.pi * 3) ** (1 / p))

    def test_lp_of_sine(self):
        assert lp_norm(sine(1, DomainSpec.torus(64)), math.inf) == pytest.approx(1.0)
        assert lp_norm(sine(1), 2) == pytest.approx(math.sqrt(math.pi), rel=1e-10)

    def test_besov_zero(self):
        assert besov_norm(SpectralField.zeros(TORUS), NormSpec(1.5)) == 0

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
    def test_besov_of_single_mode(self, s):
        f = sine(8)
        # direct summation oracle over all k
        total = 0.0
        for k in range(1, k_max(TORUS) + 1):
            total = max(total, 2.0 ** (k * s) * lp_norm(project(f, k), math.inf))
        assert besov_norm(f, NormSpec(s, math.inf, math.inf)) == pytest.approx(2 ** (3 * s))
        assert besov_norm(f, NormSpec(s, math.inf, math.inf)) == pytest.approx(total)

    @given(seed=st.integers(0, 2**31),
           lam=st.one_of(st.just(0.0), st.floats(1e-6, 1e6), st.floats(-1e6, -1e-6)))
    @settings(max_examples=30, deadline=None)
    def test_homogeneity(self, seed, lam):
        f = random_field(TORUS, seed)
        spec = NormSpec(1.5, 2.0, 2.0)
        assert besov_norm(f * lam, spec) == pytest.approx(abs(lam) * besov_norm(f, spec), rel=1e-12, abs=1e-300)

    def test_sobolev_of_constant_and_sine(self):
        c = SpectralField.from_function(TORUS, lambda x: 2.0 + 0 * x)
        assert sobolev_norm(c, 3.0) == pytest.approx(2 * math.sqrt(2 * math.pi))
        for s in (0.0, 1.0, 2.5):
            assert sobolev_norm(sine(1), s) == pytest.approx(math.sqrt(2**s * math.pi))

    def test_sobolev_besov_equivalence(self):
        ratios = [sobolev_norm(f, 1.0) / besov_norm(f, NormSpec(1.0, 2.0, 2.0))
                  for f in (random_field(TORUS, s) for s in range(100))]
        # constants recorded for the default bump
        assert 0.8 < min(ratios) and max(ratios) < 1.6
        assert max(ratios) / min(ratios) < 1.5

    def test_bernstein_constant_stable(self):
        rng_fields = [random_field(DomainSpec.torus(2048), s) for s in range(20)]
        consts = []
        for f in rng_fields:
            inf_low, inf = block_norms(f, math.inf)
            _, two = block_norms(f, 2.0)
            k = np.arange(1, inf.size + 1)
            consts.append(np.max(inf / (2.0 ** (k / 2) * two)))
        assert max(consts) < 1.0
        assert max(consts) / min(consts) < 2.0

    def test_partition_of_unity_on_line(self):
        d = DomainSpec.line(2**12)
        xi = d.xi
        s = DEFAULT_BUMP.chi_low(0, xi) + sum(DEFAULT_BUMP.chi(k, xi) for k in range(1, k_max(d) + 1))
        assert np.max(np.abs(s - 1)) <= 1e-12


class TestLogInterpSides:
    def test_zero(self):
        assert log_interp_sides(SpectralField.zeros(TORUS)) == (0.0, 0.0, 0.0)

    def test_bounded_ratio_over_dyadic_modes(self):
        ratios = []
        for k in range(1, 9):
            lhs, b1, h2 = log_interp_sides(sine(2**k))
            ratios.append(lhs / (b1 * math.log2(2 + h2 * h2) + 1))
        # bounded uniformly in k: the ratio never grows along the family
        assert max(ratios) < 1.0
        assert all(b <= a for a, b in zip(ratios, ratios[1:]))


class TestNormCsv:
    def test_rows(self, tmp_path):
        row = norm_report_row("s8", sine(8), NormSpec(1.0, math.inf, math.inf))
        assert row["k_min"] == 0 and row["k_max"] == k_max(TORUS)
        path = write_norm_csv(tmp_path / "n.csv", [row])
        lines = path.read_text().splitlines()
        assert lines[0] == "field_id,s,p,r,value,k_min,k_max"
        assert lines[1].startswith("s8,1.0,inf,inf,")
