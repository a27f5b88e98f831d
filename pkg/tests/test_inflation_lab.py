import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chlab.evolution import ModelSpec, SolverConfig, integrate
from chlab.inflation_lab import (
    FAIL,
    INCONCLUSIVE,
    NOT_APPLICABLE,
    PASS,
    ExperimentConfig,
    antisymmetry_audit,
    gronwall_verify,
    log_interp_family,
    log_interp_verify,
    mirror,
    mirror_twin_check,
    run_blowup_bound,
    run_norm_inflation,
    run_novikov_blowup,
)
from chlab.spectral_core import DomainSpec, SpectralField, eval_at, oddness_defect


class TestGronwall:
    def test_constant_when_B_zero(self):
        rep = gronwall_verify(5.0, 0.0, 1.0, samples=11)
        assert rep.passed and np.allclose(rep.A, 5.0, rtol=1e-12)
        assert np.allclose(rep.bound, 7.0)

    @pytest.mark.parametrize("factor", [1.0, 0.5, 0.0])
    def test_solution_and_subsolutions_stay_below(self, factor):
        rep = gronwall_verify(1.0, 2.0, 1.5, factor=factor)
        assert rep.passed and not rep.inconclusive
        assert rep.max_log_ratio <= 0

    def test_supersolution_breaks_the_bound(self):
        assert not gronwall_verify(1.0, 2.0, 1.0, factor=3.0).passed

    @given(A0=st.floats(1e-3, 1e6), B=st.floats(0.0, 5.0), T=st.floats(0.01, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_property(self, A0, B, T):
        assert gronwall_verify(A0, B, T, samples=51).passed

    def test_large_exponents_stay_finite(self):
        rep = gronwall_verify(1e6, 10.0, 3.0, samples=21)
        assert rep.passed and math.isfinite(rep.max_log_ratio)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)])
    def test_rejects_bad_input(self, args):
        with pytest.raises(ValueError):
            gronwall_verify(*args)


class TestLogInterpolation:
    def test_family_in_thirds(self):
        fam = log_interp_family(size=30, seed=1, N=256)
        kinds = [k for k, _, _ in fam]
        assert len(fam) == 30
        assert kinds.count("mode") == kinds.count("lacunary") == kinds.count("random") == 10

    def test_family_is_reproducible(self):
        a = log_interp_family(size=12, seed=5, N=256)
        b = log_interp_family(size=12, seed=5, N=256)
        assert all(np.array_equal(fa.coeffs, fb.coeffs) for (_, _, fa), (_, _, fb) in zip(a, b))

    def test_constant_finite_and_bounded(self):
        rep = log_interp_verify(log_interp_family(size=60, seed=2, N=512))
        assert rep.finite
        assert 0 < rep.C_sup < 1.0
        # the low-frequency piece is controlled by N times the Besov norm
        assert rep.low_ratio_sup <= 1.0 + 1e-12

    def test_empty_family(self):
        rep = log_interp_verify([])
        assert rep.rows == [] and rep.C_sup == 0.0


class TestAntisymmetry:
    def test_mirror_is_an_involution(self):
        d = DomainSpec.torus(64)
        rng = np.random.default_rng(0)
        c = rng.standard_normal(33) + 1j * rng.standard_normal(33)
        c[0], c[-1] = c[0].real, 0
        u = SpectralField(d, c)
        assert np.array_equal(mirror(mirror(u)).coeffs, u.coeffs)
        x = d.x_signed[1:8]
        assert np.allclose(eval_at(mirror(u), x), -eval_at(u, -x), atol=1e-12)

    def test_odd_fields_are_fixed(self):
        u = SpectralField.from_function(DomainSpec.torus(64), lambda x: np.sin(x) - 0.3 * np.sin(4 * x))
        assert np.max(np.abs(mirror(u).coeffs - u.coeffs)) < 1e-15
        assert oddness_defect(u) < 1e-15

    @pytest.mark.parametrize("model", [ModelSpec.ch(), ModelSpec.dp(), ModelSpec("b-family", 1.5)])
    def test_mirror_twin_for_non_odd_data(self, model):
        u0 = SpectralField.from_function(DomainSpec.torus(128),
                                         lambda x: 0.4 * np.cos(x) + 0.2 * np.sin(2 * x))
        assert mirror_twin_check(u0, model, 1e-2, 50) < 1e-12

    def test_mirror_twin_refuses_novikov(self):
        u0 = SpectralField.from_function(DomainSpec.torus(64), np.cos)
        with pytest.raises(ValueError, match="not a symmetry"):
            mirror_twin_check(u0, ModelSpec.novikov(), 1e-2, 1)

    def test_audit_pass_for_odd_run(self):
        u0 = SpectralField.from_function(DomainSpec.torus(256), lambda x: -2.0 * np.sin(x))
        traj, _ = integrate(u0, ModelSpec.ch(), SolverConfig(sample_interval=0.05, horizon=0.3))
        rep = antisymmetry_audit(traj)
        assert rep.applicable and rep.status == PASS
        assert rep.max_rel_defect < 1e-14

    def test_audit_not_applicable_for_non_odd_run(self):
        u0 = SpectralField.from_function(DomainSpec.torus(256), lambda x: np.cos(x))
        traj, _ = integrate(u0, ModelSpec.ch(), SolverConfig(sample_interval=0.05, horizon=0.2))
        rep = antisymmetry_audit(traj)
        assert not rep.applicable and rep.status == NOT_APPLICABLE


class TestExperimentConfig:
    @pytest.mark.parametrize("kw, msg", [
        ({"K_list": ()}, "must not be empty"),
        ({"K_list": (4, 4)}, "strictly increasing"),
        ({"geometry": "sphere"}, "torus or line"),
        ({"M": 4}, "M = 1"),
        ({"r": 1.0}, "r must exceed 1"),
    ])
    def test_validation(self, kw, msg):
        with pytest.raises(ValueError, match=msg):
            ExperimentConfig(**kw)

    def test_admissibility_message(self):
        cfg = ExperimentConfig()
        assert cfg.max_K == 10
        with pytest.raises(ValueError, match=r"K=\[12\] not admissible.*maximum is K=10"):
            cfg.check_admissible()

    def test_line_domain(self):
        cfg = ExperimentConfig(geometry="line", N=2**12, M=8)
        assert cfg.domain.L == pytest.approx(16 * math.pi)

    def test_sweeps_refuse_novikov(self):
        cfg = ExperimentConfig(model=ModelSpec.novikov(), K_list=(2,))
        with pytest.raises(ValueError):
            run_norm_inflation(cfg)
        with pytest.raises(ValueError):
            run_blowup_bound(cfg)


class TestBlowupBoundTable:
    @pytest.fixture(scope="class")
    @staticmethod
    def rows(tmp_path_factory):
        out = tmp_path_factory.mktemp("bound")
        cfg = ExperimentConfig(N=1024, eps=20.0, K_list=(3,), out_dir=out,
                               solver=SolverConfig(slope_cap=100.0))
        return run_blowup_bound(cfg, scales=(0.5, 2.0)), out

    def test_statuses(self, rows):
        rows, _ = rows
        half, double = rows
        # the doubled seed blows up before the bound; the halved one saturates
        assert double["status"] == PASS and double["T_obs"] < double["analytic_bound"]
        assert half["status"] == INCONCLUSIVE and half["trigger"] == "horizon"

    def test_bound_scales_inversely(self, rows):
        rows, _ = rows
        half, double = rows
        assert double["g0"] == pytest.approx(4 * half["g0"])
        assert half["analytic_bound"] == pytest.approx(4 * double["analytic_bound"])

    def test_csv_written(self, rows):
        rows, out = rows
        with (out / "blowup_bound.csv").open() as fh:
            read = list(csv.DictReader(fh))
        assert [r["label"] for r in read] == ["K3_s0.5", "K3_s2"]
        assert (out / "trajectory_K3_s2.csv").exists()


class TestNormInflation:
    @pytest.fixture(scope="class")
    @staticmethod
    def sweep(tmp_path_factory):
        out = tmp_path_factory.mktemp("sweep")
        cfg = ExperimentConfig(N=512, K_list=(2, 3), out_dir=out, solver=SolverConfig(slope_cap=100.0))
        return run_norm_inflation(cfg, keep_trajectories=True), out

    def test_unresolved_runs_are_excluded_with_reasons(self, sweep):
        (verdict, trajs), _ = sweep
        assert verdict.verdict == FAIL
        assert verdict.checks["initial_norms_le_eps"]
        assert not verdict.checks["all_runs_included"]
        for row in verdict.rows:
            assert not row["included"]
            assert "trigger=horizon" in row["reason"]
            assert math.isnan(row["T_obs"])

    def test_outputs(self, sweep):
        (verdict, trajs), out = sweep
        assert set(trajs) == {2, 3}
        assert verdict.row(3)["K"] == 3
        assert (out / "inflation_verdict.csv").exists()
        assert (out / "trajectory_K2.csv").exists()


def test_novikov_run_not_attempted_below_threshold():
    rep = run_novikov_blowup(4, 2.0, DomainSpec.line(2**14))
    assert rep.status == NOT_APPLICABLE and not rep.criterion_passed
    assert rep.reason == "criterion not met at this K"
    assert math.isnan(rep.T_obs)
