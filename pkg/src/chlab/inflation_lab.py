"""Experiment harness: blow-up bound tables, the norm-inflation K-sweep, and
standalone checkers for the Gronwall-type bound and the logarithmic
interpolation inequality.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from chlab.evolution import (
    ModelSpec,
    SolverConfig,
    TrajectoryRecord,
    from_state,
    integrate,
    step,
    to_state,
)
from chlab.initial_data import (
    SeedSpec,
    build_ch_seed,
    build_h,
    build_novikov_seed,
    max_admissible_K,
    novikov_seed_quadrature,
)
from chlab.littlewood_paley import (
    DEFAULT_BUMP,
    BumpProfile,
    NormSpec,
    block_norms,
    log_interp_sides,
)
from chlab.spectral_core import DomainSpec, SpectralField, derivative

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "BOUND-INCONCLUSIVE"
NOT_APPLICABLE = "NOT-APPLICABLE"


@dataclass
class ExperimentConfig:
    model: ModelSpec = field(default_factory=ModelSpec.ch)
    geometry: str = "torus"
    N: int = 4096
    M: int = 1
    p: float = 2.0
    r: float = 2.0
    eps: float = 1.0
    K_list: tuple = (6, 8, 10, 12)
    solver: SolverConfig = field(default_factory=SolverConfig)
    out_dir: Optional[Path] = None
    margin: float = 0.05
    inflation_threshold: float = 100.0
    tail_tol: float = 1e-6
    stop_at_bound: bool = True
    samples_per_bound: int = 200
    workers: int = 1

    def __post_init__(self):
        self.K_list = tuple(int(k) for k in self.K_list)
        if not self.K_list:
            raise ValueError("K_list must not be empty")
        if any(b <= a for a, b in zip(self.K_list, self.K_list[1:])):
            raise ValueError(f"K_list must be strictly increasing, got {self.K_list}")
        if self.geometry not in ("torus", "line"):
            raise ValueError(f"geometry must be torus or line, got {self.geometry!r}")
        if self.geometry == "torus" and self.M != 1:
            raise ValueError("torus geometry requires M = 1")
        if not self.r > 1.0:
            raise ValueError(f"r must exceed 1, got {self.r}")

    @property
    def domain(self) -> DomainSpec:
        if self.geometry == "torus":
            return DomainSpec.torus(self.N)
        return DomainSpec.line(self.N, self.M)

    @property
    def max_K(self) -> int:
        return max_admissible_K(self.domain)

    def check_admissible(self):
        top = self.max_K
        bad = [k for k in self.K_list if k > top]
        if bad:
            raise ValueError(
                f"K={bad} not admissible for N={self.N}, M={self.M}; admissible maximum is K={top}"
            )


# ---------------------------------------------------------------------------
# blow-up bound


BOUND_FIELDS = ("label", "K", "scale", "g0", "analytic_bound", "T_obs", "ratio", "trigger", "status")


def blowup_bound_row(u0: SpectralField, model: ModelSpec, solver: SolverConfig,
                     margin: float = 0.05, label: str = "", K: int = 0,
                     scale: float = 1.0, norm: NormSpec | None = None):
    """Integrate one odd seed and compare ``T_obs`` with ``2/((b-1)|g(0)|)``."""
    traj, rep = integrate(u0, model, solver, norm)
    bound = rep.analytic_bound
    if rep.trigger != "slope_cap":
        status = INCONCLUSIVE
    elif rep.T_obs <= bound * (1.0 + margin):
        status = PASS
    else:
        status = FAIL
    row = {
        "label": label,
        "K": K,
        "scale": scale,
        "g0": rep.bound_inputs.get("g0", math.nan),
        "analytic_bound": bound,
        "T_obs": rep.T_obs,
        "ratio": rep.T_obs / bound if math.isfinite(bound) else math.nan,
        "trigger": rep.trigger,
        "status": status,
    }
    return row, traj, rep


def write_rows(path, rows, fieldnames) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return path


def _solver_for_bound(config: ExperimentConfig, bound: float) -> SolverConfig:
    solver = config.solver
    if config.stop_at_bound and math.isfinite(bound):
        solver = replace(
            solver,
            horizon=min(solver.horizon, bound * (1.0 + config.margin)),
            sample_interval=min(solver.sample_interval, bound / config.samples_per_bound),
        )
    return solver


def run_blowup_bound(config: ExperimentConfig, scales=(1.0,)):
    """Lacunary seeds for every K (and every scale): ``T_obs`` against the bound.

    Returns the rows; a CSV is written when ``out_dir`` is set.
    """
    if config.model.is_novikov:
        raise ValueError("run_blowup_bound needs a b-family model")
    config.check_admissible()
    domain = config.domain
    rows = []
    for K in config.K_list:
        base, cert = build_ch_seed(SeedSpec(config.eps, config.p, config.r, K), domain=domain)
        for lam in scales:
            u0 = base * lam
            bound = config.model.blowup_bound(cert.slope_at_zero * lam)
            row, traj, _ = blowup_bound_row(
                u0, config.model, _solver_for_bound(config, bound), config.margin,
                label=f"K{K}_s{lam:g}", K=K, scale=lam,
                norm=NormSpec.critical(config.p, config.r),
            )
            rows.append(row)
            if config.out_dir is not None:
                traj.to_csv(Path(config.out_dir) / f"trajectory_{row['label']}.csv")
    if config.out_dir is not None:
        write_rows(Path(config.out_dir) / "blowup_bound.csv", rows, BOUND_FIELDS)
    return rows


# ---------------------------------------------------------------------------
# norm inflation


INFLATION_FIELDS = ("K", "initial_besov", "g0", "analytic_bound", "T_obs", "trigger",
                    "initial_b1", "peak_b1", "inflation", "terminal_tail", "included", "reason")


@dataclass
class InflationVerdict:
    rows: list
    checks: dict
    verdict: str

    def row(self, K: int) -> dict:
        return next(r for r in self.rows if r["K"] == K)


def _inflation_row(args):
    config, K, want_traj = args
    domain = config.domain
    nspec = NormSpec.critical(config.p, config.r)
    u0, cert = build_ch_seed(SeedSpec(config.eps, config.p, config.r, K), domain=domain)
    bound = config.model.blowup_bound(cert.slope_at_zero)
    traj, rep = integrate(u0, config.model, _solver_for_bound(config, bound), nspec)
    b1 = traj.column("b1_inf_inf")
    tail = traj.column("tail")
    reasons = []
    if rep.trigger != "slope_cap":
        reasons.append(f"no blow-up detected (trigger={rep.trigger})")
    if tail.max() > config.tail_tol:
        reasons.append(f"unresolved: spectral tail {tail.max():.2e} > {config.tail_tol:.0e}")
    row = {
        "K": K,
        "initial_besov": cert.besov_value,
        "g0": cert.slope_at_zero,
        "analytic_bound": bound,
        "T_obs": rep.T_obs if rep.trigger == "slope_cap" else math.nan,
        "trigger": rep.trigger,
        "initial_b1": float(b1[0]),
        "peak_b1": float(b1.max()),
        "inflation": float(b1.max() / b1[0]) if b1[0] > 0 else math.inf,
        "terminal_tail": float(tail[-1]),
        "included": not reasons,
        "reason": "; ".join(reasons),
    }
    return K, row, (traj if want_traj else None)


def run_norm_inflation(config: ExperimentConfig, keep_trajectories: bool = False):
    """The K-sweep: initial norms, ``T_obs`` and ``B^1_{inf,inf}`` inflation per K.

    Unresolved runs (spectral tail above ``tail_tol`` or no slope-cap trip)
    are excluded with a reason; the verdict then cannot pass.
    """
    if config.model.is_novikov:
        raise ValueError("the lacunary sweep is defined for b-family models")
    config.check_admissible()
    jobs = [(config, K, keep_trajectories or config.out_dir is not None) for K in config.K_list]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_inflation_row, jobs))
    else:
        results = [_inflation_row(j) for j in jobs]
    by_K = {K: (row, traj) for K, row, traj in results}
    rows = [by_K[K][0] for K in config.K_list]
    trajectories = {K: by_K[K][1] for K in config.K_list}

    included = [r for r in rows if r["included"]]
    T = [r["T_obs"] for r in rows]
    infl = [r["inflation"] for r in rows]
    checks = {
        "initial_norms_le_eps": all(r["initial_besov"] <= config.eps for r in rows),
        "all_runs_included": len(included) == len(rows),
        "T_obs_strictly_decreasing": all(math.isfinite(t) for t in T)
        and all(b < a for a, b in zip(T, T[1:])),
        "inflation_increasing": all(b > a for a, b in zip(infl, infl[1:])),
        "inflation_threshold_met": rows[-1]["included"] and infl[-1] >= config.inflation_threshold,
    }
    verdict = PASS if all(checks.values()) else FAIL
    result = InflationVerdict(rows, checks, verdict)
    if config.out_dir is not None:
        out = Path(config.out_dir)
        write_rows(out / "inflation_verdict.csv", rows, INFLATION_FIELDS)
        for K, traj in trajectories.items():
            traj.to_csv(out / f"trajectory_K{K}.csv")
    if keep_trajectories:
        return result, trajectories
    return result


# ---------------------------------------------------------------------------
# Novikov run


@dataclass
class NovikovRunReport:
    K: int
    r: float
    scale: float
    N: int
    seed_resolved: bool
    seed_mismatch: dict
    criterion_passed: bool
    T_bound: float
    T_obs: float
    trigger: str
    status: str
    reason: str = ""


def run_novikov_blowup(K: int, r: float, domain: DomainSpec, solver: SolverConfig | None = None,
                       scale: float = 1.0, margin: float = 0.05, seed_tol: float = 1e-3,
                       bump: BumpProfile = DEFAULT_BUMP) -> NovikovRunReport:
    """Build the Novikov seed on ``domain``, certify it against the grid-free
    quadrature values, and integrate only if the grid seed is faithful.

    ``status`` is PASS when the run trips the slope cap before
    ``T_bound * (1 + margin)``.
    """
    quad = novikov_seed_quadrature(K, r, scale, bump)
    u0, cert = build_novikov_seed(K, r, scale, bump, domain)
    crit = cert.novikov_criterion
    mismatch = {
        "value_at_zero": abs(cert.value_at_zero - quad.value_at_zero) / abs(quad.value_at_zero),
        "slope_at_zero": abs(cert.slope_at_zero - quad.slope_at_zero) / abs(quad.slope_at_zero),
        "h1_sq": abs(crit.h1_sq - quad.h1_sq) / quad.h1_sq,
    }
    resolved = max(mismatch.values()) <= seed_tol
    base = dict(K=K, r=r, scale=scale, N=domain.N, seed_resolved=resolved, seed_mismatch=mismatch,
                criterion_passed=quad.criterion.passed, T_bound=quad.criterion.T_bound)
    if not quad.criterion.passed:
        return NovikovRunReport(**base, T_obs=math.nan, trigger="", status=NOT_APPLICABLE,
                                reason="criterion not met at this K")
    if not cert.sign_condition_ok:
        return NovikovRunReport(**base, T_obs=math.nan, trigger="", status=NOT_APPLICABLE,
                                reason="sign condition not certified on the grid")
    if not resolved:
        worst = max(mismatch, key=mismatch.get)
        return NovikovRunReport(
            **base, T_obs=math.nan, trigger="", status=FAIL,
            reason=f"seed unresolved on N={domain.N}: relative {worst} mismatch "
                   f"{mismatch[worst]:.2e} > {seed_tol:.0e}; run not attempted",
        )
    solver = solver or SolverConfig()
    solver = replace(solver, horizon=min(solver.horizon, quad.criterion.T_bound * (1 + margin)))
    _, rep = integrate(u0, ModelSpec.novikov(), solver, NormSpec.critical(2.0, r), bump)
    ok = rep.trigger == "slope_cap" and rep.T_obs <= quad.criterion.T_bound * (1 + margin)
    status = PASS if ok else (INCONCLUSIVE if rep.trigger == "horizon" else FAIL)
    return NovikovRunReport(**base, T_obs=rep.T_obs, trigger=rep.trigger, status=status)


# ---------------------------------------------------------------------------
# Gronwall-type bound


@dataclass
class GronwallReport:
    passed: bool
    inconclusive: bool
    max_log_ratio: float
    t: np.ndarray
    A: np.ndarray
    bound: np.ndarray


def gronwall_verify(A0: float, B: float, T: float, samples: int = 2001,
                    factor: float = 1.0) -> GronwallReport:
    """Solve ``A' = factor * B * A * ln(2 + A)`` and check ``A(t) <= (2 + A0)^(e^(Bt))``.

    ``factor = 1`` is the equality case; ``factor < 1`` a sub-solution.  The
    comparison is carried out on logarithms so large exponents stay finite.
    """
    if not A0 > 0:
        raise ValueError("A0 must be positive")
    if B < 0 or not T > 0:
        raise ValueError("B must be non-negative and T positive")
    t = np.linspace(0.0, T, samples)
    # z = ln A:  z' = factor * B * ln(2 + e^z)
    sol = solve_ivp(lambda _, z: factor * B * np.logaddexp(math.log(2.0), z),
                    (0.0, T), [math.log(A0)], method="DOP853", t_eval=t,
                    rtol=1e-12, atol=1e-12)
    if not sol.success:
        return GronwallReport(False, True, math.nan, t, np.full_like(t, np.nan), np.full_like(t, np.nan))
    logA = sol.y[0]
    log_bound = np.exp(B * t) * math.log(2.0 + A0)
    # relative slack for the integrator tolerance
    diff = logA - log_bound
    passed = bool(np.all(diff <= 1e-9 * np.maximum(1.0, np.abs(log_bound))))
    with np.errstate(over="ignore"):
        A, bound = np.exp(logA), np.exp(log_bound)
    return GronwallReport(passed, False, float(np.max(diff)), t, A, bound)


# ---------------------------------------------------------------------------
# logarithmic interpolation


@dataclass
class LogInterpRow:
    kind: str
    label: str
    lhs: float
    b1: float
    h2: float
    C: float
    split_N: int
    low_ratio: float
    high_sum: float


@dataclass
class LogInterpReport:
    rows: list
    C_sup: float
    low_ratio_sup: float
    high_sum_sup: float

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.C_sup, self.low_ratio_sup, self.high_sum_sup))


def log_interp_family(size: int = 300, seed: int = 0, N: int = 1024) -> list:
    """Fields of three kinds in equal thirds: single modes, lacunary sums,
    and random band-limited fields with random amplitude and decay."""
    domain = DomainSpec.torus(N)
    rng = np.random.default_rng(seed)
    n_mode = size // 3
    n_lac = size // 3
    n_rand = size - n_mode - n_lac
    top = domain.dealias_index
    family = []
    modes = np.unique(np.geomspace(1, top, n_mode).astype(int))
    extra = rng.choice(np.setdiff1d(np.arange(1, top + 1), modes), n_mode - modes.size, replace=False)
    for m in np.sort(np.concatenate([modes, extra])):
        amp = 10.0 ** rng.uniform(-2, 2)
        family.append(("mode", f"sin{m}", SpectralField.from_function(domain, lambda x, m=m, a=amp: a * np.sin(m * x))))
    Kmax = max_admissible_K(domain)
    for i in range(n_lac):
        K = 1 + i % Kmax
        r = [1.5, 2.0, 4.0, math.inf][(i // Kmax) % 4]
        amp = 10.0 ** rng.uniform(-2, 2)
        family.append(("lacunary", f"h_K{K}_r{r:g}_{i}", build_h(r, K, DEFAULT_BUMP, domain) * amp))
    xi = domain.xi
    for i in range(n_rand):
        band = rng.integers(2, top + 1)
        decay = rng.uniform(0.0, 3.0)
        c = (rng.standard_normal(xi.size) + 1j * rng.standard_normal(xi.size)) / (1.0 + xi) ** decay
        c[band + 1:] = 0.0
        c[0] = c[0].real
        c[-1] = 0.0
        f = SpectralField(domain, c)
        amp = 10.0 ** rng.uniform(-2, 2) / max(np.max(np.abs(f.values())), 1e-300)
        family.append(("random", f"rand{i}", f * amp))
    return family


def _split_terms(u: SpectralField, h2: float, b1: float, bump: BumpProfile):
    """Split the derivative blocks at ``N = log2(2 + ||u||_{H^2}^2)``: blocks below
    ``N`` are bounded by ``N * ||u||_{B^1_{inf,inf}}``, those above by a
    Bernstein sum that stays bounded."""
    Nsplit = int(math.ceil(math.log2(2.0 + h2 * h2)))
    low_inf, dx_inf = block_norms(derivative(u, 1), math.inf, bump)
    k = np.arange(1, dx_inf.size + 1)
    low = low_inf + float(np.sum(dx_inf[k < Nsplit]))
    high = float(np.sum(dx_inf[k >= Nsplit]))
    low_ratio = low / ((Nsplit + 1) * b1) if b1 > 0 else 0.0
    return Nsplit, low_ratio, high


def log_interp_verify(family=None, size: int = 300, seed: int = 0,
                      bump: BumpProfile = DEFAULT_BUMP) -> LogInterpReport:
    """Per field, the smallest ``C`` with
    ``||u_x||_inf <= C ||u||_{B^1_{inf,inf}} log2(2 + ||u||_{H^2}^2) + C``; the
    supremum over the family is the calibrated constant."""
    if family is None:
        family = log_interp_family(size, seed)
    rows = []
    for kind, label, u in family:
        lhs, b1, h2 = log_interp_sides(u, bump)
        C = lhs / (b1 * math.log2(2.0 + h2 * h2) + 1.0)
        Ns, low_ratio, high = _split_terms(u, h2, b1, bump)
        rows.append(LogInterpRow(kind, label, lhs, b1, h2, C, Ns, low_ratio, high))
    if not rows:
        return LogInterpReport(rows, 0.0, 0.0, 0.0)
    return LogInterpReport(
        rows,
        C_sup=max(r.C for r in rows),
        low_ratio_sup=max(r.low_ratio for r in rows),
        high_sum_sup=max(r.high_sum for r in rows),
    )


# ---------------------------------------------------------------------------
# antisymmetry


@dataclass
class AntisymmetryReport:
    max_rel_defect: float
    max_rel_uxx0: float
    applicable: bool
    status: str


def antisymmetry_audit(traj: TrajectoryRecord, tol: float = 1e-8) -> AntisymmetryReport:
    """Largest oddness defect relative to ``||u||_inf`` and largest
    ``|u_xx(t,0)|`` relative to ``||u||_{H^2}`` over the samples."""
    amp = traj.column("linf_u")
    h2 = traj.column("h2")
    defect = traj.column("odd_defect")
    uxx0 = np.abs(traj.column("uxx0"))
    rel_def = np.where(amp > 0, defect / np.where(amp > 0, amp, 1.0), 0.0)
    rel_uxx = np.where(h2 > 0, uxx0 / np.where(h2 > 0, h2, 1.0), 0.0)
    md, mu = float(rel_def.max(initial=0.0)), float(rel_uxx.max(initial=0.0))
    if md > 1e-3:
        return AntisymmetryReport(md, mu, False, NOT_APPLICABLE)
    ok = md <= tol and mu <= tol
    return AntisymmetryReport(md, mu, True, PASS if ok else FAIL)


def mirror(u: SpectralField) -> SpectralField:
    """``x -> -u(-x)``; in Fourier space the coefficients become ``-conj(c)``."""
    return SpectralField(u.domain, -np.conj(u.coeffs))


def mirror_twin_check(u0: SpectralField, model: ModelSpec, dt: float, steps: int) -> float:
    """Evolve ``u0`` and its mirror with identical fixed steps; return the
    largest grid difference between ``mirror(u(t))`` and the mirrored run.

    Only the b-family is invariant under the mirror; the cubic Novikov flow
    is not, so it is rejected.
    """
    if model.is_novikov:
        raise ValueError("x -> -u(-x) is not a symmetry of the Novikov equation")
    a = to_state(u0, model)
    b = to_state(mirror(u0), model)
    worst = 0.0
    for _ in range(steps):
        a = step(a, dt, model)
        b = step(b, dt, model)
        ua, ub = from_state(a, model), from_state(b, model)
        worst = max(worst, float(np.max(np.abs(mirror(ua).values() - ub.values()))))
    return worst
