"""Time integration of the b-family and Novikov equations with blow-up detection.

b-family (CH is b = 2, DP is b = 3), nonlocal form::

    u_t = -u u_x - d_x (1 - d_x^2)^{-1} [ (b/2) u^2 + ((3-b)/2) u_x^2 ]

Novikov, evolved through its momentum ``y = u - u_xx``::

    y_t = -u^2 y_x - 3 y u_x u,     u = (1 - d_x^2)^{-1} y

Products are formed on the grid and truncated with the 2/3 rule; the cubic
Novikov products are only partially alias-free under that rule, which is
compensated by keeping seeds well inside the band.  Time stepping is classical
RK4 with ``dt = cfl * dx / max(1, ||u||_inf)`` (``||u||_inf^2`` for Novikov),
halved each time the peak slope doubles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft

from chlab.littlewood_paley import DEFAULT_BUMP, BumpProfile, NormSpec, besov_norm, sobolev_norm
from chlab.spectral_core import (
    DomainSpec,
    SpectralField,
    eval_at,
    green_convolve,
    oddness_defect,
    reflect,
)

B_FAMILY = "b-family"
NOVIKOV = "novikov"


@dataclass(frozen=True)
class ModelSpec:
    kind: str = B_FAMILY
    b: float = 2.0

    def __post_init__(self):
        if self.kind not in (B_FAMILY, NOVIKOV):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == B_FAMILY and not (1.0 < self.b <= 3.0):
            raise ValueError(f"b must lie in (1, 3], got {self.b}")

    @classmethod
    def ch(cls):
        return cls(B_FAMILY, 2.0)

    @classmethod
    def dp(cls):
        return cls(B_FAMILY, 3.0)

    @classmethod
    def novikov(cls):
        return cls(NOVIKOV, math.nan)

    @property
    def is_novikov(self) -> bool:
        return self.kind == NOVIKOV

    @property
    def name(self) -> str:
        if self.is_novikov:
            return "novikov"
        return {2.0: "ch", 3.0: "dp"}.get(self.b, f"b={self.b:g}")

    def blowup_bound(self, g0: float) -> float:
        """Lifespan bound ``2 / ((b-1) |u0'(0)|)`` for odd b-family data."""
        if self.is_novikov or not g0 < 0:
            return math.inf
        return 2.0 / ((self.b - 1.0) * abs(g0))


@dataclass
class SolverConfig:
    dt_init: Optional[float] = None
    cfl_safety: float = 0.5
    slope_cap: float = 1e3
    dt_floor: float = 1e-10
    sample_interval: float = 1e-2
    horizon: float = 10.0
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not self.dt_floor > 0:
            raise ValueError("dt_floor must be positive")
        if not self.slope_cap >= 1e2:
            raise ValueError(f"slope_cap must be >= 100, got {self.slope_cap}")
        if not self.sample_interval > 0 or not self.horizon > 0:
            raise ValueError("sample_interval and horizon must be positive")


TRAJECTORY_COLUMNS = ("t", "E", "g", "min_ux", "linf_ux", "h2", "b1_inf_inf", "b_spr", "odd_defect")


@dataclass
class Sample:
    t: float
    E: float
    g: float
    min_ux: float
    linf_ux: float
    h2: float
    b1_inf_inf: float
    b_spr: float
    odd_defect: float
    # not part of the CSV schema
    linf_u: float = 0.0
    uxx0: float = 0.0
    forcing0: float = 0.0
    tail: float = 0.0
    dt: float = 0.0


@dataclass
class TrajectoryRecord:
    samples: list = field(default_factory=list)
    uniform_interval: float = 0.0

    def append(self, s: Sample):
        if self.samples and not s.t > self.samples[-1].t:
            raise ValueError("trajectory times must be strictly increasing")
        self.samples.append(s)

    def __len__(self):
        return len(self.samples)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_COLUMNS)
            for s in self.samples:
                w.writerow([repr(float(getattr(s, c))) for c in TRAJECTORY_COLUMNS])
        return path

    @classmethod
    def from_csv(cls, path) -> "TrajectoryRecord":
        rec = cls()
        with Path(path).open() as fh:
            for row in csv.DictReader(fh):
                rec.append(Sample(**{c: float(row[c]) for c in TRAJECTORY_COLUMNS}))
        return rec


@dataclass
class BlowupReport:
    T_obs: float
    trigger: str
    terminal: Sample
    analytic_bound: float
    bound_name: str
    bound_inputs: dict
    steps: int
    periodization_error: float
    model: str

    def as_dict(self) -> dict:
        d = {
            "model": self.model,
            "T_obs": self.T_obs,
            "trigger": self.trigger,
            "analytic_bound": self.analytic_bound,
            "bound_name": self.bound_name,
            "steps": self.steps,
            "periodization_error": self.periodization_error,
        }
        d.update({f"bound_{k}": v for k, v in self.bound_inputs.items()})
        d.update({f"terminal_{f.name}": getattr(self.terminal, f.name) for f in fields(Sample)})
        return d

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                       for k, v in self.as_dict().items())


# ---------------------------------------------------------------------------
# right-hand sides on raw half spectra


class _Ops:
    """Per-domain symbols and masks shared by the right-hand sides."""

    def __init__(self, domain: DomainSpec):
        self.domain = domain
        self.N = domain.N
        xi = domain.xi
        self.ik = 1j * xi
        self.inv_helm = 1.0 / (1.0 + xi**2)
        self.mask = np.zeros(xi.size)
        self.mask[: domain.dealias_index + 1] = 1.0
        self.scaled_mask = self.mask / self.N

    def to_grid(self, c):
        return sfft.irfft(c * self.N, n=self.N)

    def to_coeffs(self, v):
        return sfft.rfft(v) * self.scaled_mask


def _rhs_bfamily(c, ops: _Ops, b: float):
    u = ops.to_grid(c)
    ux = ops.to_grid(ops.ik * c)
    adv = ops.to_coeffs(u * ux)
    q = ops.to_coeffs(0.5 * b * u * u + 0.5 * (3.0 - b) * ux * ux)
    return -adv - ops.ik * ops.inv_helm * q, ux


def _rhs_novikov(c, ops: _Ops):
    # c holds the momentum y
    uc = c * ops.inv_helm
    u = ops.to_grid(uc)
    ux = ops.to_grid(ops.ik * uc)
    y = ops.to_grid(c)
    yx = ops.to_grid(ops.ik * c)
    return ops.to_coeffs(-u * (u * yx + 3.0 * y * ux)), ux


def _rhs_novikov_uform(c, ops: _Ops):
    u = ops.to_grid(c)
    ux = ops.to_grid(ops.ik * c)
    uxx = ops.to_grid(ops.ik**2 * c)
    uxxx = ops.to_grid(ops.ik**3 * c)
    f = ops.to_coeffs(-4.0 * u * u * ux + 3.0 * u * ux * uxx + u * u * uxxx)
    return f * ops.inv_helm, ux


def _state_rhs(model: ModelSpec, ops: _Ops) -> Callable:
    if model.is_novikov:
        return lambda c: _rhs_novikov(c, ops)
    return lambda c: _rhs_bfamily(c, ops, model.b)


def rhs(u: SpectralField, model: ModelSpec) -> SpectralField:
    """Time derivative of ``u``.

    For Novikov the argument and the result are the momentum ``y`` and
    ``y_t``; see :func:`to_state` / :func:`from_state`.
    """
    ops = _Ops(u.domain)
    out, _ = _state_rhs(model, ops)(u.coeffs * ops.mask)
    return SpectralField(u.domain, out)


def rhs_novikov_uform(u: SpectralField) -> SpectralField:
    """``u_t`` from the local form ``(1 - d_x^2) u_t = -4u^2u_x + 3uu_xu_xx + u^2u_xxx``."""
    ops = _Ops(u.domain)
    out, _ = _rhs_novikov_uform(u.coeffs * ops.mask, ops)
    return SpectralField(u.domain, out)


def to_state(u: SpectralField, model: ModelSpec) -> SpectralField:
    """Solution ``u`` to the evolved variable (``y = u - u_xx`` for Novikov)."""
    if model.is_novikov:
        return SpectralField(u.domain, u.coeffs * (1.0 + u.domain.xi**2))
    return u


def from_state(state: SpectralField, model: ModelSpec) -> SpectralField:
    if model.is_novikov:
        return SpectralField(state.domain, state.coeffs / (1.0 + state.domain.xi**2))
    return state


def _rk4(c, dt, f):
    k1, ux = f(c)
    k2, _ = f(c + 0.5 * dt * k1)
    k3, _ = f(c + 0.5 * dt * k2)
    k4, _ = f(c + dt * k3)
    return c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), ux


def step(u: SpectralField, dt: float, model: ModelSpec) -> SpectralField:
    """One classical RK4 step of the evolved variable; dealiased per stage."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    ops = _Ops(u.domain)
    c, _ = _rk4(u.coeffs * ops.mask, dt, _state_rhs(model, ops))
    return SpectralField(u.domain, c)


def step_novikov_uform(u: SpectralField, dt: float) -> SpectralField:
    ops = _Ops(u.domain)
    c, _ = _rk4(u.coeffs * ops.mask, dt, lambda c: _rhs_novikov_uform(c, ops))
    return SpectralField(u.domain, c)


# ---------------------------------------------------------------------------
# diagnostics


def energy(u: SpectralField) -> float:
    """``E(u) = int u^2 + u_x^2``."""
    return sobolev_norm(u, 1.0) ** 2


def forcing(u: SpectralField, model: ModelSpec) -> SpectralField:
    """``(b/2) u^2 + ((3-b)/2) u_x^2`` (dealiased)."""
    ops = _Ops(u.domain)
    v = ops.to_grid(u.coeffs)
    vx = ops.to_grid(ops.ik * u.coeffs)
    b = model.b
    return SpectralField(u.domain, ops.to_coeffs(0.5 * b * v * v + 0.5 * (3.0 - b) * vx * vx))


def spectral_tail(c: np.ndarray, domain: DomainSpec) -> float:
    """Largest coefficient in the top third of the retained band relative to
    the largest coefficient overall."""
    top = domain.dealias_index
    peak = float(np.max(np.abs(c[1:]), initial=0.0))
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(c[(2 * top) // 3 : top + 1]))) / peak


def sample_diagnostics(u: SpectralField, t: float, model: ModelSpec,
                       norm: NormSpec, bump: BumpProfile = DEFAULT_BUMP) -> Sample:
    ops = _Ops(u.domain)
    c = u.coeffs
    v = ops.to_grid(c)
    ux = ops.to_grid(ops.ik * c)
    g = -2.0 * float(np.sum(u.domain.xi[1:] * c[1:].imag))
    uxx0 = -2.0 * float(np.sum(u.domain.xi[1:] ** 2 * c[1:].real))
    forcing0 = 0.0 if model.is_novikov else eval_at(green_convolve(forcing(u, model)), 0.0)
    return Sample(
        t=float(t),
        E=energy(u),
        g=g,
        min_ux=float(np.min(ux)),
        linf_ux=float(np.max(np.abs(ux))),
        h2=sobolev_norm(u, 2.0),
        b1_inf_inf=besov_norm(u, NormSpec(1.0, math.inf, math.inf), bump),
        b_spr=besov_norm(u, norm, bump),
        odd_defect=float(np.max(np.abs(v + reflect(v)))),
        linf_u=float(np.max(np.abs(v))),
        uxx0=uxx0,
        forcing0=float(forcing0),
        tail=spectral_tail(c, u.domain),
    )


# ---------------------------------------------------------------------------
# driver


def analytic_bound_for(u0: SpectralField, model: ModelSpec, odd_tol: float = 1e-10):
    """The applicable lifespan bound, its name and inputs."""
    from chlab.initial_data import check_sign_pattern, novikov_blowup_check, slope_at_zero

    if model.is_novikov:
        y0 = to_state(u0, model).values()
        sign_ok = check_sign_pattern(np.where(np.abs(y0) < 1e-13 * max(1.0, np.max(np.abs(y0))), 0.0, y0),
                                     u0.domain.x_signed)
        crit = novikov_blowup_check(u0, sign_ok)
        return crit.T_bound, "novikov_min_bound", {
            "m0": crit.m0, "h1_sq": crit.h1_sq, "delta": crit.delta,
            "sign_ok": sign_ok, "criterion_passed": crit.passed,
        }
    g0 = slope_at_zero(u0)
    amp = max(1.0, float(np.max(np.abs(u0.values()))))
    odd = oddness_defect(u0) <= odd_tol * amp
    bound = model.blowup_bound(g0) if odd else math.inf
    return bound, "riccati_2_over_(b-1)|g0|", {"g0": g0, "b": model.b, "odd": odd}


def integrate(u0: SpectralField, model: ModelSpec, config: SolverConfig | None = None,
              norm: NormSpec | None = None, bump: BumpProfile = DEFAULT_BUMP,
              on_sample: Callable | None = None):
    """Integrate from ``u0`` until the slope cap, the dt floor or the horizon.

    Returns ``(TrajectoryRecord, BlowupReport)``; the trajectory is returned
    in full whichever trigger fired.
    """
    config = config or SolverConfig()
    norm = norm or NormSpec.critical(2.0, 2.0)
    domain = u0.domain
    ops = _Ops(domain)
    f = _state_rhs(model, ops)
    bound, bound_name, bound_inputs = analytic_bound_for(u0, model)

    c = to_state(u0, model).coeffs * ops.mask
    traj = TrajectoryRecord(uniform_interval=config.sample_interval)

    def current_u(cc):
        return from_state(SpectralField(domain, cc), model)

    def record(cc, t, dt):
        s = sample_diagnostics(current_u(cc), t, model, norm, bump)
        s.dt = dt
        traj.append(s)
        if on_sample is not None:
            on_sample(s, current_u(cc))
        return s

    first = record(c, 0.0, 0.0)
    slope_ref = max(first.linf_ux, 1.0)
    halvings = 0
    t = 0.0
    n_sample = 1
    steps = 0
    trigger = "horizon"
    slope = first.linf_ux
    amp = first.linf_u
    dt_user = config.dt_init

    while True:
        if slope >= config.slope_cap:
            trigger = "slope_cap"
            break
        if t >= config.horizon * (1 - 1e-14):
            trigger = "horizon"
            break
        if steps >= config.max_steps:
            trigger = "horizon"
            break
        speed = amp * amp if model.is_novikov else amp
        dt = config.cfl_safety * domain.dx / max(1.0, speed)
        if dt_user is not None:
            dt = min(dt, dt_user)
        while slope >= 2.0 ** (halvings + 1) * slope_ref:
            halvings += 1
        dt *= 0.5**halvings
        if dt < config.dt_floor:
            trigger = "dt_floor"
            break
        t_next = n_sample * config.sample_interval
        landing = t + dt >= t_next * (1 - 1e-12)
        if landing:
            dt = t_next - t
        dt = min(dt, config.horizon - t)
        with np.errstate(all="ignore"):
            c_new, _ = _rk4(c, dt, f)
        if not np.all(np.isfinite(c_new)):
            trigger = "dt_floor"
            break
        c = c_new
        t = t_next if landing else t + dt
        steps += 1
        with np.errstate(all="ignore"):
            uc = c * ops.inv_helm if model.is_novikov else c
            ux = ops.to_grid(ops.ik * uc)
            slope = float(np.max(np.abs(ux)))
            amp = float(np.max(np.abs(ops.to_grid(uc))))
        if not (math.isfinite(slope) and math.isfinite(amp)):
            trigger = "dt_floor"
            break
        if landing:
            n_sample += 1
            if slope < config.slope_cap:
                record(c, t, dt)

    if traj.samples[-1].t < t:
        try:
            record(c, t, dt)
        except FloatingPointError:
            pass
    report = BlowupReport(
        T_obs=t,
        trigger=trigger,
        terminal=traj.samples[-1],
        analytic_bound=bound,
        bound_name=bound_name,
        bound_inputs=bound_inputs,
        steps=steps,
        periodization_error=domain.periodization_error(),
        model=model.name,
    )
    return traj, report


# ---------------------------------------------------------------------------
# post-hoc checks


def resolved_window(traj: TrajectoryRecord, tail_tol: float = 1e-10) -> np.ndarray:
    """Indices of uniform samples taken before the spectral tail first exceeds
    ``tail_tol``."""
    tail = traj.column("tail")
    t = traj.column("t")
    h = traj.uniform_interval
    uniform = np.isclose(t / h, np.round(t / h), rtol=0, atol=1e-6) if h > 0 else np.ones(t.size, bool)
    bad = np.nonzero(tail > tail_tol)[0]
    end = bad[0] if bad.size else t.size
    idx = np.arange(end)
    return idx[uniform[:end]]


@dataclass
class SlopeResidual:
    applicable: bool
    t: np.ndarray
    residual: np.ndarray
    gdot: np.ndarray
    max_abs: float
    reason: str = ""


def slope_ode_residual(traj: TrajectoryRecord, model: ModelSpec,
                       window: np.ndarray | None = None,
                       odd_tol: float = 1e-8) -> SlopeResidual:
    """Residual ``g' + ((b-1)/2) g^2 + (p * f)(0)`` along the samples.

    ``g' `` comes from centred differences of the sampled slope; the
    convolution term was recorded at sample time through the Green kernel.
    """
    empty = np.zeros(0)
    if model.is_novikov:
        return SlopeResidual(False, empty, empty, empty, math.nan, "novikov model")
    amp = np.maximum(traj.column("linf_u"), 1e-300)
    if np.any(traj.column("odd_defect") > odd_tol * np.maximum(amp, 1.0)):
        return SlopeResidual(False, empty, empty, empty, math.nan, "data not odd")
    if window is None:
        window = resolved_window(traj)
    t = traj.column("t")[window]
    g = traj.column("g")[window]
    f0 = traj.column("forcing0")[window]
    if t.size < 3:
        return SlopeResidual(True, empty, empty, empty, 0.0, "fewer than 3 samples")
    gdot = (g[2:] - g[:-2]) / (t[2:] - t[:-2])
    res = gdot + 0.5 * (model.b - 1.0) * g[1:-1] ** 2 + f0[1:-1]
    return SlopeResidual(True, t[1:-1], res, gdot, float(np.max(np.abs(res))))


@dataclass
class H2GrowthReport:
    C_fit: float
    ratios: np.ndarray
    t: np.ndarray
    holds: bool


def energy_h2_bound_check(traj: TrajectoryRecord, model: ModelSpec,
                          window: np.ndarray | None = None,
                          C_fit: float | None = None) -> H2GrowthReport:
    """Check ``d/dt ||u||_{H^2}^2 <= C ||u_x||_inf ||u||_{H^2}^2`` along samples
    (Novikov: ``C ||u||_inf ||u_x||_inf ||u||_{H^2}^2``).

    With ``C_fit=None`` the smallest constant valid on the window is
    reported; otherwise the given constant is tested.
    """
    if window is None:
        window = resolved_window(traj)
    t = traj.column("t")[window]
    h2sq = traj.column("h2")[window] ** 2
    slope = traj.column("linf_ux")[window]
    if model.is_novikov:
        slope = slope * traj.column("linf_u")[window]
    if t.size < 3:
        return H2GrowthReport(0.0, np.zeros(0), np.zeros(0), True)
    d = (h2sq[2:] - h2sq[:-2]) / (t[2:] - t[:-2])
    denom = slope[1:-1] * h2sq[1:-1]
    ratios = np.where(denom > 0, d / np.where(denom > 0, denom, 1.0), 0.0)
    fit = float(max(np.max(ratios), 0.0))
    if C_fit is None:
        return H2GrowthReport(fit, ratios, t[1:-1], True)
    return H2GrowthReport(C_fit, ratios, t[1:-1], bool(fit <= C_fit))
