"""Explicit ill-posedness seeds and their certificates.

Two constructions:

* the lacunary odd seed ``u0 = eps * h_K / ||h||_{B^{1+1/p}_{p,r}}`` with

      h = sum_{k>=1} h_k / (4^k k^{2/(1+r)}),    F[h_k](xi) = i 2^{-k} xi chi_tilde(2^{-k} xi),

  used for the b-family;
* the Novikov seed ``u0 = sum_{k<=K} k^{-2/(1+r)} (1 - d_x^2)^{-1} phi_k`` with
  ``phi_k(x) = 2^k phi(2^k x)`` and ``phi(x) = eta(x + 2) - eta(x - 200)``.

Fourier transforms are angular: on the line ``h(x) = int F[h](xi) e^{i xi x} dxi``
so the lattice coefficient is ``F[h](j/M) / M``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import zeta

from chlab.littlewood_paley import (
    DEFAULT_BUMP,
    BumpProfile,
    NormSpec,
    besov_norm,
    block_norms,
    sobolev_norm,
)
from chlab.spectral_core import (
    LINE,
    DomainSpec,
    SpectralField,
    analyze,
    eval_at,
    helmholtz,
    helmholtz_inverse,
    oddness_defect,
)

# phi_1 reaches x = (200 + 8/5)/2; the Green tail must decay before the image.
NOVIKOV_REACH = 100.8
NOVIKOV_TAIL_MARGIN = 36.0


def weight(k, r: float):
    """``k^{-2/(1+r)}`` (``r = inf`` gives 1)."""
    k = np.asarray(k, dtype=float)
    if math.isinf(r):
        return np.ones_like(k)
    return k ** (-2.0 / (1.0 + r))


def divergence_sum(K: int, r: float) -> float:
    """``sum_{k<=K} k^{-2/(1+r)}``, the growth law of the seed slope."""
    return float(np.sum(weight(np.arange(1, K + 1), r)))


@dataclass(frozen=True)
class SeedSpec:
    eps: float
    p: float
    r: float
    K: int
    model: str = "b-family"
    geometry: str = "torus"

    def __post_init__(self):
        if not self.r > 1.0:
            raise ValueError(
                f"r must exceed 1 (the seed needs sum k^(-2r/(1+r)) < inf), got {self.r}"
            )
        if not self.p >= 1.0:
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.model not in ("b-family", "novikov"):
            raise ValueError(f"unknown model {self.model!r}")


@dataclass
class NovikovCriterion:
    m0: float
    h1_sq: float
    delta: float
    applicable: bool
    passed: bool
    T_bound: float
    T_bound_terms: tuple


@dataclass
class SeedCertificate:
    besov_value: float
    slope_at_zero: float
    value_at_zero: float
    oddness_defect: float
    sign_condition_ok: Optional[bool] = None
    novikov_criterion: Optional[NovikovCriterion] = None
    extra: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {
            "besov_value": self.besov_value,
            "slope_at_zero": self.slope_at_zero,
            "value_at_zero": self.value_at_zero,
            "oddness_defect": self.oddness_defect,
            "sign_condition_ok": self.sign_condition_ok,
        }
        if self.novikov_criterion is not None:
            nc = asdict(self.novikov_criterion)
            nc.pop("T_bound_terms")
            row.update({f"novikov_{k}": v for k, v in nc.items()})
        row.update(self.extra)
        return row

    def report(self) -> str:
        return "\n".join(f"{k} = {v}" for k, v in self.as_row().items())


def max_admissible_K(domain: DomainSpec, bump: BumpProfile = DEFAULT_BUMP) -> int:
    """Largest K whose top annulus stays inside the 2/3-rule band."""
    band = domain.dealias_index / domain.M
    return int(math.floor(math.log2(band / bump.chi_support[1])))


def _check_K(K: int, domain: DomainSpec, bump: BumpProfile):
    top = max_admissible_K(domain, bump)
    if K > top:
        raise ValueError(
            f"K={K} exceeds the dealiased band of N={domain.N}, M={domain.M}; "
            f"maximal admissible K is {top}"
        )


def h_block(k: int, r: float, bump: BumpProfile, domain: DomainSpec) -> np.ndarray:
    """Coefficients of the k-th summand ``h_k / (4^k k^{2/(1+r)})``."""
    xi = domain.xi
    amp = float(weight(k, r)) / 4.0**k
    return amp * 1j * 2.0**-k * xi * bump.chi_tilde(xi / 2.0**k) / domain.M


def build_h(r: float, K: int, bump: BumpProfile = DEFAULT_BUMP,
            domain: DomainSpec | None = None) -> SpectralField:
    """Truncated lacunary profile ``sum_{k=1..K} h_k / (4^k k^{2/(1+r)})``."""
    if domain is None:
        raise ValueError("a domain is required")
    if K < 1:
        raise ValueError("K must be >= 1")
    _check_K(K, domain, bump)
    c = np.zeros(domain.N // 2 + 1, dtype=complex)
    for k in range(1, K + 1):
        c += h_block(k, r, bump, domain)
    c[-1] = 0.0
    return SpectralField(domain, c)


def slope_at_zero(f: SpectralField) -> float:
    """``f'(0) = sum_xi i xi c(xi)`` as an exact frequency sum."""
    c = f.coeffs
    return float(-2.0 * np.sum(f.domain.xi[1:] * c[1:].imag))


def h_besov_estimate(h: SpectralField, K: int, p: float, r: float,
                     bump: BumpProfile = DEFAULT_BUMP) -> tuple[float, float]:
    """Norm of the untruncated ``h`` in ``B^{1+1/p}_{p,r}``: exact blocks up to
    K plus the tail ``sum_{k>K}`` extrapolated from the K-th normalised block.

    Returns ``(estimate, truncated_norm)``.
    """
    s = 1.0 + 1.0 / p
    low, norms = block_norms(h, p, bump)
    k = np.arange(1, norms.size + 1)
    blocks = (2.0 ** (k * s) * norms)[:K]
    block_const = blocks[K - 1] / float(weight(K, r))
    if math.isinf(r):
        trunc = low + float(np.max(blocks))
        return max(trunc, low + block_const), trunc
    e = 2.0 * r / (1.0 + r)
    trunc_r = float(np.sum(blocks**r))
    tail_r = block_const**r * float(zeta(e, K + 1))
    return low + (trunc_r + tail_r) ** (1.0 / r), low + trunc_r ** (1.0 / r)


def build_ch_seed(spec: SeedSpec, bump: BumpProfile = DEFAULT_BUMP,
                  domain: DomainSpec | None = None):
    """Odd seed ``eps * P_{<=K} h / ||h||`` and its certificate.

    The certificate records the achieved slope and whether the (astronomic)
    threshold ``-2 eps^{-10}`` is met at this K; the lifespan thresholds
    ``eps`` and ``eps^10`` are both reported.
    """
    if domain is None:
        raise ValueError("a domain is required")
    h = build_h(spec.r, spec.K, bump, domain)
    norm_est, norm_trunc = h_besov_estimate(h, spec.K, spec.p, spec.r, bump)
    u0 = h * (spec.eps / norm_est)
    nspec = NormSpec.critical(spec.p, spec.r)
    value = besov_norm(u0, nspec, bump)
    # rounding can push an exact-equality case (r = inf) above eps
    while value > spec.eps:
        u0 = u0 * (1.0 - 2.0**-50)
        value = besov_norm(u0, nspec, bump)
    slope = slope_at_zero(u0)
    threshold = -2.0 * spec.eps**-10
    cert = SeedCertificate(
        besov_value=value,
        slope_at_zero=slope,
        value_at_zero=eval_at(u0, 0.0),
        oddness_defect=oddness_defect(u0),
        extra={
            "K": spec.K,
            "eps": spec.eps,
            "p": spec.p,
            "r": spec.r,
            "h_norm_estimate": norm_est,
            "h_norm_truncated": norm_trunc,
            "h_slope_at_zero": slope_at_zero(h),
            "divergence_ratio": slope_at_zero(h) / divergence_sum(spec.K, spec.r),
            "slope_threshold": threshold,
            "slope_threshold_met": bool(slope < threshold),
            "lifespan_stated": spec.eps,
            "lifespan_construction": spec.eps**10,
        },
    )
    return u0, cert


# ----------------------------------------------------------------------------
# Novikov seed


def phi_samples(x: np.ndarray, bump: BumpProfile = DEFAULT_BUMP) -> np.ndarray:
    """``phi(x) = eta(x + 2) - eta(x - 200)`` with ``eta`` used in space."""
    return bump.eta(x + 2.0) - bump.eta(x - 200.0)


def novikov_momentum_samples(K: int, r: float, x: np.ndarray,
                             bump: BumpProfile = DEFAULT_BUMP) -> np.ndarray:
    """``y0(x) = sum_{k<=K} k^{-2/(1+r)} 2^k phi(2^k x)`` sampled at ``x``."""
    y = np.zeros_like(x, dtype=float)
    for k in range(1, K + 1):
        y += float(weight(k, r)) * 2.0**k * phi_samples(2.0**k * x, bump)
    return y


def check_sign_pattern(y: np.ndarray, x: np.ndarray) -> bool:
    """``y >= 0`` on ``x <= 0``, ``y <= 0`` on ``x >= 0`` and ``y(0) = 0``."""
    zero = x == 0.0
    return bool(
        np.all(y[x <= 0] >= 0.0) and np.all(y[x >= 0] <= 0.0) and np.all(y[zero] == 0.0)
    )


def novikov_blowup_check(f: SpectralField, sign_ok: bool = True) -> NovikovCriterion:
    """Evaluate the Novikov blow-up criterion ``u0(0) u0'(0) < -||u0||_{H^1}^2 / 2``.

    The lifespan bound is ``min{-2/((1-delta) m0), (2/H) ln((m0 - H/2)/(m0 + H/2))}``
    with ``H = ||u0||_{H^1}^2``, ``m0 = u0(0) u0'(0)`` and ``-sqrt(delta) m0 = H/2``.
    """
    return novikov_criterion(eval_at(f, 0.0) * slope_at_zero(f), sobolev_norm(f, 1.0) ** 2,
                             sign_ok)


def novikov_criterion(m0: float, h1_sq: float, sign_ok: bool = True) -> NovikovCriterion:
    if not sign_ok:
        return NovikovCriterion(m0, h1_sq, math.nan, False, False, math.inf, ())
    passed = m0 < -0.5 * h1_sq
    if not passed:
        return NovikovCriterion(m0, h1_sq, math.nan, True, False, math.inf, ())
    delta = (0.5 * h1_sq / m0) ** 2
    t1 = -2.0 / ((1.0 - delta) * m0)
    if h1_sq > 0:
        t2 = 2.0 / h1_sq * math.log((m0 - 0.5 * h1_sq) / (m0 + 0.5 * h1_sq))
    else:
        t2 = math.inf
    return NovikovCriterion(m0, h1_sq, delta, True, True, min(t1, t2), (t1, t2))


def novikov_domain_ok(domain: DomainSpec) -> bool:
    return domain.mode == LINE and domain.L / 2 >= NOVIKOV_REACH + NOVIKOV_TAIL_MARGIN


def build_novikov_seed(K: int, r: float, scale: float = 1.0,
                       bump: BumpProfile = DEFAULT_BUMP,
                       domain: DomainSpec | None = None):
    """``scale * sum_{k<=K} k^{-2/(1+r)} (1 - d_x^2)^{-1} phi_k`` and its certificate."""
    if domain is None:
        domain = DomainSpec.line(2**16)
    if not novikov_domain_ok(domain):
        raise ValueError(
            "Novikov seed needs a line-approximation domain with L/2 >= "
            f"{NOVIKOV_REACH + NOVIKOV_TAIL_MARGIN}; got mode={domain.mode}, L={domain.L:.1f}"
        )
    if K < 1:
        raise ValueError("K must be >= 1")
    if not r > 1.0:
        raise ValueError(f"r must exceed 1, got {r}")
    x = domain.x_signed
    y0 = scale * novikov_momentum_samples(K, r, x, bump)
    y_field = analyze(y0, domain)
    u0 = helmholtz_inverse(y_field)
    sign_ok = check_sign_pattern(y0, x)
    # the spectral momentum must reproduce the sampled one to rounding
    y_back = helmholtz(u0).values()
    crit = novikov_blowup_check(u0, sign_ok)
    tail = np.abs(y_field.coeffs[-(domain.N // 16):]).max() / max(np.abs(y_field.coeffs).max(), 1e-300)
    cert = SeedCertificate(
        besov_value=besov_norm(u0, NormSpec.critical(2.0, r), bump),
        slope_at_zero=slope_at_zero(u0),
        value_at_zero=eval_at(u0, 0.0),
        oddness_defect=oddness_defect(u0),
        sign_condition_ok=sign_ok,
        novikov_criterion=crit,
        extra={
            "K": K,
            "r": r,
            "scale": scale,
            "momentum_roundtrip": float(np.max(np.abs(y_back - y0))),
            "spectral_tail": float(tail),
            "i_term": scale * novikov_i_term(K, r, bump),
        },
    )
    return u0, cert


# ----------------------------------------------------------------------------
# Real-space quadrature route for the Novikov seed (no grid; any K).

_QN = 48


@lru_cache(maxsize=1)
def _gl_unit():
    t, w = np.polynomial.legendre.leggauss(_QN)
    return 0.5 * (t + 1.0), 0.5 * w


def _eta_breaks(bump: BumpProfile):
    a, b = bump.plateau, bump.support
    return np.array([-b, -a, a, b])


def _bump_nodes(level: int, shift: float, bump: BumpProfile):
    """Nodes/weights for ``int g(x) A(x) dx`` with ``A(x) = 2^l eta(2^l x - shift)``.

    Returns physical nodes ``x`` and weights that already include ``A``.
    """
    t, w = _gl_unit()
    br = _eta_breaks(bump)
    xs, ws = [], []
    for lo, hi in zip(br[:-1], br[1:]):
        s = lo + (hi - lo) * t
        xs.append((s + shift) / 2.0**level)
        ws.append((hi - lo) * w * bump.eta(s))
    return np.concatenate(xs), np.concatenate(ws)


def _bump_support(level: int, shift: float, bump: BumpProfile):
    return ((shift - bump.support) / 2.0**level, (shift + bump.support) / 2.0**level)


def _green_at(y: np.ndarray, level: int, shift: float, bump: BumpProfile) -> np.ndarray:
    """``(p * A)(y)`` for the scaled bump ``A`` by split quadrature at ``x = y``."""
    t, w = _gl_unit()
    lo, hi = _bump_support(level, shift, bump)
    brk = (np.array([-bump.support, -bump.plateau, bump.plateau, bump.support]) + shift) / 2.0**level
    out = np.zeros_like(y)
    for i, yy in enumerate(y):
        total = 0.0
        # pieces of [lo, hi] split at the eta breakpoints and at yy
        pts = np.unique(np.clip(np.concatenate([brk, [yy]]), lo, hi))
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a:
                continue
            x = a + (b - a) * t
            A = 2.0**level * bump.eta(2.0**level * x - shift)
            total += (b - a) * np.dot(w, 0.5 * np.exp(-np.abs(yy - x)) * A)
        out[i] = total
    return out


def _pair_energy(la, sa, lb, sb, bump: BumpProfile) -> float:
    """``<p * A, B>`` for two scaled bumps."""
    lo_a, hi_a = _bump_support(la, sa, bump)
    lo_b, hi_b = _bump_support(lb, sb, bump)
    if hi_a <= lo_b or hi_b <= lo_a:
        # separable: exp(-|x-y|) factorises when the supports are ordered
        xa, wa = _bump_nodes(la, sa, bump)
        xb, wb = _bump_nodes(lb, sb, bump)
        ca = 0.5 * (xa.min() + xb.max()) if hi_a <= lo_b else 0.5 * (xa.max() + xb.min())
        sgn = 1.0 if hi_a <= lo_b else -1.0
        ma = np.dot(wa, np.exp(sgn * (xa - ca)))
        mb = np.dot(wb, np.exp(-sgn * (xb - ca)))
        return float(0.5 * ma * mb)
    xb, wb = _bump_nodes(lb, sb, bump)
    return float(np.dot(wb, _green_at(xb, la, sa, bump)))


@lru_cache(maxsize=4096)
def _phi_pair(j: int, k: int, bump: BumpProfile) -> float:
    """``<(1 - d_x^2)^{-1} phi_j, phi_k>`` by real-space quadrature."""
    plus_j, minus_j = (j, -2.0), (j, 200.0)
    plus_k, minus_k = (k, -2.0), (k, 200.0)
    return (
        _pair_energy(*plus_j, *plus_k, bump)
        - _pair_energy(*plus_j, *minus_k, bump)
        - _pair_energy(*minus_j, *plus_k, bump)
        + _pair_energy(*minus_j, *minus_k, bump)
    )


def _eta_moment(func, bump: BumpProfile) -> float:
    """``int func(x) eta(x) dx`` with breakpoint-aware Gauss-Legendre."""
    t, w = _gl_unit()
    br = _eta_breaks(bump)
    total = 0.0
    for lo, hi in zip(br[:-1], br[1:]):
        s = lo + (hi - lo) * t
        total += (hi - lo) * np.dot(w, func(s) * bump.eta(s))
    return float(total)


def novikov_value_term(k: int, bump: BumpProfile = DEFAULT_BUMP) -> float:
    """``((1 - d_x^2)^{-1} phi_k)(0) = (1/2) int (e^{-|x-2|/2^k} - e^{-|x+200|/2^k}) eta``."""
    e = 2.0**-k
    return 0.5 * _eta_moment(
        lambda x: np.exp(-e * np.abs(x - 2.0)) - np.exp(-e * np.abs(x + 200.0)), bump
    )


def novikov_slope_term(k: int, bump: BumpProfile = DEFAULT_BUMP) -> float:
    """``((1 - d_x^2)^{-1} phi_k)'(0) = -(1/2) int (e^{-|x-2|/2^k} + e^{-|x+200|/2^k}) eta``."""
    e = 2.0**-k
    return -0.5 * _eta_moment(
        lambda x: np.exp(-e * np.abs(x - 2.0)) + np.exp(-e * np.abs(x + 200.0)), bump
    )


def eta_window_integral(A: float, bump: BumpProfile = DEFAULT_BUMP) -> float:
    """``int_{-A}^{A} eta``."""
    t, w = _gl_unit()
    br = np.clip(_eta_breaks(bump), -A, A)
    total = 0.0
    for lo, hi in zip(br[:-1], br[1:]):
        if hi > lo:
            s = lo + (hi - lo) * t
            total += (hi - lo) * np.dot(w, bump.eta(s))
    return float(total)


def novikov_i_term(K: int, r: float, bump: BumpProfile = DEFAULT_BUMP) -> float:
    """Divergent part of ``u0'(0)``:
    ``-(1/2) sum_{k<=K} k^{-2/(1+r)} (int_{-2}^{2} eta + int_{-200}^{200} eta)``."""
    return -0.5 * divergence_sum(K, r) * (
        eta_window_integral(2.0, bump) + eta_window_integral(200.0, bump)
    )


@dataclass
class NovikovQuadrature:
    K: int
    r: float
    scale: float
    value_at_zero: float
    slope_at_zero: float
    h1_sq: float
    i_term: float
    criterion: NovikovCriterion


def novikov_seed_quadrature(K: int, r: float, scale: float = 1.0,
                            bump: BumpProfile = DEFAULT_BUMP) -> NovikovQuadrature:
    """Seed diagnostics by real-space quadrature (valid for any K)."""
    w = weight(np.arange(1, K + 1), r)
    val = sum(float(w[k - 1]) * novikov_value_term(k, bump) for k in range(1, K + 1))
    der = sum(float(w[k - 1]) * novikov_slope_term(k, bump) for k in range(1, K + 1))
    h1 = 0.0
    for j in range(1, K + 1):
        for k in range(1, K + 1):
            a, b = (j, k) if j <= k else (k, j)
            h1 += float(w[j - 1] * w[k - 1]) * _phi_pair(a, b, bump)
    val, der, h1 = scale * val, scale * der, scale**2 * h1
    return NovikovQuadrature(
        K=K, r=r, scale=scale, value_at_zero=val, slope_at_zero=der, h1_sq=h1,
        i_term=scale * novikov_i_term(K, r, bump),
        criterion=novikov_criterion(val * der, h1),
    )


def locate_novikov_threshold(r: float, K_max: int = 40, scale: float = 1.0,
                             bump: BumpProfile = DEFAULT_BUMP):
    """Sweep ``K = 1..K_max``; return ``(K_star, rows)`` where ``K_star`` is the
    first K whose seed meets the Novikov criterion (None if none does)."""
    rows = [novikov_seed_quadrature(K, r, scale, bump) for K in range(1, K_max + 1)]
    k_star = next((q.K for q in rows if q.criterion.passed), None)
    return k_star, rows
