"""Dyadic frequency cutoffs, Littlewood-Paley projections and Besov/Sobolev norms.

The cutoff ``eta`` is the indicator of ``[-a, a]`` (``a = 1.425``) convolved
with the standard mollifier ``exp(-1/(1 - t^2))`` rescaled to half-width
``w``.  With the default ``w = 0.175`` the plateau is exactly ``|xi| <= 5/4``
and the support exactly ``|xi| <= 8/5``.  Blocks are

    chi_{<=k}(xi) = eta(xi / 2^k),    chi_k(xi) = eta(xi / 2^k) - eta(xi / 2^(k-1)),

and the inhomogeneous Besov norm is ``||P_{<=0} f||_p`` plus the ``l^r`` norm
of ``2^(ks) ||P_k f||_p`` over ``k >= 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from chlab.spectral_core import SpectralField, derivative, synthesize

# int_{-1}^{1} exp(-1/(1-t^2)) dt, evaluated with mpmath at 40 digits.
_MOLLIFIER_MASS = 0.4439938161680794
_CDF_NODES = 80
_ETA_CENTER = 1.425
_MAX_WIDTH = 0.175


def _mollifier(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _gl():
    tau, w = np.polynomial.legendre.leggauss(_CDF_NODES)
    return tau, w


def _left_mass(t: np.ndarray) -> np.ndarray:
    # mass of the normalised mollifier on [-1, t] for t in [-1, 0]
    tau, w = _gl()
    s = -1.0 + np.multiply.outer(t + 1.0, tau + 1.0) / 2.0
    return (t + 1.0) / 2.0 * (_mollifier(s) @ w) / _MOLLIFIER_MASS


def smooth_step(t) -> np.ndarray:
    """Mollifier CDF: 0 for ``t <= -1``, 1 for ``t >= 1``, smooth between."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.where(t >= 1.0, 1.0, 0.0)
    left = (t > -1.0) & (t <= 0.0)
    right = (t > 0.0) & (t < 1.0)
    if left.any():
        out[left] = _left_mass(t[left])
    if right.any():
        # evaluate from the nearer end so tails keep full relative accuracy
        out[right] = 1.0 - _left_mass(-t[right])
    return out


@dataclass(frozen=True)
class BumpProfile:
    """The cutoff ``eta`` and the annular bump ``chi_tilde``.

    ``width`` is the mollifier half-width; ``plateau``/``support`` are the radii
    where ``eta`` stops being 1 and becomes 0.  ``chi_tilde`` is
    ``exp(-1/(1-t^2))/exp(-1)`` with ``t = (|xi| - chi_center)/chi_halfwidth``.
    """

    width: float = _MAX_WIDTH
    chi_center: float = 1.0
    chi_halfwidth: float = 0.15

    @property
    def plateau(self) -> float:
        return _ETA_CENTER - self.width

    @property
    def support(self) -> float:
        return _ETA_CENTER + self.width

    @property
    def chi_support(self) -> tuple[float, float]:
        return (self.chi_center - self.chi_halfwidth, self.chi_center + self.chi_halfwidth)

    def eta(self, xi) -> np.ndarray:
        xi = np.abs(np.asarray(xi, dtype=float))
        shape = xi.shape
        xi = xi.ravel()
        out = np.ones_like(xi)
        out[xi >= self.support] = 0.0
        mid = (xi > self.plateau) & (xi < self.support)
        if mid.any():
            out[mid] = 1.0 - smooth_step((xi[mid] - _ETA_CENTER) / self.width)
        return out.reshape(shape)

    def chi_low(self, k: int, xi) -> np.ndarray:
        return self.eta(np.asarray(xi, dtype=float) / 2.0**k)

    def chi(self, k: int, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.eta(xi / 2.0**k) - self.eta(xi / 2.0 ** (k - 1))

    def chi_tilde(self, xi) -> np.ndarray:
        t = (np.abs(np.asarray(xi, dtype=float)) - self.chi_center) / self.chi_halfwidth
        return _mollifier(t) * math.e


def make_bump(sharpness: float = _MAX_WIDTH) -> BumpProfile:
    """Build the cutoff pair with mollifier half-width ``sharpness``.

    Any ``0 < sharpness <= 0.175`` keeps ``eta == 1`` on ``|xi| <= 5/4`` and
    ``eta == 0`` on ``|xi| >= 8/5``; the default makes both radii exact.
    """
    if not 0.0 < sharpness <= _MAX_WIDTH:
        raise ValueError(f"sharpness must lie in (0, {_MAX_WIDTH}], got {sharpness}")
    return BumpProfile(width=float(sharpness))


DEFAULT_BUMP = BumpProfile()


@dataclass(frozen=True)
class NormSpec:
    """Besov exponents: regularity ``s``, Lebesgue ``p``, summability ``r``."""

    s: float
    p: float = 2.0
    r: float = 2.0

    def __post_init__(self):
        for name in ("p", "r"):
            v = getattr(self, name)
            if not (v >= 1.0):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")

    @property
    def p_conj(self) -> float:
        """Conjugate exponent ``p' = p/(p-1)``."""
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    @classmethod
    def critical(cls, p: float, r: float) -> "NormSpec":
        """The scale-critical space ``B^{1+1/p}_{p,r}``."""
        return cls(s=1.0 + 1.0 / p, p=p, r=r)


def k_max(domain, bump: BumpProfile = DEFAULT_BUMP) -> int:
    """Largest ``k`` whose block ``chi_k`` meets a representable frequency."""
    # chi_k vanishes for |xi| <= 2^(k-1) * plateau
    return int(math.floor(math.log2(domain.xi_max / bump.plateau))) + 1


def _check_k(f: SpectralField, k: int, bump: BumpProfile):
    top = k_max(f.domain, bump)
    if k > top:
        raise ValueError(f"dyadic index k={k} outside the resolvable range k <= {top}")


def project(f: SpectralField, k: int, bump: BumpProfile = DEFAULT_BUMP) -> SpectralField:
    """``P_k f``."""
    _check_k(f, k, bump)
    return SpectralField(f.domain, f.coeffs * bump.chi(k, f.domain.xi))


def project_low(f: SpectralField, k: int, bump: BumpProfile = DEFAULT_BUMP) -> SpectralField:
    """``P_{<=k} f``."""
    _check_k(f, k, bump)
    return SpectralField(f.domain, f.coeffs * bump.chi_low(k, f.domain.xi))


def _lp_values(v: np.ndarray, p: float, dx: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(v)))
    return float((dx * np.sum(np.abs(v) ** p)) ** (1.0 / p))


def lp_norm(f: SpectralField, p: float) -> float:
    """``L^p`` norm by the rectangle rule on the synthesis grid (grid max for
    ``p = inf``).  Exact for ``p = 2`` and spectrally accurate otherwise."""
    return _lp_values(synthesize(f), p, f.domain.dx)


def _lr(values: np.ndarray, r: float) -> float:
    if values.size == 0:
        return 0.0
    if math.isinf(r):
        return float(np.max(values))
    return float(np.sum(values**r) ** (1.0 / r))


@lru_cache(maxsize=64)
def _block_masks(domain, bump: BumpProfile):
    xi = domain.xi
    top = k_max(domain, bump)
    low = bump.chi_low(0, xi)
    blocks = np.array([bump.chi(k, xi) for k in range(1, top + 1)])
    low.flags.writeable = False
    blocks.flags.writeable = False
    return low, blocks


def block_norms(f: SpectralField, p: float, bump: BumpProfile = DEFAULT_BUMP):
    """``(||P_{<=0} f||_p, [||P_k f||_p for k = 1..k_max])``."""
    low, blocks = _block_masks(f.domain, bump)
    N, dx = f.domain.N, f.domain.dx
    low_v = np.fft.irfft(f.coeffs * low * N, n=N)
    vals = np.fft.irfft(f.coeffs[None, :] * blocks * N, n=N, axis=-1)
    if math.isinf(p):
        norms = np.max(np.abs(vals), axis=-1)
    else:
        norms = (dx * np.sum(np.abs(vals) ** p, axis=-1)) ** (1.0 / p)
    return _lp_values(low_v, p, dx), norms


def besov_norm(f: SpectralField, spec: NormSpec, bump: BumpProfile = DEFAULT_BUMP) -> float:
    low, norms = block_norms(f, spec.p, bump)
    k = np.arange(1, norms.size + 1)
    return low + _lr(2.0 ** (k * spec.s) * norms, spec.r)


def sobolev_norm(f: SpectralField, s: float) -> float:
    """``H^s`` norm normalised so that ``sobolev_norm(f, 0) = ||f||_{L^2}``."""
    w = (1.0 + f.domain.xi**2) ** s
    c2 = np.abs(f.coeffs) ** 2
    total = c2[0] + 2.0 * np.sum(w[1:] * c2[1:])
    return float(math.sqrt(f.domain.L * total))


def log_interp_sides(f: SpectralField, bump: BumpProfile = DEFAULT_BUMP):
    """``(||u_x||_inf, ||u||_{B^1_{inf,inf}}, ||u||_{H^2})`` for the
    logarithmic interpolation inequality
    ``||u_x||_inf <= C ||u||_{B^1_{inf,inf}} log2(2 + ||u||_{H^2}^2) + C``."""
    lhs = lp_norm(derivative(f, 1), math.inf)
    b1 = besov_norm(f, NormSpec(1.0, math.inf, math.inf), bump)
    return lhs, b1, sobolev_norm(f, 2.0)


NORM_CSV_FIELDS = ("field_id", "s", "p", "r", "value", "k_min", "k_max")


def norm_report_row(field_id: str, f: SpectralField, spec: NormSpec,
                    bump: BumpProfile = DEFAULT_BUMP) -> dict:
    return {
        "field_id": field_id,
        "s": spec.s,
        "p": spec.p,
        "r": spec.r,
        "value": besov_norm(f, spec, bump),
        "k_min": 0,
        "k_max": k_max(f.domain, bump),
    }


def write_norm_csv(path, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=NORM_CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return path
