"""Fourier representation of real periodic fields and exact multiplier operators.

A field on the circle of circumference ``L = 2*pi*M`` sampled at ``N`` points
``x_n = n*L/N`` is stored through its non-negative-frequency coefficients

    f(x) = sum_j c_j exp(i xi_j x),    xi_j = j / M,    c_{-j} = conj(c_j),

so ``c_j = (1/L) * integral_0^L f(x) exp(-i xi_j x) dx``.  At ``M = 1`` this is
the usual torus normalisation ``(1/2pi) * integral``.  Derivatives are the
angular symbols ``(i xi)^n`` and ``(1 - d_x^2)^{-1}`` is ``1/(1 + xi^2)``; no
factor of ``2*pi`` appears in any operator.

The Nyquist coefficient is pinned to zero by every constructor.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

TORUS = "torus"
LINE = "line"
SNAPSHOT_MAGIC = "# chlab-snapshot v1"


@dataclass(frozen=True)
class DomainSpec:
    """Periodic grid of ``N`` points on a circle of length ``2*pi*M``.

    ``mode="torus"`` requires ``M = 1``; ``mode="line"`` approximates the real
    line by a large circle (default ``M = 256``).
    """

    N: int
    M: int = 1
    mode: str = TORUS

    def __post_init__(self):
        if self.N < 16 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")
        if self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if self.mode not in (TORUS, LINE):
            raise ValueError(f"mode must be 'torus' or 'line', got {self.mode!r}")
        if self.mode == TORUS and self.M != 1:
            raise ValueError("torus mode requires M = 1")

    @classmethod
    def torus(cls, N: int) -> "DomainSpec":
        return cls(N=N, M=1, mode=TORUS)

    @classmethod
    def line(cls, N: int, M: int = 256) -> "DomainSpec":
        return cls(N=N, M=M, mode=LINE)

    @property
    def L(self) -> float:
        return 2.0 * np.pi * self.M

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def xi(self) -> np.ndarray:
        """Angular frequencies ``j/M`` for ``j = 0..N/2``."""
        return _frequencies(self.N, self.M)

    @property
    def x(self) -> np.ndarray:
        """Grid points ``n*L/N`` in ``[0, L)``."""
        return np.arange(self.N) * self.dx

    @property
    def x_signed(self) -> np.ndarray:
        """Grid points mapped to ``[-L/2, L/2)`` (same ordering as :attr:`x`)."""
        x = self.x
        return np.where(x >= self.L / 2, x - self.L, x)

    @property
    def xi_max(self) -> float:
        """Largest frequency that may carry a non-zero coefficient."""
        return (self.N // 2 - 1) / self.M

    @property
    def dealias_index(self) -> int:
        """Largest mode index kept by the 2/3 rule."""
        return self.N // 3

    @property
    def dealias_xi(self) -> float:
        return (2.0 / 3.0) * (self.N / 2) / self.M

    def periodization_error(self) -> float:
        """Size of the image contributions ``~exp(-L/2)`` to the Green kernel."""
        return float(np.exp(-self.L / 2))


@lru_cache(maxsize=32)
def _frequencies(N: int, M: int) -> np.ndarray:
    xi = np.arange(N // 2 + 1, dtype=float) / M
    xi.flags.writeable = False
    return xi


class SpectralField:
    """Real periodic field held as its half spectrum ``c_0 .. c_{N/2}``.

    Hermitian symmetry is implicit in the half storage; the constructor
    checks that the mean mode is real and the Nyquist mode vanishes.
    """

    __slots__ = ("domain", "coeffs")

    def __init__(self, domain: DomainSpec, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (domain.N // 2 + 1,):
            raise ValueError(
                f"expected {domain.N // 2 + 1} coefficients, got {coeffs.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(coeffs), initial=0.0)))
        if abs(coeffs[0].imag) > 1e-12 * scale:
            raise ValueError("mean coefficient must be real")
        if coeffs[-1] != 0:
            raise ValueError("Nyquist coefficient must be zero")
        if not np.all(np.isfinite(coeffs)):
            raise FloatingPointError("non-finite Fourier coefficient")
        coeffs = coeffs.copy()
        coeffs[0] = coeffs[0].real
        coeffs.flags.writeable = False
        self.domain = domain
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "SpectralField":
        return cls(domain, np.zeros(domain.N // 2 + 1, dtype=complex))

    @classmethod
    def from_function(cls, domain: DomainSpec, func) -> "SpectralField":
        return analyze(func(domain.x), domain)

    def full_coeffs(self) -> np.ndarray:
        """Two-sided spectrum in ``numpy.fft`` ordering (length ``N``)."""
        N = self.domain.N
        full = np.zeros(N, dtype=complex)
        full[: N // 2 + 1] = self.coeffs
        full[N // 2 + 1 :] = np.conj(self.coeffs[1 : N // 2][::-1])
        return full

    def values(self) -> np.ndarray:
        return synthesize(self)

    def _check_same(self, other: "SpectralField"):
        if self.domain != other.domain:
            raise ValueError("fields live on different domains")

    def __add__(self, other):
        self._check_same(other)
        return SpectralField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_same(other)
        return SpectralField(self.domain, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.domain, -self.coeffs)

    def __mul__(self, scalar: float):
        return SpectralField(self.domain, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return SpectralField(self.domain, self.coeffs / float(scalar))

    def __repr__(self):
        d = self.domain
        return f"SpectralField(mode={d.mode}, M={d.M}, N={d.N})"


def analyze(samples: np.ndarray, domain: DomainSpec) -> SpectralField:
    """Grid values at ``domain.x`` to Fourier coefficients.

    The alternating (Nyquist) component of the samples is discarded, so the
    round trip is exact for samples without that component.
    """
    v = np.asarray(samples)
    if v.shape != (domain.N,):
        raise ValueError(f"expected {domain.N} samples, got shape {v.shape}")
    if np.iscomplexobj(v):
        raise TypeError("samples must be real")
    c = np.fft.rfft(v) / domain.N
    c[-1] = 0.0
    return SpectralField(domain, c)


def synthesize(f: SpectralField) -> np.ndarray:
    """Grid values of ``f`` at ``f.domain.x``."""
    return np.fft.irfft(f.coeffs * f.domain.N, n=f.domain.N)


def derivative(f: SpectralField, n: int = 1) -> SpectralField:
    if n < 1:
        raise ValueError(f"derivative order must be >= 1, got {n}")
    return SpectralField(f.domain, f.coeffs * (1j * f.domain.xi) ** n)


def helmholtz_inverse(f: SpectralField) -> SpectralField:
    """Apply ``(1 - d_x^2)^{-1}``."""
    return SpectralField(f.domain, f.coeffs / (1.0 + f.domain.xi**2))


def helmholtz(f: SpectralField) -> SpectralField:
    """Apply ``1 - d_x^2``."""
    return SpectralField(f.domain, f.coeffs * (1.0 + f.domain.xi**2))


def green_kernel(x: ArrayLike, L: float | None = None) -> ArrayLike:
    """Green kernel of ``1 - d_x^2``.

    ``exp(-|x|)/2`` on the line (``L=None``); for period ``L`` the periodised
    kernel ``cosh(|x| - L/2) / (2 sinh(L/2))`` with ``x`` reduced to
    ``[-L/2, L/2]``, evaluated in an overflow-free form.
    """
    x = np.asarray(x, dtype=float)
    if L is None:
        return 0.5 * np.exp(-np.abs(x))
    y = np.mod(x, L)
    y = np.minimum(y, L - y)
    return (np.exp(-y) + np.exp(y - L)) / (2.0 * (1.0 - np.exp(-L)))


_GL_NODES = 12


@lru_cache(maxsize=8)
def _green_transfer(domain: DomainSpec) -> np.ndarray:
    # int_0^L p(y) exp(-i xi_j y) dy, composite Gauss-Legendre with one panel
    # per grid cell.  The kernel is analytic inside every cell (its kink sits
    # on the cell boundary y = 0 = L) and xi*dx <= pi, so each panel is exact
    # to rounding.
    N, h = domain.N, domain.dx
    tau, w = np.polynomial.legendre.leggauss(_GL_NODES)
    tau, w = 0.5 * (tau + 1.0), 0.5 * w
    xi = domain.xi
    m = np.arange(N) * h
    out = np.zeros(N // 2 + 1, dtype=complex)
    for t, wt in zip(tau, w):
        samples = green_kernel(m + t * h, domain.L)
        out += wt * np.exp(-1j * xi * t * h) * np.fft.rfft(samples)
    out *= h
    out[-1] = 0.0
    out.flags.writeable = False
    return out


def green_convolve(f: SpectralField) -> SpectralField:
    """Convolution ``p * f`` with the periodised Green kernel.

    The convolution integral ``int_0^L p(y) f(x - y) dy`` is evaluated by
    quadrature of the real-space kernel against the trigonometric interpolant
    of ``f``; it never uses the symbol ``1/(1 + xi^2)``.
    """
    return SpectralField(f.domain, f.coeffs * _green_transfer(f.domain))


def green_convolve_direct(f: SpectralField, nodes: int = _GL_NODES) -> np.ndarray:
    """Brute-force real-space version of :func:`green_convolve` on the grid.

    Cost is ``O(N^3 * nodes)``; intended for small ``N`` only.
    """
    d = f.domain
    tau, w = np.polynomial.legendre.leggauss(nodes)
    tau, w = 0.5 * (tau + 1.0), 0.5 * w
    y = (np.arange(d.N)[:, None] + tau[None, :]).ravel() * d.dx
    wy = np.tile(w, d.N) * d.dx * green_kernel(y, d.L)
    out = np.empty(d.N)
    for n, xn in enumerate(d.x):
        out[n] = np.dot(wy, eval_at(f, xn - y))
    return out


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode with ``|xi| > (2/3)(N/2)/M`` (the 2/3 rule)."""
    c = f.coeffs.copy()
    c[f.domain.dealias_index + 1 :] = 0.0
    return SpectralField(f.domain, c)


def eval_at(f: SpectralField, x: ArrayLike) -> ArrayLike:
    """Evaluate the Fourier sum of ``f`` at arbitrary positions."""
    xa = np.asarray(x, dtype=float)
    c = f.coeffs
    xi = f.domain.xi[1:-1]
    phase = np.exp(1j * np.multiply.outer(xa, xi))
    val = c[0].real + 2.0 * np.real(phase @ c[1:-1])
    return float(val) if np.ndim(val) == 0 else val


def reflect(values: np.ndarray) -> np.ndarray:
    """Grid values of ``x -> v(-x)``."""
    N = values.shape[-1]
    return values[..., (-np.arange(N)) % N]


def oddness_defect(f: SpectralField) -> float:
    """``max_n |f(x_n) + f(-x_n)|`` over the grid."""
    v = synthesize(f)
    return float(np.max(np.abs(v + reflect(v))))


def parity_parts(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    """(even, odd) parts of ``f``; the odd part keeps ``i*Im c_j``."""
    c = f.coeffs
    return SpectralField(f.domain, c.real.astype(complex)), SpectralField(
        f.domain, 1j * c.imag
    )


def save_snapshot(path, f: SpectralField, t: float = 0.0) -> Path:
    """Write ``f`` in the text snapshot format (see README)."""
    path = Path(path)
    d = f.domain
    lines = [
        SNAPSHOT_MAGIC,
        f"mode {d.mode}",
        f"M {d.M}",
        f"N {d.N}",
        f"t {float(t)!r}",
        "# j re im",
    ]
    lines += [
        f"{j} {c.real!r} {c.imag!r}" for j, c in enumerate(f.coeffs.tolist())
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_snapshot(path) -> tuple[SpectralField, float]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not a chlab snapshot")
    header = {}
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] in ("mode", "M", "N", "t"):
            header[parts[0]] = parts[1]
            continue
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'j re im'")
        rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
    domain = DomainSpec(N=int(header["N"]), M=int(header["M"]), mode=header["mode"])
    coeffs = np.zeros(domain.N // 2 + 1, dtype=complex)
    for j, re, im in rows:
        coeffs[j] = complex(re, im)
    return SpectralField(domain, coeffs), float(header.get("t", 0.0))
