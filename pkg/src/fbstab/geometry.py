"""Periodic graph curves, bump perturbations, frames and boundary norms.

Every curve lives on x in [-1, 1] with period 2.  A curve is anything with an
``eval(x, order)`` method returning the ``order``-th derivative of its graph
function; ``PeriodicProfile`` and ``PerturbedProfile`` both qualify.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import EndpointConditionViolated, NonPositiveProfile, NotPeriodic

PERIODIC_TOL = 1e-9
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)


def wrap(x):
    """Map abscissae into the fundamental period [-1, 1)."""
    return np.mod(np.asarray(x, dtype=float) + 1.0, 2.0) - 1.0


def uniform_grid(n: int) -> np.ndarray:
    """n+1 nodes on [-1, 1]; the last node duplicates the first periodically."""
    return np.linspace(-1.0, 1.0, n + 1)


@dataclass(frozen=True)
class PeriodicProfile:
    """Graph function w of the free boundary.

    Stored either as a real Fourier series in cos(k pi x), sin(k pi x) or as a
    polynomial on [-1, 1] (periodically extended, C^3 matching checked by
    ``make_profile``).
    """

    mean: float = 1.0
    cos: tuple = ()
    sin: tuple = ()
    poly: tuple | None = None
    description: dict = field(default_factory=dict, compare=False)

    def eval(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        if self.poly is not None:
            c = np.asarray(self.poly, dtype=float)
            c = P.polyder(c, order) if order else c
            return P.polyval(wrap(x), c) + np.zeros_like(x)
        out = np.full_like(x, self.mean if order == 0 else 0.0)
        for k, (a, b) in enumerate(_pad(self.cos, self.sin), start=1):
            if a == 0.0 and b == 0.0:
                continue
            w = k * np.pi
            ph = w * x + order * np.pi / 2
            out = out + w**order * (a * np.cos(ph) + b * np.sin(ph))
        return out

    def __call__(self, x):
        return self.eval(x, 0)

    @property
    def is_flat(self) -> bool:
        if self.poly is not None:
            return bool(np.all(np.asarray(self.poly[1:]) == 0))
        return not any(self.cos) and not any(self.sin)

    def perturbed(self, bump: "BumpPerturbation | None", s: float) -> "PerturbedProfile":
        return PerturbedProfile(self, bump, float(s))


def _pad(a, b):
    n = max(len(a), len(b))
    a = list(a) + [0.0] * (n - len(a))
    b = list(b) + [0.0] * (n - len(b))
    return list(zip(a, b))


@dataclass(frozen=True)
class PerturbedProfile:
    """The graph function w + s*phi."""

    base: PeriodicProfile
    bump: "BumpPerturbation | None"
    s: float

    def eval(self, x, order: int = 0):
        out = self.base.eval(x, order)
        if self.bump is not None and self.s != 0.0:
            out = out + self.s * self.bump.eval(x, order)
        return out

    def __call__(self, x):
        return self.eval(x, 0)

    @property
    def is_flat(self) -> bool:
        return self.base.is_flat and (self.bump is None or self.s == 0.0 or self.bump.is_zero)


def make_profile(spec) -> PeriodicProfile:
    """Build a profile from a dict description.

    Supported kinds::

        {"kind": "constant", "value": 1.0}
        {"kind": "cosine", "mean": 1.0, "amplitude": 0.1, "mode": 1}
        {"kind": "fourier", "mean": 1.0, "cos": [...], "sin": [...]}
        {"kind": "samples", "values": [...]}     # n+1 values, first == last
        {"kind": "polynomial", "coefficients": [...]}  # ascending powers
    """
    if isinstance(spec, PeriodicProfile):
        return spec
    if isinstance(spec, (int, float)):
        spec = {"kind": "constant", "value": float(spec)}
    kind = spec.get("kind", "constant")
    desc = dict(spec)
    if kind == "constant":
        prof = PeriodicProfile(mean=float(spec["value"]), description=desc)
    elif kind == "cosine":
        mode = int(spec.get("mode", 1))
        cos = [0.0] * mode
        cos[mode - 1] = float(spec["amplitude"])
        prof = PeriodicProfile(mean=float(spec.get("mean", 1.0)), cos=tuple(cos), description=desc)
    elif kind == "fourier":
        prof = PeriodicProfile(
            mean=float(spec.get("mean", 1.0)),
            cos=tuple(float(c) for c in spec.get("cos", ())),
            sin=tuple(float(c) for c in spec.get("sin", ())),
            description=desc,
        )
    elif kind == "samples":
        prof = _profile_from_samples(np.asarray(spec["values"], dtype=float), desc)
    elif kind == "polynomial":
        c = tuple(float(v) for v in spec["coefficients"])
        for k in range(4):
            ck = P.polyder(np.asarray(c), k) if k else np.asarray(c)
            left, right = P.polyval(-1.0, ck), P.polyval(1.0, ck)
            scale = max(1.0, abs(left), abs(right))
            if abs(left - right) > PERIODIC_TOL * scale:
                raise NotPeriodic(f"derivative {k} differs at x=+-1: {left:.6g} vs {right:.6g}")
        prof = PeriodicProfile(mean=0.0, poly=c, description=desc)
    else:
        raise ValueError(f"unknown profile kind {kind!r}")

    xs = np.linspace(-1.0, 1.0, 4097)
    wmin = float(np.min(prof.eval(xs)))
    if wmin <= 0.0:
        raise NonPositiveProfile(f"min w = {wmin:.6g} <= 0")
    return prof


def _profile_from_samples(v: np.ndarray, desc) -> PeriodicProfile:
    if v.ndim != 1 or v.size < 5:
        raise ValueError("samples need at least 5 values")
    if abs(v[0] - v[-1]) > PERIODIC_TOL * max(1.0, abs(v[0])):
        raise NotPeriodic(f"first and last sample differ: {v[0]:.6g} vs {v[-1]:.6g}")
    n = v.size - 1
    c = np.fft.rfft(v[:-1]) / n
    k = np.arange(c.size)
    # FFT nodes start at x=-1, so shift phases to the e^{i k pi x} basis
    c = c * (-1.0) ** k
    cos = 2.0 * c.real[1:]
    sin = -2.0 * c.imag[1:]
    if n % 2 == 0:
        cos[-1] *= 0.5
        sin[-1] = 0.0
    return PeriodicProfile(mean=float(c.real[0]), cos=tuple(cos), sin=tuple(sin), description=desc)


# ----------------------------------------------------------------------------
# bumps


def _falling(n: int, i: int) -> float:
    return factorial(n) / factorial(n - i) if i <= n else 0.0


@lru_cache(maxsize=256)
def _leibniz_terms(fc: tuple, order: int) -> tuple:
    """(weight, power of x-a, power of b-x, coefficients of F^(k)) for the order-th derivative."""
    ders = [np.asarray(fc, dtype=float)]
    for _ in range(order):
        ders.append(P.polyder(ders[-1]) if ders[-1].size > 1 else np.zeros(1))
    terms = []
    for j in range(order + 1):
        for i in range(j + 1):
            if i > 4 or j - i > 4:
                continue
            wgt = comb(order, j) * comb(j, i) * _falling(4, i) * (-1) ** (j - i) * _falling(4, j - i)
            terms.append((wgt, 4 - i, 4 - j + i, ders[order - j]))
    return tuple(terms)


def _horner(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.full_like(x, c[-1])
    for ck in c[-2::-1]:
        out = out * x + ck
    return out


@dataclass(frozen=True)
class BumpPerturbation:
    """phi = (x-a)^4 (b-x)^4 F(x) on [a, b], zero elsewhere.

    The factored storage keeps evaluation accurate near the quadruple zeros
    at the endpoints, where the expanded monomial form loses all digits.
    """

    a: float
    b: float
    factor: tuple = (0.0,)

    @property
    def coefficients(self) -> np.ndarray:
        """Expanded polynomial coefficients (ascending powers)."""
        base = P.polymul(P.polypow([-self.a, 1.0], 4), P.polypow([self.b, -1.0], 4))
        return P.polymul(base, np.asarray(self.factor, dtype=float))

    @property
    def is_zero(self) -> bool:
        return not any(self.factor)

    def eval(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x)
        inside = (x >= self.a) & (x <= self.b)
        xi = np.where(inside, x, 0.5 * (self.a + self.b))
        u = xi - self.a
        v = self.b - xi
        total = 0.0
        for wgt, pu, pv, fc in _leibniz_terms(tuple(float(c) for c in self.factor), order):
            total = total + wgt * u**pu * v**pv * _horner(fc, xi)
        return np.where(inside, total, 0.0)

    def __call__(self, x):
        return self.eval(x, 0)

    def scaled(self, factor: float) -> "BumpPerturbation":
        return BumpPerturbation(self.a, self.b, tuple(float(factor) * np.asarray(self.factor)))

    def sup_norms(self, n: int = 2001) -> tuple[float, float, float, float]:
        xs = np.linspace(self.a, self.b, n)
        return tuple(float(np.max(np.abs(self.eval(xs, k)))) for k in range(4))

    def c2_norm(self, n: int = 2001) -> float:
        """max(|phi|, |phi'|, |phi''|) on [a, b]."""
        return max(self.sup_norms(n)[:3])

    def c2alpha_surrogate(self, alpha: float = 0.5, n: int = 401) -> float:
        """max(|phi|,|phi'|,|phi''|) plus the sampled Hoelder quotient of phi''."""
        xs = np.linspace(self.a, self.b, n)
        d2 = self.eval(xs, 2)
        dx = np.abs(xs[:, None] - xs[None, :])
        np.fill_diagonal(dx, np.inf)
        holder = float(np.max(np.abs(d2[:, None] - d2[None, :]) / dx**alpha))
        return self.c2_norm() + holder

    def zeros(self) -> np.ndarray:
        """Zeros of phi in [a, b] (endpoints included)."""
        fc = np.trim_zeros(np.asarray(self.factor, dtype=float), "b")
        pts = [self.a, self.b]
        if fc.size > 1:
            for r in P.polyroots(fc):
                if abs(r.imag) < 1e-12 and self.a < r.real < self.b:
                    pts.append(float(r.real))
        return np.array(sorted(pts))


def make_bump(poly, a: float, b: float, tol: float = 1e-9) -> BumpPerturbation:
    """Validate a polynomial bump on [a, b] and store it in factored form."""
    if not (-1.0 < a < b < 1.0):
        raise ValueError(f"need -1 < a < b < 1, got a={a}, b={b}")
    c = np.asarray(poly, dtype=float)
    if not np.any(c):
        return BumpPerturbation(float(a), float(b), (0.0,))
    xs = np.linspace(a, b, 513)
    scale = max(1.0, *(np.max(np.abs(P.polyval(xs, P.polyder(c, k) if k else c))) for k in range(4)))
    for name, x0 in (("a", a), ("b", b)):
        for k in range(4):
            ck = P.polyder(c, k) if k else c
            val = float(P.polyval(x0, ck))
            if abs(val) > tol * scale:
                raise EndpointConditionViolated(name, k, val)
    base = P.polymul(P.polypow([-a, 1.0], 4), P.polypow([b, -1.0], 4))
    quo, _ = P.polydiv(c, base)
    return BumpPerturbation(float(a), float(b), tuple(float(q) for q in np.atleast_1d(quo)))


def bump_from_factor(a: float, b: float, factor=(1.0,), amplitude: float | None = None) -> BumpPerturbation:
    """(x-a)^4 (b-x)^4 F(x), optionally rescaled so that max|phi| = amplitude."""
    bump = BumpPerturbation(float(a), float(b), tuple(float(f) for f in factor))
    if amplitude is not None and not bump.is_zero:
        peak = bump.sup_norms()[0]
        bump = bump.scaled(amplitude / peak)
    return bump


# ----------------------------------------------------------------------------
# frames


@dataclass(frozen=True)
class CurveFrame:
    x: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray


def curvature_of(curve, x) -> np.ndarray:
    """Curvature with the convention d(nu)/d(tau) = kappa * tau, nu pointing up.

    For the region below a graph this is positive where the region is convex,
    i.e. kappa = -W'' / (1 + W'^2)^{3/2}.
    """
    d1 = curve.eval(x, 1)
    d2 = curve.eval(x, 2)
    return -d2 / (1.0 + d1**2) ** 1.5


def frame(profile, bump=None, s: float = 0.0, x_grid=None) -> CurveFrame:
    curve = profile.perturbed(bump, s) if isinstance(profile, PeriodicProfile) else profile
    x = uniform_grid(256) if x_grid is None else np.asarray(x_grid, dtype=float)
    d1 = curve.eval(x, 1)
    speed = np.sqrt(1.0 + d1**2)
    tangent = np.stack([1.0 / speed, d1 / speed], axis=-1)
    normal = np.stack([-d1 / speed, 1.0 / speed], axis=-1)
    return CurveFrame(x, tangent, normal, curvature_of(curve, x))


# ----------------------------------------------------------------------------
# boundary densities and norms


@dataclass(frozen=True)
class BoundaryDensity:
    """Values of psi(x, W(x)) on the uniform grid of ``uniform_grid(n)``."""

    values: np.ndarray
    compact: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("density needs a 1-d array of at least 3 values")
        if abs(v[0] - v[-1]) > 1e-9 * max(1.0, np.max(np.abs(v))):
            raise NotPeriodic(f"density endpoints differ: {v[0]:.6g} vs {v[-1]:.6g}")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def x(self) -> np.ndarray:
        return uniform_grid(self.n)

    @property
    def periodic_values(self) -> np.ndarray:
        return self.values[:-1]

    @classmethod
    def from_function(cls, f, n: int, compact: bool = False) -> "BoundaryDensity":
        x = uniform_grid(n)
        v = np.asarray(f(x), dtype=float) + np.zeros_like(x)
        v[-1] = v[0]
        return cls(v, compact)

    @classmethod
    def from_periodic(cls, v, compact: bool = False) -> "BoundaryDensity":
        v = np.asarray(v, dtype=float)
        return cls(np.append(v, v[0]), compact)

    def __mul__(self, other):
        o = other.values if isinstance(other, BoundaryDensity) else other
        return BoundaryDensity(self.values * o, self.compact)

    __rmul__ = __mul__


def arclength(curve, n: int) -> tuple[np.ndarray, float]:
    """Cumulative arclength at the n+1 grid nodes and the total length."""
    x = uniform_grid(n)
    h = x[1] - x[0]
    mid = 0.5 * (x[:-1] + x[1:])
    pts = mid[:, None] + 0.5 * h * _GAUSS_X[None, :]
    speed = np.sqrt(1.0 + curve.eval(pts, 1) ** 2)
    cell = 0.5 * h * speed @ _GAUSS_W
    sigma = np.concatenate([[0.0], np.cumsum(cell)])
    return sigma, float(sigma[-1])


def _speed(curve, x):
    return np.sqrt(1.0 + curve.eval(x, 1) ** 2)


def fourier_coefficients(psi: np.ndarray, curve) -> tuple[np.ndarray, np.ndarray, float]:
    """Coefficients c_k of periodic samples (n,) or (m, n) in normalized arclength.

    c_k = (1/|Gamma|) int psi exp(-2 pi i k sigma/|Gamma|) d sigma, evaluated by the
    periodic trapezoidal rule in x.  Returns (k, c, |Gamma|).
    """
    psi = np.atleast_2d(psi)
    n = psi.shape[-1]
    x = uniform_grid(n)[:-1]
    sigma, length = arclength(curve, n)
    dsig = _speed(curve, x) * (2.0 / n)
    k = np.arange(-(n // 2) + 1, n // 2)
    phase = np.exp(-2j * np.pi * np.outer(k, sigma[:-1]) / length)
    c = (psi * dsig) @ phase.T / length
    return k, c, length


def h_half_weights(k: np.ndarray, length: float) -> np.ndarray:
    return 1.0 + 2.0 * np.pi * np.abs(k) / length


def h_half_norm(psi: BoundaryDensity, curve) -> float:
    """Spectral H^{1/2} norm: (|Gamma| sum_k (1 + 2 pi |k| / |Gamma|) |c_k|^2)^{1/2}."""
    k, c, length = fourier_coefficients(psi.periodic_values, curve)
    return float(np.sqrt(length * np.sum(h_half_weights(k, length) * np.abs(c[0]) ** 2)))


def h_half_gram(densities: np.ndarray, curve) -> np.ndarray:
    """Gram matrix of the H^{1/2} inner product for rows of periodic samples."""
    k, c, length = fourier_coefficients(densities, curve)
    wgt = h_half_weights(k, length)
    g = length * (c * wgt) @ c.conj().T
    return 0.5 * (g.real + g.real.T)


def l2_norm_gamma(psi: BoundaryDensity, curve) -> float:
    x = psi.x[:-1]
    w = _speed(curve, x) * (2.0 / psi.n)
    return float(np.sqrt(np.sum(psi.periodic_values**2 * w)))


def boundary_weights(curve, n: int) -> np.ndarray:
    """Trapezoidal arclength weights at the n periodic nodes."""
    return _speed(curve, uniform_grid(n)[:-1]) * (2.0 / n)


def l2_gram(densities: np.ndarray, curve) -> np.ndarray:
    d = np.atleast_2d(densities)
    w = boundary_weights(curve, d.shape[-1])
    return (d * w) @ d.T
