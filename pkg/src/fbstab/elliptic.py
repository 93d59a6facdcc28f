"""Harmonic Dirichlet problems on periodic graph domains {B(x) < y < T(x)}.

The domain is meshed through the fitted map y = B(x) + t (T(x) - B(x)),
t in [0, 1], and discretized with P1 finite elements on the physical node
positions.  On a flat uniform mesh this is the five-point Laplacian, and it is
exact on affine fields for any profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridTooSmall, QminViolated, SolverDiverged
from .geometry import BoundaryDensity, PeriodicProfile

SOLVER_TOL = 1e-10
_GL_T, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


class _Zero:
    """The bottom curve y = 0."""

    def eval(self, x, order: int = 0):
        return np.zeros_like(np.asarray(x, dtype=float))


class _Offset:
    """Curve base(x) - eps, used for the inner edge of a tubular band."""

    def __init__(self, base, eps: float):
        self.base, self.eps = base, float(eps)

    def eval(self, x, order: int = 0):
        out = self.base.eval(x, order)
        return out - self.eps if order == 0 else out


@dataclass(eq=False)
class StripDomain:
    """Mesh of {B(x) < y < T(x)} with nx periodic columns and ny+1 levels in t."""

    top: object
    nx: int
    ny: int
    bottom: object = None

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise GridTooSmall(f"need Nx, Ny >= 8, got {self.nx}x{self.ny}")
        if self.bottom is None:
            self.bottom = _Zero()
        h = self.height
        if np.min(h) <= 0.0:
            raise ValueError("top must lie strictly above bottom")

    @classmethod
    def tubular(cls, top, nx: int, ny: int, eps: float) -> "StripDomain":
        """Vertical band {T - eps < y < T}."""
        return cls(top, nx, ny, _Offset(top, eps))

    @cached_property
    def x(self) -> np.ndarray:
        return -1.0 + 2.0 * np.arange(self.nx) / self.nx

    @cached_property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ny + 1)

    @cached_property
    def top_values(self) -> np.ndarray:
        return self.top.eval(self.x)

    @cached_property
    def bottom_values(self) -> np.ndarray:
        return self.bottom.eval(self.x)

    @cached_property
    def height(self) -> np.ndarray:
        return self.top_values - self.bottom_values

    @cached_property
    def y(self) -> np.ndarray:
        """Physical ordinates, shape (ny+1, nx)."""
        return self.bottom_values[None, :] + self.t[:, None] * self.height[None, :]

    @property
    def hx(self) -> float:
        return 2.0 / self.nx

    @property
    def h(self) -> float:
        return max(self.hx, float(np.max(self.height)) / self.ny)

    @property
    def n_nodes(self) -> int:
        return (self.ny + 1) * self.nx

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        nx, ny = self.nx, self.ny
        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
        I, J = I.ravel(), J.ravel()
        ip = (I + 1) % nx
        n00, n10 = J * nx + I, J * nx + ip
        n01, n11 = (J + 1) * nx + I, (J + 1) * nx + ip
        x0 = self.x[I]
        x1 = x0 + self.hx
        y = self.y
        y00, y10, y01, y11 = y[J, I], y[J, ip], y[J + 1, I], y[J + 1, ip]
        tris = [
            ((n00, n10, n11), (x0, x1, x1), (y00, y10, y11)),
            ((n00, n11, n01), (x0, x1, x0), (y00, y11, y01)),
        ]
        rows, cols, vals = [], [], []
        for nodes, xs, ys in tris:
            b = [ys[1] - ys[2], ys[2] - ys[0], ys[0] - ys[1]]
            c = [xs[2] - xs[1], xs[0] - xs[2], xs[1] - xs[0]]
            area2 = xs[0] * b[0] + xs[1] * b[1] + xs[2] * b[2]
            for a in range(3):
                for bb in range(3):
                    rows.append(nodes[a])
                    cols.append(nodes[bb])
                    vals.append((b[a] * b[bb] + c[a] * c[bb]) / (2.0 * area2))
        K = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_nodes, self.n_nodes),
        )
        return K.tocsr()

    @cached_property
    def _interior(self) -> np.ndarray:
        return np.arange(self.nx, self.ny * self.nx)

    @cached_property
    def _boundary(self) -> np.ndarray:
        return np.concatenate([np.arange(self.nx), np.arange(self.ny * self.nx, self.n_nodes)])

    @cached_property
    def _blocks(self):
        K = self.stiffness
        ii, bb = self._interior, self._boundary
        return K[ii][:, ii].tocsc(), K[ii][:, bb].tocsr()

    @cached_property
    def _lu(self):
        return spla.splu(self._blocks[0])

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        """Nodal control areas (one third of adjacent triangle areas)."""
        dt = 1.0 / self.ny
        jac = self.height[None, :] * np.full((self.ny + 1, 1), dt * self.hx)
        jac[0] *= 0.5
        jac[-1] *= 0.5
        return jac.ravel()

    def solve_dirichlet(self, bottom: np.ndarray, top: np.ndarray) -> np.ndarray:
        """Solve for one or many (stacked along axis 0) pairs of traces.

        Returns nodal values of shape (ny+1, nx) or (m, ny+1, nx).
        """
        bottom = np.atleast_2d(bottom)
        top = np.atleast_2d(top)
        m = max(bottom.shape[0], top.shape[0])
        bottom = np.broadcast_to(bottom, (m, self.nx))
        top = np.broadcast_to(top, (m, self.nx))
        A, B = self._blocks
        ub = np.concatenate([bottom, top], axis=1)
        rhs = -(B @ ub.T)
        sol = self._lu.solve(rhs)
        res = A @ sol - rhs
        scale = np.maximum(np.linalg.norm(rhs, axis=0), 1e-300)
        bad = np.linalg.norm(res, axis=0) > SOLVER_TOL * scale
        bad &= np.linalg.norm(rhs, axis=0) > 0
        for col in np.flatnonzero(bad):
            sol[:, col] = _cg_fallback(A, rhs[:, col], sol[:, col])
        out = np.empty((m, self.ny + 1, self.nx))
        out[:, 0, :] = bottom
        out[:, -1, :] = top
        out[:, 1:-1, :] = sol.T.reshape(m, self.ny - 1, self.nx)
        return out[0] if m == 1 else out


def _cg_fallback(A, b, x0):
    d = A.diagonal()
    M = spla.LinearOperator(A.shape, matvec=lambda v: v / d)
    x, info = spla.cg(A, b, x0=x0, rtol=SOLVER_TOL, maxiter=20 * A.shape[0], M=M)
    if info != 0 or np.linalg.norm(A @ x - b) > 10 * SOLVER_TOL * np.linalg.norm(b):
        raise SolverDiverged(f"CG fallback failed (info={info})")
    return x


# ----------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class QField:
    """The weight Q through Q^2 and grad Q^2.

    kind: "constant" (value), "water_wave" (q, g) or "custom" (q2, grad_q2
    callables of (x, y)).
    """

    kind: str = "constant"
    value: float = 1.0
    q: float = 0.0
    g: float = 0.0
    q2_fn: object = field(default=None, compare=False)
    grad_fn: object = field(default=None, compare=False)

    @classmethod
    def constant(cls, value: float = 1.0) -> "QField":
        return cls("constant", value=float(value))

    @classmethod
    def water_wave(cls, q: float, g: float) -> "QField":
        return cls("water_wave", q=float(q), g=float(g))

    @classmethod
    def custom(cls, q2, grad_q2) -> "QField":
        return cls("custom", q2_fn=q2, grad_fn=grad_q2)

    def q2(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if self.kind == "constant":
            return np.full(x.shape, self.value**2)
        if self.kind == "water_wave":
            return np.maximum(self.q - 2.0 * self.g * y, 0.0)
        return np.asarray(self.q2_fn(x, y), dtype=float) + np.zeros(x.shape)

    def __call__(self, x, y):
        return np.sqrt(np.maximum(self.q2(x, y), 0.0))

    def grad_q2(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if self.kind == "constant":
            return np.zeros(x.shape), np.zeros(x.shape)
        if self.kind == "water_wave":
            return np.zeros(x.shape), np.where(self.q - 2.0 * self.g * y >= 0, -2.0 * self.g, 0.0)
        gx, gy = self.grad_fn(x, y)
        return np.asarray(gx, float) + np.zeros(x.shape), np.asarray(gy, float) + np.zeros(x.shape)

    def bounds_on(self, domain: StripDomain) -> tuple[float, float]:
        """(Q_min on the top curve, Q_max over the mesh)."""
        qtop = self(domain.x, domain.top_values)
        qall = self(np.broadcast_to(domain.x, domain.y.shape), domain.y)
        return float(np.min(qtop)), float(np.max(qall))

    def require_positive(self, top_max: float) -> None:
        """Stability precondition Q_min > 0 on the free boundary."""
        if self.kind == "water_wave" and self.q - 2.0 * self.g * top_max <= 0.0:
            raise QminViolated(f"q - 2 g max(w) = {self.q - 2.0 * self.g * top_max:.6g} <= 0")
        if self.kind == "constant" and self.value <= 0.0:
            raise QminViolated("Q constant must be positive")

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "water_wave":
            return {"kind": "water_wave", "q": self.q, "g": self.g}
        return {"kind": "custom"}


# ----------------------------------------------------------------------------
# fields


@dataclass(eq=False)
class GridField:
    values: np.ndarray
    domain: StripDomain

    @property
    def bottom_trace(self) -> np.ndarray:
        return self.values[0]

    @property
    def top_trace(self) -> np.ndarray:
        return self.values[-1]


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    volume: float

    @property
    def total(self) -> float:
        return self.dirichlet + self.volume


def as_trace(data, domain: StripDomain) -> np.ndarray:
    """Coerce scalars, callables, BoundaryDensity or arrays to nx periodic values."""
    if isinstance(data, BoundaryDensity):
        v = data.periodic_values
        if v.size != domain.nx:
            raise ValueError(f"density has {v.size} samples, domain has nx={domain.nx}")
        return v
    if callable(data):
        return np.asarray(data(domain.x), dtype=float) + np.zeros(domain.nx)
    v = np.asarray(data, dtype=float)
    if v.ndim == 0:
        return np.full(domain.nx, float(v))
    if v.size == domain.nx + 1:
        return v[:-1]
    if v.size != domain.nx:
        raise ValueError(f"trace has {v.size} samples, domain has nx={domain.nx}")
    return v


def solve_harmonic(domain: StripDomain, bottom, top) -> GridField:
    vals = domain.solve_dirichlet(as_trace(bottom, domain), as_trace(top, domain))
    return GridField(vals, domain)


def solve_linearized(psi, Q: QField, domain: StripDomain) -> GridField:
    """Harmonic field with trace Q psi on the top curve and 0 on the bottom."""
    qtop = Q(domain.x, domain.top_values)
    return solve_harmonic(domain, 0.0, qtop * as_trace(psi, domain))


def _dx_periodic(v: np.ndarray, hx: float) -> np.ndarray:
    return (np.roll(v, -1, axis=-1) - np.roll(v, 1, axis=-1)) / (2.0 * hx)


def boundary_gradient(values: np.ndarray, domain: StripDomain, side: str = "top"):
    """(u_X, u_Y) on the top or bottom curve for nodal values (..., ny+1, nx)."""
    dt = 1.0 / domain.ny
    if side == "top":
        u_t = (3.0 * values[..., -1, :] - 4.0 * values[..., -2, :] + values[..., -3, :]) / (2.0 * dt)
        trace, tt = values[..., -1, :], 1.0
    else:
        u_t = (-3.0 * values[..., 0, :] + 4.0 * values[..., 1, :] - values[..., 2, :]) / (2.0 * dt)
        trace, tt = values[..., 0, :], 0.0
    x = domain.x
    H = domain.height
    slope = domain.bottom.eval(x, 1) + tt * (domain.top.eval(x, 1) - domain.bottom.eval(x, 1))
    u_x = _dx_periodic(trace, domain.hx)
    u_Y = u_t / H
    u_X = u_x - slope * u_Y
    return u_X, u_Y


def top_normal(domain: StripDomain) -> tuple[np.ndarray, np.ndarray]:
    d1 = domain.top.eval(domain.x, 1)
    sp_ = np.sqrt(1.0 + d1**2)
    return -d1 / sp_, 1.0 / sp_


def flux_array(values: np.ndarray, domain: StripDomain, side: str = "top") -> np.ndarray:
    u_X, u_Y = boundary_gradient(values, domain, side)
    if side == "top":
        nx_, ny_ = top_normal(domain)
    else:
        d1 = domain.bottom.eval(domain.x, 1)
        sp_ = np.sqrt(1.0 + d1**2)
        nx_, ny_ = d1 / sp_, -1.0 / sp_
    return u_X * nx_ + u_Y * ny_


def normal_flux(field: GridField, domain: StripDomain | None = None, side: str = "top") -> BoundaryDensity:
    """Outward normal derivative on the top (Gamma_s) or bottom curve."""
    domain = domain or field.domain
    return BoundaryDensity.from_periodic(flux_array(field.values, domain, side))


def dirichlet_energy(values: np.ndarray, domain: StripDomain) -> float:
    v = values.ravel()
    return float(v @ (domain.stiffness @ v))


def dirichlet_bilinear(a: np.ndarray, b: np.ndarray, domain: StripDomain) -> np.ndarray:
    """Matrix of discrete Dirichlet products between stacks of fields."""
    A = a.reshape(a.shape[0], -1)
    B = b.reshape(b.shape[0], -1)
    return A @ (domain.stiffness @ B.T)


def volume_term(Q: QField, domain: StripDomain) -> float:
    x = domain.x
    yq = domain.bottom_values[None, :] + _GL_T[:, None] * domain.height[None, :]
    q2 = Q.q2(np.broadcast_to(x, yq.shape), yq)
    return float(domain.hx * np.sum((_GL_W @ q2) * domain.height))


def energy(field: GridField, Q: QField, domain: StripDomain | None = None) -> EnergyBreakdown:
    domain = domain or field.domain
    return EnergyBreakdown(dirichlet_energy(field.values, domain), volume_term(Q, domain))


@dataclass(frozen=True)
class CriticalityResult:
    residual: float
    flux: BoundaryDensity

    @property
    def max_flux(self) -> float:
        return float(np.max(self.flux.values))

    @property
    def flux_negative(self) -> bool:
        return self.max_flux < 0.0


def check_criticality(field: GridField, Q: QField, domain: StripDomain | None = None) -> CriticalityResult:
    """max over Gamma of |(d_nu u)^2 - Q^2|, with the signed flux attached."""
    domain = domain or field.domain
    flux = flux_array(field.values, domain)
    q2 = Q.q2(domain.x, domain.top_values)
    return CriticalityResult(float(np.max(np.abs(flux**2 - q2))), BoundaryDensity.from_periodic(flux))


def check_euler_lagrange(field: GridField, Q: QField, domain: StripDomain | None = None) -> dict:
    domain = domain or field.domain
    Ku = domain.stiffness @ field.values.ravel()
    lap = -Ku / domain.lumped_mass
    interior = lap.reshape(domain.ny + 1, domain.nx)[1:-1]
    u_X, u_Y = boundary_gradient(field.values, domain)
    grad = np.hypot(u_X, u_Y)
    q = Q(domain.x, domain.top_values)
    return {
        "interior_residual": float(np.max(np.abs(interior))),
        "boundary_value_residual": float(np.max(np.abs(field.top_trace))),
        "flux_residual": float(np.max(np.abs(grad - q))),
    }


def surface_integral(values: np.ndarray, curve, nx: int | None = None) -> float:
    """Trapezoidal integral over the graph of ``curve`` of periodic samples."""
    v = np.asarray(values, dtype=float)
    n = v.shape[-1] if nx is None else nx
    x = -1.0 + 2.0 * np.arange(n) / n
    w = np.sqrt(1.0 + curve.eval(x, 1) ** 2) * (2.0 / n)
    return float(np.sum(v * w))


def critical_domain(profile, nx: int, ny: int) -> StripDomain:
    return StripDomain(profile, nx, ny)


def matched_q(profile: PeriodicProfile, u_star: float, nx: int = 256, ny: int = 128) -> QField:
    """A weight making the harmonic state with datum u_star critical on ``profile``.

    Q^2(x, y) := (d_nu u)^2(x) from a solve on the graph domain, extended
    constantly in y and interpolated trigonometrically in x.
    """
    dom = StripDomain(profile, nx, ny)
    fld = solve_harmonic(dom, u_star, 0.0)
    f2 = flux_array(fld.values, dom) ** 2
    c = np.fft.rfft(f2) / nx
    k = np.arange(c.size)
    if nx % 2 == 0:
        c[-1] *= 0.5
    # phase relative to x = -1
    c = c * np.exp(1j * np.pi * k)

    def q2(x, y):
        x = np.asarray(x, float)
        out = np.real(np.exp(1j * np.pi * np.multiply.outer(x, k)) @ (c * np.where(k > 0, 2.0, 1.0)))
        return out

    def grad(x, y):
        x = np.asarray(x, float)
        dx = np.real((1j * np.pi * k * np.exp(1j * np.pi * np.multiply.outer(x, k))) @ (c * np.where(k > 0, 2.0, 1.0)))
        return dx, np.zeros_like(dx)

    return QField.custom(q2, grad)

