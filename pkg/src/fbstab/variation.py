"""First and second shape variations and coercivity of the second variation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .elliptic import (
    QField,
    StripDomain,
    as_trace,
    boundary_gradient,
    dirichlet_bilinear,
    flux_array,
    solve_harmonic,
    top_normal,
)
from .errors import EpsilonTooLarge
from .flow import FlowMaps, graph_velocities, normal_velocity
from .geometry import arclength, boundary_weights, curvature_of, h_half_gram, l2_gram


def _weights(domain: StripDomain) -> np.ndarray:
    return boundary_weights(domain.top, domain.nx)


def _dnu_q2(Q: QField, domain: StripDomain) -> np.ndarray:
    gx, gy = Q.grad_q2(domain.x, domain.top_values)
    nx_, ny_ = top_normal(domain)
    return gx * nx_ + gy * ny_


def first_variation(field, Q: QField, velocity, domain: StripDomain | None = None) -> float:
    """int_{Gamma_s} (Q^2 - |grad u_s|^2) (X_s . nu_s)."""
    domain = domain or field.domain
    uX, uY = boundary_gradient(field.values, domain)
    q2 = Q.q2(domain.x, domain.top_values)
    v = as_trace(velocity, domain)
    return float(np.sum((q2 - uX**2 - uY**2) * v * _weights(domain)))


@dataclass(frozen=True)
class QuadraticFormReport:
    bulk: float
    boundary: float
    psi: str = ""

    @property
    def total(self) -> float:
        return self.bulk + self.boundary


def boundary_coefficient(Q: QField, domain: StripDomain) -> np.ndarray:
    """d_nu Q^2 + 2 kappa Q^2 on the top curve."""
    kappa = curvature_of(domain.top, domain.x)
    return _dnu_q2(Q, domain) + 2.0 * kappa * Q.q2(domain.x, domain.top_values)


def second_variation_form(psi, scenario, check: bool = True) -> QuadraticFormReport:
    """2 int |grad u_psi|^2 + int (d_nu Q^2 + 2 kappa Q^2) psi^2 on the base domain."""
    if check:
        scenario.require_critical()
    dom = scenario.domain(0.0)
    v = as_trace(psi, dom)
    qtop = scenario.Q(dom.x, dom.top_values)
    u = solve_harmonic(dom, 0.0, qtop * v)
    bulk = 2.0 * float(dirichlet_bilinear(u.values[None], u.values[None], dom)[0, 0])
    boundary = float(np.sum(boundary_coefficient(scenario.Q, dom) * v**2 * _weights(dom)))
    return QuadraticFormReport(bulk, boundary, getattr(psi, "__name__", ""))


@dataclass(frozen=True)
class VariationReport:
    s: float
    first: float
    bulk: float
    boundary: float
    third: float
    maps_velocity_defect: float | None = None

    @property
    def second(self) -> float:
        return self.bulk + self.boundary + self.third


def second_variation_along_flow(s: float, scenario, maps: FlowMaps | None = None) -> VariationReport:
    """All three integrals of the second variation of F(u_s) at s.

    Everything is sampled on the native grid of Gamma_s, where the normal
    velocity and acceleration depend only on the abscissa.
    """
    dom = scenario.domain(s)
    u = scenario.state(s)
    x = dom.x
    wts = _weights(dom)
    V, Zn = graph_velocities(scenario.profile, scenario.bump, s, x)
    flux = flux_array(u.values, dom)
    uX, uY = boundary_gradient(u.values, dom)
    q2 = scenario.Q.q2(x, dom.top_values)
    kappa = curvature_of(dom.top, x)

    udot = solve_harmonic(dom, 0.0, -V * flux)
    bulk = 2.0 * float(dirichlet_bilinear(udot.values[None], udot.values[None], dom)[0, 0])
    boundary = float(np.sum((_dnu_q2(scenario.Q, dom) + 2.0 * kappa * flux**2) * V**2 * wts))
    defect = q2 - uX**2 - uY**2
    third = float(np.sum(defect * (Zn + kappa * V**2) * wts))
    first = float(np.sum(defect * V * wts))

    mdef = None
    if maps is not None:
        Vm = normal_velocity(maps)
        Vg, _ = graph_velocities(scenario.profile, scenario.bump, s, maps.g)
        mdef = float(np.max(np.abs(Vm - Vg)))
    return VariationReport(float(s), first, bulk, boundary, third, mdef)


# ----------------------------------------------------------------------------
# coercivity


@dataclass
class CoercivityEstimate:
    K: int
    matrix: np.ndarray
    gram: np.ndarray
    eigenvalue: float
    eigenvalues: np.ndarray
    eps: float | None = None
    mu: float | None = None
    asymmetry: float = 0.0

    @property
    def off_diagonal_ratio(self) -> float:
        d = np.abs(np.diag(self.matrix))
        off = np.abs(self.matrix - np.diag(np.diag(self.matrix)))
        return float(np.max(off / np.sqrt(np.outer(d, d))))


def arclength_modes(curve, n: int, K: int) -> np.ndarray:
    """Rows 1, cos(2 pi j sigma/|Gamma|), sin(2 pi j sigma/|Gamma|), j = 1..K, at n periodic nodes."""
    sigma, length = arclength(curve, n)
    th = 2.0 * np.pi * sigma[:-1] / length
    rows = [np.ones(n)]
    for j in range(1, K + 1):
        rows.append(np.cos(j * th))
        rows.append(np.sin(j * th))
    return np.array(rows)


def _assemble(modes: np.ndarray, Q: QField, dom: StripDomain, with_boundary: bool = True) -> tuple:
    qtop = Q(dom.x, dom.top_values)
    fields = dom.solve_dirichlet(np.zeros((1, dom.nx)), modes * qtop)
    fields = fields.reshape(modes.shape[0], dom.ny + 1, dom.nx)
    A = 2.0 * dirichlet_bilinear(fields, fields, dom)
    if with_boundary:
        c = boundary_coefficient(Q, dom) * _weights(dom)
        A = A + (modes * c) @ modes.T
    asym = float(np.max(np.abs(A - A.T)) / max(np.max(np.abs(A)), 1e-300))
    if asym > 1e-6:
        warnings.warn(f"assembled form is asymmetric ({asym:.2e})", RuntimeWarning, stacklevel=3)
    return 0.5 * (A + A.T), asym


def _smallest(A: np.ndarray, G: np.ndarray) -> tuple[float, np.ndarray]:
    ev = scipy.linalg.eigh(A, G, eigvals_only=True)
    return float(ev[0]), ev


def coercivity_constant(scenario, K: int | None = None) -> CoercivityEstimate:
    K = scenario.K if K is None else K
    scenario.require_stable_q()
    scenario.require_critical()
    dom = scenario.domain(0.0)
    modes = arclength_modes(dom.top, dom.nx, K)
    A, asym = _assemble(modes, scenario.Q, dom)
    G = h_half_gram(modes, dom.top)
    lam, ev = _smallest(A, G)
    return CoercivityEstimate(K, A, G, lam, ev, asymmetry=asym)


def tubular_domain(scenario, eps: float, ny: int | None = None) -> StripDomain:
    curve = scenario.curve(0.0)
    wmin = float(np.min(curve.eval(np.linspace(-1.0, 1.0, 2049))))
    if not 0.0 < eps < wmin:
        raise EpsilonTooLarge(f"need 0 < eps < min w = {wmin:.4g}, got {eps}")
    return StripDomain.tubular(curve, scenario.nx, ny or scenario.ny, eps)


def mu_epsilon(scenario, eps: float, K: int | None = None, ny: int | None = None) -> float:
    """min int_{U_eps} |grad u_psi|^2 over the K-mode space with ||psi||_{L^2(Gamma)} = 1."""
    K = scenario.K if K is None else K
    dom = tubular_domain(scenario, eps, ny)
    modes = arclength_modes(dom.top, dom.nx, K)
    A, _ = _assemble(modes, scenario.Q, dom, with_boundary=False)
    G = l2_gram(modes, dom.top)
    lam, _ = _smallest(0.5 * A, G)
    return lam


def tubular_coercivity(scenario, eps: float, K: int | None = None, ny: int | None = None) -> CoercivityEstimate:
    K = scenario.K if K is None else K
    scenario.require_stable_q()
    scenario.require_critical()
    dom = tubular_domain(scenario, eps, ny)
    modes = arclength_modes(dom.top, dom.nx, K)
    A, asym = _assemble(modes, scenario.Q, dom)
    G = h_half_gram(modes, dom.top)
    lam, ev = _smallest(A, G)
    return CoercivityEstimate(K, A, G, lam, ev, eps=eps, asymmetry=asym)


@dataclass
class TraceEquivalenceReport:
    energies: np.ndarray
    norms: np.ndarray
    ratios: np.ndarray

    @property
    def interval(self) -> tuple[float, float]:
        r = self.ratios[np.isfinite(self.ratios)]
        return (float(np.min(r)), float(np.max(r))) if r.size else (np.nan, np.nan)


def trace_equivalence_check(scenario, psis, eps: float | None = None) -> TraceEquivalenceReport:
    """Dirichlet energy of the extension of Q psi into the band U vs ||Q psi||^2_{H^{1/2}}.

    U is the vertical band of width eps (default min w / 2) below Gamma.
    """
    curve = scenario.curve(0.0)
    if eps is None:
        eps = 0.5 * float(np.min(curve.eval(np.linspace(-1.0, 1.0, 2049))))
    dom = tubular_domain(scenario, eps)
    rows = np.array([as_trace(p, dom) for p in psis])
    qtop = scenario.Q(dom.x, dom.top_values)
    traces = rows * qtop
    fields = dom.solve_dirichlet(np.zeros((1, dom.nx)), traces).reshape(len(rows), dom.ny + 1, dom.nx)
    E = np.einsum("ii->i", dirichlet_bilinear(fields, fields, dom))
    N = np.diag(h_half_gram(traces, dom.top)).copy()
    with np.errstate(invalid="ignore", divide="ignore"):
        R = np.where(N > 0, E / N, np.nan)
    return TraceEquivalenceReport(E, N, R)
