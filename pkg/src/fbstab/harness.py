"""End-to-end experiments: energy along the flow, finite-difference checks of
the second variation, minimality against random bumps, presets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import QField, boundary_gradient, energy, solve_harmonic
from .errors import NotCoercive, QminViolated, TooFewSamples
from .geometry import bump_from_factor, make_profile
from .scenario import Scenario, flat_critical, matched_critical  # noqa: F401  (re-exported)
from .variation import coercivity_constant, second_variation_along_flow


@dataclass
class FlowEnergyTrace:
    s: np.ndarray
    F: np.ndarray
    d2F_analytic: np.ndarray
    d2F_fd: np.ndarray
    defect: np.ndarray
    first: np.ndarray = field(default=None)

    def table(self) -> tuple[list, np.ndarray]:
        cols = ["s", "F", "d2F_analytic", "d2F_fd", "defect"]
        return cols, np.column_stack([self.s, self.F, self.d2F_analytic, self.d2F_fd, self.defect])


def _central_second(F: np.ndarray, ds: float) -> np.ndarray:
    out = np.full(F.shape, np.nan)
    out[1:-1] = (F[:-2] - 2.0 * F[1:-1] + F[2:]) / ds**2
    return out


def energy_along_flow(scenario: Scenario, s_grid, analytic: bool = True) -> FlowEnergyTrace:
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(np.diff(s_grid) <= 0) or s_grid[0] < 0 or s_grid[-1] > 1:
        raise ValueError("s grid must be strictly increasing in [0, 1]")
    F, d2, defect, first = [], [], [], []
    for s in s_grid:
        dom = scenario.domain(s)
        u = scenario.state(s)
        F.append(energy(u, scenario.Q, dom).total)
        uX, uY = boundary_gradient(u.values, dom)
        q2 = scenario.Q.q2(dom.x, dom.top_values)
        defect.append(float(np.max(np.abs(q2 - uX**2 - uY**2))))
        if analytic:
            rep = second_variation_along_flow(s, scenario)
            d2.append(rep.second)
            first.append(rep.first)
        else:
            d2.append(np.nan)
            first.append(np.nan)
    F = np.array(F)
    fd = _central_second(F, s_grid[1] - s_grid[0]) if s_grid.size >= 3 else np.full(F.shape, np.nan)
    return FlowEnergyTrace(s_grid, F, np.array(d2), fd, np.array(defect), np.array(first))


@dataclass
class FDCheckReport:
    center_s: float
    richardson: float
    analytic: float
    deviation: float
    interior_deviation: float
    first_difference: float
    first_variation: float
    F0: float

    @property
    def first_difference_ratio(self) -> float:
        return abs(self.first_difference) / abs(self.F0)


def fd_second_derivative_check(trace: FlowEnergyTrace) -> FDCheckReport:
    s = trace.s
    if s.size < 5:
        raise TooFewSamples(f"need >= 5 s-samples, got {s.size}")
    ds = np.diff(s)
    if np.max(np.abs(ds - ds[0])) > 1e-12 * max(1.0, s[-1]):
        raise ValueError("s samples must be uniformly spaced")
    ds = ds[0]
    F = trace.F
    c = s.size // 2
    d1 = (F[c - 1] - 2.0 * F[c] + F[c + 1]) / ds**2
    d2 = (F[c - 2] - 2.0 * F[c] + F[c + 2]) / (2.0 * ds) ** 2
    rich = (4.0 * d1 - d2) / 3.0
    ana = trace.d2F_analytic[c]
    scale = max(abs(ana), 1e-300)
    dev = abs(rich - ana) / scale if ana != 0.0 or rich != 0.0 else 0.0
    interior = np.abs(trace.d2F_fd[1:-1] - trace.d2F_analytic[1:-1])
    interior_dev = float(np.max(interior / np.maximum(np.abs(trace.d2F_analytic[1:-1]), 1e-300)))
    if np.all(trace.d2F_analytic[1:-1] == 0) and np.all(interior == 0):
        interior_dev = 0.0
    fdiff = (F[1] - F[0]) / ds
    fv = trace.first[0] if trace.first is not None else np.nan
    return FDCheckReport(float(s[c]), float(rich), float(ana), float(dev), interior_dev, float(fdiff),
                         float(fv), float(F[0]))


# ----------------------------------------------------------------------------
# minimality


def random_bump(rng: np.random.Generator, amplitude: float = 0.04, degree: int = 2,
                min_width: float = 0.4) -> "object":
    """(x-a)^4 (b-x)^4 times a random polynomial, rescaled to a given sup norm."""
    while True:
        a, b = np.sort(rng.uniform(-0.9, 0.9, 2))
        if b - a >= min_width:
            break
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    # random factor positive on [a, b] so that the bump keeps one sign
    c = rng.normal(size=degree + 1) * 0.3
    c[0] = 1.0
    xs = np.linspace(-1.0, 1.0, 101)
    vals = np.polynomial.polynomial.polyval(xs, c)
    if np.min(vals) <= 0.1:
        c[0] += 0.1 - np.min(vals)
    # express in x: F((x - mid) / half)
    poly = np.polynomial.Polynomial(c)(np.polynomial.Polynomial([-mid / half, 1.0 / half]))
    return bump_from_factor(float(a), float(b), tuple(poly.coef), amplitude)


@dataclass
class MinimalityReport:
    margins: np.ndarray
    tolerance: float
    C: float
    h: float
    signs: np.ndarray
    amplitudes: np.ndarray
    coercivity: float

    @property
    def all_above_tolerance(self) -> bool:
        return bool(np.all(self.margins >= -self.tolerance))

    @property
    def n_positive(self) -> int:
        return int(np.sum(self.margins > 0.0))


def calibrate_tolerance(scenario: Scenario, probe=None) -> tuple[float, float]:
    """C with |F_h - F| <= C h^2 from two grids, on the base domain and (if given) a probe bump.

    Returns (C, h).
    """
    coarse = scenario.with_grid(scenario.nx // 2, scenario.ny // 2)
    h, hc = scenario.domain().h, coarse.domain().h
    cands = []
    for bump, s in ((None, 0.0), (probe, 1.0)):
        if bump is None and s == 1.0:
            continue
        fine = scenario.with_bump(bump) if bump is not None else scenario
        crs = coarse.with_bump(bump) if bump is not None else coarse
        Ff = energy(fine.state(s), fine.Q, fine.domain(s)).total
        Fc = energy(crs.state(s), crs.Q, crs.domain(s)).total
        cands.append(abs(Fc - Ff) / (hc**2 - h**2))
    return float(max(cands)), h


def minimality_experiment(scenario: Scenario, n_bumps: int = 10, seed: int = 0, amplitude: float = 0.04,
                          K_check: int = 8) -> MinimalityReport:
    """F(u_1) - F(u) for random bumps of alternating sign."""
    coer = coercivity_constant(scenario, K_check).eigenvalue
    if coer <= 0.0:
        raise NotCoercive(f"smallest eigenvalue {coer:.4g} <= 0")
    rng = np.random.default_rng(seed)
    bumps = []
    for i in range(n_bumps):
        b = random_bump(rng, amplitude)
        sign = 1.0 if i % 2 == 0 else -1.0
        bumps.append((b.scaled(sign), sign))
    C, h = calibrate_tolerance(scenario, bumps[0][0] if bumps else None)
    tol = C * h**2
    F0 = energy(scenario.state(0.0), scenario.Q, scenario.domain(0.0)).total
    margins = []
    for b, _ in bumps:
        sc = scenario.with_bump(b)
        margins.append(energy(sc.state(1.0), sc.Q, sc.domain(1.0)).total - F0)
    return MinimalityReport(np.array(margins), tol, C, h, np.array([s for _, s in bumps]),
                            np.array([b.sup_norms()[0] for b, _ in bumps]), coer)


# ----------------------------------------------------------------------------
# presets


def water_wave_scenario(q: float, g: float, profile=None, nx: int = 256, ny: int = 128, K: int = 32,
                        u_star: float | None = None, bump=None) -> Scenario:
    """Scenario with Q = sqrt((q - 2 g y)_+).

    The default datum u* = c sqrt(q - 2 g c) makes the flat profile of height c
    critical; for other profiles the mean height is used.
    """
    profile = make_profile(profile if profile is not None else {"kind": "constant", "value": 1.0})
    c = float(np.mean(profile.eval(np.linspace(-1.0, 1.0, 257)[:-1])))
    if u_star is None:
        u_star = c * np.sqrt(max(q - 2.0 * g * c, 0.0))
        if u_star <= 0.0:
            u_star = c  # degenerate: any positive datum, energy-only use
    sc = Scenario(profile, float(u_star), QField.water_wave(q, g), bump, nx, ny, K, name="water_wave")
    return sc


def stability_precondition(scenario: Scenario) -> None:
    """Raise QminViolated unless Q stays positive on the free boundary."""
    try:
        scenario.require_stable_q()
    except QminViolated:
        raise


def degenerate_energy(scenario: Scenario) -> float:
    u = solve_harmonic(scenario.domain(), scenario.u_star, 0.0)
    return energy(u, scenario.Q).total
