"""Experiment description shared by the variation and harness layers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import QField, StripDomain, as_trace, check_criticality, matched_q, solve_harmonic
from .errors import NotCritical
from .flow import default_constants
from .geometry import BumpPerturbation, PeriodicProfile, make_profile


@dataclass(eq=False)
class Scenario:
    profile: PeriodicProfile
    u_star: object = 1.0
    Q: QField = field(default_factory=QField.constant)
    bump: BumpPerturbation | None = None
    nx: int = 256
    ny: int = 128
    K: int = 32
    L: float | None = None
    M: float | None = None
    d0: float | None = None
    alpha: float = 0.5
    name: str = "custom"
    _domains: dict = field(default_factory=dict, repr=False)
    _fields: dict = field(default_factory=dict, repr=False)
    _threshold: float | None = field(default=None, repr=False)

    def __post_init__(self):
        u = self.u_star
        vals = as_trace(u, StripDomain(self.profile, max(self.nx, 8), max(self.ny, 8)))
        if np.min(vals) <= 0.0:
            raise ValueError("bottom datum u* must be positive")
        dL, dM, dd = default_constants(self.profile)
        self.L = dL if self.L is None else self.L
        self.M = dM if self.M is None else self.M
        self.d0 = dd if self.d0 is None else self.d0

    @property
    def h(self) -> float:
        return self.domain().h

    def curve(self, s: float = 0.0):
        return self.profile.perturbed(self.bump, s)

    def domain(self, s: float = 0.0, nx: int | None = None, ny: int | None = None) -> StripDomain:
        key = (float(s), nx or self.nx, ny or self.ny)
        if key not in self._domains:
            self._domains[key] = StripDomain(self.curve(s), key[1], key[2])
        return self._domains[key]

    def state(self, s: float = 0.0, nx: int | None = None, ny: int | None = None):
        """Harmonic field with datum u* at the bottom and 0 on Gamma_s."""
        dom = self.domain(s, nx, ny)
        key = (float(s), dom.nx, dom.ny)
        if key not in self._fields:
            self._fields[key] = solve_harmonic(dom, self.u_star, 0.0)
        return self._fields[key]

    def with_bump(self, bump) -> "Scenario":
        return Scenario(self.profile, self.u_star, self.Q, bump, self.nx, self.ny, self.K,
                        self.L, self.M, self.d0, self.alpha, self.name)

    def with_grid(self, nx: int, ny: int) -> "Scenario":
        return Scenario(self.profile, self.u_star, self.Q, self.bump, nx, ny, self.K,
                        self.L, self.M, self.d0, self.alpha, self.name)

    def criticality_residual(self, nx: int | None = None, ny: int | None = None) -> float:
        dom = self.domain(0.0, nx, ny)
        return check_criticality(self.state(0.0, nx, ny), self.Q, dom).residual

    def criticality_threshold(self) -> float:
        """10 C h^2, with C from the residuals on this grid and the half grid."""
        if self._threshold is None:
            r = self.criticality_residual()
            rc = self.criticality_residual(self.nx // 2, self.ny // 2)
            h = self.domain().h
            hc = self.domain(0.0, self.nx // 2, self.ny // 2).h
            C = abs(rc - r) / (hc**2 - h**2)
            self._threshold = max(10.0 * C * h**2, 1e-8)
        return self._threshold

    def require_critical(self) -> float:
        r = self.criticality_residual()
        thr = self.criticality_threshold()
        if r > thr:
            raise NotCritical(r, thr)
        return r

    def require_stable_q(self, s: float = 0.0) -> None:
        xs = np.linspace(-1.0, 1.0, 2049)
        self.Q.require_positive(float(np.max(self.curve(s).eval(xs))))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "profile": dict(self.profile.description) if self.profile.description else {"kind": "custom"},
            "Q": self.Q.describe(),
            "grid": [self.nx, self.ny],
            "K": self.K,
            "L": self.L,
            "M": self.M,
            "delta0": self.d0,
        }


def flat_critical(nx: int = 256, ny: int = 128, K: int = 32, bump=None) -> Scenario:
    """w = 1, u* = 1, Q = 1: the harmonic state u = 1 - y is critical."""
    return Scenario(make_profile({"kind": "constant", "value": 1.0}), 1.0, QField.constant(1.0), bump,
                    nx, ny, K, name="flat_critical")


def matched_critical(profile, u_star: float = 1.0, nx: int = 256, ny: int = 128, K: int = 32,
                     bump=None) -> Scenario:
    """A curved profile made critical by choosing Q^2 equal to the squared flux."""
    Q = matched_q(profile, u_star, nx, ny)
    return Scenario(profile, u_star, Q, bump, nx, ny, K, name="matched_critical")
