"""Characteristic flow of a graph perturbation and the maps g, h, Psi_s, Phi_s.

Trajectories start on the graph of w and run along

    xi'  = -w'(xi) phi(xi) - (eta - w(xi)) phi'(xi),
    eta' = phi(xi),

until they meet the graph of w + s phi.  The state is carried as
(xi, zeta = eta - w(xi)), which keeps the hit residual zeta - s phi(xi) free of
cancellation when phi is tiny.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import (
    CutoffInfeasible,
    NoHitDetected,
    NotAZero,
    NotInjective,
    StepCountTooSmall,
    UndefinedAtZero,
)

ZERO_TOL = 1e-14
DEFAULT_STEPS = 256
HORIZON = 1.05
BISECT_ITERS = 64

IMMEDIATE = "Immediate"
DETECTED = "Detected"
CLOSED_FORM = "ClosedFormLimit"


def _rhs(xi, zeta, a, b, w, phi):
    w1, w2 = w.eval(xi, 1), w.eval(xi, 2)
    f0, f1 = phi.eval(xi, 0), phi.eval(xi, 1)
    dxi = -w1 * f0 - zeta * f1
    dzeta = f0 - w1 * dxi
    if a is None:
        return dxi, dzeta, None, None
    f2 = phi.eval(xi, 2)
    da = -(w2 * f0 + zeta * f2) * a - f1 * b
    db = f1 * a
    return dxi, dzeta, da, db


def _rk4_step(state, tau, w, phi):
    xi, zeta, a, b = state
    var = a is not None

    def shift(k, c):
        return (
            xi + c * k[0],
            zeta + c * k[1],
            a + c * k[2] if var else None,
            b + c * k[3] if var else None,
        )

    k1 = _rhs(xi, zeta, a, b, w, phi)
    k2 = _rhs(*shift(k1, 0.5 * tau), w, phi)
    k3 = _rhs(*shift(k2, 0.5 * tau), w, phi)
    k4 = _rhs(*shift(k3, tau), w, phi)

    def comb(i, y):
        return y + tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    return (
        comb(0, xi),
        comb(1, zeta),
        comb(2, a) if var else None,
        comb(3, b) if var else None,
    )


@dataclass
class Trajectory:
    """RK4 samples of one or many characteristics (seed axis last)."""

    t: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    dxi: np.ndarray | None = None
    deta: np.ndarray | None = None


def integrate_characteristic(x, profile, bump, t_end: float, steps: int = DEFAULT_STEPS,
                             variational: bool = True) -> Trajectory:
    """Fixed-step RK4 from (x, w(x)); x may be a scalar or an array of seeds.

    ``t_end`` may also be an array (one horizon per seed).
    """
    if steps < 4:
        raise StepCountTooSmall(f"need at least 4 steps, got {steps}")
    x = np.asarray(x, dtype=float)
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), x.shape)
    if np.any(t_end < 0):
        raise ValueError("t_end must be >= 0")
    phi = _as_bump(bump)
    tau = t_end / steps
    state = (x.copy(), np.zeros_like(x),
             np.ones_like(x) if variational else None,
             profile.eval(x, 1) if variational else None)
    xs, zs, As, Bs = [state[0]], [state[1]], [state[2]], [state[3]]
    for _ in range(steps):
        state = _rk4_step(state, tau, profile, phi)
        xs.append(state[0])
        zs.append(state[1])
        As.append(state[2])
        Bs.append(state[3])
    xi = np.array(xs)
    zeta = np.array(zs)
    t = np.linspace(0.0, 1.0, steps + 1).reshape((-1,) + (1,) * x.ndim) * t_end
    return Trajectory(
        t=t, xi=xi, zeta=zeta, eta=profile.eval(xi) + zeta,
        dxi=np.array(As) if variational else None,
        deta=np.array(Bs) if variational else None,
    )


class _NoBump:
    is_zero = True

    def eval(self, x, order: int = 0):
        return np.zeros_like(np.asarray(x, dtype=float))


def _as_bump(bump):
    return _NoBump() if bump is None else bump


# ----------------------------------------------------------------------------
# hitting times


@dataclass
class HitArrays:
    s: np.ndarray
    x: np.ndarray
    t0: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    dxi: np.ndarray
    deta: np.ndarray
    residual: np.ndarray
    status: np.ndarray


def _hits(s, x, profile, bump, steps: int = DEFAULT_STEPS) -> HitArrays:
    """Vectorized hitting times for paired arrays (s, x)."""
    s, x = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    s, x = s.ravel().copy(), x.ravel().copy()
    if np.any((s < 0) | (s > 1)):
        raise ValueError("s must lie in [0, 1]")
    phi = _as_bump(bump)
    f0 = phi.eval(x)
    imm = (s == 0.0) | (np.abs(f0) < ZERO_TOL)
    closed = ~imm & (np.abs(phi.eval(x, 1)) < ZERO_TOL) & (np.abs(profile.eval(x, 1)) < ZERO_TOL)

    n = x.size
    t0 = np.zeros(n)
    xi = x.copy()
    zeta = np.zeros(n)
    dxi = np.ones(n)
    deta = profile.eval(x, 1)
    status = np.full(n, IMMEDIATE, dtype=object)

    gen = ~imm
    if np.any(gen):
        xs, ss, sg = x[gen], s[gen], np.sign(f0[gen])
        horizon = HORIZON * ss
        tau = horizon / steps
        state = (xs.copy(), np.zeros_like(xs), np.ones_like(xs), profile.eval(xs, 1))
        found = np.zeros(xs.size, dtype=bool)
        k_hit = np.zeros(xs.size, dtype=int)
        prev = [np.empty_like(xs) for _ in range(4)]
        for k in range(1, steps + 1):
            new = _rk4_step(state, tau, profile, phi)
            r = sg * (new[1] - ss * phi.eval(new[0]))
            hit = ~found & (r >= 0.0)
            for i in range(4):
                prev[i][hit] = state[i][hit]
            k_hit[hit] = k
            found |= hit
            state = new
            if found.all():
                break
        if not found.all():
            bad = np.flatnonzero(~found)[0]
            raise NoHitDetected(f"no hit before t={horizon[bad]:.4g} for x={xs[bad]:.6g}, s={ss[bad]:.4g}")
        base = tuple(p.copy() for p in prev)
        lo = np.zeros(xs.size)
        hi = tau.copy()
        for _ in range(BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            st = _rk4_step(base, mid, profile, phi)
            r = sg * (st[1] - ss * phi.eval(st[0]))
            up = r >= 0.0
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
        fin = _rk4_step(base, hi, profile, phi)
        t_hit = (k_hit - 1) * tau + hi
        t0[gen] = np.clip(t_hit, 0.0, ss)
        xi[gen], zeta[gen], dxi[gen], deta[gen] = fin
        status[gen] = DETECTED

    if np.any(closed):
        t0[closed] = s[closed]
        xi[closed] = x[closed]
        zeta[closed] = s[closed] * f0[closed]
        status[closed] = CLOSED_FORM

    residual = zeta - s * phi.eval(xi)
    residual[imm] = 0.0
    return HitArrays(s, x, t0, xi, zeta, dxi, deta, residual, status)


@dataclass(frozen=True)
class HitResult:
    t0: float
    point: tuple
    status: str
    residual: float = 0.0


def hitting_time(s: float, x: float, profile, bump, steps: int = DEFAULT_STEPS) -> HitResult:
    h = _hits(s, x, profile, bump, steps)
    g = float(h.xi[0])
    return HitResult(float(h.t0[0]), (g, float(profile.eval(g) + h.zeta[0])), str(h.status[0]),
                     float(h.residual[0]))


# ----------------------------------------------------------------------------
# flow maps


@dataclass
class FlowMaps:
    s: float
    x: np.ndarray
    g: np.ndarray
    h: np.ndarray
    t0: np.ndarray
    dxg: np.ndarray
    dsg: np.ndarray
    dxh: np.ndarray
    dsh: np.ndarray
    dxi: np.ndarray
    deta: np.ndarray
    slope: np.ndarray  # w'(g) + s phi'(g)
    phi_g: np.ndarray
    w1_x: np.ndarray  # w'(x)
    residual: np.ndarray
    status: np.ndarray
    profile: object = field(repr=False, default=None)
    bump: object = field(repr=False, default=None)

    @property
    def defect(self) -> float:
        """max |h - w(g) - s phi(g)|."""
        W = self.profile.eval(self.g) + self.s * _as_bump(self.bump).eval(self.g)
        return float(np.max(np.abs(self.h - W)))

    @property
    def normal_velocity(self) -> np.ndarray:
        return normal_velocity(self)

    @property
    def acceleration(self) -> np.ndarray:
        return acceleration_normal(self)


def flow_maps(s: float, x_grid, profile, bump, steps: int = DEFAULT_STEPS) -> FlowMaps:
    x = np.asarray(x_grid, dtype=float)
    phi = _as_bump(bump)
    hit = _hits(s, x, profile, bump, steps)
    g = hit.xi
    h = profile.eval(g) + hit.zeta
    fg = phi.eval(g)
    p = profile.eval(g, 1) + s * phi.eval(g, 1)
    dsg = -fg * p / (1.0 + p**2)
    dsg = np.where(np.abs(fg) < ZERO_TOL, 0.0, dsg)
    dxg = (hit.dxi + p * hit.deta) / (1.0 + p**2)
    zero = np.abs(phi.eval(x)) < ZERO_TOL
    w1x = profile.eval(x, 1)
    if np.any(zero):
        p0 = w1x + s * phi.eval(x, 1)
        dxg = np.where(zero, np.sqrt(1.0 + w1x**2) / np.sqrt(1.0 + p0**2), dxg)
    dxh = p * dxg
    dsh = p * dsg + fg
    return FlowMaps(
        s=float(s), x=x, g=g, h=h, t0=hit.t0, dxg=dxg, dsg=dsg, dxh=dxh, dsh=dsh,
        dxi=hit.dxi, deta=hit.deta, slope=p, phi_g=fg, w1_x=w1x,
        residual=hit.residual, status=hit.status, profile=profile, bump=bump,
    )


# ----------------------------------------------------------------------------
# closed forms


def t0_implicit_residual(s: float, x: float, hit: HitResult, profile, bump, nodes: int = 256) -> float:
    """|t0 - int_0^s dr / (1 + [w'(g(r,x)) + r phi'(g(r,x))]^2)| by Gauss-Legendre in r."""
    phi = _as_bump(bump)
    if abs(float(phi.eval(x))) < ZERO_TOL:
        raise UndefinedAtZero(f"phi({x}) = 0")
    if s == 0.0:
        return abs(hit.t0)
    r, wts = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * s * (r + 1.0)
    wts = 0.5 * s * wts
    hits = _hits(r, np.full_like(r, x), profile, bump)
    p = profile.eval(hits.xi, 1) + r * phi.eval(hits.xi, 1)
    return abs(hit.t0 - float(np.sum(wts / (1.0 + p**2))))


def T0_closed_form(s: float, x: float, profile, bump) -> float:
    phi = _as_bump(bump)
    w1 = float(profile.eval(x, 1))
    f1 = float(phi.eval(x, 1))
    if abs(f1) < ZERO_TOL:
        return s / (1.0 + w1**2)
    return (np.arctan(w1 + s * f1) - np.arctan(w1)) / f1


def partial_s_g_closed(s: float, x, maps: FlowMaps):
    """-phi(g) p / (1 + p^2) with p = w'(g) + s phi'(g); 0 where phi(g) = 0.

    ``x=None`` evaluates on the grid of ``maps``.
    """
    phi = _as_bump(maps.bump)
    g = maps.g if x is None else np.interp(x, maps.x, maps.g)
    fg = phi.eval(g)
    p = maps.profile.eval(g, 1) + s * phi.eval(g, 1)
    return np.where(np.abs(fg) < ZERO_TOL, 0.0, -fg * p / (1.0 + p**2))


def partial_x_g_at_zero(s: float, x0: float, profile, bump) -> float:
    phi = _as_bump(bump)
    if abs(float(phi.eval(x0))) >= ZERO_TOL:
        raise NotAZero(f"phi({x0}) = {float(phi.eval(x0)):.3e}")
    w1 = float(profile.eval(x0, 1))
    p = w1 + s * float(phi.eval(x0, 1))
    return float(np.sqrt(1.0 + w1**2) / np.sqrt(1.0 + p**2))


def tangential_residual(maps: FlowMaps) -> float:
    return float(np.max(np.abs(maps.dxg * maps.dsg + maps.dxh * maps.dsh)))


def phi_dot(maps: FlowMaps) -> np.ndarray:
    """Phi_s' . (D Phi_s)^{-T} nu at (x, w(x)), unnormalized."""
    sq = np.sqrt(1.0 + maps.w1_x**2)
    return -(maps.dxh / maps.dxg) * maps.dsg / sq + maps.dsh / sq


def normal_scale(maps: FlowMaps) -> np.ndarray:
    """|(D Phi_s)^{-T} nu| on Gamma."""
    return np.sqrt(1.0 + maps.slope**2) / np.sqrt(1.0 + maps.w1_x**2)


def normal_velocity(maps: FlowMaps) -> np.ndarray:
    """(X_s . nu_s) at Phi_s(x, w(x))."""
    return phi_dot(maps) / normal_scale(maps)


def phi_ddot(maps: FlowMaps) -> np.ndarray:
    """Phi_s'' . (D Phi_s)^{-T} nu at (x, w(x)), unnormalized."""
    phi = _as_bump(maps.bump)
    W2 = maps.profile.eval(maps.g, 2) + maps.s * phi.eval(maps.g, 2)
    return (W2 * maps.dsg**2 + 2.0 * phi.eval(maps.g, 1) * maps.dsg) / np.sqrt(1.0 + maps.w1_x**2)


def acceleration_normal(maps: FlowMaps) -> np.ndarray:
    """(Z_s . nu_s) at Phi_s(x, w(x))."""
    return phi_ddot(maps) / normal_scale(maps)


def graph_velocities(profile, bump, s: float, xi):
    """(X_s . nu_s, Z_s . nu_s) at the point (xi, w(xi) + s phi(xi)) of Gamma_s.

    Both depend on the image abscissa only, so they can be sampled directly on
    any grid of Gamma_s.
    """
    phi = _as_bump(bump)
    xi = np.asarray(xi, dtype=float)
    f0, f1 = phi.eval(xi), phi.eval(xi, 1)
    p = profile.eval(xi, 1) + s * f1
    W2 = profile.eval(xi, 2) + s * phi.eval(xi, 2)
    dsg = -f0 * p / (1.0 + p**2)
    sq = np.sqrt(1.0 + p**2)
    return f0 / sq, (W2 * dsg**2 + 2.0 * f1 * dsg) / sq


# ----------------------------------------------------------------------------
# conservation law and bounds


def conservation_residual(traj: Trajectory, profile, bump) -> float:
    """max_t |int_0^t (xi'^2 + eta'^2)/phi(xi)^2 dr - zeta(t)/phi(xi(t))| on one trajectory."""
    phi = _as_bump(bump)
    xi, zeta = traj.xi, traj.zeta
    f0 = phi.eval(xi)
    if np.any(np.abs(f0) < ZERO_TOL):
        raise UndefinedAtZero("phi vanishes along the trajectory")
    dxi, dzeta, _, _ = _rhs(xi, zeta, None, None, profile, phi)
    deta = f0
    integrand = (dxi**2 + deta**2) / f0**2
    t = traj.t
    t1 = t.reshape(t.shape[0], -1)[:, 0]
    if t1[-1] == 0.0:
        return 0.0
    lhs = cumulative_simpson(integrand, x=t1, axis=0, initial=0.0)
    return float(np.max(np.abs(lhs - zeta / f0)))


@dataclass
class DerivativeBoundsReport:
    lambdas: np.ndarray
    sup_dxg: np.ndarray
    sup_dxh: np.ndarray
    sup_dxi: np.ndarray
    sup_deta: np.ndarray
    sign_preserved: bool
    slopes: dict

    def ratios(self, name: str) -> np.ndarray:
        v = getattr(self, name)
        return v[:-1] / v[1:]


def derivative_bounds_check(profile, bump0, lambdas, s_grid=(0.25, 0.5, 0.75, 1.0), nx: int = 129,
                            steps: int = DEFAULT_STEPS) -> DerivativeBoundsReport:
    lambdas = np.asarray(lambdas, dtype=float)
    xs = np.linspace(bump0.a, bump0.b, nx)
    out = {k: [] for k in ("dxg", "dxh", "dxi", "deta")}
    sign_ok = True
    for lam in lambdas:
        bump = bump0.scaled(lam)
        if lam == 0.0:
            for k in out:
                out[k].append(0.0)
            continue
        dxg = dxh = 0.0
        for s in s_grid:
            m = flow_maps(s, xs, profile, bump, steps)
            dxg = max(dxg, float(np.max(np.abs(m.dxg - 1.0))))
            dxh = max(dxh, float(np.max(np.abs(m.dxh - m.w1_x))))
        # trajectories up to the largest hitting time
        smax = max(s_grid)
        m = flow_maps(smax, xs, profile, bump, steps)
        live = np.abs(bump.eval(xs)) >= ZERO_TOL
        tr = integrate_characteristic(xs[live], profile, bump, m.t0[live], steps)
        out["dxg"].append(dxg)
        out["dxh"].append(dxh)
        out["dxi"].append(float(np.max(np.abs(tr.dxi - 1.0))) if live.any() else 0.0)
        out["deta"].append(float(np.max(np.abs(tr.deta - profile.eval(xs[live], 1)))) if live.any() else 0.0)
        if live.any():
            f_traj = bump.eval(tr.xi)
            sign_ok &= bool(np.all(f_traj * bump.eval(xs[live]) > 0.0))
    arr = {k: np.array(v) for k, v in out.items()}
    slopes = {}
    pos = lambdas > 0
    for k, v in arr.items():
        ok = pos & (v > 0)
        if ok.sum() >= 2:
            slopes[k] = float(np.polyfit(np.log(lambdas[ok]), np.log(v[ok]), 1)[0])
    return DerivativeBoundsReport(lambdas, arr["dxg"], arr["dxh"], arr["dxi"], arr["deta"], sign_ok, slopes)


# ----------------------------------------------------------------------------
# diffeomorphisms


def smoothstep(z):
    z = np.clip(z, 0.0, 1.0)
    return z**3 * (10.0 - 15.0 * z + 6.0 * z**2)


def smoothstep_d(z):
    inside = (z > 0.0) & (z < 1.0)
    zc = np.clip(z, 0.0, 1.0)
    return np.where(inside, 30.0 * zc**2 * (1.0 - zc) ** 2, 0.0)


def smoothstep_dd(z):
    inside = (z > 0.0) & (z < 1.0)
    zc = np.clip(z, 0.0, 1.0)
    return np.where(inside, 60.0 * zc * (1.0 - zc) * (1.0 - 2.0 * zc), 0.0)


@dataclass(frozen=True)
class Cutoff:
    """C^2 quintic ramp: 0 below L, 1 on [L+d0, M+2-d0], 0 above M+2."""

    L: float
    M: float
    d0: float

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        up = smoothstep((y - self.L) / self.d0)
        down = smoothstep((self.M + 2.0 - y) / self.d0)
        return up * down

    def d(self, y):
        y = np.asarray(y, dtype=float)
        zu, zd = (y - self.L) / self.d0, (self.M + 2.0 - y) / self.d0
        return (smoothstep_d(zu) * smoothstep(zd) - smoothstep(zu) * smoothstep_d(zd)) / self.d0

    @property
    def max_slope(self) -> float:
        return 1.875 / self.d0


def default_constants(profile, n: int = 4097) -> tuple[float, float, float]:
    xs = np.linspace(-1.0, 1.0, n)
    w = profile.eval(xs)
    L = 0.4 * float(np.min(w))
    return L, float(np.max(w)) + 0.5, min(1.0, L) / 2.0


@dataclass
class DiffeoFamily:
    profile: object
    bump: object
    L: float
    M: float
    d0: float
    steps: int = DEFAULT_STEPS
    maps: dict = field(default_factory=dict, repr=False)

    @property
    def cutoff(self) -> Cutoff:
        return Cutoff(self.L, self.M, self.d0)

    @property
    def box(self) -> tuple[float, float, float, float]:
        a, b = (self.bump.a, self.bump.b) if self.bump is not None else (0.0, 0.0)
        return a, b, self.L, self.M + 2.0

    def _gh(self, s, x):
        x = np.asarray(x, dtype=float)
        ux, inv = np.unique(x.ravel(), return_inverse=True)
        m = flow_maps(s, ux, self.profile, self.bump, self.steps)
        shape = x.shape
        return tuple(v[inv].reshape(shape) for v in (m.g, m.h, m.dxg, m.dxh))

    def phi(self, s: float, X, Y):
        X, Y = np.broadcast_arrays(np.asarray(X, float), np.asarray(Y, float))
        g, h, _, _ = self._gh(s, X)
        lam = self.cutoff(Y)
        w = self.profile.eval(X)
        return X + lam * (g - X), Y + lam * (h - w)

    def dphi_minus_id(self, s: float, X, Y) -> np.ndarray:
        """D Phi_s - I, shape (..., 2, 2)."""
        X, Y = np.broadcast_arrays(np.asarray(X, float), np.asarray(Y, float))
        g, h, dxg, dxh = self._gh(s, X)
        lam, dlam = self.cutoff(Y), self.cutoff.d(Y)
        w, w1 = self.profile.eval(X), self.profile.eval(X, 1)
        out = np.empty(X.shape + (2, 2))
        out[..., 0, 0] = lam * (dxg - 1.0)
        out[..., 0, 1] = dlam * (g - X)
        out[..., 1, 0] = lam * (dxh - w1)
        out[..., 1, 1] = dlam * (h - w)
        return out

    def injectivity_norm(self, s: float, nx: int = 129, ny: int = 129) -> float:
        a, b, lo, hi = self.box
        X, Y = np.meshgrid(np.linspace(a, b, nx), np.linspace(lo, hi, ny))
        D = self.dphi_minus_id(s, X, Y)
        return float(np.max(np.linalg.norm(D, ord=2, axis=(-2, -1))))


def build_diffeo(profile, bump, L: float | None = None, M: float | None = None, d0: float | None = None,
                 s_check=(0.25, 0.5, 1.0), steps: int = DEFAULT_STEPS) -> DiffeoFamily:
    dL, dM, dd = default_constants(profile)
    L = dL if L is None else float(L)
    M = dM if M is None else float(M)
    d0 = dd if d0 is None else float(d0)
    xs = np.linspace(-1.0, 1.0, 4097)
    w = profile.eval(xs)
    if not (0.0 < 2.0 * L < float(np.min(w))):
        raise CutoffInfeasible(f"need 0 < 2L < min w, got L={L:.4g}, min w={np.min(w):.4g}")
    if not M > float(np.max(w)):
        raise CutoffInfeasible(f"need M > max w, got M={M:.4g}")
    if not (0.0 < d0 < min(1.0, L)):
        raise CutoffInfeasible(f"need 0 < delta0 < min(1, L), got {d0:.4g}")
    fam = DiffeoFamily(profile, bump, L, M, d0, steps)
    if bump is not None and not bump.is_zero:
        worst = max(fam.injectivity_norm(s, 65, 65) for s in s_check)
        if worst >= 1.0:
            raise NotInjective(worst)
    return fam


@dataclass
class AdmissibilityReport:
    clauses: dict
    values: dict

    @property
    def passed(self) -> bool:
        return all(self.clauses.values())

    @property
    def violations(self) -> list:
        return [k for k, v in self.clauses.items() if not v]


def admissibility_report(fam: DiffeoFamily, s_samples=(0.0, 0.25, 0.5, 1.0), n: int = 65) -> AdmissibilityReport:
    clauses, values = {}, {}
    a, b, lo, hi = fam.box
    zero = fam.bump is None or fam.bump.is_zero
    # (ii) injectivity
    inj = 0.0 if zero else max(fam.injectivity_norm(s, n, n) for s in s_samples)
    values["injectivity_norm"] = inj
    clauses["injective"] = inj < 1.0
    # (iii) identity at s = 0
    rng = np.random.default_rng(0)
    X = rng.uniform(-1.0, 1.0, 100)
    Y = rng.uniform(0.0, fam.M + 3.0, 100)
    P0 = fam.phi(0.0, X, Y)
    values["phi0_defect"] = float(max(np.max(np.abs(P0[0] - X)), np.max(np.abs(P0[1] - Y))))
    clauses["identity_at_0"] = values["phi0_defect"] <= 1e-14
    # (iv) support
    Xo = np.concatenate([rng.uniform(-1.0, a, 50) if a > -1.0 else [], rng.uniform(b, 1.0, 50) if b < 1.0 else [],
                         rng.uniform(-1.0, 1.0, 100)])
    Yo = np.concatenate([rng.uniform(0.0, fam.M + 3.0, Xo.size - 100), np.where(rng.random(100) < 0.5,
                         rng.uniform(0.0, lo, 100), rng.uniform(hi, hi + 1.0, 100))])
    sup = 0.0
    for s in s_samples:
        P = fam.phi(s, Xo, Yo)
        sup = max(sup, float(np.max(np.abs(P[0] - Xo))), float(np.max(np.abs(P[1] - Yo))))
    values["support_defect"] = sup
    clauses["support_in_U"] = sup == 0.0
    # image identity Phi_s(Gamma) = graph of w + s phi
    xs = np.linspace(-1.0, 1.0, 201)
    img = 0.0
    for s in s_samples:
        gx, gy = fam.phi(s, xs, fam.profile.eval(xs))
        W = fam.profile.eval(gx) + s * _as_bump(fam.bump).eval(gx)
        img = max(img, float(np.max(np.abs(gy - W))))
    values["image_defect"] = img
    clauses["image_is_graph"] = img <= 1e-8
    # (i) C^2 proxy: second x-differences of Phi_s on Gamma at two resolutions
    c2 = []
    for m in (64, 128):
        xg = np.linspace(a, b, m + 1) if not zero else np.linspace(-1.0, 1.0, m + 1)
        hstep = xg[1] - xg[0]
        s = max(s_samples)
        gx, gy = fam.phi(s, xg, fam.profile.eval(xg))
        d2 = max(np.max(np.abs(np.diff(gx, 2))), np.max(np.abs(np.diff(gy, 2)))) / hstep**2
        c2.append(float(d2))
    values["c2_proxy"] = c2
    clauses["c2_bounded"] = bool(np.isfinite(c2).all() and c2[1] <= 1.5 * c2[0] + 1e-12)
    return AdmissibilityReport(clauses, values)
