"""Command-line entry point: ``fbstab <subcommand> --config <path>``."""

from __future__ import annotations

import argparse
import copy
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .elliptic import QField, check_criticality, check_euler_lagrange, energy, flux_array, top_normal
from .errors import ConfigInvalid, FbstabError
from .flow import (
    build_diffeo,
    conservation_residual,
    derivative_bounds_check,
    flow_maps,
    admissibility_report,
    hitting_time,
    integrate_characteristic,
    t0_implicit_residual,
    tangential_residual,
)
from .geometry import bump_from_factor, make_bump, make_profile
from .harness import energy_along_flow, fd_second_derivative_check, minimality_experiment, water_wave_scenario
from .scenario import Scenario, matched_critical
from .variation import coercivity_constant, mu_epsilon, second_variation_form

SUBCOMMANDS = ("solve", "criticality", "secondvar", "coercivity", "flow", "verify", "sweep", "wave")
CONFIG_VERSION = 1

DEFAULTS = {
    "version": CONFIG_VERSION,
    "scenario": {
        "profile": {"kind": "constant", "value": 1.0},
        "u_star": None,
        "Q": {"kind": "constant", "value": 1.0},
        "bump": None,
        "grid": {"nx": 256, "ny": 128},
        "K": 32,
        "flow": {"L": None, "M": None, "delta0": None},
        "alpha": 0.5,
    },
    "command": {
        "eps": [0.2, 0.1, 0.05],
        "s_grid": [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0],
        "fd_s_grid": [0.0, 0.025, 0.05, 0.075, 0.1],
        "flow_s": [0.25, 0.5, 1.0],
        "lambdas": [0.1, 0.01, 0.001],
        "n_bumps": 10,
        "seed": 0,
        "K_verify": 16,
    },
    "output": {"dir": "fbstab_out"},
}

PROFILE_KEYS = {"kind", "value", "mean", "amplitude", "mode", "cos", "sin", "values", "coefficients"}
Q_KEYS = {"kind", "value", "q", "g"}
BUMP_KEYS = {"a", "b", "factor", "coefficients", "amplitude"}


def _merge(base: dict, over: dict, path: str) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}.{k}" if path else k
        if k not in base:
            raise ConfigInvalid(where, "unknown key")
        if isinstance(base[k], dict) and base[k] and k not in ("profile", "Q"):
            if not isinstance(v, dict):
                raise ConfigInvalid(where, "expected a mapping")
            out[k] = _merge(base[k], v, where)
        else:
            out[k] = v
    return out


def _check_keys(d, allowed, where):
    if d is None:
        return
    if not isinstance(d, dict):
        raise ConfigInvalid(where, "expected a mapping")
    for k in d:
        if k not in allowed:
            raise ConfigInvalid(f"{where}.{k}", "unknown key")


@dataclass
class RunConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, raw: dict | None) -> "RunConfig":
        raw = raw or {}
        if not isinstance(raw, dict):
            raise ConfigInvalid("<root>", "expected a mapping")
        data = _merge(DEFAULTS, raw, "")
        cls.validate(data)
        return cls(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigInvalid("<file>", f"unparsable: {exc}") from None
        except OSError as exc:
            raise ConfigInvalid("<file>", str(exc)) from None
        return cls.from_dict(raw)

    @staticmethod
    def validate(d: dict) -> None:
        if d["version"] != CONFIG_VERSION:
            raise ConfigInvalid("version", f"expected {CONFIG_VERSION}")
        sc = d["scenario"]
        _check_keys(sc["profile"], PROFILE_KEYS, "scenario.profile")
        _check_keys(sc["Q"], Q_KEYS, "scenario.Q")
        _check_keys(sc["bump"], BUMP_KEYS, "scenario.bump")
        g = sc["grid"]
        for k in ("nx", "ny"):
            if not isinstance(g[k], int) or isinstance(g[k], bool):
                raise ConfigInvalid(f"scenario.grid.{k}", "expected an integer")
        if g["nx"] < 8:
            raise ConfigInvalid("scenario.grid.nx", "Nx≥8 required")
        if g["ny"] < 8:
            raise ConfigInvalid("scenario.grid.ny", "Ny≥8 required")
        if not isinstance(sc["K"], int) or sc["K"] < 0:
            raise ConfigInvalid("scenario.K", "non-negative integer required")
        if 2 * sc["K"] + 1 > g["nx"] // 2:
            raise ConfigInvalid("scenario.K", "2K+1 must not exceed Nx/2")
        if not 0.0 < float(sc["alpha"]) <= 1.0:
            raise ConfigInvalid("scenario.alpha", "must lie in (0, 1]")
        q = sc["Q"]
        if q.get("kind") not in ("constant", "water_wave", "matched"):
            raise ConfigInvalid("scenario.Q.kind", "one of constant, water_wave, matched")
        cmd = d["command"]
        for e in cmd["eps"]:
            if not float(e) > 0:
                raise ConfigInvalid("command.eps", "entries must be positive")
        for key in ("s_grid", "fd_s_grid", "flow_s"):
            arr = np.asarray(cmd[key], dtype=float)
            if arr.ndim != 1 or arr.size == 0 or np.any(arr < 0) or np.any(arr > 1):
                raise ConfigInvalid(f"command.{key}", "values in [0, 1] required")
        if not isinstance(cmd["seed"], int):
            raise ConfigInvalid("command.seed", "integer required")
        if sc["u_star"] is not None and not float(sc["u_star"]) > 0:
            raise ConfigInvalid("scenario.u_star", "must be positive")
        if not isinstance(cmd["n_bumps"], int) or cmd["n_bumps"] < 0:
            raise ConfigInvalid("command.n_bumps", "non-negative integer required")

    def override(self, nx=None, ny=None, K=None, seed=None) -> "RunConfig":
        d = copy.deepcopy(self.data)
        if nx is not None:
            d["scenario"]["grid"]["nx"] = nx
        if ny is not None:
            d["scenario"]["grid"]["ny"] = ny
        if K is not None:
            d["scenario"]["K"] = K
        if seed is not None:
            d["command"]["seed"] = seed
        self.validate(d)
        return RunConfig(d)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data


def build_bump(spec):
    if spec is None:
        return None
    a, b = float(spec["a"]), float(spec["b"])
    if "coefficients" in spec:
        bump = make_bump(spec["coefficients"], a, b)
        if spec.get("amplitude") is not None:
            bump = bump.scaled(float(spec["amplitude"]) / bump.sup_norms()[0])
        return bump
    return bump_from_factor(a, b, tuple(spec.get("factor", (1.0,))), spec.get("amplitude"))


def build_scenario(cfg: RunConfig) -> Scenario:
    sc = cfg.data["scenario"]
    profile = make_profile(sc["profile"])
    bump = build_bump(sc["bump"])
    nx, ny = sc["grid"]["nx"], sc["grid"]["ny"]
    fl = sc["flow"]
    q = sc["Q"]
    if q["kind"] == "water_wave":
        s = water_wave_scenario(float(q["q"]), float(q["g"]), profile, nx, ny, sc["K"],
                                u_star=sc["u_star"], bump=bump)
    elif q["kind"] == "matched":
        s = matched_critical(profile, float(sc["u_star"] or 1.0), nx, ny, sc["K"], bump)
    else:
        s = Scenario(profile, float(sc["u_star"] or 1.0), QField.constant(float(q.get("value", 1.0))), bump, nx, ny,
                     sc["K"], name="config")
    s.L = fl["L"] if fl["L"] is not None else s.L
    s.M = fl["M"] if fl["M"] is not None else s.M
    s.d0 = fl["delta0"] if fl["delta0"] is not None else s.d0
    s.alpha = float(sc["alpha"])
    return s


# ----------------------------------------------------------------------------
# reports


class Report:
    def __init__(self, command: str, cfg: RunConfig):
        self.command = command
        self.cfg = cfg
        self.checks: list[dict] = []
        self.values: dict = {}
        self.series: dict[str, tuple[list, np.ndarray]] = {}
        self.errors: list[dict] = []

    def check(self, name: str, value, bound, passed: bool, relation: str = "<="):
        self.checks.append({
            "name": name,
            "value": _jsonable(value),
            "bound": _jsonable(bound),
            "relation": relation,
            "pass": bool(passed),
        })

    def le(self, name, value, bound):
        self.check(name, value, bound, bool(value <= bound), "<=")

    def ge(self, name, value, bound):
        self.check(name, value, bound, bool(value >= bound), ">=")

    def error(self, exc: Exception, where: str):
        rec = {"name": f"{where}:{type(exc).__name__}", "value": str(exc), "bound": None,
               "relation": "raises", "pass": False}
        self.checks.append(rec)
        self.errors.append(rec)

    @property
    def exit_code(self) -> int:
        if self.errors:
            return 2
        return 0 if all(c["pass"] for c in self.checks) else 1

    def document(self) -> dict:
        import scipy

        return {
            "command": self.command,
            "config": self.cfg.data,
            "checks": self.checks,
            "values": _jsonable(self.values),
            "series": sorted(self.series),
            "summary": {"n_checks": len(self.checks), "n_failed": sum(not c["pass"] for c in self.checks),
                        "exit_code": self.exit_code},
            "versions": {"fbstab": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else str(f)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def emit(report: Report, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    p = out / "report.json"
    p.write_text(json.dumps(report.document(), sort_keys=True, indent=2) + "\n", newline="\n")
    paths.append(p)
    for name, (cols, table) in sorted(report.series.items()):
        p = out / f"{name}.csv"
        lines = [",".join(cols)]
        for row in np.atleast_2d(table):
            lines.append(",".join("%.17g" % v for v in row))
        p.write_text("\n".join(lines) + "\n", newline="\n")
        paths.append(p)
    return paths


# ----------------------------------------------------------------------------
# subcommands


def cmd_solve(sc: Scenario, cfg, rep: Report):
    u = sc.state()
    dom = sc.domain()
    e = energy(u, sc.Q, dom)
    rep.values["energy"] = {"dirichlet": e.dirichlet, "volume": e.volume, "total": e.total}
    el = check_euler_lagrange(u, sc.Q, dom)
    rep.values["euler_lagrange"] = el
    rep.le("interior_residual", el["interior_residual"], 1e-6)
    rep.le("boundary_value_residual", el["boundary_value_residual"], 0.0)
    lo, hi = float(np.min(u.values)), float(np.max(u.values))
    bmin = min(float(np.min(u.bottom_trace)), 0.0)
    bmax = max(float(np.max(u.bottom_trace)), 0.0)
    rep.check("maximum_principle", [lo, hi], [bmin, bmax], bool(lo >= bmin - 1e-12 and hi <= bmax + 1e-12), "within")
    rep.series["flux"] = (["x", "flux"], np.column_stack([dom.x, flux_array(u.values, dom)]))


def cmd_criticality(sc: Scenario, cfg, rep: Report):
    c = check_criticality(sc.state(), sc.Q, sc.domain())
    thr = sc.criticality_threshold()
    rep.values["criticality"] = {"residual": c.residual, "threshold": thr, "max_flux": c.max_flux}
    rep.le("criticality_residual", c.residual, thr)
    rep.check("flux_negative", c.max_flux, 0.0, c.flux_negative, "<")
    el = check_euler_lagrange(sc.state(), sc.Q, sc.domain())
    rep.le("flux_residual", el["flux_residual"], max(1e-6, np.sqrt(thr)))


def _is_flat_unit(sc: Scenario) -> bool:
    return sc.profile.is_flat and sc.Q.kind == "constant" and sc.Q.value == 1.0 and \
        abs(float(sc.profile.eval(0.0)) - 1.0) < 1e-15 and float(np.asarray(sc.u_star)) == 1.0


def cmd_secondvar(sc: Scenario, cfg, rep: Report):
    if _is_flat_unit(sc):
        for k in (1, 2, 3):
            r = second_variation_form(lambda x, k=k: np.cos(k * np.pi * x), sc)
            exact = 2 * k * np.pi / np.tanh(k * np.pi)
            rep.le(f"secondvar_cos{k}_relerr", abs(r.total - exact) / exact, 0.01)
    if sc.bump is not None:
        from .flow import graph_velocities
        from .variation import second_variation_along_flow

        V, _ = graph_velocities(sc.profile, sc.bump, 0.0, sc.domain().x)
        form = second_variation_form(V, sc)
        flow = second_variation_along_flow(0.0, sc)
        rep.values["secondvar"] = {"form": form.total, "along_flow": flow.second, "third": flow.third}
        rep.le("secondvar_cross_module_relerr", abs(flow.second - form.total) / max(abs(form.total), 1e-300), 0.02)
        rep.ge("secondvar_nonnegative", form.total, 0.0)


def cmd_coercivity(sc: Scenario, cfg, rep: Report, K=None):
    est = coercivity_constant(sc, K)
    rep.values["coercivity"] = {"K": est.K, "eigenvalue": est.eigenvalue, "asymmetry": est.asymmetry,
                                "off_diagonal_ratio": est.off_diagonal_ratio}
    rep.check("coercivity_positive", est.eigenvalue, 0.0, est.eigenvalue > 0.0, ">")
    if _is_flat_unit(sc):
        kk = np.arange(1, est.K + 1) * np.pi
        analytic = float(min(2.0, np.min(2 * kk / np.tanh(kk) / (1 + kk))))
        rep.values["coercivity"]["analytic"] = analytic
        rep.le("coercivity_vs_analytic_relerr", abs(est.eigenvalue - analytic) / analytic, 0.05)
        rep.le("mode_decoupling", est.off_diagonal_ratio, 1e-8)


def cmd_flow(sc: Scenario, cfg, rep: Report):
    if sc.bump is None:
        rep.check("bump_present", None, None, False, "required")
        return
    b = sc.bump
    xs = np.linspace(-1.0, 1.0, sc.nx + 1)
    rows = []
    for s in cfg.data["command"]["flow_s"]:
        m = flow_maps(float(s), xs, sc.profile, b)
        tag = f"s={float(s):g}"
        rep.check(f"t0_in_range[{tag}]", [float(m.t0.min()), float(m.t0.max())], [0.0, float(s)],
                  bool(np.all(m.t0 >= 0) and np.all(m.t0 <= s)), "within")
        rep.le(f"graph_defect[{tag}]", m.defect, 1e-8)
        rep.le(f"tangential_residual[{tag}]", tangential_residual(m), 1e-12)
        gap = float(np.max(np.abs(m.dsg) - np.abs(m.phi_g)))
        rep.le(f"est1_gap[{tag}]", gap, 0.0)
        live = np.flatnonzero(np.abs(b.eval(xs)) > 1e-8)
        if live.size:
            probe = xs[live[live.size // 3]]
            hit = hitting_time(float(s), float(probe), sc.profile, b)
            rep.le(f"t0_implicit[{tag}]", t0_implicit_residual(float(s), float(probe), hit, sc.profile, b), 1e-6)
            tr = integrate_characteristic(probe, sc.profile, b, hit.t0)
            rep.le(f"conservation[{tag}]", conservation_residual(tr, sc.profile, b), 1e-6)
        for i in range(xs.size):
            rows.append([float(s), xs[i], m.g[i], m.h[i], m.t0[i], m.dxg[i], m.dsg[i]])
    rep.series["flow_maps"] = (["s", "x", "g", "h", "t0", "dxg", "dsg"], np.array(rows))
    fam = build_diffeo(sc.profile, b, sc.L, sc.M, sc.d0)
    adm = admissibility_report(fam)
    rep.values["admissibility"] = adm.values
    for k, v in adm.clauses.items():
        key, bound = ADMISSIBILITY_VALUES[k]
        rep.check(f"admissible_{k}", adm.values[key], bound, v, "holds")


ADMISSIBILITY_VALUES = {
    "injective": ("injectivity_norm", 1.0),
    "identity_at_0": ("phi0_defect", 1e-14),
    "support_in_U": ("support_defect", 0.0),
    "image_is_graph": ("image_defect", 1e-8),
    "c2_bounded": ("c2_proxy", None),
}


def cmd_sweep(sc: Scenario, cfg, rep: Report):
    cmd = cfg.data["command"]
    if sc.bump is None:
        rep.check("bump_present", None, None, False, "required")
        return
    tr = energy_along_flow(sc, cmd["s_grid"])
    rep.series["energy_trace"] = tr.table()
    rep.ge("energy_margin_min", float(np.min(tr.F - tr.F[0])), -1e-8)
    db = derivative_bounds_check(sc.profile, sc.bump, cmd["lambdas"])
    rep.series["derivative_bounds"] = (["lambda", "sup_dxg", "sup_dxh", "sup_dxi", "sup_deta"],
                                       np.column_stack([db.lambdas, db.sup_dxg, db.sup_dxh, db.sup_dxi, db.sup_deta]))
    rep.values["derivative_slopes"] = db.slopes
    rep.check("sign_preserved", None, None, db.sign_preserved, "holds")
    if cmd["n_bumps"] > 0:
        cmd_minimality(sc, cfg, rep)


def cmd_verify(sc: Scenario, cfg, rep: Report):
    cmd = cfg.data["command"]
    cmd_criticality(sc, cfg, rep)
    cmd_secondvar(sc, cfg, rep)
    cmd_coercivity(sc, cfg, rep, K=cmd["K_verify"])
    if sc.bump is not None:
        cmd_flow(sc, cfg, rep)
        tr = energy_along_flow(sc, cmd["fd_s_grid"])
        rep.series["fd_trace"] = tr.table()
        fd = fd_second_derivative_check(tr)
        rep.values["fd_check"] = fd.__dict__
        rep.le("fd_second_derivative_deviation", fd.deviation, 0.05)
        rep.le("first_difference_over_F", fd.first_difference_ratio, 1e-3)
    if _is_flat_unit(sc):
        mus = [mu_epsilon(sc, float(e), K=min(sc.K, 8)) for e in cmd["eps"]]
        rep.values["mu_epsilon"] = dict(zip([str(e) for e in cmd["eps"]], mus))
        for e, m in zip(cmd["eps"], mus):
            v = float(e) * m
            rep.check(f"eps_mu[{e}]", v, [0.8, 1.3], bool(0.8 <= v <= 1.3), "within")


def cmd_wave(sc: Scenario, cfg, rep: Report):
    dom = sc.domain()
    gx, gy = sc.Q.grad_q2(dom.x, dom.top_values)
    nx_, ny_ = top_normal(dom)
    dnu = gx * nx_ + gy * ny_
    expected = -2.0 * sc.Q.g * ny_
    rep.le("dnu_Q2_matches", float(np.max(np.abs(dnu - expected))), 1e-10)
    e = energy(sc.state(), sc.Q, dom)
    rep.values["energy"] = {"dirichlet": e.dirichlet, "volume": e.volume, "total": e.total}
    qmin, qmax = sc.Q.bounds_on(dom)
    rep.values["Q_bounds"] = [qmin, qmax]
    sc.require_stable_q()
    cmd_coercivity(sc, cfg, rep, K=min(sc.K, 8))


def cmd_minimality(sc: Scenario, cfg, rep: Report):
    cmd = cfg.data["command"]
    mr = minimality_experiment(sc, cmd["n_bumps"], cmd["seed"])
    rep.series["minimality"] = (["margin", "sign", "amplitude"], np.column_stack([mr.margins, mr.signs, mr.amplitudes]))
    rep.ge("minimality_min_margin", float(np.min(mr.margins)), -mr.tolerance)


HANDLERS = {
    "solve": cmd_solve,
    "criticality": cmd_criticality,
    "secondvar": cmd_secondvar,
    "coercivity": cmd_coercivity,
    "flow": cmd_flow,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "wave": cmd_wave,
}


def run(cfg: RunConfig, subcommand: str) -> Report:
    rep = Report(subcommand, cfg)
    try:
        sc = build_scenario(cfg)
        HANDLERS[subcommand](sc, cfg, rep)
    except FbstabError as exc:
        rep.error(exc, subcommand)
    return rep


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="fbstab", description="Second-variation stability experiments.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None)
    ap.add_argument("--grid-nx", type=int, default=None)
    ap.add_argument("--grid-ny", type=int, default=None)
    ap.add_argument("--modes", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config).override(args.grid_nx, args.grid_ny, args.modes, args.seed)
    except ConfigInvalid as exc:
        print(f"ConfigInvalid: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.data["output"]["dir"])
    t0 = time.perf_counter()
    rep = run(cfg, args.subcommand)
    wall = time.perf_counter() - t0
    emit(rep, out)
    # wall-clock kept out of the report so that reports are byte-reproducible
    (out / "timing.json").write_text(json.dumps({"wall_clock_s": wall}) + "\n")
    for c in rep.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}  value={c['value']}  bound={c['bound']}")
    print(f"exit {rep.exit_code}")
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
