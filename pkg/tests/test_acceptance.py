"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` or ``python3 tests/test_acceptance.py``.
"""

import contextlib
import io
import json
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from fbstab.cli import main as cli_main
from fbstab.elliptic import StripDomain, flux_array, solve_harmonic
from fbstab.errors import QminViolated
from fbstab.flow import (
    T0_closed_form,
    conservation_residual,
    derivative_bounds_check,
    flow_maps,
    hitting_time,
    integrate_characteristic,
    partial_x_g_at_zero,
    t0_implicit_residual,
    tangential_residual,
)
from fbstab.geometry import bump_from_factor, make_profile
from fbstab.harness import (
    degenerate_energy,
    energy_along_flow,
    fd_second_derivative_check,
    minimality_experiment,
    stability_precondition,
    water_wave_scenario,
)
from fbstab.scenario import flat_critical
from fbstab.variation import coercivity_constant, mu_epsilon, second_variation_form

ROOT = Path(__file__).resolve().parents[1]
NX, NY, K = 256, 128, 32

FLAT = make_profile({"kind": "constant", "value": 1.0})
WAVY = make_profile({"kind": "cosine", "mean": 1.0, "amplitude": 0.1})
SYM = bump_from_factor(-0.5, 0.5, (1.0,), amplitude=0.05)
ASYM = bump_from_factor(-0.6, 0.4, (1.0, 0.5), amplitude=0.05)
SIGNED = bump_from_factor(-0.6, 0.4, (0.05, 1.0), amplitude=0.2)
FLOW_CASES = [("flat/sym", FLAT, SYM), ("wavy/asym", WAVY, ASYM), ("wavy/signed", WAVY, SIGNED)]


def report(n, passed, detail, elapsed, budget):
    line = f"CRITERION {n:>2}: {'PASS' if passed else 'FAIL'}  {detail}  [{elapsed:.1f}s / target {budget}s]"
    print(line)
    return line


def crit1():
    sc = flat_critical(NX, NY)
    dom = sc.domain()
    flux = flux_array(sc.state().values, dom)
    crit = float(np.max(np.abs(np.abs(flux) - 1.0)))
    errs = []
    for n in (32, 64, 128):
        d = StripDomain(FLAT, 2 * n, n)
        u = solve_harmonic(d, np.cos(np.pi * d.x), 0.0)
        ex = np.cos(np.pi * d.x)[None, :] * np.sinh(np.pi * (1 - d.y)) / np.sinh(np.pi)
        errs.append(np.max(np.abs(u.values - ex)))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = crit <= 1e-6 and all(3.5 <= r <= 4.5 for r in ratios)
    return ok, f"max||grad u|-Q|={crit:.2e}, order ratios={ratios[0]:.3f},{ratios[1]:.3f}"


def crit2():
    sc = flat_critical(NX, NY)
    rel = []
    for k in (1, 2, 3):
        tot = second_variation_form(lambda x, k=k: np.cos(k * np.pi * x), sc).total
        ref = 2 * k * np.pi / np.tanh(k * np.pi)
        rel.append(abs(tot - ref) / ref)
    return max(rel) <= 0.01, "rel errors " + ", ".join(f"{r:.2e}" for r in rel)


def crit3():
    worst = {k: 0.0 for k in "abcdef"}
    for _, prof, bump in FLOW_CASES:
        xs = np.linspace(bump.a, bump.b, 129)
        live = xs[np.abs(bump.eval(xs)) >= 1e-6]
        live = live[np.linspace(0, live.size - 1, 5).astype(int)]
        for s in (0.25, 0.5, 1.0):
            m = flow_maps(s, xs, prof, bump)
            worst["a"] = max(worst["a"], float(np.max(np.maximum(-m.t0, m.t0 - s))))
            worst["b"] = max(worst["b"], m.defect)
            worst["c"] = max(worst["c"], tangential_residual(m))
            worst["e"] = max(worst["e"], float(np.max(np.abs(m.dsg) - np.abs(m.phi_g))))
            for x in live:
                h = hitting_time(s, x, prof, bump)
                tr = integrate_characteristic(x, prof, bump, h.t0)
                worst["d"] = max(worst["d"], conservation_residual(tr, prof, bump))
                worst["f"] = max(worst["f"], t0_implicit_residual(s, x, h, prof, bump))
    ok = (worst["a"] <= 0.0 and worst["b"] <= 1e-8 and worst["c"] <= 1e-12 and worst["d"] <= 1e-6
          and worst["e"] <= 0.0 and worst["f"] <= 1e-6)
    return ok, ("t0 outside [0,s] by {a:.1e}, defect {b:.1e}, tangential {c:.1e}, conservation {d:.1e}, "
                "|dsg|-|phi(g)| {e:.1e}, t0 implicit {f:.1e}").format(**worst)


def crit4():
    epss = (0.02, 0.01, 0.005)
    # (bump, zero, side): endpoints approached from inside, interior simple zero from both sides
    cases = [(ASYM, ASYM.a, 1), (ASYM, ASYM.b, -1), (SIGNED, SIGNED.a, 1), (SIGNED, SIGNED.b, -1),
             (SIGNED, -0.05, 1), (SIGNED, -0.05, -1)]
    mono, order = True, np.inf
    for bump, z, side in cases:
        for s in (0.25, 0.5, 1.0):
            et, eg = [], []
            for e in epss:
                m = flow_maps(s, np.array([z + side * e]), WAVY, bump)
                et.append(abs(m.t0[0] - T0_closed_form(s, z, WAVY, bump)))
                eg.append(abs(m.dxg[0] - partial_x_g_at_zero(s, z, WAVY, bump)))
            for err in (et, eg):
                mono &= err[0] > err[1] > err[2]
                # observed order on the finest pair: a positive power of eps extrapolates to 0
                order = min(order, float(np.log2(err[1] / err[2])))
    ok = bool(mono) and order >= 0.5
    return ok, f"monotone={bool(mono)}, min observed order on finest pair={order:.2f}"


def crit5():
    phi0 = ASYM.scaled(1.0 / ASYM.c2_norm())
    rep = derivative_bounds_check(WAVY, phi0, [1e-1, 1e-2, 1e-3])
    rg, rx = rep.ratios("sup_dxg"), rep.ratios("sup_dxi")
    ok = bool(np.all((rg >= 5) & (rg <= 20)) and np.all((rx >= 5) & (rx <= 20)) and rep.sign_preserved)
    return ok, (f"sup|dxg-1| ratios={np.round(rg, 3).tolist()}, sup|dxxi-1| ratios={np.round(rx, 3).tolist()}, "
                f"slopes dxg={rep.slopes['dxg']:.3f} dxi={rep.slopes['dxi']:.3f}")


def crit6():
    sc = flat_critical(NX, NY, bump=SYM)
    rep = fd_second_derivative_check(energy_along_flow(sc, [0.0, 0.025, 0.05, 0.075, 0.1]))
    ok = rep.deviation <= 0.05 and rep.first_difference_ratio <= 1e-3
    return ok, f"Richardson deviation={rep.deviation:.2e}, |first diff|/F={rep.first_difference_ratio:.2e}"


def crit7():
    est = coercivity_constant(flat_critical(NX, NY, K))
    ref = min([2.0] + [2 * j * np.pi / np.tanh(j * np.pi) / (1 + j * np.pi) for j in range(1, K + 1)])
    rel = abs(est.eigenvalue - ref) / ref
    ok = est.eigenvalue > 0 and rel <= 0.05 and est.off_diagonal_ratio <= 1e-8
    return ok, f"lambda_min={est.eigenvalue:.5f} (analytic {ref:.5f}, rel {rel:.1e}), off-diag={est.off_diagonal_ratio:.1e}"


def crit8():
    sc = flat_critical(NX, NY, K)
    eps = (0.2, 0.1, 0.05)
    mus = [mu_epsilon(sc, e) for e in eps]
    prods = [e * m for e, m in zip(eps, mus)]
    ok = mus[0] < mus[1] < mus[2] and all(0.8 <= p <= 1.3 for p in prods)
    return ok, "eps*mu=" + ", ".join(f"{p:.4f}" for p in prods)


def crit9():
    rep = minimality_experiment(flat_critical(NX, NY, K), n_bumps=10, seed=0)
    ok = rep.all_above_tolerance and rep.n_positive >= 8
    return ok, (f"min margin={np.min(rep.margins):.3e}, tol={rep.tolerance:.2e}, "
                f"positive={rep.n_positive}/10")


def crit10():
    sc = water_wave_scenario(4.0, 1.0, nx=NX, ny=NY, K=K)
    dom = sc.domain()
    gx, gy = sc.Q.grad_q2(dom.x, dom.top_values)
    dnu = float(np.max(np.abs(gy + 2.0) + np.abs(gx)))
    deg = water_wave_scenario(2.0, 1.0, nx=NX, ny=NY, K=K)
    raised = False
    try:
        stability_precondition(deg)
    except QminViolated:
        raised = True
    e = degenerate_energy(deg)
    ok = dnu <= 1e-10 and raised and np.isfinite(e)
    return ok, f"|d_nu Q^2 + 2|={dnu:.1e}, degenerate raises QminViolated={raised}, energy={e:.6f}"


def crit11():
    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            out = Path(tmp) / f"run{i}"
            with contextlib.redirect_stdout(io.StringIO()):
                cli_main(["verify", "--config", str(ROOT / "configs" / "flat_critical.yaml"), "--out", str(out),
                          "--seed", "0"])
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*")) if p.name != "timing.json"})
        code = json.loads(outs[0]["report.json"])["summary"]["exit_code"]
    same = outs[0] == outs[1]
    return same, f"byte-identical={same} over {len(outs[0])} files, verify exit code={code}"


CRITERIA = [(1, crit1, 10), (2, crit2, 30), (3, crit3, 60), (4, crit4, 30), (5, crit5, 60), (6, crit6, 120),
            (7, crit7, 120), (8, crit8, 60), (9, crit9, 300), (10, crit10, 10), (11, crit11, 120)]


@pytest.mark.slow
@pytest.mark.parametrize("n,fn,budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(n, fn, budget, capsys):
    t = time.perf_counter()
    ok, detail = fn()
    with capsys.disabled():
        print()
        report(n, ok, detail, time.perf_counter() - t, budget)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, fn, budget in CRITERIA:
        t = time.perf_counter()
        ok, detail = fn()
        report(n, ok, detail, time.perf_counter() - t, budget)
        failed += not ok
    sys.exit(1 if failed else 0)
