import numpy as np
import pytest

from conftest import cos_mode
from fbstab.elliptic import QField
from fbstab.errors import EpsilonTooLarge, NotCritical, QminViolated
from fbstab.geometry import make_profile
from fbstab.harness import water_wave_scenario
from fbstab.scenario import Scenario, flat_critical
from fbstab.variation import (
    coercivity_constant,
    first_variation,
    mu_epsilon,
    second_variation_along_flow,
    second_variation_form,
    trace_equivalence_check,
    tubular_coercivity,
)


def mode_oracle(k):
    return 2 * k * np.pi / np.tanh(k * np.pi)


def per_mode_minimum(K):
    # constant mode: trace 1 extends to y, energy 2 on |Gamma| = 2, so ratio 2
    vals = [2.0] + [mode_oracle(j) / (1 + j * np.pi) for j in range(1, K + 1)]
    return min(vals)


@pytest.fixture(scope="module")
def small_flat():
    return flat_critical(64, 32, K=8)


def test_first_variation_zero_cases(small_flat):
    u = small_flat.state()
    dom = small_flat.domain()
    assert abs(first_variation(u, small_flat.Q, cos_mode(1), dom)) < 1e-10
    assert first_variation(u, small_flat.Q, 0.0, dom) == 0.0


def test_first_variation_noncritical(flat):
    sc = Scenario(flat, 1.0, QField.constant(2.0), None, 64, 32)
    # (Q^2 - |grad u|^2) V = 3 on Gamma of length 2
    assert first_variation(sc.state(), sc.Q, 1.0, sc.domain()) == pytest.approx(6.0, rel=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_second_variation_cos_modes(k):
    sc = flat_critical(128, 64)
    rep = second_variation_form(cos_mode(k), sc)
    assert rep.boundary == pytest.approx(0.0, abs=1e-12)
    assert rep.total == pytest.approx(mode_oracle(k), rel=1e-2)


def test_second_variation_zero_and_homogeneity(small_flat, wavy):
    assert second_variation_form(0.0, small_flat).total == 0.0
    psi = lambda x: np.sin(np.pi * x) + 0.3 * np.cos(2 * np.pi * x)
    a = second_variation_form(psi, small_flat).total
    b = second_variation_form(lambda x: 3.0 * psi(x), small_flat).total
    assert b == pytest.approx(9.0 * a, rel=1e-12)


def test_second_variation_bulk_nonnegative(small_flat):
    rng = np.random.default_rng(4)
    for _ in range(5):
        c = rng.normal(size=4)
        psi = lambda x, c=c: sum(ci * np.cos(i * np.pi * x + i) for i, ci in enumerate(c))
        assert second_variation_form(psi, small_flat).bulk >= 0.0


def test_not_critical(flat):
    sc = Scenario(flat, 1.0, QField.constant(2.0), None, 64, 32)
    with pytest.raises(NotCritical) as exc:
        second_variation_form(cos_mode(1), sc)
    assert exc.value.residual == pytest.approx(3.0, abs=1e-8)


def test_along_flow_zero_bump(small_flat):
    rep = second_variation_along_flow(0.5, small_flat)
    assert rep.second == 0.0 and rep.first == 0.0


def test_along_flow_s0_matches_form(sym_bump):
    # at s = 0 on a critical state the third integral vanishes; psi = V / Q
    sc = flat_critical(128, 64, bump=sym_bump)
    rep = second_variation_along_flow(0.0, sc)
    form = second_variation_form(sym_bump.eval, sc).total
    assert abs(rep.third) < 1e-9 * abs(form) + 1e-14
    assert rep.second == pytest.approx(form, rel=1e-10)


def test_coercivity_flat(small_flat):
    est = coercivity_constant(small_flat)
    assert est.eigenvalue > 0
    assert est.eigenvalue == pytest.approx(per_mode_minimum(8), rel=0.05)
    assert est.off_diagonal_ratio <= 1e-8


def test_coercivity_negative_curvature_instability():
    # Q = 1 on Gamma but d_nu Q^2 = -10 pushes the form negative on the constant mode
    prof = make_profile({"kind": "constant", "value": 1.0})
    Q = QField.custom(lambda x, y: 1.0 + 10.0 * (1.0 - y) + 0 * x,
                      lambda x, y: (0 * x + 0 * y, -10.0 + 0 * y))
    sc = Scenario(prof, 1.0, Q, None, 64, 32, K=4)
    assert coercivity_constant(sc).eigenvalue < 0


def test_mu_epsilon_divergence(small_flat):
    mus = [mu_epsilon(small_flat, e, K=8, ny=32) for e in (0.2, 0.1, 0.05)]
    assert mus[0] < mus[1] < mus[2]
    for e, m in zip((0.2, 0.1, 0.05), mus):
        assert 0.8 <= e * m <= 1.3


def test_epsilon_too_large(small_flat):
    with pytest.raises(EpsilonTooLarge):
        mu_epsilon(small_flat, 1.5)
    with pytest.raises(EpsilonTooLarge):
        tubular_coercivity(small_flat, 0.0)


def test_tubular_coercivity_monotone(small_flat):
    c = [tubular_coercivity(small_flat, e, K=8).eigenvalue for e in (0.2, 0.1, 0.05)]
    assert c[0] < c[1] <= c[2] + 1e-6
    assert min(c) > 0


def test_trace_equivalence(small_flat):
    psis = [cos_mode(1), cos_mode(3), lambda x: 1.0 + 0 * x, np.sin]
    rep = trace_equivalence_check(small_flat, psis)
    lo, hi = rep.interval
    assert 0 < lo <= hi < np.inf
    doubled = trace_equivalence_check(small_flat, [lambda x: 2 * np.cos(np.pi * x)])
    assert doubled.energies[0] == pytest.approx(4 * rep.energies[0], rel=1e-12)
    assert doubled.ratios[0] == pytest.approx(rep.ratios[0], rel=1e-12)


def test_water_wave_qmin():
    sc = water_wave_scenario(2.0, 1.0, nx=32, ny=16, K=4)
    with pytest.raises(QminViolated):
        coercivity_constant(sc)
