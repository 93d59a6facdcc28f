import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as P

from fbstab.errors import EndpointConditionViolated, NonPositiveProfile, NotPeriodic
from fbstab.geometry import (
    BoundaryDensity,
    arclength,
    bump_from_factor,
    curvature_of,
    frame,
    h_half_norm,
    l2_norm_gamma,
    make_bump,
    make_profile,
)


def test_constant_profile(flat):
    assert flat(0.3) == 1.0
    assert flat.eval(0.3, 1) == 0.0


def test_cosine_profile_endpoints(wavy):
    assert wavy(1.0) == pytest.approx(0.9, abs=1e-15)
    assert wavy(-1.0) == pytest.approx(0.9, abs=1e-15)
    assert abs(wavy.eval(1.0, 1)) < 1e-15
    assert abs(wavy.eval(-1.0, 1)) < 1e-15


def test_negative_profile_rejected():
    with pytest.raises(NonPositiveProfile):
        make_profile({"kind": "constant", "value": -1.0})
    with pytest.raises(NonPositiveProfile):
        make_profile({"kind": "cosine", "mean": 0.05, "amplitude": 0.1})


def test_samples_profile_matches_fourier(wavy):
    x = np.linspace(-1.0, 1.0, 65)
    prof = make_profile({"kind": "samples", "values": list(wavy(x))})
    xs = np.linspace(-1, 1, 37)
    for k in range(4):
        assert np.allclose(prof.eval(xs, k), wavy.eval(xs, k), atol=1e-11 * np.pi**k)


def test_samples_must_be_periodic():
    with pytest.raises(NotPeriodic):
        make_profile({"kind": "samples", "values": [1.0, 1.1, 1.2, 1.1, 1.05]})


def test_polynomial_profile_periodicity_check():
    # 2 - x^2 has mismatched first derivative at +-1
    with pytest.raises(NotPeriodic):
        make_profile({"kind": "polynomial", "coefficients": [2.0, 0.0, -1.0]})
    # (x^2 - 1)^4 + 1 matches derivatives up to order 3
    c = P.polyadd(P.polypow([-1.0, 0.0, 1.0], 4), [1.0])
    prof = make_profile({"kind": "polynomial", "coefficients": list(c)})
    assert prof(0.0) == pytest.approx(2.0)
    assert prof(1.5) == pytest.approx(prof(-0.5))


def test_bump_closed_form():
    b = make_bump(P.polymul(P.polypow([0.5, 1.0], 4), P.polypow([0.5, -1.0], 4)), -0.5, 0.5)
    assert b(0.0) == pytest.approx(0.5**8, rel=1e-12)
    assert b(-0.5) == 0.0 and b(0.5) == 0.0
    assert np.all(b(np.array([-0.9, -0.51, 0.51, 0.9])) == 0.0)
    for k in range(4):
        assert abs(b.eval(-0.5, k)) < 1e-15
        assert abs(b.eval(0.5, k)) < 1e-15


def test_bump_cubic_zero_rejected():
    poly = P.polymul(P.polypow([0.5, 1.0], 3), P.polypow([0.5, -1.0], 4))
    with pytest.raises(EndpointConditionViolated) as exc:
        make_bump(poly, -0.5, 0.5)
    assert exc.value.derivative == 3
    assert exc.value.endpoint == "a"


def test_zero_bump_accepted():
    b = make_bump([0.0], -0.5, 0.5)
    assert b.is_zero
    assert np.all(b(np.linspace(-1, 1, 11)) == 0.0)


def test_bump_derivatives_match_expanded_polynomial(asym_bump):
    c = asym_bump.coefficients
    xs = np.linspace(-0.59, 0.39, 23)
    for k in range(5):
        ref = P.polyval(xs, P.polyder(c, k) if k else c)
        assert np.allclose(asym_bump.eval(xs, k), ref, rtol=1e-9, atol=1e-12)


def test_bump_factored_form_accurate_near_endpoint():
    b = bump_from_factor(-0.5, 0.5, (1.0,))
    eps = 1e-4
    assert b(-0.5 + eps) == pytest.approx(eps**4 * (1.0 - eps) ** 4, rel=1e-12)


def test_c2alpha_surrogate_dominates_c2(asym_bump):
    assert asym_bump.c2alpha_surrogate() >= asym_bump.c2_norm() > 0


def test_frame_flat(flat):
    fr = frame(flat, None, 0.0, np.linspace(-1, 1, 9))
    assert np.all(fr.curvature == 0.0)
    assert np.allclose(fr.normal, [0.0, 1.0])
    assert np.allclose(fr.tangent, [1.0, 0.0])


def test_frame_cosine_curvature_at_zero(wavy):
    # d(nu)/d(tau) = kappa tau gives kappa = -w''/(1+w'^2)^{3/2} = +0.1 pi^2 at x = 0
    fr = frame(wavy, None, 0.0, np.array([0.0]))
    assert fr.curvature[0] == pytest.approx(0.1 * np.pi**2, rel=1e-14)


def test_frame_zero_bump_same_as_base(wavy):
    x = np.linspace(-1, 1, 17)
    b = make_bump([0.0], -0.5, 0.5)
    f0 = frame(wavy, None, 0.0, x)
    f1 = frame(wavy, b, 1.0, x)
    assert np.array_equal(f0.normal, f1.normal) and np.array_equal(f0.curvature, f1.curvature)


def test_frame_orthonormal(wavy, asym_bump):
    x = np.linspace(-1, 1, 401)
    fr = frame(wavy, asym_bump.scaled(4.0), 0.7, x)
    assert np.allclose(np.linalg.norm(fr.tangent, axis=1), 1.0)
    assert np.allclose(np.linalg.norm(fr.normal, axis=1), 1.0)
    assert np.allclose(np.sum(fr.tangent * fr.normal, axis=1), 0.0, atol=1e-15)
    cross = fr.tangent[:, 0] * fr.normal[:, 1] - fr.tangent[:, 1] * fr.normal[:, 0]
    assert np.allclose(cross, 1.0)


def test_frame_shape_operator_second_order(wavy, asym_bump):
    # d nu / d sigma = kappa tau, central differences in arclength converge at O(h^2)
    bump = asym_bump.scaled(4.0)
    curve = wavy.perturbed(bump, 0.7)
    errs = []
    for n in (1000, 2000):
        x = np.linspace(-1, 1, n + 1)
        fr = frame(wavy, bump, 0.7, x)
        sigma, _ = arclength(curve, n)
        dn = (fr.normal[2:] - fr.normal[:-2]) / (sigma[2:] - sigma[:-2])[:, None]
        errs.append(np.max(np.abs(dn - fr.curvature[1:-1, None] * fr.tangent[1:-1])))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_curvature_disk_convention():
    # upper arc of a circle of radius R around (0, 0) seen from below: kappa = 1/R
    class Arc:
        R = 3.0

        def eval(self, x, order=0):
            x = np.asarray(x, float)
            r = np.sqrt(self.R**2 - x**2)
            return [r, -x / r, -self.R**2 / r**3][order]

    assert curvature_of(Arc(), np.array([0.0, 0.5]))[0] == pytest.approx(1.0 / 3.0)
    assert curvature_of(Arc(), np.array([0.0, 0.5]))[1] == pytest.approx(1.0 / 3.0)


def test_arclength_convergence_second_order(wavy):
    exact = arclength(wavy, 4096)[1]
    e1 = abs(arclength(wavy, 16)[1] - exact)
    e2 = abs(arclength(wavy, 32)[1] - exact)
    assert e2 <= e1 / 4 + 1e-14


def test_l2_norm_examples(flat):
    assert l2_norm_gamma(BoundaryDensity.from_function(lambda x: np.ones_like(x), 64), flat) == pytest.approx(np.sqrt(2))
    assert l2_norm_gamma(BoundaryDensity.from_function(lambda x: np.cos(np.pi * x), 64), flat) == pytest.approx(1.0)
    assert l2_norm_gamma(BoundaryDensity.from_function(np.zeros_like, 64), flat) == 0.0


def test_h_half_examples(flat, wavy):
    zero = BoundaryDensity.from_function(np.zeros_like, 64)
    assert h_half_norm(zero, flat) == 0.0
    cos1 = BoundaryDensity.from_function(lambda x: np.cos(np.pi * x), 64)
    # c_{+-1} = 1/2, |Gamma| = 2: norm^2 = 2 * 2 * (1 + pi) / 4
    assert h_half_norm(cos1, flat) ** 2 == pytest.approx(1.0 + np.pi, rel=1e-12)
    c = -1.7
    const = BoundaryDensity.from_function(lambda x: c + 0 * x, 128)
    length = arclength(wavy, 512)[1]
    assert h_half_norm(const, wavy) == pytest.approx(abs(c) * np.sqrt(length), rel=1e-10)


def test_density_periodicity_enforced():
    with pytest.raises(NotPeriodic):
        BoundaryDensity(np.array([0.0, 1.0, 2.0]))


band = st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=6)


@settings(max_examples=25, deadline=None)
@given(band, band)
def test_h_half_dominates_l2(a, b):
    prof = make_profile({"kind": "cosine", "mean": 1.0, "amplitude": 0.2})

    def f(x):
        out = np.zeros_like(x)
        for k, c in enumerate(a):
            out += c * np.cos(k * np.pi * x)
        for k, c in enumerate(b, start=1):
            out += c * np.sin(k * np.pi * x)
        return out

    psi = BoundaryDensity.from_function(f, 256)
    assert h_half_norm(psi, prof) >= l2_norm_gamma(psi, prof) * (1 - 1e-9)
