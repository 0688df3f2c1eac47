import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockhankel import symbols as sym
from fockhankel.spaces import (
    CoeffVector,
    LatticeSpec,
    binned_profile,
    bmo_norm,
    bo_norm,
    classify_profile,
    disk_mean,
    eval_basis,
    inner_2m,
    is_vanishing,
    norm_pm,
    oscillations,
    project,
    vanishing_profile,
)

CAT = {e.name: e.expr for e in sym.builtin_catalog()}
SMALL = LatticeSpec(1.0, 6.0)


def mono_norm(k, p, m):
    # ||z^k||_{p,m} from the radial Gamma integral
    lg = math.lgamma((k + m) * p / 2 + 1) - math.lgamma(m * p / 2 + 1) + k * p / 2 * math.log(2 / p)
    return math.exp(lg / p)


@pytest.mark.parametrize("m", [0, 1, 3])
@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0])
def test_constant_has_unit_norm(p, m):
    assert norm_pm(CAT["const"], p, m) == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("k", [1, 2, 5])
@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("m", [0, 2])
def test_monomial_norms(k, p, m):
    assert norm_pm(sym.Mono(k, 0), p, m) == pytest.approx(mono_norm(k, p, m), rel=1e-11)


def test_sqrt_pi_over_two():
    assert norm_pm(sym.parse_symbol("z^1"), 1.0, 0) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-13)


def test_radial_power_norm_matches_gamma():
    # |z|^1.5 is not a polynomial in t = |z|^2
    p, m, s = 2.0, 1, 1.5
    ref = math.sqrt(math.gamma(m + s + 1) / math.gamma(m + 1))
    assert norm_pm(sym.RadialPower(s), p, m) == pytest.approx(ref, rel=1e-11)


@pytest.mark.parametrize("m", [0, 1, 4])
def test_basis_is_orthonormal_under_quadrature(m):
    for j in range(6):
        for k in range(6):
            bj = lambda v, j=j: eval_basis(m, j, v)
            bk = lambda v, k=k: eval_basis(m, k, v)
            got = inner_2m(bj, bk, m)
            assert abs(got - (j == k)) < 1e-12


@pytest.mark.parametrize("m", [0, 2])
def test_projection_of_analytic_polynomial_recovers_coefficients(m):
    c = np.array([1.0, -2j, 0.5, 0, 3.0])
    f = CoeffVector(m, c)
    got = project(f, m, 8).coeffs
    np.testing.assert_allclose(got[:5], c, atol=1e-12)
    assert np.max(np.abs(got[5:])) < 1e-12


@pytest.mark.parametrize("m", [0, 1, 3])
def test_projection_of_modulus_square(m):
    # P(|z|^2) is the constant E|v|^2 = m + 1
    c = project(CAT["radial_sq"], m, 6).coeffs
    assert c[0] == pytest.approx(m + 1, rel=1e-13)
    assert np.max(np.abs(c[1:])) < 1e-12


def test_projection_of_conj_z_is_zero():
    c = project(CAT["conj_z"], 0, 10).coeffs
    assert np.max(np.abs(c)) < 1e-13


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=8),
       st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=8),
       st.integers(0, 3))
def test_parseval_matches_quadrature(a, b, m):
    f, g = CoeffVector(m, a), CoeffVector(m, b)
    exact = inner_2m(f, g, m)
    quad = inner_2m(lambda v: f(v), lambda v: g(v), m)
    scale = max(1.0, np.linalg.norm(a) * np.linalg.norm(b))
    assert abs(exact - quad) < 1e-11 * scale


def test_disk_mean_value_property():
    g = sym.parse_symbol("z^3 + 2*z^1 + 1")
    z = 1.3 - 0.4j
    assert abs(disk_mean(g, z, 0.8) - (z**3 + 2 * z + 1)) < 1e-12


def test_disk_mean_of_indicator_is_lens_fraction():
    # centre on the unit circle, radius 1: lens area 2pi/3 - sqrt(3)/2
    z = complex(math.cos(0.3), math.sin(0.3))
    ref = (2 * math.pi / 3 - math.sqrt(3) / 2) / math.pi
    assert disk_mean(CAT["disk_ind"], z, 1.0) == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_conj_z_oscillation_is_r_over_sqrt2(r):
    rep = bmo_norm(CAT["conj_z"], r, 2.0, LatticeSpec(r, 4.0))
    np.testing.assert_allclose(rep.values, r / math.sqrt(2), rtol=1e-12)


def test_conj_z_oscillation_p1():
    # mean |v - z| over B(z, r) = 2r/3
    vals = oscillations(CAT["conj_z"], np.array([0j, 2 + 1j]), 1.5, 1.0)
    np.testing.assert_allclose(vals, 1.0, rtol=1e-12)


def test_re_z_oscillation_p2():
    # mean |Re(v - z)|^2 over a disk of radius r is r^2/4
    vals = oscillations(CAT["re_z"], np.array([0j, -3 + 2j]), 1.0, 2.0)
    np.testing.assert_allclose(vals, 0.5, rtol=1e-12)


def test_bo_of_conj_z_is_radius():
    rep = bo_norm(CAT["conj_z"], 1.0, SMALL)
    np.testing.assert_allclose(rep.values, 1.0, rtol=1e-13)


def test_bo_rejects_indicator():
    with pytest.raises(ValueError, match="continuous"):
        bo_norm(CAT["disk_ind"], 1.0, SMALL)


def test_lattice_points():
    pts = LatticeSpec(1.0, 2.0).points()
    assert len(pts) == 13 and np.all(np.abs(pts) <= 2.0)
    assert LatticeSpec.default_for(1.0).delta == 0.5
    with pytest.raises(ValueError):
        LatticeSpec(0.0)


def test_profile_classification():
    radii = np.arange(1, 11, dtype=float)
    assert classify_profile([(r, 1e-5 / r) for r in radii]) == "vanishing"
    assert classify_profile([(r, 0.7) for r in radii]) == "bounded"
    assert classify_profile([(r, 0.3 * r) for r in radii]) == "diverging"
    # rising noise far below the tolerance is not growth
    assert classify_profile([(r, 1e-15 * r**3) for r in radii]) == "vanishing"
    assert not is_vanishing([(1.0, 0.0), (2.0, 0.0)])


def test_binned_profile_takes_bin_maximum():
    pts = np.array([0.2, 0.9j, 1.5, -1.7, 2.2])
    prof = binned_profile(pts, np.array([1.0, 3.0, 2.0, 5.0, 0.5]))
    assert prof == [(0.0, 3.0), (1.0, 5.0), (2.0, 0.5)]


def test_vanishing_profiles_for_catalog():
    wide = LatticeSpec(1.0, 9.0)
    assert vanishing_profile("bmo", CAT["gauss_bump"], 1.0, 2.0, wide).vanishing
    assert vanishing_profile("ba", CAT["disk_ind"], 1.0, 2.0, wide).vanishing
    assert not vanishing_profile("bmo", CAT["conj_z"], 1.0, 2.0, SMALL).vanishing
    rep = vanishing_profile("bmo", CAT["radial_sq"], 1.0, 2.0, LatticeSpec(1.0, 10.0))
    assert rep.classify() == "diverging"
    with pytest.raises(ValueError):
        vanishing_profile("xx", CAT["const"], 1.0)


def test_report_serialisation():
    rep = bmo_norm(CAT["conj_z"], 1.0, 2.0, LatticeSpec(1.0, 1.0))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "z_re,z_im,value" and len(lines) == 6
    d = rep.to_dict()
    assert d["estimator"] == "bmo" and len(d["values"]) == 5
    assert rep.to_json() == rep.to_json()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=10),
       st.integers(0, 3))
def test_norm_matches_parseval(c, m):
    f = CoeffVector(m, c)
    assert norm_pm(f, 2.0, m) ** 2 == pytest.approx(float(np.sum(np.abs(c) ** 2)), rel=1e-10, abs=1e-12)


def test_projection_residual_is_orthogonal():
    g = sym.parse_symbol("sin|z| * zb^1 + z^2")
    L = 12
    c = project(g, 0, L)
    for l in range(L + 1):
        b = lambda v, l=l: eval_basis(0, l, v)
        res = inner_2m(lambda v: sym.eval_symbol(g, v) - c(v), b, 0)
        assert abs(res) < 1e-10


@pytest.mark.parametrize("name", ["const", "conj_z", "disk_ind", "bounded_osc", "gauss_bump", "radial_sq"])
def test_membership_flags_persist_at_smaller_radius(name):
    lat = LatticeSpec(1.0, 10.0)
    big = bmo_norm(CAT[name], 1.0, 2.0, lat).classify() != "diverging"
    small = bmo_norm(CAT[name], 0.5, 2.0, lat).classify() != "diverging"
    assert (not big) or small


@pytest.mark.parametrize("name", ["conj_z", "bounded_osc", "disk_ind", "radial_sq"])
def test_oscillation_shift_bound(name):
    # the disk-mean centred oscillation is at most twice the oscillation about any other centre
    pts = LatticeSpec(1.0, 5.0).points()
    own = oscillations(CAT[name], pts, 1.0, 2.0)
    mu = np.asarray(sym.eval_symbol(CAT[name], pts))
    other = oscillations(CAT[name], pts, 1.0, 2.0, centers_mu=mu)
    assert np.all(own <= 2.0 * other + 1e-12)


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
def test_conj_z_grows_at_most_linearly(z, v):
    g = CAT["conj_z"]
    diff = abs(sym.eval_symbol(g, z) - sym.eval_symbol(g, v))
    assert diff <= abs(z - v) + 1
