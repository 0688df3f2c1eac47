import json
import math

import numpy as np
import pytest
from scipy.special import gammainc

from fockhankel import symbols as sym
from fockhankel.hankel import (
    HankelError,
    ProbeCurve,
    build_section,
    compactness_verdict,
    hankel_apply,
    hankel_norm_p,
    kernel_coeffs,
    kernel_probe,
    section_norm,
)
from fockhankel.spaces import CoeffVector, eval_basis

CAT = {e.name: e.expr for e in sym.builtin_catalog()}


@pytest.mark.parametrize("N", [1, 4, 16, 32])
def test_conj_z_is_flat(N):
    assert section_norm(build_section(CAT["conj_z"], 0, N)) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("m", [1, 2])
def test_conj_z_weighted_section(m):
    # H b_0 carries the extra mass m + 1; every other column has norm 1
    sec = build_section(CAT["conj_z"], m, 8)
    np.testing.assert_allclose(np.diag(sec.A).real, [m + 1] + [1] * 7, rtol=1e-12)
    assert section_norm(sec) == pytest.approx(math.sqrt(m + 1), rel=1e-12)


@pytest.mark.parametrize("m", [0, 2])
def test_radial_square_section(m):
    N = 12
    sec = build_section(CAT["radial_sq"], m, N)
    np.testing.assert_allclose(sec.A, np.diag(np.arange(N) + m + 1.0), atol=1e-9)


@pytest.mark.parametrize("m", [0, 1])
def test_disk_indicator_section_closed_form(m):
    N = 12
    sec = build_section(CAT["disk_ind"], m, N)
    pk = gammainc(np.arange(N) + m + 1.0, 1.0)
    np.testing.assert_allclose(sec.A, np.diag(pk - pk**2), atol=1e-6)
    assert section_norm(sec) == pytest.approx(math.sqrt(np.max(pk - pk**2)), rel=1e-6)


def test_off_centre_indicator_against_polar_grid():
    # brute force in polar coordinates about the indicator's own centre, where the
    # integrand is smooth; the section's origin-centred grid cuts the circle inside
    # radial panels, so agreement is at the 1e-4 level rather than to rounding
    g = sym.IndicatorAnnulus(0.5 + 0j, 0.0, 1.0)
    N, L = 4, 16
    sec = build_section(g, 0, N, L)
    x, wx = np.polynomial.legendre.leggauss(64)
    r = 0.5 * (x + 1)
    th = 2 * np.pi * np.arange(256) / 256
    v = 0.5 + r[:, None] * np.exp(1j * th)[None, :]
    w = (0.5 * wx * r * 2 * np.pi / 256)[:, None] * np.exp(-np.abs(v) ** 2) / math.pi
    B = np.stack([eval_basis(0, k, v) for k in range(L + 1)])
    gram = np.einsum("kij,lij,ij->lk", B[:N], np.conj(B[:N]), w)
    cross = np.einsum("kij,lij,ij->lk", B[:N], np.conj(B), w)
    np.testing.assert_allclose(sec.G1, gram, atol=2e-4)
    np.testing.assert_allclose(sec.C, cross, atol=2e-4)


def test_analytic_symbols_give_zero():
    for text in ["z^1", "z^2 + 3*z^1", "(1+2i)"]:
        assert section_norm(build_section(sym.parse_symbol(text), 0, 10)) == 0.0


def test_norm_monotone_in_N_and_L():
    g = CAT["bounded_osc"]
    norms = [section_norm(build_section(g, 0, N, 64)) for N in (2, 4, 8, 16)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
    byL = [section_norm(build_section(g, 0, 8, L)) for L in (8, 16, 32, 64)]
    assert all(a >= b * (1 - 1e-12) for a, b in zip(byL, byL[1:]))


def test_double_conj_is_identity():
    g = sym.parse_symbol("zb^1 + sin|z|")
    a = build_section(g, 0, 6).A
    b = build_section(sym.Conj(sym.Conj(g)), 0, 6).A
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_section_validation():
    with pytest.raises(ValueError):
        build_section(CAT["const"], 0, 0)
    with pytest.raises(ValueError):
        build_section(CAT["const"], 0, 8, 3)
    with pytest.raises(sym.AdmissibilityError):
        build_section(sym.Product(sym.RadialExpQ(0.25), sym.RadialExpQ(0.25)), 0, 4)


def test_section_json():
    d = json.loads(build_section(CAT["conj_z"], 0, 2, 3).to_json())
    assert d["N"] == 2 and d["L"] == 3 and len(d["C"]) == 4


def test_pointwise_action():
    f = CoeffVector.basis(0, 0)
    z = np.array([0.3 + 0.2j, -1.0j])
    np.testing.assert_allclose(hankel_apply(CAT["conj_z"], f, z), np.conj(z), atol=1e-12)
    assert abs(hankel_apply(sym.parse_symbol("z^2"), f, 0.7)) < 1e-12
    assert hankel_norm_p(CAT["conj_z"], f, 2.0) == pytest.approx(1.0, rel=1e-12)
    # ||zbar||_{1,0} = sqrt(pi/2)
    assert hankel_norm_p(CAT["conj_z"], f, 1.0) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)
    with pytest.raises(ValueError):
        hankel_apply(CAT["conj_z"], CoeffVector.basis(1, 0), 0.1, m=0)


@pytest.mark.parametrize("m", [0, 2])
def test_kernel_coeffs_are_normalised(m):
    z = 3.0 * np.exp(0.4j)
    a = kernel_coeffs(m, z)
    assert np.sum(np.abs(a) ** 2) == pytest.approx(1.0, abs=1e-12)
    # sum_k b_k(v) conj(b_k(z)) / sqrt(K(z,z)) is the normalised kernel at v
    f = CoeffVector(m, a)
    v = 0.4 - 0.9j
    from fockhankel.stablefun import kernel, kernel_diag_log

    ref = complex(kernel(m, z, v)) * math.exp(-0.5 * kernel_diag_log(m, z))
    assert abs(f(v) - ref) < 1e-10


def test_kernel_coeffs_cap():
    with pytest.raises(HankelError, match="coefficients"):
        kernel_coeffs(0, 70.0)


def test_probes():
    flat = kernel_probe(CAT["conj_z"], 0, radii=(1.0, 2.0, 3.0, 4.0))
    np.testing.assert_allclose(flat.values, 1.0, rtol=1e-10)
    ok, summary = compactness_verdict(flat)
    assert not ok and "not compact" in summary
    van = kernel_probe(CAT["disk_ind"], 0, radii=(2.0, 4.0, 6.0, 8.0))
    assert van.values.shape == (4, 1)
    ok, _ = compactness_verdict(van)
    assert ok and van.direction_max()[-1] <= 1e-3
    assert van.to_csv().splitlines()[0] == "radius,direction_re,direction_im,value"
    with pytest.raises(ValueError):
        compactness_verdict(ProbeCurve(np.arange(3.0), np.ones(1), np.zeros((3, 1))))
    with pytest.raises(ValueError):
        kernel_probe(CAT["conj_z"], 0, radii=(2.0, 1.0))


@pytest.mark.parametrize("name", ["disk_ind", "bounded_osc", "gauss_bump", "re_z"])
def test_real_symbol_and_conjugate_agree(name):
    g = CAT[name]
    a = section_norm(build_section(g, 0, 8))
    b = section_norm(build_section(sym.Conj(g), 0, 8))
    assert abs(a - b) <= 1e-9


@pytest.mark.parametrize("name", ["disk_ind", "bounded_osc", "gauss_bump", "conj_z"])
def test_monotone_grid_for_catalog(name):
    g = CAT[name]
    tab = {(N, k): section_norm(build_section(g, 0, N, k * N)) for N in (4, 8, 16) for k in (1, 2, 4)}
    # non-increasing in L at fixed N
    for N in (4, 8, 16):
        assert tab[(N, 1)] >= tab[(N, 2)] - 1e-12 >= tab[(N, 4)] - 2e-12
    # non-decreasing in N at fixed L (L = 16 admits every N here)
    vals = [section_norm(build_section(g, 0, N, 16)) for N in (4, 8, 16)]
    assert vals[0] <= vals[1] + 1e-12 and vals[1] <= vals[2] + 1e-12


@pytest.mark.parametrize("name", ["disk_ind", "gauss_bump"])
def test_vanishing_symbols_have_compact_probes(name):
    ok, _ = compactness_verdict(kernel_probe(CAT[name], 0))
    assert ok
