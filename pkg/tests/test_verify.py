import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockhankel.spaces import LatticeSpec
from fockhankel.verify import (
    LemmaReport,
    check_equivalence_thm,
    check_kernel_bound,
    check_lemma21,
    check_lemma23_series,
    default_kernel_pairs,
    kernel_bound_log_ratio,
    lemma21_ratio,
    lemma23_log_series,
)


@pytest.mark.parametrize("pprime,c", [(2.0, 1.0), (1.0, 0.5), (3.0, 2.0)])
def test_gaussian_growth_integral_closed_form(pprime, c):
    # m = 0, d = 0: the integral is (pi/c) exp(p'^2 |z|^2 / (4c)) exactly
    for z in [1.0, 2.5j, -4.0 + 3.0j]:
        assert lemma21_ratio(0, pprime, c, 0, z) == pytest.approx(math.pi / c, rel=1e-12)


def test_gaussian_growth_integral_with_weight():
    pprime, c, z = 2.0, 1.0, 3.0 - 1.0j
    w0 = pprime * z / (2 * c)
    ref = math.pi / c * (abs(w0) ** 2 + 1 / c) / abs(z) ** 2
    assert lemma21_ratio(0, pprime, c, 2, z) == pytest.approx(ref, rel=1e-11)


def test_growth_integral_report():
    rep = check_lemma21(m=2, pprime=2.0, c=1.0, d=2, sigma=1.0)
    assert rep.verdict == "bounded" and rep.grid_size == 76
    assert rep.ratio_max <= rep.budget
    with pytest.raises(ValueError):
        check_lemma21(d=1)
    with pytest.raises(ValueError):
        check_lemma21(z_grid=[0.5])


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 300.0))
def test_series_closed_forms(y):
    # t = 0 gives e^y; t = 1 gives e^y - 1
    assert lemma23_log_series(0.0, y) == pytest.approx(y, rel=1e-13, abs=1e-13)
    assert lemma23_log_series(1.0, y) == pytest.approx(y + math.log(-math.expm1(-y)), rel=1e-12, abs=1e-12)


def test_series_report():
    rep = check_lemma23_series(0.0)
    assert rep.verdict == "bounded"
    assert abs(rep.ratio_max - 1) < 1e-12 and abs(rep.ratio_min - 1) < 1e-12
    rep = check_lemma23_series(-2.0, M=1.0)
    assert rep.verdict == "bounded"
    with pytest.raises(ValueError):
        lemma23_log_series(1.0, 0.0)


def test_kernel_bound_m0_closed_form():
    pairs = default_kernel_pairs()
    assert pairs.shape == (10000, 2)
    lr = kernel_bound_log_ratio(0, pairs[:, 0], pairs[:, 1])
    ref = -3.0 / 8.0 * np.abs(pairs[:, 0] - pairs[:, 1]) ** 2
    np.testing.assert_allclose(lr, ref, atol=1e-9)


@pytest.mark.parametrize("m", [0, 1, 3])
def test_kernel_bound_report(m):
    rep = check_kernel_bound(m)
    assert rep.verdict == "bounded"
    assert rep.ratio_max <= rep.budget
    with pytest.raises(ValueError):
        check_kernel_bound(m, np.array([[13.0, 0.0]]))


@pytest.mark.parametrize("theorem", ["thm28", "thm32"])
@pytest.mark.parametrize("name", ["const", "conj_z", "disk_ind", "radial_sq", "gauss_bump"])
def test_equivalence_agrees_with_catalog(theorem, name):
    rep = check_equivalence_thm(theorem, name, lattice=LatticeSpec(1.0, 10.0))
    assert rep.verdict == "agree", rep.details
    assert rep.budget is None
    assert ("decomposition_condition" in rep.details) == (theorem == "thm32")


def test_equivalence_rejects_unknown_theorem():
    with pytest.raises(ValueError):
        check_equivalence_thm("thm99", "const")


def test_report_serialisation_excludes_runtime():
    rep = check_lemma23_series(1.0)
    d = json.loads(rep.to_json())
    assert "runtime" not in d and d["lemma"] == "lemma23"
    assert "verdict" in rep.to_text()
    assert not rep.violated
    with pytest.raises(ValueError):
        LemmaReport("x", {}, 0, 0, 0, 0j, None, "bounded")


def test_split_bounds_closed_forms():
    from fockhankel.verify import check_split_bounds, split_profiles

    pts = np.array([3.0 + 0j, -2.0 + 4.0j])
    # B(conj z) = conj z, so the sup of |B g - B g(z)| over a unit disk is 1 and g - B g = 0
    bo, ba = split_profiles(sym_expr("conj_z"), pts, 1.0)
    np.testing.assert_allclose(bo, 1.0, rtol=1e-9)
    assert np.max(ba) < 1e-9
    rep = check_split_bounds("bounded_osc", lattice=LatticeSpec(2.0, 8.0))
    assert rep.verdict == "bounded" and rep.ratio_max <= 1.0
    rep = check_split_bounds("const", lattice=LatticeSpec(2.0, 8.0))
    assert rep.verdict == "bounded"
    with pytest.raises(ValueError):
        check_split_bounds("const", lattice=LatticeSpec(1.0, 2.0))


def sym_expr(name):
    from fockhankel import symbols as sym

    return sym.catalog_entry(name).expr


def test_decomposition_condition_for_known_splits():
    rep = check_equivalence_thm("thm32", "gauss_bump", lattice=LatticeSpec(1.0, 10.0))
    assert rep.details["decomposition_condition"] is True
    assert rep.details["decomposition_parts"]["vo_part"]["vanishing"]
    rep = check_equivalence_thm("thm32", "conj_z", lattice=LatticeSpec(1.0, 10.0))
    assert rep.details["decomposition_condition"] == "unchecked"
