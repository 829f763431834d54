"""Spectrum constructors, transforms and enumeration invariants."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaflow import spectra
from zetaflow.spectra import (SpectralCut, SpectralModelError, circle_dirac,
                              drop_kernel, eig_count_in, graded, kernel_adjust,
                              lambda_weight, skew_double, torus_laplacian_shifted,
                              transform)


def eig_multiset(spec, count):
    return sorted((round(complex(v).real, 10), round(complex(v).imag, 10))
                  for v, m in spec.eigenvalues(count) for _ in range(m))


def test_circle_dirac_integer_offset_has_kernel():
    d = circle_dirac(0.0)
    assert not d.invertible
    assert d.has_zero_mode()
    assert any(v == 0 for v, _ in d.eigenvalues(3))


def test_circle_dirac_quarter():
    d = circle_dirac(0.25)
    eigs = d.eigenvalues(5)
    assert eigs[0] == (0.25, 1)
    assert all(m == 1 for _, m in eigs)
    assert d.invertible and d.self_adjoint


def test_circle_dirac_shift_by_one_same_multiset():
    a = circle_dirac(0.25)
    b = circle_dirac(1.25)
    assert eig_multiset(a, 40) == eig_multiset(b, 40)


@given(st.floats(min_value=0.01, max_value=0.99),
       st.integers(min_value=-3, max_value=3))
@settings(max_examples=25, deadline=None)
def test_circle_dirac_integer_shift_property(frac, k):
    assert eig_multiset(circle_dirac(frac), 24) == \
        eig_multiset(circle_dirac(frac + k), 24)


def test_enumeration_deterministic():
    t = torus_laplacian_shifted(2, 1.0)
    assert t.eigenvalues(50) == t.eigenvalues(50)
    prefix = t.eigenvalues(20)
    assert t.eigenvalues(50)[:20] == prefix


def test_torus_multiplicities_lattice_counts():
    t2 = torus_laplacian_shifted(2, 1.0)
    eigs = dict(t2.eigenvalues(6))
    assert eigs[1.0] == 1          # k = (0, 0)
    assert eigs[2.0] == 4          # four unit vectors
    t4 = torus_laplacian_shifted(4, 1.0)
    eigs4 = dict(t4.eigenvalues(6))
    assert eigs4[2.0] == 8
    t1 = torus_laplacian_shifted(1, 0.0)
    vals = t1.eigenvalues(4)
    assert vals[0] == (0.0, 1) and vals[1] == (1.0, 2)


def test_torus_dimension_range():
    with pytest.raises(SpectralModelError):
        torus_laplacian_shifted(5, 1.0)


def test_abs_and_idempotence():
    d = circle_dirac(0.25)
    a1 = transform(d, "abs")
    a2 = transform(a1, "abs")
    assert eig_multiset(a1, 30) == eig_multiset(a2, 30)
    assert a1.positive
    assert a1.eigenvalues(2) == [(0.25, 1), (0.75, 1)]


def test_square_doubles_order():
    d = circle_dirac(0.25)
    sq = transform(d, "square")
    assert sq.order == 2.0
    assert sq.eigenvalues(2) == [(0.0625, 1), (0.5625, 1)]


def test_shift_transform():
    d = circle_dirac(0.25)
    sh = transform(d, "shift", -0.5)
    vals = [v for v, _ in sh.eigenvalues(4)]
    assert sorted(abs(v) for v in vals)[:2] == pytest.approx([0.25, 0.75])
    # {n + 1/4} - 1/2 = {n - 1/4}
    assert (-0.25 + 0j) in [complex(v) for v in vals]


def test_power_requires_positive():
    with pytest.raises(SpectralModelError):
        transform(circle_dirac(0.25), "power", 0.5)
    lam = lambda_weight()
    lam_half = transform(lam, "power", 0.5)
    assert lam_half.order == 0.5
    assert lam_half.eigenvalues(3)[2][0] == pytest.approx(math.sqrt(2))


def test_invert_on_complement():
    d = transform(circle_dirac(0.0), "abs")
    inv = transform(d, "invert_on_complement")
    assert inv.invertible
    vals = [v for v, _ in inv.eigenvalues(4)]
    assert all(v <= 1.0 + 1e-12 for v in vals)
    assert inv.order == -1.0


def test_skew_double_symmetry():
    d = circle_dirac(0.25)
    sk = skew_double(d)
    assert not sk.self_adjoint
    vals = [complex(v) for v, _ in sk.eigenvalues(20)]
    as_set = {(round(v.real, 10), round(v.imag, 10)) for v in vals}
    # closed under negation and conjugation
    assert all((x, -y) in as_set for x, y in as_set)
    assert all((-x, -y) in as_set for x, y in as_set)
    assert all(abs(v.real) < 1e-12 for v in vals)


def test_skew_double_of_stub():
    stub = spectra.finite_stub([1.0])
    sk = skew_double(stub)
    vals = sorted((complex(v).real, complex(v).imag) for v, _ in sk.eigenvalues(2))
    assert vals == [(0.0, -1.0), (0.0, 1.0)]


def test_graded_requires_equal_orders():
    lam = lambda_weight()
    with pytest.raises(SpectralModelError):
        graded(lam, transform(lam, "square"))
    g = graded(lam, lam)
    assert g.order == 1.0


def test_eig_count_examples():
    assert eig_count_in(circle_dirac(0.25), 0.0, 0.5) == 1
    assert eig_count_in(circle_dirac(1.25), 0.0, 0.5) == 1
    assert eig_count_in(circle_dirac(0.25), 0.0, 0.0) == 0
    assert eig_count_in(circle_dirac(0.25), -1.0, 1.0) == 2
    assert eig_count_in(torus_laplacian_shifted(2, 1.0), 0.0, 2.0) == 5


def test_eig_count_requires_real():
    with pytest.raises(SpectralModelError):
        eig_count_in(skew_double(circle_dirac(0.25)), 0.0, 1.0)


def test_kernel_conventions():
    t = torus_laplacian_shifted(2, 0.0)
    assert t.has_zero_mode()
    dropped = drop_kernel(t)
    assert not dropped.has_zero_mode()
    assert dropped.eigenvalues(1) == [(1.0, 4)]
    adjusted = kernel_adjust(t, 1.0)
    assert not adjusted.has_zero_mode()
    assert adjusted.eigenvalues(2)[0] == (1.0 + 0j, 1)  # the fill-in mode
    with pytest.raises(SpectralModelError):
        kernel_adjust(t, -1.0)


def test_cut_admissibility():
    lam = lambda_weight()
    assert SpectralCut(math.pi).admissible_for(lam)
    assert SpectralCut(math.pi / 2).admissible_for(lam)
    d = circle_dirac(0.25)
    assert SpectralCut(math.pi).admissible_for(d)  # from-above convention
    # any other angle on the negative axis direction would hit the spectrum
    assert not SpectralCut(math.pi / 2).admissible_for(skew_double(d))
    with pytest.raises(SpectralModelError):
        SpectralCut(0.0)


def test_branch_log_convention():
    cut = SpectralCut(math.pi)
    assert cut.log(-2.0) == pytest.approx(math.log(2.0) + 1j * math.pi)
    assert cut.log(2.0) == pytest.approx(math.log(2.0))


def test_validate_flags():
    lam = lambda_weight()
    lam.validate()
    bad = spectra.Spectrum(kind="affine", order=1.0,
                           rays=(spectra.Ray(1.0, 0.25, 1.0, math.pi),),
                           positive=True, self_adjoint=True)
    with pytest.raises(SpectralModelError):
        bad.validate()


def test_descriptor_roundtrip_fields():
    d = circle_dirac(0.25).descriptor()
    assert d["kind"] == "affine" and d["order"] == 1.0
    assert d["flags"]["self_adjoint"] is True
    t = torus_laplacian_shifted(3, 2.0).descriptor()
    assert t["torus"] == {"dim": 3, "m2": 2.0, "drop_origin": False}
