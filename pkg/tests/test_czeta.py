"""Weighted trace germs, zeta values and heat finite parts against oracles."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zetaflow import czeta, spectra
from zetaflow.czeta import (GAMMA_RELATION_SIGN, constant_ray_multiplier,
                            gamma_relation_check, generic_trace_germ,
                            heat_trace_fp, heat_trace_value, identity_multiplier,
                            log_multiplier, power_multiplier, weighted_trace_germ,
                            zeta, zeta_germ)
from zetaflow.germs import ContinuationError
from zetaflow.hurwitz import EULER_GAMMA
from zetaflow.spectra import (GenericData, SpectralModelError, Spectrum,
                              TailDescriptor, asymmetric_weight, circle_dirac,
                              drop_kernel, lambda_weight, torus_laplacian_shifted,
                              transform)

mp.mp.dps = 30

LAM = lambda_weight()
LAM2X = transform(LAM, "scale", 2.0)


def laurent_fp_oracle(f_mp, h="1e-3"):
    """Finite part at 0 of an mpmath function with (at most) a simple pole:
    symmetric averaging (f(h) + f(-h))/2 kills 1/z, Richardson kills h^2, h^4.

    The whole computation stays in mpmath; a float step near the pole would
    lose ~1/h^2 digits to argument rounding.
    """
    step = mp.mpf(h)
    vals = [(f_mp(step / 2 ** k) + f_mp(-step / 2 ** k)) / 2 for k in range(3)]
    v1 = (4 * vals[1] - vals[0]) / 3
    v2 = (4 * vals[2] - vals[1]) / 3
    return complex((16 * v2 - v1) / 15)


def test_weighted_trace_inverse_multiplier_expansion():
    # tr(Lambda^-1 Lambda^-z) = 2 zeta(1+z): residue 2, finite part 2*gamma
    germ = weighted_trace_germ(power_multiplier(LAM, -1.0), LAM)
    fp_oracle = laurent_fp_oracle(lambda z: 2 * mp.zeta(1 + z))
    assert germ.residue == pytest.approx(2.0, abs=1e-11)
    assert germ.finite_part == pytest.approx(2 * EULER_GAMMA, abs=1e-11)
    assert germ.finite_part == pytest.approx(fp_oracle, abs=1e-10)


def test_weighted_trace_identity_multiplier():
    germ = weighted_trace_germ(identity_multiplier(LAM), LAM)
    assert germ.residue == pytest.approx(0.0, abs=1e-12)
    assert germ.finite_part == pytest.approx(-1.0, abs=1e-12)


def test_weighted_trace_scaled_weight():
    # tr(Lambda^-1 (2 Lambda)^-z) = 2^-z * 2 zeta(1+z): f.p. 2 gamma - 2 log 2
    mult = power_multiplier(LAM, -1.0)
    germ = weighted_trace_germ(mult, LAM2X)
    expected = 2 * EULER_GAMMA - 2 * math.log(2.0)
    fp_oracle = laurent_fp_oracle(lambda z: mp.mpf(2) ** (-z) * 2 * mp.zeta(1 + z))
    assert germ.finite_part == pytest.approx(expected, abs=1e-11)
    assert germ.finite_part == pytest.approx(fp_oracle, abs=1e-10)
    assert germ.residue == pytest.approx(2.0, abs=1e-11)


def test_weight_power_invariance():
    # tr^{Q^k} = tr^Q for positive Q and k = 1, 2, 3
    mult = power_multiplier(LAM, -1.0)
    fp1 = weighted_trace_germ(mult, LAM).finite_part
    for k in (2.0, 3.0):
        q_k = transform(LAM, "power", k)
        germ_k = weighted_trace_germ(mult, q_k)
        assert germ_k.finite_part == pytest.approx(fp1, abs=1e-10)


def test_kernel_fill_in_insensitivity():
    # changing the fill-in value never moves the finite part
    for coeff0 in (0.0, 1.0):
        fps = []
        for fill in (1.0, 0.5, 3.7):
            w = asymmetric_weight(1.0, 2.0, fill=fill)
            mult = constant_ray_multiplier(w, [1.0, 1.0], [coeff0])
            fps.append(weighted_trace_germ(mult, w).finite_part)
        assert fps[0] == pytest.approx(fps[1], abs=1e-12)
        assert fps[0] == pytest.approx(fps[2], abs=1e-12)


@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
@settings(max_examples=20, deadline=None)
def test_germ_linearity(alpha, beta):
    a = power_multiplier(LAM, -1.0)
    b = identity_multiplier(LAM)
    combo = a.scaled(alpha).plus(b.scaled(beta))
    g = weighted_trace_germ(combo, LAM)
    ga = weighted_trace_germ(a, LAM)
    gb = weighted_trace_germ(b, LAM)
    assert g.residue == pytest.approx(alpha * ga.residue + beta * gb.residue,
                                      abs=1e-9)
    assert g.finite_part == pytest.approx(
        alpha * ga.finite_part + beta * gb.finite_part, abs=1e-9)


def test_zeta_values():
    assert zeta(LAM, 0.0) == pytest.approx(-1.0, abs=1e-12)
    absd = transform(circle_dirac(0.25), "abs")
    assert zeta(absd, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert zeta(LAM, 2.0) == pytest.approx(2 * math.pi ** 2 / 6, abs=1e-10)
    t20 = drop_kernel(torus_laplacian_shifted(2, 0.0))
    assert zeta(t20, 0.0) == pytest.approx(-1.0, abs=1e-9)


def test_zeta_error_cases():
    with pytest.raises(ContinuationError):
        zeta(LAM, 1.0)  # pole
    with pytest.raises(ContinuationError):
        zeta(torus_laplacian_shifted(2, 0.0), 0.0)  # zero mode present


def test_generic_backend_matches_affine():
    # single affine ray {n + a}, fed through the Euler-Maclaurin peeling
    for a in (0.3, 1.0, 1.7):
        def eigs(count, a=a):
            return [(k + a - 1.0, 1) for k in range(1, count + 1)]

        tail = TailDescriptor(c=1.0, p=1.0, coeffs=(a - 1.0, 0.0, 0.0, 0.0, 0.0, 0.0))
        spec = Spectrum(kind="generic", order=1.0,
                        generic=GenericData(eigs, tail), positive=True,
                        label=f"generic({a})")
        germ = generic_trace_germ(spec)
        from zetaflow.hurwitz import hurwitz_expansion
        ref = hurwitz_expansion(0.0, a)
        assert germ.finite_part == pytest.approx(complex(ref[0]), abs=1e-9)
        assert germ.residue == pytest.approx(complex(ref[-1]), abs=1e-9)
        assert germ.method == "euler_maclaurin"
        # and at a shifted base point with a pole: zeta_H(1, a)
        germ1 = generic_trace_germ(spec, at=1.0)
        ref1 = hurwitz_expansion(1.0, a)
        assert germ1.residue == pytest.approx(1.0, abs=1e-9)
        assert germ1.finite_part == pytest.approx(complex(ref1[0]), abs=1e-8)


def test_heat_trace_values_match_closed_forms():
    for eps in (1e-3, 1e-2, 0.05):
        val = heat_trace_value(identity_multiplier(LAM), LAM, eps)
        assert val == pytest.approx(2.0 / math.expm1(eps), rel=1e-12)
        val_inv = heat_trace_value(power_multiplier(LAM, -1.0), LAM, eps)
        assert val_inv == pytest.approx(-2.0 * math.log(-math.expm1(-eps)), rel=1e-12)


def test_heat_trace_fp_lambda():
    c, b = heat_trace_fp(identity_multiplier(LAM), LAM)
    assert c == pytest.approx(-1.0, abs=1e-8)
    assert b == pytest.approx(0.0, abs=1e-8)


def test_heat_trace_fp_log_coefficient():
    c, b = heat_trace_fp(power_multiplier(LAM, -1.0), LAM)
    assert c == pytest.approx(0.0, abs=1e-8)
    assert b == pytest.approx(-2.0, abs=1e-8)


def test_heat_trace_fp_square_weight():
    lam_sq = transform(LAM, "square")
    c, b = heat_trace_fp(identity_multiplier(lam_sq), lam_sq)
    assert c == pytest.approx(-1.0, abs=1e-8)    # theta(eps) - 1 = sqrt(pi/eps) - 1
    assert b == pytest.approx(0.0, abs=1e-8)


def test_heat_trace_fp_torus():
    t20 = drop_kernel(torus_laplacian_shifted(2, 0.0))
    c, b = heat_trace_fp(identity_multiplier(t20), t20)
    assert c == pytest.approx(-1.0, abs=1e-8)
    assert b == pytest.approx(0.0, abs=1e-8)


def test_heat_trace_fit_rejects_wrong_model():
    # far outside the asymptotic regime the expansion model cannot fit
    bad_grid = np.geomspace(0.5, 40.0, 24)
    with pytest.raises(ContinuationError):
        heat_trace_fp(power_multiplier(LAM, -1.0), LAM, grid=bad_grid)


def test_gamma_relation_three_pairs_and_pinned_sign():
    assert GAMMA_RELATION_SIGN == +1
    pairs = [
        (power_multiplier(LAM, -1.0), LAM),            # residue 2
        (identity_multiplier(LAM), LAM),               # residue 0
        (power_multiplier(transform(LAM, "square"), -0.5),
         transform(LAM, "square")),                    # order-2 weight, residue 2
    ]
    for mult, weight in pairs:
        rep = gamma_relation_check(mult, weight, tolerance=1e-6)
        assert rep.passed, str(rep)
        assert rep.details["resolved_sign"] == GAMMA_RELATION_SIGN
    # the nontrivial pair in numbers: f.p. zeta side 2*gamma, heat side 0
    rep = gamma_relation_check(power_multiplier(LAM, -1.0), LAM)
    assert rep.lhs == pytest.approx(2 * EULER_GAMMA, abs=1e-7)
    assert rep.details["heat_log_coefficient"] == pytest.approx(-2.0, abs=1e-7)


def test_gamma_relation_order_two_pair_values():
    lam_sq = transform(LAM, "square")
    rep = gamma_relation_check(power_multiplier(lam_sq, -0.5), lam_sq)
    # f.p. of 2 zeta(1+2z) is 2 gamma; heat side gamma; res(A)/q * gamma closes
    assert rep.details["fp_zeta"]["re"] == pytest.approx(2 * EULER_GAMMA, abs=1e-8)
    assert rep.details["fp_heat"] == pytest.approx(EULER_GAMMA, abs=1e-6)


def test_torus_weight_rejects_ray_multipliers():
    t = torus_laplacian_shifted(4, 1.0)
    with pytest.raises(SpectralModelError):
        weighted_trace_germ(power_multiplier(LAM, -1.0), t)


def test_zeta_germ_next_coefficient():
    germ = zeta_germ(LAM)
    assert germ.next == pytest.approx(-math.log(2 * math.pi), abs=1e-11)
    assert germ.method == "hurwitz"
