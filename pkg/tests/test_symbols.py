"""Exact symbol calculus: composition, residues, and the residue-anomaly
formulas, each pinned against operator-side mode sums."""

import math
from fractions import Fraction

import pytest

from zetaflow import czeta, symbols as sy
from zetaflow.spectra import asymmetric_weight, circle_dirac, lambda_weight, transform

HALF = Fraction(1, 2)


def osc(freq, order=0, coeff=Fraction(1)):
    return sy.oscillation_symbol(freq, Fraction(order), coeff)


A_SHIFT = osc(1, 1)      # e^{ix}|xi|
B_SHIFT = osc(-1, 0)     # e^{-ix}
Q_ASYM = sy.xi_power_symbol(Fraction(1), Fraction(1), Fraction(2))
Q_SYM = sy.xi_power_symbol(Fraction(1))


def test_compose_with_identity():
    ident = sy.identity_symbol()
    for s in (A_SHIFT, Q_ASYM, sy.xi_power_symbol(Fraction(-1))):
        left = sy.compose(ident, s)
        right = sy.compose(s, ident)
        for j in range(s.depth + 1):
            assert left.plus[j] == s.plus[j] and left.minus[j] == s.minus[j]
            assert right.plus[j] == s.plus[j] and right.minus[j] == s.minus[j]


def test_compose_multiplier_product_is_exact():
    prod = sy.compose(sy.xi_power_symbol(Fraction(1)),
                      sy.xi_power_symbol(Fraction(-1)))
    assert prod.order == 0
    assert prod.plus[0] == {0: Fraction(1)} and prod.minus[0] == {0: Fraction(1)}
    assert all(not c for c in prod.plus[1:]) and all(not c for c in prod.minus[1:])


def test_compose_commutator_matches_fourier_mode_oracle():
    # [Op(e^{ix}|xi|), Op(e^{-ix})] acts diagonally as |n-1| - |n|
    comm = sy.commutator(A_SHIFT, B_SHIFT)
    assert comm.plus[0] == {} and comm.minus[0] == {}
    assert comm.plus[1] == {0: Fraction(-1)}    # -1 for n > 0
    assert comm.minus[1] == {0: Fraction(1)}    # +1 for n < 0
    assert all(not c for c in comm.plus[2:])


def test_wres_examples():
    assert sy.wres(sy.xi_power_symbol(Fraction(-1))) == 2
    assert sy.wres(sy.identity_symbol()) == 0
    sgn = sy.xi_power_symbol(Fraction(0), Fraction(1), Fraction(-1))
    assert sy.wres(sgn) == 0


def test_wres_trace_property_exact():
    pairs = [
        (A_SHIFT, B_SHIFT),
        (osc(1, 2), osc(-1, -1)),
        (osc(2, 1), osc(-2, -2)),
        # trigonometric coefficients: cos(x)|xi|, sin(x)
        (sy.make_symbol(Fraction(1), {(0, 1): {1: HALF, -1: HALF},
                                      (0, -1): {1: HALF, -1: HALF}}),
         sy.make_symbol(Fraction(0), {(0, 1): {1: HALF, -1: -HALF},
                                      (0, -1): {1: HALF, -1: -HALF}})),
    ]
    for x_sym, y_sym in pairs:
        assert sy.wres(sy.commutator(x_sym, y_sym)) == 0


def test_radul_cocycle_catalog_value_and_dual_path():
    val = sy.radul_cocycle(A_SHIFT, B_SHIFT, Q_ASYM)
    assert val == 1
    # operator side: sum over modes of (|n-1|-|n|) lambda_Q(n)^{-z},
    # lambda_Q = n, 2|n| on the rays and 1 on the kernel mode
    q_spec = asymmetric_weight(1.0, 2.0, fill=1.0)
    germ = czeta.weighted_trace_germ(
        czeta.constant_ray_multiplier(q_spec, [-1.0, 1.0], [1.0]), q_spec)
    assert germ.finite_part == pytest.approx(1.0, abs=1e-11)
    assert float(val) == pytest.approx(germ.finite_part.real, abs=1e-8)


def test_radul_cocycle_weight_robustness():
    # the same commutator trace through weights of different order and scale
    q_order2 = sy.xi_power_symbol(Fraction(2), Fraction(1), Fraction(2))
    assert sy.radul_cocycle(A_SHIFT, B_SHIFT, q_order2) == 1
    q_scaled = sy.xi_power_symbol(Fraction(1), Fraction(3), Fraction(3))
    assert sy.radul_cocycle(A_SHIFT, B_SHIFT, q_scaled) == 1


def test_radul_symmetric_weight_matches_kernel_conventions():
    # the residue equals the kernel-filled mode sum (1); dropping the kernel
    # mode removes exactly the finite-rank diagonal entry and yields 0
    assert sy.radul_cocycle(A_SHIFT, B_SHIFT, Q_SYM) == 1
    filled = asymmetric_weight(1.0, 1.0, fill=1.0)
    g_filled = czeta.weighted_trace_germ(
        czeta.constant_ray_multiplier(filled, [-1.0, 1.0], [1.0]), filled)
    assert g_filled.finite_part == pytest.approx(1.0, abs=1e-12)
    dropped = asymmetric_weight(1.0, 1.0, fill=None)
    g_dropped = czeta.weighted_trace_germ(
        czeta.constant_ray_multiplier(dropped, [-1.0, 1.0]), dropped)
    assert g_dropped.finite_part == pytest.approx(0.0, abs=1e-12)


def test_radul_antisymmetry_exact():
    for q in (Q_ASYM, Q_SYM):
        forward = sy.radul_cocycle(A_SHIFT, B_SHIFT, q)
        backward = sy.radul_cocycle(B_SHIFT, A_SHIFT, q)
        assert forward + backward == 0


def test_radul_vanishes_for_commuting_multipliers():
    x_mult = sy.xi_power_symbol(Fraction(1))
    y_mult = sy.xi_power_symbol(Fraction(-1), Fraction(2), Fraction(5))
    assert sy.radul_cocycle(x_mult, y_mult, Q_ASYM) == 0


def test_log_symbol_cases():
    log_plain = sy.log_symbol(Q_SYM)
    assert log_plain.log_weight == 1
    assert log_plain.classical.is_zero()
    log_scaled = sy.log_symbol(sy.xi_power_symbol(Fraction(1), 2, 2))
    assert log_scaled.classical.plus[0][0] == pytest.approx(math.log(2))
    assert log_scaled.classical.minus[0][0] == pytest.approx(math.log(2))
    log_asym = sy.log_symbol(Q_ASYM)
    assert log_asym.classical.plus[0] == {}
    assert log_asym.classical.minus[0][0] == pytest.approx(math.log(2))
    with pytest.raises(sy.SymbolError):
        sy.log_symbol(osc(1, 1))   # x-dependent
    with pytest.raises(sy.SymbolError):
        sy.log_symbol(sy.xi_power_symbol(Fraction(1), Fraction(1), Fraction(-1)))


def test_log_symbol_lower_order_expansion_exact():
    # log(|xi| + c) = log|xi| + c|xi|^-1 - c^2/2 |xi|^-2 + ...
    shifted = sy.make_symbol(Fraction(1), {(0, 1): {0: Fraction(1)},
                                           (0, -1): {0: Fraction(1)},
                                           (1, 1): {0: Fraction(1, 4)},
                                           (1, -1): {0: Fraction(1, 4)}})
    log_sym = sy.log_symbol(shifted)
    assert log_sym.classical.plus[1] == {0: Fraction(1, 4)}
    assert log_sym.classical.plus[2] == {0: -Fraction(1, 32)}
    assert log_sym.classical.plus[3] == {0: Fraction(1, 192)}


def test_log_difference_is_classical_and_kills_proportional_logs():
    lq1 = sy.log_symbol(Q_SYM)
    lq2 = sy.log_symbol(sy.xi_power_symbol(Fraction(2)))  # |xi|^2, order 2
    diff = sy.log_difference(lq1, lq2)
    assert diff.order == 0
    assert diff.is_zero()   # log(|xi|^2)/2 = log|xi| exactly


def test_weight_dependence_dual_path():
    lam = lambda_weight()
    lam2 = transform(lam, "scale", 2.0)
    inv_sym = sy.xi_power_symbol(Fraction(-1))
    res_path = sy.weight_dependence(inv_sym, sy.multiplier_to_symbol(lam),
                                    sy.multiplier_to_symbol(lam2))
    assert res_path == pytest.approx(2 * math.log(2.0), abs=1e-14)
    inv_mult = czeta.power_multiplier(lam, -1.0)
    direct = czeta.weighted_trace_germ(inv_mult, lam).finite_part \
        - czeta.weighted_trace_germ(inv_mult, lam2).finite_part
    assert direct.real == pytest.approx(res_path, abs=1e-9)
    # same weight twice: exactly zero
    assert sy.weight_dependence(inv_sym, Q_SYM, Q_SYM) == 0
    # identity multiplier against proportional-log weights: no residue
    assert sy.weight_dependence(sy.identity_symbol(), Q_SYM,
                                sy.xi_power_symbol(Fraction(1), 2, 2)) == 0


def test_dtr_family_dual_path():
    inv_sym = sy.xi_power_symbol(Fraction(-1))
    val = sy.dtr_family(inv_sym, sy.identity_symbol(), Fraction(1))
    assert val == -2
    lam = lambda_weight()
    inv_mult = czeta.power_multiplier(lam, -1.0)
    h = 1e-5
    fd = (czeta.weighted_trace_germ(inv_mult, transform(lam, "scale", 1 + h)).finite_part
          - czeta.weighted_trace_germ(inv_mult, transform(lam, "scale", 1 - h)).finite_part) / (2 * h)
    assert fd.real == pytest.approx(-2.0, abs=1e-6)
    # vanishing-residue multiplier: derivative zero
    assert sy.dtr_family(sy.identity_symbol(), sy.identity_symbol(), Fraction(1)) == 0


def test_dtr_reduces_to_coboundary_on_conjugated_families():
    # Q_t = e^{-tB} Q e^{tB}: d(log Q)/dt = [log Q, B] and
    # d/dt tr^{Q_t}(A) = tr^Q([B, A]) = -radul(A, B, Q)
    logq = sy.log_symbol(Q_ASYM)
    dlog = sy.bracket_log(logq, B_SHIFT)
    dtr_val = sy.dtr_family(A_SHIFT, dlog, Q_ASYM.order)
    assert dtr_val == -sy.radul_cocycle(A_SHIFT, B_SHIFT, Q_ASYM)
    assert dtr_val == sy.radul_cocycle(B_SHIFT, A_SHIFT, Q_ASYM)
    # with B = e^{ix} the perturbation is off-diagonal: both sides vanish
    b_up = osc(1, 0)
    dlog_up = sy.bracket_log(logq, b_up)
    assert sy.dtr_family(A_SHIFT, dlog_up, Q_ASYM.order) == 0
    assert sy.radul_cocycle(A_SHIFT, b_up, Q_ASYM) == 0


def test_weight_dependence_equals_integrated_dtr():
    # interpolate Q_t = exp((1-t) log Q1 + t log Q2): dlog constant in t
    lam_sym = sy.multiplier_to_symbol(lambda_weight())
    lam2_sym = sy.multiplier_to_symbol(transform(lambda_weight(), "scale", 2.0))
    inv_sym = sy.xi_power_symbol(Fraction(-1))
    lq1, lq2 = sy.log_symbol(lam_sym), sy.log_symbol(lam2_sym)
    dlog = lq2.classical.minus_sym(lq1.classical)   # log-weights cancel
    integrated = sy.dtr_family(inv_sym, dlog, Fraction(1))   # t-independent
    wd = sy.weight_dependence(inv_sym, lam_sym, lam2_sym)
    assert wd == pytest.approx(-float(integrated), abs=1e-14)


def test_multiplier_to_symbol_catalog():
    lam_sym = sy.multiplier_to_symbol(lambda_weight())
    assert lam_sym.order == 1 and lam_sym.plus[0] == {0: Fraction(1)}
    asym_sym = sy.multiplier_to_symbol(asymmetric_weight(1.0, 2.0))
    assert asym_sym.plus[0] == {0: Fraction(1)}
    assert asym_sym.minus[0] == {0: Fraction(2)}
    inv_sym = sy.multiplier_to_symbol(transform(lambda_weight(), "power", -1.0))
    assert inv_sym.order == -1 and sy.wres(inv_sym) == 2
    # circle-Dirac magnitudes start on mode 0 on the plus side
    absd = transform(circle_dirac(0.25), "abs")
    msym = sy.multiplier_to_symbol(absd, first_modes=(0, 1))
    assert msym.plus[1] == {0: Fraction(1, 4)}
    assert msym.minus[1] == {0: -Fraction(1, 4)}
    with pytest.raises(sy.SymbolError):
        sy.multiplier_to_symbol(czeta.as_weight(circle_dirac(0.0)))  # extra slot


def test_residue_crosscheck_with_trace_germ():
    # ord(Q) * residue of tr(A Q^{-z}) equals wres of the multiplier symbol
    lam = lambda_weight()
    germ = czeta.weighted_trace_germ(czeta.power_multiplier(lam, -1.0), lam)
    sym_res = sy.wres(sy.multiplier_to_symbol(transform(lam, "power", -1.0)))
    assert germ.residue * lam.order == pytest.approx(float(sym_res), abs=1e-11)


def test_graded_block_diagonal_cocycle():
    pair_val = sy.radul_cocycle_graded(
        (A_SHIFT, A_SHIFT.scaled(2)), (B_SHIFT, B_SHIFT), (Q_ASYM, Q_ASYM))
    assert pair_val == 1 - 2
    assert sy.sres((sy.xi_power_symbol(Fraction(-1)),
                    sy.xi_power_symbol(Fraction(-1)))) == 0


def test_graded_odd_cocycle_matches_mode_sums():
    # odd blocks A = (e^{ix}|xi|, e^{-ix}), B = (e^{ix}, e^{-ix}|xi|) on an
    # even weight: str^Q({A, B}) has diagonal blocks 1 + |n||n+1| on E+ and
    # 1 + |n||n-1| on E-, whose graded mode sum cancels to zero
    a_pair = (osc(1, 1), osc(-1, 0))
    b_pair = (osc(1, 0), osc(-1, 1))
    val = sy.radul_cocycle_odd(a_pair, b_pair, (Q_ASYM, Q_ASYM))
    q_spec = asymmetric_weight(1.0, 2.0, fill=1.0)
    plus_block = czeta.Multiplier(
        2.0,
        (  # |n||n+1| + 1 at mode n: (m+1)m + 1 with ray index m = n-1, offset 1
            (czeta.RayTerm(1.0, 2.0), czeta.RayTerm(1.0, 1.0), czeta.RayTerm(1.0)),
            # n < 0: |n||n+1| + 1 = m(m-1) + 1 at m = |n|, ray offset 1
            (czeta.RayTerm(1.0, 2.0), czeta.RayTerm(-1.0, 1.0), czeta.RayTerm(1.0)),
        ), (1.0,))
    minus_block = czeta.Multiplier(
        2.0,
        (  # |n||n-1| + 1 = m(m-1) + 1 at m = n (plus modes)
            (czeta.RayTerm(1.0, 2.0), czeta.RayTerm(-1.0, 1.0), czeta.RayTerm(1.0)),
            # n < 0: m(m+1) + 1 at m = |n|
            (czeta.RayTerm(1.0, 2.0), czeta.RayTerm(1.0, 1.0), czeta.RayTerm(1.0)),
        ), (1.0,))
    g_plus = czeta.weighted_trace_germ(plus_block, q_spec)
    g_minus = czeta.weighted_trace_germ(minus_block, q_spec)
    mode_sum = g_plus.finite_part - g_minus.finite_part
    assert float(val) == pytest.approx(mode_sum.real, abs=1e-9)


def test_truncation_metadata():
    sym = sy.xi_power_symbol(Fraction(1))
    assert sym.truncation_order == 1 - sy.DEFAULT_DEPTH - 1
    prod = sy.compose(sym, sym)
    assert prod.order == 2
    with pytest.raises(sy.SymbolError):
        sy.make_symbol(Fraction(0), {(9, 1): {0: Fraction(1)}}, depth=6)
