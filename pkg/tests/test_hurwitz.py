"""Closed-form backend against independent continuations (mpmath, partial sums)."""

import math

import mpmath as mp
import pytest

from zetaflow.germs import ContinuationError
from zetaflow.hurwitz import (EULER_GAMMA, hurwitz_expansion, hurwitz_zeta,
                              riemann_zeta)

mp.mp.dps = 30


def partial_sum_oracle(s: float, a: float, terms: int = 200_000) -> float:
    """Direct summation, valid for Re(s) > 1."""
    total = sum((n + a) ** (-s) for n in range(terms))
    # integral tail bound keeps the oracle honest at 1e-10
    tail = (terms + a) ** (1 - s) / (s - 1)
    return total + tail


def test_zero_value_closed_form():
    for a in (0.1, 0.25, 0.5, 0.75, 1.0, 1.9):
        assert hurwitz_zeta(0.0, a) == pytest.approx(0.5 - a, abs=1e-12)


def test_derivative_at_zero_lerch_formula():
    for a in (0.1, 0.25, 0.4, 0.75, 1.0):
        expected = math.lgamma(a) - 0.5 * math.log(2 * math.pi)
        assert hurwitz_zeta(0.0, a, derivative=1).real == pytest.approx(expected, abs=1e-12)


def test_basel_value_against_partial_sum():
    assert hurwitz_zeta(2.0, 1.0).real == pytest.approx(math.pi ** 2 / 6, abs=1e-12)
    assert hurwitz_zeta(2.0, 1.0).real == pytest.approx(
        partial_sum_oracle(2.0, 1.0), abs=1e-9)


@pytest.mark.parametrize("s", [-3.5, -1.2, -0.4, 0.7, 1.5, 2.25, 4.0, 2 + 1j])
@pytest.mark.parametrize("a", [0.1, 0.3, 0.75, 1.0, 2.25])
def test_matches_mpmath_continuation(s, a):
    for order in (0, 1, 2):
        mine = hurwitz_zeta(s, a, order)
        ref = complex(mp.zeta(s, a, order))
        assert mine == pytest.approx(ref, abs=2e-11 * max(1.0, abs(ref)))


def test_pole_expansion_digamma():
    # zeta_H(1 + h, a) = 1/h - psi(a) + O(h)
    for a in (0.25, 1.0, 1.75):
        series = hurwitz_expansion(1.0, a)
        assert series[-1] == pytest.approx(1.0, abs=1e-12)
        assert series[0] == pytest.approx(complex(-mp.digamma(a)), abs=1e-11)
    assert hurwitz_expansion(1.0, 1.0)[0].real == pytest.approx(EULER_GAMMA, abs=1e-12)


def test_pole_is_an_error_for_plain_values():
    with pytest.raises(ContinuationError):
        hurwitz_zeta(1.0, 0.5)


def test_riemann_shortcuts():
    assert riemann_zeta(0.0).real == pytest.approx(-0.5, abs=1e-13)
    assert riemann_zeta(0.0, 1).real == pytest.approx(-0.5 * math.log(2 * math.pi),
                                                      abs=1e-12)
    assert riemann_zeta(-1.0).real == pytest.approx(-1.0 / 12.0, abs=1e-12)
