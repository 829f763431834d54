"""Truncated Laurent expansions at z = 0 and the meromorphic-germ result type.

Every analytic continuation in this package is assembled from products and
sums of short Laurent expansions around the evaluation point.  ``LaurentSeries``
tracks coefficients for degrees -2..+3, which is enough to expose a double
pole (always an error for the quantities we compute), the residue, the finite
part and two regular coefficients beyond it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

MIN_DEG = -2
MAX_DEG = 3
_NCOEF = MAX_DEG - MIN_DEG + 1


class ContinuationError(ValueError):
    """Continuation failed: pole hit, divergent head, or fit residual too large."""


class LaurentSeries:
    """sum_{k=-2}^{3} c_k z^k with complex coefficients; truncating arithmetic."""

    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        self.c = [0j] * _NCOEF
        if coeffs is not None:
            for deg, val in coeffs.items():
                self[deg] = val

    def __getitem__(self, deg: int) -> complex:
        if deg < MIN_DEG or deg > MAX_DEG:
            return 0j
        return self.c[deg - MIN_DEG]

    def __setitem__(self, deg: int, val: complex) -> None:
        if deg < MIN_DEG or deg > MAX_DEG:
            raise IndexError(f"degree {deg} outside tracked window")
        self.c[deg - MIN_DEG] = complex(val)

    @classmethod
    def from_taylor(cls, derivs) -> "LaurentSeries":
        """Series of an entire factor from Taylor coefficients [f(0), f'(0)/1!, ...]."""
        s = cls()
        for k, v in enumerate(derivs):
            if k > MAX_DEG:
                break
            s[k] = v
        return s

    @classmethod
    def exp_linear(cls, beta: complex) -> "LaurentSeries":
        """Series of exp(beta * z)."""
        return cls.from_taylor([beta**k / math.factorial(k) for k in range(MAX_DEG + 1)])

    def copy(self) -> "LaurentSeries":
        s = LaurentSeries()
        s.c = list(self.c)
        return s

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        s = self.copy()
        for i in range(_NCOEF):
            s.c[i] += other.c[i]
        return s

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        s = self.copy()
        for i in range(_NCOEF):
            s.c[i] -= other.c[i]
        return s

    def __neg__(self) -> "LaurentSeries":
        return self.scaled(-1.0)

    def scaled(self, factor: complex) -> "LaurentSeries":
        s = LaurentSeries()
        s.c = [factor * v for v in self.c]
        return s

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        # Truncating convolution.  Degrees below MIN_DEG would only arise from
        # products of two poles, which never occur in assembled germs; guard anyway.
        s = LaurentSeries()
        for d1 in range(MIN_DEG, MAX_DEG + 1):
            a = self[d1]
            if a == 0:
                continue
            for d2 in range(MIN_DEG, MAX_DEG + 1):
                b = other[d2]
                if b == 0:
                    continue
                d = d1 + d2
                if d < MIN_DEG:
                    if abs(a * b) > 0:
                        raise ContinuationError("pole of order > 2 in germ product")
                elif d <= MAX_DEG:
                    s[d] = s[d] + a * b
        return s

    def rescale_variable(self, p: float) -> "LaurentSeries":
        """Substitute z -> p*z."""
        s = LaurentSeries()
        for d in range(MIN_DEG, MAX_DEG + 1):
            s[d] = self[d] * (p ** d)
        return s

    def differentiated(self) -> "LaurentSeries":
        """d/dz of the series.  The top tracked coefficient is lost."""
        s = LaurentSeries()
        for d in range(MIN_DEG, MAX_DEG + 1):
            nd = d - 1
            if MIN_DEG <= nd <= MAX_DEG:
                s[nd] = d * self[d]
        if self[MIN_DEG] != 0:
            raise ContinuationError("cannot differentiate a series with a double pole")
        return s

    def __repr__(self) -> str:  # pragma: no cover
        parts = [f"{self[d]:.6g}*z^{d}" for d in range(MIN_DEG, MAX_DEG + 1) if self[d] != 0]
        return "LaurentSeries(" + (" + ".join(parts) if parts else "0") + ")"


@dataclass
class MeromorphicGerm:
    """Residue and finite part (plus one regular coefficient) of a spectral sum at z = 0."""

    residue: complex
    finite_part: complex
    next: complex | None = None
    method: str = ""
    err: float = 0.0

    @classmethod
    def from_series(cls, series: LaurentSeries, method: str = "", err: float = 0.0,
                    pole2_tol: float = 1e-9) -> "MeromorphicGerm":
        if abs(series[-2]) > pole2_tol:
            raise ContinuationError(
                f"double pole of size {abs(series[-2]):.3e} in weighted trace germ")
        return cls(residue=series[-1], finite_part=series[0], next=series[1],
                   method=method, err=err)

    def __add__(self, other: "MeromorphicGerm") -> "MeromorphicGerm":
        nxt = None
        if self.next is not None and other.next is not None:
            nxt = self.next + other.next
        return MeromorphicGerm(self.residue + other.residue,
                               self.finite_part + other.finite_part,
                               nxt, self.method or other.method,
                               self.err + other.err)

    def scaled(self, factor: complex) -> "MeromorphicGerm":
        return MeromorphicGerm(factor * self.residue, factor * self.finite_part,
                               None if self.next is None else factor * self.next,
                               self.method, abs(factor) * self.err)

    def to_json(self) -> dict:
        out = {
            "residue": {"re": self.residue.real, "im": self.residue.imag},
            "finite_part": {"re": self.finite_part.real, "im": self.finite_part.imag},
            "method": self.method,
            "err": self.err,
        }
        if self.next is not None:
            out["next"] = {"re": self.next.real, "im": self.next.imag}
        return out
