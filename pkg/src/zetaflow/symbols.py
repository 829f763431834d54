"""Exact polyhomogeneous symbol calculus on the circle.

Symbols are truncated expansions sigma(x, xi) = sum_j a_j^{\pm}(x) |xi|^{m-j}
with one finite Fourier series per component and ray.  Coefficients are kept
as exact rationals (``fractions.Fraction``) whenever the inputs are exact, so
residue identities on catalog data hold with equality, not just to tolerance.

Composition uses the left quantization sigma(AB) ~ sum_k (1/k!) d_xi^k a * D_x^k b
with D_x = -i d/dx, validated against the Fourier-mode oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .spectra import Ray, SpectralCut, DEFAULT_CUT, SpectralModelError, Spectrum

DEFAULT_DEPTH = 6


class SymbolError(ValueError):
    """Symbol outside an operation's preconditions (depth, ellipticity, shape)."""


# A Fourier series is a mapping frequency -> coefficient.  Frequencies are the
# exponents of e^{i n x}; keeping the frequency in the key means purely
# rational coefficients stay rational under every operation used here.
FSeries = Mapping[int, object]


def _fs_clean(d: dict) -> dict:
    return {k: v for k, v in d.items() if v != 0}


def fs_add(a: FSeries, b: FSeries) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return _fs_clean(out)


def fs_scale(a: FSeries, c) -> dict:
    if c == 0:
        return {}
    return {k: c * v for k, v in a.items()}


def fs_mul(a: FSeries, b: FSeries) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = ka + kb
            out[k] = out.get(k, 0) + va * vb
    return _fs_clean(out)


def fs_dx(a: FSeries, times: int = 1) -> dict:
    """Apply D_x = -i d/dx, which sends e^{inx} to n e^{inx}."""
    out = dict(a)
    for _ in range(times):
        out = {k: k * v for k, v in out.items() if k != 0}
    return out


@dataclass(frozen=True)
class PolyhomSymbol:
    """Truncated polyhomogeneous symbol of (possibly fractional) order."""

    order: object                       # Fraction or float
    plus: tuple[dict, ...]              # component j on the ray xi > 0
    minus: tuple[dict, ...]             # component j on the ray xi < 0
    depth: int = DEFAULT_DEPTH

    def __post_init__(self):
        if len(self.plus) != self.depth + 1 or len(self.minus) != self.depth + 1:
            raise SymbolError("component lists must have length depth+1")

    @property
    def truncation_order(self):
        """Degrees at or below order - depth - 1 are untrusted."""
        return self.order - self.depth - 1

    def component(self, j: int, ray: int) -> dict:
        series = self.plus if ray > 0 else self.minus
        if 0 <= j <= self.depth:
            return series[j]
        return {}

    def is_x_independent(self) -> bool:
        return all(set(c) <= {0} for c in self.plus) and \
            all(set(c) <= {0} for c in self.minus)

    def scaled(self, c) -> "PolyhomSymbol":
        return PolyhomSymbol(self.order, tuple(fs_scale(p, c) for p in self.plus),
                             tuple(fs_scale(m, c) for m in self.minus), self.depth)

    def plus_sym(self, other: "PolyhomSymbol") -> "PolyhomSymbol":
        if other.order != self.order:
            raise SymbolError("can only add symbols of equal order")
        depth = min(self.depth, other.depth)
        return PolyhomSymbol(
            self.order,
            tuple(fs_add(self.plus[j], other.plus[j]) for j in range(depth + 1)),
            tuple(fs_add(self.minus[j], other.minus[j]) for j in range(depth + 1)),
            depth)

    def minus_sym(self, other: "PolyhomSymbol") -> "PolyhomSymbol":
        return self.plus_sym(other.scaled(-1))

    def is_zero(self) -> bool:
        return all(not c for c in self.plus) and all(not c for c in self.minus)

    def to_json(self) -> dict:
        def enc(series):
            return [{str(k): _enc_scalar(v) for k, v in comp.items()} for comp in series]
        return {"order": _enc_scalar(self.order), "depth": self.depth,
                "plus": enc(self.plus), "minus": enc(self.minus)}


def _enc_scalar(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return repr(v)


def make_symbol(order, entries, depth: int = DEFAULT_DEPTH) -> PolyhomSymbol:
    """Build a symbol from {(j, ray): fourier-dict} with ray in {+1, -1}."""
    plus = [dict() for _ in range(depth + 1)]
    minus = [dict() for _ in range(depth + 1)]
    for (j, ray), series in entries.items():
        if not 0 <= j <= depth:
            raise SymbolError(f"component index {j} outside depth {depth}")
        target = plus if ray > 0 else minus
        target[j] = fs_add(target[j], series)
    return PolyhomSymbol(order, tuple(plus), tuple(minus), depth)


def identity_symbol(depth: int = DEFAULT_DEPTH) -> PolyhomSymbol:
    one = Fraction(1)
    return make_symbol(Fraction(0), {(0, +1): {0: one}, (0, -1): {0: one}}, depth)


def xi_power_symbol(order, plus_coeff=Fraction(1), minus_coeff=None,
                    depth: int = DEFAULT_DEPTH) -> PolyhomSymbol:
    """The multiplier symbol coeff^± * |xi|^order."""
    if minus_coeff is None:
        minus_coeff = plus_coeff
    return make_symbol(order, {(0, +1): {0: plus_coeff}, (0, -1): {0: minus_coeff}},
                       depth)


def oscillation_symbol(frequency: int, order=Fraction(0), coeff=Fraction(1),
                       depth: int = DEFAULT_DEPTH) -> PolyhomSymbol:
    """e^{i*frequency*x} |xi|^order, the shift-operator building block."""
    return make_symbol(order, {(0, +1): {frequency: coeff}, (0, -1): {frequency: coeff}},
                       depth)


def _falling(mu, k: int):
    out = Fraction(1) if isinstance(mu, (int, Fraction)) else 1.0
    for i in range(k):
        out = out * (mu - i)
    return out


def compose(a: PolyhomSymbol, b: PolyhomSymbol) -> PolyhomSymbol:
    """Asymptotic product symbol sum_k (1/k!) d_xi^k a * D_x^k b, truncated."""
    depth = min(a.depth, b.depth)
    order = a.order + b.order
    plus = [dict() for _ in range(depth + 1)]
    minus = [dict() for _ in range(depth + 1)]
    for ray, (acomp, bcomp, out) in ((1, (a.plus, b.plus, plus)),
                                     (-1, (a.minus, b.minus, minus))):
        for ja in range(min(a.depth, depth) + 1):
            sa = acomp[ja]
            if not sa:
                continue
            mu = a.order - ja
            for k in range(depth + 1 - ja):
                # d_xi^k of c(x) |xi|^mu on this ray
                fall = _falling(mu, k) * (ray ** k)
                if fall == 0:
                    continue
                coeff = Fraction(1, math.factorial(k)) * fall
                for jb in range(depth + 1 - ja - k):
                    sb = bcomp[jb]
                    if not sb:
                        continue
                    dxb = fs_dx(sb, k)
                    if not dxb:
                        continue
                    j_out = ja + k + jb
                    out[j_out] = fs_add(out[j_out], fs_scale(fs_mul(sa, dxb), coeff))
    return PolyhomSymbol(order, tuple(plus), tuple(minus), depth)


def commutator(a: PolyhomSymbol, b: PolyhomSymbol) -> PolyhomSymbol:
    left = compose(a, b)
    right = compose(b, a)
    # orders agree; align formally even if one side lost content
    return left.minus_sym(right)


def wres(a: PolyhomSymbol) -> object:
    """Wodzicki residue: the x-average of the |xi|^{-1} component, both rays.

    Exact for exact coefficients; symbols with no degree -1 component have
    residue 0.
    """
    j_star = a.order + 1
    j_int = int(j_star) if float(j_star) == int(j_star) else None
    if j_int is None or not 0 <= j_int <= a.depth:
        return Fraction(0)
    return a.plus[j_int].get(0, Fraction(0)) + a.minus[j_int].get(0, Fraction(0))


def sres(pair: tuple[PolyhomSymbol, PolyhomSymbol]) -> object:
    """Graded residue of a block-diagonal pair (plus-block, minus-block)."""
    return wres(pair[0]) - wres(pair[1])


@dataclass(frozen=True)
class LogPolyhomSymbol:
    """log_weight * log|xi| plus a classical order-0 part."""

    log_weight: object
    classical: PolyhomSymbol

    def normalized_classical(self) -> PolyhomSymbol:
        """classical part of log(Q)/q."""
        return self.classical.scaled(
            Fraction(1, 1) / self.log_weight if isinstance(self.log_weight, (int, Fraction))
            else 1.0 / float(self.log_weight))


def log_symbol(q_symbol: PolyhomSymbol, cut: SpectralCut = DEFAULT_CUT) -> LogPolyhomSymbol:
    """Logarithm of an elliptic positive x-independent weight symbol.

    The result is q*log|xi| plus the classical expansion of
    log(a_0^\pm) + log(1 + lower-order/leading).
    """
    if not q_symbol.is_x_independent():
        raise SymbolError("log_symbol supports x-independent weights only")
    lead_p = q_symbol.plus[0].get(0, 0)
    lead_m = q_symbol.minus[0].get(0, 0)
    if lead_p == 0 or lead_m == 0:
        raise SymbolError("weight symbol is not elliptic (vanishing leading part)")
    if not (_positive_scalar(lead_p) and _positive_scalar(lead_m)):
        raise SymbolError("log_symbol needs a positive leading symbol")
    depth = q_symbol.depth
    entries: dict = {}
    for ray, comps, lead in ((1, q_symbol.plus, lead_p), (-1, q_symbol.minus, lead_m)):
        # u = sum_{j>=1} (a_j/a_0) |xi|^{-j}; log(1+u) expanded to depth
        u = {j: comps[j].get(0, 0) / lead for j in range(1, depth + 1)
             if comps[j].get(0, 0) != 0}
        logc = {}
        upow = dict(u)
        for mpow in range(1, depth + 1):
            for j, v in upow.items():
                if j <= depth:
                    logc[j] = logc.get(j, 0) + Fraction((-1) ** (mpow + 1), mpow) * v
            new = {}
            for j1, v1 in upow.items():
                for j2, v2 in u.items():
                    if j1 + j2 <= depth:
                        new[j1 + j2] = new.get(j1 + j2, 0) + v1 * v2
            upow = new
            if not upow:
                break
        const = _exact_log(lead)
        if const != 0:
            entries[(0, ray)] = fs_add(entries.get((0, ray), {}), {0: const})
        for j, v in logc.items():
            if v != 0:
                entries[(j, ray)] = fs_add(entries.get((j, ray), {}), {0: v})
    classical = make_symbol(Fraction(0), entries, depth)
    return LogPolyhomSymbol(q_symbol.order, classical)


def _positive_scalar(v) -> bool:
    try:
        return float(v) > 0
    except (TypeError, ValueError):
        return False


def _exact_log(v):
    if v == 1:
        return Fraction(0)
    return math.log(float(v))


def bracket_log(logq: LogPolyhomSymbol, b: PolyhomSymbol) -> PolyhomSymbol:
    """The classical commutator [log Q, B] of a log-symbol with a classical one."""
    depth = min(logq.classical.depth, b.depth)
    # [q log|xi|, B] = q * sum_{k>=1} (1/k!) d_xi^k(log|xi|) D_x^k B,
    # since D_x^k log|xi| = 0 kills the other ordering.
    plus = [dict() for _ in range(depth + 1)]
    minus = [dict() for _ in range(depth + 1)]
    for ray, (bcomp, out) in ((1, (b.plus, plus)), (-1, (b.minus, minus))):
        for k in range(1, depth + 1):
            # d_xi^k log|xi| = (-1)^(k-1) (k-1)! xi^(-k); on the ray sign^k |xi|^(-k)
            coeff = Fraction((-1) ** (k - 1) * math.factorial(k - 1) * ray ** k,
                             math.factorial(k))
            for jb in range(depth + 1 - k):
                sb = bcomp[jb]
                if not sb:
                    continue
                dxb = fs_dx(sb, k)
                if not dxb:
                    continue
                j_out = k + jb
                out[j_out] = fs_add(out[j_out], fs_scale(dxb, coeff * logq.log_weight))
    log_part = PolyhomSymbol(b.order, tuple(plus), tuple(minus), depth)
    return log_part.plus_sym(commutator(logq.classical, b))


def log_difference(logq1: LogPolyhomSymbol, logq2: LogPolyhomSymbol) -> PolyhomSymbol:
    """log(Q1)/q1 - log(Q2)/q2, classical because the log|xi| parts cancel."""
    return logq1.normalized_classical().minus_sym(logq2.normalized_classical())


# Residue prefactor sign realized by this calculus, pinned against the
# operator-side mode-sum oracle: tr^Q([A, B]) = +(1/q) res(A [log Q, B]).
RADUL_RESIDUE_SIGN = +1


def radul_cocycle(a: PolyhomSymbol, b: PolyhomSymbol, q_symbol: PolyhomSymbol,
                  cut: SpectralCut = DEFAULT_CUT):
    """Weighted trace of the commutator [A, B] as a local residue.

    Returns the value of tr^Q([A, B]) for the kernel-adjusted weight whose
    symbol is ``q_symbol``; finite-rank kernel conventions on the operator
    side shift mode sums by the corresponding diagonal entries but never this
    residue.
    """
    logq = log_symbol(q_symbol, cut)
    inner = compose(a, bracket_log(logq, b))
    q = q_symbol.order
    return RADUL_RESIDUE_SIGN * wres(inner) / (Fraction(q) if isinstance(q, (int, Fraction)) else float(q))


def radul_cocycle_graded(a_pair, b_pair, q_pair, cut: SpectralCut = DEFAULT_CUT):
    """Graded (super) variant for block-diagonal even operators.

    str^Q([A, B]) for A = diag(A+, A-), B = diag(B+, B-), Q = diag(Q+, Q-),
    computed as a graded residue.
    """
    return radul_cocycle(a_pair[0], b_pair[0], q_pair[0], cut) \
        - radul_cocycle(a_pair[1], b_pair[1], q_pair[1], cut)


def mixed_bracket_log(log_left: LogPolyhomSymbol, log_right: LogPolyhomSymbol,
                      b: PolyhomSymbol) -> PolyhomSymbol:
    """log(Q_left) B - B log(Q_right) for weights of equal order (classical)."""
    if log_left.log_weight != log_right.log_weight:
        raise SymbolError("mixed bracket needs weights of equal order")
    # the pure log|xi| parts cancel exactly as in the diagonal bracket
    core = bracket_log(LogPolyhomSymbol(log_left.log_weight,
                                        identity_symbol(b.depth).scaled(0)), b)
    return core.plus_sym(compose(log_left.classical, b)) \
        .minus_sym(compose(b, log_right.classical))


def radul_cocycle_odd(a_pair, b_pair, q_pair, cut: SpectralCut = DEFAULT_CUT):
    """Graded coboundary str^Q({A, B}) for odd crosswise operators.

    ``a_pair = (a_plus, a_minus)`` encodes A = offdiag with a_plus mapping the
    plus bundle into the minus one; likewise for B.  Realized sign convention:
    the value equals the plain (ungraded) residue of A [log Q, B] over both
    blocks, divided by the common weight order.
    """
    log_p = log_symbol(q_pair[0], cut)
    log_m = log_symbol(q_pair[1], cut)
    if log_p.log_weight != log_m.log_weight:
        raise SymbolError("graded weight must have a common order")
    q = log_p.log_weight
    # [log Q, B] blocks for odd B: (E+ -> E-): logQm B+ - B+ logQp, and symmetric
    blk_plus = mixed_bracket_log(log_m, log_p, b_pair[0])
    blk_minus = mixed_bracket_log(log_p, log_m, b_pair[1])
    total = wres(compose(a_pair[1], blk_plus)) + wres(compose(a_pair[0], blk_minus))
    return RADUL_RESIDUE_SIGN * total / (Fraction(q) if isinstance(q, (int, Fraction))
                                         else float(q))


def weight_dependence(a: PolyhomSymbol, q1: PolyhomSymbol, q2: PolyhomSymbol,
                      cut: SpectralCut = DEFAULT_CUT):
    """tr^{Q1}(A) - tr^{Q2}(A) = -res(A (log Q1/q1 - log Q2/q2))."""
    diff = log_difference(log_symbol(q1, cut), log_symbol(q2, cut))
    return -wres(compose(a, diff))


def dtr_family(a: PolyhomSymbol, dlog_q: PolyhomSymbol, order):
    """d/dt of tr^{Q_t}(A) for a weight family with d(log Q)/dt = dlog_q.

    Implements [d, tr^Q](A) = -(1/q) res(A dlog Q); for the conjugated family
    Q_t = e^{-tB} Q e^{tB} one has dlog_q = [log Q, B] and the value reduces
    to the coboundary with arguments swapped, -radul_cocycle(A, B, Q).
    """
    q = Fraction(order) if isinstance(order, (int, Fraction)) else float(order)
    return -wres(compose(a, dlog_q)) / q


def multiplier_to_symbol(spec: Spectrum, depth: int = DEFAULT_DEPTH,
                         first_modes: tuple[int, int] = (1, 1)) -> PolyhomSymbol:
    """Symbol of an affine multiplier spectrum (first ray = positive modes).

    ``first_modes`` records which Fourier modes the rays start on: the plus
    ray's n-th eigenvalue sits at mode n + first_modes[0], the minus ray's at
    mode -(n + first_modes[1]).  Weights built on the nonzero modes use the
    default (1, 1); circle-Dirac rays start at mode 0 on the plus side, (0, 1).
    The ray eigenvalue scale*(n + offset)^power then interpolates to the
    binomially expanded ray symbol scale*(|xi| + offset - first_mode)^power.
    """
    if spec.kind != "affine" or len(spec.rays) != 2:
        raise SymbolError("multiplier_to_symbol needs a two-ray affine spectrum")
    entries: dict = {}
    for ray_sign, ray, first in ((+1, spec.rays[0], first_modes[0]),
                                 (-1, spec.rays[1], first_modes[1])):
        if ray.arg not in (0.0, math.pi):
            raise SymbolError("complex ray phases have no real multiplier symbol")
        sign = 1 if ray.arg == 0.0 else -1
        scale = _as_exact(ray.scale) * sign
        power = _as_exact(ray.power)
        shift = _as_exact(ray.offset) - first
        binom = Fraction(1) if isinstance(power, Fraction) else 1.0
        for j in range(depth + 1):
            if j > 0:
                binom = binom * (power - (j - 1)) / j
                if binom == 0:
                    break
            coeff = scale * binom * shift ** j
            if coeff != 0:
                entries[(j, ray_sign)] = {0: coeff}
    order = _as_exact(spec.rays[0].power)
    if spec.rays[0].power != spec.rays[1].power:
        raise SymbolError("rays of different powers do not form one symbol class")
    return make_symbol(order, entries, depth)


def _as_exact(v: float):
    frac = Fraction(v).limit_denominator(10 ** 9)
    return frac if float(frac) == v else v
