"""Model operator spectra with enough tail structure for analytic continuation.

A :class:`Spectrum` stands in for an admissible elliptic operator: it knows its
eigenvalues (as exact affine rays, a shifted lattice, or a generic enumeration
with tail data), its order, and its symmetry flags.  All values are immutable
after construction and safe to share between workers.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class SpectralModelError(ValueError):
    """Invalid model construction or an operation outside its preconditions."""


def _norm_arg(arg: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    a = math.fmod(arg, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


@dataclass(frozen=True)
class Ray:
    """Eigenvalue branch e^{i*arg} * scale * (n + offset)^power for n = 0, 1, 2, ...

    ``offset`` must stay positive; zero eigenvalues are kept in the parent
    spectrum's ``extras`` instead.
    """

    scale: float
    offset: float
    power: float = 1.0
    arg: float = 0.0
    mult: int = 1

    def __post_init__(self):
        if self.scale <= 0:
            raise SpectralModelError("ray scale must be positive")
        if self.offset <= 0:
            raise SpectralModelError("ray offset must be positive")
        if self.mult < 1:
            raise SpectralModelError("ray multiplicity must be >= 1")
        object.__setattr__(self, "arg", _norm_arg(self.arg))

    def magnitude(self, n: int) -> float:
        return self.scale * (n + self.offset) ** self.power

    def value(self, n: int) -> complex:
        mag = self.magnitude(n)
        if self.arg == 0.0:
            return mag
        if self.arg == math.pi:
            return -mag
        return mag * complex(math.cos(self.arg), math.sin(self.arg))


@dataclass(frozen=True)
class TorusData:
    dim: int
    m2: float
    drop_origin: bool = False   # lattice point k = 0 removed from the sum


@dataclass(frozen=True)
class TailDescriptor:
    """lambda_k ~ c * k^p * (1 + sum_j coeffs[j-1] * k^-j) for a generic enumeration."""

    c: float
    p: float
    coeffs: tuple[float, ...] = ()


@dataclass(frozen=True)
class GenericData:
    eigs: Callable[[int], Sequence[tuple[float, int]]]
    tail: TailDescriptor


@dataclass(frozen=True)
class Spectrum:
    kind: str                      # "affine" | "torus" | "generic"
    order: float
    rays: tuple[Ray, ...] = ()
    extras: tuple[tuple[complex, int], ...] = ()
    torus: TorusData | None = None
    generic: GenericData | None = None
    self_adjoint: bool = False
    positive: bool = False
    invertible: bool = True
    label: str = ""

    # -- enumeration ---------------------------------------------------------

    def eigenvalues(self, count: int) -> list[tuple[complex, int]]:
        """First ``count`` eigenvalue entries sorted by (|lambda|, arg, source)."""
        streams = []
        for i, ray in enumerate(self.rays):
            streams.append(_ray_stream(ray, i))
        for i, (val, mult) in enumerate(self.extras):
            streams.append(iter([(abs(val), _norm_arg(_carg(val)), -1 - i, val, mult)]))
        if self.torus is not None:
            streams.append(_torus_stream(self.torus, len(self.rays)))
        if self.generic is not None:
            streams.append(_generic_stream(self.generic, count))
        merged = heapq.merge(*streams)
        out = []
        for _, _, _, val, mult in merged:
            out.append((val, mult))
            if len(out) >= count:
                break
        return out

    def has_zero_mode(self) -> bool:
        if any(abs(v) == 0 for v, _ in self.extras):
            return True
        if self.torus is not None:
            return self.torus.m2 == 0.0 and not self.torus.drop_origin
        return False

    def kernel_dim(self) -> int:
        dim = sum(m for v, m in self.extras if abs(v) == 0)
        if self.torus is not None and self.torus.m2 == 0.0 and not self.torus.drop_origin:
            dim += 1
        return dim

    def validate(self, prefix: int = 64) -> None:
        """Check declared flags against an eigenvalue prefix."""
        if self.order == 0:
            raise SpectralModelError("order must be nonzero")
        eigs = self.eigenvalues(prefix)
        last = 0.0
        for val, mult in eigs:
            if mult < 1:
                raise SpectralModelError("multiplicities must be >= 1")
            if abs(val) < last - 1e-12:
                raise SpectralModelError("|eigenvalues| must be nondecreasing")
            last = abs(val)
            if self.positive and not (val.real > 0 and abs(val.imag) < 1e-12 * max(1, abs(val))):
                raise SpectralModelError(f"positive flag violated by eigenvalue {val}")
            if self.self_adjoint and abs(complex(val).imag) > 1e-12 * max(1.0, abs(val)):
                raise SpectralModelError(f"self-adjoint flag violated by eigenvalue {val}")
            if self.invertible and val == 0:
                raise SpectralModelError("invertible flag violated by zero eigenvalue")

    def is_real(self) -> bool:
        if any(_norm_arg(_carg(v)) not in (0.0, math.pi) for v, _ in self.extras if v != 0):
            return False
        return all(r.arg in (0.0, math.pi) for r in self.rays)

    def descriptor(self) -> dict:
        out = {"kind": self.kind, "order": self.order, "label": self.label,
               "flags": {"self_adjoint": self.self_adjoint, "positive": self.positive,
                         "invertible": self.invertible}}
        if self.rays:
            out["rays"] = [{"scale": r.scale, "offset": r.offset, "power": r.power,
                            "arg": r.arg, "mult": r.mult} for r in self.rays]
        if self.extras:
            out["extras"] = [{"re": complex(v).real, "im": complex(v).imag, "mult": m}
                             for v, m in self.extras]
        if self.torus is not None:
            out["torus"] = {"dim": self.torus.dim, "m2": self.torus.m2,
                            "drop_origin": self.torus.drop_origin}
        return out


@dataclass(frozen=True)
class GradedSpectrum:
    plus: Spectrum
    minus: Spectrum

    def __post_init__(self):
        if self.plus.order != self.minus.order:
            raise SpectralModelError("graded parts must share the same order")

    @property
    def order(self) -> float:
        return self.plus.order


@dataclass(frozen=True)
class SpectralCut:
    """A ray of angle theta avoided by the spectrum; fixes branches of powers/logs.

    theta = pi (the default) is special-cased: negative real eigenvalues are
    admitted with the branch approached from above, arg(-1) = +pi.
    """

    theta: float = math.pi

    def __post_init__(self):
        if not (0.0 < self.theta < TWO_PI):
            raise SpectralModelError("cut angle must lie in (0, 2*pi)")

    def admissible_for(self, spec: Spectrum, prefix: int = 32) -> bool:
        target = _norm_arg(self.theta)
        allow_pi = abs(target - math.pi) < 1e-12
        args = [r.arg for r in spec.rays]
        args += [_norm_arg(_carg(v)) for v, _ in spec.extras if v != 0]
        if spec.torus is not None:
            args.append(0.0)
        for a in args:
            if abs(a - target) < 1e-12 and not (allow_pi and abs(a - math.pi) < 1e-12):
                return False
        return True

    def branch_arg(self, value: complex) -> float:
        """Argument of value in (theta - 2*pi, theta]."""
        a = math.atan2(complex(value).imag, complex(value).real)
        while a > self.theta:
            a -= TWO_PI
        while a <= self.theta - TWO_PI:
            a += TWO_PI
        return a

    def log(self, value: complex) -> complex:
        if value == 0:
            raise SpectralModelError("log of zero eigenvalue")
        return math.log(abs(value)) + 1j * self.branch_arg(value)


DEFAULT_CUT = SpectralCut()


def _carg(value: complex) -> float:
    return math.atan2(complex(value).imag, complex(value).real)


def _ray_stream(ray: Ray, idx: int) -> Iterator[tuple]:
    def gen():
        n = 0
        while True:
            yield (ray.magnitude(n), ray.arg, idx, ray.value(n), ray.mult)
            n += 1
    return gen()


def _torus_stream(data: TorusData, idx: int) -> Iterator[tuple]:
    def gen():
        shell = 0
        counts = _lattice_counts(data.dim, 64)
        while True:
            if shell >= len(counts):
                counts = _lattice_counts(data.dim, 2 * len(counts))
            mult = counts[shell]
            if shell == 0 and data.drop_origin:
                mult -= 1
            if mult > 0:
                val = float(shell) + data.m2
                yield (abs(val), 0.0, idx, val, mult)
            shell += 1
    return gen()


def _generic_stream(data: GenericData, count: int) -> Iterator[tuple]:
    def gen():
        for k, (val, mult) in enumerate(data.eigs(count)):
            yield (abs(val), _norm_arg(_carg(val)), 10_000 + k, val, mult)
    return gen()


_lattice_cache: dict[int, "object"] = {}


def _lattice_counts(dim: int, upto: int):
    """counts[S] = #{k in Z^dim : |k|^2 = S} for S = 0..upto-1."""
    cached = _lattice_cache.get(dim)
    if cached is not None and len(cached) >= upto:
        return cached
    if dim == 4:
        # Jacobi: r_4(n) = 8 * sum of divisors of n not divisible by 4.
        counts = np.zeros(upto, dtype=np.int64)
        counts[0] = 1
        for d in range(1, upto):
            weight = 8 * d if d % 4 != 0 else 0
            if weight:
                counts[d::d] += weight
    else:
        side = int(math.isqrt(upto - 1)) + 1
        axis = np.arange(-side, side + 1) ** 2
        total = axis
        for _ in range(dim - 1):
            total = (total[:, None] + axis[None, :]).ravel()
        total = total[total < upto]
        counts = np.bincount(total, minlength=upto)
    _lattice_cache[dim] = counts
    return counts


# -- constructors -------------------------------------------------------------


def circle_dirac(a: float) -> Spectrum:
    """First-order self-adjoint model with spectrum {n + a : n in Z}."""
    frac = a - math.floor(a)
    if frac == 0.0:
        rays = (Ray(1.0, 1.0, 1.0, 0.0), Ray(1.0, 1.0, 1.0, math.pi))
        extras = ((0.0 + 0j, 1),)
        invertible = False
    else:
        rays = (Ray(1.0, frac, 1.0, 0.0), Ray(1.0, 1.0 - frac, 1.0, math.pi))
        extras = ()
        invertible = True
    return Spectrum(kind="affine", order=1.0, rays=rays, extras=extras,
                    self_adjoint=True, positive=False, invertible=invertible,
                    label=f"circle_dirac({a:g})")


def torus_laplacian_shifted(d: int, m2: float) -> Spectrum:
    """Spectrum {|k|^2 + m2 : k in Z^d} with lattice multiplicities, order 2."""
    if d not in (1, 2, 3, 4):
        raise SpectralModelError("torus dimension must be in {1, 2, 3, 4}")
    if m2 < 0:
        raise SpectralModelError("m2 must be nonnegative")
    return Spectrum(kind="torus", order=2.0, torus=TorusData(d, float(m2)),
                    self_adjoint=True, positive=m2 > 0, invertible=m2 > 0,
                    label=f"torus({d},{m2:g})")


def lambda_weight(power: float = 1.0, scale: float = 1.0) -> Spectrum:
    """The basic positive weight with spectrum {scale * |n|^power : n != 0}."""
    if scale <= 0 or power <= 0:
        raise SpectralModelError("lambda_weight needs positive scale and power")
    ray = Ray(scale, 1.0, power, 0.0)
    label = "Lambda" + (f"^{power:g}" if power != 1.0 else "")
    if scale != 1.0:
        label = f"{scale:g}*{label}"
    return Spectrum(kind="affine", order=float(power), rays=(ray, ray),
                    self_adjoint=True, positive=True, invertible=True, label=label)


def asymmetric_weight(plus: float = 1.0, minus: float = 2.0,
                      fill: float | None = 1.0) -> Spectrum:
    """Weight with eigenvalue plus*n on modes n > 0 and minus*|n| on n < 0.

    The mode n = 0 carries the kernel fill-in value (pass fill=None to leave
    the mode out entirely).
    """
    rays = (Ray(plus, 1.0, 1.0, 0.0), Ray(minus, 1.0, 1.0, 0.0))
    extras = () if fill is None else ((complex(fill), 1),)
    return Spectrum(kind="affine", order=1.0, rays=rays, extras=extras,
                    self_adjoint=True, positive=True, invertible=True,
                    label=f"asym({plus:g},{minus:g})")


def finite_stub(values: Sequence[complex], order: float = 1.0) -> Spectrum:
    """Finite test spectrum; useful for exercising combinators."""
    extras = tuple((complex(v), 1) for v in values)
    real = all(abs(complex(v).imag) < 1e-15 for v in values)
    return Spectrum(kind="affine", order=order, extras=extras,
                    self_adjoint=real, positive=all(complex(v).real > 0 for v in values) and real,
                    invertible=all(v != 0 for v in values), label="stub")


# -- transforms ---------------------------------------------------------------


def transform(spec: Spectrum, op: str, value: float | None = None) -> Spectrum:
    """Eigenvalue-wise transform: abs | square | scale | shift | power | invert_on_complement."""
    if spec.kind == "torus":
        raise SpectralModelError(f"transform {op!r} not supported on torus spectra")
    if op == "abs":
        rays = tuple(replace(r, arg=0.0) for r in spec.rays)
        extras = tuple((abs(v), m) for v, m in spec.extras)
        return replace(spec, rays=rays, extras=extras, self_adjoint=True,
                       positive=not any(v == 0 for v, _ in extras),
                       label=f"|{spec.label}|")
    if op == "square":
        rays = tuple(Ray(r.scale ** 2, r.offset, 2 * r.power, 2 * r.arg, r.mult)
                     for r in spec.rays)
        extras = tuple((v * v, m) for v, m in spec.extras)
        return replace(spec, rays=rays, extras=extras, order=2 * spec.order,
                       self_adjoint=spec.is_real(), positive=spec.is_real(),
                       label=f"({spec.label})^2")
    if op == "scale":
        if value is None or value <= 0:
            raise SpectralModelError("scale requires a positive factor")
        rays = tuple(replace(r, scale=r.scale * value) for r in spec.rays)
        extras = tuple((v * value, m) for v, m in spec.extras)
        return replace(spec, rays=rays, extras=extras, label=f"{value:g}*{spec.label}")
    if op == "shift":
        if value is None:
            raise SpectralModelError("shift requires an offset")
        return _shift(spec, value)
    if op == "power":
        if value is None or value == 0:
            raise SpectralModelError("power requires a nonzero exponent")
        if not spec.positive:
            raise SpectralModelError("power of a non-positive spectrum needs a cut; take abs first")
        rays = tuple(Ray(r.scale ** value, r.offset, r.power * value, 0.0, r.mult)
                     for r in spec.rays)
        extras = tuple((complex(v).real ** value, m) for v, m in spec.extras)
        return replace(spec, rays=rays, extras=extras, order=spec.order * value,
                       invertible=True, label=f"({spec.label})^{value:g}")
    if op == "invert_on_complement":
        return transform(drop_kernel(spec), "power", -1.0)
    raise SpectralModelError(f"unknown transform {op!r}")


def _shift(spec: Spectrum, alpha: float) -> Spectrum:
    """Subtract... no: spectrum of A + alpha... here: eigenvalues lambda + alpha."""
    new_rays: list[Ray] = []
    new_extras: list[tuple[complex, int]] = [(v + alpha, m) for v, m in spec.extras]
    for r in spec.rays:
        if r.power != 1.0 or r.arg not in (0.0, math.pi):
            raise SpectralModelError("shift supported only for real first-order rays")
        sign = 1.0 if r.arg == 0.0 else -1.0
        # lambda_n = sign*scale*(n + offset) + alpha = sign*scale*(n + offset + alpha/(sign*scale))
        new_off = r.offset + alpha / (sign * r.scale)
        peel = 0
        while new_off + peel <= 0:
            peel += 1
        for n in range(peel):
            val = sign * r.scale * (n + new_off)
            new_extras.append((complex(val), r.mult))
        new_rays.append(Ray(r.scale, new_off + peel, 1.0, r.arg, r.mult))
    invertible = all(v != 0 for v, _ in new_extras)
    positive = invertible and all(
        complex(v).real > 0 for v, _ in new_extras) and all(r.arg == 0.0 for r in new_rays)
    return replace(spec, rays=tuple(new_rays), extras=tuple(new_extras),
                   invertible=invertible, positive=positive,
                   label=f"{spec.label}{alpha:+g}")


def skew_double(d_spec: Spectrum) -> Spectrum:
    """Spectrum {+i*lambda, -i*lambda : lambda in D} of [[0, -D], [D, 0]]."""
    if not d_spec.self_adjoint:
        raise SpectralModelError("skew_double requires a self-adjoint base")
    mag = transform(d_spec, "abs")
    rays = []
    for r in mag.rays:
        rays.append(replace(r, arg=math.pi / 2))
        rays.append(replace(r, arg=-math.pi / 2))
    extras = []
    for v, m in mag.extras:
        extras.append((1j * v, m))
        extras.append((-1j * v, m))
    return replace(mag, rays=tuple(rays), extras=tuple(extras), self_adjoint=False,
                   positive=False, label=f"skew({d_spec.label})")


def graded(plus: Spectrum, minus: Spectrum) -> GradedSpectrum:
    return GradedSpectrum(plus, minus)


def eig_count_in(spec: Spectrum, lo: float, hi: float) -> int:
    """Total multiplicity of eigenvalues in the closed interval [lo, hi]."""
    if lo > hi:
        raise SpectralModelError("need lo <= hi")
    if not spec.is_real():
        raise SpectralModelError("eig_count_in requires a real spectrum")
    total = 0
    for v, m in spec.extras:
        if lo <= complex(v).real <= hi:
            total += m
    for r in spec.rays:
        sign = 1.0 if r.arg == 0.0 else -1.0
        # sign*scale*(n+offset)^power in [lo, hi]; magnitude is increasing in n.
        if sign > 0:
            if hi < 0:
                continue
            mag_lo, mag_hi = max(lo, 0.0), hi
        else:
            if lo > 0:
                continue
            mag_lo, mag_hi = max(-hi, 0.0), -lo
        # count n >= 0 with mag_lo <= scale*(n+offset)^power <= mag_hi
        top = (mag_hi / r.scale) ** (1.0 / r.power) - r.offset
        if top < 0:
            continue
        n_hi = math.floor(top + 1e-12)
        if mag_lo <= 0:
            n_lo = 0
        else:
            bot = (mag_lo / r.scale) ** (1.0 / r.power) - r.offset
            n_lo = max(0, math.ceil(bot - 1e-12))
        if n_hi >= n_lo:
            total += (n_hi - n_lo + 1) * r.mult
    if spec.torus is not None:
        counts = _lattice_counts(spec.torus.dim, max(2, int(hi - spec.torus.m2) + 2))
        for shell, c in enumerate(counts):
            val = shell + spec.torus.m2
            if lo <= val <= hi:
                mult = c - (1 if shell == 0 and spec.torus.drop_origin else 0)
                total += mult
    return total


# -- kernel conventions -------------------------------------------------------


def drop_kernel(spec: Spectrum) -> Spectrum:
    """Restrict to the orthogonal complement of the kernel (remove zero modes)."""
    extras = tuple((v, m) for v, m in spec.extras if v != 0)
    torus = spec.torus
    if torus is not None and torus.m2 == 0.0:
        torus = replace(torus, drop_origin=True)
    positive = all(r.arg == 0.0 for r in spec.rays) and \
        all(complex(v).real > 0 and abs(complex(v).imag) < 1e-15 for v, _ in extras)
    return replace(spec, extras=extras, torus=torus, invertible=True,
                   positive=positive, label=f"{spec.label}'")


def kernel_adjust(spec: Spectrum, fill: float = 1.0) -> Spectrum:
    """Replace zero eigenvalues by ``fill`` (the weight convention Q + P_Q)."""
    if fill <= 0:
        raise SpectralModelError("kernel fill-in must be positive")
    kdim = spec.kernel_dim()
    if kdim == 0:
        return spec
    dropped = drop_kernel(spec)
    extras = dropped.extras + ((complex(fill), kdim),)
    return replace(dropped, extras=extras, label=f"{spec.label}+P")


def pointwise_product(a: Spectrum, b: Spectrum) -> Spectrum:
    """Mode-wise product of two commuting positive affine multipliers."""
    if a.kind != "affine" or b.kind != "affine":
        raise SpectralModelError("pointwise_product needs affine spectra")
    if len(a.rays) != len(b.rays) or len(a.extras) != len(b.extras):
        raise SpectralModelError("multipliers are not on a common enumeration")
    rays = []
    for ra, rb in zip(a.rays, b.rays):
        if ra.offset != rb.offset or ra.mult != rb.mult:
            raise SpectralModelError("ray enumerations do not match")
        rays.append(Ray(ra.scale * rb.scale, ra.offset, ra.power + rb.power,
                        ra.arg + rb.arg, ra.mult))
    extras = tuple((va * vb, ma) for (va, ma), (vb, mb) in zip(a.extras, b.extras))
    return Spectrum(kind="affine", order=a.order + b.order, rays=tuple(rays),
                    extras=extras, self_adjoint=a.self_adjoint and b.self_adjoint,
                    positive=a.positive and b.positive,
                    invertible=a.invertible and b.invertible,
                    label=f"{a.label}*{b.label}")
