"""Conformal map expressions with certified disk-image enclosures.

Two factor kinds cover every system built by this package:

* ``AffineMap``: z -> a*z + b.
* ``SqrtBranch``: z -> sign * sqrt((z*prescale - quad_c)/quad_a), an inverse
  branch of the quadratic w -> quad_a*w**2 + quad_c applied after the input
  is rescaled by ``prescale``.

A ``ConformalMapExpr`` is a finite composition, factors listed outermost
first and applied right to left.  Adjacent affine factors are collapsed into
one on construction, folding from the right, so composing a map onto an
already collapsed chain reproduces the collapse of the longer chain bit for
bit.

Branch handling has two deliberately different levels of strictness:

* ``apply`` evaluates points with the principal square root and refuses
  arguments on the closed negative real axis.
* Disk enclosures (``image_disk``, ``derivative_sup_bound``, and
  ``AnchoredEvaluator``) fix one continuous branch per square-root factor,
  anchored at the propagated disk center: with theta the argument of the
  center of a factor's argument disk, the branch is
  ``exp(i*theta/2) * sqrt(w * exp(-i*theta))``.  A factor is admissible when
  its argument disk excludes 0 (|center| > radius); the rotated disk then
  lies in the open right half-plane, where the principal root is analytic,
  so the anchored branch is analytic on the whole input disk even when the
  argument disk crosses the negative real axis.  It coincides with the
  principal branch whenever the argument disk avoids the closed negative
  reals.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import BranchCutError, ModeError, ParameterError
from .geometry import ClosedDisk, Enclosure, RealInterval


def _finite_nonzero(z: complex, what: str) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParameterError(f"{what} must be finite, got {z!r}")
    if z == 0:
        raise ParameterError(f"{what} must be nonzero")
    return z


@dataclass(frozen=True)
class AffineMap:
    """z -> a*z + b with a != 0."""

    a: complex
    b: complex

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _finite_nonzero(self.a, "affine coefficient a"))
        object.__setattr__(self, "b", complex(self.b))
        if not (math.isfinite(self.b.real) and math.isfinite(self.b.imag)):
            raise ParameterError(f"affine offset b must be finite, got {self.b!r}")


@dataclass(frozen=True)
class SqrtBranch:
    """z -> sign * sqrt((z*prescale - quad_c)/quad_a)."""

    quad_a: complex
    quad_c: complex
    prescale: complex
    sign: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "quad_a", _finite_nonzero(self.quad_a, "quad_a"))
        object.__setattr__(self, "quad_c", complex(self.quad_c))
        object.__setattr__(self, "prescale", _finite_nonzero(self.prescale, "prescale"))
        if self.sign not in (1, -1):
            raise ParameterError(f"sign must be +1 or -1, got {self.sign!r}")


MapFactor = Union[AffineMap, SqrtBranch]


def _merge_affine(outer: AffineMap, inner: AffineMap) -> AffineMap:
    # outer(inner(z)) = (a1*a2) z + (a1*b2 + b1), evaluated in this order.
    return AffineMap(outer.a * inner.a, outer.a * inner.b + outer.b)


def _collapse(factors: Sequence[MapFactor]) -> tuple[MapFactor, ...]:
    out_rev: list[MapFactor] = []
    for f in reversed(factors):
        if isinstance(f, AffineMap) and out_rev and isinstance(out_rev[-1], AffineMap):
            out_rev[-1] = _merge_affine(f, out_rev[-1])
        else:
            out_rev.append(f)
    return tuple(reversed(out_rev))


@dataclass(frozen=True)
class ConformalMapExpr:
    """Composition of factors, outermost first, applied right to left."""

    factors: tuple[MapFactor, ...]

    def __post_init__(self) -> None:
        if not self.factors:
            raise ParameterError("map expression needs at least one factor")
        for f in self.factors:
            if not isinstance(f, (AffineMap, SqrtBranch)):
                raise ParameterError(f"unsupported factor type {type(f).__name__}")
        object.__setattr__(self, "factors", _collapse(self.factors))

    @property
    def is_affine(self) -> bool:
        return len(self.factors) == 1 and isinstance(self.factors[0], AffineMap)

    @property
    def affine_factor(self) -> AffineMap:
        if not self.is_affine:
            raise ModeError("expression is not a single affine map")
        return self.factors[0]


MapLike = Union[ConformalMapExpr, AffineMap, SqrtBranch]


def as_expr(m: MapLike) -> ConformalMapExpr:
    if isinstance(m, ConformalMapExpr):
        return m
    return ConformalMapExpr((m,))


def identity_map() -> ConformalMapExpr:
    return as_expr(AffineMap(1.0, 0.0))


def compose(outer: MapLike, inner: MapLike) -> ConformalMapExpr:
    """outer after inner; adjacent affine factors at the junction collapse."""
    return ConformalMapExpr(as_expr(outer).factors + as_expr(inner).factors)


def compose_chain(maps: Sequence[MapLike]) -> ConformalMapExpr:
    """Composition of a list of maps, first entry outermost.

    Folded from the right, so compose(maps[0], compose_chain(maps[1:]))
    yields the identical factor tuple.
    """
    if not maps:
        raise ParameterError("compose_chain needs at least one map")
    acc = as_expr(maps[-1])
    for m in reversed(maps[:-1]):
        acc = compose(m, acc)
    return acc


def apply(m: MapLike, z: complex) -> complex:
    """Point evaluation with the principal square root.

    Square-root arguments on the closed negative real axis are rejected;
    the error names the offending factor by its index in ``factors``.
    """
    factors = as_expr(m).factors
    v = complex(z)
    for idx in range(len(factors) - 1, -1, -1):
        f = factors[idx]
        if isinstance(f, AffineMap):
            v = f.a * v + f.b
        else:
            w = (v * f.prescale - f.quad_c) / f.quad_a
            if w.imag == 0.0 and w.real <= 0.0:
                raise BranchCutError(
                    f"square-root argument {w!r} lies on the closed negative real axis",
                    factor_index=idx,
                )
            v = f.sign * cmath.sqrt(w)
    return v


class AnchoredEvaluator:
    """Branch-consistent evaluation of an expression over a reference disk.

    Propagates a certified enclosure disk through the factors right to left.
    Each square-root factor gets one fixed anchored branch chosen from the
    center of its argument disk; admissibility (argument disk excludes 0) is
    checked per factor and violations raise BranchCutError with the factor
    index.  Exposes:

    * ``value(z)``: anchored evaluation at points or numpy arrays of points;
      agrees with every continuous branch determined by the reference disk.
    * ``lipschitz``: certified upper bound for sup |m'| over the disk,
      multiplied out factor by factor.
    * ``enclosure``: certified disk containing the image of the reference
      disk, from per-factor mean-value bounds (sampling in image_disk is
      usually tighter).
    """

    def __init__(self, m: MapLike, disk: ClosedDisk):
        factors = as_expr(m).factors
        steps: list[tuple] = []
        center = complex(disk.center)
        radius = float(disk.radius)
        lip = 1.0
        for idx in range(len(factors) - 1, -1, -1):
            f = factors[idx]
            if isinstance(f, AffineMap):
                steps.append(("affine", f.a, f.b))
                center = f.a * center + f.b
                radius = abs(f.a) * radius
                lip *= abs(f.a)
            else:
                w0 = (center * f.prescale - f.quad_c) / f.quad_a
                rho = abs(f.prescale) / abs(f.quad_a) * radius
                margin = abs(w0) - rho
                if not margin > 0.0:
                    raise BranchCutError(
                        "square-root argument disk with center "
                        f"{w0!r} and radius {rho} does not exclude the branch point 0",
                        factor_index=idx,
                    )
                theta = cmath.phase(w0)
                back = cmath.exp(-1j * theta)
                half = cmath.exp(0.5j * theta)
                steps.append(("sqrt", f, back, half))
                center = f.sign * (half * cmath.sqrt(w0 * back))
                radius = rho / (2.0 * math.sqrt(margin))
                # sup of the factor derivative over the argument disk; the
                # min(|quad_a|, sqrt(|quad_a|)) denominator keeps the bound
                # valid for |quad_a| < 1 as well.
                q = min(abs(f.quad_a), math.sqrt(abs(f.quad_a)))
                lip *= abs(f.prescale) / (2.0 * q * math.sqrt(margin))
        self._steps = steps
        self.lipschitz = lip
        self.enclosure = ClosedDisk(center, radius)

    def value(self, z):
        arr = np.asarray(z, dtype=complex)
        scalar = arr.ndim == 0
        v = arr
        for step in self._steps:
            if step[0] == "affine":
                v = step[1] * v + step[2]
            else:
                f, back, half = step[1], step[2], step[3]
                w = (v * f.prescale - f.quad_c) / f.quad_a
                v = f.sign * (half * np.sqrt(w * back))
        return complex(v) if scalar else v


def image_disk(m: MapLike, D: ClosedDisk, samples: int = 256) -> ClosedDisk:
    """Certified disk enclosure of m(D).

    Affine expressions are exact.  Expressions with square-root factors use
    the anchored branch: the center is the anchored value at D.center and the
    radius is the maximum deviation over ``samples`` equally spaced boundary
    points plus a Lipschitz fill term L*pi*r/samples covering the gaps
    between samples; by the maximum principle the result contains m(D).
    """
    samples = int(samples)
    if samples < 16:
        raise ParameterError(f"samples must be at least 16, got {samples}")
    expr = as_expr(m)
    if expr.is_affine:
        f = expr.affine_factor
        return ClosedDisk(f.a * D.center + f.b, abs(f.a) * D.radius)
    ev = AnchoredEvaluator(expr, D)
    center = ev.value(D.center)
    if D.radius == 0.0:
        return ClosedDisk(center, 0.0)
    angles = 2.0 * np.pi * np.arange(samples) / samples
    boundary = D.center + D.radius * np.exp(1j * angles)
    vals = ev.value(boundary)
    maxdev = float(np.max(np.abs(vals - center)))
    pad = ev.lipschitz * (math.pi * D.radius / samples)
    return ClosedDisk(center, maxdev + pad)


def derivative_sup_bound(m: MapLike, D: ClosedDisk) -> float:
    """Certified upper bound for sup over D of |m'|.

    Multiplicative over factors: |a| for affine factors, and for a
    square-root factor |prescale| / (2*q*sqrt(min |argument|)) with
    q = min(|quad_a|, sqrt(|quad_a|)) and the argument minimum taken over
    the factor's propagated argument disk.
    """
    expr = as_expr(m)
    if expr.is_affine:
        return abs(expr.affine_factor.a)
    return AnchoredEvaluator(expr, D).lipschitz


def image_interval(m: MapLike, I: RealInterval) -> RealInterval:
    """Exact image of a real interval under a real affine map."""
    expr = as_expr(m)
    if not expr.is_affine:
        raise ModeError("interval images require a single affine factor")
    f = expr.affine_factor
    if f.a.imag != 0.0 or f.b.imag != 0.0:
        raise ModeError(f"interval images require real coefficients, got a={f.a!r}, b={f.b!r}")
    p = f.a.real * I.lo + f.b.real
    q = f.a.real * I.hi + f.b.real
    return RealInterval(min(p, q), max(p, q))


def image_enclosure(m: MapLike, E: Enclosure, samples: int = 256) -> Enclosure:
    """Enclosure image dispatch: intervals stay intervals under real affine
    maps, everything else goes through the disk path."""
    if isinstance(E, RealInterval):
        expr = as_expr(m)
        f = expr.factors[0]
        if (
            expr.is_affine
            and isinstance(f, AffineMap)
            and f.a.imag == 0.0
            and f.b.imag == 0.0
        ):
            return image_interval(expr, E)
        return image_disk(m, E.as_disk(), samples)
    return image_disk(m, E, samples)
