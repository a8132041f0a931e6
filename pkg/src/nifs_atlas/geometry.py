"""Planar geometry primitives with conservative enclosure semantics.

Conventions used throughout the package:

* Points are built-in ``complex`` numbers.
* ``ClosedDisk`` and ``RealInterval`` are the two enclosure kinds.  Every
  operation that returns a distance returns a certified *lower* bound for the
  true distance between the enclosed sets, and every separation predicate may
  answer False out of caution but never True incorrectly.
* A ``RoundAnnulus`` is the open set ``{z : r < |z - w| < R}``; its bounded
  complementary component ``{|z - w| <= r}`` is called the hole.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    ContainmentError,
    DegenerateAnnulusError,
    DomainError,
    ParameterError,
)


def _finite_complex(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParameterError(f"point must be finite, got {z!r}")
    return z


@dataclass(frozen=True)
class ClosedDisk:
    """Closed round disk ``{z : |z - center| <= radius}``."""

    center: complex
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _finite_complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not (math.isfinite(self.radius) and self.radius >= 0.0):
            raise ParameterError(f"disk radius must be finite and >= 0, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains_point(self, z: complex, slack: float = 0.0) -> bool:
        return abs(complex(z) - self.center) <= self.radius + slack

    def contains_disk(self, other: "ClosedDisk", slack: float = 0.0) -> bool:
        return abs(other.center - self.center) + other.radius <= self.radius + slack

    def inflate(self, pad: float) -> "ClosedDisk":
        return ClosedDisk(self.center, self.radius + pad)


@dataclass(frozen=True)
class RealInterval:
    """Closed interval ``[lo, hi]`` on the real axis."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ParameterError("interval endpoints must be finite")
        if self.lo > self.hi:
            raise ParameterError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def as_disk(self) -> ClosedDisk:
        # Smallest disk containing the interval; used when mixing enclosure kinds.
        return ClosedDisk(complex(self.midpoint, 0.0), 0.5 * self.diameter)

    def contains_interval(self, other: "RealInterval", slack: float = 0.0) -> bool:
        return other.lo >= self.lo - slack and other.hi <= self.hi + slack


Enclosure = Union[ClosedDisk, RealInterval]


@dataclass(frozen=True)
class RoundAnnulus:
    """Open round annulus ``{z : inner < |z - center| < outer}``."""

    center: complex
    inner: float
    outer: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _finite_complex(self.center))
        object.__setattr__(self, "inner", float(self.inner))
        object.__setattr__(self, "outer", float(self.outer))
        if not (
            self.inner >= 0.0 and self.inner < self.outer and math.isfinite(self.outer)
        ):
            raise DegenerateAnnulusError(
                f"annulus radii must satisfy 0 <= inner < outer < inf, "
                f"got inner={self.inner}, outer={self.outer}"
            )

    @property
    def euclidean_diameter(self) -> float:
        return 2.0 * self.outer


@dataclass(frozen=True)
class DiskDomain:
    """Open round disk used as the ambient domain for hyperbolic geometry."""

    disk: ClosedDisk

    def __post_init__(self) -> None:
        if self.disk.radius <= 0.0:
            raise ParameterError("domain disk must have positive radius")

    @property
    def center(self) -> complex:
        return self.disk.center

    @property
    def radius(self) -> float:
        return self.disk.radius


def annulus_modulus(annulus: RoundAnnulus) -> float:
    """Conformal modulus ``log(outer/inner)`` of a round annulus.

    inner == 0 describes a punctured disk of infinite modulus; that is
    rejected rather than returned as inf.
    """
    if annulus.inner == 0.0:
        raise DegenerateAnnulusError("modulus undefined for inner radius 0")
    return math.log(annulus.outer / annulus.inner)


def extremal_distances(piece: Enclosure, point: complex) -> tuple[float, float]:
    """(min, max) of ``|z - point|`` over the enclosure ``piece``. Exact."""
    point = complex(point)
    if isinstance(piece, ClosedDisk):
        d = abs(piece.center - point)
        return max(0.0, d - piece.radius), d + piece.radius
    if isinstance(piece, RealInterval):
        # Nearest point of a horizontal segment: clamp the real part.
        t = min(max(point.real, piece.lo), piece.hi)
        dmin = abs(point - complex(t, 0.0))
        dmax = max(abs(point - complex(piece.lo, 0.0)), abs(point - complex(piece.hi, 0.0)))
        return dmin, dmax
    raise ParameterError(f"unsupported enclosure type {type(piece).__name__}")


def set_distance_lower(e1: Enclosure, e2: Enclosure) -> float:
    """Certified lower bound for ``dist(E1, E2)``.

    Exact for disk/disk and interval/interval pairs; a mixed pair is bounded
    through the disk hull of the interval (still a valid lower bound).
    """
    if isinstance(e1, RealInterval) and isinstance(e2, RealInterval):
        return max(0.0, e2.lo - e1.hi, e1.lo - e2.hi)
    d1 = e1.as_disk() if isinstance(e1, RealInterval) else e1
    d2 = e2.as_disk() if isinstance(e2, RealInterval) else e2
    return max(0.0, abs(d1.center - d2.center) - d1.radius - d2.radius)


def boundary_distance_lower(piece: Enclosure, seed: Enclosure) -> float:
    """Certified lower bound for ``dist(piece, boundary of seed)``.

    Requires ``piece`` to sit inside ``seed``; raises ContainmentError
    otherwise.  For a disk seed the boundary is its circle, for an interval
    seed its two endpoints.
    """
    if isinstance(seed, ClosedDisk):
        d = piece.as_disk() if isinstance(piece, RealInterval) else piece
        reach = abs(d.center - seed.center) + d.radius
        if reach > seed.radius:
            raise ContainmentError(
                f"enclosure reaches {reach} from seed center, beyond radius {seed.radius}"
            )
        return seed.radius - reach
    if isinstance(seed, RealInterval):
        if not isinstance(piece, RealInterval):
            raise ContainmentError("disk enclosure cannot sit inside an interval seed")
        if piece.lo < seed.lo or piece.hi > seed.hi:
            raise ContainmentError(f"{piece} not contained in {seed}")
        return min(piece.lo - seed.lo, seed.hi - piece.hi)
    raise ParameterError(f"unsupported seed type {type(seed).__name__}")


def piece_side(annulus: RoundAnnulus, piece: Enclosure) -> int:
    """Which side of the annulus an enclosure lies on.

    Returns -1 if the enclosure lies entirely in the closed hole, +1 if
    entirely in the closed outside, 0 if neither can be certified.
    """
    dmin, dmax = extremal_distances(piece, annulus.center)
    if dmax <= annulus.inner:
        return -1
    if dmin >= annulus.outer:
        return 1
    return 0


def annulus_separates(annulus: RoundAnnulus, pieces: Sequence[Enclosure]) -> bool:
    """Conservative separation test.

    True only when every enclosure avoids the open annulus by lying entirely
    in the closed hole or entirely in the closed outside, and both sides are
    occupied.  False answers may be caused by enclosure slack alone.
    """
    if not pieces:
        raise ParameterError("separation test needs at least one enclosure")
    hole_hit = False
    outside_hit = False
    for piece in pieces:
        side = piece_side(annulus, piece)
        if side == 0:
            return False
        if side < 0:
            hole_hit = True
        else:
            outside_hit = True
    return hole_hit and outside_hit


def hyperbolic_distance(domain: DiskDomain, z: complex, w: complex) -> float:
    """Hyperbolic distance between interior points of a round disk domain.

    Uses the curvature -1 normalization with density 2/(1-|t|^2) on the unit
    disk, so d(0, x) = log((1+x)/(1-x)) along a radius.
    """
    zeta = (complex(z) - domain.center) / domain.radius
    eta = (complex(w) - domain.center) / domain.radius
    if abs(zeta) >= 1.0 or abs(eta) >= 1.0:
        raise DomainError("hyperbolic distance needs points strictly inside the domain")
    num = abs(zeta - eta)
    den = abs(1.0 - zeta.conjugate() * eta)
    rho = num / den
    if rho >= 1.0:  # not reachable for interior points, guards rounding
        raise DomainError("pseudo-hyperbolic ratio reached 1")
    return 2.0 * math.atanh(rho)


def best_separating_annulus_search(
    points: Iterable[complex],
    hole_point: complex,
    centers: Iterable[complex],
    radii: Iterable[float],
) -> RoundAnnulus | None:
    """Brute-force search for a separating round annulus of maximal modulus.

    Candidates are annuli Ann(c; r, R) with c from ``centers`` and r, R from
    ``radii`` such that the open annulus contains none of ``points``, the
    closed hole contains ``hole_point``, and the closed outside contains at
    least one point.  For each (c, r) only the largest admissible grid R can
    be optimal, so the scan is linear in the radius grid per center.
    """
    pts = np.asarray([complex(p) for p in points], dtype=complex)
    if pts.size == 0:
        raise ParameterError("need at least one point")
    hole_point = complex(hole_point)
    if not np.any(pts == hole_point):
        raise ParameterError("hole point must belong to the point set")
    grid = np.asarray(sorted(float(r) for r in radii), dtype=float)
    if grid.size == 0 or grid[0] <= 0.0:
        raise ParameterError("radius grid must be nonempty and positive")

    best: RoundAnnulus | None = None
    best_mod = -math.inf
    for c in centers:
        c = complex(c)
        dists = np.sort(np.abs(pts - c))
        d_hole = abs(hole_point - c)
        # Index of the first point distance strictly above each candidate r.
        nxt = np.searchsorted(dists, grid, side="right")
        valid = nxt < dists.size  # something is left to put outside
        d_next = np.where(valid, dists[np.minimum(nxt, dists.size - 1)], np.nan)
        # Largest grid radius R <= d_next keeps the open annulus point-free.
        r_idx = np.searchsorted(grid, d_next, side="right") - 1
        valid &= r_idx >= 0
        outer = np.where(valid, grid[np.maximum(r_idx, 0)], np.nan)
        valid &= outer > grid
        valid &= grid >= d_hole
        if not np.any(valid):
            continue
        mods = np.where(valid, np.log(outer / grid), -np.inf)
        k = int(np.argmax(mods))
        if mods[k] > best_mod:
            best_mod = float(mods[k])
            best = RoundAnnulus(c, float(grid[k]), float(outer[k]))
    return best
