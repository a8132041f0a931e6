"""Stagewise iterated function systems and their piece enclosures.

A system is a finite horizon of stages over one domain disk U and one seed
set X (disk or real interval).  Stage j holds finitely many labeled maps
U -> X.  A word starting at stage j with labels (l_1, ..., l_k) denotes the
composition phi = phi_{l_1}^{(j)} o ... o phi_{l_k}^{(j+k-1)}, first label
outermost, and its piece is phi(X).

Piece enclosures are computed by sequential propagation: the enclosure for
word (l_1, ..., l_k) is the image of the enclosure for the shifted word
(l_2, ..., l_k) under phi_{l_1}^{(j)}.  Enumeration shares the shifted
subtree across sibling labels, so the stage invariance

    union over i of phi_i^{(j)} (pieces at stage j+1, depth k)
      = pieces at stage j, depth k+1

holds for the computed enclosures float for float, and costs are linear in
the output size.  Affine interval and disk images are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

from .errors import (
    ContainmentError,
    HorizonError,
    ParameterError,
    SizeCapError,
)
from .geometry import ClosedDisk, DiskDomain, Enclosure, RealInterval
from .maps import (
    AffineMap,
    ConformalMapExpr,
    MapLike,
    as_expr,
    compose,
    compose_chain,
    image_disk,
    image_enclosure,
)

PIECE_CAP_DEFAULT = 10**6


@dataclass(frozen=True)
class Stage:
    """Finitely many labeled maps; labels are distinct integers."""

    maps: tuple[ConformalMapExpr, ...]
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        maps = tuple(as_expr(m) for m in self.maps)
        object.__setattr__(self, "maps", maps)
        if not maps:
            raise ParameterError("a stage needs at least one map")
        labels = tuple(int(l) for l in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) != len(maps):
            raise ParameterError(
                f"{len(labels)} labels for {len(maps)} maps"
            )
        if len(set(labels)) != len(labels):
            raise ParameterError(f"stage labels must be distinct, got {labels}")

    @property
    def size(self) -> int:
        return len(self.maps)

    def map_for(self, label: int) -> ConformalMapExpr:
        try:
            return self.maps[self.labels.index(label)]
        except ValueError:
            raise ParameterError(
                f"label {label} not in stage labels {self.labels}"
            ) from None


def stage_of(maps: Sequence[MapLike], labels: Sequence[int] | None = None) -> Stage:
    maps = tuple(as_expr(m) for m in maps)
    if labels is None:
        labels = tuple(range(1, len(maps) + 1))
    return Stage(maps, tuple(labels))


@dataclass(frozen=True)
class Word:
    """Label word starting at a stage index (1-based)."""

    start: int
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.start < 1:
            raise ParameterError(f"word start must be at least 1, got {self.start}")
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))

    @property
    def depth(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class PieceEnclosure:
    word: Word
    enclosure: Enclosure
    diam_upper: float


@dataclass(frozen=True)
class SystemSpec:
    """Assembled system: domain, seed, materialized stages, horizon.

    ``envelope`` is the compact disk inside the domain that every stage map
    is verified (at assembly) to send the closed domain disk into; for disk
    seeds it is the seed itself.  ``descriptor`` is a canonical string
    identifying how the system was built, carried into certificates.
    """

    domain: DiskDomain
    seed: Enclosure
    stages: tuple[Stage, ...]
    horizon: int
    envelope: ClosedDisk
    descriptor: str

    def stage(self, j: int) -> Stage:
        if not 1 <= j <= self.horizon:
            raise HorizonError(
                f"stage {j} outside materialized horizon 1..{self.horizon}"
            )
        return self.stages[j - 1]

    @property
    def interval_mode(self) -> bool:
        return isinstance(self.seed, RealInterval)

    @property
    def seed_diameter(self) -> float:
        return self.seed.diameter


def _seed_hull(seed: Enclosure) -> ClosedDisk:
    return seed.as_disk() if isinstance(seed, RealInterval) else seed


def assemble_system(
    domain: DiskDomain,
    seed: Enclosure,
    stages: Sequence[Stage],
    envelope: ClosedDisk | None = None,
    descriptor: str = "explicit",
    samples: int = 256,
) -> SystemSpec:
    """Validate and freeze a system.

    Checks: at least one stage; the seed hull sits strictly inside the
    domain; the envelope (default: the seed disk) contains the seed hull and
    sits strictly inside the domain; and every stage map sends the closed
    domain disk into the envelope, witnessed by a certified image disk.
    """
    stages = tuple(stages)
    if not stages:
        raise ParameterError("a system needs at least one stage")
    hull = _seed_hull(seed)
    if envelope is None:
        if isinstance(seed, RealInterval):
            raise ParameterError("interval seeds need an explicit envelope disk")
        envelope = seed
    domain_disk = ClosedDisk(domain.center, domain.radius)
    if not (abs(hull.center - domain.center) + hull.radius < domain.radius):
        raise ContainmentError("seed must lie strictly inside the domain")
    if not envelope.contains_disk(hull):
        raise ContainmentError("envelope must contain the seed")
    if not (abs(envelope.center - domain.center) + envelope.radius < domain.radius):
        raise ContainmentError("envelope must lie strictly inside the domain")
    for j, st in enumerate(stages, start=1):
        for label, m in zip(st.labels, st.maps):
            img = image_disk(m, domain_disk, samples)
            if not envelope.contains_disk(img):
                raise ContainmentError(
                    f"stage {j} map {label} sends the domain to a disk with center "
                    f"{img.center!r} and radius {img.radius} outside the envelope"
                )
    return SystemSpec(domain, seed, stages, len(stages), envelope, descriptor)


def shifted(sys: SystemSpec, by: int) -> SystemSpec:
    """The system with the first ``by`` stages dropped."""
    if by < 0 or by > sys.horizon - 1:
        raise HorizonError(f"cannot shift by {by} with horizon {sys.horizon}")
    if by == 0:
        return sys
    return SystemSpec(
        sys.domain,
        sys.seed,
        sys.stages[by:],
        sys.horizon - by,
        sys.envelope,
        f"shift({by}; {sys.descriptor})",
    )


def collapsed_word_map(sys: SystemSpec, start: int, labels: Sequence[int]) -> ConformalMapExpr:
    """The word's composition, folded from the right so that
    compose(first map, collapsed rest) reproduces it bit for bit."""
    labels = tuple(labels)
    if not labels:
        raise ParameterError("empty word has no map")
    if start + len(labels) - 1 > sys.horizon:
        raise HorizonError(
            f"word of depth {len(labels)} from stage {start} exceeds horizon {sys.horizon}"
        )
    maps = [sys.stage(start + i).map_for(l) for i, l in enumerate(labels)]
    return compose_chain(maps)


def _piece_count(sys: SystemSpec, start: int, depth: int) -> int:
    count = 1
    for j in range(start, start + depth):
        count *= sys.stage(j).size
    return count


def pieces(
    sys: SystemSpec,
    start: int,
    depth: int,
    piece_cap: int = PIECE_CAP_DEFAULT,
    samples: int = 256,
) -> list[PieceEnclosure]:
    """All depth-``depth`` piece enclosures from stage ``start``, in
    lexicographic word order.  depth 0 yields the seed itself."""
    if start < 1:
        raise ParameterError(f"start stage must be at least 1, got {start}")
    if depth < 0:
        raise ParameterError(f"depth must be nonnegative, got {depth}")
    if depth > 0 and start + depth - 1 > sys.horizon:
        raise HorizonError(
            f"depth {depth} from stage {start} exceeds horizon {sys.horizon}"
        )
    total = _piece_count(sys, start, depth)
    if total > piece_cap:
        raise SizeCapError(
            f"{total} pieces exceed the cap {piece_cap}; raise piece_cap to proceed"
        )
    level: list[tuple[tuple[int, ...], Enclosure]] = [((), sys.seed)]
    for j in range(start + depth - 1, start - 1, -1):
        st = sys.stage(j)
        level = [
            ((label,) + labels, image_enclosure(m, enc, samples))
            for label, m in zip(st.labels, st.maps)
            for labels, enc in level
        ]
    return [
        PieceEnclosure(Word(start, labels), enc, enc.diameter) for labels, enc in level
    ]


def project(
    sys: SystemSpec,
    label_stream: Union[Callable[[int], int], Iterable[int]],
    n: int,
    samples: int = 256,
) -> PieceEnclosure:
    """Enclosure of the depth-``n`` piece along a label stream from stage 1.

    The stream is a callable j -> label or an iterable of labels.  The
    reported diam_upper is the running minimum of the enclosure diameters
    along the way, so it is nonincreasing in ``n`` even when an enclosure
    method is not monotone step to step.
    """
    if n < 0:
        raise ParameterError(f"depth must be nonnegative, got {n}")
    if n > sys.horizon:
        raise HorizonError(f"depth {n} exceeds horizon {sys.horizon}")
    if n == 0:
        return PieceEnclosure(Word(1, ()), sys.seed, sys.seed.diameter)
    if callable(label_stream):
        labels = [int(label_stream(j)) for j in range(1, n + 1)]
    else:
        it = iter(label_stream)
        labels = []
        for j in range(1, n + 1):
            try:
                labels.append(int(next(it)))
            except StopIteration:
                raise ParameterError(
                    f"label stream ended at depth {j - 1}, need {n}"
                ) from None
    diam = sys.seed.diameter
    expr = None
    enc: Enclosure = sys.seed
    for d, label in enumerate(labels, start=1):
        m = sys.stage(d).map_for(label)
        expr = m if expr is None else compose(expr, m)
        enc = image_enclosure(expr, sys.seed, samples)
        diam = min(diam, enc.diameter)
    return PieceEnclosure(Word(1, tuple(labels)), enc, diam)


@dataclass(frozen=True)
class InvarianceReport:
    start: int
    depth: int
    mode: str  # "interval" or "map"
    ok: bool
    max_discrepancy: float
    words_checked: int


def invariance_check(
    sys: SystemSpec,
    j: int,
    k: int,
    piece_cap: int = PIECE_CAP_DEFAULT,
    samples: int = 256,
    tolerance: float = 0.0,
) -> InvarianceReport:
    """Check stage invariance between depths k and k+1 at stage j.

    Interval mode compares the canonical sorted endpoint lists of
    union over i of phi_i^{(j)}(pieces(j+1, k)) against pieces(j, k+1);
    the sequential propagation makes them identical floats, so the check is
    exact.  Otherwise the word maps are compared: collapsed affine
    coefficients must match exactly, and expressions with square-root
    factors must have identical factor tuples or mutually containing image
    enclosures within ``tolerance``.
    """
    if j < 1 or k < 0:
        raise ParameterError(f"need j >= 1 and k >= 0, got j={j}, k={k}")
    if j + k > sys.horizon:
        raise HorizonError(
            f"invariance at stage {j}, depth {k} needs stage {j + k} <= horizon {sys.horizon}"
        )
    st = sys.stage(j)
    if sys.interval_mode:
        deeper = pieces(sys, j, k + 1, piece_cap, samples)
        subs = pieces(sys, j + 1, k, piece_cap, samples) if k > 0 else pieces(sys, j + 1, 0)
        mapped = [
            image_enclosure(m, p.enclosure, samples)
            for m in st.maps
            for p in subs
        ]
        lhs = sorted((e.lo, e.hi) for e in mapped)
        rhs = sorted((p.enclosure.lo, p.enclosure.hi) for p in deeper)
        disc = max(
            (max(abs(a[0] - b[0]), abs(a[1] - b[1])) for a, b in zip(lhs, rhs)),
            default=0.0,
        )
        ok = len(lhs) == len(rhs) and disc <= tolerance
        return InvarianceReport(j, k, "interval", ok, disc, len(deeper))

    total = _piece_count(sys, j, k + 1)
    if total > piece_cap:
        raise SizeCapError(f"{total} words exceed the cap {piece_cap}")
    words = [()] if k == 0 else [
        p.word.labels for p in pieces(sys, j + 1, k, piece_cap, samples)
    ]
    disc = 0.0
    ok = True
    checked = 0
    for label, m in zip(st.labels, st.maps):
        for suffix in words:
            checked += 1
            if suffix:
                composed = compose(m, collapsed_word_map(sys, j + 1, suffix))
            else:
                composed = as_expr(m)
            direct = collapsed_word_map(sys, j, (label,) + suffix)
            if composed.is_affine and direct.is_affine:
                fa, fb = composed.affine_factor, direct.affine_factor
                d = max(abs(fa.a - fb.a), abs(fa.b - fb.b))
            elif composed.factors == direct.factors:
                d = 0.0
            else:
                e1 = image_disk(composed, _seed_hull(sys.seed), samples)
                e2 = image_disk(direct, _seed_hull(sys.seed), samples)
                gap = abs(e1.center - e2.center)
                d = max(0.0, gap + e1.radius - e2.radius, gap + e2.radius - e1.radius)
            disc = max(disc, d)
            if d > tolerance:
                ok = False
    return InvarianceReport(j, k, "map", ok, disc, checked)


def combine_stages(
    sys: SystemSpec,
    breakpoints: Sequence[int],
    stage_cap: int = PIECE_CAP_DEFAULT,
    samples: int = 256,
) -> SystemSpec:
    """Coarsen the stage structure: new stage n is all ordered compositions
    of the original stages in (breakpoints[n-1], breakpoints[n]], labeled
    1..count in lexicographic word order.  The new horizon is the number of
    breakpoints."""
    bps = [int(b) for b in breakpoints]
    if not bps:
        raise ParameterError("need at least one breakpoint")
    if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
        raise ParameterError(f"breakpoints must be strictly increasing, got {bps}")
    if bps[0] < 1 or bps[-1] > sys.horizon:
        raise HorizonError(
            f"breakpoints must lie in 1..{sys.horizon}, got {bps}"
        )
    new_stages = []
    prev = 0
    for bp in bps:
        block = list(range(prev + 1, bp + 1))
        count = 1
        for j in block:
            count *= sys.stage(j).size
        if count > stage_cap:
            raise SizeCapError(
                f"combined stage over stages {block[0]}..{block[-1]} has {count} maps, "
                f"cap is {stage_cap}"
            )
        words: list[tuple[int, ...]] = [()]
        for j in block:
            words = [w + (label,) for w in words for label in sys.stage(j).labels]
        maps = [collapsed_word_map(sys, block[0], w) for w in words]
        new_stages.append(stage_of(maps))
        prev = bp
    return assemble_system(
        sys.domain,
        sys.seed,
        new_stages,
        envelope=sys.envelope,
        descriptor=f"combined(breakpoints={bps}; {sys.descriptor})",
        samples=samples,
    )


def _point_of(enc: Enclosure) -> complex:
    if isinstance(enc, RealInterval):
        return complex(enc.midpoint, 0.0)
    return enc.center


def attractor_sample(
    sys: SystemSpec,
    depth: int,
    streams_per_leaf: int = 1,
    piece_cap: int = PIECE_CAP_DEFAULT,
    samples: int = 256,
) -> list[complex]:
    """Representative points near the limit set.

    With streams_per_leaf == 1 (the default): the enclosure center of each
    depth-``depth`` word, one point per word, in lexicographic order.  With
    streams_per_leaf == s > 1: the centers of each word's first
    min(s, stage size) one-stage refinements at depth+1, which requires
    depth + 1 <= horizon.  Every returned point lies within the sampled
    word's enclosure diameter of the true piece.
    """
    if streams_per_leaf < 1:
        raise ParameterError(
            f"streams_per_leaf must be at least 1, got {streams_per_leaf}"
        )
    if streams_per_leaf == 1:
        return [_point_of(p.enclosure) for p in pieces(sys, 1, depth, piece_cap, samples)]
    deeper = pieces(sys, 1, depth + 1, piece_cap, samples)
    fanout = sys.stage(depth + 1).size
    take = min(streams_per_leaf, fanout)
    out: list[complex] = []
    for base in range(0, len(deeper), fanout):
        out.extend(_point_of(p.enclosure) for p in deeper[base : base + take])
    return out
