"""Stagewise quadratic dynamics: forward escape grids and inverse systems.

A polynomial sequence applies P_j(z) = a_j * (quad_a * z^2 + quad_c) at
stage j.  Under the standing hypotheses |quad_c| > 1 and
|quad_a| - |quad_c| > 1, the critical value of quad_a*z^2 + quad_c lies
outside the closed unit disk and both preimages of the closed unit disk lie
strictly inside it, so as soon as every |a_j| > 1 the two inverse branches

    z -> sign * sqrt((z / a_j - quad_c) / quad_a),   sign in {+1, -1}

form a stagewise contracting system on the closed unit disk.  The forward
classifier marks a grid point by the first stage at which its orbit leaves
the membership disk (0 when it never does within the stage budget); the
inverse system's pieces approximate the complement of escape.

Separation diagnostics feed a growth dichotomy: the per-stage ratio
delta/eta grows without bound exactly when the moduli |a_j| do, and the
trend verdict compares the largest observed ratio against the smallest.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .certify import SeparationReport, separation_report
from .errors import (
    BranchCutError,
    ContainmentError,
    HorizonError,
    HypothesisError,
    ParameterError,
)
from .geometry import ClosedDisk, DiskDomain, set_distance_lower
from .maps import SqrtBranch, image_disk
from .nifs import SystemSpec, assemble_system, stage_of
from .seqlang import SeqRule, evaluate_rule, expr_rule
from .serialize import canonical_json

TREND_GROWING_FACTOR = 3.0
VERDICT_GROWING = "GROWING"
VERDICT_BOUNDED = "BOUNDED"

DEFAULT_EPS = 0.05


@dataclass(frozen=True)
class HypothesisReport:
    mod_c: float
    mod_a_minus_mod_c: float
    crit_value_outside: bool
    preimage_inside: bool
    passed: bool


def check_hypotheses(quad_a: complex, quad_c: complex) -> HypothesisReport:
    """Check the standing hypotheses on quad_a and quad_c."""
    quad_a = complex(quad_a)
    quad_c = complex(quad_c)
    if quad_a == 0:
        raise ParameterError("quad_a must be nonzero")
    mod_c = abs(quad_c)
    gap = abs(quad_a) - mod_c
    crit = mod_c > 1.0
    pre = gap > 1.0
    return HypothesisReport(mod_c, gap, crit, pre, crit and pre)


@dataclass(frozen=True)
class PolySeqSpec:
    quad_a: complex
    quad_c: complex
    a_values: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "quad_a", complex(self.quad_a))
        object.__setattr__(self, "quad_c", complex(self.quad_c))
        object.__setattr__(
            self, "a_values", tuple(complex(a) for a in self.a_values)
        )

    @property
    def horizon(self) -> int:
        return len(self.a_values)


def make_poly_seq(
    quad_a: complex,
    quad_c: complex,
    rule: SeqRule | str | None = None,
    values=None,
    horizon: int | None = None,
) -> PolySeqSpec:
    """Materialize a polynomial sequence from a rule or explicit values.

    Exactly one of ``rule`` (with ``horizon``) and ``values`` must be given.
    Every multiplier must satisfy |a_j| > 1.
    """
    if complex(quad_a) == 0:
        raise ParameterError("quad_a must be nonzero")
    if (rule is None) == (values is None):
        raise ParameterError("give exactly one of rule and values")
    if values is not None:
        a = tuple(complex(v) for v in values)
        if not a:
            raise ParameterError("values must be nonempty")
    else:
        if horizon is None or int(horizon) < 1:
            raise ParameterError("a rule needs a positive horizon")
        if isinstance(rule, str):
            rule = expr_rule(rule)
        a = tuple(
            complex(evaluate_rule(rule, j)) for j in range(1, int(horizon) + 1)
        )
    for j, aj in enumerate(a, start=1):
        if not abs(aj) > 1.0:
            raise ParameterError(f"stage {j}: |a_j| = {abs(aj)} must exceed 1")
    return PolySeqSpec(quad_a, quad_c, a)


def inverse_ifs(
    spec: PolySeqSpec, eps: float = DEFAULT_EPS, samples: int = 256
) -> SystemSpec:
    """The two-branch inverse system of a polynomial sequence.

    Seed and envelope are the closed unit disk; the ambient domain is the
    open disk of radius 1 + eps.  Label 1 carries the +1 branch, label 2
    the -1 branch, at every stage.
    """
    eps = float(eps)
    if not (math.isfinite(eps) and eps > 0.0):
        raise ParameterError(f"eps must be positive and finite, got {eps}")
    hyp = check_hypotheses(spec.quad_a, spec.quad_c)
    if not hyp.passed:
        raise HypothesisError(
            f"standing hypotheses fail: |quad_c| = {hyp.mod_c}, "
            f"|quad_a| - |quad_c| = {hyp.mod_a_minus_mod_c} (both must exceed 1)"
        )
    stages = [
        stage_of(
            [
                SqrtBranch(spec.quad_a, spec.quad_c, 1.0 / aj, 1),
                SqrtBranch(spec.quad_a, spec.quad_c, 1.0 / aj, -1),
            ]
        )
        for aj in spec.a_values
    ]
    descriptor = canonical_json(
        {
            "a_values": list(spec.a_values),
            "eps": eps,
            "family": "julia",
            "horizon": spec.horizon,
            "quad_a": spec.quad_a,
            "quad_c": spec.quad_c,
        }
    )
    unit = ClosedDisk(0.0, 1.0)
    try:
        return assemble_system(
            DiskDomain(ClosedDisk(0.0, 1.0 + eps)),
            unit,
            stages,
            envelope=unit,
            descriptor=descriptor,
            samples=samples,
        )
    except (ContainmentError, BranchCutError) as exc:
        raise ParameterError(
            f"inverse branches are not admissible on the ambient disk of "
            f"radius {1.0 + eps}: {exc}; try a smaller eps"
        ) from exc


def branch_separation_floor(
    quad_a: complex, quad_c: complex, samples: int = 256
) -> float:
    """Certified distance between the two unscaled branch images.

    Uses prescale 1, the worst case over all |a_j| >= 1: the branch images
    of the unit disk only shrink toward +-sqrt(-quad_c/quad_a) as |a_j|
    grows, so any admissible stage separates by at least this floor.
    """
    unit = ClosedDisk(0.0, 1.0)
    plus = image_disk(SqrtBranch(quad_a, quad_c, 1.0, 1), unit, samples)
    minus = image_disk(SqrtBranch(quad_a, quad_c, 1.0, -1), unit, samples)
    return set_distance_lower(plus, minus)


@dataclass(frozen=True)
class DichotomyReport:
    spec: PolySeqSpec
    first_stage: int
    last_stage: int
    reports: tuple[SeparationReport, ...]
    min_ratio: float
    max_ratio: float
    ratio_spread: float
    trend: str
    delta_floor: float


def dichotomy_report(
    spec: PolySeqSpec,
    first: int = 1,
    last: int | None = None,
    eps: float = DEFAULT_EPS,
    samples: int = 256,
) -> DichotomyReport:
    """Per-stage separation diagnostics and the growth trend verdict.

    The trend is GROWING when the largest ratio delta/eta over the inspected
    stages is at least TREND_GROWING_FACTOR times the smallest, BOUNDED
    otherwise.
    """
    last = spec.horizon if last is None else int(last)
    first = int(first)
    if not 1 <= first <= last <= spec.horizon:
        raise HorizonError(
            f"stage window {first}..{last} must lie in 1..{spec.horizon}"
        )
    sys = inverse_ifs(spec, eps, samples)
    reports = tuple(
        separation_report(sys, j, samples) for j in range(first, last + 1)
    )
    ratios = [r.ratio for r in reports]
    min_ratio = min(ratios)
    max_ratio = max(ratios)
    spread = max_ratio / min_ratio if min_ratio > 0.0 else math.inf
    trend = (
        VERDICT_GROWING
        if max_ratio >= TREND_GROWING_FACTOR * min_ratio
        else VERDICT_BOUNDED
    )
    return DichotomyReport(
        spec,
        first,
        last,
        reports,
        min_ratio,
        max_ratio,
        spread,
        trend,
        branch_separation_floor(spec.quad_a, spec.quad_c, samples),
    )


@dataclass(frozen=True)
class EscapeGrid:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float
    nx: int
    ny: int
    max_stages: int
    membership_radius: float = 1.0

    def __post_init__(self):
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ParameterError("grid window must have positive extent")
        if self.nx < 1 or self.ny < 1:
            raise ParameterError("grid resolution must be at least 1x1")
        if self.max_stages < 1:
            raise ParameterError("max_stages must be at least 1")
        if not self.membership_radius > 0.0:
            raise ParameterError("membership_radius must be positive")

    def centers(self) -> np.ndarray:
        """Complex pixel-center matrix, row 0 along the top (im_hi) edge."""
        sx = (self.re_hi - self.re_lo) / self.nx
        sy = (self.im_hi - self.im_lo) / self.ny
        xs = self.re_lo + (np.arange(self.nx) + 0.5) * sx
        ys = self.im_hi - (np.arange(self.ny) + 0.5) * sy
        return xs[np.newaxis, :] + 1j * ys[:, np.newaxis]


def _classify_block(spec: PolySeqSpec, grid: EscapeGrid, z: np.ndarray) -> np.ndarray:
    out = np.zeros(z.shape, dtype=np.int32)
    z = z.copy()
    alive = np.ones(z.shape, dtype=bool)
    r = grid.membership_radius
    for j in range(1, grid.max_stages + 1):
        z = spec.a_values[j - 1] * (spec.quad_a * z * z + spec.quad_c)
        escaped = alive & (np.abs(z) > r)
        out[escaped] = j
        alive &= ~escaped
        z[~alive] = 0.0  # freeze escaped points; also guards overflow
        if not alive.any():
            break
    return out


def forward_classify(
    spec: PolySeqSpec, grid: EscapeGrid, threads: int = 1
) -> np.ndarray:
    """Escape-stage matrix of shape (ny, nx).

    Entry 0 means the pixel-center orbit stays in the closed membership disk
    through all max_stages stages; entry j >= 1 is the first stage whose
    image leaves it.  The result is independent of the thread count.
    """
    if grid.max_stages > spec.horizon:
        raise HorizonError(
            f"grid wants {grid.max_stages} stages but the sequence has {spec.horizon}"
        )
    threads = int(threads)
    if threads < 1:
        raise ParameterError(f"threads must be positive, got {threads}")
    z = grid.centers()
    if threads == 1 or grid.ny == 1:
        return _classify_block(spec, grid, z)
    chunks = np.array_split(z, min(threads, grid.ny), axis=0)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda block: _classify_block(spec, grid, block), chunks))
    return np.vstack(parts)


DEFAULT_PALETTE: tuple[tuple[int, int, int], ...] = (
    (230, 57, 70),
    (244, 162, 97),
    (233, 196, 106),
    (138, 177, 125),
    (42, 157, 143),
    (38, 70, 83),
    (69, 123, 157),
    (168, 218, 220),
    (131, 107, 161),
    (181, 101, 118),
    (217, 136, 128),
    (102, 155, 188),
    (240, 200, 140),
    (87, 117, 144),
    (67, 170, 139),
    (214, 140, 69),
)


def render(matrix, palette=None) -> bytes:
    """Binary PPM (P6) image of an escape-stage matrix.

    Stage 0 (never escaped) renders black; stage j takes palette color
    (j - 1) mod len(palette).
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.size == 0:
        raise ParameterError("matrix must be a nonempty 2-D array")
    if not np.issubdtype(m.dtype, np.integer):
        raise ParameterError("matrix entries must be integers")
    if int(m.min()) < 0:
        raise ParameterError("matrix entries must be nonnegative")
    pal = DEFAULT_PALETTE if palette is None else tuple(palette)
    if not pal:
        raise ParameterError("palette must be nonempty")
    for color in pal:
        if len(color) != 3 or any(not 0 <= int(ch) <= 255 for ch in color):
            raise ParameterError(f"palette entries must be RGB triples, got {color!r}")
    pal_arr = np.asarray(pal, dtype=np.uint8)
    ny, nx = m.shape
    img = np.zeros((ny, nx, 3), dtype=np.uint8)
    out = m > 0
    if out.any():
        img[out] = pal_arr[(m[out] - 1) % len(pal)]
    header = f"P6\n{nx} {ny}\n255\n".encode("ascii")
    return header + img.tobytes()


@dataclass(frozen=True)
class RandomSeqSpec:
    kind: str  # "one-plus-pareto" | "annular-uniform"
    seed: int
    count: int
    horizon: int
    alpha: float | None = None
    scale: float | None = None
    min_mod: float | None = None
    max_mod: float | None = None

    def __post_init__(self):
        if self.count < 0 or self.horizon < 1:
            raise ParameterError("count must be nonnegative and horizon positive")
        if self.seed < 0:
            raise ParameterError("seed must be a nonnegative integer")
        if self.kind == "one-plus-pareto":
            alpha = 1.0 if self.alpha is None else float(self.alpha)
            scale = 1.0 if self.scale is None else float(self.scale)
            if alpha <= 0.0 or scale <= 0.0:
                raise ParameterError("alpha and scale must be positive")
            if self.min_mod is not None or self.max_mod is not None:
                raise ParameterError("min_mod/max_mod do not apply to one-plus-pareto")
            object.__setattr__(self, "alpha", alpha)
            object.__setattr__(self, "scale", scale)
        elif self.kind == "annular-uniform":
            if self.min_mod is None or self.max_mod is None:
                raise ParameterError("annular-uniform needs min_mod and max_mod")
            if self.alpha is not None or self.scale is not None:
                raise ParameterError("alpha/scale do not apply to annular-uniform")
            if not float(self.min_mod) > 1.0:
                raise ParameterError("min_mod must exceed 1 so every |a_j| > 1")
            if not float(self.max_mod) > float(self.min_mod):
                raise ParameterError("max_mod must exceed min_mod")
            object.__setattr__(self, "min_mod", float(self.min_mod))
            object.__setattr__(self, "max_mod", float(self.max_mod))
        else:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")

    def to_config(self) -> dict:
        cfg: dict = {"kind": self.kind, "seed": self.seed}
        if self.kind == "one-plus-pareto":
            cfg["alpha"] = self.alpha
            cfg["scale"] = self.scale
        else:
            cfg["min_mod"] = self.min_mod
            cfg["max_mod"] = self.max_mod
        return cfg


def _draw_sequence(rand: RandomSeqSpec, index: int) -> tuple[int, np.ndarray]:
    ss = np.random.SeedSequence(rand.seed, spawn_key=(index,))
    gen = np.random.Generator(np.random.PCG64(ss))
    us = gen.random((rand.horizon, 2))
    if rand.kind == "one-plus-pareto":
        u = 1.0 - us[:, 0]  # in (0, 1], keeps the power finite
        mod = 1.0 + rand.scale * u ** (-1.0 / rand.alpha)
    else:
        mod = rand.min_mod + (rand.max_mod - rand.min_mod) * us[:, 0]
    ang = 2.0 * math.pi * us[:, 1]
    sub_seed = int(ss.generate_state(1, np.uint64)[0])
    return sub_seed, mod * np.exp(1j * ang)


@dataclass(frozen=True)
class SequenceRecord:
    index: int
    sub_seed: int
    min_ratio: float
    max_ratio: float
    verdict: str


@dataclass(frozen=True)
class SampleSummary:
    quad_a: complex
    quad_c: complex
    distribution: RandomSeqSpec
    fraction_growing: float
    records: tuple[SequenceRecord, ...]


def sample_sequences(
    quad_a: complex,
    quad_c: complex,
    rand: RandomSeqSpec,
    eps: float = DEFAULT_EPS,
    samples: int = 256,
) -> SampleSummary:
    """Trend verdicts over randomly drawn multiplier sequences.

    Sequence i draws its multipliers from a child generator spawned from the
    master seed with key (i,), so the whole summary is reproducible from the
    distribution spec alone and any sequence can be re-drawn from its
    recorded sub-seed.
    """
    records = []
    growing = 0
    for i in range(rand.count):
        sub_seed, a = _draw_sequence(rand, i)
        spec = make_poly_seq(quad_a, quad_c, values=a.tolist())
        rep = dichotomy_report(spec, eps=eps, samples=samples)
        if rep.trend == VERDICT_GROWING:
            growing += 1
        records.append(
            SequenceRecord(i, sub_seed, rep.min_ratio, rep.max_ratio, rep.trend)
        )
    fraction = growing / rand.count if rand.count else 0.0
    return SampleSummary(complex(quad_a), complex(quad_c), rand, fraction, tuple(records))


def summary_json(summary: SampleSummary) -> str:
    """Canonical JSON rendering of a sampling summary."""
    return canonical_json(
        {
            "count": summary.distribution.count,
            "distribution": summary.distribution.to_config(),
            "fraction_growing": summary.fraction_growing,
            "horizon": summary.distribution.horizon,
            "quad_a": summary.quad_a,
            "quad_c": summary.quad_c,
            "records": [
                {
                    "index": r.index,
                    "max_ratio": r.max_ratio,
                    "min_ratio": r.min_ratio,
                    "sub_seed": r.sub_seed,
                    "verdict": r.verdict,
                }
                for r in summary.records
            ],
        }
    )
