"""Separating-annulus certificates for stagewise systems.

A stage's separation report collects three certified quantities over the
stage images phi_i(X): the worst boundary clearance b (distance from any
image to the seed boundary), the smallest pairwise image distance delta,
and the largest image diameter eta.  Strong separation at the stage means
delta > 0 (with a 1e-12 positivity tolerance).

A thinness certificate picks a subsequence of stages j_1 < j_2 < ... and a
constant c with delta <= c*b at every picked stage.  Entry n surrounds the
smallest-label image of stage j_n with the base annulus

    Ann(z_n; eta_{j_n}, delta_{j_n}/c),   z_n = that image's enclosure center,

whose hole swallows the image (diameter <= eta) while every other stage
image stays at distance >= delta > delta/c from z_n.  The base annulus is
then pushed forward through the word prefix (smallest labels as filler) to
an annulus around the corresponding depth-j_n piece, and separation of the
pushed annulus from all depth-j_n pieces is checked against certified
enclosures.  Certified verdict: at least three separation-verified entries
with strictly increasing modulus lower bounds and strictly decreasing
euclidean diameters.

Stages whose base annulus would be degenerate (eta >= delta/c) are dropped
with a diagnostic that still records the signed candidate modulus
log(delta/(c*eta)), so flat, non-improving families remain inspectable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateAnnulusError,
    HorizonError,
    HypothesisError,
    NoValidCError,
    ParameterError,
    SizeCapError,
)
from .geometry import (
    ClosedDisk,
    Enclosure,
    RealInterval,
    RoundAnnulus,
    annulus_modulus,
    annulus_separates,
    boundary_distance_lower,
    extremal_distances,
    piece_side,
    set_distance_lower,
)
from .maps import (
    AnchoredEvaluator,
    MapLike,
    as_expr,
    compose,
    derivative_sup_bound,
    image_enclosure,
)
from .nifs import (
    PIECE_CAP_DEFAULT,
    SystemSpec,
    collapsed_word_map,
    pieces,
)
from .serialize import canonical_json

STRONG_SEPARATION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SeparationReport:
    stage_index: int
    b_lower: float
    delta_lower: float | None
    eta_upper: float
    ratio: float | None
    strong_separation: bool
    degenerate: bool  # single-map stage: delta and ratio undefined


def separation_report(sys: SystemSpec, j: int, samples: int = 256) -> SeparationReport:
    """Certified per-stage separation quantities for stage j."""
    st = sys.stage(j)
    encs: list[Enclosure] = [
        image_enclosure(m, sys.seed, samples) for m in st.maps
    ]
    b = min(boundary_distance_lower(e, sys.seed) for e in encs)
    eta = max(e.diameter for e in encs)
    if st.size == 1:
        return SeparationReport(j, b, None, eta, None, False, True)
    delta = min(
        set_distance_lower(encs[p], encs[q])
        for p in range(len(encs))
        for q in range(p + 1, len(encs))
    )
    ratio = delta / eta if eta > 0.0 else math.inf
    return SeparationReport(
        j, b, delta, eta, ratio, delta > STRONG_SEPARATION_TOLERANCE, False
    )


def default_c(sys: SystemSpec, reports) -> float:
    """The default certificate constant diam(X) / min b over the reports."""
    reports = list(reports)
    if not reports:
        raise ParameterError("need at least one separation report")
    b_min = min(r.b_lower for r in reports)
    if b_min <= 0.0:
        raise NoValidCError(
            f"minimum boundary clearance {b_min} admits no valid constant c"
        )
    return sys.seed_diameter / b_min


def pushforward_annulus(
    m: MapLike,
    annulus: RoundAnnulus,
    hole_witness: complex,
    samples: int = 256,
) -> RoundAnnulus:
    """Round annulus certified to lie inside the image of ``annulus``.

    Affine maps push exactly, preserving the modulus.  For expressions with
    square-root factors the result is centered at the image of the hole
    witness; its inner radius is the sampled maximum over the inner-circle
    image plus a Lipschitz fill, its outer radius the sampled minimum over
    the outer-circle image minus one.  The map must be admissible on the
    closed outer disk of ``annulus``.
    """
    samples = int(samples)
    if samples < 16:
        raise ParameterError(f"samples must be at least 16, got {samples}")
    expr = as_expr(m)
    hole_witness = complex(hole_witness)
    if abs(hole_witness - annulus.center) > annulus.inner:
        raise ParameterError(
            f"hole witness {hole_witness!r} is not inside the hole of {annulus}"
        )
    if expr.is_affine:
        f = expr.affine_factor
        return RoundAnnulus(
            f.a * annulus.center + f.b,
            abs(f.a) * annulus.inner,
            abs(f.a) * annulus.outer,
        )
    outer_disk = ClosedDisk(annulus.center, annulus.outer)
    ev = AnchoredEvaluator(expr, outer_disk)
    base = ev.value(hole_witness)
    angles = 2.0 * np.pi * np.arange(samples) / samples
    ring = np.exp(1j * angles)
    inner_vals = ev.value(annulus.center + annulus.inner * ring)
    outer_vals = ev.value(annulus.center + annulus.outer * ring)
    lip_inner = derivative_sup_bound(expr, ClosedDisk(annulus.center, annulus.inner))
    lip_outer = ev.lipschitz
    rho_in = float(np.max(np.abs(inner_vals - base))) + lip_inner * (
        math.pi * annulus.inner / samples
    )
    rho_out = float(np.min(np.abs(outer_vals - base))) - lip_outer * (
        math.pi * annulus.outer / samples
    )
    if rho_out <= rho_in:
        raise DegenerateAnnulusError(
            f"pushforward degenerated: inner bound {rho_in} meets outer bound {rho_out}"
        )
    return RoundAnnulus(base, rho_in, rho_out)


def _annulus_separates_pieces(
    sys: SystemSpec,
    annulus: RoundAnnulus,
    depth: int,
    piece_cap: int = PIECE_CAP_DEFAULT,
    samples: int = 256,
) -> bool:
    """Does ``annulus`` separate the depth-``depth`` pieces from stage 1?

    Affine systems are checked hierarchically: a node whose collapsed-word
    enclosure lies entirely in the closed hole or the closed outside settles
    its whole subtree, so the walk visits polynomially many nodes even when
    the leaf count is astronomically large.  Systems with square-root
    factors fall back to flat enumeration (subject to the piece cap), since
    their enclosures are not exactly nested.
    """
    affine_only = all(
        all(f_expr.is_affine for f_expr in st.maps)
        for st in sys.stages[:depth]
    )
    if not affine_only:
        flat = pieces(sys, 1, depth, piece_cap, samples)
        return annulus_separates(annulus, [p.enclosure for p in flat])

    found = {"hole": False, "outside": False}

    def walk(stage_idx: int, expr) -> bool:
        enc = sys.seed if expr is None else image_enclosure(expr, sys.seed, samples)
        side = piece_side(annulus, enc)
        if side == -1:
            found["hole"] = True
            return True
        if side == 1:
            found["outside"] = True
            return True
        if stage_idx > depth:
            return False  # leaf enclosure meets the open annulus
        st = sys.stage(stage_idx)
        for m in st.maps:
            child = m if expr is None else compose(expr, m)
            if not walk(stage_idx + 1, child):
                return False
        return True

    if not walk(1, None):
        return False
    return found["hole"] and found["outside"]


@dataclass(frozen=True)
class CertificateEntry:
    subsequence_index: int  # n, 1-based position in the certificate
    stage_index: int  # j_n
    surrounded_label: int  # m_n
    base_annulus: RoundAnnulus
    pushed_annulus: RoundAnnulus
    modulus_lower: float
    euclidean_diameter: float
    separation_verified: bool


@dataclass(frozen=True)
class StageDiagnostic:
    subsequence_index: int
    stage_index: int
    b_lower: float
    delta_lower: float
    eta_upper: float
    ratio: float
    base_modulus: float  # signed log(delta/(c*eta)), negative when degenerate
    kept: bool
    reason: str


@dataclass(frozen=True)
class ThinnessCertificate:
    word_rule: str
    c_parameter: float
    subsequence: tuple[int, ...]
    entries: tuple[CertificateEntry, ...]
    diagnostics: tuple[StageDiagnostic, ...]
    verdict: str  # "certified" | "inconclusive"
    system: SystemSpec


def _derive_verdict(entries) -> str:
    verified = [e for e in entries if e.separation_verified]
    if len(verified) < 3:
        return "inconclusive"
    moduli = [e.modulus_lower for e in verified]
    diams = [e.euclidean_diameter for e in verified]
    increasing = all(m2 > m1 for m1, m2 in zip(moduli, moduli[1:]))
    decreasing = all(d2 < d1 for d1, d2 in zip(diams, diams[1:]))
    return "certified" if increasing and decreasing else "inconclusive"


def build_certificate(
    sys: SystemSpec,
    subsequence,
    c: float,
    word_rule: str = "smallest-label",
    base_annuli: dict[int, RoundAnnulus] | None = None,
    samples: int = 256,
    piece_cap: int = PIECE_CAP_DEFAULT,
) -> ThinnessCertificate:
    """Build a thinness certificate along a stage subsequence.

    Requires delta <= c*b at every picked stage (the error names the first
    violating subsequence position).  ``base_annuli`` optionally overrides
    the base annulus at given subsequence positions n; overrides must still
    surround the designated stage image, which the separation recheck and
    verify_certificate enforce.
    """
    if word_rule != "smallest-label":
        raise ParameterError(f"unknown word rule {word_rule!r}")
    subsequence = tuple(int(j) for j in subsequence)
    if not subsequence:
        raise ParameterError("subsequence must be nonempty")
    if any(b <= a for a, b in zip(subsequence, subsequence[1:])):
        raise ParameterError(f"subsequence must be strictly increasing, got {subsequence}")
    if subsequence[0] < 1:
        raise ParameterError(f"subsequence indices start at 1, got {subsequence}")
    if subsequence[-1] > sys.horizon:
        raise HorizonError(
            f"subsequence must lie in 1..{sys.horizon}, got {subsequence}"
        )
    c = float(c)
    if not (math.isfinite(c) and c > 0.0):
        raise ParameterError(f"constant c must be positive and finite, got {c}")

    reports = {}
    for n, j in enumerate(subsequence, start=1):
        r = separation_report(sys, j, samples)
        if r.degenerate:
            raise ParameterError(
                f"subsequence position {n}: stage {j} has a single map, "
                "so pairwise separation is undefined"
            )
        if r.delta_lower > c * r.b_lower:
            raise HypothesisError(
                f"subsequence position {n}: delta {r.delta_lower} exceeds "
                f"c*b = {c * r.b_lower} at stage {j}"
            )
        reports[n] = r

    entries: list[CertificateEntry] = []
    diagnostics: list[StageDiagnostic] = []
    for n, j in enumerate(subsequence, start=1):
        r = reports[n]
        delta, eta = r.delta_lower, r.eta_upper
        base_modulus = math.log(delta / (c * eta)) if delta > 0.0 and eta > 0.0 else -math.inf
        label = min(sys.stage(j).labels)
        enc = image_enclosure(sys.stage(j).map_for(label), sys.seed, samples)
        z_n = enc.center if isinstance(enc, ClosedDisk) else complex(enc.midpoint, 0.0)
        override = base_annuli.get(n) if base_annuli else None
        if override is not None:
            base = override
        else:
            if not eta < delta / c:
                diagnostics.append(
                    StageDiagnostic(
                        n, j, r.b_lower, delta, eta, r.ratio, base_modulus, False,
                        "base annulus degenerate: eta >= delta/c",
                    )
                )
                continue
            base = RoundAnnulus(z_n, eta, delta / c)
        if j == 1:
            pushed = base
        else:
            prefix_labels = tuple(min(sys.stage(i).labels) for i in range(1, j))
            prefix = collapsed_word_map(sys, 1, prefix_labels)
            try:
                pushed = pushforward_annulus(prefix, base, base.center, samples)
            except DegenerateAnnulusError:
                diagnostics.append(
                    StageDiagnostic(
                        n, j, r.b_lower, delta, eta, r.ratio, base_modulus, False,
                        "pushforward degenerated",
                    )
                )
                continue
        verified = _annulus_separates_pieces(sys, pushed, j, piece_cap, samples)
        modulus = min(annulus_modulus(pushed), annulus_modulus(base))
        entries.append(
            CertificateEntry(
                n, j, label, base, pushed, modulus, 2.0 * pushed.outer, verified
            )
        )
        diagnostics.append(
            StageDiagnostic(
                n, j, r.b_lower, delta, eta, r.ratio, base_modulus, True,
                "kept" if verified else "kept, separation unverified",
            )
        )
    return ThinnessCertificate(
        word_rule,
        c,
        subsequence,
        tuple(entries),
        tuple(diagnostics),
        _derive_verdict(entries),
        sys,
    )


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    reason: str
    failed_entry: int | None = None


def verify_certificate(
    cert: ThinnessCertificate,
    samples: int = 256,
    piece_cap: int = PIECE_CAP_DEFAULT,
) -> VerificationResult:
    """Re-check every certificate condition from scratch.

    Rebuilds stage images and piece enclosures, re-tests separation of each
    pushed annulus, re-checks each entry's internal consistency, and
    re-derives the verdict.  Returns the first violated condition.
    """
    sys = cert.system
    tol = 1e-12

    def fail(reason: str, n: int | None = None) -> VerificationResult:
        return VerificationResult(False, reason, n)

    for e in cert.entries:
        n = e.subsequence_index
        if not 1 <= e.stage_index <= sys.horizon:
            return fail(f"entry {n}: stage {e.stage_index} outside horizon", n)
        st = sys.stage(e.stage_index)
        if e.surrounded_label not in st.labels:
            return fail(f"entry {n}: label {e.surrounded_label} not in stage", n)
        enc = image_enclosure(st.map_for(e.surrounded_label), sys.seed, samples)
        dmin, dmax = extremal_distances(enc, e.base_annulus.center)
        if dmax > e.base_annulus.inner + tol:
            return fail(
                f"entry {n}: base annulus hole does not surround the stage image "
                f"(reach {dmax} > {e.base_annulus.inner})",
                n,
            )
        if e.modulus_lower > annulus_modulus(e.base_annulus) + tol:
            return fail(f"entry {n}: modulus lower bound exceeds the base annulus", n)
        if e.modulus_lower > annulus_modulus(e.pushed_annulus) + tol:
            return fail(f"entry {n}: modulus lower bound exceeds the pushed annulus", n)
        if abs(e.euclidean_diameter - 2.0 * e.pushed_annulus.outer) > tol * max(
            1.0, e.euclidean_diameter
        ):
            return fail(f"entry {n}: euclidean diameter does not match the pushed annulus", n)
        separated = _annulus_separates_pieces(
            sys, e.pushed_annulus, e.stage_index, piece_cap, samples
        )
        if e.separation_verified and not separated:
            return fail(f"entry {n}: separation fails on recheck", n)

    verified = [e for e in cert.entries if e.separation_verified]
    if len(verified) < 3:
        if cert.verdict == "certified":
            return fail("insufficient entries for a certified verdict")
    if cert.verdict == "certified":
        # monotonicity is what the certified verdict asserts; an inconclusive
        # certificate may honestly record non-improving entries
        moduli = [e.modulus_lower for e in verified]
        diams = [e.euclidean_diameter for e in verified]
        for i, (m1, m2) in enumerate(zip(moduli, moduli[1:])):
            if not m2 > m1:
                return fail(
                    f"entry {verified[i + 1].subsequence_index}: modulus not strictly increasing",
                    verified[i + 1].subsequence_index,
                )
        for i, (d1, d2) in enumerate(zip(diams, diams[1:])):
            if not d2 < d1:
                return fail(
                    f"entry {verified[i + 1].subsequence_index}: diameter not strictly decreasing",
                    verified[i + 1].subsequence_index,
                )
    if cert.verdict != _derive_verdict(cert.entries):
        return fail(f"verdict {cert.verdict!r} does not match the entries")
    return VerificationResult(True, "ok")


def _annulus_json(a: RoundAnnulus) -> dict:
    return {"center": a.center, "r": a.inner, "R": a.outer}


def certificate_json(cert: ThinnessCertificate) -> str:
    """Canonical JSON rendering of a certificate."""
    return canonical_json(
        {
            "c": cert.c_parameter,
            "entries": [
                {
                    "base": _annulus_json(e.base_annulus),
                    "diameter": e.euclidean_diameter,
                    "j_n": e.stage_index,
                    "m_n": e.surrounded_label,
                    "modulusLower": e.modulus_lower,
                    "n": e.subsequence_index,
                    "pushed": _annulus_json(e.pushed_annulus),
                    "separationVerified": e.separation_verified,
                }
                for e in cert.entries
            ],
            "system-descriptor": cert.system.descriptor,
            "verdict": cert.verdict,
            "word-rule": cert.word_rule,
        }
    )
