"""Acceptance suite.

One test per shipped criterion, each asserting the stated numbers at the
stated tolerances, so a verbose run gives a single pass/fail line per
criterion.  Three checks are marked strict-expected-fail because the stated
calibration is unattainable (the reasons say why); each is followed by
companion tests demonstrating the same pipeline at a working calibration.
"""

import math
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from nifs_atlas.certify import (
    CertificateEntry,
    ThinnessCertificate,
    build_certificate,
    default_c,
    separation_report,
    verify_certificate,
)
from nifs_atlas.families import cantor_system, gapped_system
from nifs_atlas.geometry import (
    ClosedDisk,
    DiskDomain,
    RoundAnnulus,
    annulus_modulus,
    annulus_separates,
    best_separating_annulus_search,
    hyperbolic_distance,
)
from nifs_atlas.julia import (
    EscapeGrid,
    RandomSeqSpec,
    check_hypotheses,
    dichotomy_report,
    forward_classify,
    inverse_ifs,
    make_poly_seq,
    sample_sequences,
    summary_json,
)
from nifs_atlas.maps import AffineMap, SqrtBranch, apply, image_disk
from nifs_atlas.nifs import invariance_check, pieces
from nifs_atlas.presets import SAMPLER_SEED


def test_criterion_01_interval_piece_tables_exact():
    t0 = time.perf_counter()
    sys = cantor_system(2, "1/(j+2)", 3, "interval")

    depth1 = pieces(sys, 1, 1)
    ends1 = [(p.enclosure.lo, p.enclosure.hi) for p in depth1]
    assert ends1[0] == pytest.approx((0.0, 1 / 3), abs=1e-15)
    assert ends1[1] == pytest.approx((2 / 3, 1.0), abs=1e-15)

    depth2 = pieces(sys, 1, 2)
    got = sorted({e for p in depth2 for e in (p.enclosure.lo, p.enclosure.hi)})
    expected = [0.0, 1 / 12, 1 / 4, 1 / 3, 2 / 3, 3 / 4, 11 / 12, 1.0]
    assert got == pytest.approx(expected, abs=1e-15)

    for j in range(1, 4):
        for k in range(0, 4 - j):
            rep = invariance_check(sys, j, k)
            assert rep.ok and rep.max_discrepancy == 0.0

    assert time.perf_counter() - t0 < 1.0


@pytest.mark.xfail(
    strict=True,
    reason="with a_j = 1/(j+2) and c = 18 the base annulus needs "
    "eta_j < delta_j / c, which first holds at stage 22; a horizon-12 run "
    "therefore yields no verified entries and an inconclusive verdict",
)
def test_criterion_02_shrinking_family_certificate_horizon_12():
    sys = cantor_system(2, "1/(j+2)", 12, "disk")
    subsequence = list(range(1, 13))
    c = default_c(sys, [separation_report(sys, j) for j in subsequence])
    cert = build_certificate(sys, subsequence, c)
    assert cert.verdict == "certified"
    assert sum(1 for e in cert.entries if e.separation_verified) >= 5


def test_criterion_02_companion_shrinking_family_certificate_horizon_30():
    t0 = time.perf_counter()
    sys = cantor_system(2, "1/(j+2)", 30, "disk")
    subsequence = list(range(1, 31))
    reports = {j: separation_report(sys, j) for j in subsequence}
    c = default_c(sys, list(reports.values()))
    cert = build_certificate(sys, subsequence, c)
    assert cert.verdict == "certified"
    verified = [e for e in cert.entries if e.separation_verified]
    assert len(verified) >= 5
    moduli = [e.modulus_lower for e in verified]
    diameters = [e.euclidean_diameter for e in verified]
    assert all(a < b for a, b in zip(moduli, moduli[1:]))
    assert all(a > b for a, b in zip(diameters, diameters[1:]))
    for e in verified:
        rep = reports[e.stage_index]
        target = math.log(rep.delta_lower / (c * rep.eta_upper))
        assert annulus_modulus(e.base_annulus) == pytest.approx(target, abs=1e-10)
    assert time.perf_counter() - t0 < 5.0


def test_criterion_03_constant_family_inconclusive_control():
    t0 = time.perf_counter()
    sys = cantor_system(2, "1/3", 30, "disk")
    subsequence = list(range(1, 31))
    reports = [separation_report(sys, j) for j in subsequence]
    c = default_c(sys, reports)
    cert = build_certificate(sys, subsequence, c)
    assert cert.verdict == "inconclusive"
    base_moduli = [math.log(r.delta_lower / (c * r.eta_upper)) for r in reports]
    assert max(base_moduli) - min(base_moduli) < 1e-9
    assert time.perf_counter() - t0 < 5.0


@pytest.fixture(scope="module")
def gapped_certificate():
    def build(horizon):
        sys = gapped_system("j", horizon)
        subsequence = list(range(1, horizon + 1))
        c = default_c(sys, [separation_report(sys, j) for j in subsequence])
        return build_certificate(sys, subsequence, c)

    return build


def test_criterion_04a_gapped_certificate_eta_identity(gapped_certificate):
    t0 = time.perf_counter()
    cert = gapped_certificate(10)
    assert cert.verdict == "certified"
    sys = cert.system
    for k in range(1, 11):
        eta = separation_report(sys, k).eta_upper
        assert eta == pytest.approx(1.2 / 3.0 ** (k + 1), rel=1e-12)
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.xfail(
    strict=True,
    reason="consecutive certified moduli approach a log 3 step like 3^-k; "
    "the last horizon-10 pair is still 2.0e-5 away from log 3, outside the "
    "1e-6 window, which the step first enters at horizon 13",
)
def test_criterion_04b_consecutive_moduli_step_log3_horizon_10(gapped_certificate):
    cert = gapped_certificate(10)
    moduli = [e.modulus_lower for e in cert.entries if e.separation_verified]
    steps = [b - a for a, b in zip(moduli, moduli[1:])]
    assert abs(steps[-1] - math.log(3.0)) < 1e-6


def test_criterion_04b_companion_moduli_step_converges_to_log3(gapped_certificate):
    t0 = time.perf_counter()
    cert = gapped_certificate(13)
    assert cert.verdict == "certified"
    moduli = [e.modulus_lower for e in cert.entries if e.separation_verified]
    deviations = [
        abs((b - a) - math.log(3.0)) for a, b in zip(moduli, moduli[1:])
    ]
    assert all(x > y for x, y in zip(deviations, deviations[1:]))
    assert deviations[-1] < 1e-6
    assert time.perf_counter() - t0 < 5.0


def test_criterion_05a_quadratic_hypotheses_exact():
    rep = check_hypotheses(4, 2)
    assert rep.mod_c == 2.0 and rep.mod_c > 1.0
    assert rep.mod_a_minus_mod_c == 2.0 and rep.mod_a_minus_mod_c > 1.0
    assert rep.passed


@pytest.fixture(scope="module")
def constant_two_spec():
    return make_poly_seq(4, 2, rule="2", horizon=30)


def test_criterion_05b_constant_multipliers_bounded(constant_two_spec):
    rep = dichotomy_report(constant_two_spec)
    assert rep.trend == "BOUNDED"
    for r in rep.reports:
        assert r.delta_lower >= 0.9 * rep.delta_floor
    assert rep.max_ratio < 2.0 * rep.min_ratio


def test_criterion_05c_growing_multipliers(constant_two_spec):
    rep = dichotomy_report(make_poly_seq(4, 2, rule="2^j", horizon=20))
    assert rep.trend == "GROWING"
    assert rep.reports[-1].ratio / rep.reports[0].ratio > 1e3


def test_criterion_05d_forward_inverse_equivalence_depth_12(constant_two_spec):
    t0 = time.perf_counter()
    spec = constant_two_spec
    sys = inverse_ifs(spec)
    layer = pieces(sys, 1, 12, piece_cap=5000)
    assert len(layer) == 4096
    for piece in layer:
        z = piece.enclosure.center
        e = 1e-9
        grid = EscapeGrid(z.real - e, z.real + e, z.imag - e, z.imag + e, 1, 1, 12)
        assert forward_classify(spec, grid)[0, 0] == 0

    grid = EscapeGrid(-1.1, 1.1, -1.1, 1.1, 256, 256, 12)
    matrix = forward_classify(spec, grid, threads=2)
    centers = grid.centers()
    diagonal = abs(centers[1, 1] - centers[0, 0])
    in_pixels = np.argwhere(matrix == 0)
    violations = 0
    for iy, ix in in_pixels:
        z = centers[iy, ix]
        gap = min(
            abs(z - p.enclosure.center) - p.enclosure.radius for p in layer
        )
        if gap > diagonal:
            violations += 1
    # >= 99% of IN pixels within one pixel diagonal of a piece enclosure
    assert violations <= 0.01 * len(in_pixels)
    assert time.perf_counter() - t0 < 60.0


def test_criterion_05d_companion_low_depth_pixels_nonvacuous(constant_two_spec):
    # at depth 12 the pieces are far smaller than a pixel and no pixel
    # center survives 12 stages, so the coverage clause above is vacuous;
    # at depth 2 the same equivalence is exercised by actual pixels
    spec = constant_two_spec
    sys = inverse_ifs(spec)
    layer = pieces(sys, 1, 2)
    grid = EscapeGrid(-1.1, 1.1, -1.1, 1.1, 256, 256, 2)
    matrix = forward_classify(spec, grid)
    centers = grid.centers()
    diagonal = abs(centers[1, 1] - centers[0, 0])
    in_pixels = np.argwhere(matrix == 0)
    assert len(in_pixels) > 0
    for iy, ix in in_pixels:
        z = centers[iy, ix]
        gap = min(abs(z - p.enclosure.center) - p.enclosure.radius for p in layer)
        assert gap <= diagonal


def test_criterion_06_sampler_fractions_and_determinism():
    t0 = time.perf_counter()
    pareto = RandomSeqSpec(
        "one-plus-pareto", SAMPLER_SEED, 100, 50, alpha=1.0, scale=1.0
    )
    first = sample_sequences(4, 2, pareto)
    assert first.fraction_growing == 1.0
    rerun = sample_sequences(4, 2, pareto)
    assert summary_json(rerun) == summary_json(first)

    control = RandomSeqSpec(
        "annular-uniform", SAMPLER_SEED, 100, 50, min_mod=1.5, max_mod=2.5
    )
    bounded = sample_sequences(4, 2, control)
    assert bounded.fraction_growing == 0.0
    assert time.perf_counter() - t0 < 120.0


@pytest.fixture(scope="module")
def dyadic_search():
    points = [0.0] + [2.0**-n for n in range(21)]
    radii = np.geomspace(2.0**-20, 1.0, 1000)
    return points, radii


@pytest.mark.xfail(
    strict=True,
    reason="an off-center annulus can swallow the whole dyadic tail "
    "{2^-n : n > k} into its hole and separate it from 2^-k, reaching "
    "modulus near log 3; only annuli centered at the hole point are capped "
    "by the consecutive-gap ratio log 2",
)
def test_criterion_07_annulus_search_capped_modulus(dyadic_search):
    points, radii = dyadic_search
    centers = np.linspace(-0.25, 0.25, 1000)
    best = best_separating_annulus_search(points, 0.0, centers, radii)
    assert best is not None
    assert annulus_modulus(best) <= math.log(2.0) + 0.05


def test_criterion_07_companion_zero_centered_search_capped(dyadic_search):
    t0 = time.perf_counter()
    points, radii = dyadic_search
    best = best_separating_annulus_search(points, 0.0, [0.0], radii)
    assert best is not None
    assert annulus_modulus(best) <= math.log(2.0) + 0.05
    assert time.perf_counter() - t0 < 30.0


def test_criterion_07_companion_off_center_search_in_log3_band(dyadic_search):
    t0 = time.perf_counter()
    points, radii = dyadic_search
    centers = np.linspace(-0.25, 0.25, 1000)
    best = best_separating_annulus_search(points, 0.0, centers, radii)
    mod = annulus_modulus(best)
    assert math.log(2.8) <= mod <= math.log(3.0) + 1e-9
    assert time.perf_counter() - t0 < 30.0


def test_criterion_08a_image_disk_soundness():
    rng = np.random.default_rng(20260816)
    violations = 0
    for trial in range(1000):
        if trial % 2 == 0:
            a = complex(*rng.uniform(-2, 2, 2))
            while abs(a) < 1e-3:
                a = complex(*rng.uniform(-2, 2, 2))
            m = AffineMap(a, complex(*rng.uniform(-2, 2, 2)))
            disk = ClosedDisk(complex(*rng.uniform(-2, 2, 2)), rng.uniform(0.05, 1.5))
        else:
            m, disk = _random_admissible_sqrt(rng)
        t, phi = rng.uniform(0, 1), rng.uniform(0, 2 * math.pi)
        z = disk.center + disk.radius * math.sqrt(t) * np.exp(1j * phi)
        enclosure = image_disk(m, disk, 64)
        image = apply(m, complex(z))
        if not enclosure.inflate(1e-12).contains_point(image):
            violations += 1
    assert violations == 0


def _random_admissible_sqrt(rng):
    # strong admissibility: the argument disk stays right of the branch cut,
    # so the principal value agrees with the anchored branch everywhere
    while True:
        qa = complex(*rng.uniform(-2, 2, 2))
        if abs(qa) < 0.2:
            continue
        qc = complex(*rng.uniform(-2, 2, 2))
        pre = complex(*rng.uniform(-1.5, 1.5, 2))
        disk = ClosedDisk(complex(*rng.uniform(-2, 2, 2)), rng.uniform(0.05, 1.0))
        w0 = (disk.center * pre - qc) / qa
        rho = disk.radius * abs(pre) / abs(qa)
        if w0.real > rho + 1e-9:
            return SqrtBranch(qa, qc, pre, 1 if rng.random() < 0.5 else -1), disk


def test_criterion_08b_annulus_separation_shrink_monotone():
    rng = np.random.default_rng(20260816)
    violations = 0
    for _ in range(300):
        center = complex(*rng.uniform(-1, 1, 2))
        inner = rng.uniform(0.1, 0.5)
        outer = inner * rng.uniform(1.5, 4.0)
        annulus = RoundAnnulus(center, inner, outer)
        enclosures = []
        for _ in range(rng.integers(1, 4)):
            r = rng.uniform(0.01, 0.3) * inner
            d = rng.uniform(0, inner - r)
            enclosures.append(ClosedDisk(center + d * np.exp(1j * rng.uniform(0, 2 * math.pi)), r))
        for _ in range(rng.integers(1, 4)):
            r = rng.uniform(0.01, 0.5) * outer
            d = outer + r + rng.uniform(0.01, 2.0)
            enclosures.append(ClosedDisk(center + d * np.exp(1j * rng.uniform(0, 2 * math.pi)), r))
        assert annulus_separates(annulus, enclosures)
        shrunk = [
            ClosedDisk(e.center, e.radius * rng.uniform(0.1, 0.99)) for e in enclosures
        ]
        if not annulus_separates(annulus, shrunk):
            violations += 1
    assert violations == 0


@pytest.fixture(scope="module")
def reference_certificate():
    sys = cantor_system(2, "1/(j+2)", 30, "disk")
    subsequence = list(range(1, 31))
    c = default_c(sys, [separation_report(sys, j) for j in subsequence])
    return build_certificate(sys, subsequence, c)


def _with_entry(cert, idx, **changes):
    entries = list(cert.entries)
    entries[idx] = replace(entries[idx], **changes)
    return replace(cert, entries=tuple(entries))


def _shrinking_diameter_fault():
    # a hand-built certificate whose annuli genuinely separate, with
    # verified entries whose diameters fail to shrink
    sys = cantor_system(2, 0.01, 3, "disk")

    def entry(n, center, inner, outer, modulus, base_outer):
        return CertificateEntry(
            subsequence_index=n,
            stage_index=n,
            surrounded_label=1,
            base_annulus=RoundAnnulus(0.005, 0.01, base_outer),
            pushed_annulus=RoundAnnulus(center, inner, outer),
            modulus_lower=modulus,
            euclidean_diameter=2 * outer,
            separation_verified=True,
        )

    return ThinnessCertificate(
        word_rule="smallest-label",
        c_parameter=12.0,
        subsequence=(1, 2, 3),
        entries=(
            entry(1, 0.005, 0.05, 0.2, 1.0, 0.2),
            entry(2, 0.00005, 0.0005, 0.002, 1.2, 0.2),
            entry(3, 0.005, 0.05, 0.5, 1.5, 0.1),
        ),
        diagnostics=(),
        verdict="certified",
        system=sys,
    )


def test_criterion_08c_verifier_rejects_injected_faults(reference_certificate):
    cert = reference_certificate
    assert verify_certificate(cert).ok
    wild = RoundAnnulus(0.5, 0.001, 10.0)
    faulted = [
        _with_entry(cert, 1, stage_index=31),  # stage outside the horizon
        _with_entry(cert, 0, surrounded_label=99),  # unknown map label
        _with_entry(  # base annulus no longer surrounds the target pieces
            cert, 0, base_annulus=replace(cert.entries[0].base_annulus,
                                          inner=cert.entries[0].base_annulus.inner / 50,
                                          outer=cert.entries[0].base_annulus.outer / 50),
        ),
        _with_entry(  # claimed modulus above the base annulus modulus
            cert, 0, modulus_lower=cert.entries[0].modulus_lower + 0.1,
        ),
        _with_entry(  # pushed annulus wider than the certified pushforward
            cert, 0,
            pushed_annulus=replace(cert.entries[0].pushed_annulus,
                                   inner=cert.entries[0].pushed_annulus.inner / 4,
                                   outer=cert.entries[0].pushed_annulus.outer * 4),
            euclidean_diameter=cert.entries[0].euclidean_diameter * 4,
        ),
        _with_entry(  # recorded diameter disagrees with the annulus
            cert, 0, euclidean_diameter=cert.entries[0].euclidean_diameter + 1.0,
        ),
        _with_entry(  # annulus overlapping the pieces it claims to separate
            cert, 0, pushed_annulus=wild, euclidean_diameter=2 * wild.outer,
            modulus_lower=0.1,
        ),
        _with_entry(  # non-monotone moduli
            cert, 1, modulus_lower=cert.entries[0].modulus_lower,
        ),
        _shrinking_diameter_fault(),  # non-shrinking diameters
        replace(cert, verdict="inconclusive"),  # verdict contradicts entries
    ]
    assert len(faulted) == 10
    for k, bad in enumerate(faulted):
        result = verify_certificate(bad)
        assert not result.ok, f"fault {k} was not rejected"


def test_criterion_09a_hyperbolic_radial_closed_form():
    domain = DiskDomain(ClosedDisk(0.0, 1.0))

    def simpson(r, n=4000):
        xs = np.linspace(0.0, r, 2 * n + 1)
        f = 2.0 / (1.0 - xs * xs)
        h = r / (2 * n)
        return h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum())

    for r in np.linspace(0.009, 0.95, 100):
        closed = hyperbolic_distance(domain, 0.0, float(r))
        assert closed == pytest.approx(simpson(float(r)), abs=1e-10)


def test_criterion_09b_affine_contraction_sampled():
    domain = DiskDomain(ClosedDisk(0.5, 0.7))
    rng = np.random.default_rng(20260816)
    n = 10**4
    radii = 0.6 * np.sqrt(rng.random(2 * n))
    angles = 2 * math.pi * rng.random(2 * n)
    samples = 0.5 + radii * np.exp(1j * angles)
    worst = 0.0
    for z, w in zip(samples[:n], samples[n:]):
        if z == w:
            continue
        ratio = hyperbolic_distance(domain, z / 3, w / 3) / hyperbolic_distance(
            domain, z, w
        )
        worst = max(worst, ratio)
    assert worst < 0.999
