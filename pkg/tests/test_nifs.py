"""System assembly, piece enumeration, projection, invariance, stage merging."""

from fractions import Fraction

import numpy as np
import pytest

from nifs_atlas.errors import (
    ContainmentError,
    HorizonError,
    ParameterError,
    SizeCapError,
)
from nifs_atlas.families import (
    DEFAULT_DOMAIN,
    DEFAULT_ENVELOPE,
    GAP_LEFT,
    GAP_MIDDLE,
    GAP_RIGHT,
    cantor_system,
    gapped_system,
)
from nifs_atlas.geometry import ClosedDisk, RealInterval
from nifs_atlas.maps import AffineMap, compose, compose_chain
from nifs_atlas.nifs import (
    Stage,
    Word,
    assemble_system,
    attractor_sample,
    collapsed_word_map,
    combine_stages,
    invariance_check,
    pieces,
    project,
    shifted,
    stage_of,
)

RNG = np.random.default_rng(11)


def rational_cantor_piece(scales, word):
    """Exact interval image of [0,1] under the cantor word, via Fractions."""
    lo, hi = Fraction(0), Fraction(1)
    for a, label in reversed(list(zip(scales, word))):
        b = (label - 1) * (1 - a)  # two maps per stage
        lo, hi = a * lo + b, a * hi + b
    return lo, hi


def interval_sys(horizon=3):
    return cantor_system(2, "1/(j+2)", horizon, seed_mode="interval")


# -- assembly and stages --


def test_stage_validation():
    with pytest.raises(ParameterError):
        stage_of([])
    with pytest.raises(ParameterError):
        Stage((GAP_LEFT, GAP_RIGHT), (1, 1))
    with pytest.raises(ParameterError):
        Stage((GAP_LEFT, GAP_RIGHT), (1,))
    st = stage_of([GAP_LEFT, GAP_RIGHT])
    assert st.labels == (1, 2) and st.size == 2
    assert st.map_for(2).affine_factor == GAP_RIGHT
    with pytest.raises(ParameterError):
        st.map_for(3)


def test_assemble_rejections():
    good_stage = stage_of([AffineMap(1 / 3, 0.0), AffineMap(1 / 3, 2 / 3)])
    with pytest.raises(ParameterError):
        assemble_system(DEFAULT_DOMAIN, DEFAULT_ENVELOPE, [])
    with pytest.raises(ParameterError):
        # interval seed requires an explicit envelope disk
        assemble_system(DEFAULT_DOMAIN, RealInterval(0.0, 1.0), [good_stage])
    with pytest.raises(ContainmentError):
        # seed pokes out of the domain
        assemble_system(DEFAULT_DOMAIN, ClosedDisk(0.5, 0.7), [good_stage])
    with pytest.raises(ContainmentError):
        # envelope does not contain the seed
        assemble_system(
            DEFAULT_DOMAIN,
            RealInterval(0.0, 1.0),
            [good_stage],
            envelope=ClosedDisk(0.0, 0.1),
        )
    with pytest.raises(ContainmentError):
        # map escapes the envelope
        assemble_system(
            DEFAULT_DOMAIN, DEFAULT_ENVELOPE, [stage_of([AffineMap(1.0, 5.0)])]
        )


def test_horizon_queries():
    sys = interval_sys(3)
    assert sys.horizon == 3 and sys.interval_mode
    assert sys.seed_diameter == 1.0
    with pytest.raises(HorizonError):
        sys.stage(4)
    with pytest.raises(HorizonError):
        sys.stage(0)


def test_shifted_drops_leading_stages():
    sys = interval_sys(4)
    sh = shifted(sys, 1)
    assert sh.horizon == 3
    assert sh.stage(1) == sys.stage(2)
    assert sh.stage(3) == sys.stage(4)
    assert sh.descriptor.startswith("shift(1;")
    assert shifted(sys, 0) is sys
    with pytest.raises(HorizonError):
        shifted(sys, 4)


def test_collapsed_word_map_is_right_fold():
    sys = interval_sys(4)
    whole = collapsed_word_map(sys, 1, (1, 2, 1))
    rest = collapsed_word_map(sys, 2, (2, 1))
    assert compose(sys.stage(1).map_for(1), rest).affine_factor == whole.affine_factor
    with pytest.raises(ParameterError):
        collapsed_word_map(sys, 1, ())
    with pytest.raises(HorizonError):
        collapsed_word_map(sys, 3, (1, 1, 1))


# -- pieces --


def test_pieces_depth1_frozen():
    got = pieces(interval_sys(), 1, 1)
    assert [p.word.labels for p in got] == [(1,), (2,)]
    (a, b) = got
    assert a.enclosure.lo == 0.0 and a.enclosure.hi == pytest.approx(1 / 3, abs=1e-16)
    assert b.enclosure.lo == pytest.approx(2 / 3, abs=1e-15)
    assert b.enclosure.hi == pytest.approx(1.0, abs=1e-15)


def test_pieces_depth2_frozen_quarters():
    got = pieces(interval_sys(), 1, 2)
    expected = [(0, Fraction(1, 12)), (Fraction(1, 4), Fraction(1, 3)),
                (Fraction(2, 3), Fraction(3, 4)), (Fraction(11, 12), Fraction(1))]
    assert len(got) == 4
    for piece, (lo, hi) in zip(got, expected):
        assert piece.enclosure.lo == pytest.approx(float(lo), abs=1e-15)
        assert piece.enclosure.hi == pytest.approx(float(hi), abs=1e-15)
        assert piece.diam_upper == pytest.approx(1 / 12, abs=1e-15)


def test_pieces_match_rational_oracle_to_depth4():
    sys = interval_sys(4)
    scales = [Fraction(1, j + 2) for j in range(1, 5)]
    for depth in range(1, 5):
        got = pieces(sys, 1, depth)
        assert len(got) == 2**depth
        for piece in got:
            lo, hi = rational_cantor_piece(scales[:depth], piece.word.labels)
            assert piece.enclosure.lo == pytest.approx(float(lo), abs=1e-14)
            assert piece.enclosure.hi == pytest.approx(float(hi), abs=1e-14)


def test_pieces_depth0_is_seed():
    sys = interval_sys()
    for start in (1, 2, 3):
        got = pieces(sys, start, 0)
        assert len(got) == 1
        assert got[0].enclosure == sys.seed
        assert got[0].word == Word(start, ())
        assert got[0].diam_upper == 1.0


def test_pieces_lexicographic_order():
    sys = cantor_system(3, 0.2, 2, seed_mode="interval")
    got = pieces(sys, 1, 2)
    words = [p.word.labels for p in got]
    assert words == sorted(words)
    assert len(words) == 9 and words[0] == (1, 1) and words[-1] == (3, 3)


def test_pieces_cap_is_error_never_truncation():
    sys = cantor_system(3, 0.2, 4, seed_mode="interval")
    with pytest.raises(SizeCapError) as exc:
        pieces(sys, 1, 4, piece_cap=80)
    assert "81" in str(exc.value) and "cap" in str(exc.value)
    assert len(pieces(sys, 1, 4, piece_cap=81)) == 81
    with pytest.raises(HorizonError):
        pieces(sys, 1, 5)
    with pytest.raises(HorizonError):
        pieces(sys, 4, 2)
    with pytest.raises(ParameterError):
        pieces(sys, 0, 1)
    with pytest.raises(ParameterError):
        pieces(sys, 1, -1)


def test_monotone_refinement_exact_for_affine_intervals():
    sys = interval_sys(6)
    parents = {(): sys.seed}
    for depth in range(1, 7):
        level = {}
        for piece in pieces(sys, 1, depth):
            parent = parents[piece.word.labels[:-1]]
            child = piece.enclosure
            assert parent.lo <= child.lo and child.hi <= parent.hi
            level[piece.word.labels] = child
        parents = level


def test_diameter_decay_bound():
    sys = interval_sys(5)
    bound = 1.0
    for depth in range(1, 6):
        bound *= 1.0 / (depth + 2)
        worst = max(p.diam_upper for p in pieces(sys, 1, depth))
        assert worst <= bound * (1 + 1e-12)


# -- project --


def test_project_frozen_third_power():
    sys = cantor_system(2, 1 / 3, 3, seed_mode="interval")
    got = project(sys, lambda j: 1, 3)
    assert got.enclosure.lo == 0.0
    assert got.enclosure.hi == pytest.approx(1 / 27, abs=1e-16)
    assert got.diam_upper == pytest.approx(1 / 27, abs=1e-16)
    assert got.word.labels == (1, 1, 1)


def test_project_depth0_and_errors():
    sys = interval_sys()
    base = project(sys, lambda j: 1, 0)
    assert base.enclosure == sys.seed and base.diam_upper == 1.0
    with pytest.raises(HorizonError):
        project(sys, lambda j: 1, 4)
    with pytest.raises(ParameterError):
        project(sys, [1, 2], 3)  # stream exhausts early
    with pytest.raises(ParameterError):
        project(sys, lambda j: 1, -1)


def test_project_stream_forms_agree():
    sys = interval_sys(3)
    a = project(sys, [1, 2, 1], 3)
    b = project(sys, lambda j: [1, 2, 1][j - 1], 3)
    assert a == b


def test_project_nested_containment_random_streams():
    for seed_mode in ("interval", "disk"):
        sys = cantor_system(2, "1/(j+2)", 8, seed_mode=seed_mode)
        for _ in range(20):
            labels = [int(RNG.integers(1, 3)) for _ in range(8)]
            prev = None
            prev_diam = None
            for n in range(9):
                got = project(sys, labels, n)
                if prev is not None:
                    if seed_mode == "interval":
                        assert prev.contains_interval(got.enclosure, slack=1e-12)
                    else:
                        assert prev.contains_disk(got.enclosure, slack=1e-12)
                    assert got.diam_upper <= prev_diam
                prev = got.enclosure
                prev_diam = got.diam_upper


def test_projection_independent_of_seed():
    # the same label stream, projected with an interval seed and a disk seed,
    # pins down the same point once the pieces are small
    isys = cantor_system(2, "1/(j+2)", 10, seed_mode="interval")
    dsys = cantor_system(2, "1/(j+2)", 10, seed_mode="disk")
    for _ in range(5):
        labels = [int(RNG.integers(1, 3)) for _ in range(10)]
        pi = project(isys, labels, 10)
        pd = project(dsys, labels, 10)
        slack = 2 * max(pi.diam_upper, pd.diam_upper)
        assert abs(complex(pi.enclosure.midpoint) - pd.enclosure.center) <= slack


# -- invariance --


def test_invariance_interval_exact():
    sys = interval_sys(3)
    rep = invariance_check(sys, 1, 1)
    assert rep.ok and rep.max_discrepancy == 0.0
    assert rep.mode == "interval" and rep.words_checked == 4
    rep = invariance_check(sys, 1, 2)
    assert rep.ok and rep.max_discrepancy == 0.0
    for j in (1, 2, 3):
        rep = invariance_check(sys, j, 0)
        assert rep.ok and rep.max_discrepancy == 0.0


def test_invariance_gapped_exact():
    sys = gapped_system("j", 3)
    rep = invariance_check(sys, 1, 2)
    assert rep.ok and rep.max_discrepancy == 0.0
    assert rep.words_checked == 8


def test_invariance_disk_mode_exact_affine():
    sys = cantor_system(2, "1/(j+2)", 3, seed_mode="disk")
    for j, k in [(1, 0), (1, 1), (1, 2), (2, 1), (3, 0)]:
        rep = invariance_check(sys, j, k)
        assert rep.ok and rep.max_discrepancy == 0.0 and rep.mode == "map"


def test_invariance_errors():
    sys = interval_sys(3)
    with pytest.raises(HorizonError):
        invariance_check(sys, 2, 2)
    with pytest.raises(ParameterError):
        invariance_check(sys, 0, 1)
    with pytest.raises(ParameterError):
        invariance_check(sys, 1, -1)


# -- combine_stages --


def test_combine_stage_maps_are_exact_word_collapses():
    sys = interval_sys(4)
    merged = combine_stages(sys, (2, 4))
    assert merged.horizon == 2
    assert merged.stage(1).size == 4 and merged.stage(2).size == 4
    # each merged stage map is exactly the collapsed word map, bit for bit
    words = [(i, j) for i in (1, 2) for j in (1, 2)]
    for block_start, stage in ((1, merged.stage(1)), (3, merged.stage(2))):
        got = [m.affine_factor for m in stage.maps]
        want = [collapsed_word_map(sys, block_start, w).affine_factor for w in words]
        assert got == want
    assert "combined" in merged.descriptor


def test_combine_pieces_match_original_depths():
    sys = interval_sys(4)
    merged = combine_stages(sys, (2, 4))
    for new_depth, old_depth in ((1, 2), (2, 4)):
        old = [(p.enclosure.lo, p.enclosure.hi) for p in pieces(sys, 1, old_depth)]
        new = [(p.enclosure.lo, p.enclosure.hi) for p in pieces(merged, 1, new_depth)]
        assert len(new) == len(old)
        for (nlo, nhi), (olo, ohi) in zip(new, old):
            assert nlo == pytest.approx(olo, abs=1e-15)
            assert nhi == pytest.approx(ohi, abs=1e-15)


def test_combine_unit_breakpoints_is_identity():
    sys = interval_sys(3)
    same = combine_stages(sys, (1, 2, 3))
    for j in (1, 2, 3):
        want = [m.affine_factor for m in sys.stage(j).maps]
        got = [m.affine_factor for m in same.stage(j).maps]
        assert got == want


def test_combine_validation():
    sys = interval_sys(4)
    with pytest.raises(ParameterError):
        combine_stages(sys, ())
    with pytest.raises(ParameterError):
        combine_stages(sys, (2, 2))
    with pytest.raises(HorizonError):
        combine_stages(sys, (5,))
    with pytest.raises(SizeCapError):
        combine_stages(sys, (4,), stage_cap=15)


def test_gapped_stages_are_generator_compositions():
    """Stage k of the gapped family is {g1 o g3^l_k, g2 o g3^l_k} collapsed."""
    sys = gapped_system({"list": [1, 2], "then": "error"}, 2)
    third = Fraction(1, 3)
    for k, l in ((1, 1), (2, 2)):
        st = sys.stage(k)
        for outer_expr, outer in ((GAP_LEFT, GAP_LEFT), (GAP_RIGHT, GAP_RIGHT)):
            want = compose_chain([outer_expr] + [GAP_MIDDLE] * l).affine_factor
            got = st.map_for(1 if outer is GAP_LEFT else 2).affine_factor
            assert got == want
            # independent closed form: g3^l(x) = x/3^l + (1 - 3^-l)/2
            a = third**(l + 1)
            b = third * (1 - third**l) / 2
            if outer is GAP_RIGHT:
                b += Fraction(2, 3)
            assert got.a == pytest.approx(float(a), abs=1e-15)
            assert got.b == pytest.approx(float(b), abs=1e-15)


# -- attractor_sample --


def test_attractor_sample_middle_thirds():
    sys = cantor_system(2, 1 / 3, 5, seed_mode="interval")
    pts = attractor_sample(sys, 5)
    assert len(pts) == 32
    assert len(set(pts)) == 32
    assert all(p.imag == 0.0 and 0.0 <= p.real <= 1.0 for p in pts)
    assert pts[0] == pytest.approx(1 / 486, abs=1e-15)  # midpoint of [0, 1/243]
    assert pts == sorted(pts, key=lambda z: z.real)


def test_attractor_sample_depth0_and_gapped():
    sys = cantor_system(2, 1 / 3, 5, seed_mode="interval")
    assert attractor_sample(sys, 0) == [complex(0.5, 0.0)]
    gap = gapped_system(1, 3)
    pts = attractor_sample(gap, 3)
    assert len(pts) == 8
    assert all(0.0 <= p.real <= 1.0 for p in pts)


def test_attractor_sample_streams_per_leaf():
    sys = cantor_system(2, 1 / 3, 5, seed_mode="interval")
    refined = attractor_sample(sys, 4, streams_per_leaf=2)
    assert refined == attractor_sample(sys, 5)
    with pytest.raises(ParameterError):
        attractor_sample(sys, 1, streams_per_leaf=0)
