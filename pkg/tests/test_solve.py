import itertools
import random

import pytest

from tesselogic.catalog import DL, DW, DWL, corner_presentation, quarter_sft, uniform
from tesselogic.evaluate import sft_membership
from tesselogic.grid import (
    SFT,
    Alphabet,
    GridError,
    Pattern,
    ProjectionMap,
    all_colorings,
    apply_projection,
)
from tesselogic.marked import MarkedSFT, StateSet
from tesselogic.solve import (
    WindowSpec,
    a_operator,
    admissible_patterns,
    e_operator,
    forbidden_language,
    marked_solutions,
    projected_admissible,
    torus_solutions,
    window_cells,
)

from oracles import all_tori, colorings, rect_cells, torus_forbidden_free, window_extends

AB = Alphabet(["a", "b"])


def random_sft(rng, alphabet=DL, max_side=2, count=3):
    forbidden = []
    for _ in range(rng.randint(1, count)):
        w, h = rng.randint(1, max_side), rng.randint(1, max_side)
        cells = {(x, y): rng.randrange(len(alphabet)) for x in range(w) for y in range(h) if rng.random() < 0.8}
        if not cells:
            cells = {(0, 0): rng.randrange(len(alphabet))}
        forbidden.append(Pattern(alphabet, cells))
    return SFT(alphabet, forbidden)


def codes(c):
    return tuple(c.at(v) for v in window_cells(c.width, c.height))


# ------------------------------------------------------------------ tori


def test_quarter_sft_on_4x4_torus():
    sols = torus_solutions(quarter_sft(), 4, 4)
    assert sols == [uniform("D").unrolled(4, 4), uniform("L").unrolled(4, 4)]


def test_unconstrained_2x2_torus():
    assert len(torus_solutions(SFT(DL, []), 2, 2)) == 16


def test_both_single_colors_forbidden():
    s = SFT(DL, [Pattern.from_rows(DL, [["D"]]), Pattern.from_rows(DL, [["L"]])])
    assert torus_solutions(s, 2, 2) == []


def test_torus_smaller_than_pattern():
    with pytest.raises(GridError):
        torus_solutions(SFT(DL, [Pattern.from_rows(DL, [["D", "D", "D"]])]), 2, 2)


def test_limit_returns_first_solutions():
    full = torus_solutions(SFT(DL, []), 2, 2)
    assert torus_solutions(SFT(DL, []), 2, 2, limit=1) == full[:1]
    assert torus_solutions(SFT(DL, []), 2, 2, limit=5) == full[:5]


def test_torus_solutions_match_brute_force():
    rng = random.Random(1)
    for _ in range(25):
        s = random_sft(rng)
        for w, h in ((2, 2), (3, 2), (2, 3), (3, 3)):
            sols = torus_solutions(s, w, h)
            expected = [c for c in all_tori(DL, w, h) if torus_forbidden_free(s.forbidden, c)]
            assert sorted(codes(c) for c in sols) == sorted(codes(c) for c in expected)
            assert [codes(c) for c in sols] == sorted(codes(c) for c in sols)
            assert all(sft_membership(s, c) for c in sols)


# ------------------------------------------------------------ window languages


def test_quarter_windows_have_no_dark_west_of_light():
    found = admissible_patterns(quarter_sft(), WindowSpec(2, 2, 2))
    assert found
    for p in found:
        for y in (0, 1):
            assert not (DL.name(p[(0, y)]) == "D" and DL.name(p[(1, y)]) == "L")
    # the three-cell row version needs the margin: D ? L in a 3x1 window
    rows = admissible_patterns(quarter_sft(), WindowSpec(3, 1, 2))
    assert not any(DL.name(p[(0, 0)]) == "D" and DL.name(p[(2, 0)]) == "L" for p in rows)


def test_margin_zero_is_internal_avoidance():
    rng = random.Random(2)
    for _ in range(10):
        s = random_sft(rng)
        got = admissible_patterns(s, WindowSpec(2, 2, 0))
        expected = {p for p in colorings(DL, rect_cells(2, 2)) if window_extends(s.forbidden, DL, p, 0, 2, 2)}
        assert got == expected


def test_admissible_matches_brute_force_extension():
    rng = random.Random(3)
    for _ in range(6):
        s = random_sft(rng)
        got = admissible_patterns(s, WindowSpec(2, 1, 1))
        expected = {p for p in colorings(DL, rect_cells(2, 1)) if window_extends(s.forbidden, DL, p, 1, 2, 1)}
        assert got == expected


def test_admissible_is_monotone_in_margin():
    rng = random.Random(4)
    for _ in range(10):
        s = random_sft(rng)
        sets = [admissible_patterns(s, WindowSpec(2, 2, m)) for m in range(4)]
        for smaller, larger in zip(sets[1:], sets):
            assert smaller <= larger


def test_sofic_forbids_adjacent_corners():
    forb = forbidden_language(corner_presentation(), WindowSpec(2, 1, 2))
    assert Pattern.from_rows(DW, [["D", "D"]]) in forb
    assert Pattern.from_rows(DW, [["W", "W"]]) not in forb


def test_forbidden_complements_admissible():
    rng = random.Random(5)
    everything = set(colorings(DL, rect_cells(2, 2)))
    for _ in range(5):
        s = random_sft(rng)
        spec = WindowSpec(2, 2, 1)
        assert forbidden_language(s, spec) == everything - admissible_patterns(s, spec)
    pres = corner_presentation()
    spec = WindowSpec(2, 2, 1)
    allowed = projected_admissible(pres, spec)
    forbidden = forbidden_language(pres, spec)
    assert not allowed & forbidden
    assert allowed | forbidden == set(colorings(DW, rect_cells(2, 2)))


def test_full_shift_forbids_nothing():
    for m in range(3):
        assert forbidden_language(SFT(DL, []), WindowSpec(2, 2, m)) == set()


def test_sofic_preimage_limit():
    with pytest.raises(GridError):
        forbidden_language(corner_presentation(), WindowSpec(6, 6, 0))


# ----------------------------------------------------------- E and A operators


def _maps():
    return [ProjectionMap(DL, AB, images) for images in itertools.product(range(2), repeat=2)]


def test_e_operator_basics():
    square = list(colorings(DL, rect_cells(2, 2)))
    assert e_operator(ProjectionMap.identity(DL), square) == set(square)
    collapse = ProjectionMap(DL, Alphabet(["u"]), (0, 0))
    assert len(e_operator(collapse, square)) == 1
    rng = random.Random(6)
    for _ in range(20):
        subset = rng.sample(square, rng.randint(0, 16))
        assert len(e_operator(_maps()[rng.randrange(4)], subset)) <= len(subset)


def test_a_operator_basics():
    cells = rect_cells(2, 2)
    square = list(colorings(DL, cells))
    for pi in _maps():
        assert a_operator(pi, square) == set(colorings(AB, cells))
        # a target using a color outside the image has no preimage at all
        unreachable = set(colorings(AB, cells)) - e_operator(pi, square)
        assert a_operator(pi, [], domain=cells) == unreachable
        if len(set(pi.assignment)) == 2:
            assert not unreachable


def test_operators_reject_mixed_domains():
    mixed = [Pattern.from_rows(DL, [["D"]]), Pattern.from_rows(DL, [["D", "L"]])]
    with pytest.raises(GridError):
        e_operator(ProjectionMap.identity(DL), mixed)
    with pytest.raises(GridError):
        a_operator(ProjectionMap.identity(DL), mixed)


def duality_holds(pi, cells, subset, source):
    outside = set(source) - set(subset)
    targets = set(colorings(pi.target, cells))
    return a_operator(pi, subset, domain=cells) == targets - e_operator(pi, outside)


def test_duality_on_small_domains():
    square = rect_cells(2, 2)
    for r in range(1, 4):
        for cells in itertools.combinations(square, r):
            source = list(colorings(DL, cells))
            for pi in _maps():
                for mask in range(2 ** len(source)):
                    subset = [p for i, p in enumerate(source) if mask >> i & 1]
                    assert duality_holds(pi, list(cells), subset, source)


def test_duality_on_sampled_square_sets():
    cells = rect_cells(2, 2)
    source = list(colorings(DL, cells))
    rng = random.Random(7)
    for pi in _maps():
        for _ in range(200):
            subset = [p for p in source if rng.random() < 0.7]
            assert duality_holds(pi, cells, subset, source)


# ------------------------------------------------------------- marked windows


def _plain_marked():
    return MarkedSFT(
        SFT(AB, []), StateSet.of_colors(AB, ["a"]), StateSet.of_colors(AB, ["b"]), ProjectionMap.identity(AB)
    )


def test_marked_windows_need_both_markers():
    sols = marked_solutions(_plain_marked(), 2, 2)
    assert len(sols) == 16 - 1 - 1
    for base, image in sols:
        assert base == image
        assert base.count(0) >= 1 and base.count(1) >= 1


def test_marked_limit_and_order():
    sols = marked_solutions(_plain_marked(), 2, 2)
    assert marked_solutions(_plain_marked(), 2, 2, limit=1) == sols[:1]
    keys = [tuple(b[v] for v in window_cells(2, 2)) for b, _ in sols]
    assert keys == sorted(keys)


def test_marked_projection_is_cellwise():
    pi = ProjectionMap.from_names(DWL, DW, {"D": "D", "L": "W", "W": "W"})
    m = MarkedSFT(SFT(DWL, []), StateSet.of_colors(DWL, ["D"]), StateSet.of_colors(DWL, ["W"]), pi)
    for base, image in marked_solutions(m, 2, 1):
        assert image == apply_projection(pi, base)


def test_marked_window_too_small():
    m = MarkedSFT(
        SFT(AB, [Pattern.from_rows(AB, [["a", "a", "a"]])]),
        StateSet.of_colors(AB, ["a"]),
        StateSet.of_colors(AB, ["b"]),
        ProjectionMap.identity(AB),
    )
    with pytest.raises(GridError):
        marked_solutions(m, 2, 2)


def test_all_colorings_enumerates_lexicographically():
    pats = list(all_colorings(DL, rect_cells(2, 1)))
    assert [tuple(p[v] for v in rect_cells(2, 1)) for p in pats] == list(itertools.product(range(2), repeat=2))
