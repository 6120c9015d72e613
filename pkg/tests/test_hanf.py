import itertools
import random

import pytest

from tesselogic.catalog import DL, DW, at_most_one_formula, quarter_formula, uniform
from tesselogic.evaluate import eval_universal_periodic
from tesselogic.grid import GridError, Pattern, Rect
from tesselogic.hanf import MANY, ball_size, count_profile, equiv_nk, ge_nk, universal_bound
from tesselogic.logic import parse

from oracles import all_tori, colorings, random_universal_fo, rect_cells


def board(size, dark):
    return Pattern.from_names(DL, {v: "D" if (v.x, v.y) in dark else "L" for v in Rect(0, 0, size, size).cells()})


def naive_square_counts(p, n):
    """Count radius-n squares at positions where the whole square fits."""
    found = {}
    for z in p.domain:
        cells = {}
        for dx in range(-n, n + 1):
            for dy in range(-n, n + 1):
                c = p.get((z.x + dx, z.y + dy))
                if c is None:
                    break
                cells[(dx, dy)] = c
            else:
                continue
            break
        else:
            key = Pattern(p.alphabet, cells)
            found[key] = found.get(key, 0) + 1
    return found


def test_ball_sizes():
    assert [ball_size(r) for r in range(4)] == [1, 5, 13, 25]
    for r in range(6):
        assert ball_size(r) == sum(1 for x in range(-r, r + 1) for y in range(-r, r + 1) if abs(x) + abs(y) <= r)
    with pytest.raises(ValueError):
        ball_size(-1)


def test_profile_examples():
    three = board(3, {(x, y) for x in range(3) for y in range(3)})
    prof = count_profile(three, 1, 2)
    assert list(prof.counts.values()) == [1]
    four = board(4, {(x, y) for x in range(4) for y in range(4)})
    assert list(count_profile(four, 1, 2).counts.values()) == [MANY]
    assert list(count_profile(uniform("D"), 1, 5).counts.values()) == [MANY]


def test_profile_matches_naive_counts():
    rng = random.Random(1)
    for _ in range(30):
        p = board(4, {(rng.randrange(4), rng.randrange(4)) for _ in range(rng.randint(0, 8))})
        for n in (0, 1):
            for k in (1, 3):
                prof = count_profile(p, n, k)
                naive = naive_square_counts(p, n)
                assert set(prof.counts) == set(naive)
                for q, c in naive.items():
                    assert prof.count(q) == (MANY if c > k else c)


def test_periodic_profile_only_many():
    for c in list(all_tori(DL, 2, 2))[::3]:
        prof = count_profile(c, 1, 3)
        assert set(prof.counts.values()) == {MANY}


def test_one_sided_examples():
    one = board(5, {(2, 2)})
    two = board(5, {(1, 1), (3, 3)})
    assert ge_nk(one, one, 0, 3)
    assert not ge_nk(one, two, 0, 3)
    assert ge_nk(two, one, 0, 3)


def test_equivalence_examples():
    assert equiv_nk(board(6, {(1, 1)}), board(6, {(1, 1)}), 0, 1)
    assert not equiv_nk(board(6, {(1, 1)}), board(6, {(1, 1), (4, 4)}), 0, 1)
    three = board(6, {(0, 0), (2, 4), (5, 1)})
    five = board(6, {(0, 0), (2, 4), (5, 1), (4, 5), (0, 3)})
    assert equiv_nk(three, five, 0, 2)


def test_kind_and_alphabet_mismatch():
    with pytest.raises(GridError):
        ge_nk(board(2, set()), uniform("D"), 0, 1)
    with pytest.raises(GridError):
        equiv_nk(board(2, set()), Pattern.from_rows(DW, [["D"]]), 0, 1)


def test_equivalence_is_both_one_sided_relations():
    pats = list(colorings(DL, rect_cells(3, 3)))
    rng = random.Random(2)
    sample = rng.sample(pats, 60)
    for n in (0, 1):
        for k in (1, 2):
            for m, other in itertools.product(sample, repeat=2):
                assert equiv_nk(m, other, n, k) == (ge_nk(m, other, n, k) and ge_nk(other, m, n, k))


def test_one_sided_relation_matches_definition():
    rng = random.Random(3)
    pats = list(colorings(DL, rect_cells(3, 3)))
    for _ in range(300):
        m, other = rng.choice(pats), rng.choice(pats)
        n, k = rng.randint(0, 1), rng.randint(1, 2)
        cm, co = naive_square_counts(m, n), naive_square_counts(other, n)
        expected = all(co.get(p, 0) <= c for p, c in cm.items() if c <= k) and all(p in cm for p in co)
        assert ge_nk(m, other, n, k) == expected


def test_periodic_equivalence_is_monotone_in_radius():
    tori = [c for w in (1, 2) for h in (1, 2) for c in all_tori(DL, w, h)]
    for a, b in itertools.product(tori, repeat=2):
        for n in range(2):
            if equiv_nk(a, b, n + 1, 2):
                assert equiv_nk(a, b, n, 2)


def test_universal_bounds():
    one = parse("forall x. @D(x)")
    assert universal_bound(one) == (3, 26)
    assert universal_bound(at_most_one_formula()) == (9, 363)
    assert universal_bound(parse("true")) == (1, 1)
    # unfolding the east and north terms adds two quantifiers
    assert universal_bound(quarter_formula())[0] == 27
    with pytest.raises(GridError):
        universal_bound(parse("exists x. @D(x)"))


def _small_periodic():
    return [c for w in (1, 2) for h in (1, 2) for c in all_tori(DL, w, h)]


def _one_quantifier_formulas(count, seed):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        f = random_universal_fo(rng, ["D", "L"], nvars=1, term_depth=0)
        if universal_bound(f) == (3, 26):
            out.append(f)
    return out


def test_bound_transfers_truth_on_periodic_pairs():
    configs = _small_periodic()
    for f in _one_quantifier_formulas(15, 4):
        truth = [eval_universal_periodic(f, c) for c in configs]
        for i, j in itertools.product(range(len(configs)), repeat=2):
            if truth[i] and ge_nk(configs[i], configs[j], 3, 26):
                assert truth[j]
