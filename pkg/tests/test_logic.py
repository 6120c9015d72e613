import random

import pytest
from hypothesis import given, settings, strategies as st

from tesselogic import logic as L
from tesselogic.catalog import AT_MOST_ONE_D, DL, QUARTER_CLAUSES
from tesselogic.evaluate import eval_pattern, eval_torus
from tesselogic.grid import Vec2
from tesselogic.logic import Fragment, FormulaError, classify, parse, prenex, term_offset, to_relational, to_str
from tesselogic.translate import soficform_atmost
from tesselogic.catalog import single

from oracles import all_tori, colorings, holds_on_pattern, holds_on_torus, random_qf, rect_cells, small_patterns

LATTICE = [
    (Fragment.THEOREM6, Fragment.UNIVERSAL_FO),
    (Fragment.UNIVERSAL_FO, Fragment.UNIVERSAL_MSO),
    (Fragment.UNIVERSAL_MSO, Fragment.MSO),
    (Fragment.CFORM, Fragment.SOFIC_FORM),
    (Fragment.SOFIC_FORM, Fragment.EMSO),
    (Fragment.EMSO, Fragment.MSO),
    (Fragment.QUANTIFIER_FREE, Fragment.FO),
    (Fragment.FO, Fragment.EMSO),
]


# ------------------------------------------------------------------ parse


def test_parse_quarter_clause():
    f = parse("forall x. !(@D(x) & @L(E(x)))", DL)
    assert f == L.forall("x", L.Not(L.And((L.color("D", L.Var("x")), L.color("L", L.Dir("E", L.Var("x")))))))
    assert Fragment.THEOREM6 in classify(f)


def test_parse_at_most_one():
    f = parse(AT_MOST_ONE_D, DL)
    x, y = L.Var("x"), L.Var("y")
    body = L.Implies(L.And((L.color("D", x), L.color("D", y))), L.Eq(x, y))
    assert f == L.forall("x", L.forall("y", body))


def test_parse_cform_example():
    assert Fragment.CFORM in classify(parse("exists X. forall z. X(z)"))


def test_precedence():
    f = parse("@D(x) | @L(x) & !@D(x) -> @L(x) <-> @D(x)")
    assert isinstance(f, L.Iff)
    assert isinstance(f.left, L.Implies)
    assert isinstance(f.left.left, L.Or)
    assert isinstance(f.left.left.args[1], L.And)


@pytest.mark.parametrize(
    "text",
    [
        "forall x. @Q(x)",  # unknown color
        "forall x. forall x. @D(x)",  # shadowing
        "forall x. edgeE(x, y) & @D(E(x))",  # mixed signature
        "forall x. (@D(x)",  # syntax
        "forall x. @D(x) &",
    ],
)
def test_parse_errors(text):
    with pytest.raises(FormulaError):
        parse(text, DL)


def test_syntax_error_has_position():
    with pytest.raises(FormulaError) as info:
        parse("forall x.\n  @D(x) & & @L(x)", DL)
    assert info.value.line == 2
    assert info.value.col is not None


def test_print_parse_roundtrip_fixtures():
    for text in (QUARTER_CLAUSES, AT_MOST_ONE_D, "exists X. forall z. X(z) <-> !X(N(z))", "forall x. forall w. edgeE(x, w) -> @L(w)"):
        f = parse(text)
        assert parse(to_str(f)) == f
        assert to_str(parse(to_str(f))) == to_str(f)


# random ASTs of depth <= 6 for the roundtrip property
def _terms(names):
    return st.recursive(
        st.sampled_from(names).map(L.Var),
        lambda t: st.builds(L.Dir, st.sampled_from("NSEW"), t),
        max_leaves=3,
    )


_term = _terms(["x", "y"])
_atom = st.one_of(
    st.builds(L.Eq, _term, _term),
    st.builds(L.color, st.sampled_from(["D", "L"]), _term),
    st.builds(L.member, st.sampled_from(["X", "Y"]), _term),
    st.sampled_from([L.TRUE, L.FALSE]),
)


def _extend(sub):
    return st.one_of(
        st.builds(L.Not, sub),
        st.builds(lambda a, b: L.And((a, b)), sub, sub),
        st.builds(lambda a, b: L.Or((a, b)), sub, sub),
        st.builds(L.Implies, sub, sub),
        st.builds(L.Iff, sub, sub),
    )


_matrix = st.recursive(_atom, _extend, max_leaves=8)


@st.composite
def formulas(draw):
    body = draw(_matrix)
    order = draw(st.permutations(["x", "y", "X", "Y"]))
    for v in order:
        body = L.Quant(draw(st.booleans()), v, body)
    return body


@settings(max_examples=200, deadline=None)
@given(formulas())
def test_roundtrip_property(f):
    assert parse(to_str(f)) == f


# ---------------------------------------------------------------- classify


def test_classify_at_most_one():
    flags = classify(parse(AT_MOST_ONE_D, DL))
    assert Fragment.UNIVERSAL_FO in flags
    assert Fragment.THEOREM6 not in flags


def test_classify_trivial_universal():
    assert Fragment.THEOREM6 in classify(parse("forall z. true"))


def test_classify_corner_formula_is_cform():
    f = soficform_atmost(single(), 1)
    assert Fragment.CFORM in classify(f)


def test_classify_examples():
    assert Fragment.QUANTIFIER_FREE in classify(parse("true"))
    emso = classify(parse("exists X. exists x. forall y. X(x) & @D(y)"))
    assert Fragment.EMSO in emso and Fragment.SOFIC_FORM not in emso
    mso = classify(parse("forall X. exists Y. forall x. X(x) -> Y(x)"))
    assert mso & (Fragment.EMSO | Fragment.UNIVERSAL_MSO) == Fragment.NONE
    assert Fragment.UNIVERSAL_MSO in classify(parse("forall X. forall x. X(x)"))


@settings(max_examples=200, deadline=None)
@given(formulas())
def test_classify_respects_lattice(f):
    flags = classify(f)
    for low, high in LATTICE:
        if low in flags:
            assert high in flags, (low, high, to_str(f))


# -------------------------------------------------------------- term offsets


def test_term_offsets():
    z, x = L.Var("z"), L.Var("x")
    assert term_offset(L.Dir("E", L.Dir("E", z))) == ("z", Vec2(2, 0))
    assert term_offset(L.Dir("N", L.Dir("S", z))) == ("z", Vec2(0, 0))
    assert term_offset(L.Dir("W", L.Dir("N", L.Dir("N", x)))) == ("x", Vec2(-1, 2))


@settings(max_examples=100, deadline=None)
@given(_term, st.sampled_from("NSEW"))
def test_term_offset_linearity(t, d):
    unit = {"N": Vec2(0, 1), "S": Vec2(0, -1), "E": Vec2(1, 0), "W": Vec2(-1, 0)}[d]
    var, off = term_offset(t)
    assert term_offset(L.Dir(d, t)) == (var, off + unit)


# ------------------------------------------------------------- relational


def test_to_relational_without_compound_terms():
    f = parse("forall x. @D(x)", DL)
    assert to_relational(f) == f


def test_to_relational_unfolds_east():
    g = to_relational(parse("forall x. @L(E(x))", DL))
    assert alpha(g) == alpha(parse("forall x. forall w. edgeE(x, w) -> @L(w)", DL))
    for p in small_patterns(DL):
        assert eval_pattern(g, p) == holds_on_pattern(parse("forall x. forall w. edgeE(x, w) -> @L(w)"), p)


def alpha(f):
    return L.alpha_normal(f)


def test_to_relational_at_most_one_two_variables():
    f = parse(AT_MOST_ONE_D, DL)
    g = to_relational(f)
    assert [v for _, v in L.split_prefix(g)[0]] == ["x", "y"]
    full = list(colorings(DL, rect_cells(3, 3)))
    for p in full + list(small_patterns(DL)):
        assert eval_pattern(g, p) == (p.count(0) <= 1)


def test_to_relational_rejects_non_prenex():
    with pytest.raises(FormulaError):
        to_relational(parse("forall x. @D(x) & exists y. @D(E(y))", DL))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_to_relational_preserves_universality(seed):
    rng = random.Random(seed)
    names = ["x", "y"][: rng.randint(1, 2)]
    f = L.forall_all(names, random_qf(rng, names, [], ["D", "L"], 3, term_depth=2))
    g = to_relational(f)
    assert Fragment.UNIVERSAL_FO in classify(g)
    assert not L.has_compound_terms(g)


# ------------------------------------------------------------------ prenex


def test_prenex_already_prenex():
    f = parse(AT_MOST_ONE_D, DL)
    assert L.alpha_equivalent(prenex(f), f)


def test_prenex_two_universals():
    f = prenex(parse("(forall x. @D(x)) & (forall y. @D(y))", DL))
    assert to_str(f) == "forall x1. forall x2. @D(x1) & @D(x2)"


def test_prenex_agrees_on_random_formulas():
    rng = random.Random(11)
    tori = list(all_tori(DL, 3, 3))[::37] + list(all_tori(DL, 1, 1))
    # prenex laws pull quantifiers over constants, which is only sound on
    # non-empty universes, so the empty pattern is left out
    pats = [p for p in small_patterns(DL) if p]
    for _ in range(40):
        f = _random_nonprenex(rng)
        g = prenex(f)
        assert L.is_prenex(g)
        for c in tori:
            assert eval_torus(f, c) == eval_torus(g, c) == holds_on_torus(f, c)
        for p in pats:
            assert eval_pattern(f, p) == eval_pattern(g, p)


def _random_nonprenex(rng, depth=3, bound=()):
    """Relational-compatible sentence with quantifiers under connectives."""
    names = ["x", "y", "z"]
    free = [v for v in names if v not in bound]
    if depth == 0 or not free or rng.random() < 0.2:
        if not bound:
            return L.TRUE if rng.random() < 0.5 else L.FALSE
        v = rng.choice(list(bound))
        if len(bound) > 1 and rng.random() < 0.3:
            return L.Eq(L.Var(v), L.Var(rng.choice(list(bound))))
        return L.color(rng.choice(["D", "L"]), L.Var(v))
    op = rng.choice(["q", "q", "and", "or", "not", "imp"])
    if op == "q":
        v = rng.choice(free)
        return L.Quant(rng.random() < 0.5, v, _random_nonprenex(rng, depth - 1, bound + (v,)))
    if op == "not":
        return L.Not(_random_nonprenex(rng, depth - 1, bound))
    a = _random_nonprenex(rng, depth - 1, bound)
    b = _random_nonprenex(rng, depth - 1, bound)
    return {"and": lambda: L.And((a, b)), "or": lambda: L.Or((a, b)), "imp": lambda: L.Implies(a, b)}[op]()
