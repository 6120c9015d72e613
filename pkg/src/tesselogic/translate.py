"""Constructive translations between formulas and subshift presentations."""

from __future__ import annotations

import itertools
from typing import Sequence

from .grid import (
    Alphabet,
    GridError,
    Pattern,
    ProjectionMap,
    SFT,
    SoficPresentation,
    Vec2,
)
from . import logic as L
from .logic import (
    And,
    Const,
    Eq,
    FormulaError,
    Fragment,
    FreshNames,
    Iff,
    Implies,
    Not,
    Or,
    Pred,
    Quant,
    Var,
    color,
    conj,
    disj,
    make_term,
    member,
)

EXACT = "exact"
AT_LEAST = "atleast"


def _fragment_error(what: str) -> FormulaError:
    return FormulaError(f"formula is not in the {what} fragment")


# --------------------------------------------------------- occurrence formulas


def occurrence_formula(p: Pattern, var: str = "z"):
    """Quantifier-free formula true at ``var`` iff ``p`` occurs there."""
    if not p:
        raise GridError("occurrence formula of the empty pattern")
    cells = sorted(p.domain, key=lambda v: (v.y, v.x))
    name = p.alphabet.name
    return conj(color(name(p[v]), make_term(var, v)) for v in cells)


def _static_value(f, coloring: dict):
    """Value of a one-variable quantifier-free formula given colors by offset."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Eq):
        return L.term_offset(f.left)[1] == L.term_offset(f.right)[1]
    if isinstance(f, Pred):
        return coloring[L.term_offset(f.arg)[1]] == f.name
    if isinstance(f, Not):
        return not _static_value(f.arg, coloring)
    if isinstance(f, And):
        return all(_static_value(a, coloring) for a in f.args)
    if isinstance(f, Or):
        return any(_static_value(a, coloring) for a in f.args)
    if isinstance(f, Implies):
        return (not _static_value(f.left, coloring)) or _static_value(f.right, coloring)
    if isinstance(f, Iff):
        return _static_value(f.left, coloring) == _static_value(f.right, coloring)
    raise FormulaError(f"unexpected node {f!r} in a quantifier-free matrix")


def single_universal_parts(f) -> tuple[str, object]:
    """Variable and matrix of ``f`` seen as ``forall z. matrix``."""
    if Fragment.THEOREM6 not in L.classify(f) or L.has_edges(f):
        raise _fragment_error("single universal quantifier")
    prefix, matrix = L.prenex_parts(f, fuse=True, greedy=True)
    return prefix[0][1], matrix


def sft_of_universal(f, alphabet: Alphabet) -> SFT:
    """Forbidden-pattern presentation of a ``forall z. qf`` sentence.

    The window is the set of offsets read by color atoms; every coloring of
    the window that falsifies the matrix is forbidden.
    """
    L.check_colors(f, alphabet)
    var, matrix = single_universal_parts(f)
    offsets = set()
    for a in L.atoms(matrix):
        if isinstance(a, Pred):
            if not a.color:
                raise _fragment_error("first-order")
            offsets.add(L.term_offset(a.arg)[1])
    window = sorted(offsets, key=lambda v: (v.y, v.x))
    if not window:
        if _static_value(matrix, {}):
            return SFT(alphabet)
        return SFT(alphabet, [Pattern(alphabet, {Vec2(0, 0): c}) for c in range(len(alphabet))])
    bad = []
    for combo in itertools.product(alphabet.colors, repeat=len(window)):
        coloring = dict(zip(window, combo))
        if not _static_value(matrix, coloring):
            bad.append(Pattern.from_names(alphabet, coloring))
    return SFT(alphabet, bad)


def formula_of_sft(s: SFT):
    """``forall z`` of the conjunction of negated occurrence formulas."""
    forbidden = s.forbidden
    if not forbidden:
        return L.forall("z", L.TRUE)
    return L.forall("z", conj(Not(occurrence_formula(p, "z")) for p in forbidden))


# ------------------------------------------------------- set-quantifier elimination


def _set_terms(f, name: str) -> list:
    seen = []
    for a in L.atoms(f):
        if isinstance(a, Pred) and not a.color and a.name == name and a.arg not in seen:
            seen.append(a.arg)
    return seen


def eliminate_one(matrix, name: str):
    """Quantifier-free equivalent of ``forall name. matrix``.

    One implication per assignment of truth values to the distinct terms
    ``t_1..t_k`` that ``name`` is applied to: if terms given different
    values are distinct, the matrix with those values plugged in holds.
    """
    terms = _set_terms(matrix, name)
    k = len(terms)
    if k == 0:
        return matrix
    out = []
    for code in range(2 ** k):
        rho = [(code >> (k - 1 - i)) & 1 for i in range(k)]
        distinct = [
            Not(Eq(terms[j], terms[i]))
            for i in range(k)
            for j in range(i + 1, k)
            if rho[i] != rho[j]
        ]
        values = {member(name, t): Const(bool(rho[i])) for i, t in enumerate(terms)}
        out.append(Implies(conj(distinct), L.substitute_atoms(matrix, values)))
    return conj(out)


def eliminate_so_universal(f, simplify: bool = True):
    """Universal first-order sentence equivalent to a universal MSO sentence.

    Set quantifiers are removed innermost first.  With ``simplify`` the
    result is passed through constant folding.
    """
    prefix, matrix = L.prenex_parts(f)
    if not all(u for u, _ in prefix):
        raise _fragment_error("universal MSO")
    fo = [v for _, v in prefix if not L.is_so_name(v)]
    so = [v for _, v in prefix if L.is_so_name(v)]
    for name in reversed(so):
        matrix = eliminate_one(matrix, name)
    if simplify:
        matrix = L.simplify(matrix)
        used = L.free_vars(matrix)
        if isinstance(matrix, Const):
            fo = fo[:1] or ["x1"]
        else:
            fo = [v for v in fo if v in used] or fo[:1]
    return L.forall_all(fo, matrix)


# ----------------------------------------------------------- counting formulas


def formula_atmost(p: Pattern, k: int):
    """Universal sentence saying ``p`` occurs at most ``k`` times."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return L.forall("x", Not(occurrence_formula(p, "x")))
    xs = [f"x{i}" for i in range(1, k + 2)]
    occ = conj(occurrence_formula(p, x) for x in xs)
    same = disj(Eq(Var(a), Var(b)) for a, b in itertools.combinations(xs, 2))
    return L.forall_all(xs, Implies(occ, same))


def _quarter_constraints(area: str, corner: str, x: str) -> list:
    """``area`` is closed north and east; ``corner`` is its south-west corner."""
    t = Var(x)
    return [
        Iff(
            member(area, t),
            And((member(area, L.Dir("N", t)), member(area, L.Dir("E", t)))),
        ),
        Iff(
            member(corner, t),
            And(
                (
                    member(area, t),
                    Not(member(area, L.Dir("S", t))),
                    Not(member(area, L.Dir("W", t))),
                )
            ),
        ),
    ]


def formula_count(p: Pattern, k: int, mode: str = EXACT):
    """Sentence for "``p`` occurs exactly ``k`` times" (or "at least ``k``")."""
    if mode not in (EXACT, AT_LEAST):
        raise ValueError(f"unknown counting mode {mode!r}")
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        if mode == EXACT:
            return L.forall("x", Not(occurrence_formula(p, "x")))
        return L.forall("x", L.TRUE)
    xs = [f"X{i}" for i in range(1, k + 1)]
    areas = [f"A{i}" for i in range(1, k + 1)]
    x = Var("x")
    quarters = [c for i in range(k) for c in _quarter_constraints(areas[i], xs[i], "x")]
    # keep the displayed grouping: all A-constraints, then all X-constraints
    quarters = quarters[0::2] + quarters[1::2]
    exclusive = [
        Implies(member(xs[i], x), Not(member(xs[j], x)))
        for i in range(k)
        for j in range(k)
        if i != j
    ]
    marked = disj(member(v, x) for v in xs)
    occ = occurrence_formula(p, "x")
    link = Iff(marked, occ) if mode == EXACT else Implies(marked, occ)
    universal = L.forall("x", conj(quarters + exclusive + [link]))
    zs = [f"z{i}" for i in range(1, k + 1)]
    witnesses = L.exists_all(zs, conj(member(xs[i], Var(zs[i])) for i in range(k)))
    return L.exists_all(xs + areas, And((universal, witnesses)))


# ----------------------------------------------------------------- C-formulas


class CParts:
    """``exists sets. (forall z. universal) & (exists zs. existential)``."""

    def __init__(self, sets, z, universal, zs, existential):
        self.sets = list(sets)
        self.z = z
        self.universal = universal
        self.zs = list(zs)
        self.existential = existential

    def build(self):
        body = L.forall(self.z, self.universal)
        if self.zs or self.existential != L.TRUE:
            body = And((body, L.exists_all(self.zs, self.existential)))
        return L.exists_all(self.sets, body)


def c_parts(f) -> CParts:
    """Split a formula of the counting shape into its components.

    Accepts leading existential set quantifiers followed by a conjunction of
    single-variable universal parts, existential first-order parts and
    closed quantifier-free parts.  Several universal parts are fused over
    one variable; existential parts are renamed apart and concatenated.
    """
    names = FreshNames(avoid=L.all_var_names(f))
    sets = []
    while isinstance(f, Quant) and f.second_order and not f.universal:
        sets.append(f.var)
        f = f.body
    parts = list(f.args) if isinstance(f, And) else [f]
    flat = []
    while parts:
        g = parts.pop(0)
        if isinstance(g, And):
            parts[:0] = list(g.args)
        else:
            flat.append(g)
    z = names.fresh_like("z")
    univ, exist_vars, exist = [], [], []
    for g in flat:
        if isinstance(g, Quant) and g.universal and not g.second_order:
            if not L.is_quantifier_free(g.body):
                raise _fragment_error("C-form")
            univ.append(L.rename_vars(g.body, {g.var: z}))
            continue
        vs = []
        while isinstance(g, Quant) and not g.universal and not g.second_order:
            vs.append(g.var)
            g = g.body
        if not L.is_quantifier_free(g):
            raise _fragment_error("C-form")
        mapping = {v: names.take(False, "u") for v in vs}
        exist_vars.extend(mapping[v] for v in vs)
        exist.append(L.rename_vars(g, mapping))
    return CParts(sets, z, conj(univ), exist_vars, conj(exist))


def combine_union(f, g):
    """Single-universal formula defining the union of the sets of ``f`` and ``g``.

    A fresh selector set, constant along rows and columns, picks which
    operand's constraints apply.  Set and existential variable counts are
    padded to match before combining.
    """
    a, b = c_parts(f), c_parts(g)
    n = max(len(a.sets), len(b.sets))
    p = max(len(a.zs), len(b.zs), 1)
    sets = [f"X{i}" for i in range(1, n + 1)]
    zs = [f"z{i}" for i in range(1, p + 1)]
    selector, z = "X", "z"

    def normalize(parts: CParts):
        mapping = dict(zip(parts.sets, sets))
        mapping[parts.z] = z
        mapping.update(zip(parts.zs, zs))
        return (
            L.rename_vars(parts.universal, mapping),
            L.rename_vars(parts.existential, mapping),
        )

    u1, e1 = normalize(a)
    u2, e2 = normalize(b)
    zt, z1 = Var(z), Var(zs[0])
    universal = And(
        (
            Iff(member(selector, zt), member(selector, L.Dir("N", zt))),
            Iff(member(selector, zt), member(selector, L.Dir("E", zt))),
            Implies(member(selector, zt), u1),
            Implies(Not(member(selector, zt)), u2),
        )
    )
    def guarded(atom, e):
        return conj([atom] + ([] if e == L.TRUE else [e]))

    existential = Or(
        (
            guarded(member(selector, z1), e1),
            guarded(Not(member(selector, z1)), e2),
        )
    )
    body = And((L.forall(z, universal), L.exists_all(zs, existential)))
    return L.exists_all([selector] + sets, body)


def to_cform(f):
    """Prenex form with set existentials first and universal blocks fused."""
    return L.build_prefixed(*L.prenex_parts(f, fuse=True, greedy=True))


def soficform_atmost(p: Pattern, k: int):
    """Sofic-form sentence for "``p`` occurs at most ``k`` times", fused to one ``forall``.

    Each ``S_i`` is the south-west corner of a north-east closed set, so it
    holds at most one cell; every occurrence of ``p`` must be covered.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    marks = [f"S{i}" for i in range(1, k + 1)]
    caps = [
        L.exists(f"A{i}", L.forall("x", conj(_quarter_constraints(f"A{i}", marks[i - 1], "x"))))
        for i in range(1, k + 1)
    ]
    cover = L.forall(
        "y", Implies(occurrence_formula(p, "y"), disj(member(s, Var("y")) for s in marks))
    )
    return to_cform(L.exists_all(marks, conj(caps + [cover])))


# ------------------------------------------------------------- Prop 1 encodings


def product_alphabet(alphabet: Alphabet, nbits: int) -> tuple[Alphabet, dict]:
    """Alphabet of ``(color, bits)`` pairs named ``color`` + bit string."""
    pairs = [
        (c, bits) for c in alphabet.colors for bits in itertools.product((0, 1), repeat=nbits)
    ]
    names = [c + "".join(map(str, bits)) for c, bits in pairs]
    if len(set(names)) < len(names):
        names = [c + "_" + "".join(map(str, bits)) for c, bits in pairs]
    return Alphabet(names), dict(zip(pairs, names))


def prop1_forward(f, alphabet: Alphabet):
    """First-order image of an EMSO sentence over a bit-decorated alphabet.

    Returns ``(formula, product_alphabet, projection)``; a configuration
    satisfies ``f`` iff some decoration of it satisfies the image.
    """
    L.check_colors(f, alphabet)
    sets = []
    g = f
    while isinstance(g, Quant) and g.second_order and not g.universal:
        sets.append(g.var)
        g = g.body
    if any(isinstance(h, Quant) and h.second_order for h in L.iter_nodes(g)):
        prefix, matrix = L.prenex_parts(f, fuse=True, greedy=True)
        sets = []
        while prefix and L.is_so_name(prefix[0][1]) and not prefix[0][0]:
            sets.append(prefix.pop(0)[1])
        if any(L.is_so_name(v) for _, v in prefix):
            raise _fragment_error("EMSO")
        g = L.build_prefixed(prefix, matrix)
    n = len(sets)
    prod, names = product_alphabet(alphabet, n)
    proj = ProjectionMap.from_names(prod, alphabet, {nm: c for (c, _), nm in names.items()})
    if n == 0:
        return f, alphabet, ProjectionMap.identity(alphabet)
    index = {v: i for i, v in enumerate(sets)}

    def replace(a):
        if isinstance(a, Pred):
            if a.color:
                return disj(color(nm, a.arg) for (c, _), nm in names.items() if c == a.name)
            if a.name in index:
                i = index[a.name]
                return disj(color(nm, a.arg) for (_, bits), nm in names.items() if bits[i])
        return a

    return L.map_atoms(g, replace), prod, proj


def prop1_backward(f, proj: ProjectionMap):
    """EMSO sentence over the target alphabet for the projection of ``f``'s models.

    One set variable per source color partitions the plane; each set only
    covers cells whose target color is the projected one.
    """
    source = proj.source
    names = FreshNames(avoid=L.all_var_names(f))
    sets = [names.take(True) for _ in range(len(source))]
    z = names.fresh_like("z")
    zt = Var(z)
    cover = disj(member(s, zt) for s in sets)
    disjoint = [
        Or((Not(member(sets[i], zt)), Not(member(sets[j], zt))))
        for i in range(len(sets))
        for j in range(i + 1, len(sets))
    ]
    compatible = [
        Implies(member(sets[i], zt), color(proj.target.name(proj(i)), zt))
        for i in range(len(sets))
    ]
    index = {source.name(i): sets[i] for i in range(len(source))}

    def replace(a):
        if isinstance(a, Pred) and a.color:
            if a.name not in index:
                raise GridError(f"color {a.name!r} not in the source alphabet")
            return member(index[a.name], a.arg)
        return a

    body = And((L.forall(z, conj([cover] + disjoint + compatible)), L.map_atoms(f, replace)))
    return L.exists_all(sets, body)


# ------------------------------------------------------------ sofic <-> C-form


def sofic_of_cform(f, alphabet: Alphabet) -> SoficPresentation:
    """Sofic presentation of the set defined by a C-form sentence."""
    if Fragment.CFORM not in L.classify(f):
        raise _fragment_error("C-form")
    g = to_cform(f)
    image, prod, proj = prop1_forward(g, alphabet)
    return SoficPresentation(sft_of_universal(image, prod), proj)


def formula_of_sofic(s: SoficPresentation):
    """C-form sentence defining the projection of the presentation's SFT."""
    return to_cform(prop1_backward(formula_of_sft(s.base), s.proj))


# ----------------------------------------------------------- finiteness, subshifts


def fin_formula(s_var: str, avoid: Sequence[str] = ()):
    """Formula with one free set variable, true iff that set is finite.

    Two quarter planes are guessed: one closed to the north-east with a
    south-west corner and one closed to the south-west with a north-east
    corner; the set must lie in their intersection.
    """
    if not L.is_so_name(s_var) or s_var in L.DIR_LETTERS:
        raise FormulaError(f"{s_var!r} is not a set variable name")
    names = FreshNames(avoid=set(avoid) | {s_var})
    a, b = names.fresh_like("A"), names.fresh_like("B")
    x = Var("x")

    def at(name, d=None):
        return member(name, x if d is None else L.Dir(d, x))

    clauses = [
        L.forall("x", Iff(at(a), And((at(a, "N"), at(a, "E"))))),
        L.forall("x", Iff(at(b), And((at(b, "S"), at(b, "W"))))),
        L.exists("x", And((at(a), Not(at(a, "S")), Not(at(a, "W"))))),
        L.exists("x", And((at(b), Not(at(b, "N")), Not(at(b, "E"))))),
        L.forall("x", Implies(member(s_var, x), And((at(a), at(b))))),
    ]
    return L.exists_all([a, b], And(tuple(clauses)))


def subshift_normal_form(f, alphabet: Alphabet):
    """Rewrite a closed MSO sentence into the finite-window subshift form.

    Colors become set variables ``B``; the only remaining color atoms sit in
    the agreement clause restricted to a finite set ``S``.
    """
    L.check_colors(f, alphabet)
    names = FreshNames(avoid=L.all_var_names(f) | {"x"})
    s_var = names.fresh_like("S")
    bsets = [names.take(True, "B") for _ in alphabet.colors]
    by_color = dict(zip(alphabet.colors, bsets))
    fin = fin_formula(s_var, avoid=names.avoid)
    names.avoid |= L.all_var_names(fin)

    def recolor(a):
        if isinstance(a, Pred) and a.color:
            return member(by_color[a.name], a.arg)
        return a

    x = Var("x")
    partition = [disj(member(b, x) for b in bsets)] + [
        Not(And((member(b1, x), member(b2, x)))) for b1, b2 in itertools.combinations(bsets, 2)
    ]
    psi = And((L.forall("x", conj(partition)), L.map_atoms(f, recolor)))
    agree = L.forall(
        "x",
        Implies(
            member(s_var, x),
            conj(Iff(member(by_color[c], x), color(c, x)) for c in alphabet.colors),
        ),
    )
    return L.forall(s_var, Implies(fin, L.exists_all(bsets, And((psi, agree)))))

