"""Finite model checking.

Three semantics are provided:

* pattern semantics: a relational formula evaluated in the structure whose
  universe is the domain of a pattern, edges linking domain cells at unit
  offsets;
* torus semantics: a formula evaluated on one period of a periodic
  configuration with wrap-around direction functions;
* plane semantics for universal first-order formulas on periodic
  configurations, reduced to a torus that is large enough to be exact.

Formulas are compiled to closures over a slot environment.  Set variables
are bitmasks over the cell list.  Blocks of set quantifiers are decided by a
bit-by-bit search that evaluates the body in three-valued (Kleene) logic
on partially known sets.  The search branches on a membership bit the body
asked for and could not answer, so bits that never matter stay open; this
prunes most of the ``2^(cells * vars)`` space for the constraint-heavy
formulas produced by the translations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid import (
    DIRECTIONS,
    GridError,
    Pattern,
    PeriodicConfig,
    SFT,
    Vec2,
    row_major_key,
)
from . import logic as L


class BudgetExceeded(RuntimeError):
    """Raised when a check would exceed the configured enumeration budget."""


@dataclass(frozen=True)
class Budget:
    max_subset_bits: int = 20
    max_assignments: int = 200_000_000

    def __post_init__(self):
        if self.max_subset_bits < 1 or self.max_assignments < 1:
            raise ValueError("budget limits must be positive")


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class Refuted:
    pattern: Pattern
    radius: int

    def __bool__(self):
        return False


@dataclass(frozen=True)
class ConsistentUpTo:
    radius: int

    def __bool__(self):
        return True


CheckVerdict = Refuted | ConsistentUpTo


# --------------------------------------------------------------- structures


class Structure:
    """A finite structure over cells ``0..n-1``.

    ``step[d][i]`` is the index of the ``d``-neighbour of cell ``i`` or None
    when it lies outside the universe.  ``total`` tells whether direction
    functions may be applied (every step defined).
    """

    def __init__(self, alphabet, cells, colors, step, total):
        self.alphabet = alphabet
        self.cells = cells
        self.colors = colors
        self.step = step
        self.total = total
        self.n = len(cells)


def pattern_structure(p: Pattern) -> Structure:
    cells = p.sorted_cells()
    index = {v: i for i, v in enumerate(cells)}
    step = {d: [index.get(v + off) for v in cells] for d, off in DIRECTIONS.items()}
    return Structure(p.alphabet, cells, [p[v] for v in cells], step, False)


def torus_structure(c: PeriodicConfig) -> Structure:
    w, h = c.width, c.height
    cells = sorted(c.fundamental_cells(), key=row_major_key)
    index = {v: i for i, v in enumerate(cells)}
    step = {
        d: [index[Vec2((v.x + off.x) % w, (v.y + off.y) % h)] for v in cells]
        for d, off in DIRECTIONS.items()
    }
    return Structure(c.alphabet, cells, [c.at(v) for v in cells], step, True)


# ---------------------------------------------------------------- compiler


class _Compiler:
    def __init__(self, st: Structure, budget: Budget):
        self.st = st
        self.budget = budget
        self.nslots = 0
        self.steps_left = [budget.max_assignments]
        # unknown membership bits queried during the latest evaluation
        self.queried = [{}]

    def slot(self):
        self.nslots += 1
        return self.nslots - 1

    def term(self, t, scope):
        if isinstance(t, L.Var):
            if t.name not in scope:
                raise L.FormulaError(f"free variable {t.name!r}")
            s = scope[t.name]
            return lambda env: env[s]
        if not self.st.total:
            raise L.FormulaError("direction functions need a torus; use to_relational first")
        inner = self.term(t.arg, scope)
        table = self.st.step[t.d]
        return lambda env: table[inner(env)]

    def compile(self, f, scope):
        st = self.st
        if isinstance(f, L.Const):
            v = f.value
            return lambda env: v
        if isinstance(f, L.Eq):
            a, b = self.term(f.left, scope), self.term(f.right, scope)
            return lambda env: a(env) == b(env)
        if isinstance(f, L.Pred):
            t = self.term(f.arg, scope)
            if f.color:
                if f.name not in st.alphabet:
                    raise GridError(f"color {f.name!r} not in {st.alphabet!r}")
                c = st.alphabet.index(f.name)
                colors = st.colors
                return lambda env: colors[t(env)] == c
            if f.name not in scope:
                raise L.FormulaError(f"free set variable {f.name!r}")
            s = scope[f.name]
            queried = self.queried

            def member(env):
                known, val = env[s]
                bit = 1 << t(env)
                if known & bit:
                    return bool(val & bit)
                queried[0].setdefault(s, bit)
                return None

            return member
        if isinstance(f, L.Edge):
            a, b = self.term(f.src, scope), self.term(f.dst, scope)
            table = st.step[f.d]
            return lambda env: table[a(env)] == b(env)
        if isinstance(f, L.Not):
            a = self.compile(f.arg, scope)

            def neg(env):
                r = a(env)
                return None if r is None else not r

            return neg
        if isinstance(f, L.And):
            parts = [self.compile(a, scope) for a in f.args]

            def conj(env):
                unknown = False
                for p in parts:
                    r = p(env)
                    if r is False:
                        return False
                    if r is None:
                        unknown = True
                return None if unknown else True

            return conj
        if isinstance(f, L.Or):
            parts = [self.compile(a, scope) for a in f.args]

            def disj(env):
                unknown = False
                for p in parts:
                    r = p(env)
                    if r is True:
                        return True
                    if r is None:
                        unknown = True
                return None if unknown else False

            return disj
        if isinstance(f, L.Implies):
            a, b = self.compile(f.left, scope), self.compile(f.right, scope)

            def imp(env):
                x = a(env)
                if x is False:
                    return True
                y = b(env)
                if y is True:
                    return True
                if x is True and y is False:
                    return False
                return None

            return imp
        if isinstance(f, L.Iff):
            a, b = self.compile(f.left, scope), self.compile(f.right, scope)

            def iff(env):
                x = a(env)
                if x is None:
                    return None
                y = b(env)
                return None if y is None else x == y

            return iff
        if isinstance(f, L.Quant):
            if f.second_order:
                return self.so_block(f, scope)
            return self.fo_quant(f, scope)
        raise TypeError(f"not a formula: {f!r}")

    def fo_quant(self, f, scope):
        guard = _edge_guard(f, scope)
        s = self.slot()
        body = self.compile(f.body, {**scope, f.var: s})
        n = self.st.n
        universal = f.universal
        left = self.steps_left
        everything = range(n)
        if guard is not None:
            table, src = self.st.step[guard[0]], guard[1]

        def quant(env):
            if guard is None:
                domain = everything
            else:
                # only the neighbour can satisfy the guard
                j = table[env[src]]
                domain = () if j is None else (j,)
            left[0] -= len(domain)
            if left[0] < 0:
                raise BudgetExceeded("first-order assignment budget exhausted")
            unknown = False
            for i in domain:
                env[s] = i
                r = body(env)
                if r is None:
                    unknown = True
                elif r is not universal:
                    return r
            return None if unknown else universal

        return quant

    def so_block(self, f, scope):
        """Consecutive set quantifiers of one polarity, searched jointly."""
        if self.st.n > self.budget.max_subset_bits:
            raise BudgetExceeded(
                f"{self.st.n} cells exceed the {self.budget.max_subset_bits}-bit subset budget"
            )
        universal = f.universal
        slots = []
        scope = dict(scope)
        while isinstance(f, L.Quant) and f.second_order and f.universal == universal:
            s = self.slot()
            slots.append(s)
            scope[f.var] = s
            f = f.body
        body = self.compile(f, scope)
        full = (1 << self.st.n) - 1
        left = self.steps_left
        queried = self.queried

        def pick(env, asked):
            # branch on a bit the body actually needed, else the first open one
            for s in slots:
                if s in asked:
                    return s, asked[s]
            for s in slots:
                known = env[s][0]
                if known != full:
                    return s, (~known & full) & -(~known & full)
            return None

        def search(env):
            # the quantified value over completions of the open bits
            left[0] -= 1
            if left[0] < 0:
                raise BudgetExceeded("set-assignment budget exhausted")
            asked = queried[0] = {}
            r = body(env)
            if r is not None:
                return r
            choice = pick(env, asked)
            if choice is None:
                return None
            s, bit = choice
            known, val = env[s]
            unknown = False
            for b in (0, bit):
                env[s] = (known | bit, val | b)
                r = search(env)
                if r is None:
                    unknown = True
                elif r is not universal:
                    env[s] = (known, val)
                    return r
            env[s] = (known, val)
            return None if unknown else universal

        def block(env):
            saved = [env[s] for s in slots]
            outer = queried[0]
            for s in slots:
                env[s] = (0, 0)
            try:
                return search(env)
            finally:
                queried[0] = outer
                for s, v in zip(slots, saved):
                    env[s] = v

        return block


def _edge_guard(f, scope):
    """Find ``edgeD(v, w)`` guarding the point variable ``w`` bound by ``f``.

    Looks through the run of same-polarity point quantifiers below ``f``.  A
    universal run must end in an implication whose antecedent conjuncts
    contain the edge; an existential run must end in a conjunction holding
    it.  ``v`` has to be bound outside ``f``.  Returns ``(D, slot of v)``.
    """
    body = f.body
    while isinstance(body, L.Quant) and not body.second_order and body.universal == f.universal:
        body = body.body
    if f.universal:
        if not isinstance(body, L.Implies):
            return None
        body = body.left
    parts = list(body.args) if isinstance(body, L.And) else [body]
    for p in parts:
        if (
            isinstance(p, L.Edge)
            and p.dst == L.Var(f.var)
            and isinstance(p.src, L.Var)
            and p.src.name in scope
        ):
            return p.d, scope[p.src.name]
    return None


def _run(f, st: Structure, budget: Budget) -> bool:
    free = L.free_vars(f)
    if free:
        raise L.FormulaError(f"formula has free variables {sorted(free)}")
    comp = _Compiler(st, budget)
    fn = comp.compile(f, {})
    r = fn([None] * comp.nslots)
    assert r is not None
    return r


# ------------------------------------------------------------- public API


def eval_pattern(f, p: Pattern, budget: Budget = DEFAULT_BUDGET) -> bool:
    """Truth of a relational sentence in the finite structure of ``p``."""
    if L.has_compound_terms(f):
        raise L.FormulaError("pattern semantics needs a relational formula")
    return _run(f, pattern_structure(p), budget)


def eval_torus(f, c: PeriodicConfig, budget: Budget = DEFAULT_BUDGET) -> bool:
    """Truth of a sentence on one period of ``c`` with wrap-around."""
    return _run(f, torus_structure(c), budget)


def interaction_radius(f) -> int:
    """Twice the largest coordinate displacement of any term in ``f``."""
    r = 0
    for a in L.atoms(f):
        for t in L.atom_terms(a):
            _, off = L.term_offset(t)
            r = max(r, abs(off.x), abs(off.y))
    return 2 * r


def plane_torus_size(f, width: int, height: int) -> int:
    """Side of a square torus on which a universal FO sentence is exact.

    With ``p`` variables, displacement bound ``R`` and period ``l = lcm(w, h)``
    the side is the least multiple of ``l`` that is at least both
    ``(p + 1)(2R + 1)`` and ``2pR + (p - 1) l + 1``.  The second term leaves
    room to place ``p`` mutually far clusters at any residues modulo the
    periods without creating equalities that the plane does not have.
    """
    prefix, _ = L.prenex_parts(f)
    p = len(prefix)
    big_r = interaction_radius(f)
    lcm = math.lcm(width, height)
    need = max((p + 1) * (2 * big_r + 1), 2 * p * big_r + (p - 1) * lcm + 1, 1)
    return lcm * -(-need // lcm)


def eval_universal_periodic(f, c: PeriodicConfig, budget: Budget = DEFAULT_BUDGET) -> bool:
    """Exact plane truth value of a universal first-order sentence on ``c``."""
    if L.Fragment.UNIVERSAL_FO not in L.classify(f):
        raise L.FormulaError("eval_universal_periodic needs a universal first-order sentence")
    if L.has_edges(f):
        raise L.FormulaError("eval_universal_periodic needs a functional formula")
    side = plane_torus_size(f, c.width, c.height)
    big = c.unrolled(side // c.width, side // c.height)
    return eval_torus(L.prenex(f), big, budget)


def sft_membership(s: SFT, c: PeriodicConfig) -> bool:
    """True when no forbidden pattern of ``s`` occurs in ``c``."""
    if s.alphabet != c.alphabet:
        raise GridError("SFT and configuration use different alphabets")
    dec = s.alphabet.decode
    cells = c.fundamental_cells()
    for rule in s.rules():
        for z in cells:
            states = tuple(dec(c.at((z.x + v.x, z.y + v.y))) for v in rule.shape)
            if rule.forbids(states):
                return False
    return True


def pattern_check(f, c: PeriodicConfig, radius: int, budget: Budget = DEFAULT_BUDGET) -> CheckVerdict:
    """Look for a square pattern of ``c`` (radius ``0..radius``) falsifying ``f``.

    The formula must be in sofic form: set quantifiers of either polarity in
    front of a universal first-order part.  Square patterns of one radius are
    tried in row-major order of their position in one period.
    """
    if not _leading_so_then_universal(f):
        raise L.FormulaError("pattern_check needs set quantifiers followed by universal FO")
    rel = L.to_relational(L.prenex(f))
    for r in range(radius + 1):
        seen = set()
        for z in sorted(c.fundamental_cells(), key=row_major_key):
            sq = c.square(z, r)
            if sq in seen:
                continue
            seen.add(sq)
            if not eval_pattern(rel, sq, budget):
                return Refuted(sq, r)
    return ConsistentUpTo(radius)


def _leading_so_then_universal(f) -> bool:
    prefix, _ = L.prenex_parts(f, fuse=True, greedy=True)
    i = 0
    while i < len(prefix) and L.is_so_name(prefix[i][1]):
        i += 1
    return all(u and not L.is_so_name(v) for u, v in prefix[i:])


def satisfying_positions(f, var: str, c: PeriodicConfig, budget: Budget = DEFAULT_BUDGET) -> list[Vec2]:
    """Cells of one period of ``c`` where the one-free-variable ``f`` holds.

    Uses the torus enlarged enough that terms of ``f`` do not wrap onto
    themselves spuriously.
    """
    reach = interaction_radius(f) // 2
    mx = -(-(2 * reach + 1) // c.width)
    my = -(-(2 * reach + 1) // c.height)
    big = c.unrolled(mx, my)
    st = torus_structure(big)
    comp = _Compiler(st, budget)
    s = comp.slot()
    fn = comp.compile(f, {var: s})
    env = [None] * comp.nslots
    out = []
    for i, v in enumerate(st.cells):
        if v.x < c.width and v.y < c.height:
            env[s] = i
            if fn(env):
                out.append(v)
    return sorted(out, key=row_major_key)


__all__ = [
    "Budget",
    "BudgetExceeded",
    "ConsistentUpTo",
    "DEFAULT_BUDGET",
    "Refuted",
    "eval_pattern",
    "eval_torus",
    "eval_universal_periodic",
    "interaction_radius",
    "pattern_check",
    "plane_torus_size",
    "satisfying_positions",
    "sft_membership",
]
