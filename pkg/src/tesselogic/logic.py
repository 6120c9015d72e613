"""MSO formulas over the four-direction signature.

Concrete syntax::

    forall x. exists Y. @D(x) & !(Y(E(x)) | x = N(S(x))) -> edgeE(x, y)

Lowercase identifiers are first-order variables, uppercase-initial ones are
set (second-order) variables.  ``@name(t)`` is a color predicate and the
single letters ``N S E W`` are the direction functions.  Precedence from
tightest to loosest: ``!``, ``&``, ``|``, ``->`` (right associative),
``<->``.  A quantifier body extends as far to the right as possible.

A formula is *functional* when it contains no ``edgeD`` atoms and
*relational* when it contains no compound terms; formulas with neither are
both.
"""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Union

from .grid import DIRECTIONS, Alphabet, GridError, Vec2

DIR_LETTERS = ("N", "S", "E", "W")


class FormulaError(ValueError):
    """Syntax or well-formedness problem in a formula."""

    def __init__(self, msg, line=None, col=None):
        if line is not None:
            msg = f"{msg} (line {line}, column {col})"
        super().__init__(msg)
        self.line = line
        self.col = col


def is_fo_name(name: str) -> bool:
    return name[0].islower()


def is_so_name(name: str) -> bool:
    return name[0].isupper()


# ---------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Dir:
    d: str
    arg: "Term"


Term = Union[Var, Dir]


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Pred:
    """``@name(t)`` when ``color`` else set membership ``Name(t)``."""

    name: str
    arg: Term
    color: bool = True


@dataclass(frozen=True)
class Edge:
    d: str
    src: Var
    dst: Var


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple

    def __post_init__(self):
        if len(self.args) < 2:
            raise FormulaError("And needs at least two operands; use conj()")


@dataclass(frozen=True)
class Or:
    args: tuple

    def __post_init__(self):
        if len(self.args) < 2:
            raise FormulaError("Or needs at least two operands; use disj()")


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Quant:
    universal: bool
    var: str
    body: "Formula"

    @property
    def second_order(self) -> bool:
        return is_so_name(self.var)


Formula = Union[Const, Eq, Pred, Edge, Not, And, Or, Implies, Iff, Quant]
ATOMS = (Const, Eq, Pred, Edge)
TRUE = Const(True)
FALSE = Const(False)


def forall(var: str, body) -> Quant:
    return Quant(True, var, body)


def exists(var: str, body) -> Quant:
    return Quant(False, var, body)


def forall_all(names: Iterable[str], body):
    for v in reversed(list(names)):
        body = Quant(True, v, body)
    return body


def exists_all(names: Iterable[str], body):
    for v in reversed(list(names)):
        body = Quant(False, v, body)
    return body


def conj(items: Iterable) -> Formula:
    items = tuple(items)
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else And(items)


def disj(items: Iterable) -> Formula:
    items = tuple(items)
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else Or(items)


def neq(a: Term, b: Term) -> Formula:
    return Not(Eq(a, b))


def color(name: str, t: Term) -> Pred:
    return Pred(name, t, True)


def member(name: str, t: Term) -> Pred:
    return Pred(name, t, False)


# -------------------------------------------------------------------- terms


def make_term(var: str, offset) -> Term:
    """Term reaching ``var + offset``: east/west moves innermost, then north/south."""
    t: Term = Var(var)
    dx, dy = offset
    for _ in range(abs(dx)):
        t = Dir("E" if dx > 0 else "W", t)
    for _ in range(abs(dy)):
        t = Dir("N" if dy > 0 else "S", t)
    return t


def term_offset(t: Term) -> tuple[str, Vec2]:
    """Base variable and net displacement of a functional term."""
    dx = dy = 0
    while isinstance(t, Dir):
        v = DIRECTIONS[t.d]
        dx += v.x
        dy += v.y
        t = t.arg
    return t.name, Vec2(dx, dy)


def term_depth(t: Term) -> int:
    n = 0
    while isinstance(t, Dir):
        n += 1
        t = t.arg
    return n


def term_var(t: Term) -> str:
    while isinstance(t, Dir):
        t = t.arg
    return t.name


# ------------------------------------------------------------------ walking


def children(f) -> tuple:
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Implies, Iff)):
        return (f.left, f.right)
    if isinstance(f, Quant):
        return (f.body,)
    return ()


def rebuild(f, kids):
    if isinstance(f, Not):
        return Not(kids[0])
    if isinstance(f, And):
        return And(tuple(kids))
    if isinstance(f, Or):
        return Or(tuple(kids))
    if isinstance(f, Implies):
        return Implies(*kids)
    if isinstance(f, Iff):
        return Iff(*kids)
    if isinstance(f, Quant):
        return Quant(f.universal, f.var, kids[0])
    return f


def iter_nodes(f):
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def atoms(f) -> list:
    return [g for g in iter_nodes(f) if isinstance(g, ATOMS)]


def atom_terms(a) -> tuple:
    if isinstance(a, Eq):
        return (a.left, a.right)
    if isinstance(a, Pred):
        return (a.arg,)
    if isinstance(a, Edge):
        return (a.src, a.dst)
    return ()


def map_atoms(f, fn):
    """Rebuild ``f`` with ``fn`` applied to every atom."""
    if isinstance(f, ATOMS):
        return fn(f)
    return rebuild(f, [map_atoms(k, fn) for k in children(f)])


def colors_used(f) -> set[str]:
    return {a.name for a in atoms(f) if isinstance(a, Pred) and a.color}


def is_quantifier_free(f) -> bool:
    return not any(isinstance(g, Quant) for g in iter_nodes(f))


def has_compound_terms(f) -> bool:
    return any(isinstance(t, Dir) for a in atoms(f) for t in atom_terms(a))


def has_edges(f) -> bool:
    return any(isinstance(a, Edge) for a in atoms(f))


def is_relational(f) -> bool:
    return not has_compound_terms(f)


def is_functional(f) -> bool:
    return not has_edges(f)


def free_vars(f) -> set[str]:
    if isinstance(f, Quant):
        return free_vars(f.body) - {f.var}
    if isinstance(f, ATOMS):
        out = {term_var(t) for t in atom_terms(f)}
        if isinstance(f, Pred) and not f.color:
            out.add(f.name)
        return out
    out = set()
    for k in children(f):
        out |= free_vars(k)
    return out


def all_var_names(f) -> set[str]:
    names = set()
    for g in iter_nodes(f):
        if isinstance(g, Quant):
            names.add(g.var)
        elif isinstance(g, ATOMS):
            names |= {term_var(t) for t in atom_terms(g)}
            if isinstance(g, Pred) and not g.color:
                names.add(g.name)
    return names


def check_wellformed(f) -> None:
    """Reject shadowed binders and mixed functional/relational atoms."""

    def walk(g, bound):
        if isinstance(g, Quant):
            if g.var in bound:
                raise FormulaError(f"variable {g.var!r} bound twice on one path")
            walk(g.body, bound | {g.var})
        else:
            for k in children(g):
                walk(k, bound)

    walk(f, frozenset())
    if has_edges(f) and has_compound_terms(f):
        raise FormulaError("formula mixes edge atoms with direction functions")


def _subst_term(t: Term, mapping) -> Term:
    if isinstance(t, Var):
        return Var(mapping.get(t.name, t.name))
    return Dir(t.d, _subst_term(t.arg, mapping))


def rename_vars(f, mapping: dict):
    """Rename free occurrences of variables (both sorts) by ``mapping``."""
    if not mapping:
        return f
    if isinstance(f, Quant):
        if f.var in mapping:
            mapping = {k: v for k, v in mapping.items() if k != f.var}
        return Quant(f.universal, f.var, rename_vars(f.body, mapping))
    if isinstance(f, Eq):
        return Eq(_subst_term(f.left, mapping), _subst_term(f.right, mapping))
    if isinstance(f, Pred):
        name = f.name if f.color else mapping.get(f.name, f.name)
        return Pred(name, _subst_term(f.arg, mapping), f.color)
    if isinstance(f, Edge):
        return Edge(f.d, _subst_term(f.src, mapping), _subst_term(f.dst, mapping))
    if isinstance(f, Const):
        return f
    return rebuild(f, [rename_vars(k, mapping) for k in children(f)])


def substitute_atoms(f, mapping: dict):
    """Replace atoms equal to a key of ``mapping`` by the mapped formula."""
    return map_atoms(f, lambda a: mapping.get(a, a))


class FreshNames:
    """Deterministic fresh-name supply, one counter per variable sort."""

    def __init__(self, avoid: Iterable[str] = (), fo_prefix="x", so_prefix="X"):
        # direction letters are not usable as variable names
        self.avoid = set(avoid) | set(DIR_LETTERS)
        self.prefix = {False: fo_prefix, True: so_prefix}
        self.count = {False: 0, True: 0}

    def take(self, second_order: bool = False, prefix: str | None = None) -> str:
        base = prefix or self.prefix[second_order]
        while True:
            self.count[second_order] += 1
            name = f"{base}{self.count[second_order]}"
            if name not in self.avoid:
                self.avoid.add(name)
                return name

    def fresh_like(self, base: str) -> str:
        """``base`` itself if unused, else ``base1``, ``base2``..."""
        if base not in self.avoid:
            self.avoid.add(base)
            return base
        i = 1
        while f"{base}{i}" in self.avoid:
            i += 1
        self.avoid.add(f"{base}{i}")
        return f"{base}{i}"


def alpha_normal(f):
    """Rename bound variables to canonical positional names."""
    counter = itertools.count()

    def walk(g, mapping):
        if isinstance(g, Quant):
            new = ("X" if g.second_order else "x") + f"#{next(counter)}"
            return Quant(g.universal, new, walk(g.body, {**mapping, g.var: new}))
        if isinstance(g, ATOMS):
            return rename_vars(g, mapping)
        return rebuild(g, [walk(k, mapping) for k in children(g)])

    return walk(f, {})


def alpha_equivalent(f, g) -> bool:
    return alpha_normal(f) == alpha_normal(g)


# ------------------------------------------------------------------ printer

_PREC = {Quant: 0, Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5}


def _prec(f) -> int:
    return _PREC.get(type(f), 6)


def term_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    return f"{t.d}({term_str(t.arg)})"


def to_str(f) -> str:
    """Concrete syntax for ``f``; parsing the result gives back ``f``."""

    def wrap(g, paren):
        s = to_str(g)
        return f"({s})" if paren else s

    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Eq):
        return f"{term_str(f.left)} = {term_str(f.right)}"
    if isinstance(f, Pred):
        return f"{'@' if f.color else ''}{f.name}({term_str(f.arg)})"
    if isinstance(f, Edge):
        return f"edge{f.d}({f.src.name},{f.dst.name})"
    if isinstance(f, Not):
        return "!" + wrap(f.arg, _prec(f.arg) < 5)
    if isinstance(f, And):
        return " & ".join(wrap(a, _prec(a) <= 4) for a in f.args)
    if isinstance(f, Or):
        return " | ".join(wrap(a, _prec(a) <= 3) for a in f.args)
    if isinstance(f, Implies):
        return f"{wrap(f.left, _prec(f.left) <= 2)} -> {wrap(f.right, _prec(f.right) < 2)}"
    if isinstance(f, Iff):
        return f"{wrap(f.left, _prec(f.left) <= 1)} <-> {wrap(f.right, _prec(f.right) <= 1)}"
    if isinstance(f, Quant):
        return f"{'forall' if f.universal else 'exists'} {f.var}. {to_str(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------------------------- parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<op><->|->|[()!&|=.,])
  | (?P<color>@[A-Za-z0-9_]+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


_EDGE_RE = re.compile(r"edge([NSEW])$")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return FormulaError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise self.error(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def parse(self):
        f = self.iff()
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().text!r}")
        return f

    def iff(self):
        left = self.imp()
        if self.peek().text == "<->":
            self.next()
            right = self.imp()
            if self.peek().text == "<->":
                raise self.error("chained '<->' is ambiguous; add parentheses")
            return Iff(left, right)
        return left

    def imp(self):
        left = self.disj()
        if self.peek().text == "->":
            self.next()
            return Implies(left, self.imp())
        return left

    def disj(self):
        items = [self.conj()]
        while self.peek().text == "|":
            self.next()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self):
        items = [self.unary()]
        while self.peek().text == "&":
            self.next()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self):
        t = self.peek()
        if t.text == "!":
            self.next()
            return Not(self.unary())
        if t.kind == "ident" and t.text in ("forall", "exists"):
            self.next()
            v = self.next()
            if v.kind != "ident" or v.text in ("forall", "exists", "true", "false"):
                raise self.error("expected a variable after quantifier", v)
            if v.text in DIR_LETTERS or _EDGE_RE.match(v.text):
                raise self.error(f"{v.text!r} is reserved", v)
            self.expect(".")
            return Quant(t.text == "forall", v.text, self.iff())
        return self.primary()

    def term(self) -> Term:
        t = self.next()
        if t.kind != "ident":
            raise self.error("expected a term", t)
        if t.text in DIR_LETTERS:
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return Dir(t.text, arg)
        if not is_fo_name(t.text) or t.text in ("true", "false", "forall", "exists"):
            raise self.error(f"{t.text!r} is not a first-order variable", t)
        if _EDGE_RE.match(t.text):
            raise self.error(f"{t.text!r} is reserved", t)
        return Var(t.text)

    def primary(self):
        t = self.peek()
        if t.text == "(":
            self.next()
            f = self.iff()
            self.expect(")")
            return f
        if t.kind == "color":
            self.next()
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return Pred(t.text[1:], arg, True)
        if t.kind == "ident":
            if t.text in ("true", "false"):
                self.next()
                return Const(t.text == "true")
            m = _EDGE_RE.match(t.text)
            if m:
                self.next()
                self.expect("(")
                a = self.term()
                self.expect(",")
                b = self.term()
                self.expect(")")
                if not (isinstance(a, Var) and isinstance(b, Var)):
                    raise self.error("edge atoms take variables, not compound terms", t)
                return Edge(m.group(1), a, b)
            if is_so_name(t.text) and t.text not in DIR_LETTERS:
                self.next()
                self.expect("(")
                arg = self.term()
                self.expect(")")
                return Pred(t.text, arg, False)
            left = self.term()
            self.expect("=")
            return Eq(left, self.term())
        raise self.error(f"unexpected {t.text or 'end of input'!r}")


def parse(text: str, alphabet: Alphabet | None = None):
    """Parse concrete syntax; colors are checked against ``alphabet`` if given."""
    f = _Parser(text).parse()
    check_wellformed(f)
    if alphabet is not None:
        for name in sorted(colors_used(f)):
            if name not in alphabet:
                raise FormulaError(f"unknown color {name!r}")
    return f


# ------------------------------------------------------------------ prenex


def _uniquify(f, counter):
    """Rename every bound variable to a unique internal name."""

    def walk(g, mapping):
        if isinstance(g, Quant):
            new = ("X#" if g.second_order else "x#") + str(next(counter))
            return Quant(g.universal, new, walk(g.body, {**mapping, g.var: new}))
        if isinstance(g, ATOMS):
            return rename_vars(g, mapping)
        return rebuild(g, [walk(k, mapping) for k in children(g)])

    return walk(f, {})


_RANK = {(False, True): 0, (True, True): 1, (True, False): 2, (False, False): 3}


def _merge(p1, p2, m2, fuse_universal, fuse, greedy):
    """Merge two independent prefixes; optionally fuse equal leading quantifiers."""
    if not greedy:
        return p1 + p2, m2
    out, i, j = [], 0, 0
    while i < len(p1) and j < len(p2):
        (u1, v1), (u2, v2) = p1[i], p2[j]
        if fuse and u1 == u2 == fuse_universal and is_so_name(v1) == is_so_name(v2):
            m2 = rename_vars(m2, {v2: v1})
            out.append(p1[i])
            i += 1
            j += 1
            continue
        r1 = _RANK[(u1, is_so_name(v1))]
        r2 = _RANK[(u2, is_so_name(v2))]
        if r1 <= r2:
            out.append(p1[i])
            i += 1
        else:
            out.append(p2[j])
            j += 1
    return out + p1[i:] + p2[j:], m2


def _pnf(f, counter, fuse, greedy):
    if isinstance(f, ATOMS):
        return [], f
    if isinstance(f, Quant):
        p, m = _pnf(f.body, counter, fuse, greedy)
        return [(f.universal, f.var)] + p, m
    if isinstance(f, Not):
        p, m = _pnf(f.arg, counter, fuse, greedy)
        return [(not u, v) for u, v in p], Not(m)
    if isinstance(f, (And, Or)):
        fuse_u = isinstance(f, And)
        prefix, mats = [], []
        for a in f.args:
            p, m = _pnf(a, counter, fuse, greedy)
            prefix, m = _merge(prefix, p, m, fuse_u, fuse, greedy)
            mats.append(m)
        return prefix, type(f)(tuple(mats))
    if isinstance(f, Implies):
        pa, ma = _pnf(f.left, counter, fuse, greedy)
        pb, mb = _pnf(f.right, counter, fuse, greedy)
        pa = [(not u, v) for u, v in pa]
        prefix, mb = _merge(pa, pb, mb, False, fuse, greedy)
        return prefix, Implies(ma, mb)
    if isinstance(f, Iff):
        if is_quantifier_free(f.left) and is_quantifier_free(f.right):
            return [], f
        a2 = _uniquify_fresh(f.left, counter)
        b2 = _uniquify_fresh(f.right, counter)
        return _pnf(And((Implies(f.left, f.right), Implies(b2, a2))), counter, fuse, greedy)
    raise TypeError(f"not a formula: {f!r}")


def _uniquify_fresh(f, counter):
    # copies under <-> need their own binder names
    return _uniquify(f, counter)


def prenex_parts(f, fuse: bool = False, greedy: bool = False):
    """Return ``(prefix, matrix)`` with prefix entries ``(universal, var)``.

    Bound variables are renamed ``x1, x2, ...`` / ``X1, X2, ...`` in prefix
    order.  ``greedy`` interleaves independent prefixes putting existential
    set quantifiers first; ``fuse`` merges parallel universal (under ``&``)
    or existential (under ``|``) quantifiers of the same sort.
    """
    counter = itertools.count()
    free = free_vars(f)
    g = _uniquify(f, counter)
    prefix, matrix = _pnf(g, counter, fuse, greedy)
    names = FreshNames(avoid=free | colors_used(f))
    mapping, out = {}, []
    for u, v in prefix:
        new = names.take(is_so_name(v))
        mapping[v] = new
        out.append((u, new))
    return out, rename_vars(matrix, mapping)


def build_prefixed(prefix, matrix):
    for u, v in reversed(prefix):
        matrix = Quant(u, v, matrix)
    return matrix


def prenex(f):
    """Equivalent prenex formula; quantifiers keep their left-to-right order."""
    return build_prefixed(*prenex_parts(f))


def split_prefix(f):
    """Peel the leading quantifier block of an already-prenex formula."""
    prefix = []
    while isinstance(f, Quant):
        prefix.append((f.universal, f.var))
        f = f.body
    return prefix, f


def is_prenex(f) -> bool:
    return is_quantifier_free(split_prefix(f)[1])


# ------------------------------------------------------------ classification


class Fragment(enum.Flag):
    NONE = 0
    QUANTIFIER_FREE = enum.auto()
    THEOREM6 = enum.auto()
    UNIVERSAL_FO = enum.auto()
    UNIVERSAL_MSO = enum.auto()
    CFORM = enum.auto()
    SOFIC_FORM = enum.auto()
    THEOREM5 = enum.auto()
    EMSO = enum.auto()
    FO = enum.auto()
    MSO = enum.auto()


def _theorem5_shape(f) -> bool:
    """``exists X.. ((forall z. qf) & (exists z1..zp. qf))`` up to conjunct order."""
    while isinstance(f, Quant) and f.second_order and not f.universal:
        f = f.body
    parts = list(f.args) if isinstance(f, And) else [f]
    n_forall = 0
    for part in parts:
        if isinstance(part, And):
            if not _theorem5_shape(part):
                return False
            continue
        while isinstance(part, Quant) and part.second_order and not part.universal:
            part = part.body
        if isinstance(part, Quant) and part.universal and not part.second_order:
            n_forall += 1
            body = part.body
        else:
            body = part
            while isinstance(body, Quant) and not body.universal and not body.second_order:
                body = body.body
        if not is_quantifier_free(body):
            return False
    return True


def classify(f) -> Fragment:
    """Syntactic fragment flags of a closed formula (on its prenex form)."""
    prefix, _ = prenex_parts(f, fuse=True, greedy=True)
    flags = Fragment.MSO
    so = [(u, is_so_name(v)) for u, v in prefix]
    if not prefix:
        flags |= Fragment.QUANTIFIER_FREE
    if not any(s for _, s in so):
        flags |= Fragment.FO
    if all(u for u, _ in so):
        flags |= Fragment.UNIVERSAL_MSO
        if not any(s for _, s in so):
            flags |= Fragment.UNIVERSAL_FO
            if len(so) == 1:
                flags |= Fragment.THEOREM6
    lead = 0
    while lead < len(so) and so[lead] == (False, True):
        lead += 1
    rest = so[lead:]
    if not any(s for _, s in rest):
        flags |= Fragment.EMSO
        if all(u for u, _ in rest):
            flags |= Fragment.SOFIC_FORM
            if len(rest) == 1:
                flags |= Fragment.CFORM
    if Fragment.CFORM in flags or _theorem5_shape(f):
        flags |= Fragment.THEOREM5
    return flags


def fragment_names(flags: Fragment) -> list[str]:
    return [m.name for m in Fragment if m.value and m in flags]


# ------------------------------------------------------- relational unfolding


def to_relational(f):
    """Replace direction functions by edge relations, staying universal.

    Every compound term gets a fresh variable ``w`` bound universally at the
    end of the prefix; each top-level conjunct of the matrix is guarded by
    the edge atoms defining the fresh variables it uses.
    """
    if not is_functional(f):
        if has_compound_terms(f):
            raise FormulaError("formula mixes edge atoms with direction functions")
        return f
    prefix, matrix = split_prefix(f)
    if not is_quantifier_free(matrix):
        raise FormulaError("to_relational expects a prenex formula")
    if not has_compound_terms(matrix):
        return f
    names = FreshNames(avoid=all_var_names(f), fo_prefix="w")
    var_of: dict = {}
    edge_of: dict = {}
    order: list = []

    def unfold(t: Term) -> str:
        if isinstance(t, Var):
            return t.name
        if t not in var_of:
            inner = unfold(t.arg)
            w = names.take(False)
            var_of[t] = w
            edge_of[t] = Edge(t.d, Var(inner), Var(w))
            order.append(t)
        return var_of[t]

    def needed(g) -> list:
        seen = []
        for a in atoms(g):
            for t in atom_terms(a):
                while isinstance(t, Dir):
                    if t not in seen:
                        seen.append(t)
                    t = t.arg
        return seen

    def replace(a):
        if isinstance(a, Eq):
            return Eq(Var(unfold(a.left)), Var(unfold(a.right)))
        if isinstance(a, Pred):
            return Pred(a.name, Var(unfold(a.arg)), a.color)
        return a

    conjuncts = list(matrix.args) if isinstance(matrix, And) else [matrix]
    # allocate fresh names in order of first appearance
    for c in conjuncts:
        for a in atoms(c):
            for t in atom_terms(a):
                unfold(t)
    out = []
    for c in conjuncts:
        terms = needed(c)
        body = map_atoms(c, replace)
        if terms:
            ts = [t for t in order if t in terms]
            body = Implies(conj(edge_of[t] for t in ts), body)
        out.append(body)
    new_matrix = conj(out)
    return build_prefixed(prefix + [(True, var_of[t]) for t in order], new_matrix)


# -------------------------------------------------------------- simplifier


def simplify(f):
    """Constant folding plus removal of duplicate conjuncts/disjuncts."""
    if isinstance(f, Eq):
        return TRUE if f.left == f.right else f
    if isinstance(f, ATOMS):
        return f
    if isinstance(f, Quant):
        return Quant(f.universal, f.var, simplify(f.body))
    if isinstance(f, Not):
        a = simplify(f.arg)
        if isinstance(a, Const):
            return Const(not a.value)
        if isinstance(a, Not):
            return a.arg
        return Not(a)
    if isinstance(f, (And, Or)):
        unit = isinstance(f, And)
        out = []
        for a in (simplify(x) for x in f.args):
            if isinstance(a, Const):
                if a.value != unit:
                    return Const(not unit)
                continue
            if a not in out:
                out.append(a)
        return (conj if unit else disj)(out)
    if isinstance(f, Implies):
        a, b = simplify(f.left), simplify(f.right)
        if a == FALSE or b == TRUE or a == b:
            return TRUE
        if a == TRUE:
            return b
        if b == FALSE:
            return simplify(Not(a))
        return Implies(a, b)
    if isinstance(f, Iff):
        a, b = simplify(f.left), simplify(f.right)
        if a == b:
            return TRUE
        if isinstance(a, Const):
            a, b = b, a
        if isinstance(b, Const):
            return a if b.value else simplify(Not(a))
        return Iff(a, b)
    raise TypeError(f"not a formula: {f!r}")


def check_colors(f, alphabet: Alphabet) -> None:
    for name in colors_used(f):
        if name not in alphabet:
            raise GridError(f"formula uses color {name!r} outside {alphabet!r}")
