"""Doubly-marked sets of finite type and the constructions built from them.

A marked set is an SFT together with two state sets; its configurations are
those containing at least one state of each set.  The counting tileset
below realizes "exactly k" (or "at least k") occurrences of a pattern as
the projection of such a set, using nearest-neighbour flag layers only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from .grid import (
    Alphabet,
    GridError,
    LayeredAlphabet,
    Pattern,
    ProjectionMap,
    Rule,
    RuleSFT,
    SFT,
    Vec2,
    canonicalize,
    read_sft_sections,
    dump_sft,
    _read_projection,
    dump_projection,
)
from .logic import Pred, Var, conj, disj, exists
from .translate import EXACT, AT_LEAST, formula_of_sft, prop1_backward

EAST = Vec2(1, 0)
NORTH = Vec2(0, 1)
ORIGIN = Vec2(0, 0)

# row flags: south of / on / north of the flagged row
SOUTH, ON, ABOVE = 0, 1, 2
ROW_VALUES = ("s", "f", "n")
# column flags: west of / on / east of the flagged column
WEST, EASTOF = 0, 2
COL_VALUES = ("w", "f", "e")
# allowed (lower, upper) or (west, east) flag pairs: one flip per line
_STEPS = frozenset({(SOUTH, SOUTH), (SOUTH, ON), (ON, ABOVE), (ABOVE, ABOVE)})


class StateSet:
    """A set of base states given by a test on a few layers of the decoded state."""

    def __init__(self, layers: Sequence[int], test: Callable, label: str = ""):
        self.layers = tuple(layers)
        self.test = test
        self.label = label

    @classmethod
    def of_colors(cls, alphabet: Alphabet, names) -> "StateSet":
        idx = frozenset(alphabet.index(n) for n in names)
        if not idx:
            raise GridError("marker set must be non-empty")
        enc = alphabet.encode
        nl = len(alphabet.layer_sizes)
        return cls(tuple(range(nl)), lambda st: enc(st) in idx, " ".join(sorted(names)))

    def contains(self, alphabet: Alphabet, color: int) -> bool:
        return bool(self.test(alphabet.decode(color)))

    def members(self, alphabet: Alphabet) -> list[int]:
        return [c for c in range(len(alphabet)) if self.contains(alphabet, c)]


@dataclass
class MarkedSFT:
    base: SFT
    q0: StateSet
    q1: StateSet
    proj: ProjectionMap
    # search hint: layers to branch on first (markers before decorations)
    layer_order: tuple | None = None
    # layers the projection reads; None means all of them
    proj_layers: tuple | None = None

    def __post_init__(self):
        if self.proj.source != self.base.alphabet:
            raise GridError("projection source differs from the base alphabet")

    @property
    def target(self) -> Alphabet:
        return self.proj.target

    def projection_layers(self) -> tuple:
        if self.proj_layers is not None:
            return self.proj_layers
        return tuple(range(len(self.base.alphabet.layer_sizes)))


# ------------------------------------------------------------ rule helpers


def _layers_of(alphabet: Alphabet) -> list[tuple[str, tuple]]:
    if isinstance(alphabet, LayeredAlphabet):
        return list(alphabet.layers)
    return [("color", tuple(alphabet.colors))]


def _rule(shape, layers, forbids, label) -> Rule:
    return Rule(tuple(shape), tuple(sorted(set(layers))), forbids, label)


def _line_rules(layer: int, values_label: str) -> list[Rule]:
    """One flip per column (row flag) or per row (column flag) and constancy across."""
    if values_label == "row":
        along, across = NORTH, EAST
    else:
        along, across = EAST, NORTH
    return [
        _rule(
            (ORIGIN, across),
            (layer,),
            lambda st, l=layer: st[0][l] != st[1][l],
            f"layer {layer} constant",
        ),
        _rule(
            (ORIGIN, along),
            (layer,),
            lambda st, l=layer: (st[0][l], st[1][l]) not in _STEPS,
            f"layer {layer} monotone",
        ),
    ]


class _Zone:
    """Zone predicates read from the four marker flag layers of one cell."""

    def __init__(self, v0: int, h0: int, v1: int, h1: int):
        self.v0, self.h0, self.v1, self.h1 = v0, h0, v1, h1
        self.layers = (v0, h0, v1, h1)

    @staticmethod
    def _between(a, b):
        return a == ON or b == ON or {a, b} == {SOUTH, ABOVE}

    def inside(self, st) -> bool:
        return self._between(st[self.v0], st[self.v1]) and self._between(st[self.h0], st[self.h1])

    def top(self, st) -> bool:
        a, b = st[self.v0], st[self.v1]
        return (a == ON and b != SOUTH) or (b == ON and a != SOUTH)

    def bottom(self, st) -> bool:
        a, b = st[self.v0], st[self.v1]
        return (a == ON and b != ABOVE) or (b == ON and a != ABOVE)

    def east(self, st) -> bool:
        a, b = st[self.h0], st[self.h1]
        return (a == ON and b != WEST) or (b == ON and a != WEST)

    def west(self, st) -> bool:
        a, b = st[self.h0], st[self.h1]
        return (a == ON and b != EASTOF) or (b == ON and a != EASTOF)

    def marker(self, m: int):
        v, h = (self.v0, self.h0) if m == 0 else (self.v1, self.h1)
        return StateSet((v, h), lambda st: st[v] == ON and st[h] == ON, f"marker{m}")

    def rules(self) -> list[Rule]:
        out = []
        for layer, kind in zip(self.layers, ("row", "col", "row", "col")):
            out += _line_rules(layer, kind)
        return out


def _marker_layers(prefix: str = "") -> list[tuple[str, tuple]]:
    return [
        (prefix + "v0", ROW_VALUES),
        (prefix + "h0", COL_VALUES),
        (prefix + "v1", ROW_VALUES),
        (prefix + "h1", COL_VALUES),
    ]


def _pattern_shape(p: Pattern):
    """Canonical translate of ``p`` plus the anchor cell, anchor first."""
    canon, _ = canonicalize(p)
    cells = canon.sorted_cells()
    shape = [ORIGIN] + [v for v in cells if v != ORIGIN]
    values = [canon.get(v) for v in shape]
    return shape, values


# -------------------------------------------------------- counting tileset


def counting_marked_sft(p: Pattern, k: int, mode: str = EXACT) -> MarkedSFT:
    """Marked SFT whose projection holds exactly (or at least) ``k`` occurrences of ``p``.

    Two marker cells span a rectangular zone.  Counter ``i`` places a single
    cell (one flagged row crossed with one flagged column) that is pinned
    inside the zone by the zone's border, sits on an occurrence of ``p``,
    and differs from the other counters.  Every occurrence inside the zone
    carries a counter; in exact mode no occurrence lies outside.
    """
    if not p:
        raise GridError("pattern must be non-empty")
    if k < 0:
        raise ValueError("k must be non-negative")
    if mode not in (EXACT, AT_LEAST):
        raise ValueError(f"unknown mode {mode!r}")
    target = p.alphabet
    layers = [("color", tuple(target.colors))] + _marker_layers()
    for i in range(1, k + 1):
        layers += [(f"cv{i}", ROW_VALUES), (f"ch{i}", COL_VALUES)]
    alphabet = LayeredAlphabet(layers)
    zone = _Zone(1, 2, 3, 4)
    counters = [(5 + 2 * i, 6 + 2 * i) for i in range(k)]
    rules = zone.rules()

    for cv, ch in counters:
        rules += _line_rules(cv, "row") + _line_rules(ch, "col")
        rules.append(
            _rule(
                (ORIGIN,),
                zone.layers + (cv, ch),
                lambda st, cv=cv, ch=ch: zone.inside(st[0]) and not _pinned(zone, st[0], cv, ch),
                "counter pinned by zone border",
            )
        )
    for (a, b), (c, d) in itertools.combinations(counters, 2):
        rules.append(
            _rule(
                (ORIGIN,),
                (a, b, c, d),
                lambda st, a=a, b=b, c=c, d=d: st[0][a] == ON and st[0][b] == ON and st[0][c] == ON and st[0][d] == ON,
                "counters distinct",
            )
        )

    shape, values = _pattern_shape(p)

    def occurs(st):
        return all(s[0] == val for s, val in zip(st, values) if val is not None)

    for cv, ch in counters:
        rules.append(
            _rule(
                shape,
                (0, cv, ch),
                lambda st, cv=cv, ch=ch: st[0][cv] == ON and st[0][ch] == ON and not occurs(st),
                "counter on occurrence",
            )
        )
    covered = tuple(l for pair in counters for l in pair)
    rules.append(
        _rule(
            shape,
            (0,) + zone.layers + covered,
            lambda st: occurs(st)
            and zone.inside(st[0])
            and not any(st[0][cv] == ON and st[0][ch] == ON for cv, ch in counters),
            "occurrence in zone counted",
        )
    )
    if mode == EXACT:
        rules.append(
            _rule(shape, (0,) + zone.layers, lambda st: occurs(st) and not zone.inside(st[0]), "occurrence inside zone")
        )

    base = RuleSFT(alphabet, rules)
    proj = ProjectionMap.computed(alphabet, target, lambda c: alphabet.decode(c)[0])
    order = zone.layers + covered + (0,)
    return MarkedSFT(base, zone.marker(0), zone.marker(1), proj, order, (0,))


def _pinned(zone: _Zone, st, cv: int, ch: int) -> bool:
    if zone.top(st) and st[cv] == SOUTH:
        return False
    if zone.bottom(st) and st[cv] == ABOVE:
        return False
    if zone.east(st) and st[ch] == WEST:
        return False
    if zone.west(st) and st[ch] == EASTOF:
        return False
    return True


# --------------------------------------------------------- embedding helpers


class _Component:
    """A marked SFT's layers placed at ``offset`` inside a larger product."""

    def __init__(self, m: MarkedSFT, offset: int):
        self.m = m
        self.offset = offset
        self.layers = _layers_of(m.base.alphabet)
        self.n = len(self.layers)
        self.alphabet = m.base.alphabet

    def sub(self, st):
        return st[self.offset:self.offset + self.n]

    def lift(self, layers):
        return tuple(l + self.offset for l in layers)

    def color(self, st) -> int:
        return self.alphabet.encode(self.sub(st))

    def rules(self, guard: Callable | None = None, guard_layers=()) -> list[Rule]:
        out = []
        for r in self.m.base.rules():
            def forbids(states, r=r):
                if guard is not None and not all(guard(s) for s in states):
                    return False
                return r.forbids(tuple(self.sub(s) for s in states))

            out.append(_rule(r.shape, self.lift(r.layers) + tuple(guard_layers), forbids, r.label))
        return out

    def state_set(self, s: StateSet) -> StateSet:
        return StateSet(self.lift(s.layers), lambda st: s.test(self.sub(st)), s.label)


def _check_targets(m1: MarkedSFT, m2: MarkedSFT) -> None:
    if m1.target != m2.target:
        raise GridError("marked sets project to different alphabets")


def _renamed(layers, prefix: str):
    return [(prefix + name, values) for name, values in layers]


def _hint(c: _Component):
    order = c.m.layer_order or tuple(range(c.n))
    return c.lift(order)


def union_marked(m1: MarkedSFT, m2: MarkedSFT) -> MarkedSFT:
    """Marked SFT projecting onto the union of the two projections.

    A constant tag layer selects the active component; the other
    component's layers are held at their first value.
    """
    _check_targets(m1, m2)
    a = _Component(m1, 1)
    b = _Component(m2, 1 + len(_layers_of(m1.base.alphabet)))
    layers = [("tag", ("a", "b"))] + _renamed(a.layers, "a_") + _renamed(b.layers, "b_")
    alphabet = LayeredAlphabet(layers)
    a_layers = a.lift(range(a.n))
    b_layers = b.lift(range(b.n))
    rules = [
        _rule((ORIGIN,), (0, l), lambda st, l=l, tag=tag: st[0][0] == tag and st[0][l] != 0, "inactive component")
        for tag, idle in ((0, b_layers), (1, a_layers))
        for l in idle
    ]
    rules += [
        _rule((ORIGIN, EAST), (0,), lambda st: st[0][0] != st[1][0], "tag constant"),
        _rule((ORIGIN, NORTH), (0,), lambda st: st[0][0] != st[1][0], "tag constant"),
    ]
    rules += a.rules(lambda s: s[0] == 0, (0,))
    rules += b.rules(lambda s: s[0] == 1, (0,))

    def either(sa: StateSet, sb: StateSet, label):
        la, lb = a.state_set(sa), b.state_set(sb)
        return StateSet(
            (0,) + la.layers + lb.layers,
            lambda st: la.test(st) if st[0] == 0 else lb.test(st),
            label,
        )

    def project(c):
        st = alphabet.decode(c)
        return m1.proj(a.color(st)) if st[0] == 0 else m2.proj(b.color(st))

    proj = ProjectionMap.computed(alphabet, m1.target, project)
    order = (0,) + _hint(a) + _hint(b)
    return MarkedSFT(
        RuleSFT(alphabet, rules),
        either(m1.q0, m2.q0, "q0"),
        either(m1.q1, m2.q1, "q1"),
        proj,
        order,
        (0,) + a.lift(m1.projection_layers()) + b.lift(m2.projection_layers()),
    )


def fiber_size(m1: MarkedSFT, m2: MarkedSFT) -> int:
    _check_targets(m1, m2)
    return sum(
        len(m1.proj.preimage(t)) * len(m2.proj.preimage(t)) for t in range(len(m1.target))
    )


def intersect_marked(m1: MarkedSFT, m2: MarkedSFT) -> MarkedSFT:
    """Marked SFT projecting onto the intersection of the two projections.

    Cells carry a state of each component with equal projections.  A fresh
    zone must contain the four marker requirements; per requirement, a row
    bit accumulates sightings from the zone's west border eastward and a
    column bit accumulates those row bits from the bottom border northward,
    so the zone's north-east corner sees every requirement.
    """
    _check_targets(m1, m2)
    if fiber_size(m1, m2) == 0:
        raise GridError("fiber product is empty")
    a = _Component(m1, 0)
    b = _Component(m2, a.n)
    zoff = a.n + b.n
    needs = [a.state_set(m1.q0), a.state_set(m1.q1), b.state_set(m2.q0), b.state_set(m2.q1)]
    layers = _renamed(a.layers, "a_") + _renamed(b.layers, "b_") + _marker_layers("z")
    bits = []
    for j in range(len(needs)):
        row_bit = zoff + 4 + 2 * j
        bits.append((row_bit, row_bit + 1))
        layers += [(f"row{j}", ("0", "1")), (f"col{j}", ("0", "1"))]
    alphabet = LayeredAlphabet(layers)
    zone = _Zone(zoff, zoff + 1, zoff + 2, zoff + 3)

    a_layers = a.lift(range(a.n))
    b_layers = b.lift(range(b.n))
    rules = [
        _rule(
            (ORIGIN,),
            a_layers + b_layers,
            lambda st: m1.proj(a.color(st[0])) != m2.proj(b.color(st[0])),
            "fiber",
        )
    ]
    rules += a.rules() + b.rules() + zone.rules()
    for need, (hb, gb) in zip(needs, bits):
        rules += _accumulation_rules(zone, need, hb, gb)

    def project(c):
        return m1.proj(a.color(alphabet.decode(c)))

    proj = ProjectionMap.computed(alphabet, m1.target, project)
    order = zone.layers + _hint(a) + _hint(b) + tuple(l for pair in bits for l in pair)
    return MarkedSFT(
        RuleSFT(alphabet, rules), zone.marker(0), zone.marker(1), proj, order, a.lift(m1.projection_layers())
    )


def _accumulation_rules(zone: _Zone, need: StateSet, hb: int, gb: int) -> list[Rule]:
    zl = zone.layers
    nl = need.layers

    def seen(s):
        return 1 if need.test(s) else 0

    def local(st):
        s = st[0]
        if not zone.inside(s):
            return s[hb] != 0 or s[gb] != 0
        if zone.west(s) and s[hb] != seen(s):
            return True
        if zone.bottom(s) and s[gb] != s[hb]:
            return True
        return zone.top(s) and zone.east(s) and s[gb] != 1

    def row_step(st):
        w, e = st
        if not zone.inside(e) or zone.west(e):
            return False
        return e[hb] != (1 if (seen(e) or w[hb]) else 0)

    def col_step(st):
        s, n = st
        if not zone.inside(n) or zone.bottom(n):
            return False
        return n[gb] != (1 if (n[hb] or s[gb]) else 0)

    return [
        _rule((ORIGIN,), zl + nl + (hb, gb), local, "zone accumulation"),
        _rule((ORIGIN, EAST), zl + nl + (hb,), row_step, "row accumulation"),
        _rule((ORIGIN, NORTH), zl + (hb, gb), col_step, "column accumulation"),
    ]


# ------------------------------------------------------------------ logic


def emso_of_marked(m: MarkedSFT):
    """Existential second-order formula defining the projection of ``m``.

    The base SFT must be small enough to list its forbidden patterns.
    """
    alphabet = m.base.alphabet
    phi = formula_of_sft(m.base)
    parts = [phi]
    for s, var in ((m.q0, "u"), (m.q1, "v")):
        names = [alphabet.name(c) for c in s.members(alphabet)]
        if not names:
            raise GridError("marker set is empty")
        parts.append(exists(var, disj([Pred(n, Var(var)) for n in names])))
    return prop1_backward(conj(parts), m.proj)


# ------------------------------------------------------------- text format


def read_marked(text: str) -> MarkedSFT:
    alpha, forbidden, extras = read_sft_sections(text)
    unknown = set(extras) - {"q0", "q1", "project"}
    missing = {"q0", "q1"} - set(extras)
    if unknown or missing:
        raise GridError(f"marked SFT keys: unexpected {sorted(unknown)}, missing {sorted(missing)}")
    base = SFT(alpha, forbidden)
    proj = _read_projection(alpha, extras["project"]) if "project" in extras else ProjectionMap.identity(alpha)
    q0 = StateSet.of_colors(alpha, extras["q0"].split())
    q1 = StateSet.of_colors(alpha, extras["q1"].split())
    return MarkedSFT(base, q0, q1, proj)


def dump_marked(m: MarkedSFT) -> str:
    """Text form; rule-based bases are materialized, which fails for large alphabets."""
    alphabet = m.base.alphabet
    if isinstance(alphabet, LayeredAlphabet):
        plain = Alphabet(alphabet.colors)
        forbidden = [Pattern(plain, dict(p.items())) for p in m.base.forbidden]
        base = SFT(plain, forbidden)
        proj = ProjectionMap(plain, m.target, tuple(m.proj(c) for c in range(len(alphabet))))
    else:
        base, proj = m.base, m.proj
    text = dump_sft(base)
    text += "\nq0: " + " ".join(alphabet.name(c) for c in m.q0.members(alphabet))
    text += "\nq1: " + " ".join(alphabet.name(c) for c in m.q1.members(alphabet))
    text += "\nproject: " + dump_projection(proj) + "\n"
    return text
