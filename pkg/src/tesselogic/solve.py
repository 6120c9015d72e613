"""Search and enumeration oracles over finite windows and tori.

The core is a backtracking search over layer variables: a cell of a
layered alphabet contributes one variable per layer, and every local rule
is checked as soon as the layers it reads are known.  After each choice,
rule instances with few open combinations are made arc consistent, and the
pruning is propagated until nothing changes.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .grid import (
    GridError,
    Pattern,
    PeriodicConfig,
    ProjectionMap,
    Rect,
    Rule,
    SFT,
    SoficPresentation,
    Vec2,
    all_colorings,
    apply_projection,
)

PREIMAGE_LIMIT = 2 ** 30


@dataclass(frozen=True)
class WindowSpec:
    width: int
    height: int
    margin: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.margin < 0:
            raise ValueError("window needs positive size and non-negative margin")


@dataclass(frozen=True)
class Anchored:
    """A rule applied at one explicit anchor cell only."""

    rule: Rule
    anchor: Vec2


class Presence:
    """Requirement that some cell of the solution carries a state accepted by ``test``.

    ``layers`` lists the layers ``test`` reads from a decoded state.
    """

    def __init__(self, layers: Sequence[int], test: Callable, cells=None):
        self.layers = tuple(layers)
        self.test = test
        self.cells = cells


class Solver:
    """Backtracking search for colorings of ``cells`` avoiding all rule instances.

    ``cells`` are listed in row-major order.  With ``torus=(w, h)`` rule
    shapes wrap around; otherwise only instances fully inside the cell set
    are checked.  ``domains`` maps a cell to its allowed encoded colors.
    ``order`` is ``"cell"`` (cell-major, so solutions come out in
    lexicographic order) or ``"layer"`` (all cells of one layer before the
    next layer; ``layer_order`` picks the layer sequence).
    """

    MEMO_LIMIT = 200_000

    def __init__(
        self,
        alphabet,
        rules: Iterable[Rule],
        cells: Sequence[Vec2],
        torus: tuple[int, int] | None = None,
        domains: dict | None = None,
        anchored: Iterable[Anchored] = (),
        presence: Iterable[Presence] = (),
        order: str = "cell",
        layer_order: Sequence[int] | None = None,
        first_vars: Sequence[tuple] | None = None,
        propagate_limit: int = 81,
    ):
        self.alphabet = alphabet
        self.propagate_limit = propagate_limit
        self.sizes = tuple(alphabet.layer_sizes)
        self.nl = nl = len(self.sizes)
        self.cells = [Vec2(*c) for c in cells]
        self.index = {c: i for i, c in enumerate(self.cells)}
        self.torus = torus
        ncells = len(self.cells)
        self.values = [None] * (ncells * nl)
        self.domains = [list(range(self.sizes[v % nl])) for v in range(ncells * nl)]
        self.instances = []
        self.instance_vars: list = []
        self.memo: dict = {}
        self.var_instances = [[] for _ in range(ncells * nl)]
        if domains:
            for cell, allowed in domains.items():
                self._restrict_cell(self.index[Vec2(*cell)], allowed)
        for rule in rules:
            for i, anchor in enumerate(self.cells):
                self._add_instance(rule, anchor)
        for a in anchored:
            self._add_instance(a.rule, Vec2(*a.anchor), strict=True)
        self.presence = []
        for p in presence:
            cells_p = range(ncells) if p.cells is None else [self.index[Vec2(*c)] for c in p.cells]
            self.presence.append((p, list(cells_p)))
        self.presence_layers = {l for p, _ in self.presence for l in p.layers}
        layers = list(layer_order) if layer_order is not None else list(range(nl))
        if sorted(layers) != list(range(nl)):
            raise ValueError("layer_order must be a permutation of the layers")
        if order == "cell":
            var_order = [c * nl + l for c in range(ncells) for l in range(nl)]
        elif order == "layer":
            var_order = [c * nl + l for l in layers for c in range(ncells)]
        else:
            raise ValueError(f"unknown variable order {order!r}")
        if first_vars:
            head = [self.index[Vec2(*c)] * nl + l for c, l in first_vars]
            seen = set(head)
            anchors = {self.cells[v // nl] for v in head}

            def dist(v):
                z = self.cells[v // nl]
                return min(max(abs(z.x - a.x), abs(z.y - a.y)) for a in anchors)

            rest = [v for v in var_order if v not in seen]
            if order == "cell":
                # grow outward from the prefix so conflicts surface near their cause
                rest.sort(key=dist)
            var_order = head + rest
        self.order = var_order
        self.nodes = 0

    # ------------------------------------------------------------ setup

    def _restrict_cell(self, ci: int, allowed) -> None:
        allowed = list(allowed)
        dec = self.alphabet.decode
        states = [dec(c) for c in allowed]
        for l in range(self.nl):
            ok = {s[l] for s in states}
            v = ci * self.nl + l
            self.domains[v] = [x for x in self.domains[v] if x in ok]
        if self.nl > 1:
            # keep the exact combination set as a unary rule
            allowed_set = frozenset(allowed)
            enc = self.alphabet.encode
            rule = Rule(
                (Vec2(0, 0),),
                tuple(range(self.nl)),
                lambda st, allowed_set=allowed_set: enc(st[0]) not in allowed_set,
                "domain",
            )
            self._add_instance(rule, self.cells[ci], strict=True)

    def _add_instance(self, rule: Rule, anchor: Vec2, strict: bool = False) -> None:
        cis = []
        for v in rule.shape:
            z = Vec2(anchor.x + v.x, anchor.y + v.y)
            if self.torus:
                w, h = self.torus
                z = Vec2(z.x % w, z.y % h)
            ci = self.index.get(z)
            if ci is None:
                if strict:
                    raise GridError(f"anchored rule leaves the window at {z}")
                return
            cis.append(ci)
        if self.torus and len(set(cis)) < len(cis):
            raise GridError("torus smaller than a constraint shape")
        nl = self.nl
        vars_ = [ci * nl + l for ci in cis for l in rule.layers]
        inst = (rule.forbids, tuple(cis), tuple(vars_))
        k = len(self.instances)
        self.instances.append(inst)
        uniq = tuple(dict.fromkeys(vars_))
        self.instance_vars.append(uniq)
        for v in set(vars_):
            self.var_instances[v].append(k)

    # ----------------------------------------------------------- search

    def _states(self, cis):
        vals, nl = self.values, self.nl
        return tuple(tuple(vals[ci * nl:(ci + 1) * nl]) for ci in cis)

    def _presence_ok(self) -> bool:
        dom, nl = self.domains, self.nl
        for p, cells in self.presence:
            found = False
            for ci in cells:
                choices = [dom[ci * nl + l] for l in range(nl)]
                for combo in itertools.product(*(choices[l] for l in p.layers)):
                    state = [None] * nl
                    for l, x in zip(p.layers, combo):
                        state[l] = x
                    if p.test(tuple(state)):
                        found = True
                        break
                if found:
                    break
            if not found:
                return False
        return True

    def _revise(self, k: int, trail: list):
        """Prune unsupported values of the open variables of instance ``k``.

        Returns None on a wipe-out, else the list of variables whose domain
        shrank.  Instances with too many open combinations are skipped.
        Results are memoized on the rule and the current domains, since
        the same rule is instantiated at every cell.
        """
        vals, dom = self.values, self.domains
        forbids, cis, vars_ = self.instances[k]
        uniq = self.instance_vars[k]
        size = 1
        for u in uniq:
            size *= len(dom[u])
            if size > self.propagate_limit:
                return []
        key = (forbids, tuple(tuple(dom[u]) for u in uniq))
        support = self.memo.get(key)
        if support is None:
            support = [set() for _ in uniq]
            open_ = [i for i, u in enumerate(uniq) if vals[u] is None]
            for combo in itertools.product(*(dom[u] for u in uniq)):
                for i in open_:
                    vals[uniq[i]] = combo[i]
                if not forbids(self._states(cis)):
                    for sup, y in zip(support, combo):
                        sup.add(y)
            for i in open_:
                vals[uniq[i]] = None
            if len(self.memo) < self.MEMO_LIMIT:
                self.memo[key] = support
        changed = []
        for u, sup in zip(uniq, support):
            if not sup:
                return None
            if len(sup) < len(dom[u]):
                trail.append((u, dom[u]))
                dom[u] = [y for y in dom[u] if y in sup]
                changed.append(u)
        return changed

    def _assign(self, var: int, x, trail: list) -> bool:
        vals, dom = self.values, self.domains
        vals[var] = x
        trail.append((var, dom[var]))
        dom[var] = [x]
        queue = list(self.var_instances[var])
        queued = set(queue)
        while queue:
            k = queue.pop()
            queued.discard(k)
            changed = self._revise(k, trail)
            if changed is None:
                return False
            for u in changed:
                for j in self.var_instances[u]:
                    if j != k and j not in queued:
                        queued.add(j)
                        queue.append(j)
        if self.presence and var % self.nl in self.presence_layers:
            return self._presence_ok()
        return True

    def _undo(self, trail: list, mark: int) -> None:
        dom = self.domains
        while len(trail) > mark:
            v, old = trail.pop()
            dom[v] = old

    def _initially_consistent(self) -> bool:
        vals, dom = self.values, self.domains
        if any(not d for d in dom):
            return False
        for forbids, cis, vars_ in self.instances:
            if all(len(dom[v]) == 1 for v in vars_):
                for v in vars_:
                    vals[v] = dom[v][0]
                bad = forbids(self._states(cis))
                for v in vars_:
                    vals[v] = None
                if bad:
                    return False
        return not self.presence or self._presence_ok()

    def solve(self, limit: int | None = None) -> Iterator[list]:
        """Yield solutions as lists of encoded colors in ``cells`` order."""
        if not self._initially_consistent():
            return
        order, vals, nl = self.order, self.values, self.nl
        enc = self.alphabet.encode
        ncells = len(self.cells)
        trail: list = []

        def rec(depth):
            if depth == len(order):
                yield [enc(vals[c * nl:(c + 1) * nl]) for c in range(ncells)]
                return
            var = order[depth]
            for x in list(self.domains[var]):
                mark = len(trail)
                self.nodes += 1
                try:
                    if self._assign(var, x, trail):
                        yield from rec(depth + 1)
                finally:
                    vals[var] = None
                    self._undo(trail, mark)

        self._rec = rec
        count = 0
        gen = rec(0)
        try:
            for sol in gen:
                yield sol
                count += 1
                if limit is not None and count >= limit:
                    return
        finally:
            gen.close()

    def first(self):
        gen = self.solve(limit=1)
        try:
            return next(gen, None)
        finally:
            gen.close()

    def project(self, prefix: Sequence[tuple], key: Callable | None = None) -> Iterator[tuple]:
        """Distinct values of the ``(cell, layer)`` variables in ``prefix`` over all solutions.

        The search branches on the order up to the last projected variable
        and then only asks for one completion, so projected variables should
        come early (see ``first_vars`` and ``layer_order``).  Each yielded
        tuple extends to at least one full solution.  With
        ``key``, only the first extendable tuple of each key is yielded.
        """
        head = [self.index[Vec2(*c)] * self.nl + l for c, l in prefix]
        position = {v: i for i, v in enumerate(self.order)}
        k = max((position[v] for v in head), default=-1) + 1
        if not self._initially_consistent():
            return
        order, vals = self.order, self.values
        trail: list = []
        found_keys: set = set()

        def completions(depth):
            if depth == len(order):
                yield True
                return
            var = order[depth]
            for x in list(self.domains[var]):
                mark = len(trail)
                self.nodes += 1
                try:
                    if self._assign(var, x, trail):
                        yield from completions(depth + 1)
                finally:
                    vals[var] = None
                    self._undo(trail, mark)

        def heads(depth):
            if depth == k:
                kv = None
                if key is not None:
                    kv = key(tuple(vals[v] for v in head))
                    if kv in found_keys:
                        return
                gen = completions(depth)
                try:
                    found = next(gen, False)
                finally:
                    gen.close()
                if found:
                    if key is not None:
                        found_keys.add(kv)
                    yield tuple(vals[v] for v in head)
                return
            var = order[depth]
            for x in list(self.domains[var]):
                mark = len(trail)
                self.nodes += 1
                try:
                    if self._assign(var, x, trail):
                        yield from heads(depth + 1)
                finally:
                    vals[var] = None
                    self._undo(trail, mark)

        yield from heads(0)


# ------------------------------------------------------------------ helpers


def window_cells(width: int, height: int, x0: int = 0, y0: int = 0) -> list[Vec2]:
    return list(Rect(x0, y0, width, height).cells())


def _check_window(s: SFT, w: int, h: int) -> None:
    ew, eh = s.max_extent()
    if w < ew or h < eh:
        raise GridError(f"window {w}x{h} is smaller than a {ew}x{eh} constraint")


def _pattern(alphabet, cells, colors) -> Pattern:
    return Pattern(alphabet, dict(zip(cells, colors)))


@functools.lru_cache(maxsize=65536)
def _shared_pattern(alphabet, cells: tuple, colors: tuple) -> Pattern:
    # the E and A operators rebuild the same small windows over and over
    return Pattern(alphabet, dict(zip(cells, colors)))


# ------------------------------------------------------------------ SFT oracles


def torus_solutions(s: SFT, w: int, h: int, limit: int | None = None) -> list[PeriodicConfig]:
    """All ``w x h`` periodic configurations of ``s``, in lexicographic row-major order."""
    _check_window(s, w, h)
    cells = window_cells(w, h)
    solver = Solver(s.alphabet, s.rules(), cells, torus=(w, h))
    out = []
    for sol in solver.solve(limit):
        fund = [[0] * w for _ in range(h)]
        for v, c in zip(cells, sol):
            fund[v.y][v.x] = c
        out.append(PeriodicConfig(s.alphabet, w, h, fund))
    return out


def _admissible_codes(s: SFT, spec: WindowSpec, domains=None, key=None):
    m = spec.margin
    inner = window_cells(spec.width, spec.height)
    outer = window_cells(spec.width + 2 * m, spec.height + 2 * m, -m, -m)
    nl = len(s.alphabet.layer_sizes)
    prefix = [(c, l) for c in inner for l in range(nl)]
    solver = Solver(s.alphabet, s.rules(), outer, domains=domains, first_vars=prefix)
    enc = s.alphabet.encode
    if key is not None:
        cell_key = key

        def key(vals):
            return tuple(cell_key(enc(vals[i * nl:(i + 1) * nl])) for i in range(len(inner)))

    for vals in solver.project(prefix, key=key):
        yield inner, [enc(vals[i * nl:(i + 1) * nl]) for i in range(len(inner))]


def admissible_patterns(s: SFT, spec: WindowSpec) -> set[Pattern]:
    """Window colorings extendable by ``spec.margin`` cells on every side."""
    return {_pattern(s.alphabet, cells, cols) for cells, cols in _admissible_codes(s, spec)}


def forbidden_language(x, spec: WindowSpec) -> set[Pattern]:
    """Target windows none of whose preimages is locally admissible."""
    if isinstance(x, SoficPresentation):
        base, proj = x.base, x.proj
        candidates = len(base.alphabet) ** (spec.width * spec.height)
        if candidates > PREIMAGE_LIMIT:
            raise GridError(f"{candidates} preimage windows exceed the enumeration limit")
        seen = {
            _pattern(proj.target, cells, [proj(c) for c in cols])
            for cells, cols in _admissible_codes(base, spec, key=proj)
        }
        alphabet = proj.target
    else:
        seen = admissible_patterns(x, spec)
        alphabet = x.alphabet
    return set(all_colorings(alphabet, window_cells(spec.width, spec.height))) - seen


def projected_admissible(x: SoficPresentation, spec: WindowSpec) -> set[Pattern]:
    proj = x.proj
    return {
        _pattern(proj.target, cells, [proj(c) for c in cols])
        for cells, cols in _admissible_codes(x.base, spec, key=proj)
    }


# ------------------------------------------------------------ E and A operators


def _common_domain(patterns) -> frozenset | None:
    domain = None
    for p in patterns:
        if domain is None:
            domain = p.domain
        elif p.domain != domain:
            raise GridError("patterns have different domains")
    return domain


def e_operator(pi: ProjectionMap, patterns: Iterable[Pattern]) -> set[Pattern]:
    patterns = list(patterns)
    domain = _common_domain(patterns)
    if domain is None:
        return set()
    for p in patterns:
        if p.alphabet != pi.source:
            raise GridError(f"alphabet mismatch: {pi.source!r} vs {p.alphabet!r}")
    # project as color tuples so each distinct image is built once
    cells = tuple(sorted(Vec2(*v) for v in domain))
    images = {tuple(pi(p[v]) for v in cells) for p in patterns}
    return {_shared_pattern(pi.target, cells, image) for image in images}


def a_operator(pi: ProjectionMap, patterns: Iterable[Pattern], domain=None) -> set[Pattern]:
    """Target colorings of the domain all of whose preimages lie in ``patterns``."""
    patterns = set(patterns)
    found = _common_domain(patterns)
    if domain is None:
        if found is None:
            raise GridError("a_operator on an empty set needs an explicit domain")
        domain = found
    cells = tuple(sorted(Vec2(*v) for v in domain))
    keys = {tuple(p[v] for v in cells) for p in patterns}
    preimage = [pi.preimage(t) for t in range(len(pi.target))]
    out = set()
    for target in itertools.product(range(len(pi.target)), repeat=len(cells)):
        pre = [preimage[t] for t in target]
        if all(combo in keys for combo in itertools.product(*pre)):
            out.add(_shared_pattern(pi.target, cells, target))
    return out


# ------------------------------------------------------------- marked windows


def _marked_solver(m, w: int, h: int, marker_region: Rect | None, domains, first_vars=None):
    s = m.base
    _check_window(s, w, h)
    cells = window_cells(w, h)
    presence = [Presence(q.layers, q.test) for q in (m.q0, m.q1)]
    anchored = []
    if marker_region is not None:
        inside = set(marker_region.cells())
        layers = tuple(sorted(set(m.q0.layers) | set(m.q1.layers)))
        rule = Rule(
            (Vec2(0, 0),),
            layers,
            lambda st: bool(m.q0.test(st[0]) or m.q1.test(st[0])),
            "marker outside region",
        )
        anchored = [Anchored(rule, v) for v in cells if v not in inside]
    nl = len(s.alphabet.layer_sizes)
    hint = list(dict.fromkeys(m.layer_order or ()))
    order = hint + [l for l in range(nl) if l not in hint]
    return cells, Solver(
        s.alphabet,
        s.rules(),
        cells,
        domains=domains,
        anchored=anchored,
        presence=presence,
        order="layer",
        layer_order=order,
        first_vars=first_vars,
    )


def marked_solutions(
    m,
    w: int,
    h: int,
    limit: int | None = None,
    marker_region: Rect | None = None,
    domains: dict | None = None,
) -> list[tuple[Pattern, Pattern]]:
    """Window colorings of a marked SFT holding both markers, with their projections.

    Rules are enforced wherever their shape fits in the window.  Results are
    sorted in the same row-major lexicographic order as ``torus_solutions``;
    ``marker_region`` keeps both markers inside a sub-rectangle.
    """
    cells, solver = _marked_solver(m, w, h, marker_region, domains)
    found = sorted(solver.solve())
    if limit is not None:
        found = found[:limit]
    alphabet, proj = m.base.alphabet, m.proj
    return [
        (_pattern(alphabet, cells, sol), _pattern(proj.target, cells, [proj(c) for c in sol]))
        for sol in found
    ]


def projected_marked(
    m, w: int, h: int, marker_region: Rect | None = None, method: str = "enumerate"
) -> set[Pattern]:
    """Distinct projections of the marked window solutions.

    ``method="enumerate"`` walks every solution and is fast when solutions
    are few.  ``method="project"`` follows the marked set's layer hint up to
    the last layer the projection reads, then looks for one completion per
    distinct projected window; it pays off when the layers after that point
    admit many decorations.
    """
    alphabet, proj = m.base.alphabet, m.proj
    if method == "enumerate":
        cells, solver = _marked_solver(m, w, h, marker_region, None)
        return {_pattern(proj.target, cells, [proj(c) for c in sol]) for sol in solver.solve()}
    if method != "project":
        raise ValueError(f"unknown method {method!r}")
    cells = window_cells(w, h)
    nl = len(alphabet.layer_sizes)
    players = m.projection_layers()
    prefix = [(v, l) for v in cells for l in players]
    solver = _marked_solver(m, w, h, marker_region, None)[1]
    width = len(players)
    enc = alphabet.encode

    def key(vals):
        out = []
        for i in range(len(cells)):
            state = [0] * nl
            for l, x in zip(players, vals[i * width:(i + 1) * width]):
                state[l] = x
            out.append(proj(enc(state)))
        return tuple(out)

    return {_pattern(proj.target, cells, key(vals)) for vals in solver.project(prefix, key=key)}
