"""Core symbolic-space types: cells, alphabets, patterns, periodic
configurations, projections and subshifts of finite type.

Coordinates follow the usual plane convention: ``x`` grows east and ``y``
grows north.  Text grids are written north-to-south, so the first row of a
file is the row with the largest ``y``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, NamedTuple


class GridError(ValueError):
    """Malformed input or incompatible alphabets."""


class Vec2(NamedTuple):
    x: int
    y: int

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def __neg__(self):
        return Vec2(-self.x, -self.y)


ORIGIN = Vec2(0, 0)
NORTH = Vec2(0, 1)
SOUTH = Vec2(0, -1)
EAST = Vec2(1, 0)
WEST = Vec2(-1, 0)
DIRECTIONS = {"N": NORTH, "S": SOUTH, "E": EAST, "W": WEST}


class Rect(NamedTuple):
    """Axis-aligned search region ``[x, x+w) x [y, y+h)``."""

    x: int
    y: int
    w: int
    h: int

    def cells(self) -> Iterator[Vec2]:
        # row-major, north-to-south then west-to-east
        for y in range(self.y + self.h - 1, self.y - 1, -1):
            for x in range(self.x, self.x + self.w):
                yield Vec2(x, y)


def row_major_key(v: Vec2) -> tuple[int, int]:
    return (-v[1], v[0])


def square_domain(n: int) -> tuple[Vec2, ...]:
    """Domain ``[-n, n]^2`` of a square pattern of radius ``n``, row-major."""
    return tuple(Rect(-n, -n, 2 * n + 1, 2 * n + 1).cells())


# ---------------------------------------------------------------- alphabets


def _check_color_name(name: str) -> None:
    if not name or name == "." or any(ch.isspace() for ch in name) or "->" in name or ":" in name:
        raise GridError(f"invalid color name {name!r}")


class Alphabet:
    """Ordered finite set of color names."""

    def __init__(self, colors: Iterable[str]):
        colors = tuple(colors)
        for c in colors:
            _check_color_name(c)
        if len(set(colors)) != len(colors):
            raise GridError(f"duplicate colors in {colors}")
        self._colors = colors
        self._index = {c: i for i, c in enumerate(colors)}

    @classmethod
    def parse(cls, text: str) -> "Alphabet":
        return cls(text.split())

    @property
    def colors(self) -> tuple[str, ...]:
        return self._colors

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (len(self),)

    def __len__(self) -> int:
        return len(self._colors)

    def __iter__(self):
        return iter(self.colors)

    def __contains__(self, name) -> bool:
        try:
            self.index(name)
        except GridError:
            return False
        return True

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise GridError(f"unknown color {name!r}") from None

    def name(self, i: int) -> str:
        return self.colors[i]

    def decode(self, i: int) -> tuple[int, ...]:
        return (i,)

    def encode(self, state: Sequence[int]) -> int:
        return state[0]

    def _key(self):
        return ("plain", self._colors)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Alphabet({' '.join(self.colors)!r})"


class LayeredAlphabet(Alphabet):
    """Cartesian product of named layers; a color is one value per layer.

    Colors are numbered in mixed radix with the first layer most
    significant, and named by joining layer value names with ``.``.  The
    product is never materialized unless ``colors`` is requested.
    """

    def __init__(self, layers: Sequence[tuple[str, Sequence[str]]]):
        self.layers = tuple((name, tuple(values)) for name, values in layers)
        if not self.layers:
            raise GridError("layered alphabet needs at least one layer")
        for _, values in self.layers:
            if not values or len(set(values)) != len(values):
                raise GridError("layer values must be non-empty and distinct")
            for v in values:
                _check_color_name(v)
                if "." in v:
                    raise GridError(f"layer value {v!r} may not contain '.'")
        self._sizes = tuple(len(v) for _, v in self.layers)
        self._size = math.prod(self._sizes)
        self._value_index = [{v: i for i, v in enumerate(vals)} for _, vals in self.layers]
        self._colors_cache: tuple[str, ...] | None = None

    @property
    def colors(self) -> tuple[str, ...]:
        if self._colors_cache is None:
            self._colors_cache = tuple(self.name(i) for i in range(self._size))
        return self._colors_cache

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return self._sizes

    def layer_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.layers):
            if n == name:
                return i
        raise GridError(f"no layer named {name!r}")

    def __len__(self) -> int:
        return self._size

    def __iter__(self):
        return (self.name(i) for i in range(self._size))

    def decode(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self._size:
            raise GridError(f"color index {i} out of range")
        out = []
        for size in reversed(self._sizes):
            i, r = divmod(i, size)
            out.append(r)
        return tuple(reversed(out))

    def encode(self, state: Sequence[int]) -> int:
        i = 0
        for v, size in zip(state, self._sizes):
            i = i * size + v
        return i

    def name(self, i: int) -> str:
        return ".".join(vals[v] for (_, vals), v in zip(self.layers, self.decode(i)))

    def index(self, name: str) -> int:
        parts = name.split(".")
        if len(parts) != len(self.layers):
            raise GridError(f"unknown color {name!r}")
        try:
            return self.encode([vi[p] for vi, p in zip(self._value_index, parts)])
        except KeyError:
            raise GridError(f"unknown color {name!r}") from None

    def _key(self):
        return ("layered", self.layers)

    def __repr__(self):
        return f"LayeredAlphabet({[n for n, _ in self.layers]}, size={self._size})"


def _same_alphabet(a: Alphabet, b: Alphabet) -> None:
    if a != b:
        raise GridError(f"alphabet mismatch: {a!r} vs {b!r}")


# ----------------------------------------------------------------- patterns


class Pattern:
    """Finite partial coloring of the plane.  Immutable and hashable."""

    __slots__ = ("alphabet", "_cells", "_hash")

    def __init__(self, alphabet: Alphabet, cells):
        self.alphabet = alphabet
        if not isinstance(cells, dict):
            cells = dict(cells)
        n = len(alphabet)
        clean = {}
        for v, c in cells.items():
            if not isinstance(c, int) or not 0 <= c < n:
                raise GridError(f"color index {c!r} invalid for {alphabet!r}")
            clean[Vec2(*v)] = c
        self._cells = clean
        self._hash = None

    @classmethod
    def from_rows(cls, alphabet: Alphabet, rows: Sequence[Sequence[str | None]]) -> "Pattern":
        """Build from rows given north-to-south; ``None`` or ``'.'`` is undefined."""
        h = len(rows)
        cells = {}
        for r, row in enumerate(rows):
            y = h - 1 - r
            for x, name in enumerate(row):
                if name is None or name == ".":
                    continue
                cells[Vec2(x, y)] = alphabet.index(name)
        return cls(alphabet, cells)

    @classmethod
    def from_names(cls, alphabet: Alphabet, cells: dict) -> "Pattern":
        return cls(alphabet, {v: alphabet.index(c) for v, c in cells.items()})

    @property
    def domain(self) -> frozenset:
        return frozenset(self._cells)

    def cells(self) -> dict:
        return dict(self._cells)

    def items(self):
        return self._cells.items()

    def sorted_cells(self) -> list[Vec2]:
        return sorted(self._cells, key=row_major_key)

    def __getitem__(self, v) -> int:
        return self._cells[Vec2(*v)]

    def get(self, v, default=None):
        return self._cells.get(Vec2(*v), default)

    def __contains__(self, v) -> bool:
        return Vec2(*v) in self._cells

    def __len__(self) -> int:
        return len(self._cells)

    def __bool__(self) -> bool:
        return bool(self._cells)

    def bbox(self) -> Rect:
        if not self._cells:
            return Rect(0, 0, 0, 0)
        xs = [v.x for v in self._cells]
        ys = [v.y for v in self._cells]
        return Rect(min(xs), min(ys), max(xs) - min(xs) + 1, max(ys) - min(ys) + 1)

    def restrict(self, domain: Iterable) -> "Pattern":
        domain = {Vec2(*v) for v in domain}
        return Pattern(self.alphabet, {v: c for v, c in self._cells.items() if v in domain})

    def count(self, color: int) -> int:
        return sum(1 for c in self._cells.values() if c == color)

    def sort_key(self):
        return tuple(sorted((-v.y, v.x, c) for v, c in self._cells.items()))

    def __eq__(self, other):
        return (
            isinstance(other, Pattern)
            and self.alphabet == other.alphabet
            and self._cells == other._cells
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.alphabet, frozenset(self._cells.items())))
        return self._hash

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __repr__(self):
        return f"Pattern({dump_grid(self).strip()!r})"


class PeriodicConfig:
    """Doubly periodic configuration given by a ``w x h`` fundamental domain.

    ``fundamental[y][x]`` holds the color index at ``(x, y)`` for
    ``0 <= x < w`` and ``0 <= y < h`` (``y = 0`` is the southern row).
    """

    __slots__ = ("alphabet", "width", "height", "fundamental", "_hash")

    def __init__(self, alphabet: Alphabet, width: int, height: int, fundamental):
        if width < 1 or height < 1:
            raise GridError("periods must be positive")
        fundamental = tuple(tuple(row) for row in fundamental)
        if len(fundamental) != height or any(len(r) != width for r in fundamental):
            raise GridError("fundamental domain has wrong shape")
        n = len(alphabet)
        for row in fundamental:
            for c in row:
                if not isinstance(c, int) or not 0 <= c < n:
                    raise GridError(f"color index {c!r} invalid")
        self.alphabet = alphabet
        self.width = width
        self.height = height
        self.fundamental = fundamental
        self._hash = None

    @classmethod
    def from_rows(cls, alphabet: Alphabet, rows: Sequence[Sequence[str]]) -> "PeriodicConfig":
        h = len(rows)
        w = len(rows[0]) if rows else 0
        fund = [None] * h
        for r, row in enumerate(rows):
            if len(row) != w:
                raise GridError("ragged rows in periodic configuration")
            if any(c is None or c == "." for c in row):
                raise GridError("undefined cell in periodic configuration")
            fund[h - 1 - r] = tuple(alphabet.index(c) for c in row)
        return cls(alphabet, w, h, fund)

    @classmethod
    def uniform(cls, alphabet: Alphabet, color: str) -> "PeriodicConfig":
        return cls(alphabet, 1, 1, ((alphabet.index(color),),))

    def at(self, v) -> int:
        return self.fundamental[v[1] % self.height][v[0] % self.width]

    __getitem__ = at

    def window(self, rect: Rect) -> Pattern:
        return Pattern(self.alphabet, {v: self.at(v) for v in rect.cells()})

    def square(self, center, n: int) -> Pattern:
        """Radius-``n`` square read around ``center``, placed on ``[-n,n]^2``."""
        cx, cy = center
        return Pattern(
            self.alphabet,
            {v: self.at((cx + v.x, cy + v.y)) for v in square_domain(n)},
        )

    def fundamental_cells(self) -> list[Vec2]:
        return list(Rect(0, 0, self.width, self.height).cells())

    def unrolled(self, mx: int, my: int) -> "PeriodicConfig":
        """The same configuration described with periods ``mx*w`` and ``my*h``."""
        w, h = self.width * mx, self.height * my
        return PeriodicConfig(
            self.alphabet, w, h, [[self.at((x, y)) for x in range(w)] for y in range(h)]
        )

    def count(self, color: int) -> int:
        return sum(row.count(color) for row in self.fundamental)

    def __eq__(self, other):
        return (
            isinstance(other, PeriodicConfig)
            and self.alphabet == other.alphabet
            and (self.width, self.height, self.fundamental)
            == (other.width, other.height, other.fundamental)
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.alphabet, self.width, self.height, self.fundamental))
        return self._hash

    def __repr__(self):
        return f"PeriodicConfig({dump_grid(self).strip()!r})"


# -------------------------------------------------------------- projections


class _ComputedAssignment(Sequence):
    """Read-only sequence whose items are computed on access."""

    def __init__(self, size: int, fn: Callable[[int], int]):
        self._size = size
        self._fn = fn

    def __len__(self):
        return self._size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(self._size))]
        if not -self._size <= i < self._size:
            raise IndexError(i)
        return self._fn(i % self._size)


@dataclass(frozen=True, eq=False)
class ProjectionMap:
    source: Alphabet
    target: Alphabet
    assignment: Sequence[int]

    def __post_init__(self):
        if len(self.assignment) != len(self.source):
            raise GridError("projection must be defined on every source color")
        if isinstance(self.assignment, (list, tuple)):
            object.__setattr__(self, "assignment", tuple(self.assignment))
            for t in self.assignment:
                if not 0 <= t < len(self.target):
                    raise GridError(f"target index {t} out of range")

    @classmethod
    def from_names(cls, source: Alphabet, target: Alphabet, mapping: dict) -> "ProjectionMap":
        try:
            return cls(source, target, tuple(target.index(mapping[c]) for c in source.colors))
        except KeyError as exc:
            raise GridError(f"projection undefined on {exc.args[0]!r}") from None

    @classmethod
    def computed(cls, source: Alphabet, target: Alphabet, fn: Callable[[int], int]):
        return cls(source, target, _ComputedAssignment(len(source), fn))

    @classmethod
    def identity(cls, alphabet: Alphabet) -> "ProjectionMap":
        return cls(alphabet, alphabet, tuple(range(len(alphabet))))

    def __call__(self, i: int) -> int:
        return self.assignment[i]

    def preimage(self, t: int) -> list[int]:
        return [i for i in range(len(self.source)) if self.assignment[i] == t]

    def then(self, other: "ProjectionMap") -> "ProjectionMap":
        """``other`` after ``self``."""
        _same_alphabet(self.target, other.source)
        if isinstance(self.assignment, tuple):
            return ProjectionMap(self.source, other.target, tuple(other(a) for a in self.assignment))
        return ProjectionMap.computed(self.source, other.target, lambda i: other(self(i)))

    def mapping_names(self) -> dict:
        return {self.source.name(i): self.target.name(self(i)) for i in range(len(self.source))}

    def __eq__(self, other):
        return (
            isinstance(other, ProjectionMap)
            and self.source == other.source
            and self.target == other.target
            and tuple(self.assignment) == tuple(other.assignment)
        )

    def __hash__(self):
        return hash((self.source, self.target))


# ------------------------------------------------------------------- SFTs


@dataclass(frozen=True, eq=False)
class Rule:
    """A local constraint: a canonical shape plus a test on the states seen
    through it.

    ``forbids`` receives one decoded state (a tuple of layer values) per cell
    of ``shape`` in shape order and returns True when that combination is
    forbidden.  ``layers`` lists the layers the test reads, so a search can
    evaluate the rule as soon as those layers are known.
    """

    shape: tuple
    layers: tuple
    forbids: Callable
    label: str = ""


class SFT:
    """Subshift of finite type given by explicit forbidden patterns."""

    def __init__(self, alphabet: Alphabet, forbidden: Iterable[Pattern] = ()):
        canon = set()
        for p in forbidden:
            if p.alphabet != alphabet:
                raise GridError("forbidden pattern over a different alphabet")
            if not p:
                raise GridError("empty pattern cannot be forbidden")
            canon.add(canonicalize(p)[0])
        self.alphabet = alphabet
        self._forbidden = tuple(sorted(canon, key=Pattern.sort_key))
        self._rules = None

    @property
    def forbidden(self) -> tuple[Pattern, ...]:
        return self._forbidden

    def rules(self) -> list[Rule]:
        if self._rules is None:
            by_shape: dict[tuple, set] = {}
            for p in self._forbidden:
                shape = tuple(p.sorted_cells())
                by_shape.setdefault(shape, set()).add(tuple(p[v] for v in shape))
            enc = self.alphabet.encode
            nlayers = len(self.alphabet.layer_sizes)
            rules = []
            for shape, bad in sorted(by_shape.items()):
                bad = frozenset(bad)
                rules.append(
                    Rule(
                        shape,
                        tuple(range(nlayers)),
                        lambda states, bad=bad: tuple(enc(s) for s in states) in bad,
                        "forbidden",
                    )
                )
            self._rules = rules
        return self._rules

    def max_extent(self) -> tuple[int, int]:
        w = h = 1
        for r in self.rules():
            w = max(w, max(v.x for v in r.shape) + 1)
            h = max(h, max(v.y for v in r.shape) + 1)
        return w, h

    def __eq__(self, other):
        return (
            type(other) is SFT
            and self.alphabet == other.alphabet
            and self._forbidden == other._forbidden
        )

    def __hash__(self):
        return hash((self.alphabet, self._forbidden))

    def __repr__(self):
        return f"SFT({self.alphabet!r}, {len(self._forbidden)} forbidden)"


class RuleSFT(SFT):
    """SFT whose forbidden set is described by local rules.

    Used for product alphabets, where listing the forbidden patterns would
    be prohibitively large.  The forbidden set is still finite and can be
    materialized on demand (``forbidden``) when the alphabet is small.
    """

    MATERIALIZE_LIMIT = 2_000_000

    def __init__(self, alphabet: Alphabet, rules: Iterable[Rule]):
        self.alphabet = alphabet
        self._rules = []
        for r in rules:
            shape = tuple(Vec2(*v) for v in r.shape)
            mx = min(v.x for v in shape)
            my = min(v.y for v in shape)
            if (mx, my) != (0, 0):
                raise GridError("rule shapes must be canonical")
            self._rules.append(Rule(shape, tuple(r.layers), r.forbids, r.label))
        self._forbidden = None

    def rules(self) -> list[Rule]:
        return self._rules

    @property
    def forbidden(self) -> tuple[Pattern, ...]:
        if self._forbidden is None:
            n = len(self.alphabet)
            total = sum(n ** len(r.shape) for r in self._rules)
            if total > self.MATERIALIZE_LIMIT:
                raise GridError(f"refusing to materialize {total} candidate patterns")
            dec = self.alphabet.decode
            out = set()
            for r in self._rules:
                for combo in itertools.product(range(n), repeat=len(r.shape)):
                    if r.forbids(tuple(dec(c) for c in combo)):
                        out.add(Pattern(self.alphabet, dict(zip(r.shape, combo))))
            self._forbidden = tuple(sorted(out, key=Pattern.sort_key))
        return self._forbidden

    def explicit(self) -> SFT:
        return SFT(self.alphabet, self.forbidden)

    __eq__ = object.__eq__
    __hash__ = object.__hash__

    def __repr__(self):
        return f"RuleSFT({self.alphabet!r}, {len(self._rules)} rules)"


@dataclass(frozen=True)
class SoficPresentation:
    base: SFT
    proj: ProjectionMap

    def __post_init__(self):
        _same_alphabet(self.base.alphabet, self.proj.source)


# --------------------------------------------------------------- operations


def translate_pattern(p: Pattern, v) -> Pattern:
    v = Vec2(*v)
    return Pattern(p.alphabet, {z + v: c for z, c in p.items()})


def canonicalize(p: Pattern) -> tuple[Pattern, Vec2]:
    """Translate ``p`` so its domain touches both axes from the positive side."""
    if not p:
        raise GridError("cannot canonicalize the empty pattern")
    off = Vec2(-min(v.x for v in p.domain), -min(v.y for v in p.domain))
    if off == ORIGIN:
        return p, off
    return translate_pattern(p, off), off


def occurrences(p: Pattern, host, region: Rect | None = None) -> list[Vec2]:
    """Positions ``z0`` where ``p`` occurs in ``host``, sorted row-major."""
    _same_alphabet(p.alphabet, host.alphabet)
    items = list(p.items())
    if isinstance(host, PeriodicConfig):
        if region is None:
            region = Rect(0, 0, host.width, host.height)
        at = host.at
        return [
            z0
            for z0 in region.cells()
            if all(at((z0.x + v.x, z0.y + v.y)) == c for v, c in items)
        ]
    if not items:
        return list((region or host.bbox()).cells())
    v0, _ = items[0]
    found = []
    for z in host.domain:
        z0 = z - v0
        if region is not None and not (
            region.x <= z0.x < region.x + region.w and region.y <= z0.y < region.y + region.h
        ):
            continue
        if all(host.get(z0 + v) == c for v, c in items):
            found.append(z0)
    return sorted(found, key=row_major_key)


def pattern_language(c: PeriodicConfig, n: int) -> set[Pattern]:
    """All radius-``n`` square patterns occurring in ``c``."""
    return {c.square(z, n) for z in c.fundamental_cells()}


def apply_projection(pi: ProjectionMap, x):
    _same_alphabet(pi.source, x.alphabet)
    if isinstance(x, PeriodicConfig):
        return PeriodicConfig(
            pi.target, x.width, x.height, [[pi(c) for c in row] for row in x.fundamental]
        )
    return Pattern(pi.target, {v: pi(c) for v, c in x.items()})


def all_colorings(alphabet: Alphabet, domain: Sequence) -> Iterator[Pattern]:
    """Every total coloring of ``domain``, in lexicographic color order."""
    domain = [Vec2(*v) for v in domain]
    for combo in itertools.product(range(len(alphabet)), repeat=len(domain)):
        yield Pattern(alphabet, dict(zip(domain, combo)))


def all_periodic(alphabet: Alphabet, w: int, h: int) -> Iterator[PeriodicConfig]:
    for combo in itertools.product(range(len(alphabet)), repeat=w * h):
        yield PeriodicConfig(alphabet, w, h, [combo[y * w:(y + 1) * w] for y in range(h)])


# -------------------------------------------------------------- text format


def _grid_rows(text_rows: list[str]) -> list[list[str | None]]:
    rows = [r.split() for r in text_rows]
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise GridError("ragged grid rows")
    return [[None if c == "." else c for c in r] for r in rows]


def _strip_lines(text: str) -> list[str]:
    return [ln.rstrip() for ln in text.splitlines()]


def read_alphabet_line(line: str) -> Alphabet:
    if not line.startswith("alphabet:"):
        raise GridError("expected 'alphabet:' line")
    return Alphabet.parse(line[len("alphabet:"):])


def read_grid(text: str, alphabet: Alphabet | None = None):
    """Parse a pattern or (with a ``periodic:`` line) a periodic configuration."""
    lines = [ln for ln in _strip_lines(text) if ln.strip()]
    if not lines:
        raise GridError("empty grid file")
    alpha = read_alphabet_line(lines[0])
    if alphabet is not None:
        _same_alphabet(alphabet, alpha)
        alpha = alphabet
    rest = lines[1:]
    if rest and rest[0].startswith("periodic:"):
        try:
            w, h = (int(t) for t in rest[0][len("periodic:"):].split())
        except ValueError:
            raise GridError("bad 'periodic:' line") from None
        rows = _grid_rows(rest[1:])
        if len(rows) != h or (rows and len(rows[0]) != w):
            raise GridError(f"periodic block is not {w}x{h}")
        return PeriodicConfig.from_rows(alpha, rows)
    return Pattern.from_rows(alpha, _grid_rows(rest))


def _rows_text(alphabet: Alphabet, get, rect: Rect) -> list[str]:
    out = []
    for y in range(rect.y + rect.h - 1, rect.y - 1, -1):
        row = []
        for x in range(rect.x, rect.x + rect.w):
            c = get((x, y))
            row.append("." if c is None else alphabet.name(c))
        out.append(" ".join(row))
    return out


def dump_grid(x) -> str:
    lines = ["alphabet: " + " ".join(x.alphabet.colors)]
    if isinstance(x, PeriodicConfig):
        lines.append(f"periodic: {x.width} {x.height}")
        lines += _rows_text(x.alphabet, x.at, Rect(0, 0, x.width, x.height))
    elif x:
        lines += _rows_text(x.alphabet, x.get, x.bbox())
    return "\n".join(lines) + "\n"


def _split_blocks(lines: list[str]) -> list[list[str]]:
    blocks, cur = [], []
    for ln in lines:
        if ln.strip():
            cur.append(ln)
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    return blocks


def read_sft_sections(text: str) -> tuple[Alphabet, list[Pattern], dict[str, str]]:
    """Shared reader: alphabet, ``forbid:`` blocks, and trailing ``key:`` lines."""
    lines = _strip_lines(text)
    head = [i for i, ln in enumerate(lines) if ln.strip()]
    if not head:
        raise GridError("empty SFT file")
    alpha = read_alphabet_line(lines[head[0]].strip())
    forbidden, extras = [], {}
    for block in _split_blocks(lines[head[0] + 1:]):
        i = 0
        while i < len(block):
            ln = block[i].strip()
            if ln == "forbid:":
                j = i + 1
                while j < len(block) and ":" not in block[j]:
                    j += 1
                rows = _grid_rows(block[i + 1:j])
                if not rows:
                    raise GridError("empty forbid block")
                forbidden.append(Pattern.from_rows(alpha, rows))
                i = j
            elif ":" in ln:
                key, _, val = ln.partition(":")
                extras[key.strip()] = val.strip()
                i += 1
            else:
                raise GridError(f"unexpected line {ln!r}")
    return alpha, forbidden, extras


def _read_projection(source: Alphabet, text: str) -> ProjectionMap:
    mapping, targets = {}, []
    for tok in text.split():
        src, sep, tgt = tok.partition("->")
        if not sep:
            raise GridError(f"bad projection entry {tok!r}")
        mapping[src] = tgt
        if tgt not in targets:
            targets.append(tgt)
    return ProjectionMap.from_names(source, Alphabet(targets), mapping)


def read_sft(text: str):
    """Parse an SFT file; a ``project:`` line makes it a sofic presentation."""
    alpha, forbidden, extras = read_sft_sections(text)
    sft = SFT(alpha, forbidden)
    unknown = set(extras) - {"project"}
    if unknown:
        raise GridError(f"unexpected keys {sorted(unknown)}")
    if "project" in extras:
        return SoficPresentation(sft, _read_projection(alpha, extras["project"]))
    return sft


def dump_projection(pi: ProjectionMap) -> str:
    return " ".join(f"{s}->{t}" for s, t in pi.mapping_names().items())


def dump_sft(x) -> str:
    sft = x.base if isinstance(x, SoficPresentation) else x
    blocks = ["alphabet: " + " ".join(sft.alphabet.colors)]
    for p in sft.forbidden:
        blocks.append("\n".join(["forbid:"] + _rows_text(p.alphabet, p.get, p.bbox())))
    text = "\n\n".join(blocks) + "\n"
    if isinstance(x, SoficPresentation):
        text += "\nproject: " + dump_projection(x.proj) + "\n"
    return text
