"""Local occurrence counting: square-pattern profiles, (n, k)-equivalence and
its one-sided version, and the explicit radius/threshold bound for
universal first-order formulas."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

from .grid import GridError, Pattern, PeriodicConfig, square_domain
from .logic import Fragment, classify, iter_nodes, prenex, to_relational, Quant


class _Many:
    """Count sentinel for "more than the threshold"."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MANY"

    def __reduce__(self):
        return (_Many, ())


MANY = _Many()


def ball_size(r: int) -> int:
    """Number of cells at Manhattan distance at most ``r`` from a point."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    return 2 * r * r + 2 * r + 1


@dataclass(frozen=True)
class CountProfile:
    radius: int
    threshold: int
    counts: dict  # square Pattern -> int in 1..threshold, or MANY

    def count(self, p: Pattern):
        return self.counts.get(p, 0)

    def exceeds(self, p: Pattern) -> bool:
        return self.count(p) is MANY


@lru_cache(maxsize=8192)
def _squares(x, n: int) -> tuple:
    # hosts are immutable, so repeated comparisons against the same host
    # reuse one scan
    if isinstance(x, PeriodicConfig):
        return tuple((sq, 1) for sq in dict.fromkeys(x.square(z, n) for z in x.fundamental_cells()))
    offsets = square_domain(n)
    found = Counter()
    for z in x.domain:
        cells = {}
        for v in offsets:
            c = x.get((z.x + v.x, z.y + v.y))
            if c is None:
                break
            cells[v] = c
        else:
            found[Pattern(x.alphabet, cells)] += 1
    return tuple(found.items())


def count_profile(x, n: int, k: int) -> CountProfile:
    """Occurrence counts of radius-``n`` squares, clipped above ``k``.

    In a finite pattern only positions where the whole square fits are
    counted.  Squares of a periodic configuration occur infinitely often,
    so every one that occurs is reported as MANY.
    """
    if n < 0 or k < 0:
        raise ValueError("radius and threshold must be non-negative")
    if not isinstance(x, (Pattern, PeriodicConfig)):
        raise TypeError("expected a Pattern or PeriodicConfig")
    raw = _squares(x, n)
    periodic = isinstance(x, PeriodicConfig)
    counts = {p: (MANY if periodic or c > k else c) for p, c in raw}
    return CountProfile(n, k, counts)


def _check_pair(m, other) -> None:
    if type(m) is not type(other):
        raise GridError("cannot compare a pattern with a periodic configuration")
    if m.alphabet != other.alphabet:
        raise GridError("alphabets differ")


def _at_most(count, bound: int) -> bool:
    return count is not MANY and count <= bound


def ge_nk(m, other, n: int, k: int) -> bool:
    """True when every square seen at most ``k`` times in ``m`` is seen no more often in ``other``."""
    _check_pair(m, other)
    pm, po = count_profile(m, n, k), count_profile(other, n, k)
    for p, c in po.counts.items():
        cm = pm.count(p)
        if cm is not MANY and not _at_most(c, cm):
            return False
    return True


def equiv_nk(m, other, n: int, k: int) -> bool:
    """Squares seen at most ``k`` times in either host are seen equally often in both."""
    _check_pair(m, other)
    pm, po = count_profile(m, n, k), count_profile(other, n, k)
    return pm.counts == po.counts


def fo_quantifier_count(f) -> int:
    return sum(1 for node in iter_nodes(f) if isinstance(node, Quant) and not node.second_order)


def universal_bound(f) -> tuple[int, int]:
    """Radius and threshold beyond which universal FO truth transfers along ``ge_nk``.

    The quantifier count ``q`` is taken after rewriting neighbour terms as
    edge relations.  A formula without quantifiers gets the floor (1, 1).
    """
    if not classify(f) & Fragment.UNIVERSAL_FO:
        raise GridError("formula is not universal first-order")
    q = fo_quantifier_count(to_relational(prenex(f)))
    if q == 0:
        return 1, 1
    radius = 3 ** q
    return radius, q * ball_size(radius) + 1
