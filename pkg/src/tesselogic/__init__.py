"""Logic on two-dimensional colorings: formulas, tilings and their translations."""

from .grid import (
    Alphabet,
    GridError,
    LayeredAlphabet,
    Pattern,
    PeriodicConfig,
    ProjectionMap,
    Rect,
    RuleSFT,
    SFT,
    SoficPresentation,
    Vec2,
    read_grid,
    read_sft,
    dump_grid,
    dump_sft,
)
from .logic import Fragment, FormulaError, classify, parse, to_str
from .evaluate import (
    Budget,
    BudgetExceeded,
    ConsistentUpTo,
    Refuted,
    eval_pattern,
    eval_torus,
    eval_universal_periodic,
    pattern_check,
)
from .marked import MarkedSFT, StateSet, counting_marked_sft, intersect_marked, union_marked
from .solve import WindowSpec, marked_solutions, torus_solutions

__version__ = "0.1.0"
