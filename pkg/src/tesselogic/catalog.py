"""Small named fixtures: the quarter-plane subshift, the at-most-one-point set
and its sofic presentation, plus a few periodic configurations."""

from __future__ import annotations

from .grid import Alphabet, Pattern, PeriodicConfig, ProjectionMap, SoficPresentation
from .logic import parse
from .translate import sft_of_universal

DL = Alphabet(["D", "L"])
DWL = Alphabet(["D", "L", "W"])
DW = Alphabet(["D", "W"])

# three clauses: no light east of dark, no light north of dark, and the
# light/dark/light corner
QUARTER_CLAUSES = (
    "forall x. !(@D(x) & @L(E(x))) & !(@D(x) & @L(N(x))) & !(@L(x) & @D(E(x)) & @L(N(x)))"
)
QUARTER_IFF = "forall x. @D(x) <-> (@D(E(x)) & @D(N(x)))"
AT_MOST_ONE_D = "forall x. forall y. (@D(x) & @D(y)) -> x = y"

# dark means D or W; W marks the south-west corner of the dark quarter plane
CORNER_VARIANT = (
    "forall x. ((@D(x) | @W(x)) <-> ((@D(E(x)) | @W(E(x))) & (@D(N(x)) | @W(N(x)))))"
    " & (@W(x) -> @L(W(x)) & @L(S(x)))"
    " & (@D(x) -> !(@L(W(x)) & @L(S(x))))"
)


def quarter_formula():
    return parse(QUARTER_CLAUSES, DL)


def quarter_iff_formula():
    return parse(QUARTER_IFF, DL)


def at_most_one_formula():
    return parse(AT_MOST_ONE_D, DL)


def quarter_sft():
    return sft_of_universal(quarter_formula(), DL)


def corner_variant_sft():
    return sft_of_universal(parse(CORNER_VARIANT, DWL), DWL)


def corner_projection() -> ProjectionMap:
    return ProjectionMap.from_names(DWL, DW, {"L": "W", "D": "W", "W": "D"})


def corner_presentation() -> SoficPresentation:
    return SoficPresentation(corner_variant_sft(), corner_projection())


def single(color: str = "D", alphabet: Alphabet = DL) -> Pattern:
    return Pattern.from_rows(alphabet, [[color]])


def one_per_period(size: int = 3, color: str = "D", other: str = "L", alphabet: Alphabet = DL):
    rows = [[other] * size for _ in range(size)]
    rows[0][0] = color
    return PeriodicConfig.from_rows(alphabet, rows)


def uniform(color: str, alphabet: Alphabet = DL) -> PeriodicConfig:
    return PeriodicConfig.uniform(alphabet, color)


def vertical_stripes(alphabet: Alphabet = DL) -> PeriodicConfig:
    return PeriodicConfig.from_rows(alphabet, [list(alphabet.colors[:2])])
