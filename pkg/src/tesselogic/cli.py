"""Command-line front end.

Exit status: 0 success or true, 1 false / refuted / no solution, 2 usage or
format error, 3 search budget exceeded.  Outputs use the library's text
formats, so they can be fed back as inputs.  Lists of grids are separated
by lines holding ``---``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import hanf, marked, render, solve, translate
from .evaluate import Budget, BudgetExceeded, ConsistentUpTo, eval_pattern, eval_universal_periodic, pattern_check
from .grid import (
    Alphabet,
    GridError,
    Pattern,
    PeriodicConfig,
    ProjectionMap,
    SoficPresentation,
    dump_grid,
    dump_sft,
    read_grid,
    read_sft,
)
from .logic import FormulaError, classify, fragment_names, is_functional, is_relational, parse, to_str

OK, FALSE, USAGE, BUDGET = 0, 1, 2, 3
SEPARATOR = "---"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- inputs


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _alphabet(args) -> Alphabet | None:
    return Alphabet(args.alphabet.split()) if args.alphabet else None


def _formula(args):
    if args.expr is not None:
        text = args.expr
    elif args.formula is not None:
        text = _read(args.formula)
    else:
        raise UsageError("give a formula with --expr or --formula")
    return parse(text, _alphabet(args))


def _need(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name.replace('_', '-')} is required")
    return value


def _grid(path: str):
    return read_grid(_read(path))


def _pattern(args) -> Pattern:
    x = _grid(_need(args, "pattern"))
    if not isinstance(x, Pattern):
        raise UsageError("--pattern expects a finite pattern")
    return x


def _config(args) -> PeriodicConfig:
    x = _grid(_need(args, "config"))
    if not isinstance(x, PeriodicConfig):
        raise UsageError("--config expects a periodic configuration")
    return x


def read_grids(text: str) -> list:
    blocks, cur = [], []
    for line in text.splitlines():
        if line.strip() == SEPARATOR:
            blocks.append("\n".join(cur))
            cur = []
        else:
            cur.append(line)
    blocks.append("\n".join(cur))
    return [read_grid(b) for b in blocks if b.strip()]


def dump_grids(items) -> str:
    return f"{SEPARATOR}\n".join(dump_grid(x) for x in items)


def _budget(args) -> Budget:
    bits = args.budget_bits
    if bits is None:
        env = os.environ.get("TESSELOGIC_BUDGET_BITS")
        bits = int(env) if env else Budget().max_subset_bits
    return Budget(max_subset_bits=bits)


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _figures(args, items, stem: str) -> None:
    """Write one PNG per grid when ``--png-dir`` is given."""
    if not getattr(args, "png_dir", None):
        return
    out = Path(args.png_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, x in enumerate(items):
        (out / f"{stem}_{i:03d}.png").write_bytes(render.render(x, "png"))


# -------------------------------------------------------------- commands


def cmd_parse(args) -> int:
    _emit(args, to_str(_formula(args)) + "\n")
    return OK


def cmd_classify(args) -> int:
    f = _formula(args)
    modes = [m for m, ok in (("relational", is_relational(f)), ("functional", is_functional(f))) if ok]
    lines = ["mode: " + " ".join(modes)] + fragment_names(classify(f))
    _emit(args, "\n".join(lines) + "\n")
    return OK


def cmd_compile(args) -> int:
    if args.target == "sft":
        alphabet = _alphabet(args) or _need_alphabet()
        _emit(args, dump_sft(translate.sft_of_universal(_formula(args), alphabet)))
    elif args.target == "formula":
        x = read_sft(_read(_need(args, "sft")))
        f = translate.formula_of_sofic(x) if isinstance(x, SoficPresentation) else translate.formula_of_sft(x)
        _emit(args, to_str(f) + "\n")
    elif args.target == "sofic":
        alphabet = _alphabet(args) or _need_alphabet()
        _emit(args, dump_sft(translate.sofic_of_cform(_formula(args), alphabet)))
    else:
        _emit(args, to_str(translate.to_cform(_formula(args))) + "\n")
    return OK


def _need_alphabet():
    raise UsageError("--alphabet is required")


def cmd_eliminate(args) -> int:
    _emit(args, to_str(translate.eliminate_so_universal(_formula(args))) + "\n")
    return OK


def _counting_marked(p: Pattern, k: int, kind: str):
    if kind == "atmost":
        m = marked.counting_marked_sft(p, 0, translate.EXACT)
        for i in range(1, k + 1):
            m = marked.union_marked(m, marked.counting_marked_sft(p, i, translate.EXACT))
        return m
    mode = translate.EXACT if kind == "exact" else translate.AT_LEAST
    return marked.counting_marked_sft(p, k, mode)


def describe_marked(m) -> str:
    alphabet = m.base.alphabet
    layers = getattr(alphabet, "layers", None) or [("color", alphabet.colors)]
    lines = [f"# marked set of finite type, {len(alphabet)} base states"]
    lines += [f"layer {name}: {' '.join(values)}" for name, values in layers]
    for r in m.base.rules():
        shape = " ".join(f"({v.x},{v.y})" for v in r.shape)
        lines.append(f"rule {r.label}: {shape}")
    lines.append(f"q0: {m.q0.label}")
    lines.append(f"q1: {m.q1.label}")
    lines.append("target: " + " ".join(m.target.colors))
    return "\n".join(lines) + "\n"


def cmd_counting(args) -> int:
    p = _pattern(args)
    k = _need(args, "k")
    kind, form = args.kind, args.form
    if form == "marked":
        _emit(args, describe_marked(_counting_marked(p, k, kind)))
        return OK
    if kind == "atmost":
        if form == "fo":
            f = translate.formula_atmost(p, k)
        elif form == "sofic":
            f = translate.soficform_atmost(p, k)
        else:
            f = translate.formula_count(p, k, translate.EXACT)
            for i in range(k):
                f = translate.combine_union(translate.formula_count(p, i, translate.EXACT), f)
    else:
        if form in ("fo", "sofic"):
            raise UsageError(f"{kind} counting has no {form} form; use emso or marked")
        mode = translate.EXACT if kind == "exact" else translate.AT_LEAST
        f = translate.formula_count(p, k, mode)
    _emit(args, to_str(f) + "\n")
    return OK


def cmd_check(args) -> int:
    f = _formula(args)
    budget = _budget(args)
    if args.mode == "pattern":
        ok = eval_pattern(f, _pattern(args), budget)
        _emit(args, ("true" if ok else "false") + "\n")
        return OK if ok else FALSE
    if args.mode == "periodic":
        ok = eval_universal_periodic(f, _config(args), budget)
        _emit(args, ("true" if ok else "false") + "\n")
        return OK if ok else FALSE
    verdict = pattern_check(f, _config(args), _need(args, "radius"), budget)
    if isinstance(verdict, ConsistentUpTo):
        _emit(args, f"consistent up to radius {verdict.radius}\n")
        return OK
    _emit(args, f"refuted at radius {verdict.radius}\n" + dump_grid(verdict.pattern))
    return FALSE


def _sft_arg(args):
    return read_sft(_read(_need(args, "sft")))


def _marked_arg(args):
    if args.marked:
        return marked.read_marked(_read(args.marked))
    if args.pattern:
        mode = args.count_mode or "exact"
        return _counting_marked(_pattern(args), _need(args, "k"), mode)
    raise UsageError("give --marked FILE or --pattern FILE with -k")


def cmd_solve(args) -> int:
    w, h = _need(args, "w"), _need(args, "h")
    if args.mode == "torus":
        s = _sft_arg(args)
        if isinstance(s, SoficPresentation):
            s = s.base
        sols = solve.torus_solutions(s, w, h, args.limit)
        _emit(args, dump_grids(sols))
        _figures(args, sols, "torus")
        print(f"{len(sols)} solutions", file=sys.stderr)
        return OK if sols else FALSE
    m = _marked_arg(args)
    sols = solve.marked_solutions(m, w, h, args.limit)
    images = [p for _, p in sols]
    _emit(args, dump_grids(images))
    _figures(args, images, "marked")
    print(f"{len(sols)} solutions", file=sys.stderr)
    return OK if sols else FALSE


def cmd_lang(args) -> int:
    x = _sft_arg(args)
    spec = solve.WindowSpec(_need(args, "w"), _need(args, "h"), args.margin)
    if args.mode == "admissible":
        if isinstance(x, SoficPresentation):
            found = solve.projected_admissible(x, spec)
        else:
            found = solve.admissible_patterns(x, spec)
    else:
        found = solve.forbidden_language(x, spec)
    items = sorted(found, key=Pattern.sort_key)
    _emit(args, dump_grids(items))
    print(f"{len(items)} windows", file=sys.stderr)
    return OK


def cmd_hanf(args) -> int:
    if args.mode == "ball":
        _emit(args, f"{hanf.ball_size(_need(args, 'radius'))}\n")
        return OK
    if args.mode == "bound":
        n, k = hanf.universal_bound(_formula(args))
        _emit(args, f"radius {n}\nthreshold {k}\n")
        return OK
    left, right = _grid(_need(args, "left")), _grid(_need(args, "right"))
    n, k = _need(args, "n"), _need(args, "k")
    ge_lr = hanf.ge_nk(left, right, n, k)
    ge_rl = hanf.ge_nk(right, left, n, k)
    eq = hanf.equiv_nk(left, right, n, k)
    _emit(args, f"left>=right {str(ge_lr).lower()}\nright>=left {str(ge_rl).lower()}\nequivalent {str(eq).lower()}\n")
    return OK if eq else FALSE


def _projection(args) -> ProjectionMap:
    source = _alphabet(args) or _need_alphabet()
    text = _need(args, "projection")
    mapping, targets = {}, []
    for item in text.split():
        src, sep, dst = item.partition("->")
        if not sep:
            raise UsageError(f"bad projection entry {item!r}")
        mapping[src] = dst
        if dst not in targets:
            targets.append(dst)
    return ProjectionMap.from_names(source, Alphabet(targets), mapping)


def cmd_ea(args) -> int:
    pi = _projection(args)
    patterns = read_grids(_read(_need(args, "patterns")))
    if args.op == "e":
        out = solve.e_operator(pi, patterns)
    else:
        out = solve.a_operator(pi, patterns)
    _emit(args, dump_grids(sorted(out, key=Pattern.sort_key)))
    return OK


def cmd_render(args) -> int:
    path = args.config or args.pattern
    if path is None:
        raise UsageError("give --config or --pattern")
    x = _grid(path)
    palette = render.parse_palette(args.palette) if args.palette else None
    data = render.render(x, args.format, palette)
    if args.output:
        Path(args.output).write_bytes(data)
    elif args.format == "png":
        raise UsageError("png output needs -o FILE")
    else:
        sys.stdout.buffer.write(data)
    return OK


# ----------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, formula=False) -> None:
    if formula:
        p.add_argument("--expr", help="formula text")
        p.add_argument("--formula", help="file holding the formula")
    p.add_argument("--alphabet", help='colors, e.g. "D L"')
    p.add_argument("-o", "--output", help="write the result to FILE")
    p.add_argument("--budget-bits", type=int, help="largest set-variable search, in bits")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tesselogic", description="Logic and tilings on the square grid.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", conflict_handler="resolve", help="parse and print a formula")
    _common(p, formula=True)
    p.set_defaults(run=cmd_parse)

    p = sub.add_parser("classify", conflict_handler="resolve", help="report the syntactic fragments of a formula")
    _common(p, formula=True)
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("compile", conflict_handler="resolve", help="translate between formulas, SFTs and sofic presentations")
    p.add_argument("target", choices=["sft", "formula", "sofic", "cform"])
    _common(p, formula=True)
    p.add_argument("--sft", help="SFT or sofic presentation file")
    p.set_defaults(run=cmd_compile)

    p = sub.add_parser("eliminate", conflict_handler="resolve", help="remove universal set quantifiers")
    _common(p, formula=True)
    p.set_defaults(run=cmd_eliminate)

    p = sub.add_parser("counting", conflict_handler="resolve", help="formulas and tilesets counting pattern occurrences")
    p.add_argument("kind", choices=["atmost", "exact", "atleast"])
    p.add_argument("--form", choices=["fo", "emso", "sofic", "marked"], default="fo")
    p.add_argument("--pattern", help="pattern file")
    p.add_argument("-k", type=int)
    _common(p)
    p.set_defaults(run=cmd_counting)

    p = sub.add_parser("check", conflict_handler="resolve", help="model checking")
    p.add_argument("mode", choices=["pattern", "periodic", "patterns-up-to"])
    _common(p, formula=True)
    p.add_argument("--pattern")
    p.add_argument("--config")
    p.add_argument("--radius", type=int)
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("solve", conflict_handler="resolve", help="search tori or marked windows")
    p.add_argument("mode", choices=["torus", "marked"])
    p.add_argument("--sft")
    p.add_argument("--marked", help="marked SFT file")
    p.add_argument("--pattern", help="pattern for a counting tileset")
    p.add_argument("-k", type=int)
    p.add_argument("--count-mode", choices=["exact", "atleast", "atmost"])
    p.add_argument("-w", type=int)
    p.add_argument("-h", type=int)
    p.add_argument("--limit", type=int)
    p.add_argument("--png-dir", help="also draw every solution as a PNG in DIR")
    _common(p)
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("lang", conflict_handler="resolve", help="window languages")
    p.add_argument("mode", choices=["admissible", "forbidden"])
    p.add_argument("--sft")
    p.add_argument("-w", type=int)
    p.add_argument("-h", type=int)
    p.add_argument("--margin", type=int, default=0)
    _common(p)
    p.set_defaults(run=cmd_lang)

    p = sub.add_parser("hanf", conflict_handler="resolve", help="occurrence-count comparisons")
    p.add_argument("mode", choices=["bound", "compare", "ball"])
    _common(p, formula=True)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("-n", type=int)
    p.add_argument("-k", type=int)
    p.add_argument("--radius", type=int)
    p.set_defaults(run=cmd_hanf)

    p = sub.add_parser("ea", conflict_handler="resolve", help="image and dual-image operators on pattern sets")
    p.add_argument("op", choices=["e", "a"])
    p.add_argument("--projection", help='e.g. "D->W L->W"')
    p.add_argument("--patterns", help="grids separated by --- lines")
    _common(p)
    p.set_defaults(run=cmd_ea)

    p = sub.add_parser("render", conflict_handler="resolve", help="draw a pattern or configuration")
    p.add_argument("--config")
    p.add_argument("--pattern")
    p.add_argument("--format", choices=list(render.FORMATS), default="text")
    p.add_argument("--palette", help='e.g. "D=0 L=255" or "D=black L=#eeeeee"')
    _common(p)
    p.set_defaults(run=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.run(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return BUDGET
    except (UsageError, FormulaError, GridError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
