import pytest

from tesselogic import cli
from tesselogic.catalog import AT_MOST_ONE_D, DL, QUARTER_CLAUSES, corner_presentation, one_per_period, quarter_sft, uniform
from tesselogic.grid import PeriodicConfig, Pattern, dump_grid, dump_sft, read_grid, read_sft
from tesselogic.logic import parse


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compile_sft_single_clause(capsys):
    code, out, _ = run(capsys, "compile", "sft", "--expr", "forall z. !(@D(z) & @L(E(z)))", "--alphabet", "D L")
    assert code == 0
    s = read_sft(out)
    assert len(s.forbidden) == 1
    assert s.forbidden[0] == Pattern.from_rows(DL, [["D", "L"]])


def test_compiled_sft_feeds_back_in(capsys, files):
    _, out, _ = run(capsys, "compile", "sft", "--expr", QUARTER_CLAUSES, "--alphabet", "D L")
    code, formula, _ = run(capsys, "compile", "formula", "--sft", files("q.sft", out))
    assert code == 0
    parse(formula)


def test_check_periodic_refutes_at_most_one(capsys, files):
    cfg = files("one.cfg", dump_grid(one_per_period(3)))
    code, out, _ = run(capsys, "check", "periodic", "--expr", AT_MOST_ONE_D, "--alphabet", "D L", "--config", cfg)
    assert (code, out) == (1, "false\n")
    cfg = files("light.cfg", dump_grid(uniform("L")))
    assert run(capsys, "check", "periodic", "--expr", AT_MOST_ONE_D, "--config", cfg)[0] == 0


def test_check_pattern_and_radius(capsys, files):
    pat = files("p.grid", "alphabet: D L\nD L\nL D\n")
    code, out, _ = run(capsys, "check", "pattern", "--expr", AT_MOST_ONE_D, "--pattern", pat)
    assert (code, out) == (1, "false\n")
    cfg = files("one.cfg", dump_grid(one_per_period(3)))
    code, out, _ = run(capsys, "check", "patterns-up-to", "--expr", AT_MOST_ONE_D, "--config", cfg, "--radius", "3")
    assert code == 1 and out.startswith("refuted at radius")
    cfg = files("light.cfg", dump_grid(uniform("L")))
    code, out, _ = run(capsys, "check", "patterns-up-to", "--expr", AT_MOST_ONE_D, "--config", cfg, "--radius", "2")
    assert (code, out) == (0, "consistent up to radius 2\n")


def test_solve_torus(capsys, files, tmp_path):
    sft = files("q.sft", dump_sft(quarter_sft()))
    code, out, err = run(capsys, "solve", "torus", "--sft", sft, "-w", "4", "-h", "4", "--png-dir", str(tmp_path / "png"))
    assert code == 0
    assert "2 solutions" in err
    sols = cli.read_grids(out)
    assert sols == [uniform("D").unrolled(4, 4), uniform("L").unrolled(4, 4)]
    pngs = sorted((tmp_path / "png").iterdir())
    assert len(pngs) == 2
    assert pngs[0].read_bytes().startswith(b"\x89PNG")


def test_solve_marked_counting(capsys, files):
    pat = files("d.grid", "alphabet: D L\nD\n")
    code, out, _ = run(capsys, "solve", "marked", "--pattern", pat, "-k", "0", "-w", "2", "-h", "2", "--limit", "3")
    assert code == 0
    windows = cli.read_grids(out)
    assert 1 <= len(windows) <= 3
    assert all(w.count(0) == 0 for w in windows)


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "compile", "sft", "--expr", "forall x. @D(x)")[0] == 2
    assert run(capsys, "parse", "--expr", "forall x. (@D(x)")[0] == 2
    assert run(capsys, "parse")[0] == 2


def test_budget_exit_status(capsys, files, monkeypatch):
    pat = files("big.grid", "alphabet: D L\n" + "D D D D D\n" * 5)
    argv = ["check", "pattern", "--expr", "exists X. forall x. X(x)", "--pattern", pat]
    assert run(capsys, *argv, "--budget-bits", "4")[0] == 3
    monkeypatch.setenv("TESSELOGIC_BUDGET_BITS", "4")
    assert run(capsys, *argv)[0] == 3
    assert run(capsys, *argv, "--budget-bits", "25")[0] == 0


def test_parse_and_classify(capsys):
    code, out, _ = run(capsys, "parse", "--expr", "forall x.   @D(x)&@L(E(x))")
    assert (code, out) == (0, "forall x. @D(x) & @L(E(x))\n")
    code, out, _ = run(capsys, "classify", "--expr", AT_MOST_ONE_D)
    lines = out.splitlines()
    assert lines[0] == "mode: relational functional"
    assert "UNIVERSAL_FO" in lines and "THEOREM6" not in lines


def test_eliminate_output_has_no_set_quantifier(capsys):
    code, out, _ = run(capsys, "eliminate", "--expr", "forall X. forall x. X(x) | !X(x)")
    assert code == 0
    assert "X" not in out


def test_counting_forms(capsys, files):
    pat = files("d.grid", "alphabet: D L\nD\n")
    code, out, _ = run(capsys, "counting", "atmost", "--pattern", pat, "-k", "1")
    assert code == 0
    parse(out)
    code, out, _ = run(capsys, "counting", "exact", "--form", "marked", "--pattern", pat, "-k", "1")
    assert code == 0
    assert "q0:" in out and "target: D L" in out
    assert run(capsys, "counting", "exact", "--form", "fo", "--pattern", pat, "-k", "1")[0] == 2


def test_lang_forbidden_on_sofic(capsys, files):
    pres = files("c.sofic", dump_sft(corner_presentation()))
    code, out, _ = run(capsys, "lang", "forbidden", "--sft", pres, "-w", "2", "-h", "1", "--margin", "2")
    assert code == 0
    names = [{v: p.alphabet.name(c) for v, c in p.items()} for p in cli.read_grids(out)]
    assert {(0, 0): "D", (1, 0): "D"} in names


def test_hanf_commands(capsys, files):
    assert run(capsys, "hanf", "ball", "--radius", "2")[1] == "13\n"
    assert run(capsys, "hanf", "bound", "--expr", "forall x. @D(x)")[1] == "radius 3\nthreshold 26\n"
    left = files("a.grid", "alphabet: D L\nL L L\nL D L\nL L L\n")
    right = files("b.grid", "alphabet: D L\nD L L\nL D L\nL L L\n")
    code, out, _ = run(capsys, "hanf", "compare", "--left", left, "--right", right, "-n", "0", "-k", "3")
    assert code == 1
    assert out == "left>=right false\nright>=left true\nequivalent false\n"


def test_ea_operators(capsys, files):
    pats = files("s.grids", "alphabet: D L\nD\n---\nalphabet: D L\nL\n")
    code, out, _ = run(capsys, "ea", "e", "--alphabet", "D L", "--projection", "D->u L->u", "--patterns", pats)
    assert code == 0 and len(cli.read_grids(out)) == 1
    code, out, _ = run(capsys, "ea", "a", "--alphabet", "D L", "--projection", "D->u L->v", "--patterns", pats)
    assert len(cli.read_grids(out)) == 2


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out.txt"
    code, out, _ = run(capsys, "parse", "--expr", "forall x. @D(x)", "-o", str(target))
    assert code == 0 and out == ""
    assert target.read_text() == "forall x. @D(x)\n"


def test_render_commands(capsys, files, tmp_path):
    cfg = files("d.cfg", dump_grid(PeriodicConfig.uniform(DL, "D").unrolled(4, 4)))
    pgm = tmp_path / "d.pgm"
    assert cli.main(["render", "--config", cfg, "--format", "pgm", "--palette", "D=40 L=200", "-o", str(pgm)]) == 0
    assert pgm.read_bytes() == b"P5 4 4 255\n" + bytes([40] * 16)
    png = tmp_path / "d.png"
    assert cli.main(["render", "--config", cfg, "--format", "png", "-o", str(png)]) == 0
    assert png.read_bytes().startswith(b"\x89PNG")
    assert cli.main(["render", "--config", cfg, "--format", "png"]) == 2
    assert cli.main(["render", "--config", cfg, "--format", "svg", "--palette", "L=1"]) == 2
    code, out, _ = run(capsys, "render", "--config", cfg)
    assert read_grid(out) == read_grid(dump_grid(PeriodicConfig.uniform(DL, "D").unrolled(4, 4)))
