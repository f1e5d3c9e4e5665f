import json

import pytest

from conftest import PRES
from spim.cli import main
from spim.core import load_presentation, parse_presentation, print_presentation

VOCAB = {"true", "false", "equal", "unknown", "inconclusive", "not-applicable"}


def run(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


def f(name):
    return str(PRES / f"{name}.pres")


@pytest.mark.parametrize("name, word, expected", [
    ("aab", "a", "true"), ("aab", "a a b", "true"), ("aab", "b", "false"), ("aab", "a'", "false"),
    ("aba", "a'", "true"), ("aba", "b'", "true"),
])
def test_pmp(capsys, name, word, expected):
    code, v = run(capsys, "pmp", f(name), "--word", word)
    assert code == 0 and v["answer"] == expected
    assert v["trace"]["pipeline"] in ("uml", "da", "free", "hidden-uml")


def test_wp(capsys):
    code, v = run(capsys, "wp", f("aab"), "--eq", "a a b", "1")
    assert v["answer"] == "equal" and v["trace"]["engine"] == "meu"
    code, v = run(capsys, "wp", f("bicyclic"), "--eq", "a' a", "1")
    assert v["answer"] == "false" and v["trace"]["engine"] == "meu"


def test_wp_falls_back_to_stephen(capsys, tmp_path):
    # no pipeline applies to this factorisation, so only the approximant route remains
    p = tmp_path / "odd.pres"
    p.write_text("inverse_monoid\ngenerators: a b\nrelator: (a b) (b a)\noracle: kb 50\n")
    code, v = run(capsys, "wp", str(p), "--eq", "a", "b", "--budget", "2")
    assert code == 0 and v["answer"] == "unknown" and v["trace"]["engine"] == "stephen"
    code, v = run(capsys, "wp", str(p), "--eq", "a b b a", "1", "--budget", "2")
    assert v["answer"] == "equal"


def test_analyze_uml(capsys, tmp_path):
    dot = tmp_path / "s.dot"
    code, v = run(capsys, "analyze", f("uml"), "--dot", str(dot))
    assert v["trace"]["uniquely_marked"] is True
    assert v["trace"]["eunitary"] == "amalgam-over-units"
    assert v["trace"]["conservative"] == "unital"
    assert dot.read_text().startswith("digraph")


def test_analyze_ohare_emits_rewrite(capsys):
    code, v = run(capsys, "analyze", f("ohare"))
    assert v["trace"]["pipeline"] == "hidden-uml"
    rewrite = v["trace"]["hidden_uml_rewrite"]
    # the rewritten presentation parses
    assert parse_presentation(rewrite).generators


def test_analyze_no_relators(capsys, tmp_path):
    p = tmp_path / "free.pres"
    p.write_text("inverse_monoid\ngenerators: a b\n")
    code, v = run(capsys, "analyze", str(p))
    assert v["answer"] == "not-applicable"
    flat = [x for x in v["trace"].values() if isinstance(x, str)]
    assert flat and all(x == "not-applicable" for x in flat)


def test_stephen(capsys):
    code, v = run(capsys, "stephen", f("bicyclic"), "--word", "a", "--reads", "a a' a", "--budget", "1")
    assert code == 0 and v["answer"] == "true"


@pytest.mark.parametrize("left, right, pair, display", [
    ("uml_1", "uml_2", "z_1=z_2", "(z_1)(z_2)^{-1}=1"),
    ("da_1", "da_2", "a_1 a_1 b_1 b_1 b_1=a_2 a_2 b_2 b_2 b_2", "(a_1^2 b_1^3) (a_2^2 b_2^3)^{-1} =1"),
])
def test_amalgamate(capsys, tmp_path, left, right, pair, display):
    out = tmp_path / "m.pres"
    code, v = run(capsys, "amalgamate", f(left), f(right), "--pair", pair, "-o", str(out))
    assert code == 0
    norm = [r.replace(" ", "") for r in v["trace"]["relators"]]
    assert norm[-1] == display.replace(" ", "")
    written = load_presentation(out)
    assert len(written.relators) == 3
    assert print_presentation(load_presentation(out)) == out.read_text()
    cert = json.loads((tmp_path / "m.pres.cert.json").read_text())
    assert cert["route"] == "amalgam-over-units"
    # the written file carries its own oracle and decides queries
    code, w = run(capsys, "pmp", str(out), "--word", pair.split("=")[0])
    assert w["answer"] == "true"


def test_amalgamate_errors(capsys):
    assert main(["amalgamate", f("uml_1"), f("uml_1"), "--pair", "z_1=z_1"]) == 1
    assert main(["amalgamate", f("uml_1"), f("uml_2"), "--pair", "x_1=z_2"]) == 1
    assert "error" in capsys.readouterr().err


def test_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.pres"
    bad.write_text("group\ngenerators: a\nrelator: a b\n")
    assert main(["pmp", str(bad), "--word", "a"]) == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["pmp", str(tmp_path / "missing.pres"), "--word", "a"]) == 1


def test_text_output_and_vocabulary(capsys):
    assert main(["pmp", f("aab"), "--word", "b"]) == 0
    assert capsys.readouterr().out.startswith("pmp: false")
    for argv in (["analyze", f("aab")], ["analyze", f("da")], ["wp", f("uml_1"), "--eq", "z_1", "z_1"]):
        code, v = run(capsys, *argv)
        assert v["answer"] in VOCAB


def test_compare(capsys):
    code, v = run(capsys, "compare", f("aab"), "--samples", "10", "--nodes", "5000")
    assert v["answer"] == "true" and v["trace"]["disagreements"] == 0
    assert v["trace"]["seed"] == 0 and len(v["trace"]["rows"]) == 10
