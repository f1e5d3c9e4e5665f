import pytest

from spim.assemble import build_oracle
from spim.core import parse_presentation, parse_word as W
from spim.oracleharness import EnumerationBudget, brute_submonoid_membership, distinct_generators
from spim.pmp import (
    PipelineError,
    PrefixMembership,
    prefix_generators,
    trivial_factorisation,
)
from spim.products import AbelianImage

# frozen engine answers; every entry is re-derived by brute force below
CASES = {
    "aab": {"a": True, "a a": True, "a a b": True, "a a a": True, "b": False, "a b": False, "a'": False},
    "aba": {"a": True, "a'": True, "b": True, "b'": True},
    "bicyclic": {"a": True, "a'": False},
    "uml_1": {"z_1": True, "z_1'": True, "x_1": True, "x_1 x_1": True, "z_1 x_1": True,
              "y_1": False, "x_1'": False},
    "da_1": {"a_1 a_1 b_1 b_1 b_1": True, "c_1 c_1 c_1": True, "c_1'": True,
             "c_1 c_1 c_1 c_1 c_1 c_1 c_1": True, "a_1'": False, "b_1": False},
    "ohare": {"a_1": True, "a_1 b_1": True, "a_1 c_1 d_1": True, "b_1": False, "a_1'": False, "d_1": False},
}
PIPELINES = {"aab": "uml", "aba": "uml", "bicyclic": "free", "uml_1": "uml", "da_1": "da", "ohare": "hidden-uml"}


@pytest.fixture(scope="module")
def engines(pres):
    return {n: PrefixMembership.for_presentation(pres(n)) for n in CASES}


@pytest.mark.parametrize("name", CASES)
def test_pipeline_selection(engines, name):
    assert engines[name].name == PIPELINES[name]


@pytest.mark.parametrize("name, word, expected", [(n, w, e) for n, d in CASES.items() for w, e in d.items()])
def test_frozen_answers(engines, name, word, expected):
    assert engines[name].decide(W(word)).member is expected


@pytest.mark.parametrize("name", CASES)
def test_frozen_answers_against_brute_force(pres, name):
    p = pres(name)
    G = build_oracle(p)
    gens = distinct_generators(prefix_generators(p).words, G)
    ab = AbelianImage(p.generators, p.relators)
    budget = EnumerationBudget(max_product_length=6, node_budget=20000)
    for word, expected in CASES[name].items():
        r = brute_submonoid_membership(gens, G, W(word), budget, ab)
        assert r.member is expected, word


def test_empty_word_is_member(engines):
    for pm in engines.values():
        assert pm.decide(()).member is True


def test_prefix_generators():
    p = parse_presentation("inverse_monoid\ngenerators: a b\nrelator: a a b\n")
    assert set(prefix_generators(p).words) == {W("a"), W("a a"), W("a a b")}
    p = parse_presentation("inverse_monoid\ngenerators: x y z\nrelator: (z) (x x y) (x x y) (z)\n")
    words = set(prefix_generators(p, p.factorisation).words)
    assert {W("z"), W("z'"), W("x"), W("x x"), W("x x y"), W("y'"), W("y' x'"), W("y' x' x'")} <= words
    p = parse_presentation("inverse_monoid\ngenerators: a\n")
    assert list(prefix_generators(p).words) in ([], [()])


def test_trivial_factorisation_spells_relators():
    p = parse_presentation("inverse_monoid\ngenerators: a b\nrelator: a b a\nrelator: b b\n")
    f = trivial_factorisation(p)
    assert all(f.spell(i) == p.relators[i] for i in range(2))


def test_no_pipeline_for_unstructured_factorisation():
    p = parse_presentation("inverse_monoid\ngenerators: a b\nrelator: (a b) (b a)\noracle: kb 50\n")
    with pytest.raises(PipelineError):
        PrefixMembership.for_presentation(p)


def test_verdict_json(engines):
    v = engines["aab"].decide(W("a b"))
    d = v.to_json()
    assert d["member"] is False and d["pipeline"] == "uml" and d["word"] == "a b"
