import pytest

from conftest import free_products_upto
from spim.assemble import build_oracle
from spim.core import parse_presentation, parse_word as W, reduce
from spim.oracleharness import (
    MEMBER,
    NOT_FOUND,
    EnumerationBudget,
    brute_submonoid_membership,
    compare_engines,
    compare_presentation,
    distinct_generators,
    sample_queries,
)
from spim.products import AbelianImage, CallableOracle, free_oracle

AAB = "inverse_monoid\ngenerators: a b\nrelator: a a b\noracle: kb 200\n"
SMALL = EnumerationBudget(node_budget=5000, samples=20)


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        EnumerationBudget(max_product_length=0)


def test_trivial_members():
    F = free_oracle("ab")
    gens = [W("a b"), W("b")]
    assert brute_submonoid_membership(gens, F, W("a b"), SMALL).answer == MEMBER
    r = brute_submonoid_membership(gens, F, (), SMALL)
    assert r.member and r.depth == 0


def test_aab_b_not_found():
    p = parse_presentation(AAB)
    G = build_oracle(p)
    ab = AbelianImage(p.generators, p.relators)
    r = brute_submonoid_membership([W("a"), W("a a"), W("a a b")], G, W("b"), EnumerationBudget(), ab)
    assert r.answer == NOT_FOUND and r.depth == 10 and r.excluded_by_cone
    # without the cone certificate the search still comes back empty-handed
    r = brute_submonoid_membership([W("a"), W("a a"), W("a a b")], G, W("b"), EnumerationBudget(), None)
    assert r.answer == NOT_FOUND and r.depth >= 10


def test_ball_search_matches_free_enumeration():
    F = free_oracle("ab")
    gens = [W("a b"), W("b' a"), W("a a")]
    reach = free_products_upto(gens, 6)
    budget = EnumerationBudget(max_product_length=6, node_budget=50000)
    for w in sorted(reach, key=len)[:60]:
        r = brute_submonoid_membership(gens, F, w, budget)
        assert r.member
        prod = reduce(sum((gens[i] for i in r.product), ()))
        assert prod == w
    r = brute_submonoid_membership(gens, F, W("b"), budget)
    assert not r.member and r.depth >= 6


def test_dfs_fallback_without_canonical_forms():
    F = free_oracle("ab")
    opaque = CallableOracle("ab", F.is_identity)
    assert not opaque.has_canonical
    gens = [W("a"), W("a' b")]
    r = brute_submonoid_membership(gens, opaque, W("b a"), EnumerationBudget(max_product_length=4))
    assert r.member and r.depth == 3
    r = brute_submonoid_membership(gens, opaque, W("a'"), EnumerationBudget(max_product_length=4))
    assert not r.member and r.depth == 4


def test_distinct_generators_drops_duplicates():
    p = parse_presentation(AAB)
    G = build_oracle(p)
    assert distinct_generators([W("a"), W("a a b a"), W("a a b"), W("b' a'")], G) == [W("a")]


def test_sample_queries_reproducible():
    p = parse_presentation(AAB)
    gens = [W("a"), W("a a"), W("a a b")]
    q1 = sample_queries(p, gens, SMALL)
    assert q1 == sample_queries(p, gens, SMALL)
    assert len(q1) == 20 and all(0 < len(w) <= 8 for w in q1)


def test_flagging_rules():
    F = free_oracle("ab")
    gens = [W("a")]
    b = EnumerationBudget(max_product_length=3, node_budget=1000)
    queries = [W("a a"), W("b"), W("a a a a a")]
    rep = compare_engines("x", lambda w: False, gens, F, queries, b)
    # engine false vs a found product is flagged
    assert [r.status for r in rep.rows][:2] == ["disagree", "agree"]
    rep = compare_engines("x", lambda w: True, gens, F, queries, b)
    # engine true vs a bounded miss is only unconfirmed (a^5 is a product past length 3)
    assert rep.rows[1].status == "unconfirmed" and not rep.disagreements
    rep = compare_engines("x", lambda w: None, gens, F, queries, b)
    assert all(r.status == "inconclusive" for r in rep.rows)


def test_cone_negative_against_engine_true_is_flagged():
    p = parse_presentation(AAB)
    G = build_oracle(p)
    ab = AbelianImage(p.generators, p.relators)
    rep = compare_engines("aab", lambda w: True, [W("a")], G, [W("b")], SMALL, ab)
    assert rep.rows[0].cone and rep.rows[0].status == "disagree"


@pytest.mark.parametrize("text", [
    "inverse_monoid\ngenerators: a\nrelator: a\noracle: kb 20\n",
    "inverse_monoid\ngenerators: a\nrelator: a a'\noracle: free\n",
    "inverse_monoid\ngenerators: a\nrelator: (a) (a) (a)\noracle: cyclic 3\n",
])
def test_single_generator_sanity_batch(text):
    rep = compare_presentation(parse_presentation(text), SMALL)
    assert rep.rows and not rep.disagreements and not rep.unconfirmed


def test_aab_batch_and_reproducible_report(pres):
    rep = compare_presentation(pres("aab"), SMALL)
    assert not rep.disagreements and not rep.unconfirmed
    assert rep.to_json() == compare_presentation(pres("aab"), SMALL).to_json()
    assert rep.to_json()["seed"] == 0
