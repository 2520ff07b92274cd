import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import toy_corpus
from softdd.constraints import (
    HARD,
    HIERARCHICAL,
    PAIRWISE_DIFF,
    PAIRWISE_SUM,
    Constraint,
    ConstraintError,
    ConstraintSet,
    importance_scores,
    instantiate_all,
    instantiate_hierarchical,
    instantiate_pairwise,
    instantiate_singleton,
    load_constraints,
    parse_constraint,
    format_constraint,
    prune,
    save_constraints,
    violation,
)
from softdd.labels import CountKey, LabelSchema, count_vector, parse_label

A0, B0 = CountKey(0, ("a",)), CountKey(0, ("b",))


def test_violation_examples():
    title = CountKey(0, ("title",))
    assert violation(Constraint.at_most({title: 1}, 1), {title: 2}) == 1
    assert violation(Constraint.at_most({title: 1}, 1), {title: 0}) == 0
    i, j = CountKey(0, ("i",)), CountKey(0, ("j",))
    assert violation(Constraint.at_most({i: 1, j: -1}, 0), {i: 3, j: 1}) == 2


def test_at_least_is_stored_negated():
    c = Constraint.at_least({A0: 1, B0: 1}, 1)
    assert c.coefficients == ((A0, -1), (B0, -1)) and c.bound == -1
    assert violation(c, {A0: 0, B0: 0}) == 1
    assert violation(c, {A0: 1, B0: 0}) == 0


def test_normal_form_merges_and_sorts():
    c = Constraint(((B0, 1), (A0, 2), (B0, -1)), 3)
    assert c.coefficients == ((A0, 2),)
    with pytest.raises(ConstraintError):
        Constraint(((A0, 1), (A0, -1)), 0)
    with pytest.raises(ConstraintError):
        Constraint(((A0, 1),), 0, penalty=-0.5)


def test_template_sizes_for_one_pair():
    schema = LabelSchema(("O", "B-a", "B-b"))
    assert len(instantiate_singleton(schema)) == 2
    pw = instantiate_pairwise(schema)
    # 8 sum rows; the 16 diff rows collapse to 14 since a-b<=0 equals -(b-a)>=0
    assert sum(c.origin == PAIRWISE_SUM for c in pw) == 8
    assert sum(c.origin == PAIRWISE_DIFF for c in pw) == 14
    assert instantiate_hierarchical(schema) == []
    assert len(instantiate_all(schema)) == 24


def test_hierarchical_template_on_nested_chain():
    schema = LabelSchema(("O", "B-a/B-x/B-u", "I-a/I-x/I-u"))
    keys = [CountKey(0, ("a",)), CountKey(1, ("a", "x")), CountKey(2, ("a", "x", "u"))]
    hier = instantiate_hierarchical(schema)
    assert len(hier) == 6  # three related pairs, two rows each
    for con in hier:
        assert con.origin == HIERARCHICAL and con.bound == 0
        assert {k for k, _ in con.coefficients} <= set(keys)


def test_same_name_different_level_is_related():
    schema = LabelSchema(("O", "B-x", "B-a/B-x"))
    hier = instantiate_hierarchical(schema)
    # 0:x~1:a/x by shared last name, 0:a~1:a/x by prefix
    assert len(hier) == 4
    schema = LabelSchema(("O", "B-y", "B-a/B-x"))
    assert len(instantiate_hierarchical(schema)) == 2  # only 0:a with 1:a/x


def test_union_hierarchical_shadows_pairwise():
    schema = LabelSchema(("O", "B-a/B-x", "I-a/I-x"))
    union = instantiate_all(schema)
    forms = [c.form for c in union]
    assert len(forms) == len(set(forms))
    eq_rows = [c for c in union if c.bound == 0 and len(c.coefficients) == 2
               and sorted(v for _, v in c.coefficients) == [-1, 1]]
    assert eq_rows and all(c.origin == HIERARCHICAL for c in eq_rows)


@st.composite
def random_counts(draw):
    return {A0: draw(st.integers(0, 6)), B0: draw(st.integers(0, 6))}


@given(random_counts())
def test_matrix_form_matches_direct_violations(counts):
    schema = LabelSchema(("O", "B-a", "B-b"))
    cset = ConstraintSet(schema, tuple(instantiate_all(schema)))
    labels = ["B-a"] * counts[A0] + ["B-b"] * counts[B0]
    direct = [violation(c, counts) for c in cset]
    assert cset.violations_of_labels(labels).tolist() == direct
    vec = count_vector([parse_label(l) for l in labels], cset.keys)
    assert cset.violations_of_counts(vec).tolist() == direct


def test_matrix_counts_only_openings():
    schema = LabelSchema(("O", "B-a", "I-a"))
    cset = ConstraintSet(schema, (Constraint.at_most({A0: 1}, 0),))
    assert cset.A.tolist() == [[0, 1, 0]]


def test_constraint_set_rejects_unknown_key():
    with pytest.raises(ConstraintError):
        ConstraintSet(LabelSchema(("O", "B-a")), (Constraint.at_most({B0: 1}, 1),))


def test_text_roundtrip(tmp_path):
    schema = LabelSchema(("O", "B-a/B-x", "I-a/I-x", "B-b"))
    cons = instantiate_all(schema)
    cons = [c if i % 3 else Constraint(c.coefficients, c.bound, penalty=0.1 * i + 1 / 3, origin=c.origin)
            for i, c in enumerate(cons)]
    cons[1] = Constraint(cons[1].coefficients, cons[1].bound, penalty=HARD, origin=cons[1].origin)
    path = tmp_path / "c.txt"
    save_constraints(path, cons, notes=[f"imp={i}" for i in range(len(cons))])
    assert load_constraints(path) == cons
    assert path.read_text().startswith("# imp=0\n")


def test_parse_rejects_malformed_lines():
    with pytest.raises(ConstraintError):
        parse_constraint("custom\t+1*0:a\t>=\t1\t0.0")
    with pytest.raises(ConstraintError):
        parse_constraint("custom\t+1 0:a\t<=\t1\t0.0")
    line = format_constraint(Constraint.at_most({A0: 1}, 1, penalty=HARD))
    assert line == "custom\t+1*0:a\t<=\t1\tHARD"


def toy_constraints(schema):
    return ConstraintSet(schema, (
        Constraint.at_most({A0: 1}, 1),
        Constraint.at_most({B0: 1}, 1),
        Constraint.at_most({A0: 1, B0: -1}, 0),
        Constraint.at_least({A0: 1, B0: 1}, 1),
    ))


def test_importance_edge_policies(toy_schema, toy_model):
    cset = toy_constraints(toy_schema)
    # gold never violates b<=1 but the model predicts "bb" -> +inf;
    # a<=1 is violated by neither -> 0
    corpus = toy_corpus([("BB", "bo"), ("A", "a")])
    imp = importance_scores(cset, corpus, toy_model)
    assert imp[0] == 0.0
    assert imp[1] == math.inf


def test_importance_ratio(toy_schema, toy_model):
    cset = toy_constraints(toy_schema)
    # gold "aa" violates a<=1 and a-b<=0 in both examples; pred does too
    corpus = toy_corpus([("AA", "aa"), ("AAN", "aao"), ("AB", "ab")])
    imp = importance_scores(cset, corpus, toy_model)
    assert imp[0] == 1.0
    assert imp[2] == 1.0


def test_prune_threshold():
    schema = LabelSchema(("O", "B-a", "B-b"))
    cset = toy_constraints(schema)
    scores = np.array([2.75, math.inf, 2.7499, 0.0])
    assert [c for c in prune(cset, scores, 2.75)] == [cset[0], cset[1]]
    assert len(prune(cset, scores, 0.0)) == 4
    assert len(prune(cset, scores, math.inf)) == 0
    with pytest.raises(ConstraintError):
        prune(cset, scores[:2], 1.0)


def test_with_penalties_and_subset():
    schema = LabelSchema(("O", "B-a", "B-b"))
    cset = toy_constraints(schema).with_penalties([0.0, 1.5, 0.0, 2.0])
    assert cset.penalties.tolist() == [0.0, 1.5, 0.0, 2.0]
    sub = cset.subset(cset.penalties > 0)
    assert len(sub) == 2 and sub.penalties.tolist() == [1.5, 2.0]
