import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from softdd.chain import (
    ChainModel,
    InferenceError,
    ScoreTable,
    is_valid_path,
    load_model,
    save_model,
    score_sequence,
    sequence_score,
    token_accuracy,
    train_base_perceptron,
    viterbi,
)
from softdd.constraints import ConstraintSet
from softdd.corpus import CorpusError, LabeledSequence
from softdd.labels import LabelSchema
from softdd.oracle import brute_force_map, enumerate_paths, path_scores

SCHEMAS = [
    ("O", "B-a", "I-a"),
    ("O", "B-a", "I-a", "B-b", "I-b"),
    ("O", "B-a/B-x", "I-a/I-x", "I-a/B-x", "B-b"),
    ("O", "B-a", "B-b"),
]


def random_table(seed, max_len=6):
    rng = np.random.default_rng(seed)
    schema = LabelSchema(SCHEMAS[rng.integers(len(SCHEMAS))])
    n = len(schema)
    t = int(rng.integers(1, max_len + 1))
    return ScoreTable.for_schema(schema, rng.normal(size=(t, n)), rng.normal(size=(n, n))), rng


def exhaustive_best(scores, offset=None):
    """Max over mask-valid sequences by plain enumeration (no DP)."""
    paths = enumerate_paths(scores)
    vals = path_scores(scores, paths)
    if offset is not None:
        vals = vals + np.asarray(offset)[paths].sum(axis=1)
    i = int(np.argmax(vals))
    return paths[i], vals[i]


def test_score_sequence_single_feature():
    schema = LabelSchema(("O", "B-a"))
    model = ChainModel(schema, ("f0",), np.array([[1.0, 0.0]]), np.zeros((2, 2)))
    table = score_sequence(model, [{0: 1.0}])
    assert table.unary.tolist() == [[1.0, 0.0]]


def test_score_sequence_zero_model():
    model = ChainModel.zeros(LabelSchema(("O", "B-a")), ("f0", "f1"))
    assert not score_sequence(model, [{0: 1.0}, {1: 2.0}]).unary.any()


def test_score_sequence_dot_products():
    schema = LabelSchema(("O", "B-a"))
    w = np.zeros((2, 2))
    w[0, 1] = 2.0  # (f0, l1)
    w[1, 0] = -1.0  # (f1, l0)
    model = ChainModel(schema, ("f0", "f1"), w, np.zeros((2, 2)))
    table = score_sequence(model, [{0: 1.0}, {1: 3.0}])
    assert table.unary[0, 1] == 2.0
    assert table.unary[1, 0] == -3.0


def test_score_sequence_ignores_unknown_and_rejects_empty():
    model = ChainModel.zeros(LabelSchema(("O", "B-a")), ("f0",))
    assert score_sequence(model, [{7: 1.0}]).unary.tolist() == [[0.0, 0.0]]
    with pytest.raises(ValueError):
        score_sequence(model, [])


def test_viterbi_single_position_lowest_id_on_tie():
    schema = LabelSchema(("O", "B-a", "B-b"))
    path, val = viterbi(ScoreTable.for_schema(schema, [[0.5, 2.0, 2.0]]))
    assert path.tolist() == [1] and val == 2.0


def test_viterbi_never_starts_with_inside():
    schema = LabelSchema(("O", "B-a", "I-a"))
    path, _ = viterbi(ScoreTable.for_schema(schema, [[0, 0, 9.0], [0, 0, 9.0]]))
    assert path.tolist() == [1, 2]


def test_viterbi_no_valid_sequence():
    schema = LabelSchema(("O", "B-a"))
    table = ScoreTable(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2), bool), np.ones(2, bool))
    with pytest.raises(InferenceError):
        viterbi(table)


def test_viterbi_matches_enumeration_3x3():
    rng = np.random.default_rng(3)
    schema = LabelSchema(("O", "B-a", "B-b"))  # every one of the 27 sequences is valid
    table = ScoreTable.for_schema(schema, rng.normal(size=(3, 3)), rng.normal(size=(3, 3)))
    assert len(enumerate_paths(table)) == 27
    path, val = viterbi(table)
    best_path, best_val = exhaustive_best(table)
    assert path.tolist() == best_path.tolist()
    assert val == pytest.approx(best_val, abs=1e-9)


def test_viterbi_large_negative_offset_avoids_label():
    rng = np.random.default_rng(5)
    schema = LabelSchema(("O", "B-a", "B-b"))
    table = ScoreTable.for_schema(schema, rng.normal(size=(3, 3)))
    free, _ = viterbi(table)
    banned = int(free[0])
    offset = np.zeros(3)
    offset[banned] = -1e6
    path, val = viterbi(table, offset)
    assert banned not in path.tolist()
    _, best_val = exhaustive_best(table, offset)
    assert val == pytest.approx(best_val, abs=1e-6)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_viterbi_equals_exhaustive_search(seed):
    table, rng = random_table(seed)
    offset = rng.normal(size=table.n_labels)
    for off in (None, offset):
        path, val = viterbi(table, off)
        _, best = exhaustive_best(table, off)
        assert val == pytest.approx(best, abs=1e-9)
        assert sequence_score(table, path, off) == pytest.approx(val, abs=1e-9)
        assert is_valid_path(table, path)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_uniform_shift_moves_objective_only(seed, kappa):
    table, _ = random_table(seed)
    shifted = ScoreTable(table.unary + kappa, table.transition, table.mask, table.start)
    p0, v0 = viterbi(table)
    p1, v1 = viterbi(shifted)
    assert p0.tolist() == p1.tolist()
    assert v1 == pytest.approx(v0 + table.length * kappa, abs=1e-7)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_offset_folding(seed):
    table, rng = random_table(seed)
    offset = rng.normal(size=table.n_labels)
    folded = ScoreTable(table.unary + offset, table.transition, table.mask, table.start)
    p0, v0 = viterbi(table, offset)
    p1, v1 = viterbi(folded)
    assert p0.tolist() == p1.tolist() and v0 == v1


def test_viterbi_agrees_with_oracle_without_constraints():
    table, _ = random_table(11)
    empty = ConstraintSet(LabelSchema(SCHEMAS[0]), ())
    table = ScoreTable.for_schema(LabelSchema(SCHEMAS[0]), np.random.default_rng(1).normal(size=(4, 3)))
    labels, obj = brute_force_map(table, empty, "soft")
    path, val = viterbi(table)
    assert labels.tolist() == path.tolist()
    assert obj == pytest.approx(val, abs=1e-9)


def separable_corpus():
    # each token's word identifies its label
    rows = [
        (("Smith", "Title", "words", "1990"), ("B-author", "B-title", "I-title", "B-year")),
        (("Title", "Smith", "1990"), ("B-title", "B-author", "B-year")),
        (("1990", "Title", "words", "words"), ("B-year", "B-title", "I-title", "I-title")),
    ]
    return [LabeledSequence(t, l) for t, l in rows]


def test_perceptron_fits_separable_corpus():
    corpus = separable_corpus()
    model = train_base_perceptron(corpus, epochs=2)
    assert token_accuracy(model, corpus) == 1.0


def test_perceptron_zero_epochs_gives_zero_model():
    model = train_base_perceptron(separable_corpus(), epochs=0)
    assert not model.unary.any() and not model.transition.any()


def test_perceptron_no_mistake_no_update():
    # the zero model predicts label 0 ("O") everywhere, which is the gold labelling
    corpus = [LabeledSequence(("x", "y"), ("O", "O"))]
    model = train_base_perceptron(corpus, epochs=3, schema=LabelSchema(("O", "B-a")))
    assert not model.unary.any() and not model.transition.any()


def test_perceptron_rejects_invalid_gold():
    corpus = separable_corpus() + [LabeledSequence(("a", "b"), ("O", "I-title"))]
    with pytest.raises(CorpusError, match="sequence 3, position 1"):
        train_base_perceptron(corpus, epochs=1)


def test_perceptron_deterministic():
    a = train_base_perceptron(separable_corpus(), epochs=3)
    b = train_base_perceptron(separable_corpus(), epochs=3)
    assert a == b


def test_model_roundtrip_bit_exact(tmp_path):
    model = train_base_perceptron(separable_corpus(), epochs=3)
    model = ChainModel(model.schema, model.features, model.unary / 3.0, model.transition * np.pi)
    path = tmp_path / "m.npz"
    save_model(model, path)
    back = load_model(path)
    assert back == model
    assert back.unary.tobytes() == model.unary.tobytes()


def test_zero_model_roundtrip(tmp_path):
    model = train_base_perceptron(separable_corpus(), epochs=0)
    save_model(model, tmp_path / "z.npz")
    assert load_model(tmp_path / "z.npz") == model


def test_load_rejects_foreign_file(tmp_path):
    np.savez(tmp_path / "x.npz", header=np.array('{"format": "other"}'))
    with pytest.raises(ValueError):
        load_model(tmp_path / "x.npz")
