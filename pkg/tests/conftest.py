import sys

import numpy as np
import pytest

from softdd.chain import ChainModel
from softdd.corpus import LabeledSequence
from softdd.labels import LabelSchema

TAG = {"a": "B-a", "b": "B-b", "o": "O"}


def toy_corpus(rows):
    """[(tokens, gold)] strings, one character per token: tokens A/B/N, gold a/b/o."""
    return [LabeledSequence(tuple(t), tuple(TAG[g] for g in gold)) for t, gold in rows]


@pytest.fixture
def toy_schema():
    return LabelSchema(("O", "B-a", "B-b"))


@pytest.fixture
def toy_model(toy_schema):
    """Predicts B-a for token A, B-b for B, O for N (unit margins, no transitions)."""
    unary = np.array(
        [
            [0.0, 1.0, 0.0],  # w=A
            [0.0, 0.0, 1.0],  # w=B
            [1.0, 0.0, 0.0],  # w=N
        ]
    )
    return ChainModel(toy_schema, ("w=A", "w=B", "w=N"), unary, np.zeros((3, 3)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[name])
