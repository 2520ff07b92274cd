"""Exhaustive constrained MAP for small instances, used as a test oracle."""
from __future__ import annotations

import itertools
import math
from typing import Optional

import numpy as np

from .chain import ScoreTable
from .constraints import Constraint, ConstraintSet
from .labels import LabelSchema, enumerate_count_keys

MAX_ENUMERATION = 10**6


def enumerate_paths(scores: ScoreTable) -> np.ndarray:
    """All mask-valid label sequences, in lexicographic order, as an N x T array."""
    n_pos, n_lab = scores.unary.shape
    if n_lab**n_pos > MAX_ENUMERATION:
        raise ValueError(f"{n_lab}^{n_pos} sequences exceeds the enumeration bound")
    paths = np.array(list(itertools.product(range(n_lab), repeat=n_pos)), dtype=np.int64)
    ok = scores.start[paths[:, 0]]
    for k in range(1, n_pos):
        ok &= scores.mask[paths[:, k - 1], paths[:, k]]
    return paths[ok]


def path_scores(scores: ScoreTable, paths: np.ndarray) -> np.ndarray:
    total = np.zeros(len(paths))
    for k in range(paths.shape[1]):
        total += scores.unary[k, paths[:, k]]
        if k:
            total += scores.transition[paths[:, k - 1], paths[:, k]]
    return total


def brute_force_map(
    scores: ScoreTable, constraints: ConstraintSet, mode: str = "soft"
) -> tuple[Optional[np.ndarray], float]:
    """Best sequence by exhaustive search.

    soft: maximise w.y - sum c_i * max(0, a_i.y - b_i).
    hard: maximise w.y subject to every a_i.y <= b_i; ``(None, -inf)`` if infeasible.
    Ties go to the lexicographically smallest label-id sequence.
    """
    if mode not in ("soft", "hard"):
        raise ValueError(f"unknown mode {mode!r}")
    paths = enumerate_paths(scores)
    if len(paths) == 0:
        raise ValueError("no mask-valid sequence")
    objective = path_scores(scores, paths)
    if len(constraints):
        hist = np.zeros((len(paths), scores.n_labels), dtype=np.int64)
        for k in range(paths.shape[1]):
            np.add.at(hist, (np.arange(len(paths)), paths[:, k]), 1)
        v = hist @ constraints.A.T - constraints.b
        if mode == "soft":
            c = constraints.penalties
            if np.any(np.isinf(c)):
                raise ValueError("soft mode needs finite penalties")
            objective = objective - np.maximum(0, v) @ c
        else:
            objective = np.where(np.all(v <= 0, axis=1), objective, -np.inf)
    best = int(np.argmax(objective))
    if not math.isfinite(objective[best]):
        return None, -math.inf
    return paths[best], float(objective[best])


SMALL_SCHEMAS = (
    ("O", "B-a", "I-a"),
    ("O", "B-a", "I-a", "B-b"),
    ("O", "B-a", "B-b", "B-c"),
    ("O", "B-a/B-x", "I-a/I-x", "I-a/B-x"),
    ("O", "B-a", "B-a/B-x", "I-a/I-x"),
)


def random_instance(
    rng: np.random.Generator,
    max_len: int = 5,
    max_constraints: int = 4,
    penalty_range: tuple = (0.0, 5.0),
):
    """A small random (ScoreTable, ConstraintSet) pair for oracle comparisons.

    Uses at most 4 labels; constraints have one or two count keys with
    coefficients in {-2, -1, 1, 2} and bounds in [-1, 2].
    """
    schema = LabelSchema(SMALL_SCHEMAS[rng.integers(len(SMALL_SCHEMAS))])
    n_lab = len(schema)
    n_pos = int(rng.integers(1, max_len + 1))
    unary = rng.normal(size=(n_pos, n_lab))
    transition = rng.normal(scale=0.5, size=(n_lab, n_lab))
    scores = ScoreTable.for_schema(schema, unary, transition)

    keys = enumerate_count_keys(schema)
    cons = []
    for _ in range(int(rng.integers(0, max_constraints + 1))):
        n_terms = int(rng.integers(1, min(2, len(keys)) + 1))
        picked = rng.choice(len(keys), size=n_terms, replace=False)
        coefs = {keys[i]: int(rng.choice([-2, -1, 1, 1, 2])) for i in picked}
        penalty = float(rng.uniform(*penalty_range))
        cons.append(Constraint.at_most(coefs, int(rng.integers(-1, 3)), penalty=penalty))
    return scores, ConstraintSet(schema, tuple(cons))
