"""Perceptron learning of soft-constraint penalties on held-out data."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .chain import ChainModel
from .constraints import ConstraintSet
from .corpus import LabeledSequence
from .inference import soft_dd
from .labels import LabelError, count_vector


@dataclass(frozen=True)
class PenaltyLearnerConfig:
    epochs: int = 5
    rate: float = 0.2
    averaging: bool = True
    inner_max_iters: int = 100
    initial_penalty: float = 0.0
    step0: float = 1.0
    shuffle_seed: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.rate < 0:
            raise ValueError("rate must be >= 0")
        if self.initial_penalty < 0:
            raise ValueError("initial penalty must be >= 0")


def learn_penalties(
    dev: Sequence[LabeledSequence],
    constraints: ConstraintSet,
    base: ChainModel,
    config: PenaltyLearnerConfig = PenaltyLearnerConfig(),
    observer: Optional[Callable[[np.ndarray, np.ndarray], None]] = None,
) -> np.ndarray:
    """Structured perceptron on c with the base model frozen.

    After each example: ``c <- max(0, c + rate * (z_pred - z_gold))`` where z
    are the per-constraint violations of the Soft-DD prediction and of gold.
    ``observer(z_pred, z_gold)`` is called before every update, if given.
    """
    if not dev:
        raise ValueError("empty development corpus")
    schema = base.schema
    examples = []
    for i, seq in enumerate(dev):
        for lab in seq.labels:
            if lab not in schema.index:
                raise LabelError(f"dev sequence {i}: label {lab!r} outside the model schema")
        z_gold = constraints.violations_of_counts(count_vector(seq.parsed(), constraints.keys))
        examples.append((base.scores(seq.tokens), z_gold))

    order = list(range(len(examples)))
    rng = random.Random(config.shuffle_seed) if config.shuffle_seed is not None else None
    c = np.full(len(constraints), float(config.initial_penalty))
    total = np.zeros_like(c)
    n_updates = 0
    for _ in range(config.epochs):
        if rng is not None:
            rng.shuffle(order)
        for i in order:
            scores, z_gold = examples[i]
            res = soft_dd(
                scores, constraints, max_iters=config.inner_max_iters,
                step0=config.step0, penalties=c,
            )
            if observer is not None:
                observer(res.violations, z_gold)
            c = np.maximum(0.0, c + config.rate * (res.violations - z_gold))
            total += c
            n_updates += 1
    return total / n_updates if config.averaging else c


def active_constraints(
    constraints: ConstraintSet, penalties, threshold: float = 0.0
) -> tuple[ConstraintSet, float]:
    """Constraints with penalty > threshold (carrying those penalties), and the fraction dropped."""
    penalties = np.asarray(penalties, dtype=float)
    if penalties.shape != (len(constraints),):
        raise ValueError("penalty vector length mismatch")
    keep = penalties > threshold
    active = constraints.with_penalties(penalties).subset(keep)
    sparsity = 1.0 - keep.mean() if len(keep) else 0.0
    return active, float(sparsity)
