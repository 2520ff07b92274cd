"""In-memory end-to-end run: generate, train, prune, learn penalties, decode, score."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import constraints as C
from .chain import ChainModel, train_base_perceptron, viterbi
from .cli import RunConfig
from .corpus import LabeledSequence, induce_schema
from .evaluation import evaluate
from .inference import PredictionResult, soft_dd
from .labels import CountKey, count_vector
from .penalties import PenaltyLearnerConfig, learn_penalties
from .synthetic import GeneratorConfig, generate_splits


@dataclass
class PipelineResult:
    splits: dict
    model: ChainModel
    full: C.ConstraintSet
    importance: np.ndarray
    pruned: C.ConstraintSet
    penalties: np.ndarray
    base_f1: float
    soft_f1: float
    soft_runs: list
    author_overcount: float  # fraction of test predictions with > 1 author block
    seconds: dict = field(default_factory=dict)

    @property
    def mean_iterations(self) -> float:
        return float(np.mean([r.iterations for r in self.soft_runs]))

    @property
    def converged_pct(self) -> float:
        return 100.0 * float(np.mean([r.converged for r in self.soft_runs]))


def learner_config(cfg: RunConfig) -> PenaltyLearnerConfig:
    return PenaltyLearnerConfig(
        epochs=cfg.learn_epochs,
        rate=cfg.rate,
        averaging=not cfg.no_average,
        inner_max_iters=cfg.max_iters,
        initial_penalty=cfg.initial_penalty,
        step0=cfg.step0,
        shuffle_seed=cfg.shuffle_seed,
    )


def _overcount(model: ChainModel, corpus, paths) -> float:
    key = CountKey(0, ("authors",))
    n = 0
    for labels in paths:
        n += count_vector([model.schema.parsed[i] for i in labels], [key])[0] > 1
    return n / max(1, len(corpus))


def run_pipeline(cfg: RunConfig = RunConfig()) -> PipelineResult:
    clock = {}
    t = time.perf_counter()
    gen = GeneratorConfig(seed=cfg.seed, confusion=cfg.confusion, template=cfg.template)
    splits = generate_splits(gen, {"train": cfg.n_train, "dev": cfg.n_dev, "test": cfg.n_test})
    schema = induce_schema(splits["train"], splits["dev"])
    model = train_base_perceptron(splits["train"], cfg.epochs, cfg.lr, schema=schema)
    clock["train"] = time.perf_counter() - t

    t = time.perf_counter()
    full = C.ConstraintSet(schema, tuple(C.instantiate_all(schema)))
    imp = C.importance_scores(full, splits["dev"], model)
    pruned = C.prune(full, imp, cfg.cutoff)
    penalties = learn_penalties(splits["dev"], pruned, model, learner_config(cfg))
    clock["learn"] = time.perf_counter() - t

    t = time.perf_counter()
    test: list[LabeledSequence] = splits["test"]
    tables = [model.scores(s.tokens) for s in test]
    base_paths = [viterbi(tab)[0] for tab in tables]
    runs: list[PredictionResult] = [
        soft_dd(tab, pruned, cfg.max_iters, cfg.step0, penalties=penalties) for tab in tables
    ]
    gold = [s.labels for s in test]
    base_f1 = evaluate(gold, [schema.names_of(p) for p in base_paths]).f1
    soft_f1 = evaluate(gold, [schema.names_of(r.labels) for r in runs]).f1
    clock["decode"] = time.perf_counter() - t

    return PipelineResult(
        splits, model, full, imp, pruned, penalties, base_f1, soft_f1, runs,
        _overcount(model, test, base_paths), clock,
    )
