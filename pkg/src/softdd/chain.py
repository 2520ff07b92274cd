"""Linear-chain model: score tables, BIO-masked Viterbi, perceptron training."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import CorpusError, LabeledSequence, atomic_write_bytes, check_bio, induce_schema
from .features import token_features
from .labels import LabelSchema

FeatureVector = Mapping[int, float]

MODEL_FORMAT = "softdd-chain-model"
MODEL_VERSION = 1


class InferenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScoreTable:
    unary: np.ndarray  # T x L
    transition: np.ndarray  # L x L, [prev, next]
    mask: np.ndarray  # L x L bool
    start: np.ndarray  # L bool

    def __post_init__(self):
        if self.unary.ndim != 2 or self.unary.shape[0] == 0:
            raise ValueError("unary must be a non-empty T x L matrix")
        n = self.unary.shape[1]
        if self.transition.shape != (n, n) or self.mask.shape != (n, n):
            raise ValueError("transition/mask must be L x L")
        if self.start.shape != (n,):
            raise ValueError("start must have length L")

    @property
    def length(self) -> int:
        return self.unary.shape[0]

    @property
    def n_labels(self) -> int:
        return self.unary.shape[1]

    @classmethod
    def for_schema(cls, schema: LabelSchema, unary, transition=None) -> "ScoreTable":
        unary = np.asarray(unary, dtype=float)
        n = len(schema)
        if transition is None:
            transition = np.zeros((n, n))
        mask, start = schema.transition_mask()
        return cls(unary, np.asarray(transition, dtype=float), mask, start)


def is_valid_path(scores: ScoreTable, labels: Sequence[int]) -> bool:
    if not scores.start[labels[0]]:
        return False
    return all(scores.mask[a, b] for a, b in zip(labels[:-1], labels[1:]))


def sequence_score(scores: ScoreTable, labels: Sequence[int], offset=None) -> float:
    labels = np.asarray(labels)
    total = scores.unary[np.arange(len(labels)), labels].sum()
    total += scores.transition[labels[:-1], labels[1:]].sum()
    if offset is not None:
        total += np.asarray(offset)[labels].sum()
    return float(total)


def viterbi(scores: ScoreTable, offset=None) -> tuple[np.ndarray, float]:
    """Best mask-valid label sequence under unary + offset + transition scores.

    Ties go to the lower label id, both at each backpointer and at the end.
    """
    unary = scores.unary
    if offset is not None:
        unary = unary + np.asarray(offset, dtype=float)[None, :]
    n_pos, n_lab = unary.shape
    trans = np.where(scores.mask, scores.transition, -np.inf)
    back = np.zeros((n_pos, n_lab), dtype=np.int64)
    delta = np.where(scores.start, unary[0], -np.inf)
    for k in range(1, n_pos):
        cand = delta[:, None] + trans
        back[k] = np.argmax(cand, axis=0)
        delta = cand[back[k], np.arange(n_lab)] + unary[k]
    last = int(np.argmax(delta))
    best = float(delta[last])
    if not np.isfinite(best):
        raise InferenceError("no mask-valid label sequence")
    path = np.empty(n_pos, dtype=np.int64)
    path[-1] = last
    for k in range(n_pos - 1, 0, -1):
        path[k - 1] = back[k, path[k]]
    return path, best


@dataclass(frozen=True)
class ChainModel:
    schema: LabelSchema
    features: tuple[str, ...]
    unary: np.ndarray  # F x L
    transition: np.ndarray  # L x L

    def __post_init__(self):
        n_lab = len(self.schema)
        if self.unary.shape != (len(self.features), n_lab):
            raise ValueError("unary weights must be F x L")
        if self.transition.shape != (n_lab, n_lab):
            raise ValueError("transition weights must be L x L")
        if not (np.isfinite(self.unary).all() and np.isfinite(self.transition).all()):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "_feature_ids", {f: i for i, f in enumerate(self.features)})
        mask, start = self.schema.transition_mask()
        object.__setattr__(self, "_mask", mask)
        object.__setattr__(self, "_start", start)

    @classmethod
    def zeros(cls, schema: LabelSchema, features: Sequence[str]) -> "ChainModel":
        n = len(schema)
        return cls(schema, tuple(features), np.zeros((len(features), n)), np.zeros((n, n)))

    def featurize(self, tokens: Sequence[str]) -> list[dict[int, float]]:
        ids = self._feature_ids
        return [
            {ids[f]: 1.0 for f in feats if f in ids} for feats in token_features(tokens)
        ]

    def scores(self, tokens: Sequence[str]) -> ScoreTable:
        return score_sequence(self, self.featurize(tokens))

    def predict(self, tokens: Sequence[str]) -> list[str]:
        path, _ = viterbi(self.scores(tokens))
        return self.schema.names_of(path)

    def __eq__(self, other):
        if not isinstance(other, ChainModel):
            return NotImplemented
        return (
            self.schema == other.schema
            and self.features == other.features
            and np.array_equal(self.unary, other.unary)
            and np.array_equal(self.transition, other.transition)
        )

    __hash__ = None


def _sparse(tokens: Sequence[FeatureVector]):
    rows, ids, vals = [], [], []
    for k, fv in enumerate(tokens):
        for fid, val in fv.items():
            rows.append(k)
            ids.append(fid)
            vals.append(val)
    return (
        np.asarray(rows, dtype=np.int64),
        np.asarray(ids, dtype=np.int64),
        np.asarray(vals, dtype=float),
    )


def _unary_from_sparse(weights: np.ndarray, n_pos: int, rows, ids, vals) -> np.ndarray:
    known = ids < weights.shape[0]
    rows, ids, vals = rows[known], ids[known], vals[known]
    unary = np.zeros((n_pos, weights.shape[1]))
    np.add.at(unary, rows, vals[:, None] * weights[ids])
    return unary


def score_sequence(model: ChainModel, tokens: Sequence[FeatureVector]) -> ScoreTable:
    if len(tokens) == 0:
        raise ValueError("empty token sequence")
    rows, ids, vals = _sparse(tokens)
    unary = _unary_from_sparse(model.unary, len(tokens), rows, ids, vals)
    return ScoreTable(unary, model.transition, model._mask, model._start)


def train_base_perceptron(
    corpus: Sequence[LabeledSequence],
    epochs: int,
    learning_rate: float = 1.0,
    schema: Optional[LabelSchema] = None,
) -> ChainModel:
    """Averaged structured perceptron over the corpus in file order."""
    if not corpus:
        raise ValueError("empty training corpus")
    try:
        check_bio(corpus)
    except CorpusError as exc:
        raise CorpusError(f"BIO-invalid gold: {exc}") from None
    schema = schema or induce_schema(corpus)

    feature_ids: dict[str, int] = {}
    encoded = []
    for seq in corpus:
        rows, ids = [], []
        for k, feats in enumerate(token_features(seq.tokens)):
            for f in feats:
                rows.append(k)
                ids.append(feature_ids.setdefault(f, len(feature_ids)))
        gold = schema.ids(seq.labels)
        encoded.append((np.asarray(rows), np.asarray(ids), gold))
    features = tuple(feature_ids)

    n_lab = len(schema)
    mask, start = schema.transition_mask()
    w_unary = np.zeros((len(features), n_lab))
    w_trans = np.zeros((n_lab, n_lab))
    sum_unary = np.zeros_like(w_unary)
    sum_trans = np.zeros_like(w_trans)
    n_steps = 0

    for _ in range(epochs):
        for rows, ids, gold in encoded:
            n_pos = len(gold)
            unary = np.zeros((n_pos, n_lab))
            np.add.at(unary, rows, w_unary[ids])
            pred, _ = viterbi(ScoreTable(unary, w_trans, mask, start))
            if not np.array_equal(pred, gold):
                np.add.at(w_unary, (ids, gold[rows]), learning_rate)
                np.add.at(w_unary, (ids, pred[rows]), -learning_rate)
                np.add.at(w_trans, (gold[:-1], gold[1:]), learning_rate)
                np.add.at(w_trans, (pred[:-1], pred[1:]), -learning_rate)
            sum_unary += w_unary
            sum_trans += w_trans
            n_steps += 1

    if n_steps:
        sum_unary /= n_steps
        sum_trans /= n_steps
    return ChainModel(schema, features, sum_unary, sum_trans)


def token_accuracy(model: ChainModel, corpus: Sequence[LabeledSequence]) -> float:
    right = total = 0
    for seq in corpus:
        pred = model.predict(seq.tokens)
        right += sum(p == g for p, g in zip(pred, seq.labels))
        total += len(seq)
    return right / total if total else 0.0


# Model file: a numpy .npz archive holding
#   header      JSON {"format": "softdd-chain-model", "version": 1}
#   labels      JSON list of full label strings, in label-id order
#   features    JSON list of feature strings, in feature-id order
#   unary       float64 [F, L]
#   transition  float64 [L, L], indexed [previous label, next label]


def save_model(model: ChainModel, path) -> None:
    buf = io.BytesIO()
    np.savez(
        buf,
        header=np.array(json.dumps({"format": MODEL_FORMAT, "version": MODEL_VERSION})),
        labels=np.array(json.dumps(list(model.schema.labels))),
        features=np.array(json.dumps(list(model.features))),
        unary=model.unary.astype(np.float64),
        transition=model.transition.astype(np.float64),
    )
    atomic_write_bytes(path, buf.getvalue())


def load_model(path) -> ChainModel:
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a chain model file")
        if header.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {header.get('version')}")
        schema = LabelSchema(tuple(json.loads(str(data["labels"]))))
        features = tuple(json.loads(str(data["features"])))
        return ChainModel(schema, features, data["unary"].copy(), data["transition"].copy())
