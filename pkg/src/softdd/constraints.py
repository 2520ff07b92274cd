"""Global count constraints: templates, violations, importance pruning, file format.

Every constraint is stored as ``sum_k coef_k * count(k) <= bound`` over count
keys, with a penalty per unit of violation (``HARD`` for an inviolable one).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .chain import ChainModel, viterbi
from .corpus import LabeledSequence, atomic_write_text
from .labels import CountKey, LabelSchema, count_vector, enumerate_count_keys

HARD = math.inf

SINGLETON = "singleton"
PAIRWISE_SUM = "pairwise-sum"
PAIRWISE_DIFF = "pairwise-diff"
HIERARCHICAL = "hierarchical"
ORIGINS = (SINGLETON, PAIRWISE_SUM, PAIRWISE_DIFF, HIERARCHICAL, "custom")

PAIRWISE_BOUNDS = (0, 1, 2, 3)


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    coefficients: tuple[tuple[CountKey, int], ...]
    bound: int
    penalty: float = 0.0
    origin: str = "custom"

    def __post_init__(self):
        coefs = {}
        for key, coef in self.coefficients:
            key = CountKey(int(key[0]), tuple(key[1]))
            coefs[key] = coefs.get(key, 0) + int(coef)
        coefs = tuple(sorted((k, c) for k, c in coefs.items() if c != 0))
        if not coefs:
            raise ConstraintError("constraint has no non-zero coefficients")
        if not (self.penalty >= 0):
            raise ConstraintError(f"penalty must be >= 0 or HARD, got {self.penalty}")
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "bound", int(self.bound))
        object.__setattr__(self, "penalty", float(self.penalty))

    @classmethod
    def at_most(cls, coefs: Mapping[CountKey, int], bound: int, **kw) -> "Constraint":
        return cls(tuple(coefs.items()), bound, **kw)

    @classmethod
    def at_least(cls, coefs: Mapping[CountKey, int], bound: int, **kw) -> "Constraint":
        """``sum coef*count >= bound``, stored negated as ``<=``."""
        return cls(tuple((k, -c) for k, c in coefs.items()), -bound, **kw)

    @property
    def is_hard(self) -> bool:
        return math.isinf(self.penalty)

    @property
    def form(self) -> tuple:
        return (self.coefficients, self.bound)

    def lhs(self, counts: Mapping[CountKey, int]) -> int:
        return sum(c * int(counts.get(k, 0)) for k, c in self.coefficients)

    def expression(self) -> str:
        return " ".join(f"{c:+d}*{k}" for k, c in self.coefficients)


def violation(constraint: Constraint, counts, keys: Optional[Sequence[CountKey]] = None) -> int:
    """Slack needed for ``counts``: ``max(0, lhs - bound)``.

    ``counts`` is a mapping CountKey -> count, or a vector aligned with ``keys``.
    """
    if keys is not None:
        counts = dict(zip(keys, np.asarray(counts).tolist()))
    return max(0, constraint.lhs(counts) - constraint.bound)


def dedupe(constraints: Iterable[Constraint]) -> list[Constraint]:
    """First occurrence of each (coefficients, bound) wins."""
    seen = set()
    out = []
    for con in constraints:
        if con.form not in seen:
            seen.add(con.form)
            out.append(con)
    return out


def instantiate_singleton(schema: LabelSchema) -> list[Constraint]:
    return [
        Constraint.at_most({k: 1}, 1, origin=SINGLETON) for k in enumerate_count_keys(schema)
    ]


def instantiate_pairwise(schema: LabelSchema) -> list[Constraint]:
    out = []
    for ki, kj in itertools.combinations(enumerate_count_keys(schema), 2):
        for b in PAIRWISE_BOUNDS:
            out.append(Constraint.at_most({ki: 1, kj: 1}, b, origin=PAIRWISE_SUM))
            out.append(Constraint.at_least({ki: 1, kj: 1}, b, origin=PAIRWISE_SUM))
        for b in PAIRWISE_BOUNDS:
            for a, c in ((ki, kj), (kj, ki)):
                out.append(Constraint.at_most({a: 1, c: -1}, b, origin=PAIRWISE_DIFF))
                out.append(Constraint.at_least({a: 1, c: -1}, b, origin=PAIRWISE_DIFF))
    return dedupe(out)


def _related(a: CountKey, b: CountKey) -> bool:
    if a.level == b.level:
        return False
    short, long_ = (a, b) if a.level < b.level else (b, a)
    return long_.path[: len(short.path)] == short.path or a.path[-1] == b.path[-1]


def instantiate_hierarchical(schema: LabelSchema) -> list[Constraint]:
    """Equal counts for path-related keys on different levels (e.g. person vs first)."""
    out = []
    for ki, kj in itertools.combinations(enumerate_count_keys(schema), 2):
        if _related(ki, kj):
            out.append(Constraint.at_most({ki: 1, kj: -1}, 0, origin=HIERARCHICAL))
            out.append(Constraint.at_least({ki: 1, kj: -1}, 0, origin=HIERARCHICAL))
    return dedupe(out)


def instantiate_all(schema: LabelSchema) -> list[Constraint]:
    """Union of the three templates; hierarchical copies shadow equal pairwise rows."""
    return dedupe(
        instantiate_singleton(schema)
        + instantiate_hierarchical(schema)
        + instantiate_pairwise(schema)
    )


@dataclass(frozen=True)
class ConstraintSet:
    """Constraints bound to a schema, with the per-label matrix ``A`` precomputed.

    ``A[i, l]`` is the contribution of one token labelled ``l`` to the
    left-hand side of constraint ``i``, so ``A @ histogram(labels) - b`` gives
    the signed violations of a decoded sequence.
    """

    schema: LabelSchema
    constraints: tuple[Constraint, ...]
    keys: tuple[CountKey, ...] = field(init=False, repr=False, compare=False)
    coef: np.ndarray = field(init=False, repr=False, compare=False)
    A: np.ndarray = field(init=False, repr=False, compare=False)
    b: np.ndarray = field(init=False, repr=False, compare=False)
    penalties: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        constraints = tuple(dedupe(self.constraints))
        keys = tuple(enumerate_count_keys(self.schema))
        pos = {k: i for i, k in enumerate(keys)}
        coef = np.zeros((len(constraints), len(keys)), dtype=np.int64)
        for i, con in enumerate(constraints):
            for key, c in con.coefficients:
                if key not in pos:
                    raise ConstraintError(f"count key {key} not realizable in schema")
                coef[i, pos[key]] = c
        inc = self.schema.key_incidence(keys)
        set_ = object.__setattr__
        set_(self, "constraints", constraints)
        set_(self, "keys", keys)
        set_(self, "coef", coef)
        set_(self, "A", coef @ inc)
        set_(self, "b", np.array([c.bound for c in constraints], dtype=np.int64))
        set_(self, "penalties", np.array([c.penalty for c in constraints], dtype=float))

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def __getitem__(self, i) -> Constraint:
        return self.constraints[i]

    def histogram(self, label_ids) -> np.ndarray:
        return np.bincount(np.asarray(label_ids, dtype=np.int64), minlength=len(self.schema))

    def signed_violations(self, label_ids) -> np.ndarray:
        """``A y - b`` for a decoded label-id sequence."""
        return self.A @ self.histogram(label_ids) - self.b

    def violations(self, label_ids) -> np.ndarray:
        return np.maximum(0, self.signed_violations(label_ids))

    def violations_of_labels(self, labels: Sequence[str]) -> np.ndarray:
        return self.violations(self.schema.ids(labels))

    def violations_of_counts(self, counts) -> np.ndarray:
        return np.maximum(0, self.coef @ np.asarray(counts) - self.b)

    def with_penalties(self, penalties) -> "ConstraintSet":
        penalties = np.asarray(penalties, dtype=float)
        if penalties.shape != (len(self),):
            raise ConstraintError("penalty vector length mismatch")
        return ConstraintSet(
            self.schema, tuple(replace(c, penalty=float(p)) for c, p in zip(self, penalties))
        )

    def subset(self, keep) -> "ConstraintSet":
        return ConstraintSet(self.schema, tuple(c for c, k in zip(self, keep) if k))


def importance_scores(
    constraints: ConstraintSet, gold: Sequence[LabeledSequence], base_model: ChainModel
) -> np.ndarray:
    """Ratio of unconstrained-prediction violations to gold violations, per constraint.

    Both counts are numbers of violating examples. x/0 with x > 0 is +inf;
    0/0 is 0.
    """
    if not gold:
        raise ValueError("empty corpus")
    pred_hits = np.zeros(len(constraints), dtype=np.int64)
    gold_hits = np.zeros(len(constraints), dtype=np.int64)
    for seq in gold:
        pred, _ = viterbi(base_model.scores(seq.tokens))
        pred_hits += constraints.violations(pred) > 0
        gold_counts = count_vector(seq.parsed(), constraints.keys)
        gold_hits += constraints.violations_of_counts(gold_counts) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(
            gold_hits > 0,
            pred_hits / np.maximum(gold_hits, 1),
            np.where(pred_hits > 0, np.inf, 0.0),
        )
    return scores


def prune(constraints: ConstraintSet, scores, cutoff: float) -> ConstraintSet:
    """Keep constraints scoring >= cutoff, in order. An infinite cutoff keeps nothing."""
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (len(constraints),):
        raise ConstraintError("score vector length mismatch")
    if math.isinf(cutoff) and cutoff > 0:
        return constraints.subset([False] * len(constraints))
    return constraints.subset(scores >= cutoff)


# Text format, one constraint per line:
#   origin <TAB> expression <TAB> <= <TAB> bound <TAB> penalty
# expression is space-separated "<+/-coef>*<level>:<name/path>" terms,
# penalty is a float literal or HARD. Lines starting with '#' are comments.


def format_penalty(p: float) -> str:
    return "HARD" if math.isinf(p) else repr(float(p))


def parse_penalty(text: str) -> float:
    return HARD if text == "HARD" else float(text)


def format_constraint(con: Constraint) -> str:
    return "\t".join(
        [con.origin, con.expression(), "<=", str(con.bound), format_penalty(con.penalty)]
    )


def parse_constraint(line: str) -> Constraint:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 5 or parts[2] != "<=":
        raise ConstraintError(f"malformed constraint line: {line!r}")
    origin, expr, _, bound, penalty = parts
    coefs = []
    for term in expr.split():
        coef, star, key = term.partition("*")
        if not star:
            raise ConstraintError(f"malformed term {term!r}")
        coefs.append((CountKey.parse(key), int(coef)))
    return Constraint(tuple(coefs), int(bound), parse_penalty(penalty), origin)


def format_constraints(
    constraints: Iterable[Constraint], notes: Optional[Sequence[str]] = None
) -> str:
    lines = []
    for i, con in enumerate(constraints):
        if notes is not None and notes[i]:
            lines.append(f"# {notes[i]}")
        lines.append(format_constraint(con))
    return "".join(line + "\n" for line in lines)


def parse_constraints(text: str) -> list[Constraint]:
    return [
        parse_constraint(line)
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    ]


def save_constraints(path, constraints: Iterable[Constraint], notes=None) -> None:
    atomic_write_text(path, format_constraints(constraints, notes))


def load_constraints(path) -> list[Constraint]:
    with open(path, encoding="utf-8") as fh:
        return parse_constraints(fh.read())
