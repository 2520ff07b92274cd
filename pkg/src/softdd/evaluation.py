"""Exact-match segment F1 at every hierarchy level, and early-stopping reports."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .chain import ChainModel
from .constraints import ConstraintSet
from .corpus import LabeledSequence
from .inference import soft_dd
from .labels import ParsedLabel, first_invalid_position, parse_label


class Segment(NamedTuple):
    start: int
    end: int  # exclusive
    path: tuple[str, ...]

    @property
    def level(self) -> int:
        return len(self.path) - 1


def extract_segments(labels: Sequence[ParsedLabel]) -> list[Segment]:
    labels = [parse_label(x) if isinstance(x, str) else x for x in labels]
    bad = first_invalid_position(labels)
    if bad is not None:
        raise ValueError(f"BIO-invalid label sequence at position {bad}")
    segments = []
    depth = max([0] + [lab.depth for lab in labels])
    for level in range(depth):
        open_at: Optional[int] = None
        open_path = None
        for k, lab in enumerate(labels):
            prefix = lab.prefix(level)
            path = lab.names[: level + 1]
            if open_at is not None and not (prefix == "I" and path == open_path):
                segments.append(Segment(open_at, k, open_path))
                open_at = None
            if prefix == "B":
                open_at, open_path = k, path
        if open_at is not None:
            segments.append(Segment(open_at, len(labels), open_path))
    segments.sort()
    return segments


@dataclass
class PathCounts:
    gold: int = 0
    predicted: int = 0
    matched: int = 0

    @property
    def precision(self) -> float:
        return self.matched / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


TSV_COLUMNS = ("path", "gold", "predicted", "matched", "precision", "recall", "f1")


@dataclass
class EvalReport:
    per_path: dict = field(default_factory=dict)  # "a/b" -> PathCounts

    @property
    def micro(self) -> PathCounts:
        total = PathCounts()
        for c in self.per_path.values():
            total.gold += c.gold
            total.predicted += c.predicted
            total.matched += c.matched
        return total

    @property
    def precision(self) -> float:
        return self.micro.precision

    @property
    def recall(self) -> float:
        return self.micro.recall

    @property
    def f1(self) -> float:
        return self.micro.f1

    def add(self, gold: Sequence[Segment], pred: Sequence[Segment]) -> None:
        g, p = Counter(gold), Counter(pred)
        hit = g & p
        for seg, n in g.items():
            self._counts(seg.path).gold += n
        for seg, n in p.items():
            self._counts(seg.path).predicted += n
        for seg, n in hit.items():
            self._counts(seg.path).matched += n

    def _counts(self, path) -> PathCounts:
        key = "/".join(path)
        if key not in self.per_path:
            self.per_path[key] = PathCounts()
        return self.per_path[key]

    def rows(self):
        for key in sorted(self.per_path):
            yield key, self.per_path[key]
        yield "<micro>", self.micro

    def to_tsv(self) -> str:
        lines = ["\t".join(TSV_COLUMNS)]
        for key, c in self.rows():
            lines.append(
                f"{key}\t{c.gold}\t{c.predicted}\t{c.matched}\t"
                f"{c.precision:.6f}\t{c.recall:.6f}\t{c.f1:.6f}"
            )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        def row(c):
            return {
                "gold": c.gold, "predicted": c.predicted, "matched": c.matched,
                "precision": c.precision, "recall": c.recall, "f1": c.f1,
            }

        return {
            "micro": row(self.micro),
            "per_path": {k: row(c) for k, c in sorted(self.per_path.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def f1(gold: Sequence[Segment], pred: Sequence[Segment]) -> EvalReport:
    report = EvalReport()
    report.add(gold, pred)
    return report


def evaluate(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> EvalReport:
    """Micro-averaged segment F1 over a corpus of full-label sequences."""
    if len(gold) != len(pred):
        raise ValueError("gold and predicted corpora differ in size")
    report = EvalReport()
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sequence {i}: gold and predicted lengths differ")
        report.add(extract_segments(g), extract_segments(p))
    return report


CONVERGENCE_COLUMNS = ("cap", "f1", "converged_pct", "mean_iterations")


@dataclass(frozen=True)
class ConvergenceRow:
    cap: int
    f1: float
    converged_pct: float
    mean_iterations: float


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]

    def to_tsv(self) -> str:
        lines = ["\t".join(CONVERGENCE_COLUMNS)]
        for r in self.rows:
            lines.append(f"{r.cap}\t{r.f1:.6f}\t{r.converged_pct:.4f}\t{r.mean_iterations:.4f}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"rows": [dict(zip(CONVERGENCE_COLUMNS, (r.cap, r.f1, r.converged_pct, r.mean_iterations))) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def convergence_report(
    corpus: Sequence[LabeledSequence],
    model: ChainModel,
    constraints: ConstraintSet,
    penalties=None,
    caps: Sequence[int] = (1, 2, 5, 10),
    step0: float = 1.0,
) -> ConvergenceReport:
    if not caps:
        raise ValueError("no iteration caps given")
    if list(caps) != sorted(caps):
        raise ValueError("caps must be ascending")
    tables = [model.scores(seq.tokens) for seq in corpus]
    gold = [seq.labels for seq in corpus]
    rows = []
    for cap in caps:
        preds, iters, conv = [], [], []
        for scores in tables:
            res = soft_dd(scores, constraints, max_iters=cap, step0=step0, penalties=penalties)
            preds.append(model.schema.names_of(res.labels))
            iters.append(res.iterations)
            conv.append(res.converged)
        rows.append(
            ConvergenceRow(
                cap,
                evaluate(gold, preds).f1,
                100.0 * float(np.mean(conv)) if conv else 100.0,
                float(np.mean(iters)) if iters else 0.0,
            )
        )
    return ConvergenceReport(tuple(rows))
