"""Hard- and soft-constrained MAP by projected subgradient on the dual.

For constraints ``A y <= b`` (soft ones with per-unit penalty ``c``) the
multipliers live in ``[0, c]`` (``[0, inf)`` for hard rows) and each iteration
decodes

    y_t = argmax_y <w - A^T lam, y>

with one Viterbi call, then moves ``lam`` along the violation ``A y_t - b``
and clips it back into the box. The dual value

    D(lam) = max_y <w - A^T lam, y> + lam^T b

upper-bounds the soft objective ``w.y - c.max(0, Ay - b)`` of every ``y``
whenever ``0 <= lam <= c``, so no extra cap term is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import chain
from .chain import ScoreTable, sequence_score
from .constraints import ConstraintSet

CONVERGED = "converged"
ITERATION_LIMIT = "iteration_limit"

LAMBDA_TOL = 1e-9
DEFAULT_MAX_ITERS = 100
DEFAULT_STEP0 = 1.0


@dataclass
class DualState:
    lam: np.ndarray
    iteration: int = 0
    n_increases: int = 0
    best_dual: float = math.inf
    last_dual: Optional[float] = None

    def record_dual(self, dual: float) -> None:
        if self.last_dual is not None and dual > self.last_dual:
            self.n_increases += 1
        self.last_dual = dual
        self.best_dual = min(self.best_dual, dual)


def step_size(state: DualState, step0: float) -> float:
    if not step0 > 0:
        raise ValueError("step0 must be positive")
    return step0 / (1 + state.n_increases)


def kkt_check(lam, violations, penalties, tolerance: float = LAMBDA_TOL) -> bool:
    """Per row: tight (v == 0), or slack with lam == 0, or violated with lam == c.

    Rows with an infinite penalty are hard: they may never be violated.
    """
    lam = np.asarray(lam, dtype=float)
    v = np.asarray(violations)
    c = np.asarray(penalties, dtype=float)
    if not (lam.shape == v.shape == c.shape):
        raise ValueError("lam, violations and penalties must be aligned")
    slack_ok = (v < 0) & (np.abs(lam) <= tolerance)
    capped = np.abs(lam - np.where(np.isinf(c), np.nan, c)) <= tolerance
    over_ok = (v > 0) & np.isfinite(c) & capped
    return bool(np.all((v == 0) | slack_ok | over_ok))


def soft_objective(score: float, violations, penalties) -> float:
    """``score - sum c_i * max(0, v_i)``; -inf if a hard row is violated."""
    z = np.maximum(0, np.asarray(violations))
    c = np.asarray(penalties, dtype=float)
    hit = z > 0
    if np.any(np.isinf(c[hit])):
        return -math.inf
    return float(score - np.dot(c[hit], z[hit]))


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    dual: float
    primal: float
    n_violated: int
    eta: float
    lam: np.ndarray = field(repr=False)

    def format(self) -> str:
        return f"{self.iteration}\t{self.dual!r}\t{self.primal!r}\t{self.n_violated}\t{self.eta!r}"


@dataclass(frozen=True)
class PredictionResult:
    labels: np.ndarray
    score: float  # w.y of the returned labels
    primal: float  # soft objective of the returned labels
    dual: float  # smallest dual value seen
    iterations: int
    certificate: str
    violations: np.ndarray  # z: max(0, A y - b) per constraint
    lam: np.ndarray
    trace: Optional[list] = None

    @property
    def converged(self) -> bool:
        return self.certificate == CONVERGED


def _check_budget(max_iters: int) -> None:
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")


def _dual_decompose(
    scores: ScoreTable,
    constraints: ConstraintSet,
    caps: np.ndarray,
    max_iters: int,
    step0: float,
    trace: bool,
) -> PredictionResult:
    A = constraints.A.astype(float)
    b = constraints.b.astype(float)
    state = DualState(lam=np.zeros(len(constraints)))
    rows = [] if trace else None
    best = None  # (primal, labels, score, v)

    while True:
        state.iteration += 1
        lam = state.lam
        labels, value = chain.viterbi(scores, -(A.T @ lam))
        dual = value + float(lam @ b)
        state.record_dual(dual)
        v = constraints.signed_violations(labels)
        score = sequence_score(scores, labels)
        primal = soft_objective(score, v, caps)
        if best is None or primal > best[0]:
            best = (primal, labels, score, v)

        done = kkt_check(lam, v, caps)
        if done or state.iteration >= max_iters:
            eta = 0.0
        else:
            eta = step_size(state, step0)
            state.lam = np.clip(lam + eta * v, 0.0, caps)
        if rows is not None:
            rows.append(TraceRow(state.iteration, dual, primal, int(np.sum(v > 0)), eta, state.lam.copy()))
        if done:
            return PredictionResult(
                labels, score, primal, state.best_dual, state.iteration, CONVERGED,
                np.maximum(0, v), state.lam, rows,
            )
        if state.iteration >= max_iters:
            primal, labels, score, v = best
            return PredictionResult(
                labels, score, primal, state.best_dual, state.iteration, ITERATION_LIMIT,
                np.maximum(0, v), state.lam, rows,
            )


def soft_dd(
    scores: ScoreTable,
    constraints: ConstraintSet,
    max_iters: int = DEFAULT_MAX_ITERS,
    step0: float = DEFAULT_STEP0,
    penalties=None,
    trace: bool = False,
) -> PredictionResult:
    """MAP under soft constraints; ``penalties`` overrides the set's own."""
    _check_budget(max_iters)
    caps = constraints.penalties if penalties is None else np.asarray(penalties, dtype=float)
    if caps.shape != (len(constraints),):
        raise ValueError("penalty vector length mismatch")
    if np.any(caps < 0) or np.any(np.isnan(caps)):
        raise ValueError("penalties must be non-negative")
    if np.any(np.isinf(caps)):
        raise ValueError("soft_dd needs finite penalties; use hard_dd for HARD rows")
    return _dual_decompose(scores, constraints, caps, max_iters, step0, trace)


def hard_dd(
    scores: ScoreTable,
    constraints: ConstraintSet,
    max_iters: int = DEFAULT_MAX_ITERS,
    step0: float = DEFAULT_STEP0,
    trace: bool = False,
) -> PredictionResult:
    """MAP with every constraint enforced exactly (penalties ignored)."""
    _check_budget(max_iters)
    caps = np.full(len(constraints), math.inf)
    return _dual_decompose(scores, constraints, caps, max_iters, step0, trace)


def mixed_dd(
    scores: ScoreTable,
    constraints: ConstraintSet,
    max_iters: int = DEFAULT_MAX_ITERS,
    step0: float = DEFAULT_STEP0,
    trace: bool = False,
) -> PredictionResult:
    """Soft rows use their penalty as the multiplier cap, HARD rows are unbounded."""
    _check_budget(max_iters)
    return _dual_decompose(scores, constraints, constraints.penalties, max_iters, step0, trace)


def unconstrained(scores: ScoreTable, constraints: Optional[ConstraintSet] = None) -> PredictionResult:
    labels, value = chain.viterbi(scores)
    if constraints is None or len(constraints) == 0:
        v = np.zeros(0, dtype=np.int64)
        caps = np.zeros(0)
    else:
        v = constraints.signed_violations(labels)
        caps = constraints.penalties
    return PredictionResult(
        labels, value, soft_objective(value, v, caps), value, 1, CONVERGED,
        np.maximum(0, v), np.zeros(len(v)),
    )
