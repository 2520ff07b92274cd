"""Hierarchical BIO labels, transition validity, and count keys.

A full label is either ``"O"`` or a ``/``-joined list of components such as
``I-authors/B-person/B-first``; component ``d`` carries the BIO prefix for
hierarchy level ``d``. Global constraints are written over *count keys*: the
number of positions that open (prefix ``B``) a given element of the hierarchy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

OUTSIDE = "O"
START = None  # sentinel "previous label" at the first position


class LabelError(ValueError):
    pass


@dataclass(frozen=True)
class ParsedLabel:
    components: tuple[tuple[str, str], ...] = ()

    @property
    def is_outside(self) -> bool:
        return not self.components

    @property
    def depth(self) -> int:
        return len(self.components)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for _, name in self.components)

    def prefix(self, level: int) -> Optional[str]:
        if level < len(self.components):
            return self.components[level][0]
        return None

    def __str__(self) -> str:
        if self.is_outside:
            return OUTSIDE
        return "/".join(f"{p}-{n}" for p, n in self.components)


def parse_label(raw: str) -> ParsedLabel:
    if not raw:
        raise LabelError("empty label")
    if raw == OUTSIDE:
        return ParsedLabel(())
    components = []
    for part in raw.split("/"):
        if part == OUTSIDE:
            raise LabelError(f"'O' mixed with other components in {raw!r}")
        prefix, sep, name = part.partition("-")
        if prefix not in ("B", "I") or not sep or not name:
            raise LabelError(f"malformed component {part!r} in {raw!r}")
        if name.startswith(("B-", "I-")) or any(ch.isspace() for ch in name):
            raise LabelError(f"bad element name {name!r} in {raw!r}")
        components.append((prefix, name))
    return ParsedLabel(tuple(components))


def validate_transition(prev: Optional[ParsedLabel], nxt: ParsedLabel) -> bool:
    """True iff ``nxt`` may follow ``prev`` (``START`` for the first token).

    Every level at which ``nxt`` continues a segment (prefix ``I``) must be
    matched by ``prev`` carrying the same name path through that level.
    """
    for level, (prefix, _) in enumerate(nxt.components):
        if prefix != "I":
            continue
        if prev is None or prev.depth <= level:
            return False
        if prev.names[: level + 1] != nxt.names[: level + 1]:
            return False
    return True


class CountKey(NamedTuple):
    level: int
    path: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.level}:{'/'.join(self.path)}"

    @classmethod
    def parse(cls, text: str) -> "CountKey":
        level, sep, path = text.partition(":")
        if not sep or not path:
            raise LabelError(f"malformed count key {text!r}")
        key = cls(int(level), tuple(path.split("/")))
        if len(key.path) != key.level + 1:
            raise LabelError(f"count key {text!r}: path length must be level+1")
        return key


def opened_keys(label: ParsedLabel) -> list[CountKey]:
    """Count keys that ``label`` opens, i.e. levels where it has prefix B."""
    names = label.names
    return [
        CountKey(level, names[: level + 1])
        for level, (prefix, _) in enumerate(label.components)
        if prefix == "B"
    ]


@dataclass(frozen=True)
class LabelSchema:
    """Ordered label universe; label ids are positions in ``labels``."""

    labels: tuple[str, ...]
    parsed: tuple[ParsedLabel, ...] = field(init=False, repr=False, compare=False)
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise LabelError("duplicate labels in schema")
        if OUTSIDE not in labels:
            raise LabelError("schema must contain 'O'")
        parsed = tuple(parse_label(lab) for lab in labels)
        for lab, p in zip(labels, parsed):
            if str(p) != lab:
                raise LabelError(f"label {lab!r} does not round-trip")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "parsed", parsed)
        object.__setattr__(self, "index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def induce(cls, labels: Iterable[str]) -> "LabelSchema":
        """``"O"`` first, then the remaining observed labels sorted."""
        rest = sorted(set(labels) - {OUTSIDE})
        return cls((OUTSIDE, *rest))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def depth(self) -> int:
        return max([1] + [p.depth for p in self.parsed])

    @property
    def outside_id(self) -> int:
        return self.index[OUTSIDE]

    def id_of(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise LabelError(f"label {label!r} not in schema") from None

    def ids(self, labels: Sequence[str]) -> np.ndarray:
        return np.array([self.id_of(lab) for lab in labels], dtype=np.int64)

    def names_of(self, ids: Iterable[int]) -> list[str]:
        return [self.labels[i] for i in ids]

    def transition_mask(self) -> tuple[np.ndarray, np.ndarray]:
        """(L x L allowed-transition matrix, length-L start-validity vector)."""
        n = len(self.parsed)
        mask = np.array(
            [[validate_transition(a, b) for b in self.parsed] for a in self.parsed],
            dtype=bool,
        ).reshape(n, n)
        start = np.array([validate_transition(START, b) for b in self.parsed], dtype=bool)
        return mask, start

    def key_incidence(self, keys: Sequence[CountKey]) -> np.ndarray:
        """K x L 0/1 matrix: entry (k, l) is 1 iff label l opens key k."""
        pos = {k: i for i, k in enumerate(keys)}
        inc = np.zeros((len(keys), len(self.parsed)), dtype=np.int64)
        for lid, p in enumerate(self.parsed):
            for key in opened_keys(p):
                if key in pos:
                    inc[pos[key], lid] = 1
        return inc


def enumerate_count_keys(schema: LabelSchema) -> list[CountKey]:
    keys = {key for p in schema.parsed for key in opened_keys(p)}
    return sorted(keys)


def count_vector(labels: Sequence[ParsedLabel], keys: Sequence[CountKey]) -> np.ndarray:
    pos = {k: i for i, k in enumerate(keys)}
    counts = np.zeros(len(keys), dtype=np.int64)
    for label in labels:
        for key in opened_keys(label):
            i = pos.get(key)
            if i is not None:
                counts[i] += 1
    return counts


def first_invalid_position(labels: Sequence[ParsedLabel]) -> Optional[int]:
    """Index of the first BIO-invalid transition, or None if the sequence is valid."""
    prev = START
    for k, label in enumerate(labels):
        if not validate_transition(prev, label):
            return k
        prev = label
    return None
