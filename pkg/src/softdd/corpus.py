"""Token-per-line corpus files.

Format: UTF-8, one ``token<TAB>label`` pair per line, blank line between
sequences, lines starting with ``#`` ignored.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .labels import LabelSchema, first_invalid_position, parse_label


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledSequence:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise CorpusError("tokens and labels differ in length")

    def __len__(self) -> int:
        return len(self.tokens)

    def parsed(self):
        return [parse_label(lab) for lab in self.labels]


def parse_corpus(text: str, source: str = "<string>") -> list[LabeledSequence]:
    sequences = []
    tokens: list[str] = []
    labels: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            continue
        if not line.strip():
            if tokens:
                sequences.append(LabeledSequence(tuple(tokens), tuple(labels)))
                tokens, labels = [], []
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise CorpusError(f"{source}:{lineno}: expected 'token<TAB>label'")
        try:
            parse_label(parts[1])
        except ValueError as exc:
            raise CorpusError(f"{source}:{lineno}: {exc}") from None
        tokens.append(parts[0])
        labels.append(parts[1])
    if tokens:
        sequences.append(LabeledSequence(tuple(tokens), tuple(labels)))
    return sequences


def read_corpus(path) -> list[LabeledSequence]:
    path = Path(path)
    return parse_corpus(path.read_text(encoding="utf-8"), source=str(path))


def format_corpus(sequences: Iterable[LabeledSequence]) -> str:
    blocks = []
    for seq in sequences:
        blocks.append("".join(f"{t}\t{lab}\n" for t, lab in zip(seq.tokens, seq.labels)))
    return "\n".join(blocks)


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_corpus(path, sequences: Iterable[LabeledSequence]) -> None:
    atomic_write_text(path, format_corpus(sequences))


def induce_schema(*corpora: Sequence[LabeledSequence]) -> LabelSchema:
    return LabelSchema.induce(lab for corpus in corpora for seq in corpus for lab in seq.labels)


def check_bio(corpus: Sequence[LabeledSequence]) -> None:
    """Raise CorpusError naming the first BIO-invalid (sequence, position)."""
    for i, seq in enumerate(corpus):
        pos = first_invalid_position(seq.parsed())
        if pos is not None:
            raise CorpusError(
                f"sequence {i}, position {pos}: invalid BIO transition "
                f"to {seq.labels[pos]!r}"
            )
