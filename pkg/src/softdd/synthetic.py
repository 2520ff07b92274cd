"""Seeded citation-like corpora with controllable author/editor ambiguity.

Each citation follows one of a few field orders. Editors normally carry an
``( eds . )`` cue; with probability ``confusion`` the cue is dropped, which
makes an editor block after the title look exactly like the author block of
a title-first citation. Only a global count (one author block per citation)
tells the two apart.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .corpus import LabeledSequence

FLAT = "flat"
HIERARCHICAL = "hierarchical"

FIRST_NAMES = ["John", "Mary", "Wei", "Anna", "Pierre", "Kenji", "Olga", "Ravi", "Lena", "Tomas"]
INITIALS = [f"{c}." for c in "ABCDEFGHJKLMNPRSTW"]
LAST_NAMES = [
    "Smith", "Garcia", "Chen", "Mueller", "Rossi", "Tanaka", "Ivanova", "Patel",
    "Novak", "Okafor", "Lindqvist", "Dubois", "Kowalski", "Haddad", "Moreau",
]
TITLE_WORDS = [
    "learning", "models", "for", "efficient", "inference", "in", "structured", "data",
    "a", "study", "of", "networks", "the", "analysis", "random", "graphs", "with",
    "constraints", "on", "sparse", "estimation", "methods", "theory", "algorithms",
]
CONF_WORDS = ["Machine", "Learning", "Language", "Processing", "Vision", "Data", "Systems", "Theory"]
JOURNAL_HEADS = [["Journal", "of"], ["Transactions", "on"], ["Annals", "of"], ["Letters", "in"]]
JOURNAL_WORDS = ["Physics", "Statistics", "Computing", "Mathematics", "Biology", "Economics"]
PUBLISHERS = [["Springer"], ["Elsevier"], ["MIT", "Press"], ["Wiley"], ["Oxford", "University", "Press"]]
CITIES = [["New", "York"], ["Berlin"], ["London"], ["Boston"], ["Amsterdam"], ["Basel"]]

# Field orders and their sampling weights. "editor?" appears with probability 1/2.
TEMPLATES = [
    (0.25, ["authors", "title", "journal", "volume", "pages", "year"]),
    (0.25, ["authors", "title", "editor?", "booktitle", "pages", "year"]),
    (0.10, ["authors", "title", "publisher", "address", "year"]),
    (0.15, ["title", "authors", "booktitle", "pages", "year"]),
    (0.10, ["title", "authors", "journal", "volume", "year"]),
    (0.15, ["authors", "title", "editor", "booktitle", "publisher", "address", "year"]),
]


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_sequences: int = 100
    min_length: int = 1
    max_length: int = 80
    template: str = HIERARCHICAL
    confusion: float = 0.5
    marker_rate: float = 0.3  # chance of a leading "[n]" token labelled O

    def __post_init__(self):
        if not (0.0 <= self.confusion <= 1.0 and 0.0 <= self.marker_rate <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.min_length < 1 or self.max_length < self.min_length:
            raise ValueError("need 1 <= min_length <= max_length")
        if self.n_sequences < 0:
            raise ValueError("n_sequences must be >= 0")
        if self.template not in (FLAT, HIERARCHICAL):
            raise ValueError(f"unknown template {self.template!r}")


def _person(rng: random.Random) -> tuple[list[str], list[str]]:
    if rng.random() < 0.5:
        first = [rng.choice(INITIALS) for _ in range(rng.randint(1, 2))]
    else:
        first = [rng.choice(FIRST_NAMES)]
    return first, [rng.choice(LAST_NAMES)]


def _names_block(field_: str, rng, hierarchical: bool, cue: bool) -> list[tuple[str, str]]:
    """Tokens and labels of an author or editor list.

    Only the lead person is nested; co-authors hide behind a bare "et al ."
    so that block, person, first and last each open exactly once.
    """
    out = []
    first, last = _person(rng)
    for j, tok in enumerate(first):
        out.append((tok, ("person", "first", j == 0, j == 0)))
    for j, tok in enumerate(last):
        out.append((tok, ("person", "last", False, j == 0)))
    if rng.random() < 0.4:
        out.extend([("et", None), ("al", None), (".", None)])
    out.append((",", None))
    if cue:
        out.extend([("(", None), ("eds", None), (".", None), (")", None)])

    labeled = []
    for k, (tok, inner) in enumerate(out):
        top = "B" if k == 0 else "I"
        if not hierarchical or inner is None:
            labeled.append((tok, f"{top}-{field_}"))
            continue
        _, sub, opens_person, opens_sub = inner
        person = "B" if opens_person else "I"
        part = "B" if opens_sub else "I"
        labeled.append((tok, f"{top}-{field_}/{person}-person/{part}-{sub}"))
    return labeled


def _field_tokens(field_: str, rng: random.Random) -> list[str]:
    if field_ == "title":
        words = [rng.choice(TITLE_WORDS) for _ in range(rng.randint(3, 7))]
        words[0] = words[0].capitalize()
        return words + ["."]
    if field_ == "booktitle":
        words = ["Proceedings", "of", "the"] if rng.random() < 0.7 else ["In"]
        words += [rng.choice(CONF_WORDS) for _ in range(rng.randint(1, 3))]
        return words + ["Conference", ","]
    if field_ == "journal":
        return list(rng.choice(JOURNAL_HEADS)) + [rng.choice(JOURNAL_WORDS), ","]
    if field_ == "volume":
        return [str(rng.randint(1, 60)), ","]
    if field_ == "pages":
        start = rng.randint(1, 900)
        return ["pp.", f"{start}-{start + rng.randint(2, 30)}", ","]
    if field_ == "publisher":
        return list(rng.choice(PUBLISHERS)) + [","]
    if field_ == "address":
        return list(rng.choice(CITIES)) + [","]
    if field_ == "year":
        return [str(rng.randint(1950, 2015)), "."]
    raise ValueError(field_)


def generate_one(rng: random.Random, config: GeneratorConfig) -> LabeledSequence:
    hierarchical = config.template == HIERARCHICAL
    weights, orders = zip(*TEMPLATES)
    order = rng.choices(orders, weights=weights)[0]
    pairs: list[tuple[str, str]] = []
    if rng.random() < config.marker_rate:
        pairs.append((f"[{rng.randint(1, 40)}]", "O"))
    for field_ in order:
        if field_.endswith("?"):
            if rng.random() < 0.5:
                continue
            field_ = field_[:-1]
        if field_ in ("authors", "editor"):
            cue = field_ == "editor" and rng.random() >= config.confusion
            pairs.extend(_names_block(field_, rng, hierarchical, cue))
        else:
            toks = _field_tokens(field_, rng)
            pairs.extend((t, f"{'B' if i == 0 else 'I'}-{field_}") for i, t in enumerate(toks))
    tokens, labels = zip(*pairs)
    return LabeledSequence(tuple(tokens), tuple(labels))


def generate(config: GeneratorConfig, offset: int = 0) -> list[LabeledSequence]:
    """``config.n_sequences`` citations; sequence i uses its own seed derived from (seed, offset + i)."""
    out = []
    for i in range(config.n_sequences):
        rng = random.Random(f"{config.seed}:{offset + i}")
        for _ in range(1000):
            seq = generate_one(rng, config)
            if config.min_length <= len(seq) <= config.max_length:
                break
        else:
            raise ValueError("length range unsatisfiable for this grammar")
        out.append(seq)
    return out


def generate_splits(
    config: GeneratorConfig, sizes: dict, names: Optional[list] = None
) -> dict:
    """Disjoint named splits, e.g. sizes={"train": 800, "dev": 400, "test": 500}."""
    out = {}
    offset = 0
    for name in names or list(sizes):
        n = sizes[name]
        cfg = GeneratorConfig(**{**config.__dict__, "n_sequences": n})
        out[name] = generate(cfg, offset=offset)
        offset += n
    return out
