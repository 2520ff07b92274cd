"""Token feature templates for citation-like text."""
from __future__ import annotations

import re
from typing import Sequence

N_POSITION_BINS = 8

_YEAR = re.compile(r"^\(?(1[89]|20)\d\d[a-z]?\)?[.,;:]?$")
_PAGES = re.compile(r"^\d+(-|--|–)\d+[.,]?$")
_INITIAL = re.compile(r"^[A-Z]\.(-?[A-Z]\.)*,?$")


def shape(token: str) -> str:
    out = []
    for ch in token:
        if ch.isupper():
            c = "A"
        elif ch.islower():
            c = "a"
        elif ch.isdigit():
            c = "9"
        else:
            c = ch
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def token_features(tokens: Sequence[str]) -> list[list[str]]:
    n = len(tokens)
    feats = []
    for k, tok in enumerate(tokens):
        low = tok.lower()
        f = ["bias", f"w={tok}", f"lw={low}", f"shape={shape(tok)}"]
        for m in range(1, 5):
            if len(low) >= m:
                f.append(f"pre{m}={low[:m]}")
                f.append(f"suf{m}={low[-m:]}")
        f.append(f"pos={min(N_POSITION_BINS - 1, k * N_POSITION_BINS // n)}")
        if _YEAR.match(tok):
            f.append("re=year")
        if _PAGES.match(tok):
            f.append("re=pages")
        if _INITIAL.match(tok):
            f.append("re=initial")
        feats.append(f)
    return feats
