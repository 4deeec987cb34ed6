"""Input validation shared by the estimators and the CLI."""
from __future__ import annotations

from typing import Iterable

import numpy as np
from sklearn.utils import check_array

from .errors import InputError
from .schreier import CosetGraph
from .words import ReducedWord, parse_word


def check_counts(X) -> np.ndarray:
    """Coerce a count sequence (or single-column array) to a 1-D int64 array."""
    try:
        arr = check_array(X, ensure_2d=False, dtype=np.int64)
    except (ValueError, TypeError) as exc:
        raise InputError(f"counts must be a numeric sequence: {exc}") from None
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise InputError(f"counts must be 1-D or a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    if (arr < 0).any():
        raise InputError("counts must be nonnegative")
    return arr


def check_graph(g) -> CosetGraph:
    if not isinstance(g, CosetGraph):
        raise InputError(f"expected a CosetGraph, got {type(g).__name__}")
    return g


def check_radius(radius, minimum: int = 0, name: str = "radius") -> int:
    if isinstance(radius, bool) or int(radius) != radius or radius < minimum:
        raise InputError(f"{name} must be an integer >= {minimum}, got {radius!r}")
    return int(radius)


def check_words(words: Iterable, rank: int, name: str = "word") -> list[ReducedWord]:
    """Accept ReducedWords or literals like ``"abA"``."""
    out = []
    for w in words:
        if isinstance(w, ReducedWord):
            if w.rank != rank:
                raise InputError(f"{name} {w} has rank {w.rank}, expected {rank}")
            out.append(w)
        elif isinstance(w, str):
            out.append(parse_word(w, rank))
        else:
            raise InputError(f"{name} must be a word literal, got {w!r}")
    return out
