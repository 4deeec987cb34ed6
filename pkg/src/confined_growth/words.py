"""Freely reduced words over a rank-n alphabet.

Letters are signed integers: ``+i`` is the generator x_i and ``-i`` its
inverse, for ``1 <= i <= rank``.  The textual form uses ``a..z`` for the
generators and upper case (or a ``^-1`` suffix) for inverses, so ``"abA"``
is x1 x2 x1^-1 and ``""`` is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError, ResourceError

DEFAULT_ENUMERATION_BUDGET = 10**7

_LOWER = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Alphabet:
    rank: int

    def __post_init__(self):
        if not isinstance(self.rank, int) or isinstance(self.rank, bool) or self.rank < 1:
            raise InputError(f"rank must be a positive integer, got {self.rank!r}")

    @property
    def letters(self) -> tuple[int, ...]:
        """All 2n letters, generators first: (1, ..., n, -1, ..., -n)."""
        gens = tuple(range(1, self.rank + 1))
        return gens + tuple(-i for i in gens)

    @property
    def degree(self) -> int:
        return 2 * self.rank

    def check_letter(self, letter: int) -> int:
        if not isinstance(letter, int) or letter == 0 or abs(letter) > self.rank:
            raise InputError(f"letter {letter!r} is not in the rank-{self.rank} alphabet")
        return letter

    def identity(self) -> "ReducedWord":
        return ReducedWord(self.rank, ())

    def generator(self, i: int) -> "ReducedWord":
        return ReducedWord(self.rank, (self.check_letter(i),))

    def parse(self, text: str) -> "ReducedWord":
        return parse_word(text, self.rank)


def letter_symbol(letter: int) -> str:
    if abs(letter) > len(_LOWER):
        raise InputError(f"letter {letter} has no single-character symbol")
    ch = _LOWER[abs(letter) - 1]
    return ch if letter > 0 else ch.upper()


def parse_letters(text: str, rank: int) -> list[int]:
    """Parse a word literal into raw (unreduced) letters."""
    out: list[int] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace() or ch in "*.":
            i += 1
            continue
        low = ch.lower()
        if low not in _LOWER:
            raise InputError(f"unknown letter symbol {ch!r} in {text!r}")
        idx = _LOWER.index(low) + 1
        if idx > rank:
            raise InputError(f"letter {ch!r} exceeds rank {rank} in {text!r}")
        sign = 1 if ch.islower() else -1
        i += 1
        if text.startswith("^-1", i):
            sign = -sign
            i += 3
        out.append(sign * idx)
    return out


def parse_word(text: str, rank: int) -> "ReducedWord":
    return reduce(parse_letters(text, rank), Alphabet(rank))


def reduce(raw: Iterable[int] | str, alphabet: Alphabet) -> "ReducedWord":
    """Freely reduce ``raw`` (letters or a literal) over ``alphabet``."""
    if isinstance(raw, str):
        raw = parse_letters(raw, alphabet.rank)
    stack: list[int] = []
    for x in raw:
        alphabet.check_letter(x)
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return ReducedWord._unchecked(alphabet.rank, tuple(stack))


def _is_reduced(letters: Sequence[int]) -> bool:
    return all(letters[i] != -letters[i + 1] for i in range(len(letters) - 1))


@dataclass(frozen=True, order=True)
class ReducedWord:
    """An element of the free group F_rank in freely reduced form."""

    rank: int
    letters: tuple[int, ...]

    def __post_init__(self):
        for x in self.letters:
            if not isinstance(x, int) or x == 0 or abs(x) > self.rank:
                raise InputError(f"letter {x!r} is not in the rank-{self.rank} alphabet")
        if not _is_reduced(self.letters):
            raise InputError(f"{self.letters} is not freely reduced; use reduce()")

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.rank)

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def length(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __str__(self) -> str:
        return "".join(letter_symbol(x) for x in self.letters)

    def __repr__(self) -> str:
        return f"ReducedWord({str(self)!r}, rank={self.rank})"

    def _check_same(self, other: "ReducedWord"):
        if not isinstance(other, ReducedWord):
            raise InputError(f"expected ReducedWord, got {type(other).__name__}")
        if other.rank != self.rank:
            raise InputError(f"alphabet mismatch: rank {self.rank} vs rank {other.rank}")

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        return multiply(self, other)

    def inverse(self) -> "ReducedWord":
        return ReducedWord(self.rank, tuple(-x for x in reversed(self.letters)))

    __invert__ = inverse

    def __pow__(self, k: int) -> "ReducedWord":
        base = self if k >= 0 else self.inverse()
        out = self.alphabet.identity()
        for _ in range(abs(k)):
            out = out * base
        return out

    @classmethod
    def _unchecked(cls, rank: int, letters: tuple[int, ...]) -> "ReducedWord":
        w = object.__new__(cls)
        object.__setattr__(w, "rank", rank)
        object.__setattr__(w, "letters", letters)
        return w

    def is_identity(self) -> bool:
        return not self.letters


def cancellation_length(left: Sequence[int], right: Sequence[int]) -> int:
    """Number of letters cancelled at the junction of two reduced words."""
    k = 0
    n = min(len(left), len(right))
    while k < n and left[-1 - k] == -right[k]:
        k += 1
    return k


def multiply(u: ReducedWord, v: ReducedWord) -> ReducedWord:
    u._check_same(v)
    k = cancellation_length(u.letters, v.letters)
    return ReducedWord._unchecked(u.rank, u.letters[: len(u) - k] + v.letters[k:])


def inverse(u: ReducedWord) -> ReducedWord:
    return u.inverse()


def conjugate(f: ReducedWord, p: ReducedWord) -> ReducedWord:
    """Reduced form of f p f^-1."""
    f._check_same(p)
    return multiply(multiply(f, p), f.inverse())


def ball_size(rank: int, radius: int) -> int:
    """|B(radius)| in F_rank, from the sphere formula 2n(2n-1)^(k-1)."""
    return 1 + sum(sphere_size(rank, k) for k in range(1, radius + 1))


def sphere_size(rank: int, k: int) -> int:
    if k == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (k - 1)


def enumerate_ball(
    alphabet: Alphabet, radius: int, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> list[ReducedWord]:
    """All reduced words of length <= radius, in order of length."""
    if radius < 0:
        raise InputError(f"radius must be >= 0, got {radius}")
    total = ball_size(alphabet.rank, radius)
    if total > budget:
        raise ResourceError(
            f"ball of radius {radius} in F_{alphabet.rank} has {total} words, "
            f"over the enumeration budget of {budget} (raise --budget)",
            budget=budget,
        )
    out = [alphabet.identity()]
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            last = w[-1] if w else 0
            for x in alphabet.letters:
                if x != -last:
                    nxt.append(w + (x,))
        out.extend(ReducedWord._unchecked(alphabet.rank, w) for w in nxt)
        frontier = nxt
    return out
