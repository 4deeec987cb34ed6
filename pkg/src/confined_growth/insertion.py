"""Coset inflation: insert conjugated confining blocks f p f^-1 into a word.

Given a coset representative g = s_1 ... s_m and, for each position, a block
``f_i p_i f_i^-1`` whose conjugate by the prefix s_1...s_{i-1} lies in H,
the map ε -> Π (f_i p_i f_i^-1)^{ε_i} s_i sends {0,1}^m into the coset Hg.
In a free group every claim about this map is checked exactly on words.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InputError, ResourceError, SelectionFailure, StateError
from .schreier import CosetGraph, check_confining_set, format_vertex
from .words import Alphabet, ReducedWord, cancellation_length, conjugate, reduce

DEFAULT_POWER_CAP = 3
MAX_EXHAUSTIVE_M = 20
DEFAULT_SAMPLED_PAIRS = 10**5
MAX_REPAIRS = 64


@dataclass(frozen=True)
class Decomposition:
    g: ReducedWord
    pieces: tuple
    checkpoints: tuple
    L: int

    @property
    def m(self) -> int:
        return len(self.pieces)

    @property
    def theta(self) -> float:
        return 1.0 / (2 * self.L)


def decompose(g: ReducedWord, L: int) -> Decomposition:
    """Split g into consecutive length-L pieces; a short tail joins the last piece."""
    if L < 1:
        raise InputError(f"piece length L must be >= 1, got {L}")
    n = len(g)
    letters = g.letters
    if n == 0:
        pieces: list[tuple] = []
    elif n < L:
        pieces = [letters]
    else:
        q = n // L
        pieces = [letters[i * L:(i + 1) * L] for i in range(q - 1)]
        pieces.append(letters[(q - 1) * L:])
    words = tuple(ReducedWord(g.rank, p) for p in pieces)
    checkpoints = [g.alphabet.identity()]
    for w in words:
        checkpoints.append(checkpoints[-1] * w)
    return Decomposition(g, words, tuple(checkpoints), L)


def default_f_candidates(rank: int) -> list[ReducedWord]:
    """Short, pairwise non-commensurable conjugators."""
    if rank == 1:
        return [ReducedWord(1, (1, 1))]
    if rank == 2:
        return [ReducedWord(2, w) for w in ((1, 2), (1, -2), (1, 1, 2))]
    pairs = itertools.combinations(range(1, rank + 1), 2)
    out = []
    for i, j in pairs:
        out.append(ReducedWord(rank, (i, j)))
    for i, j in itertools.combinations(range(1, rank + 1), 2):
        out.append(ReducedWord(rank, (i, -j)))
    return out


@dataclass(frozen=True)
class Block:
    f: ReducedWord
    p: ReducedWord
    power: int
    word: ReducedWord
    survival: int

    @property
    def raw_letters(self) -> tuple:
        return self.f.letters + self.p.letters + self.f.inverse().letters


def surviving_letters(left: Sequence[int], block: Sequence[int], right: Sequence[int]) -> int:
    """Letters of ``block`` left after freely reducing left . block . right."""
    cl = cancellation_length(left, block)
    rest = block[cl:]
    if not rest:
        return 0
    return len(rest) - cancellation_length(rest, right)


@dataclass
class InsertionScheme:
    decomposition: Decomposition
    blocks: list
    graph: CosetGraph
    P: list = field(default_factory=list)
    F_candidates: list = field(default_factory=list)
    repairs: int = 0

    @property
    def m(self) -> int:
        return self.decomposition.m

    @property
    def g(self) -> ReducedWord:
        return self.decomposition.g

    @property
    def R(self) -> int:
        """Longest reduced block; each inserted block adds at most R letters."""
        return max((len(b.word) for b in self.blocks), default=0)

    @property
    def R_conjugate(self) -> int:
        return max((2 * len(b.f) + len(b.p) for b in self.blocks), default=0)

    @property
    def survival_margin(self) -> int:
        return min((b.survival for b in self.blocks), default=0)

    def to_dict(self) -> dict:
        return {
            "g": str(self.g),
            "L": self.decomposition.L,
            "m": self.m,
            "theta": self.decomposition.theta,
            "pieces": [str(s) for s in self.decomposition.pieces],
            "blocks": [
                {"position": i + 1, "f": str(b.f), "power": b.power, "p": str(b.p),
                 "block": str(b.word), "surviving_letters": b.survival}
                for i, b in enumerate(self.blocks)
            ],
            "R": self.R,
            "R_conjugate": self.R_conjugate,
            "survival_margin": self.survival_margin,
            "repairs": self.repairs,
        }


def _admissible_blocks(d: Decomposition, graph: CosetGraph, P, F, power_cap: int, i: int) -> list[Block]:
    """All admissible blocks at position i (1-based), in scan order."""
    u = graph.vertex_of(d.checkpoints[i - 1])
    left = d.pieces[i - 2].letters if i >= 2 else ()
    right = d.pieces[i - 1].letters
    out = []
    for e in range(1, power_cap + 1):
        for f in F:
            fe = f ** e
            w = graph.walk(u, fe)
            for p in P:
                if graph.walk(w, p) != w:
                    continue
                block = conjugate(fe, p)
                surv = surviving_letters(left, block.letters, right)
                if surv > 0 and surv >= math.ceil(len(block) / 3):
                    out.append(Block(fe, p, e, block, surv))
    return out


def _first_collision(scheme: "InsertionScheme"):
    """First pair of bit strings with equal images, comparing reduced words only."""
    m = scheme.m
    alphabet = Alphabet(scheme.g.rank)
    seen: dict = {}
    for n in range(2 ** m):
        eps = tuple((n >> i) & 1 for i in range(m))
        word = reduce(_raw_product(scheme, eps), alphabet).letters
        if word in seen:
            return seen[word], eps
        seen[word] = eps
    return None


def choose_insertions(
    d: Decomposition,
    graph: CosetGraph,
    P: Sequence[ReducedWord],
    F_candidates: Sequence[ReducedWord] | None = None,
    power_cap: int = DEFAULT_POWER_CAP,
    repair: bool = True,
    max_repairs: int = MAX_REPAIRS,
) -> InsertionScheme:
    """Pick, for every position, the first admissible block f^e p f^-e.

    Candidates are scanned by power e = 1..power_cap, then F in order, then
    P in order.  A candidate is admissible when p closes up at the vertex
    reached by g_{i-1} f^e, and at least a third of the block survives
    reduction against the neighbouring pieces.

    The survival rule is local and does not by itself rule out two insertion
    patterns reducing to the same word (g = abAb on the Z-kernel is an
    example).  With ``repair=True`` and m <= MAX_EXHAUSTIVE_M, the greedy
    choice is checked exhaustively and, on a collision, the block at the
    first differing position moves to its next admissible candidate.
    """
    P = check_confining_set(P, graph.rank)
    F = default_f_candidates(graph.rank) if F_candidates is None else list(F_candidates)
    if not F:
        raise InputError("F_candidates must be nonempty")
    for f in F:
        if f.rank != graph.rank or len(f) < 2:
            raise InputError(f"candidate {f!r} must be a rank-{graph.rank} word of length >= 2")
    if d.g.rank != graph.rank:
        raise InputError(f"g has rank {d.g.rank} but the graph has rank {graph.rank}")
    options = []
    for i in range(1, d.m + 1):
        blocks = _admissible_blocks(d, graph, P, F, power_cap, i)
        if not blocks:
            raise SelectionFailure(
                f"no admissible (f, p) at position {i} among {len(F)} candidates x {len(P)} "
                f"confining words up to power {power_cap}; enlarge F_candidates or P", position=i)
        options.append(blocks)
    choice = [0] * d.m
    scheme = InsertionScheme(d, [o[0] for o in options], graph, list(P), F)
    if not repair or d.m > MAX_EXHAUSTIVE_M:
        return scheme
    for attempt in range(max_repairs + 1):
        hit = _first_collision(scheme)
        if hit is None:
            scheme.repairs = attempt
            return scheme
        differing = [i for i, (x, y) in enumerate(zip(*hit)) if x != y]
        movable = [i for i in differing if choice[i] + 1 < len(options[i])]
        if not movable:
            break
        i = movable[0]
        choice[i] += 1
        scheme = InsertionScheme(d, [o[c] for o, c in zip(options, choice)], graph, list(P), F)
    k = differing[0] + 1
    raise SelectionFailure(
        f"images collide for every tried choice of blocks (first difference at position {k}, "
        f"{attempt} repairs); enlarge F_candidates or P", position=k)


@dataclass(frozen=True)
class PhiImage:
    epsilon: tuple
    word: ReducedWord
    vertex: object
    length: int


def _check_epsilon(scheme: InsertionScheme, epsilon) -> tuple:
    eps = tuple(int(b) for b in epsilon)
    if len(eps) != scheme.m:
        raise InputError(f"epsilon has length {len(eps)}, expected m = {scheme.m}")
    if any(b not in (0, 1) for b in eps):
        raise InputError(f"epsilon must be a bit string, got {epsilon!r}")
    return eps


def _raw_product(scheme: InsertionScheme, eps) -> list[int]:
    raw: list[int] = []
    for bit, block, piece in zip(eps, scheme.blocks, scheme.decomposition.pieces):
        if bit:
            raw.extend(block.raw_letters)
        raw.extend(piece.letters)
    return raw


def phi(scheme: InsertionScheme, epsilon) -> PhiImage:
    """Π (f_i p_i f_i^-1)^{ε_i} s_i, reduced, with its endpoint vertex."""
    eps = _check_epsilon(scheme, epsilon)
    raw = _raw_product(scheme, eps)
    g = scheme.graph
    word = reduce(raw, Alphabet(scheme.g.rank))
    vertex = g.vertex_of(raw)
    reduced_vertex = g.vertex_of(word)
    assert vertex == reduced_vertex, "walking reduced and unreduced words must agree"
    return PhiImage(eps, word, vertex, len(word))


def all_images(scheme: InsertionScheme, max_m: int = MAX_EXHAUSTIVE_M) -> list[PhiImage]:
    if scheme.m > max_m:
        raise ResourceError(
            f"m = {scheme.m} needs 2^{scheme.m} images, over the exhaustive limit m <= {max_m}; "
            "use sampled mode", budget=max_m)
    # binary counter with position 1 as the lowest bit
    m = scheme.m
    return [phi(scheme, tuple((n >> i) & 1 for i in range(m))) for n in range(2 ** m)]


def verify_coset(scheme: InsertionScheme, images: Sequence[PhiImage]) -> bool:
    """Every image ends at the vertex of g, i.e. lies in the coset Hg."""
    target = scheme.graph.vertex_of(scheme.g)
    return all(im.vertex == target for im in images)


@dataclass(frozen=True)
class InjectivityResult:
    holds: bool
    mode: str
    checked: int
    collision: tuple | None = None
    first_difference: int | None = None
    seed: int | None = None

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "mode": self.mode,
            "checked": self.checked,
            "seed": self.seed,
            "collision": None if self.collision is None else ["".join(map(str, e)) for e in self.collision],
            "first_difference": self.first_difference,
        }


def _first_difference(e1, e2) -> int:
    return next(i + 1 for i, (a, b) in enumerate(zip(e1, e2)) if a != b)


def verify_injective(scheme: InsertionScheme, images: Sequence[PhiImage]) -> InjectivityResult:
    """All images are pairwise distinct words; reports the first collision otherwise."""
    if scheme.m > MAX_EXHAUSTIVE_M:
        raise ResourceError(f"m = {scheme.m} over the exhaustive limit; use sampled mode",
                            budget=MAX_EXHAUSTIVE_M)
    seen: dict = {}
    for im in images:
        prev = seen.get(im.word)
        if prev is not None:
            return InjectivityResult(False, "exhaustive", len(seen) + 1, (prev, im.epsilon),
                                     _first_difference(prev, im.epsilon))
        seen[im.word] = im.epsilon
    return InjectivityResult(True, "exhaustive", len(seen))


def verify_injective_sampled(scheme: InsertionScheme, n_pairs: int = DEFAULT_SAMPLED_PAIRS,
                             seed: int = 0) -> InjectivityResult:
    """Compare images of uniformly random distinct bit-string pairs."""
    if scheme.m == 0:
        return InjectivityResult(True, "sampled", 0, seed=seed)
    rng = random.Random(seed)
    m = scheme.m
    alphabet = Alphabet(scheme.g.rank)
    for _ in range(n_pairs):
        a = rng.getrandbits(m)
        b = rng.getrandbits(m)
        if a == b:
            b ^= 1 << rng.randrange(m)
        e1 = tuple((a >> (m - 1 - i)) & 1 for i in range(m))
        e2 = tuple((b >> (m - 1 - i)) & 1 for i in range(m))
        # words only; coset membership is checked separately
        if reduce(_raw_product(scheme, e1), alphabet) == reduce(_raw_product(scheme, e2), alphabet):
            return InjectivityResult(False, "sampled", n_pairs, (e1, e2), _first_difference(e1, e2), seed)
    return InjectivityResult(True, "sampled", n_pairs, seed=seed)


@dataclass
class SchemeVerification:
    coset: bool
    injective: InjectivityResult
    length_bound: bool
    images_checked: int
    max_length: int
    mode: str

    @property
    def ok(self) -> bool:
        return self.coset and bool(self.injective) and self.length_bound

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "images_checked": self.images_checked,
            "coset": self.coset,
            "injective": self.injective.to_dict(),
            "length_bound": self.length_bound,
            "max_length": self.max_length,
        }


def length_bound_holds(scheme: InsertionScheme, image: PhiImage) -> bool:
    return image.length <= len(scheme.g) + scheme.R * sum(image.epsilon)


def verify_scheme(scheme: InsertionScheme, sampled: bool = False, n_pairs: int = DEFAULT_SAMPLED_PAIRS,
                  seed: int = 0, max_exhaustive: int = MAX_EXHAUSTIVE_M) -> SchemeVerification:
    """Run the coset, injectivity and length-bound checks.

    Exhaustive up to ``max_exhaustive``; beyond that ``sampled=True`` checks
    random images and pairs instead.
    """
    if scheme.m <= max_exhaustive:
        images = all_images(scheme, max_exhaustive)
        inj = verify_injective(scheme, images)
        mode = "exhaustive"
    elif sampled:
        rng = random.Random(seed)
        images = [phi(scheme, [rng.getrandbits(1) for _ in range(scheme.m)])
                  for _ in range(min(n_pairs, 10**4))]
        inj = verify_injective_sampled(scheme, n_pairs, seed)
        mode = "sampled"
    else:
        raise ResourceError(
            f"m = {scheme.m} needs 2^{scheme.m} images, over the exhaustive limit m <= {max_exhaustive}; "
            "rerun in sampled mode", budget=max_exhaustive)
    coset = verify_coset(scheme, images)
    bound = all(length_bound_holds(scheme, im) for im in images)
    return SchemeVerification(coset, inj, bound, len(images), max((im.length for im in images), default=0), mode)


def exponential_count_report(scheme: InsertionScheme, verification: SchemeVerification | None,
                             s: float = 1.0) -> dict:
    """Size and length budget of the verified image set, plus the series factor.

    The factor (1 + e^{-sR})^{θ‖g‖} with θ = 1/(2L) is what the image set
    contributes against e^{-s‖g‖} when comparing Poincaré series.
    """
    if verification is None:
        raise StateError("run verify_scheme before asking for the count report")
    if not (verification.coset and verification.injective):
        raise StateError("count report needs both the coset and the injectivity check to pass")
    n = len(scheme.g)
    theta = scheme.decomposition.theta
    R = scheme.R
    return {
        "elements": 2 ** scheme.m,
        "m": scheme.m,
        "g_length": n,
        "R": R,
        "length_cap": n + R * scheme.m,
        "theta": theta,
        "s": s,
        "series_factor": (1 + math.exp(-s * R)) ** (theta * n),
        "full_factor": (1 + math.exp(-s * R)) ** scheme.m,
        "target_vertex": format_vertex(scheme.graph.vertex_of(scheme.g)),
    }
