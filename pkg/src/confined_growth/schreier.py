"""Schreier coset graphs H\\F_n and the finite analyses run on them.

A :class:`CosetGraph` is a rooted graph whose vertices are the cosets
``Hg`` and whose edge ``v -> v.x`` is labelled by the letter ``x``.  Only
``step(vertex, letter)`` is required, so infinite graphs are explored
lazily and every analysis takes an explicit radius.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .errors import (
    CompletionError,
    InputError,
    ResourceError,
    UnsupportedBackendError,
    ValidationError,
)
from .words import Alphabet, ReducedWord, letter_symbol, parse_letters

DEFAULT_VERTEX_BUDGET = 5 * 10**6

VertexId = Hashable


def vertex_sort_key(v) -> tuple:
    # ids within one backend share a type; the type tag keeps mixed files sortable
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (0, v)
    if isinstance(v, str):
        return (1, v)
    if isinstance(v, tuple):
        return (2, len(v), tuple(vertex_sort_key(x) for x in v))
    return (3, repr(v))


def format_vertex(v) -> Any:
    """JSON-friendly rendering of a vertex id."""
    if isinstance(v, tuple):
        return [format_vertex(x) for x in v]
    return v


class CosetGraph:
    """Rooted, letter-labelled, 2n-regular coset graph.

    Subclasses implement :meth:`step`.  Finite backends also implement
    :meth:`vertices`.
    """

    backend = "abstract"
    finite = False

    def __init__(self, alphabet: Alphabet, root: VertexId):
        self.alphabet = alphabet
        self.root = root

    @property
    def rank(self) -> int:
        return self.alphabet.rank

    def step(self, v: VertexId, letter: int) -> VertexId:
        raise NotImplementedError

    def vertices(self) -> list:
        raise UnsupportedBackendError(f"backend {self.backend!r} is infinite; vertices are not enumerable")

    def walk(self, v: VertexId, word: ReducedWord | Iterable[int]) -> VertexId:
        letters = word.letters if isinstance(word, ReducedWord) else word
        for x in letters:
            v = self.step(v, x)
        return v

    def vertex_of(self, word: ReducedWord | Iterable[int]) -> VertexId:
        """The coset H.word, reached by walking from the root."""
        return self.walk(self.root, word)

    def neighbors(self, v: VertexId) -> list:
        return [self.step(v, x) for x in self.alphabet.letters]

    def describe(self) -> dict:
        return {"backend": self.backend, "rank": self.rank}

    def __repr__(self):
        return f"{type(self).__name__}(rank={self.rank}, backend={self.backend!r})"


class TreeGraph(CosetGraph):
    """Trivial subgroup: the Cayley tree T_2n, vertices are reduced letter tuples."""

    backend = "trivial-subgroup"

    def __init__(self, alphabet: Alphabet):
        super().__init__(alphabet, ())

    def step(self, v, letter):
        if v and v[-1] == -letter:
            return v[:-1]
        return v + (letter,)


class TableGraph(CosetGraph):
    """Finite coset graph stored as an explicit step table."""

    finite = True

    def __init__(self, alphabet, root, table: dict, backend="coset-table", source=None):
        super().__init__(alphabet, root)
        self._table = table
        self._vertices = sorted({v for v, _ in table}, key=vertex_sort_key)
        self.backend = backend
        self.source = source

    def step(self, v, letter):
        try:
            return self._table[(v, letter)]
        except KeyError:
            raise InputError(f"vertex {v!r} or letter {letter!r} not in graph") from None

    def vertices(self):
        return list(self._vertices)

    def describe(self):
        out = {"backend": self.backend, "rank": self.rank, "vertices": len(self._vertices)}
        if self.source is not None:
            out["source"] = str(self.source)
        return out


class AbelianGraph(CosetGraph):
    """Kernel of F_n -> Z^k: vertices are integer vectors."""

    backend = "abelianization"

    def __init__(self, alphabet, weights: Sequence[Sequence[int]]):
        self.weights = tuple(tuple(int(c) for c in w) for w in weights)
        dim = len(self.weights[0])
        super().__init__(alphabet, (0,) * dim)
        self.finite = all(c == 0 for w in self.weights for c in w)

    def step(self, v, letter):
        w = self.weights[abs(letter) - 1]
        if letter > 0:
            return tuple(a + b for a, b in zip(v, w))
        return tuple(a - b for a, b in zip(v, w))

    def vertices(self):
        if not self.finite:
            return super().vertices()
        return [self.root]

    def describe(self):
        return {"backend": self.backend, "rank": self.rank, "weights": [list(w) for w in self.weights]}


class FreeProductGraph(CosetGraph):
    """Kernel of F_n onto a free product of cyclic groups.

    Vertices are normal forms: tuples of ``(factor, exponent)`` syllables with
    consecutive factors distinct and exponents reduced modulo the factor order
    (``None`` for an infinite cyclic factor).
    """

    backend = "free-product"

    def __init__(self, alphabet, orders: Sequence[int | None], assignment: Sequence[int]):
        super().__init__(alphabet, ())
        self.orders = tuple(orders)
        self.assignment = tuple(assignment)
        used = set(self.assignment)
        self.finite = len(used) == 1 and self.orders[next(iter(used))] is not None

    def _norm(self, factor, e):
        order = self.orders[factor]
        return e % order if order is not None else e

    def step(self, v, letter):
        factor = self.assignment[abs(letter) - 1]
        delta = 1 if letter > 0 else -1
        if v and v[-1][0] == factor:
            e = self._norm(factor, v[-1][1] + delta)
            return v[:-1] if e == 0 else v[:-1] + ((factor, e),)
        return v + ((factor, self._norm(factor, delta)),)

    def vertices(self):
        if not self.finite:
            return super().vertices()
        factor = self.assignment[0]
        return [()] + [((factor, e),) for e in range(1, self.orders[factor])]

    def describe(self):
        orders = [o if o is not None else "inf" for o in self.orders]
        return {"backend": self.backend, "rank": self.rank, "orders": orders,
                "assignment": list(self.assignment)}


def _letter_key(label, rank: int) -> int:
    if isinstance(label, str):
        letters = parse_letters(label, rank)
        if len(letters) != 1:
            raise InputError(f"edge label {label!r} must be a single letter")
        return letters[0]
    if isinstance(label, int) and not isinstance(label, bool) and 0 < abs(label) <= rank:
        return label
    raise InputError(f"bad generator/label {label!r} for rank {rank}")


def from_coset_table(alphabet: Alphabet, table: Mapping, root) -> TableGraph:
    """Finite graph from ``{(vertex, generator): vertex}``.

    Generators may be given as positive integers ``1..n`` or as lower-case
    letters; each must act as a permutation of the vertex set.
    """
    verts = {v for v, _ in table}
    forward: dict[int, dict] = {i: {} for i in range(1, alphabet.rank + 1)}
    for (v, gen), w in table.items():
        x = _letter_key(gen, alphabet.rank)
        if x < 0:
            raise InputError(f"coset table keys must be generators, got inverse letter {gen!r}")
        forward[x][v] = w
    full: dict = {}
    for x, col in forward.items():
        sym = letter_symbol(x)
        missing = sorted(verts - set(col), key=vertex_sort_key)
        if missing:
            raise ValidationError(f"generator {sym!r} is undefined at vertex {missing[0]!r}")
        seen: dict = {}
        for v in sorted(col, key=vertex_sort_key):
            w = col[v]
            if w not in verts:
                raise ValidationError(f"generator {sym!r} sends vertex {v!r} outside the vertex set ({w!r})")
            if w in seen:
                raise ValidationError(
                    f"generator {sym!r} is not a permutation: vertices {seen[w]!r} and {v!r} both map to {w!r}")
            seen[w] = v
            full[(v, x)] = w
            full[(w, -x)] = v
    if root not in verts:
        raise InputError(f"root {root!r} is not a vertex")
    return TableGraph(alphabet, root, full)


def cyclic_quotient(alphabet: Alphabet, modulus: int, weights: Sequence[int] | None = None) -> TableGraph:
    """Coset table of the kernel of F_n -> Z/modulus, x_i -> weights[i]."""
    if modulus < 1:
        raise InputError(f"modulus must be >= 1, got {modulus}")
    weights = list(weights) if weights is not None else [1] * alphabet.rank
    if len(weights) != alphabet.rank:
        raise InputError(f"need {alphabet.rank} weights, got {len(weights)}")
    table = {(v, i + 1): (v + w) % modulus for v in range(modulus) for i, w in enumerate(weights)}
    return from_coset_table(alphabet, table, 0)


def from_abelianization(alphabet: Alphabet, weights: Sequence[Sequence[int] | int]) -> AbelianGraph:
    """Kernel of F_n -> Z^k with x_i mapped to ``weights[i]``."""
    if len(weights) != alphabet.rank:
        raise InputError(f"need one weight vector per generator ({alphabet.rank}), got {len(weights)}")
    vecs = [tuple(w) if isinstance(w, (list, tuple)) else (w,) for w in weights]
    dims = {len(v) for v in vecs}
    if len(dims) != 1 or 0 in dims:
        raise InputError(f"weight vectors must share a positive dimension, got dimensions {sorted(dims)}")
    return AbelianGraph(alphabet, vecs)


def from_free_product(
    alphabet: Alphabet,
    orders: Sequence[int | float | None],
    assignment: Sequence[int] | None = None,
) -> FreeProductGraph:
    """Kernel of F_n -> C_1 * C_2 * ... sending x_i to the generator of factor ``assignment[i]``.

    ``orders[j]`` is the order of factor j; ``None`` or ``math.inf`` means
    infinite cyclic.  By default generator i goes to factor i.
    """
    if assignment is None:
        assignment = list(range(alphabet.rank))
    if len(assignment) != alphabet.rank:
        raise InputError(f"need a factor for each of {alphabet.rank} generators")
    clean: list[int | None] = []
    for o in orders:
        if o is None or (isinstance(o, float) and math.isinf(o)):
            clean.append(None)
        elif int(o) != o or o < 2:
            raise InputError(f"finite factor order must be an integer >= 2, got {o!r}")
        else:
            clean.append(int(o))
    for a in assignment:
        if not 0 <= a < len(clean):
            raise InputError(f"factor index {a} out of range for {len(clean)} factors")
    return FreeProductGraph(alphabet, clean, assignment)


def trivial_subgroup(alphabet: Alphabet) -> TreeGraph:
    return TreeGraph(alphabet)


def _vertex_from_json(v):
    return tuple(_vertex_from_json(x) for x in v) if isinstance(v, list) else v


def load_graph_json(data: Mapping, source=None) -> TableGraph:
    """Build a finite graph from the JSON edge-list schema.

    ``{"rank": n, "vertices": [...], "root": id, "edges": [{"from", "label", "to"}]}``.
    A generator whose inverse edges never appear has them implied; once a
    file lists any inverse edge for a generator, the listing for that
    generator must be complete and consistent.
    """
    try:
        rank = data["rank"]
        raw_vertices = data["vertices"]
        root = _vertex_from_json(data["root"])
        edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"graph file is missing field {exc}") from None
    alphabet = Alphabet(rank)
    verts = [_vertex_from_json(v) for v in raw_vertices]
    vset = set(verts)
    if len(vset) != len(verts):
        raise ValidationError("duplicate vertex ids in graph file")
    if root not in vset:
        raise ValidationError(f"root {root!r} is not a listed vertex")
    listed: dict = {}
    for i, e in enumerate(edges):
        try:
            u, label, w = _vertex_from_json(e["from"]), e["label"], _vertex_from_json(e["to"])
        except (KeyError, TypeError):
            raise InputError(f"edge #{i} must have 'from', 'label' and 'to'") from None
        x = _letter_key(label, rank)
        for end in (u, w):
            if end not in vset:
                raise ValidationError(f"edge #{i} references unknown vertex {end!r}")
        if (u, x) in listed:
            raise ValidationError(f"duplicate edge ({u!r}, {letter_symbol(x)!r})")
        listed[(u, x)] = w
    explicit_gens = {-x for (_, x) in listed if x < 0}
    table = dict(listed)
    for (u, x), w in listed.items():
        back = (w, -x)
        if abs(x) in explicit_gens:
            if back not in listed:
                raise ValidationError(
                    f"inverse-pair violation: step({u!r}, {letter_symbol(x)!r}) = {w!r} "
                    f"but step({w!r}, {letter_symbol(-x)!r}) is not listed")
            if listed[back] != u:
                raise ValidationError(
                    f"inverse-pair violation: step({u!r}, {letter_symbol(x)!r}) = {w!r} "
                    f"but step({w!r}, {letter_symbol(-x)!r}) = {listed[back]!r}")
        else:
            if back in table and table[back] != u:
                raise ValidationError(
                    f"letter {letter_symbol(x)!r} is not a permutation: "
                    f"{table[back]!r} and {u!r} both map to {w!r}")
            table[back] = u
    missing = [(v, letter_symbol(x)) for v in sorted(vset, key=vertex_sort_key)
               for x in alphabet.letters if (v, x) not in table]
    if missing:
        shown = ", ".join(f"({v!r}, {s!r})" for v, s in missing[:10])
        raise CompletionError(f"{len(missing)} unresolved (vertex, letter) pairs: {shown}", missing)
    for x in alphabet.letters:
        images = [table[(v, x)] for v in vset]
        if len(set(images)) != len(images):
            raise ValidationError(f"letter {letter_symbol(x)!r} does not act as a permutation")
    return TableGraph(alphabet, root, table, backend="explicit-file", source=source)


def from_edge_list_file(path) -> TableGraph:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return load_graph_json(data, source=path)


def graph_to_json(g: CosetGraph) -> dict:
    """Serialize a finite graph to the edge-list schema (positive letters only)."""
    verts = g.vertices()
    edges = [{"from": format_vertex(v), "label": letter_symbol(x), "to": format_vertex(g.step(v, x))}
             for v in verts for x in range(1, g.rank + 1)]
    return {"rank": g.rank, "vertices": [format_vertex(v) for v in verts],
            "root": format_vertex(g.root), "edges": edges}


@dataclass(frozen=True)
class BallTable:
    radius: int
    root: VertexId
    dist: Mapping
    spheres: tuple
    counts: tuple

    @property
    def size(self) -> int:
        return sum(self.counts)

    def ball_counts(self) -> list[int]:
        return list(np.cumsum(self.counts).tolist())

    def vertices(self, upto: int | None = None) -> list:
        upto = self.radius if upto is None else upto
        return [v for s in self.spheres[: upto + 1] for v in s]

    def __contains__(self, v) -> bool:
        return v in self.dist


def bfs_ball(g: CosetGraph, radius: int, budget: int = DEFAULT_VERTEX_BUDGET) -> BallTable:
    """Materialize B(radius) around the root, spheres sorted by vertex id."""
    if radius < 0:
        raise InputError(f"radius must be >= 0, got {radius}")
    dist = {g.root: 0}
    spheres = [(g.root,)]
    frontier = [g.root]
    letters = g.alphabet.letters
    for k in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for x in letters:
                w = g.step(v, x)
                if w not in dist:
                    dist[w] = k
                    nxt.append(w)
        if len(dist) > budget:
            raise ResourceError(
                f"materialization budget of {budget} vertices exceeded at sphere {k} "
                f"({len(dist)} vertices)", budget=budget)
        nxt.sort(key=vertex_sort_key)
        spheres.append(tuple(nxt))
        frontier = nxt
    return BallTable(radius, g.root, dist, tuple(spheres), tuple(len(s) for s in spheres))


def shell(g: CosetGraph, ball: BallTable, a, k: int) -> set:
    """Sh(a, k): vertices k steps past ``a`` on geodesics from the root through ``a``.

    These are exactly the endpoints of length-k paths from ``a`` along which
    the root distance increases by one at every step.
    """
    if a not in ball.dist:
        raise InputError(f"vertex {a!r} is not in the ball of radius {ball.radius}")
    if k < 0:
        raise InputError(f"k must be >= 0, got {k}")
    need = ball.dist[a] + k
    if need > ball.radius:
        raise InputError(f"shell of depth {k} at distance {ball.dist[a]} requires a ball of radius >= {need}")
    layer = {a}
    for _ in range(k):
        nxt = set()
        for v in layer:
            dv = ball.dist[v]
            for w in g.neighbors(v):
                if ball.dist.get(w) == dv + 1:
                    nxt.add(w)
        layer = nxt
    return layer


@dataclass
class ConfinementReport:
    P: list
    radius: int
    witness: dict
    holds: bool
    failing_vertex: Any = None
    failures: int = 0
    checked: int = 0

    def to_dict(self) -> dict:
        return {
            "P": [str(p) for p in self.P],
            "radius": self.radius,
            "holds": self.holds,
            "checked_vertices": self.checked,
            "failures": self.failures,
            "failing_vertex": format_vertex(self.failing_vertex) if not self.holds else None,
        }


def check_confining_set(P: Sequence[ReducedWord], rank: int) -> list[ReducedWord]:
    P = list(P)
    if not P:
        raise InputError("confining set P must be nonempty")
    for p in P:
        if not isinstance(p, ReducedWord) or p.rank != rank:
            raise InputError(f"confining element {p!r} is not a rank-{rank} word")
        if p.is_identity():
            raise InputError("confining set P must not contain the identity")
    return P


def confinement_check(g: CosetGraph, P: Sequence[ReducedWord], radius: int,
                      ball: BallTable | None = None) -> ConfinementReport:
    """Check that some p in P labels a closed walk at every vertex of B(radius)."""
    P = check_confining_set(P, g.rank)
    if ball is None or ball.radius < radius:
        ball = bfs_ball(g, radius)
    witness = {}
    failing = None
    failures = 0
    verts = ball.vertices(radius)
    for v in verts:
        for p in P:
            if g.walk(v, p) == v:
                witness[v] = p
                break
        else:
            failures += 1
            if failing is None:
                failing = v
    return ConfinementReport(P, radius, witness, failures == 0, failing, failures, len(verts))


@dataclass(frozen=True)
class TreeBallRadius:
    """Largest m with B_n(m) embedded at a vertex; ``certified`` is False when
    no cycle was found before the horizon."""

    value: int
    certified: bool


def tree_ball_radius(g: CosetGraph, ball: BallTable, v, horizon: int | None = None) -> TreeBallRadius:
    """Radius of the largest tree ball centred at ``v``.

    Grows non-backtracking walks out of ``v`` layer by layer; the first layer
    that revisits a vertex (a loop, a repeated edge or a longer cycle) bounds
    the radius.
    """
    if v not in ball.dist:
        raise InputError(f"vertex {v!r} is not in the ball of radius {ball.radius}")
    if horizon is None:
        horizon = ball.radius - ball.dist[v]
    seen = {v}
    layer = [(v, 0)]
    for depth in range(horizon):
        nxt = []
        for u, last in layer:
            for x in g.alphabet.letters:
                if x == -last:
                    continue
                w = g.step(u, x)
                if w in seen:
                    return TreeBallRadius(depth, True)
                seen.add(w)
                nxt.append((w, x))
        layer = nxt
    return TreeBallRadius(horizon, False)


def loop_counts(g: CosetGraph, max_len: int, budget: int = DEFAULT_VERTEX_BUDGET) -> list[int]:
    """c_k = number of reduced words of length k whose walk closes at the root.

    Dynamic programming over (vertex, last letter) states; a walk that must
    return within j more steps never leaves B(j), which bounds the state set.
    """
    if max_len < 0:
        raise InputError(f"max_len must be >= 0, got {max_len}")
    ball = bfs_ball(g, max_len // 2, budget)
    dist = ball.dist
    states = {(g.root, 0): 1}
    counts = [1]
    letters = g.alphabet.letters
    for j in range(1, max_len + 1):
        remaining = max_len - j
        nxt: dict = {}
        for (u, last), c in states.items():
            for x in letters:
                if x == -last:
                    continue
                w = g.step(u, x)
                d = dist.get(w)
                if d is None or d > remaining:
                    continue
                key = (w, x)
                nxt[key] = nxt.get(key, 0) + c
        if len(nxt) > budget:
            raise ResourceError(f"loop counting state budget of {budget} exceeded at length {j}", budget=budget)
        states = nxt
        counts.append(sum(c for (u, _), c in states.items() if u == g.root))
    return counts


def nonbacktracking_operator(g: CosetGraph) -> sparse.csr_matrix:
    """Edge-adjacency (Hashimoto) operator on directed edges (v, letter)."""
    if not g.finite:
        raise UnsupportedBackendError(f"backend {g.backend!r} is infinite; the operator needs a finite graph")
    verts = g.vertices()
    index = {v: i for i, v in enumerate(verts)}
    letters = g.alphabet.letters
    pos = {x: j for j, x in enumerate(letters)}
    d = len(letters)
    rows, cols = [], []
    for v in verts:
        for x in letters:
            w = g.step(v, x)
            src = index[v] * d + pos[x]
            for y in letters:
                if y != -x:
                    rows.append(src)
                    cols.append(index[w] * d + pos[y])
    n = len(verts) * d
    data = np.ones(len(rows))
    return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


def hashimoto_spectral_radius(g: CosetGraph, tol: float = 1e-9, max_iter: int = 100_000) -> tuple[float, float]:
    """Collatz-Wielandt bracket (lo, hi) on the Perron root of the operator.

    Power iteration runs on B + I so that periodic graphs still converge.
    """
    B = nonbacktracking_operator(g)
    x = np.ones(B.shape[0])
    lo, hi = 0.0, math.inf
    for _ in range(max_iter):
        y = B @ x
        ratio = y / x
        lo, hi = float(ratio.min()), float(ratio.max())
        if hi - lo <= tol * max(hi, 1e-300):
            break
        x = y + x
        x /= x.max()
    return lo, hi


def hashimoto_growth(g: CosetGraph, tol: float = 1e-9) -> float:
    """log of the spectral radius of the non-backtracking operator (exact ω_H for finite graphs)."""
    lo, hi = hashimoto_spectral_radius(g, tol)
    return math.log(0.5 * (lo + hi))
