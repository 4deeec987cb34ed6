import json
import math
import random

import numpy as np
import pytest

from confined_growth.errors import (
    CompletionError,
    InputError,
    ResourceError,
    UnsupportedBackendError,
    ValidationError,
)
from confined_growth.schreier import (
    bfs_ball,
    confinement_check,
    cyclic_quotient,
    from_abelianization,
    from_coset_table,
    from_edge_list_file,
    from_free_product,
    graph_to_json,
    hashimoto_growth,
    hashimoto_spectral_radius,
    load_graph_json,
    loop_counts,
    nonbacktracking_operator,
    shell,
    tree_ball_radius,
)
from confined_growth.words import Alphabet, enumerate_ball, parse_word


def W(text, rank=2):
    return parse_word(text, rank)


def word_distance_oracle(g, radius):
    """d(root, v) as the shortest word reaching v, by brute-force enumeration."""
    dist = {}
    for w in enumerate_ball(g.alphabet, radius):
        v = g.vertex_of(w)
        if v not in dist or len(w) < dist[v]:
            dist[v] = len(w)
    return dist


def counts_from(dist, radius):
    return [sum(1 for d in dist.values() if d == k) for k in range(radius + 1)]


class TestBackends:
    def test_z2_table(self, F2):
        g = from_coset_table(F2, {(0, 1): 1, (1, 1): 0, (0, 2): 1, (1, 2): 0}, 0)
        assert bfs_ball(g, 1).size == 2
        assert g.vertices() == [0, 1]

    def test_identity_table(self, F2):
        g = from_coset_table(F2, {(0, 1): 0, (0, 2): 0}, 0)
        assert all(g.step(0, x) == 0 for x in F2.letters)

    def test_z3_table(self, zmod3):
        assert bfs_ball(zmod3, 4).counts == (1, 2, 0, 0, 0)

    def test_non_permutation(self, F2):
        with pytest.raises(ValidationError, match="'b'"):
            from_coset_table(F2, {(0, 1): 1, (1, 1): 0, (0, 2): 0, (1, 2): 0}, 0)

    def test_abelian_z(self, zkernel):
        ball = bfs_ball(zkernel, 6)
        assert ball.counts == (1, 2, 2, 2, 2, 2, 2)
        for v in ball.vertices():
            assert zkernel.step(v, 2) == v

    def test_abelian_grid(self, F2):
        g = from_abelianization(F2, [(1, 0), (0, 1)])
        assert list(bfs_ball(g, 6).counts) == [1] + [4 * n for n in range(1, 7)]

    def test_abelian_zero_weights(self, F2):
        g = from_abelianization(F2, [0, 0])
        assert all(g.step(g.root, x) == g.root for x in F2.letters)
        assert g.finite

    def test_abelian_dimension_mismatch(self, F2):
        with pytest.raises(InputError):
            from_abelianization(F2, [(1, 0), (1,)])

    def test_free_product_loops(self, z2z3):
        for v in bfs_ball(z2z3, 5).vertices():
            assert z2z3.walk(v, W("aa")) == v
            assert z2z3.walk(v, W("bbb")) == v
            assert z2z3.walk(v, W("a")) != v

    def test_infinite_dihedral(self, F2):
        g = from_free_product(F2, [2, 2])
        assert bfs_ball(g, 6).counts == (1, 2, 2, 2, 2, 2, 2)

    def test_cycle(self):
        g = from_free_product(Alphabet(1), [5])
        assert g.finite and len(g.vertices()) == 5
        assert g.walk(g.root, [1] * 5) == g.root
        assert bfs_ball(g, 3).counts == (1, 2, 2, 0)

    def test_bad_order(self, F2):
        with pytest.raises(InputError):
            from_free_product(F2, [1, 3])

    @pytest.mark.parametrize("name", ["tree", "zkernel", "z2z3", "zmod2", "zmod3"])
    def test_inverse_pairs(self, name, request):
        g = request.getfixturevalue(name)
        rng = random.Random(7)
        verts = bfs_ball(g, 5).vertices()
        for v in rng.sample(verts, min(50, len(verts))):
            for x in g.alphabet.letters:
                assert g.step(g.step(v, x), -x) == v


class TestGraphFile:
    def write(self, tmp_path, data):
        p = tmp_path / "g.json"
        p.write_text(json.dumps(data))
        return p

    def test_two_vertex_file_matches_table(self, tmp_path, zmod2):
        data = {"rank": 2, "vertices": [0, 1], "root": 0,
                "edges": [{"from": 0, "label": "a", "to": 1}, {"from": 1, "label": "a", "to": 0},
                          {"from": 0, "label": "b", "to": 1}, {"from": 1, "label": "b", "to": 0}]}
        g = from_edge_list_file(self.write(tmp_path, data))
        assert g.backend == "explicit-file"
        assert bfs_ball(g, 5) == bfs_ball(zmod2, 5)

    def test_round_trip(self, tmp_path, zmod3):
        g = from_edge_list_file(self.write(tmp_path, graph_to_json(zmod3)))
        assert bfs_ball(g, 4) == bfs_ball(zmod3, 4)

    def test_missing_inverse_edge(self, tmp_path):
        data = {"rank": 1, "vertices": [0, 1], "root": 0,
                "edges": [{"from": 0, "label": "a", "to": 1}, {"from": 1, "label": "a", "to": 0},
                          {"from": 0, "label": "A", "to": 1}]}
        with pytest.raises(ValidationError, match="inverse-pair"):
            from_edge_list_file(self.write(tmp_path, data))

    def test_inconsistent_inverse(self, tmp_path):
        data = {"rank": 1, "vertices": [0, 1], "root": 0,
                "edges": [{"from": 0, "label": "a", "to": 1}, {"from": 1, "label": "a", "to": 0},
                          {"from": 0, "label": "A", "to": 0}, {"from": 1, "label": "A", "to": 1}]}
        with pytest.raises(ValidationError):
            from_edge_list_file(self.write(tmp_path, data))

    def test_missing_edge(self, tmp_path):
        data = {"rank": 2, "vertices": [0, 1], "root": 0,
                "edges": [{"from": 0, "label": "a", "to": 1}, {"from": 1, "label": "a", "to": 0}]}
        with pytest.raises(CompletionError) as exc:
            from_edge_list_file(self.write(tmp_path, data))
        assert len(exc.value.missing) == 4

    def test_duplicate_edge(self, tmp_path):
        data = {"rank": 1, "vertices": [0], "root": 0,
                "edges": [{"from": 0, "label": "a", "to": 0}, {"from": 0, "label": "a", "to": 0}]}
        with pytest.raises(ValidationError, match="duplicate"):
            from_edge_list_file(self.write(tmp_path, data))

    def test_single_vertex_all_loops(self, tmp_path):
        data = {"rank": 2, "vertices": ["H"], "root": "H",
                "edges": [{"from": "H", "label": "a", "to": "H"}, {"from": "H", "label": "b", "to": "H"}]}
        g = from_edge_list_file(self.write(tmp_path, data))
        assert bfs_ball(g, 3).counts == (1, 0, 0, 0)

    def test_bad_json(self, tmp_path):
        p = tmp_path / "g.json"
        p.write_text("{")
        with pytest.raises(InputError, match="line 1"):
            from_edge_list_file(p)


class TestBfsBall:
    def test_tree(self, tree):
        assert bfs_ball(tree, 3).counts == (1, 4, 12, 36)

    def test_zkernel(self, zkernel):
        assert bfs_ball(zkernel, 5).counts == (1, 2, 2, 2, 2, 2)

    def test_radius_zero(self, z2z3):
        assert bfs_ball(z2z3, 0).counts == (1,)

    @pytest.mark.parametrize("name", ["tree", "zkernel", "z2z3", "zmod3"])
    def test_against_word_oracle(self, name, request):
        g = request.getfixturevalue(name)
        ball = bfs_ball(g, 6)
        oracle = word_distance_oracle(g, 6)
        assert dict(ball.dist) == oracle
        assert list(ball.counts) == counts_from(oracle, 6)

    def test_invariants(self, z2z3):
        ball = bfs_ball(z2z3, 7)
        assert ball.spheres[0] == (z2z3.root,)
        for k in range(1, 8):
            for v in ball.spheres[k]:
                assert any(ball.dist.get(w) == k - 1 for w in z2z3.neighbors(v))
        assert sum(ball.counts) == len(ball.dist)

    def test_budget(self, tree):
        with pytest.raises(ResourceError, match="sphere"):
            bfs_ball(tree, 10, budget=1000)

    def test_deterministic(self, z2z3):
        assert bfs_ball(z2z3, 6) == bfs_ball(z2z3, 6)


def shell_oracle(g, ball, a, k):
    # BFS from a for d(a, b), then filter by the geodesic-through-a condition
    da = {a: 0}
    frontier = [a]
    for step in range(1, k + 1):
        nxt = []
        for v in frontier:
            for w in g.neighbors(v):
                if w not in da:
                    da[w] = step
                    nxt.append(w)
        frontier = nxt
    return {b for b, d in da.items() if d == k and ball.dist.get(b) == ball.dist[a] + k}


class TestShell:
    def test_tree(self, tree):
        ball = bfs_ball(tree, 3)
        a = (1,)
        assert len(shell(tree, ball, a, 1)) == 3
        assert shell(tree, ball, a, 1) == shell_oracle(tree, ball, a, 1)

    def test_zero(self, z2z3):
        ball = bfs_ball(z2z3, 3)
        for a in ball.vertices():
            assert shell(z2z3, ball, a, 0) == {a}

    def test_zkernel(self, zkernel):
        ball = bfs_ball(zkernel, 4)
        assert shell(zkernel, ball, (1,), 1) == {(2,)}

    def test_radius_too_small(self, zkernel):
        ball = bfs_ball(zkernel, 3)
        with pytest.raises(InputError, match="radius >= 5"):
            shell(zkernel, ball, (2,), 3)

    @pytest.mark.parametrize("name", ["tree", "zkernel", "z2z3"])
    def test_against_oracle_and_recursion(self, name, request):
        g = request.getfixturevalue(name)
        ball = bfs_ball(g, 7)
        for a in ball.vertices(3):
            prev = 1
            for k in range(0, 8 - ball.dist[a]):
                sh = shell(g, ball, a, k)
                assert sh == shell_oracle(g, ball, a, k)
                if a != g.root and k >= 1:
                    assert len(sh) <= 3 * prev
                prev = len(sh)

    @pytest.mark.parametrize("name", ["zkernel", "z2z3"])
    def test_shell_lemma_m1(self, name, request):
        g = request.getfixturevalue(name)
        ball = bfs_ball(g, 10)
        for a in ball.vertices(8):
            assert tree_ball_radius(g, ball, a).value < 1
            if a != g.root:
                assert len(shell(g, ball, a, 2)) <= 3 ** 2 - 1


class TestConfinement:
    def test_holds(self, zkernel):
        rep = confinement_check(zkernel, [W("b")], 6)
        assert rep.holds and rep.failing_vertex is None
        assert len(rep.witness) == 13

    def test_fails_at_root(self, zkernel):
        rep = confinement_check(zkernel, [W("a")], 6)
        assert not rep.holds
        assert rep.failing_vertex == zkernel.root

    def test_free_product(self, z2z3):
        assert confinement_check(z2z3, [W("aa"), W("bbb")], 6).holds

    def test_bad_P(self, zkernel):
        with pytest.raises(InputError):
            confinement_check(zkernel, [], 3)
        with pytest.raises(InputError):
            confinement_check(zkernel, [W("")], 3)

    @pytest.mark.parametrize("name,P", [("zkernel", ["b"]), ("z2z3", ["aa", "bbb"]), ("zmod3", ["aaa"])])
    def test_confinement_bounds_tree_radius(self, name, P, request):
        g = request.getfixturevalue(name)
        words = [W(p) for p in P]
        ball = bfs_ball(g, 8)
        assert confinement_check(g, words, 4, ball).holds
        cap = math.ceil(max(len(p) for p in words) / 2)
        for v in ball.vertices(4):
            tb = tree_ball_radius(g, ball, v)
            assert tb.certified and tb.value <= cap


def tree_radius_oracle(g, v, horizon):
    # largest m for which reduced words of length <= m from v hit distinct vertices
    best = 0
    for m in range(1, horizon + 1):
        words = enumerate_ball(g.alphabet, m)
        ends = [g.walk(v, w) for w in words]
        if len(set(ends)) != len(ends):
            return best, True
        best = m
    return best, False


class TestTreeBallRadius:
    def test_zkernel_loop(self, zkernel):
        ball = bfs_ball(zkernel, 4)
        assert tree_ball_radius(zkernel, ball, (2,)).value == 0

    def test_tree_uncertified(self, tree):
        ball = bfs_ball(tree, 4)
        tb = tree_ball_radius(tree, ball, (1,))
        assert tb.value == 3 and not tb.certified

    def test_double_edge(self, zmod2):
        ball = bfs_ball(zmod2, 3)
        tb = tree_ball_radius(zmod2, ball, 0)
        assert tb.value == 0 and tb.certified

    @pytest.mark.parametrize("backend", [
        lambda A: cyclic_quotient(A, 7, [1, 3]),
        lambda A: from_free_product(A, [3, 4]),
        lambda A: from_free_product(A, [None, 5]),
        lambda A: from_abelianization(A, [(1, 0), (0, 1)]),
    ])
    def test_against_oracle(self, backend, F2):
        g = backend(F2)
        ball = bfs_ball(g, 5)
        for v in ball.vertices(1):
            tb = tree_ball_radius(g, ball, v)
            assert (tb.value, tb.certified) == tree_radius_oracle(g, v, 5 - ball.dist[v])


class TestLoopCounts:
    def test_tree(self, tree):
        assert loop_counts(tree, 8) == [1] + [0] * 8

    def test_rank_one_even(self):
        g = cyclic_quotient(Alphabet(1), 2)
        c = loop_counts(g, 9)
        assert c == [1] + [2 if k % 2 == 0 else 0 for k in range(1, 10)]

    @pytest.mark.parametrize("name", ["zmod2", "zkernel", "z2z3", "zmod3", "tree"])
    def test_against_word_enumeration(self, name, request):
        g = request.getfixturevalue(name)
        c = loop_counts(g, 10)
        oracle = [0] * 11
        for w in enumerate_ball(g.alphabet, 10):
            if g.vertex_of(w) == g.root:
                oracle[len(w)] += 1
        assert c == oracle

    def test_zmod2_values(self, zmod2):
        c = loop_counts(zmod2, 4)
        assert c[1] == 0 and c[2] == 12

    def test_budget(self, tree):
        with pytest.raises(ResourceError):
            loop_counts(tree, 20, budget=1000)


class TestHashimoto:
    def test_zmod2(self, zmod2):
        assert hashimoto_growth(zmod2) == pytest.approx(math.log(3), abs=1e-6)

    def test_zmod3(self, zmod3):
        assert hashimoto_growth(zmod3) == pytest.approx(math.log(3), abs=1e-6)

    def test_cycle(self):
        g = from_free_product(Alphabet(1), [6])
        assert hashimoto_growth(g) == pytest.approx(0.0, abs=1e-9)

    def test_dense_eigen_oracle(self, F2):
        g = cyclic_quotient(F2, 5, [1, 2])
        B = nonbacktracking_operator(g).toarray()
        lam = max(abs(np.linalg.eigvals(B)))
        lo, hi = hashimoto_spectral_radius(g)
        assert lo <= lam + 1e-9 and lam - 1e-9 <= hi
        assert lam == pytest.approx(3.0)

    def test_infinite_backend(self, zkernel):
        with pytest.raises(UnsupportedBackendError):
            hashimoto_growth(zkernel)
