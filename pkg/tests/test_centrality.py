from fractions import Fraction

import numpy as np
import pytest
import sympy

from marketnet.centrality import (
    MarkovConsistencyError,
    fundamental_matrix,
    markov_centrality,
    mfpt,
    stationary,
    tree_centrality,
    walk_transition,
)

from conftest import tree_from_edges
from oracles import direct_mfpt, random_tree_edges


def pipeline(tree):
    P = walk_transition(tree)
    pi = stationary(P, tree)
    Z = fundamental_matrix(P, pi)
    return P, pi, Z, mfpt(Z, pi)


def test_transition_rows(path3, star4):
    P = walk_transition(path3).entries
    assert list(P[1]) == [0.5, 0.0, 0.5]
    Q = walk_transition(star4).entries
    assert list(Q[0]) == pytest.approx([0, 1 / 3, 1 / 3, 1 / 3])
    for tree in (path3, star4):
        # exact: entries are 1/deg
        rows = [sum(Fraction(v).limit_denominator(100) for v in row) for row in walk_transition(tree).entries]
        assert rows == [1] * len(rows)


def _eigen_stationary(P):
    w, v = np.linalg.eig(P.T)
    x = np.real(v[:, np.argmin(np.abs(w - 1))])
    return x / x.sum()


def test_stationary(path3, star4):
    for tree, expected in [(path3, [0.25, 0.5, 0.25]), (star4, [0.5, 1 / 6, 1 / 6, 1 / 6])]:
        P = walk_transition(tree)
        pi = stationary(P, tree).probabilities
        np.testing.assert_allclose(pi, expected, atol=1e-15)
        np.testing.assert_allclose(pi, _eigen_stationary(P.entries), atol=1e-12)
    pair = tree_from_edges(["u", "v"], [(0, 1)])
    assert list(stationary(walk_transition(pair), pair).probabilities) == [0.5, 0.5]


def test_fundamental_two_state():
    pair = tree_from_edges(["u", "v"], [(0, 1)])
    _, _, Z, M = pipeline(pair)
    # (I - P + Pi)^-1 = [[1.5, -.5], [-.5, 1.5]]^-1
    np.testing.assert_allclose(Z, [[0.75, 0.25], [0.25, 0.75]], atol=1e-15)
    np.testing.assert_allclose(M.entries, [[2, 1], [1, 2]], atol=1e-12)
    c = markov_centrality(M)
    assert c["u"] == c["v"]


def test_fundamental_exact_path3(path3):
    P, pi, Z, _ = pipeline(path3)
    R = sympy.Rational
    Pe = sympy.Matrix([[0, 1, 0], [R(1, 2), 0, R(1, 2)], [0, 1, 0]])
    Pi = sympy.Matrix([[R(1, 4), R(1, 2), R(1, 4)]] * 3)
    Ze = (sympy.eye(3) - Pe + Pi).inv()
    np.testing.assert_allclose(Z, np.array(Ze, dtype=float), atol=1e-14)
    np.testing.assert_allclose(Z.sum(axis=1), 1.0, atol=1e-10)


def test_mfpt_path3(path3):
    _, _, _, M = pipeline(path3)
    m = M.entries
    assert m[0, 1] == pytest.approx(1) and m[1, 0] == pytest.approx(3)
    assert m[0, 2] == pytest.approx(4) and m[1, 2] == pytest.approx(3)
    np.testing.assert_allclose(np.diag(m), [4, 2, 4], atol=1e-12)
    np.testing.assert_allclose(m.sum(axis=0), [11, 4, 11], atol=1e-12)
    c = markov_centrality(M)
    assert c["a"] == pytest.approx(3 / 11) and c["b"] == pytest.approx(3 / 4) and c["c"] == pytest.approx(3 / 11)


def test_mfpt_star(star4):
    _, _, _, M = pipeline(star4)
    m = M.entries
    # leaf -> centre 1; centre -> leaf 5 (h = 1 + 2/3 (1 + h)); leaf -> leaf 6
    assert m[1, 0] == pytest.approx(1) and m[0, 1] == pytest.approx(5) and m[1, 2] == pytest.approx(6)
    c = tree_centrality(star4)
    assert all(c["c"] > c[leaf] for leaf in "xyz")


@pytest.mark.parametrize("seed", range(25))
def test_matrix_formula_matches_direct_solve(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    tree = tree_from_edges([f"n{i}" for i in range(n)], random_tree_edges(n, rng))
    P, pi, _, M = pipeline(tree)
    np.testing.assert_allclose(M.entries, direct_mfpt(P.entries), atol=1e-8)
    np.testing.assert_allclose(np.diag(M.entries), 1 / pi.probabilities, atol=1e-8)
    off = M.entries[~np.eye(n, dtype=bool)]
    assert np.all(off >= 1 - 1e-9)
    assert abs(pi.probabilities.sum() - 1) <= 1e-12
    assert np.max(np.abs(pi.probabilities @ P.entries - pi.probabilities)) <= 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_relabeling_permutes_scores(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(3, 20))
    names = [f"n{i}" for i in range(n)]
    edges = random_tree_edges(n, rng)
    base = tree_centrality(tree_from_edges(names, edges))
    perm = rng.permutation(n)
    shuffled = [names[p] for p in perm]
    # same graph, nodes listed in another order
    inv = {p: i for i, p in enumerate(perm)}
    moved = tree_centrality(tree_from_edges(shuffled, [(inv[a], inv[b]) for a, b in edges]))
    for t in names:
        assert moved[t] == pytest.approx(base[t], rel=1e-10)


@pytest.mark.parametrize("n", range(3, 10))
def test_centre_is_most_central_on_paths_and_stars(n):
    names = [f"v{i}" for i in range(n)]
    star = tree_centrality(tree_from_edges(names, [(0, i) for i in range(1, n)]))
    assert max(star, key=star.get) == "v0"
    path = tree_centrality(tree_from_edges(names, [(i, i + 1) for i in range(n - 1)]))
    best = max(path.values())
    centres = {f"v{(n - 1) // 2}", f"v{n // 2}"}
    assert {t for t, v in path.items() if v == pytest.approx(best, rel=1e-12)} == centres


def test_stationary_rejects_mismatched_walk(star4):
    path4 = tree_from_edges(["c", "x", "y", "z"], [(0, 1), (1, 2), (2, 3)])
    with pytest.raises(MarkovConsistencyError):
        stationary(walk_transition(star4), path4)
