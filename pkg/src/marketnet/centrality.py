"""Markov centrality of tree nodes under a uniform random walk.

Pipeline: transition matrix -> stationary distribution -> fundamental matrix
``Z = (I - P + Pi)^-1`` -> mean first-passage times
``M = (I - Z + E Z_dg) D`` -> ``score(v) = n / sum_s M[s, v]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .depnet import SpanningTree

STATIONARY_TOL = 1e-10
FUNDAMENTAL_TOL = 1e-9


class MarkovConsistencyError(ArithmeticError):
    """A numerical self-check on the walk failed."""


@dataclass(frozen=True)
class TransitionMatrix:
    nodes: tuple[str, ...]
    entries: np.ndarray


@dataclass(frozen=True)
class StationaryDistribution:
    nodes: tuple[str, ...]
    probabilities: np.ndarray


@dataclass(frozen=True)
class MfptMatrix:
    nodes: tuple[str, ...]
    entries: np.ndarray


def adjacency(tree: SpanningTree) -> np.ndarray:
    index = {t: i for i, t in enumerate(tree.nodes)}
    n = len(tree.nodes)
    a = np.zeros((n, n))
    for e in tree.edges:
        i, j = index[e.u], index[e.v]
        a[i, j] = a[j, i] = 1.0
    return a


def walk_transition(tree: SpanningTree) -> TransitionMatrix:
    a = adjacency(tree)
    deg = a.sum(axis=1)
    if np.any(deg == 0):
        raise ValueError("tree has an isolated node")
    return TransitionMatrix(tree.nodes, a / deg[:, None])


def stationary(P: TransitionMatrix, tree: SpanningTree) -> StationaryDistribution:
    """Degree-proportional distribution, checked against ``pi P = pi``."""
    deg = adjacency(tree).sum(axis=1)
    pi = deg / deg.sum()
    residual = np.max(np.abs(pi @ P.entries - pi))
    if residual > STATIONARY_TOL:
        raise MarkovConsistencyError(f"stationary residual {residual:.3g} exceeds {STATIONARY_TOL}")
    return StationaryDistribution(tree.nodes, pi)


def fundamental_matrix(P: TransitionMatrix, pi: StationaryDistribution) -> np.ndarray:
    n = len(P.nodes)
    A = np.eye(n) - P.entries + np.outer(np.ones(n), pi.probabilities)
    try:
        lu = scipy.linalg.lu_factor(A, check_finite=True)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise MarkovConsistencyError(f"fundamental system not solvable: {exc}") from exc
    Z = scipy.linalg.lu_solve(lu, np.eye(n))
    residual = np.max(np.abs(A @ Z - np.eye(n)))
    if not residual <= FUNDAMENTAL_TOL:
        raise MarkovConsistencyError(f"fundamental matrix residual {residual:.3g}")
    return Z


def mfpt(Z: np.ndarray, pi: StationaryDistribution) -> MfptMatrix:
    """Mean first-passage times; the diagonal holds mean recurrence times."""
    n = Z.shape[0]
    E = np.ones((n, n))
    Zdg = np.diag(np.diag(Z))
    D = np.diag(1.0 / pi.probabilities)
    M = (np.eye(n) - Z + E @ Zdg) @ D
    return MfptMatrix(pi.nodes, M)


def markov_centrality(M: MfptMatrix) -> dict[str, float]:
    """``n`` over the column sums of M, recurrence terms included."""
    n = len(M.nodes)
    col = M.entries.sum(axis=0)
    return {t: float(n / c) for t, c in zip(M.nodes, col)}


def tree_centrality(tree: SpanningTree) -> dict[str, float]:
    P = walk_transition(tree)
    pi = stationary(P, tree)
    return markov_centrality(mfpt(fundamental_matrix(P, pi), pi))
