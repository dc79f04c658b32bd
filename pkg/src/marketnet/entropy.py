"""Lempel-Ziv match-length entropy-rate estimation for symbol sequences.

The estimator uses the increasing-window convention: for every position ``i``
the match length ``Lambda_i`` is one more than the longest prefix of
``x[i:]`` that appears as a contiguous block entirely inside ``x[:i]``.

    H = n * log2(n) / sum(Lambda_i)

Match lengths are computed in amortised linear time with a suffix automaton of
the whole sequence in which every state remembers where its strings first end.
A string occurs inside ``x[:i]`` exactly when its first occurrence ends before
position ``i``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .returns import DiscreteSeries

log = logging.getLogger(__name__)

# sanity bound slack, only applied to long series
_SANITY_SLACK = 0.1
_SANITY_MIN_N = 1000


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    n: int


def _as_symbols(symbols) -> list[int]:
    if isinstance(symbols, DiscreteSeries):
        symbols = symbols.symbols
    return [int(s) for s in np.asarray(symbols).ravel()]


class _SuffixAutomaton:
    """Suffix automaton with first-occurrence end positions.

    States are stored column-wise in plain lists; ``first_end[v]`` is the index
    of the last character of the earliest occurrence of the strings of ``v``.
    """

    def __init__(self, text: Sequence[int]):
        self.length = [0]
        self.link = [-1]
        self.next: list[dict[int, int]] = [{}]
        self.first_end = [-1]
        last = 0
        for pos, c in enumerate(text):
            last = self._extend(last, c, pos)

    def _extend(self, last: int, c: int, pos: int) -> int:
        length, link, nxt, first_end = self.length, self.link, self.next, self.first_end
        cur = len(length)
        length.append(length[last] + 1)
        link.append(-1)
        nxt.append({})
        first_end.append(pos)

        p = last
        while p != -1 and c not in nxt[p]:
            nxt[p][c] = cur
            p = link[p]
        if p == -1:
            link[cur] = 0
            return cur

        q = nxt[p][c]
        if length[p] + 1 == length[q]:
            link[cur] = q
            return cur

        clone = len(length)
        length.append(length[p] + 1)
        link.append(link[q])
        nxt.append(dict(nxt[q]))
        first_end.append(first_end[q])
        while p != -1 and nxt[p].get(c) == q:
            nxt[p][c] = clone
            p = link[p]
        link[q] = clone
        link[cur] = clone
        return cur


def lambda_lengths(symbols) -> np.ndarray:
    """Match lengths ``Lambda_i`` for every position of ``symbols``.

    ``Lambda_i`` is the length of the shortest block starting at ``i`` that
    does not occur inside ``symbols[:i]``; when the whole remaining suffix does
    occur it is the suffix length plus one. The first entry is always 1.

    Parameters
    ----------
    symbols : DiscreteSeries or sequence of int
        Non-empty symbol sequence.

    Returns
    -------
    ndarray of int64, shape (n,)
    """
    x = _as_symbols(symbols)
    n = len(x)
    if n == 0:
        raise ValueError("lambda_lengths needs a non-empty sequence")

    sam = _SuffixAutomaton(x)
    length, link, nxt, first_end = sam.length, sam.link, sam.next, sam.first_end

    out = np.empty(n, dtype=np.int64)
    state, matched = 0, 0  # x[i:i+matched] is represented by `state`
    for i in range(n):
        if i > 0 and matched > 0:
            # drop x[i-1]; the shorter block already occurs in x[:i-1]
            matched -= 1
            if matched <= length[link[state]]:
                state = link[state]
        while i + matched < n:
            t = nxt[state].get(x[i + matched])
            if t is None or first_end[t] > i - 1:
                break
            state = t
            matched += 1
        out[i] = matched + 1
    return out


def entropy_rate_lz(symbols, alphabet_size: int | None = None) -> EntropyEstimate:
    """Entropy rate in bits per symbol from Lempel-Ziv match lengths.

    ``alphabet_size`` only feeds the sanity check on long series; it defaults
    to the number of distinct symbols observed.
    """
    x = _as_symbols(symbols)
    n = len(x)
    if n < 2:
        raise ValueError(f"entropy_rate_lz needs at least 2 symbols, got {n}")
    total = int(lambda_lengths(x).sum())
    value = n * math.log2(n) / total

    if n >= _SANITY_MIN_N:
        k = alphabet_size if alphabet_size is not None else len(set(x))
        bound = math.log2(max(k, 1)) + _SANITY_SLACK
        if not 0.0 <= value <= bound:
            log.warning("entropy estimate %.4f outside [0, %.4f] for n=%d", value, bound, n)
    return EntropyEstimate(value=value, n=n)
