"""Nested binary trees of supports ``S_{n,k} = [l, r]`` with split points ``m``.

Level ``n >= 1`` holds ``2**(n-1)`` nodes; node ``(n, k)`` splits into
``(n+1, 2k)`` on ``[l, m]`` and ``(n+1, 2k+1)`` on ``[m, r]``. Level 0 is the
single root element on ``[0, 1]``, which has no split point of its own.

Nodes are numbered in prefix order: ``flat_index(n, k) = 2**(n-1) + k`` and
``flat_index(0, 0) = 0``. The sorted split points of levels ``<= N`` together
with 0 and 1 form the level-N grid ``t_0 < ... < t_{2**N}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MAX_DEPTH = 30


class TreeError(ValueError):
    pass


def flat_index(n: int, k: int) -> int:
    if n == 0:
        return 0
    return (1 << (n - 1)) + k


def node_of_flat(i: int) -> tuple[int, int]:
    """Inverse of ``flat_index`` for ``i >= 0``."""
    if i == 0:
        return 0, 0
    n = int(i).bit_length()
    return n, i - (1 << (n - 1))


@dataclass(frozen=True, eq=False)
class SupportTree:
    """Explicit endpoints per level: ``left[n][k]``, ``mid[n][k]``, ``right[n][k]``.

    Index 0 of each list is a placeholder for the root element and holds
    ``[0.0], [nan], [1.0]``.
    """

    depth: int
    left: tuple = field(repr=False)
    mid: tuple = field(repr=False)
    right: tuple = field(repr=False)
    description: str = "uniform"

    def _check_level(self, n: int) -> None:
        if not 0 <= n <= self.depth:
            raise TreeError(f"level {n} outside tree of depth {self.depth}")

    def node(self, n: int, k: int) -> tuple[float, float, float]:
        """``(l, m, r)`` of node ``(n, k)``; for ``n = 0`` ``m`` is nan."""
        self._check_level(n)
        if not 0 <= k < len(self.left[n]):
            raise TreeError(f"position {k} outside level {n}")
        return float(self.left[n][k]), float(self.mid[n][k]), float(self.right[n][k])

    def level_size(self, n: int) -> int:
        return 1 if n == 0 else 1 << (n - 1)

    def mesh(self, n: int) -> float:
        """Largest support width ``max_k (r - l)`` at level ``n``."""
        self._check_level(n)
        return float(np.max(self.right[n] - self.left[n]))

    def locate(self, n: int, t) -> np.ndarray:
        """Position ``k`` of the level-n support ``[l, r)`` containing ``t``.

        ``t = 1`` belongs to the last support.
        """
        left = self.left[n]
        k = np.searchsorted(left, np.asarray(t, dtype=float), side="right") - 1
        return np.clip(k, 0, left.size - 1)

    def times(self, N: int) -> np.ndarray:
        return prefix_order_times(self, N)

    def iter_nodes(self, N: int | None = None):
        """Yield ``(n, k, l, m, r)`` for levels ``1..N`` in prefix order."""
        N = self.depth if N is None else N
        for n in range(1, N + 1):
            for k in range(self.level_size(n)):
                yield n, k, float(self.left[n][k]), float(self.mid[n][k]), float(self.right[n][k])

    def endpoints(self) -> np.ndarray:
        """All distinct support endpoints and split points, sorted."""
        return prefix_order_times(self, self.depth)


def _build(depth: int, split: Callable[[np.ndarray, np.ndarray], np.ndarray], description: str) -> SupportTree:
    if not 0 <= depth <= MAX_DEPTH:
        raise TreeError(f"depth must be in [0, {MAX_DEPTH}], got {depth}")
    left, mid, right = [np.array([0.0])], [np.array([np.nan])], [np.array([1.0])]
    lo, hi = np.array([0.0]), np.array([1.0])
    for n in range(1, depth + 1):
        m = np.asarray(split(lo, hi), dtype=float)
        if np.any(~(m > lo)) or np.any(~(m < hi)):
            bad = int(np.flatnonzero(~((m > lo) & (m < hi)))[0])
            raise TreeError(f"split point {m[bad]!r} not strictly inside ({lo[bad]!r}, {hi[bad]!r}) at level {n}")
        left.append(lo)
        mid.append(m)
        right.append(hi)
        lo = np.ravel(np.column_stack([lo, m]))
        hi = np.ravel(np.column_stack([m, hi]))
    for arr in left + mid + right:
        arr.setflags(write=False)
    return SupportTree(depth, tuple(left), tuple(mid), tuple(right), description)


def uniform_tree(depth: int) -> SupportTree:
    """Dyadic tree: ``l = 2k 2^-n``, ``m = (2k+1) 2^-n``, ``r = 2(k+1) 2^-n``."""

    # halving a dyadic interval is exact in binary floating point
    return _build(depth, lambda lo, hi: 0.5 * (lo + hi), "uniform")


def general_tree(depth: int, midpoint_rule: Callable[[float, float], float], description: str = "general") -> SupportTree:
    """Tree whose split points come from ``midpoint_rule(l, r)``.

    The rule is applied node by node and must return a point strictly inside
    ``(l, r)``.
    """

    def split(lo, hi):
        return np.array([midpoint_rule(float(a), float(b)) for a, b in zip(lo, hi)])

    return _build(depth, split, description)


def prefix_order_times(tree: SupportTree, N: int) -> np.ndarray:
    """Sorted level-N grid: 0, 1 and every split point of levels ``1..N`` (``2**N + 1`` values)."""
    if not 0 <= N <= tree.depth:
        raise TreeError(f"N={N} exceeds tree depth {tree.depth}")
    out = np.empty((1 << N) + 1)
    out[0], out[-1] = 0.0, 1.0
    # level n split points land at odd multiples of 2^(N-n) in the level-N grid
    for n in range(1, N + 1):
        step = 1 << (N - n)
        out[step :: 2 * step][: 1 << (n - 1)] = tree.mid[n]
    return out


def grid_labels(N: int) -> np.ndarray:
    """Prefix-order label of each point of the sorted level-N grid.

    ``t = 0`` is labelled 0 and ``t = 1`` is labelled ``2**N``; the split point
    of node ``(n, k)`` is labelled ``flat_index(n, k)``.
    """
    labels = np.empty((1 << N) + 1, dtype=np.int64)
    labels[0], labels[-1] = 0, 1 << N
    for n in range(1, N + 1):
        step = 1 << (N - n)
        labels[step :: 2 * step][: 1 << (n - 1)] = (1 << (n - 1)) + np.arange(1 << (n - 1))
    return labels


def tree_rows(tree: SupportTree, N: int | None = None) -> list[tuple[int, int, float, float, float]]:
    """Rows ``(n, k, l, m, r)`` for the delimited tree dump."""
    return list(tree.iter_nodes(N))


def make_tree(depth: int, split: float = 0.5) -> SupportTree:
    """Uniform tree for ``split = 0.5``, otherwise every node splits at ``l + split (r - l)``."""
    if split == 0.5:
        return uniform_tree(depth)
    if not 0.0 < split < 1.0:
        raise TreeError(f"split fraction must be in (0, 1), got {split}")
    return general_tree(depth, lambda l, r: l + split * (r - l), f"split:{split!r}")
