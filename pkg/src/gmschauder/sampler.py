"""Path synthesis from basis coefficients and top-down bridge refinement.

Both routes consume the same keyed normals: the draw for node ``(n, k)`` of
path ``p`` is ``keyed_normal(seed, p, flat_index(n, k))``. Synthesizing at depth
``N + 1`` and refining a depth-``N`` path therefore give the same values on the
level-``N + 1`` grid, up to floating-point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from gmschauder.basis import basis_for
from gmschauder.keyed import keyed_normal
from gmschauder.process import DegenerateIncrementError, ProcessSpec, bridge_moments
from gmschauder.tree import MAX_DEPTH, SupportTree, flat_index, prefix_order_times

__all__ = [
    "PathSample",
    "SeedKey",
    "conditional_expectation_path",
    "initial_path",
    "refine",
    "refine_cells",
    "sample_by_refinement",
    "sample_coefficients",
    "sample_paths",
    "synthesize_path",
]


@dataclass(frozen=True)
class SeedKey:
    """Key of one coefficient draw."""

    seed: int
    path: int
    n: int
    k: int

    def normal(self) -> float:
        return float(keyed_normal(self.seed, self.path, flat_index(self.n, self.k))[0])


@dataclass(frozen=True, eq=False)
class PathSample:
    """A batch of paths on a common time grid.

    ``values[i]`` is the path with id ``path_ids[i]``. ``level`` is the depth N
    the paths were produced at and ``seed`` the master seed of their keys.
    ``degenerate`` is set when some refinement step met a flat stretch of ``h``
    and propagated the value deterministically.
    """

    times: np.ndarray
    values: np.ndarray
    path_ids: np.ndarray
    level: int
    seed: int
    label: str = ""
    tree: str = "uniform"
    degenerate: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.values.shape != (self.path_ids.size, self.times.size):
            raise ValueError(f"values shape {self.values.shape} does not match paths x times")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def n_paths(self) -> int:
        return self.path_ids.size

    def restrict(self, times) -> "PathSample":
        """Sub-sample on ``times``, which must be a subset of this grid."""
        times = np.asarray(times, dtype=float)
        idx = np.searchsorted(self.times, times)
        if np.any(idx >= self.times.size) or np.any(self.times[np.minimum(idx, self.times.size - 1)] != times):
            raise ValueError("restriction times are not on the grid")
        return replace(self, times=times, values=self.values[:, idx])


def _path_ids(path_ids) -> np.ndarray:
    ids = np.atleast_1d(np.asarray(path_ids))
    if ids.dtype.kind not in "iu":
        raise TypeError("path ids must be integers")
    return ids.astype(np.int64)


def sample_coefficients(seed: int, path_ids, N: int) -> np.ndarray:
    """Coefficient table of shape ``(paths, 2**N)`` in flat node order (column 0 is the root)."""
    if not 0 <= N <= MAX_DEPTH:
        raise ValueError(f"N must be in [0, {MAX_DEPTH}]")
    ids = _path_ids(path_ids)
    return keyed_normal(seed, ids[:, None], np.arange(1 << N, dtype=np.int64)[None, :])


def synthesize_path(
    spec: ProcessSpec,
    tree: SupportTree,
    xi: np.ndarray,
    N: int,
    grid=None,
    *,
    seed: int = 0,
    path_ids=None,
) -> PathSample:
    """Evaluate ``X^N = sum Psi_{n,k} xi_{n,k}`` on ``grid`` (default: the level-N grid)."""
    xi = np.atleast_2d(xi)
    grid = prefix_order_times(tree, N) if grid is None else np.asarray(grid, dtype=float)
    values = basis_for(spec, tree).synthesize(xi, grid, N)
    ids = np.arange(xi.shape[0]) if path_ids is None else _path_ids(path_ids)
    return PathSample(grid, values, ids, N, seed, spec.label, tree.description)


def sample_paths(spec: ProcessSpec, tree: SupportTree, N: int, seed: int, path_ids, grid=None) -> PathSample:
    """Draw keyed coefficients and synthesize ``X^N``."""
    ids = _path_ids(path_ids)
    xi = sample_coefficients(seed, ids, N)
    return synthesize_path(spec, tree, xi, N, grid, seed=seed, path_ids=ids)


def conditional_expectation_path(spec: ProcessSpec, times, values):
    """Return ``Z(t) = E[X_t | X = values on times]`` as a function of ``t``.

    On each cell ``[t_i, t_{i+1}]`` this is the bridge mean between the two
    framing values. ``values`` may be one path or a ``(paths, len(times))`` batch.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing with at least two points")
    h_nodes = spec.h(times)
    g_nodes = spec.g(times)
    if np.any(np.diff(h_nodes) <= 0):
        raise DegenerateIncrementError(f"{spec.label}: h is flat on a conditioning cell")
    single = values.ndim == 1
    batch = np.atleast_2d(values)

    def Z(t):
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        i = np.clip(np.searchsorted(times, flat, side="right") - 1, 0, times.size - 2)
        mean, _ = bridge_moments(
            g_nodes[i], spec.g(flat), g_nodes[i + 1],
            h_nodes[i], spec.h(flat), h_nodes[i + 1],
            batch[:, i], batch[:, i + 1],
        )
        # exact at the conditioning points
        on_left = flat == times[i]
        on_right = flat == times[i + 1]
        mean = np.where(on_left, batch[:, i], np.where(on_right, batch[:, i + 1], mean))
        out = mean.reshape((batch.shape[0],) + t_arr.shape)
        if single:
            out = out[0]
            return float(out) if t_arr.ndim == 0 else out
        return out

    return Z


def refine_cells(spec: ProcessSpec, tree: SupportTree, seed: int, path_ids, n: int, k, x, z):
    """Draw ``X`` at the split point of node ``(n, k)`` given ``x`` at ``l`` and ``z`` at ``r``.

    The value is ``bridge mean + bridge std * xi`` with ``xi`` keyed on
    ``(seed, path id, n, k)``. Arguments broadcast. Returns ``(values, degenerate)``
    where ``degenerate`` marks cells on which ``h`` is flat at the split point; those
    values are propagated deterministically.
    """
    k = np.asarray(k, dtype=np.int64)
    tl, tm, tr = tree.left[n][k], tree.mid[n][k], tree.right[n][k]
    hl, hm, hr = spec.h(tl), spec.h(tm), spec.h(tr)
    gl, gm, gr = spec.g(tl), spec.g(tm), spec.g(tr)
    xi = keyed_normal(seed, path_ids, (1 << (n - 1)) + k)
    flat_span = hr == hl
    with np.errstate(divide="ignore", invalid="ignore"):
        mean, var = bridge_moments(gl, gm, gr, hl, hm, hr, x, z)
    mean = np.where(flat_span, gm / gl * np.asarray(x, dtype=float), mean)
    var = np.where(flat_span, 0.0, np.maximum(var, 0.0))
    degenerate = np.broadcast_to(flat_span | (hm == hl), np.shape(mean))
    return mean + np.sqrt(var) * xi, degenerate


def refine(spec: ProcessSpec, tree: SupportTree, path: PathSample) -> PathSample:
    """Extend paths on the level-N grid to the level-(N+1) grid.

    Existing values are copied unchanged; each new split point is drawn from its
    bridge law using the path's own keyed normals.
    """
    N = path.level
    if N + 1 > tree.depth:
        raise ValueError(f"cannot refine past tree depth {tree.depth}")
    coarse = prefix_order_times(tree, N)
    if path.times.shape != coarse.shape or np.any(path.times != coarse):
        raise ValueError("path is not on the level-N grid of this tree")
    size = 1 << N
    k = np.arange(size)
    ids = path.path_ids[:, None]
    x = path.values[:, :-1]
    z = path.values[:, 1:]
    mids, degenerate = refine_cells(spec, tree, path.seed, ids, N + 1, k[None, :], x, z)
    values = np.empty((path.n_paths, 2 * size + 1))
    values[:, 0::2] = path.values
    values[:, 1::2] = mids
    return replace(
        path,
        times=prefix_order_times(tree, N + 1),
        values=values,
        level=N + 1,
        degenerate=path.degenerate or bool(np.any(degenerate)),
    )


def initial_path(spec: ProcessSpec, tree: SupportTree, seed: int, path_ids) -> PathSample:
    """Paths on ``{0, 1}``: ``X_0 = 0`` and ``X_1 = g(1) sqrt(h(1)) xi_00``."""
    ids = _path_ids(path_ids)
    h1 = float(spec.h(1.0)) - float(spec.h(0.0))
    if h1 <= 0.0:
        raise DegenerateIncrementError(f"{spec.label}: h(1) == h(0)")
    xi = keyed_normal(seed, ids, 0)
    values = np.zeros((ids.size, 2))
    values[:, 1] = float(spec.g(1.0)) * math.sqrt(h1) * xi
    return PathSample(np.array([0.0, 1.0]), values, ids, 0, seed, spec.label, tree.description)


def sample_by_refinement(spec: ProcessSpec, tree: SupportTree, N: int, seed: int, path_ids) -> PathSample:
    """Level-N paths built by ``N`` successive refinements of ``initial_path``."""
    path = initial_path(spec, tree, seed, path_ids)
    for _ in range(N):
        path = refine(spec, tree, path)
    return path
