"""Schauder-type basis ``Psi_{n,k}`` and its companion orthonormal system ``Phi_{n,k}``.

On the support ``[l, m, r]`` of node ``(n, k)``::

    Psi(t) = L g(t) (h(t) - h(l))   on [l, m]
             R g(t) (h(r) - h(t))   on [m, r]
    Phi(t) = L f(t) on [l, m),  -R f(t) on [m, r)

with ``L = sqrt(dr / (D dl))``, ``R = sqrt(dl / (D dr))``, ``dl = h(m) - h(l)``,
``dr = h(r) - h(m)``, ``D = dl + dr``. The root element is
``Psi_00(t) = g(t) h(t) / sqrt(h(1))`` and ``Phi_00 = f / sqrt(h(1))``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from gmschauder.process import DegenerateIncrementError, ProcessSpec
from gmschauder.tree import SupportTree, flat_index

__all__ = [
    "Basis",
    "BasisElement",
    "basis_for",
    "coefficients",
    "element",
    "partial_covariance",
    "phi",
    "phi00",
    "psi",
    "psi00",
    "sup_bounds",
]


@dataclass(frozen=True)
class BasisElement:
    n: int
    k: int
    l: float
    m: float
    r: float
    L: float
    R: float

    @property
    def index(self) -> tuple[int, int]:
        return self.n, self.k

    @property
    def flat(self) -> int:
        return flat_index(self.n, self.k)


def _lr(hl, hm, hr):
    dl = hm - hl
    dr = hr - hm
    total = hr - hl
    return np.sqrt(dr / (total * dl)), np.sqrt(dl / (total * dr))


def coefficients(spec: ProcessSpec, tree: SupportTree, n: int, k: int) -> tuple[float, float]:
    """Normalization pair ``(L, R)`` of node ``(n, k)``, ``n >= 1``."""
    if n < 1:
        raise ValueError("coefficients are defined for n >= 1")
    l, m, r = tree.node(n, k)
    hl, hm, hr = (float(v) for v in spec.h(np.array([l, m, r])))
    if not (hl < hm < hr):
        raise DegenerateIncrementError(f"h is flat on part of the support of ({n}, {k})")
    L, R = _lr(hl, hm, hr)
    return float(L), float(R)


def element(spec: ProcessSpec, tree: SupportTree, n: int, k: int) -> BasisElement:
    l, m, r = tree.node(n, k)
    L, R = coefficients(spec, tree, n, k)
    return BasisElement(n, k, l, m, r, L, R)


def _out(t, values):
    return float(values) if np.ndim(t) == 0 else values


def psi(spec: ProcessSpec, elem: BasisElement, t):
    """Evaluate ``Psi_{n,k}`` at ``t``; at the split point the left formula is used."""
    t = np.asarray(t, dtype=float)
    ht = spec.h(t)
    gt = spec.g(t)
    hl, hr = spec.h(elem.l), spec.h(elem.r)
    val = np.where(t <= elem.m, elem.L * gt * (ht - hl), elem.R * gt * (hr - ht))
    val = np.where((t >= elem.l) & (t <= elem.r), val, 0.0)
    return _out(t, val)


def psi00(spec: ProcessSpec, t):
    t = np.asarray(t, dtype=float)
    h0, h1 = spec.h(0.0), spec.h(1.0)
    return _out(t, spec.g(t) * (spec.h(t) - h0) / math.sqrt(h1 - h0))


def phi(spec: ProcessSpec, elem: BasisElement, t, side: str = "right"):
    """Evaluate ``Phi_{n,k}`` at ``t``.

    With ``side="right"`` the branches are ``[l, m)`` and ``[m, r)``; with
    ``side="left"`` they are ``(l, m]`` and ``(m, r]`` (left limits), which is what
    a quadrature rule needs at the right end of a panel.
    """
    t = np.asarray(t, dtype=float)
    ft = spec.f(t)
    if side == "right":
        lbranch = (t >= elem.l) & (t < elem.m)
        rbranch = (t >= elem.m) & (t < elem.r)
    else:
        lbranch = (t > elem.l) & (t <= elem.m)
        rbranch = (t > elem.m) & (t <= elem.r)
    val = np.where(lbranch, elem.L * ft, 0.0) - np.where(rbranch, elem.R * ft, 0.0)
    return _out(t, val)


def phi00(spec: ProcessSpec, t, side: str = "right"):
    t = np.asarray(t, dtype=float)
    h0, h1 = spec.h(0.0), spec.h(1.0)
    return _out(t, spec.f(t) / math.sqrt(h1 - h0))


def sup_bounds(elem: BasisElement, f_sup: float, g_sup: float) -> tuple[float, float]:
    """Upper bounds on ``max |Psi_{n,k}|``: the support-shape bound and ``2^{-(n+1)/2}`` form.

    The second one only holds for dyadic supports.
    """
    shape = math.sqrt((elem.r - elem.m) * (elem.m - elem.l) / (elem.r - elem.l))
    return shape * f_sup * g_sup, 2.0 ** (-(elem.n + 1) / 2) * f_sup * g_sup


class Basis:
    """All elements of levels ``0..tree.depth`` for one process, with ``h`` cached at the tree nodes.

    Evaluation at a time ``t`` walks the chain of supports containing ``t``
    (one per level), so a point costs ``O(depth)`` instead of ``O(2**depth)``.
    """

    def __init__(self, spec: ProcessSpec, tree: SupportTree):
        self.spec = spec
        self.tree = tree
        nodes = tree.endpoints()
        spec.prepare(nodes)
        spec.check_g(nodes)
        self.h0 = float(spec.h(0.0))
        self.h1 = float(spec.h(1.0))
        if not self.h1 > self.h0:
            raise DegenerateIncrementError(f"{spec.label}: h(1) == h(0)")
        self.hl, self.hm, self.hr, self.L, self.R = [None], [None], [None], [None], [None]
        for n in range(1, tree.depth + 1):
            hl = spec.h(tree.left[n])
            hm = spec.h(tree.mid[n])
            hr = spec.h(tree.right[n])
            if np.any(~(hl < hm)) or np.any(~(hm < hr)):
                k = int(np.flatnonzero(~((hl < hm) & (hm < hr)))[0])
                raise DegenerateIncrementError(f"{spec.label}: h is flat on part of the support of ({n}, {k})")
            L, R = _lr(hl, hm, hr)
            for lst, arr in zip((self.hl, self.hm, self.hr, self.L, self.R), (hl, hm, hr, L, R)):
                lst.append(arr)

    @property
    def depth(self) -> int:
        return self.tree.depth

    def element(self, n: int, k: int) -> BasisElement:
        l, m, r = self.tree.node(n, k)
        if n == 0:
            return BasisElement(0, 0, l, m, r, math.nan, math.nan)
        return BasisElement(n, k, l, m, r, float(self.L[n][k]), float(self.R[n][k]))

    def elements(self, N: int | None = None) -> list[BasisElement]:
        N = self.depth if N is None else N
        return [self.element(n, k) for n in range(1, N + 1) for k in range(self.tree.level_size(n))]

    def _check_N(self, N: int) -> None:
        if not 0 <= N <= self.depth:
            raise ValueError(f"N={N} outside 0..{self.depth}")

    def _root(self, ht, gt):
        return gt * (ht - self.h0) / math.sqrt(self.h1 - self.h0)

    def _level(self, n, t, ht, gt):
        k = self.tree.locate(n, t)
        left = t <= self.tree.mid[n][k]
        val = np.where(
            left,
            self.L[n][k] * gt * (ht - self.hl[n][k]),
            self.R[n][k] * gt * (self.hr[n][k] - ht),
        )
        inside = (t >= 0.0) & (t <= 1.0)
        return k, np.where(inside, val, 0.0)

    def chain(self, t, N: int | None = None):
        """Nonzero terms at ``t``: a list of ``(flat_indices, values)``, one pair per level ``0..N``."""
        N = self.depth if N is None else N
        self._check_N(N)
        t = np.asarray(t, dtype=float)
        ht, gt = self.spec.h(t), self.spec.g(t)
        out = [(np.zeros(t.shape, dtype=np.int64), self._root(ht, gt))]
        for n in range(1, N + 1):
            k, val = self._level(n, t, ht, gt)
            out.append(((1 << (n - 1)) + k, val))
        return out

    def matrix(self, t, N: int | None = None) -> np.ndarray:
        """Dense ``(2**N, len(t))`` array of every ``Psi`` in flat order at times ``t``."""
        N = self.depth if N is None else N
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((1 << N, t.size))
        cols = np.arange(t.size)
        for idx, val in self.chain(t, N):
            out[idx, cols] = val
        return out

    def psi00(self, t):
        t = np.asarray(t, dtype=float)
        return _out(t, self._root(self.spec.h(t), self.spec.g(t)))

    def partial_covariance(self, N: int, t, s):
        """``sum_{n <= N} sum_k Psi_{n,k}(t) Psi_{n,k}(s)`` (broadcast over ``t``, ``s``)."""
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        ct = self.chain(t, N)
        cs = self.chain(s, N)
        total = ct[0][1] * cs[0][1]
        for (kt, vt), (ks, vs) in zip(ct[1:], cs[1:]):
            total = total + np.where(kt == ks, vt * vs, 0.0)
        return _out(t, total)

    def synthesize(self, xi: np.ndarray, t, N: int | None = None) -> np.ndarray:
        """``X^N`` at times ``t`` for coefficient rows ``xi`` (shape ``(paths, >= 2**N)``)."""
        N = self.depth if N is None else N
        xi = np.atleast_2d(xi)
        if xi.shape[1] < (1 << N):
            raise ValueError(f"need {1 << N} coefficients per path, got {xi.shape[1]}")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((xi.shape[0], t.size))
        for idx, val in self.chain(t, N):
            out += xi[:, idx] * val
        return out


@functools.lru_cache(maxsize=16)
def basis_for(spec: ProcessSpec, tree: SupportTree) -> Basis:
    return Basis(spec, tree)


def partial_covariance(spec: ProcessSpec, tree: SupportTree, N: int, t, s):
    return basis_for(spec, tree).partial_covariance(N, t, s)
