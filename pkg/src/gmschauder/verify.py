"""Numerical invariant checks for a process/tree pair.

Each check returns a ``Check`` with the measured error and its tolerance.
Quadratures use composite Simpson on ``2**12`` panels, split at every support
endpoint so that the piecewise integrands are smooth on each panel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gmschauder.basis import Basis, basis_for, phi, phi00, psi, sup_bounds
from gmschauder.measures import covariance_matrix, gaussian_conditional_oracle
from gmschauder.process import ProcessSpec, bridge_law, covariance
from gmschauder.quadrature import composite_simpson, simpson_nodes
from gmschauder.tree import SupportTree

PANELS = 2**12


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name:<28} error={self.error:.3e}  tol={self.tolerance:.1e}{extra}"


def parseval_grid(points: int = 129) -> np.ndarray:
    """Cell-centred grid ``(i + 1/2) / points``; off the dyadic points for odd ``points``."""
    return (np.arange(points) + 0.5) / points


def _phi_family(basis: Basis, N: int):
    elems = basis.elements(N)
    spec = basis.spec

    def values(t, side):
        rows = [phi00(spec, t, side)]
        rows.extend(phi(spec, e, t, side) for e in elems)
        return np.array(rows)

    return elems, values


def gram_matrix(spec: ProcessSpec, tree: SupportTree, N: int, panels: int = PANELS) -> np.ndarray:
    """Inner products of ``{Phi_00} U {Phi_{n,k} : 1 <= n <= N}`` by composite Simpson."""
    basis = basis_for(spec, tree)
    elems, values = _phi_family(basis, N)
    breaks = tree.endpoints() if tree.description != "uniform" else ()
    left, wl, mid, wm, right, wr = simpson_nodes(0.0, 1.0, panels, breaks)
    G = np.zeros((len(elems) + 1,) * 2)
    for nodes, weights, side in ((left, wl, "right"), (mid, wm, "left"), (right, wr, "left")):
        V = values(nodes, side)
        G += (V * weights) @ V.T
    return G


def check_gram(spec, tree, N, tol=1e-8, panels=PANELS) -> Check:
    G = gram_matrix(spec, tree, N, panels)
    dev = np.abs(G - np.eye(G.shape[0]))
    i, j = np.unravel_index(np.argmax(dev), dev.shape)
    err = float(dev[i, j])
    return Check("gram-orthonormality", err < tol, err, tol, f"{G.shape[0]} functions, worst entry ({i}, {j})")


def check_zero_mean(spec, tree, N, tol=1e-10, panels=PANELS) -> Check:
    """``(f, Phi_{n,k}) = 0`` for ``n >= 1``."""
    basis = basis_for(spec, tree)
    worst, where = 0.0, None
    for e in basis.elements(N):
        val = composite_simpson(lambda t, side: spec.f(t) * phi(spec, e, t, side), e.l, e.r, panels // (1 << (e.n - 1)) or 2, (e.m,))
        if abs(val) > worst:
            worst, where = abs(val), e.index
    return Check("zero-mean-against-f", worst < tol, worst, tol, f"worst node {where}")


def check_reproducing(spec, tree, N, samples=20, tol=1e-8, seed=0, panels=PANELS) -> Check:
    """``Psi_{n,k}(t) = int_0^t g(t) f(u) Phi_{n,k}(u) du`` at random ``(n, k, t)``."""
    basis = basis_for(spec, tree)
    rng = np.random.default_rng(seed)
    worst, where = 0.0, None
    for _ in range(samples):
        n = int(rng.integers(1, N + 1))
        k = int(rng.integers(0, tree.level_size(n)))
        e = basis.element(n, k)
        t = float(rng.uniform(e.l, e.r))
        gt = spec.g(t)
        upper = min(t, e.r)
        integral = composite_simpson(
            lambda u, side: gt * spec.f(u) * phi(spec, e, u, side), e.l, upper, panels, (e.m,)
        )
        err = abs(integral - psi(spec, e, t))
        if err > worst:
            worst, where = err, (n, k, round(t, 6))
    return Check("reproducing-identity", worst < tol, worst, tol, f"worst (n, k, t) {where}")


def random_bridge_instances(rng: np.random.Generator, count: int, scale: float = 1.0):
    """Random ``(tx, ty, tz, x, z)`` with ``0 < tx < ty < tz <= 1``."""
    out = []
    for _ in range(count):
        tx, ty, tz = np.sort(rng.uniform(0.0, 1.0, 3))
        x, z = rng.normal(0.0, scale, 2)
        out.append((float(tx), float(ty), float(tz), float(x), float(z)))
    return out


def bridge_oracle_error(spec: ProcessSpec, instances) -> float:
    worst = 0.0
    for tx, ty, tz, x, z in instances:
        law = bridge_law(spec, tx, x, tz, z, ty)
        mean, var = gaussian_conditional_oracle(covariance_matrix(spec, [tx, ty, tz]), x, z)
        worst = max(worst, abs(law.mean - mean), abs(law.variance - var))
    return worst


def check_bridge(spec, samples=100, tol=1e-10, seed=0) -> Check:
    rng = np.random.default_rng(seed)
    err = bridge_oracle_error(spec, random_bridge_instances(rng, samples))
    return Check("bridge-vs-schur-oracle", err < tol, err, tol, f"{samples} instances")


def covariance_errors(spec: ProcessSpec, tree: SupportTree, levels, grid=None) -> list[tuple[int, float, float]]:
    """``(N, sup |rho^N - rho|, mean |rho^N - rho|)`` over ``grid x grid``."""
    grid = parseval_grid() if grid is None else np.asarray(grid, dtype=float)
    basis = basis_for(spec, tree)
    T, S = grid[:, None], grid[None, :]
    exact = covariance(spec, T, S)
    rows = []
    for N in levels:
        diff = np.abs(basis.partial_covariance(N, T, S) - exact)
        rows.append((int(N), float(diff.max()), float(diff.mean())))
    return rows


def check_covariance_convergence(spec, tree, first=2, grid=None) -> Check:
    rows = covariance_errors(spec, tree, range(first, tree.depth + 1), grid)
    sups = [r[1] for r in rows]
    bad = [rows[i + 1][0] for i in range(len(rows) - 1) if not sups[i + 1] < sups[i]]
    return Check(
        "covariance-convergence",
        not bad,
        sups[-1],
        float("nan"),
        f"sup error N={rows[0][0]}..{rows[-1][0]} strictly decreasing" if not bad else f"no decrease at N={bad}",
    )


def sup_bound_table(spec: ProcessSpec, tree: SupportTree, N: int, grid_exp: int = 14):
    """Per node: ``(n, k, max |Psi| on the grid, support-shape bound, 2^{-(n+1)/2} bound)``.

    The grid is ``i 2^-grid_exp``, which contains every split point of a uniform
    tree of depth ``<= grid_exp``.
    """
    basis = basis_for(spec, tree)
    f_sup, g_sup = spec.sup_norms()
    t = np.arange((1 << grid_exp) + 1) * 2.0**-grid_exp
    rows = []
    for n, (idx, val) in enumerate(basis.chain(t, N)):
        if n == 0:
            continue
        size = tree.level_size(n)
        peak = np.zeros(size)
        np.maximum.at(peak, idx - size, np.abs(val))
        for k in range(size):
            e = basis.element(n, k)
            shape_bound, dyadic_bound = sup_bounds(e, f_sup, g_sup)
            rows.append((n, k, float(peak[k]), shape_bound, dyadic_bound))
    return rows


def run_suite(spec: ProcessSpec, tree: SupportTree, gram_levels: int = 5) -> list[Check]:
    N = min(gram_levels, tree.depth)
    return [
        check_gram(spec, tree, N),
        check_zero_mean(spec, tree, N),
        check_reproducing(spec, tree, tree.depth),
        check_bridge(spec),
        check_covariance_convergence(spec, tree, first=min(2, tree.depth)),
    ]
