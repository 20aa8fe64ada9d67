"""Finite-dimensional laws of ``X^N`` and brute-force Gaussian oracles.

The oracles here work from the covariance ``g(t) g(s) h(min(t, s))`` with plain
linear algebra, so they are independent of the basis and kernel code they are
used to check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from gmschauder.basis import basis_for
from gmschauder.process import DegenerateIncrementError, ProcessSpec, covariance
from gmschauder.quadrature import simpson_nodes
from gmschauder.sampler import PathSample
from gmschauder.tree import SupportTree, prefix_order_times

log = logging.getLogger(__name__)

JITTER = 1e-12


class SingularConditioningError(np.linalg.LinAlgError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error: float):
        super().__init__(f"{message} (achieved error estimate {error:.3e})")
        self.error = error


@dataclass(frozen=True, eq=False)
class GaussianVector:
    """Centered Gaussian vector with covariance ``cov``."""

    cov: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be a square matrix")
        scale = max(1.0, float(np.max(np.abs(cov)))) if cov.size else 1.0
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * scale:
            raise ValueError("covariance is not symmetric")
        if cov.size and np.min(np.linalg.eigvalsh(cov)) < -1e-10:
            raise ValueError("covariance is not positive semi-definite")
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.cov.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return np.zeros(self.dim)

    def cholesky(self) -> tuple[np.ndarray, bool]:
        """Lower Cholesky factor; retries with ``1e-12`` diagonal jitter and says so."""
        try:
            return np.linalg.cholesky(self.cov), False
        except np.linalg.LinAlgError:
            log.warning("covariance not positive definite; adding %.0e diagonal jitter", JITTER)
            return np.linalg.cholesky(self.cov + JITTER * np.eye(self.dim)), True

    def logpdf(self, x) -> tuple[np.ndarray, bool]:
        """Log density at the rows of ``x`` and whether jitter was needed."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        chol, jittered = self.cholesky()
        # forward substitution, one column per point
        w = np.linalg.solve(chol, x.T)
        quad = np.sum(w * w, axis=0)
        logdet = 2.0 * np.sum(np.log(np.diag(chol)))
        return -0.5 * (quad + logdet + self.dim * math.log(2.0 * math.pi)), jittered

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x)[0])


def covariance_matrix(spec: ProcessSpec, times) -> GaussianVector:
    times = np.asarray(times, dtype=float)
    return GaussianVector(covariance(spec, times[:, None], times[None, :]))


def _kernel_product_log(spec: ProcessSpec, times: np.ndarray, x: np.ndarray) -> np.ndarray:
    h = spec.h(times)
    g = spec.g(times)
    dh = np.diff(h)
    if np.any(dh <= 0):
        raise DegenerateIncrementError(f"{spec.label}: h is flat between consecutive grid times")
    scaled = x / g
    incr = np.diff(scaled, axis=-1)
    terms = -(incr**2) / (2.0 * dh) - np.log(np.abs(g[1:]) * np.sqrt(2.0 * np.pi * dh))
    return np.sum(terms, axis=-1)


def finite_dim_log_density(spec: ProcessSpec, tree: SupportTree, N: int, x) -> np.ndarray | float:
    """Log of ``p^N(x_1, ..., x_{2^N})``; ``x`` holds the values at the level-N grid minus ``t = 0``."""
    times = prefix_order_times(tree, N)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != times.size - 1:
        raise ValueError(f"expected {times.size - 1} values, got {x.shape[-1]}")
    full = np.concatenate([np.zeros(x.shape[:-1] + (1,)), x], axis=-1)
    out = _kernel_product_log(spec, times, full)
    return float(out) if np.ndim(out) == 0 else out


def finite_dim_density(spec: ProcessSpec, tree: SupportTree, N: int, x):
    """``p^N`` as the product of transition densities along ``0 = t_0 < ... < t_{2^N}``, with ``x_0 = 0``."""
    out = np.exp(finite_dim_log_density(spec, tree, N, x))
    return float(out) if np.ndim(out) == 0 else out


def mvn_density_oracle(spec: ProcessSpec, times, x) -> np.ndarray:
    """Joint normal density of ``(X_t)`` at ``times`` from the covariance matrix."""
    out = covariance_matrix(spec, times).pdf(x)
    return float(out[0]) if np.ndim(x) == 1 else out


def characteristic_function(spec: ProcessSpec, tree: SupportTree, N: int, times, lambdas) -> complex:
    """``E exp(i sum_p lambda_p X^N_{t_p}) = exp(-lambda^T R^N lambda / 2)``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if times.shape != lam.shape:
        raise ValueError("times and lambdas must have the same length")
    rho = basis_for(spec, tree).partial_covariance(N, times[:, None], times[None, :])
    return complex(math.exp(-0.5 * float(lam @ rho @ lam)), 0.0)


def _as_function(theta) -> Callable:
    if callable(theta):
        return theta
    times, values = (np.asarray(a, dtype=float) for a in theta)
    return lambda t: np.interp(t, times, values)


def _functional_exponent(spec: ProcessSpec, theta: Callable, panels: int) -> float:
    # inner(t) = int_t^1 g theta, tabulated on a grid twice as fine as the outer rule
    fine = np.linspace(0.0, 1.0, 2 * panels + 1)
    left, wl, mid, wm, right, wr = simpson_nodes(0.0, 1.0, 2 * panels)
    gth = lambda u: spec.g(u) * np.asarray(theta(u), dtype=float)  # noqa: E731
    piece = wl * gth(left) + wm * gth(mid) + wr * gth(right)
    tail = np.concatenate([np.cumsum(piece[::-1])[::-1], [0.0]])
    integrand = spec.f(fine) ** 2 * tail**2
    h = 1.0 / panels
    return -0.5 * h / 6.0 * float(
        integrand[0:-1:2].sum() + 4.0 * integrand[1::2].sum() + integrand[2::2].sum()
    )


def characteristic_functional_exponent(spec: ProcessSpec, theta, panels: int = 2**10, tol: float = 1e-9) -> tuple[float, float]:
    """Exponent ``-1/2 int_0^1 (f(t) int_t^1 g(s) theta(s) ds)^2 dt`` and its error estimate.

    ``theta`` is a callable or a ``(times, values)`` table. The error estimate
    compares ``panels`` and ``panels / 2``; QuadratureError is raised if it
    exceeds ``tol`` relative to the exponent.
    """
    theta = _as_function(theta)
    fine = _functional_exponent(spec, theta, panels)
    coarse = _functional_exponent(spec, theta, panels // 2)
    err = abs(fine - coarse) / 15.0
    if err > tol * max(1.0, abs(fine)):
        raise QuadratureError("characteristic functional did not converge", err)
    return fine, err


def characteristic_functional_density(spec: ProcessSpec, theta, panels: int = 2**10, tol: float = 1e-9) -> float:
    """Characteristic functional of the process against the measure ``theta(t) dt``."""
    exponent, _ = characteristic_functional_exponent(spec, theta, panels, tol)
    return math.exp(exponent)


def covariance_quadratic_form(spec: ProcessSpec, theta, panels: int = 2**10) -> tuple[float, float]:
    """``int int rho(t, s) theta(t) theta(s) dt ds`` by tensor-product Simpson, with error estimate.

    Returns the Richardson-extrapolated value from ``panels`` and ``panels / 2``
    and the size of the correction.
    """
    theta = _as_function(theta)

    def tensor(p):
        x = np.linspace(0.0, 1.0, 2 * p + 1)
        w = np.full(x.size, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= 1.0 / (6.0 * p)
        v = w * np.asarray(theta(x), dtype=float)
        rho = covariance(spec, x[:, None], x[None, :])
        return float(v @ rho @ v)

    fine, coarse = tensor(panels), tensor(panels // 2)
    # the diagonal kink of min(t, s) makes the tensor rule second order
    extrapolated = fine + (fine - coarse) / 3.0
    return extrapolated, abs(fine - coarse) / 3.0


def gaussian_conditional_oracle(cov, x: float, z: float) -> tuple[float, float]:
    """Mean and variance of the middle coordinate given the outer two (Schur complement).

    ``cov`` is a 3x3 covariance (or GaussianVector) ordered ``(t_x, t_y, t_z)``.
    """
    S = cov.cov if isinstance(cov, GaussianVector) else np.asarray(cov, dtype=float)
    outer = [0, 2]
    S_oo = S[np.ix_(outer, outer)]
    S_yo = S[1, outer]
    det = S_oo[0, 0] * S_oo[1, 1] - S_oo[0, 1] * S_oo[1, 0]
    if not abs(det) > 1e-14 * max(1.0, float(np.max(np.abs(S_oo))) ** 2):
        raise SingularConditioningError("conditioning block is singular")
    w = np.linalg.solve(S_oo, S_yo)
    mean = float(w @ np.array([x, z], dtype=float))
    var = float(S[1, 1] - S_yo @ w)
    return mean, var


def transition_oracle(spec: ProcessSpec, x0: float, t0: float, x: float, t: float) -> float:
    """Transition density from conditioning the 2-point joint normal of ``(X_t0, X_t)``."""
    S = covariance_matrix(spec, [t0, t]).cov
    if S[0, 0] == 0.0:
        mean, var = 0.0, S[1, 1]
    else:
        mean = S[1, 0] / S[0, 0] * x0
        var = S[1, 1] - S[1, 0] ** 2 / S[0, 0]
    return math.exp(-((x - mean) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)


@dataclass(frozen=True, eq=False)
class Moments:
    """Sample moments of paths on a grid, with Gaussian-theory standard errors."""

    times: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    se_mean: np.ndarray
    se_cov: np.ndarray
    n_paths: int


def _stack(paths, times) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(paths, PathSample):
        paths = [paths]
    paths = list(paths)
    if not paths:
        raise ValueError("no paths")
    grid = paths[0].times
    for p in paths[1:]:
        if p.times.shape != grid.shape or np.any(p.times != grid):
            raise ValueError("paths are on different grids")
    values = np.concatenate([p.values for p in paths], axis=0)
    if times is not None:
        times = np.asarray(times, dtype=float)
        idx = np.searchsorted(grid, times)
        if np.any(idx >= grid.size) or np.any(grid[np.minimum(idx, grid.size - 1)] != times):
            raise ValueError("requested times are not on the path grid")
        values, grid = values[:, idx], times
    return grid, values


def empirical_moments(paths: PathSample | Sequence[PathSample], times=None) -> Moments:
    """Unbiased sample mean and covariance of paths on a common grid.

    Sums run over paths in a fixed order, so the result does not depend on how
    the paths were produced.
    """
    grid, values = _stack(paths, times)
    M = values.shape[0]
    if M < 2:
        raise ValueError("need at least two paths")
    mean = values.mean(axis=0)
    centered = np.ascontiguousarray((values - mean).T)
    cov = np.empty((grid.size, grid.size))
    for i in range(grid.size):
        cov[i] = (centered[i] * centered).sum(axis=1) / (M - 1)
    diag = np.diag(cov)
    se_mean = np.sqrt(diag / M)
    se_cov = np.sqrt((np.outer(diag, diag) + cov**2) / (M - 1))
    return Moments(grid, mean, cov, se_mean, se_cov, M)
