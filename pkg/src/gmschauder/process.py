"""Centered Gaussian Markov processes in Doob form ``X_t = g(t) * int_0^t f(u) dW_u``.

A process is fully described by ``f``, ``g`` and the clock ``h(t) = int_0^t f(u)^2 du``.
This module builds such descriptions (Wiener, Ornstein-Uhlenbeck, user supplied)
and exposes their exact covariance, transition kernel and bridge law.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from gmschauder.quadrature import adaptive_simpson

__all__ = [
    "BridgeLaw",
    "DegenerateIncrementError",
    "ProcessSpec",
    "ProcessSpecError",
    "bridge_law",
    "bridge_moments",
    "covariance",
    "load_table",
    "make_custom",
    "make_ou",
    "make_wiener",
    "parse_process",
    "transition_density",
]

VALIDATION_POINTS = 1025


class ProcessSpecError(ValueError):
    """Invalid process description (non-finite values, vanishing g, bad selector)."""


class DegenerateIncrementError(ArithmeticError):
    """The clock ``h`` does not increase across the requested interval."""


class _Vectorized:
    """Wrap an array function so scalar input gives a Python float back."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], name: str = ""):
        self._fn = fn
        self.__name__ = name or getattr(fn, "__name__", "fn")

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.asarray(self._fn(arr), dtype=float)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).copy()
        if arr.ndim == 0:
            return float(out)
        return out

    def __repr__(self):
        return f"<{self.__name__}>"


class _QuadratureClock:
    """``h(t) = int_0^t f^2`` by adaptive Simpson, memoized at every point queried.

    New points are integrated from the nearest memoized point to their left, so
    once a tree's endpoints are registered later lookups never re-integrate.
    """

    def __init__(self, f: Callable, tol: float):
        self._f = f
        self.tol = tol
        self._knots = np.array([0.0])
        self._values = np.array([0.0])
        self._lock = threading.Lock()

    def _square(self, u):
        return np.asarray(self._f(u), dtype=float) ** 2

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        uniq = np.unique(flat)
        with self._lock:
            self._extend(uniq)
            knots, values = self._knots, self._values
        idx = np.searchsorted(knots, flat)
        return values[idx].reshape(t.shape)

    def _extend(self, points):
        knots = self._knots
        idx = np.searchsorted(knots, points)
        hit = (idx < knots.size) & (knots[np.minimum(idx, knots.size - 1)] == points)
        new = points[~hit]
        if new.size == 0:
            return
        merged = np.union1d(knots, new)
        is_new = np.isin(merged, new, assume_unique=True)
        pos = np.flatnonzero(is_new)
        a, b = merged[pos - 1], merged[pos]
        incr, _ = adaptive_simpson(self._square, a, b, tol=self.tol * (b - a) + 1e-300)
        incr = np.maximum(incr, 0.0)
        values = np.empty(merged.size)
        values[~is_new] = self._values
        for p, inc in zip(pos, incr):
            values[p] = values[p - 1] + inc
        self._knots, self._values = merged, values

    def precompute(self, points):
        with self._lock:
            self._extend(np.unique(np.asarray(points, dtype=float)))


@dataclass(frozen=True)
class ProcessSpec:
    """A Gaussian Markov process on [0, 1] given by its Doob pair ``(f, g)`` and clock ``h``.

    ``f``, ``g`` and ``h`` accept floats or arrays.
    """

    f: Callable
    g: Callable
    h: Callable
    label: str

    def sup_norms(self, points: int = 2**16 + 1) -> tuple[float, float]:
        """Return ``(max|f|, max|g|)`` estimated on a uniform grid of [0, 1]."""
        grid = np.linspace(0.0, 1.0, points)
        return float(np.max(np.abs(self.f(grid)))), float(np.max(np.abs(self.g(grid))))

    def prepare(self, points) -> None:
        """Memoize ``h`` at ``points`` when ``h`` is computed by quadrature."""
        clock = getattr(self.h, "_fn", None)
        if isinstance(clock, _QuadratureClock):
            clock.precompute(points)

    def check_g(self, points) -> None:
        """Raise ProcessSpecError if ``g`` vanishes or ``f``/``g`` are non-finite at ``points``."""
        points = np.asarray(points, dtype=float)
        fv, gv = self.f(points), self.g(points)
        if not (np.all(np.isfinite(fv)) and np.all(np.isfinite(gv))):
            raise ProcessSpecError(f"{self.label}: f or g is not finite on [0, 1]")
        if np.any(gv == 0.0) or np.any(np.sign(gv[1:]) != np.sign(gv[:-1])):
            raise ProcessSpecError(f"{self.label}: g has a zero on [0, 1]")


def make_wiener() -> ProcessSpec:
    return ProcessSpec(
        f=_Vectorized(np.ones_like, "f"),
        g=_Vectorized(np.ones_like, "g"),
        h=_Vectorized(lambda t: t + 0.0, "h"),
        label="wiener",
    )


def make_ou(alpha: float, label: str | None = None) -> ProcessSpec:
    """Ornstein-Uhlenbeck ``dX = alpha X dt + dW`` started at 0.

    Uses ``g(t) = exp(alpha t)``, ``f(t) = exp(-alpha t)`` and the closed-form
    clock ``(1 - exp(-2 alpha t)) / (2 alpha)``; ``alpha = 0`` is the Wiener process.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ProcessSpecError(f"ou: alpha must be finite, got {alpha}")
    if alpha == 0.0:
        h = _Vectorized(lambda t: t + 0.0, "h")
    elif abs(alpha) < 1e-6:
        # series of the closed form; avoids underflow for tiny alpha
        h = _Vectorized(lambda t: t * (1.0 - alpha * t * (1.0 - 2.0 / 3.0 * alpha * t)), "h")
    else:
        h = _Vectorized(lambda t: -np.expm1(-2.0 * alpha * t) / (2.0 * alpha), "h")
    return ProcessSpec(
        f=_Vectorized(lambda t: np.exp(-alpha * t), "f"),
        g=_Vectorized(lambda t: np.exp(alpha * t), "g"),
        h=h,
        label=label or f"ou:{alpha!r}",
    )


def make_custom(f: Callable, g: Callable, quad_tol: float = 1e-12, label: str = "custom") -> ProcessSpec:
    """Build a process from array functions ``f`` and ``g``.

    ``h`` is integrated numerically to absolute tolerance ``quad_tol`` and memoized.
    ``g`` is only checked for zeros on a grid of 1025 points; a zero between grid
    points goes undetected.
    """
    f_vec = _Vectorized(f, "f")
    spec = ProcessSpec(
        f=f_vec,
        g=_Vectorized(g, "g"),
        h=_Vectorized(_QuadratureClock(f_vec, quad_tol), "h"),
        label=label,
    )
    spec.check_g(np.linspace(0.0, 1.0, VALIDATION_POINTS))
    return spec


def load_table(path) -> Callable:
    """Read a two-column (time, value) text table as a piecewise-linear function.

    Columns may be separated by whitespace or commas; ``#`` starts a comment.
    """
    text = Path(path).read_text()
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ProcessSpecError(f"{path}: expected two columns, got {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if len(rows) < 2:
        raise ProcessSpecError(f"{path}: need at least two rows")
    data = np.array(rows)
    times, values = data[:, 0], data[:, 1]
    if np.any(np.diff(times) <= 0):
        raise ProcessSpecError(f"{path}: times must be strictly increasing")
    if times[0] > 0.0 or times[-1] < 1.0:
        raise ProcessSpecError(f"{path}: table must cover [0, 1]")
    if not np.all(np.isfinite(values)):
        raise ProcessSpecError(f"{path}: non-finite value")
    return lambda t: np.interp(t, times, values)


def parse_process(selector: str, quad_tol: float = 1e-12) -> ProcessSpec:
    """Build a process from ``wiener``, ``ou:<alpha>`` or ``custom:<f-table>,<g-table>``."""
    selector = selector.strip()
    if selector == "wiener":
        return make_wiener()
    kind, _, arg = selector.partition(":")
    if kind == "ou" and arg:
        try:
            alpha = float(arg)
        except ValueError:
            raise ProcessSpecError(f"bad OU parameter in {selector!r}") from None
        return make_ou(alpha, label=selector)
    if kind == "custom" and arg:
        paths = arg.split(",")
        if len(paths) != 2:
            raise ProcessSpecError(f"custom selector needs two tables: {selector!r}")
        return make_custom(load_table(paths[0]), load_table(paths[1]), quad_tol, label=selector)
    raise ProcessSpecError(f"unknown process selector {selector!r}")


def covariance(spec: ProcessSpec, t, s):
    """``E[X_t X_s] = g(t) g(s) h(min(t, s))``."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = spec.g(t) * spec.g(s) * spec.h(np.minimum(t, s))
    return float(out) if np.ndim(out) == 0 else out


def transition_density(spec: ProcessSpec, x0, t0, x, t):
    """Density of ``X_t`` at ``x`` given ``X_{t0} = x0``, for ``t0 < t``.

    Raises DegenerateIncrementError when ``h(t) == h(t0)`` (the law is then a
    point mass).
    """
    if np.any(np.asarray(t0) >= np.asarray(t)):
        raise ValueError("transition_density needs t0 < t")
    dh = np.asarray(spec.h(t) - spec.h(t0))
    if np.any(dh <= 0.0):
        raise DegenerateIncrementError(f"h({t}) == h({t0})")
    gt = spec.g(t)
    z = np.asarray(x) / gt - np.asarray(x0) / spec.g(t0)
    out = np.exp(-(z**2) / (2.0 * dh)) / (np.abs(gt) * np.sqrt(2.0 * np.pi * dh))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BridgeLaw:
    """Normal law of ``X_{ty}`` given ``X_{tx} = x`` and ``X_{tz} = z``."""

    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def bridge_moments(gx, gy, gz, hx, hy, hz, x, z):
    """Bridge mean and variance from precomputed ``g`` and ``h`` values (arrays allowed).

    No degeneracy check; callers guard ``hz > hx``.
    """
    span = hz - hx
    wl = (hz - hy) / span
    wr = (hy - hx) / span
    mean = gy / gx * wl * x + gy / gz * wr * z
    var = gy * gy * (hy - hx) * (hz - hy) / span
    return mean, var


def bridge_law(spec: ProcessSpec, tx: float, x: float, tz: float, z: float, ty: float) -> BridgeLaw:
    if not tx < ty < tz:
        raise ValueError(f"bridge_law needs tx < ty < tz, got {tx}, {ty}, {tz}")
    hx, hy, hz = (float(v) for v in spec.h(np.array([tx, ty, tz])))
    if hy == hx or hz == hx:
        raise DegenerateIncrementError(f"h is flat on part of [{tx}, {tz}]")
    gx, gy, gz = (float(v) for v in spec.g(np.array([tx, ty, tz])))
    mean, var = bridge_moments(gx, gy, gz, hx, hy, hz, float(x), float(z))
    return BridgeLaw(float(mean), max(float(var), 0.0))
