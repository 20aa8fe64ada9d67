"""Quadrature helpers: vectorized adaptive Simpson and breakpoint-aware composite Simpson."""

from __future__ import annotations

import numpy as np


def _simpson(a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(func, a, b, tol=1e-12, max_depth=50):
    """Integrate ``func`` over each interval ``[a[i], b[i]]``.

    ``func`` must accept and return 1-d float arrays. All intervals are refined
    together; an interval is accepted once the Richardson estimate
    ``|S2 - S1| / 15`` is below its share of ``tol``.

    Returns:
        (values, error_estimates), both shaped like ``a``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    shape = a.shape
    a = a.ravel().copy()
    b = b.ravel().copy()
    total = np.zeros(a.size)
    errors = np.zeros(a.size)

    owner = np.arange(a.size)
    m = 0.5 * (a + b)
    fa, fm, fb = func(a), func(m), func(b)
    whole = _simpson(a, b, fa, fm, fb)
    tols = np.broadcast_to(np.asarray(tol, dtype=float), shape).ravel().copy()

    for depth in range(max_depth + 1):
        if owner.size == 0:
            break
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = func(lm), func(rm)
        left = _simpson(a, m, fa, flm, fm)
        right = _simpson(m, b, fm, frm, fb)
        delta = left + right - whole
        err = np.abs(delta) / 15.0
        done = (err <= tols) | (depth == max_depth) | (b - a <= 4 * np.finfo(float).eps * np.abs(b))
        np.add.at(total, owner[done], (left + right + delta / 15.0)[done])
        np.add.at(errors, owner[done], err[done])

        keep = ~done
        owner = np.concatenate([owner[keep], owner[keep]])
        a, m, b = (
            np.concatenate([a[keep], m[keep]]),
            np.concatenate([lm[keep], rm[keep]]),
            np.concatenate([m[keep], b[keep]]),
        )
        fa, fm, fb = (
            np.concatenate([fa[keep], fm[keep]]),
            np.concatenate([flm[keep], frm[keep]]),
            np.concatenate([fm[keep], fb[keep]]),
        )
        whole = np.concatenate([left[keep], right[keep]])
        tols = np.concatenate([tols[keep], tols[keep]]) / 2.0

    return total.reshape(shape), errors.reshape(shape)


def simpson_nodes(a, b, panels, breakpoints=()):
    """Nodes and weights for composite Simpson on ``[a, b]``.

    The panel grid is ``panels`` uniform panels merged with any ``breakpoints``
    inside ``(a, b)``, so integrands that are only piecewise smooth are
    integrated panel by panel.

    Returns:
        (left, w_left, mid, w_mid, right, w_right). ``left`` are panel starts,
        to be evaluated as limits from the right; ``right`` are panel ends,
        to be evaluated as limits from the left.
    """
    grid = np.linspace(a, b, panels + 1)
    bp = np.asarray(breakpoints, dtype=float)
    bp = bp[(bp > a) & (bp < b)]
    if bp.size:
        grid = np.unique(np.concatenate([grid, bp]))
    left, right = grid[:-1], grid[1:]
    width = right - left
    mid = 0.5 * (left + right)
    return left, width / 6.0, mid, 4.0 * width / 6.0, right, width / 6.0


def composite_simpson(func, a, b, panels, breakpoints=()):
    """Integrate a piecewise-smooth ``func(t, side)`` over ``[a, b]``.

    ``side`` is ``"right"`` at panel starts and ``"left"`` at panel ends, so
    jump discontinuities at panel boundaries are handled with one-sided limits.
    """
    left, wl, mid, wm, right, wr = simpson_nodes(a, b, panels, breakpoints)
    return float(
        np.dot(wl, func(left, "right")) + np.dot(wm, func(mid, "left")) + np.dot(wr, func(right, "left"))
    )
