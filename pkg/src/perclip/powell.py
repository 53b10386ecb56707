"""Derivative-free conjugate-direction minimization on a box.

Classic Powell scheme: line-minimize along each direction of a working set
(initially the coordinate axes), then replace the direction of largest
single-step decrease with the iteration's net displacement when the
standard acceptance test passes. Line searches are golden-section on the
feasible segment with one parabolic refinement, so no point is ever
evaluated outside the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class PowellResult:
    x: np.ndarray
    fx: float
    iterations: int
    evaluations: list[tuple[tuple[float, ...], float]]
    converged: bool


def _feasible_interval(x, d, lower, upper) -> tuple[float, float]:
    # range of t with lower <= x + t*d <= upper
    t_lo, t_hi = -math.inf, math.inf
    for xi, di, lo, hi in zip(x, d, lower, upper):
        if di == 0.0:
            continue
        a, b = (lo - xi) / di, (hi - xi) / di
        if a > b:
            a, b = b, a
        t_lo = max(t_lo, a)
        t_hi = min(t_hi, b)
    if not (math.isfinite(t_lo) and math.isfinite(t_hi)):
        return 0.0, 0.0
    return t_lo, t_hi


def _line_minimize(f1d, t_lo: float, t_hi: float, f_at_zero: float, xtol: float):
    """Minimize f1d on [t_lo, t_hi] knowing f1d(0); returns (t, f) best seen.

    Never returns a point worse than t=0.
    """
    best_t, best_f = 0.0, f_at_zero
    if t_hi - t_lo <= xtol:
        return best_t, best_f
    history = [(0.0, f_at_zero)]

    def probe(t: float) -> float:
        ft = f1d(t)
        history.append((t, ft))
        nonlocal best_t, best_f
        if ft < best_f:
            best_t, best_f = t, ft
        return ft

    a, b = t_lo, t_hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = probe(c), probe(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = probe(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = probe(d)

    # one parabolic step through the best point and its nearest neighbours
    history.sort()
    idx = min(range(len(history)), key=lambda i: history[i][1])
    if 0 < idx < len(history) - 1:
        (x1, f1), (x2, f2), (x3, f3) = history[idx - 1], history[idx], history[idx + 1]
        denom = (x2 - x1) * (f2 - f3) - (x2 - x3) * (f2 - f1)
        if denom != 0.0:
            t_p = x2 - 0.5 * ((x2 - x1) ** 2 * (f2 - f3) - (x2 - x3) ** 2 * (f2 - f1)) / denom
            if t_lo <= t_p <= t_hi and abs(t_p - x2) > 1e-15:
                probe(t_p)
    return best_t, best_f


def powell_box_minimize(
    f,
    x0,
    lower,
    upper,
    ftol: float = 1e-8,
    max_iters: int = 50,
    xtol: float = 1e-4,
    max_evals: int | None = None,
) -> PowellResult:
    """Minimize f over the box [lower, upper] starting at x0."""
    x = np.asarray(x0, dtype=float).copy()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower >= upper):
        raise ValueError("each lower bound must be below its upper bound")
    if np.any(x < lower) or np.any(x > upper):
        raise ValueError(f"start point {x.tolist()} outside the box")
    n = len(x)
    evaluations: list[tuple[tuple[float, ...], float]] = []

    def call(pt: np.ndarray) -> float:
        pt = np.clip(pt, lower, upper)
        val = float(f(pt))
        evaluations.append((tuple(pt), val))
        return val

    dirs = [np.eye(n)[i] for i in range(n)]
    fx = call(x)
    converged = False
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        x_start = x.copy()
        f_start = fx
        delta = 0.0
        i_big = 0
        for i, d in enumerate(dirs):
            t_lo, t_hi = _feasible_interval(x, d, lower, upper)
            t, ft = _line_minimize(lambda t: call(x + t * d), t_lo, t_hi, fx, xtol)
            if fx - ft > delta:
                delta = fx - ft
                i_big = i
            x = np.clip(x + t * d, lower, upper)
            fx = ft
        if 2.0 * abs(f_start - fx) <= ftol * (abs(f_start) + abs(fx) + 1e-12):
            converged = True
            break
        if max_evals is not None and len(evaluations) >= max_evals:
            break
        # direction-set update: try the extrapolated point along the net move
        d_net = x - x_start
        norm = float(np.linalg.norm(d_net))
        if norm == 0.0:
            continue
        x_e = np.clip(x_start + 2.0 * d_net, lower, upper)
        if np.allclose(x_e, x):
            continue
        f_e = call(x_e)
        if f_e < f_start:
            t1 = 2.0 * (f_start - 2.0 * fx + f_e) * (f_start - fx - delta) ** 2
            t2 = delta * (f_start - f_e) ** 2
            if t1 < t2:
                d_new = d_net / norm
                dirs[i_big] = dirs[n - 1]
                dirs[n - 1] = d_new
                t_lo, t_hi = _feasible_interval(x, d_new, lower, upper)
                t, ft = _line_minimize(
                    lambda t: call(x + t * d_new), t_lo, t_hi, fx, xtol
                )
                x = np.clip(x + t * d_new, lower, upper)
                fx = ft
    best_x, best_f = min(evaluations, key=lambda e: e[1])
    return PowellResult(
        x=np.asarray(best_x),
        fx=best_f,
        iterations=iterations,
        evaluations=evaluations,
        converged=converged,
    )
