"""One-dimensional searches: grid bracketing, golden section, bisection."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
GRID_POINTS = 2048
REL_WIDTH = 1e-10


def golden_section_min(f: Callable[[float], float], a: float, b: float,
                       rtol: float = REL_WIDTH, max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    a, b = min(a, b), max(a, b)
    scale = max(abs(a), abs(b), 1e-300)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rtol * scale:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    candidates = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    fx, x = min(candidates)
    return x, fx


def grid_then_golden(f: Callable[[float], float], xs, rtol: float = REL_WIDTH):
    """Evaluate on ``xs`` (ascending), then golden-section polish around every local minimum.

    Returns ``(x, f(x), n_refined)``: the global best over grid and polish.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.array([f(x) for x in xs])
    best = int(np.argmin(ys))
    x_best, y_best = float(xs[best]), float(ys[best])
    n = len(xs)
    if n < 2:
        return x_best, y_best, 0
    local = [i for i in range(n)
             if (i == 0 or ys[i] <= ys[i - 1]) and (i == n - 1 or ys[i] <= ys[i + 1])]
    # polish the most promising minima only; the rest cannot beat the global grid best by much
    local.sort(key=lambda i: ys[i])
    refined = 0
    for i in local[:8]:
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, n - 1)]
        if hi <= lo:
            continue
        x, y = golden_section_min(f, lo, hi, rtol=rtol)
        refined += 1
        if y < y_best:
            x_best, y_best = x, y
    return x_best, y_best, refined


def bisect(pred: Callable[[float], bool], good: float, bad: float,
           rtol: float = REL_WIDTH, max_iter: int = 400) -> float:
    """Shrink ``[good, bad]`` around the switch of ``pred``; returns the last good point.

    ``pred(good)`` is assumed true and ``pred(bad)`` false.
    """
    scale = max(abs(good), abs(bad), 1e-300)
    for _ in range(max_iter):
        if abs(bad - good) <= rtol * scale:
            break
        mid = 0.5 * (good + bad)
        if pred(mid):
            good = mid
        else:
            bad = mid
    return good
