"""Gauss-Legendre panels, adaptive bisection and improper tails."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

Integrand = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(edges: np.ndarray, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a fixed composite rule on consecutive panels."""
    edges = np.asarray(edges, dtype=float)
    x0, w0 = gauss_legendre(order)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    half = 0.5 * (hi - lo)
    x = 0.5 * (hi + lo) + half * x0
    w = half * w0
    return x.ravel(), w.ravel()


def _apply(f: Integrand, edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = composite_nodes(edges, order)
    return f(x), w


def adaptive_gl(
    f: Integrand,
    a: float,
    b: float,
    tol: float = 1e-9,
    breakpoints: Iterable[float] = (),
    order: int = 10,
    max_panels: int = 50_000,
) -> float:
    """Integrate a vectorized ``f`` over [a, b] to relative tolerance ``tol``.

    Each panel is compared with the sum over its two halves; panels whose
    disagreement exceeds their share of the tolerance are bisected.  The
    interval is split at ``breakpoints`` first so that kinks and jumps of
    the integrand sit on panel edges.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    cuts = sorted({a, b, *(float(c) for c in breakpoints if a < c < b)})
    x0, w0 = gauss_legendre(order)

    def rule(lo: float, hi: float) -> float:
        half = 0.5 * (hi - lo)
        return half * float(np.dot(w0, f(0.5 * (hi + lo) + half * x0)))

    if len(cuts) > 65:
        # many kinks: one vectorized pass over every piece, accepted if halving agrees
        edges = np.asarray(cuts)
        fx, w = _apply(f, edges, order)
        coarse = float(w @ fx)
        fx, w = _apply(f, np.sort(np.concatenate([edges, 0.5 * (edges[:-1] + edges[1:])])), order)
        fine = float(w @ fx)
        if abs(fine - coarse) <= tol * max(abs(fine), 1e-300):
            return sign * fine
    pending = [(lo, hi, rule(lo, hi)) for lo, hi in zip(cuts[:-1], cuts[1:])]
    crude = abs(sum(p[2] for p in pending))
    length = b - a
    scale = max(crude, 1e-300)
    total = 0.0
    count = len(pending)
    while pending:
        lo, hi, whole = pending.pop()
        mid = 0.5 * (lo + hi)
        left = rule(lo, mid)
        right = rule(mid, hi)
        halves = left + right
        err = abs(halves - whole)
        share = tol * scale * (hi - lo) / length
        if err <= share or err <= 1e-15 * abs(halves) or (hi - lo) <= 1e-14 * length or count >= max_panels:
            total += halves
            continue
        pending.append((lo, mid, left))
        pending.append((mid, hi, right))
        count += 1
    return sign * total


def improper_tail(
    f: Integrand,
    start: float,
    toward: str,
    tol: float = 1e-9,
    max_doublings: int = 60,
    breakpoints: Iterable[float] = (),
) -> tuple[float, bool]:
    """Integrate ``f`` from ``start`` toward 0 or +inf on dyadic panels.

    Returns ``(value, converged)``.  The dyadic pieces of power-like
    integrands form a geometric sequence, so once consecutive piece ratios
    settle the remaining tail is summed in closed form.  When neither the
    pieces nor the extrapolated total settle within ``max_doublings``
    doublings, or the pieces stop shrinking, the integral is reported
    divergent as ``(inf, False)``.
    """
    if toward not in ("zero", "inf"):
        raise ValueError("toward must be 'zero' or 'inf'")
    kinks = tuple(breakpoints)
    total = 0.0
    prev_piece = None
    prev_ratio = None
    prev_est = None
    stalled = 0
    edge = float(start)
    for _ in range(max_doublings):
        nxt = edge * 0.5 if toward == "zero" else edge * 2.0
        lo, hi = min(edge, nxt), max(edge, nxt)
        piece = adaptive_gl(f, lo, hi, tol * 1e-2, [k for k in kinks if lo < k < hi])
        total += piece
        edge = nxt
        if abs(piece) <= tol * max(1.0, abs(total)):
            return total, True
        if prev_piece is not None and prev_piece != 0.0:
            ratio = piece / prev_piece
            if prev_ratio is not None and 0.0 < ratio < 1.0 - 1e-12 and abs(ratio - prev_ratio) <= 1e-6 * abs(ratio):
                est = total + piece * ratio / (1.0 - ratio)
                if prev_est is not None and abs(est - prev_est) <= tol * max(1.0, abs(est)):
                    return est, True
                prev_est = est
            # pieces that stop shrinking mean a log-type or worse divergence
            stalled = stalled + 1 if ratio >= 1.0 - 1e-3 else 0
            if stalled >= 6:
                break
            prev_ratio = ratio
        prev_piece = piece
    return math.copysign(math.inf, total if total != 0.0 else 1.0), False
