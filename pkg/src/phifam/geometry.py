"""Information matrices, score variables, Cramer-Rao bounds, projection and dual coordinates.

Derivatives in the parameter are central finite differences taken at fixed
sample points.  Integrals run over the quadrature nodes of the pair's
space, with panel edges at the support cutoffs of both densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _numdiff
from .entropy import information_content
from .errors import DivergentIntegral, SingularMetric, SupportMismatch, ZeroDenominator
from .family import EscortPair, Estimator, PhiFamily, as_theta
from .measure import RandomVariable
from .quadrature import gauss_legendre

SUPPORT_TOL = 1e-9
SINGULAR_CONDITION = 1e12


@dataclass(frozen=True)
class InfoMatrix:
    """A symmetric information matrix, or a tag saying its integral diverges."""

    entries: np.ndarray
    kind: str
    divergent: bool = False

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.entries + self.entries.T))

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    @property
    def condition(self) -> float:
        if self.divergent:
            return math.inf
        ev = np.abs(self.eigenvalues())
        return math.inf if ev.min() == 0 else float(ev.max() / ev.min())

    def inverse(self, rcond: float = 1e-12) -> np.ndarray:
        """Pseudo-inverse through the symmetric eigendecomposition."""
        if self.divergent:
            raise DivergentIntegral(f"{self.kind} information diverges", quantity=self.kind)
        vals, vecs = np.linalg.eigh(0.5 * (self.entries + self.entries.T))
        cutoff = rcond * np.abs(vals).max()
        inv = np.where(np.abs(vals) > cutoff, 1.0 / np.where(vals == 0, 1.0, vals), 0.0)
        return (vecs * inv) @ vecs.T

    def to_json(self):
        return "divergent" if self.divergent else self.entries.tolist()


class CrbSides(NamedTuple):
    lhs: float
    rhs: float


# ---------------------------------------------------------------------------
# Score variables and information matrices
# ---------------------------------------------------------------------------


def _derivatives(pair: EscortPair, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.stack([pair.base_derivative(theta, k, x) for k in range(pair.n)])


def _score_on_nodes(pair: EscortPair, theta: np.ndarray, panels: int | None = None):
    """Nodes, weights, escort values and score variables on the escort support."""
    bps = tuple(pair.breakpoints(theta))
    x, w = pair.space.nodes(bps, panels)
    P = np.asarray(pair.escort(theta, x), dtype=float)
    dp = _derivatives(pair, theta, x)
    off = P <= 0
    if off.any():
        worst = float(np.abs(dp[:, off]).max())
        if worst > SUPPORT_TOL:
            raise SupportMismatch(
                f"dp/dtheta = {worst:.3g} where the escort vanishes", quantity="dp/dtheta", tolerance=SUPPORT_TOL
            )
    X = np.where(off, 0.0, dp / np.where(off, 1.0, P))
    return x, w, P, X


def g_matrix(pair: EscortPair, theta) -> InfoMatrix:
    """g_kl = int (1/P) dp/dtheta^k dp/dtheta^l dmu."""
    th = as_theta(theta, pair.n)
    _, w, P, X = _score_on_nodes(pair, th)
    g = (X * (w * P)) @ X.T
    return InfoMatrix(0.5 * (g + g.T), "generalized")


def fisher_matrix(pair: EscortPair | PhiFamily, theta, doublings: int = 3) -> InfoMatrix:
    """I_kl = int (1/p) dp/dtheta^k dp/dtheta^l dmu, tagged divergent when refinement runs away."""
    if isinstance(pair, PhiFamily):
        pair = pair.pair()
    th = as_theta(theta, pair.n)

    def at(panels: int | None) -> np.ndarray:
        bps = tuple(pair.breakpoints(th))
        x, w = pair.space.nodes(bps, panels)
        p = np.asarray(pair.base(th, x), dtype=float)
        dp = _derivatives(pair, th, x)
        on = p > 0
        X = np.where(on, dp / np.where(on, p, 1.0), 0.0)
        return (X * (w * p)) @ X.T

    value = at(None)
    if pair.space.is_discrete:
        return InfoMatrix(value, "fisher")
    panels = pair.space.panels
    prev = None
    for _ in range(doublings):
        panels *= 2
        finer = at(panels)
        diff = float(np.abs(finer - value).max())
        value = finer
        if not np.all(np.isfinite(value)):
            break
        if diff <= 1e-9 * max(float(np.abs(value).max()), 1e-300) or diff <= 1e-13:
            return InfoMatrix(0.5 * (value + value.T), "fisher")
        if prev is not None and prev > 0 and diff / prev > 0.85:
            break
        prev = diff
    else:
        return InfoMatrix(0.5 * (value + value.T), "fisher")
    return InfoMatrix(np.full_like(value, math.inf), "fisher", divergent=True)


def score(pair: EscortPair, theta, k: int) -> RandomVariable:
    """X_k = (1/P_theta) dp_theta/dtheta^k on the escort support, 0 elsewhere."""
    th = as_theta(theta, pair.n)

    def fn(x):
        P = np.asarray(pair.escort(th, x), dtype=float)
        dp = pair.base_derivative(th, k, x)
        off = P <= 0
        return np.where(off, 0.0, dp / np.where(off, 1.0, P))

    return RandomVariable(fn, f"X_{k}")


def score_derivative(pair: EscortPair, theta, k: int, l: int) -> RandomVariable:
    """d X_k / d theta^l at fixed sample points."""
    th = as_theta(theta, pair.n)
    return RandomVariable(lambda x: _numdiff.partial(lambda t: score(pair, t, k)(x), th, l), f"dX_{k}/dtheta_{l}")


def inner(pair: EscortPair, theta, A: RandomVariable, B: RandomVariable) -> float:
    """<A, B>_theta = F_theta[A B] under the escort."""
    th = as_theta(theta, pair.n)
    x, w = pair.nodes(th)
    P = np.asarray(pair.escort(th, x), dtype=float)
    return float(w @ (P * A(x) * B(x)))


def regularity_residual(pair: EscortPair, theta) -> np.ndarray:
    """Component k is F_theta[X_k] = int over the escort support of dp/dtheta^k."""
    th = as_theta(theta, pair.n)
    bps = tuple(pair.breakpoints(th))
    x, w = pair.space.nodes(bps)
    P = np.asarray(pair.escort(th, x), dtype=float)
    dp = _derivatives(pair, th, x)
    return (dp * (P > 0)) @ w


def _escort_moments(pair: EscortPair, est: Estimator, theta: np.ndarray):
    x, w = pair.nodes(theta)
    P = np.asarray(pair.escort(theta, x), dtype=float)
    C = est(x)
    first = C @ (w * P)
    second = (C * (w * P)) @ C.T
    return first, second


def _base_moments(pair: EscortPair, est: Estimator, theta: np.ndarray):
    x, w = pair.nodes(theta)
    p = np.asarray(pair.base(theta, x), dtype=float)
    C = est(x)
    return C @ (w * p), (C * (w * p)) @ C.T


def _scale_hessian(pair: EscortPair, est: Estimator, theta: np.ndarray) -> np.ndarray:
    """H[k, l] = d E_theta c_k / d theta^l, the Hessian of the estimator's scale function."""
    return _numdiff.jacobian(lambda t: _base_moments(pair, est, t)[0], theta)


def _sides(cov: np.ndarray, H: np.ndarray, info: np.ndarray, u, v) -> CrbSides:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    den_l = float(u @ H @ v) ** 2
    den_r = float(v @ info @ v)
    if den_l <= 1e-300:
        raise ZeroDenominator("u.H.v vanishes", quantity="u.d2F.v")
    if den_r <= 1e-300:
        raise ZeroDenominator("v.g.v vanishes", quantity="v.g.v")
    return CrbSides(float(u @ cov @ u) / den_l, 1.0 / den_r)


def crb_sides(pair: EscortPair, est: Estimator, theta, u, v) -> CrbSides:
    """Both sides of the generalized bound: escort variance over squared slope vs 1/(v g v)."""
    th = as_theta(theta, pair.n)
    first, second = _escort_moments(pair, est, th)
    cov = second - np.outer(first, first)
    H = _scale_hessian(pair, est, th)
    return _sides(cov, H, g_matrix(pair, th).entries, u, v)


def classical_crb_sides(pair: EscortPair | PhiFamily, est: Estimator, theta, u, v) -> CrbSides:
    """The usual bound with base-density moments and Fisher information."""
    if isinstance(pair, PhiFamily):
        pair = pair.pair()
    th = as_theta(theta, pair.n)
    fisher = fisher_matrix(pair, th)
    if fisher.divergent:
        raise DivergentIntegral("Fisher information diverges; the classical bound is empty", quantity="fisher")
    first, second = _base_moments(pair, est, th)
    cov = second - np.outer(first, first)
    H = _scale_hessian(pair, est, th)
    return _sides(cov, H, fisher.entries, u, v)


def project(pair: EscortPair, theta, A: RandomVariable) -> RandomVariable:
    """pi A = A - g^{kl} <X_k, A> X_l - F A: removes the tangent directions and the mean."""
    th = as_theta(theta, pair.n)
    x, w, P, X = _score_on_nodes(pair, th)
    g = InfoMatrix((X * (w * P)) @ X.T, "generalized")
    if g.condition > SINGULAR_CONDITION:
        raise SingularMetric(f"metric condition number {g.condition:.3g}", quantity="cond(g)", tolerance=SINGULAR_CONDITION)
    a = A(x)
    mean = float(w @ (P * a))
    coef = g.inverse() @ (X @ (w * P * a))
    scores = [score(pair, th, k) for k in range(pair.n)]

    def fn(y):
        out = A(y) - mean
        for c, s in zip(coef, scores):
            out = out - c * s(y)
        return out

    return RandomVariable(fn, f"pi({A.label})")


def projection_report(pair: EscortPair, theta, A: RandomVariable) -> dict:
    """Mean, inner products with the scores and the escort norm of pi A."""
    th = as_theta(theta, pair.n)
    B = project(pair, th, A)
    x, w = pair.nodes(th)
    P = np.asarray(pair.escort(th, x), dtype=float)
    b = B(x)
    on = P > 0
    X = [score(pair, th, k)(x) for k in range(pair.n)]
    return {
        "mean": float(w @ (P * b)),
        "inner": [float(w @ (P * b * xk)) for xk in X],
        "norm": math.sqrt(max(float(w @ (P * b * b)), 0.0)),
        "sup": float(np.abs(b[on]).max()) if on.any() else 0.0,
    }


# ---------------------------------------------------------------------------
# Dual coordinates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualPoint:
    theta: np.ndarray
    eta: np.ndarray
    F: float
    E: float

    @property
    def legendre_gap(self) -> float:
        return float(self.F + self.E - self.theta @ self.eta)


@dataclass(frozen=True)
class DualityResiduals:
    grad_F: np.ndarray
    grad_I: np.ndarray
    jacobian: np.ndarray

    def norms(self) -> dict:
        return {
            "grad_F": float(np.abs(self.grad_F).max()),
            "grad_I": float(np.abs(self.grad_I).max()),
            "jacobian": float(np.abs(self.jacobian).max()),
        }


def _entropy_at(fam: PhiFamily, theta: np.ndarray) -> float:
    return information_content(fam.calc, fam.pdf(theta), check=False)


def dual_coordinates(fam: PhiFamily, theta) -> DualPoint:
    """eta = E_theta c, E = I_phi(p_theta) and F = theta.eta - E (additive constant zero)."""
    th = as_theta(theta, fam.n)
    eta = fam.mean(th)
    E = _entropy_at(fam, th)
    return DualPoint(th, eta, float(th @ eta - E), E)


def _scale_function(fam: PhiFamily, theta: np.ndarray) -> float:
    return float(theta @ fam.mean(theta) - _entropy_at(fam, theta))


def duality_residuals(fam: PhiFamily, theta) -> DualityResiduals:
    """Residuals of dF/dtheta = eta, dI/deta = theta and d eta/d theta = -g/Z."""
    th = as_theta(theta, fam.n)
    eta = fam.mean(th)
    grad_F = _numdiff.jacobian(lambda t: np.array([_scale_function(fam, t)]), th)[0] - eta
    J = _numdiff.jacobian(fam.mean, th)
    dI = _numdiff.jacobian(lambda t: np.array([_entropy_at(fam, t)]), th)[0]
    grad_I = np.linalg.solve(J.T, dI) - th
    g = g_matrix(fam.pair(), th).entries
    jac = J + g / fam.zet(th)
    return DualityResiduals(grad_F, grad_I, jac)


def _path_integral(fam: PhiFamily, start: np.ndarray, stop: np.ndarray, order: int) -> float:
    """int of eta . d theta along the segment from ``start`` to ``stop``.

    The segment is cut into more Gauss-Legendre panels when it is long
    compared with its distance from the origin, where eta changes fastest.
    """
    delta = stop - start
    length = float(np.linalg.norm(delta))
    if length == 0:
        return 0.0
    near = max(0.5 * min(float(np.linalg.norm(start)), float(np.linalg.norm(stop))), 0.25)
    panels = min(8, max(1, math.ceil(length / near)))
    s0, w0 = gauss_legendre(order)
    total = 0.0
    for j in range(panels):
        a, b = j / panels, (j + 1) / panels
        s = a + 0.5 * (b - a) * (s0 + 1.0)
        total += 0.5 * (b - a) * sum(wi * float(fam.mean(start + si * delta) @ delta) for si, wi in zip(s, w0))
    return total


def legendre_residual(fam: PhiFamily, theta, reference, order: int = 8) -> float:
    """F(theta) + E(theta) - theta.eta with F obtained by integrating eta from ``reference``.

    F at the reference point comes from the dual relation; away from it F is
    the line integral of eta, so the residual checks the relation between
    the moment map and the entropy at ``theta``.
    """
    th = as_theta(theta, fam.n)
    ref = as_theta(reference, fam.n)
    F = _scale_function(fam, ref) + _path_integral(fam, ref, th, order)
    return float(F + _entropy_at(fam, th) - th @ fam.mean(th))


def legendre_sweep(fam: PhiFamily, grid, order: int = 8) -> np.ndarray:
    """Legendre residuals along a path through ``grid`` with F integrated from its first point.

    Same quantity as :func:`legendre_residual` with ``reference=grid[0]``,
    but F is accumulated segment by segment, so the cost is linear in the
    number of points.
    """
    points = [as_theta(t, fam.n) for t in grid]
    if not points:
        return np.empty(0)
    F = _scale_function(fam, points[0])
    out = [0.0]  # F at the first point comes from the dual relation itself
    for prev, th in zip(points[:-1], points[1:]):
        F += _path_integral(fam, prev, th, order)
        out.append(float(F + _entropy_at(fam, th) - th @ fam.mean(th)))
    return np.array(out)


def hessian_of_scale(fam: PhiFamily, theta) -> np.ndarray:
    """d^2 F / d theta^k d theta^l as the Jacobian of eta."""
    th = as_theta(theta, fam.n)
    return _numdiff.jacobian(fam.mean, th)


def covariance_identity_residual(fam: PhiFamily, theta) -> float:
    """max |d^2 F - (-Z Cov_F(c))|."""
    th = as_theta(theta, fam.n)
    first, second = fam.escort_moments(th)
    cov = second - np.outer(first, first)
    return float(np.abs(hessian_of_scale(fam, th) + fam.zet(th) * cov).max())
