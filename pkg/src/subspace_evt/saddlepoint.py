"""Saddle-point machinery for the squared row norm and an independent tail oracle.

``X^2`` is distributed as ``sum_j (lambda_j / 2) z_j^2`` with iid standard
normal ``z_j``; its CGF is ``K(t) = -1/2 sum_j log(1 - lambda_j t)`` for
``t < 1/lambda_1``. The exact distribution is obtained by Imhof's inversion
of the characteristic function, which is used to certify that the
generalized gamma reference tail over the true tail converges to ``A``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .errors import InvalidInputError, NonConvergenceError, QuadratureError
from .evt import GenGamma, detect_multiplicity, gengamma_survival, tail_constant_A

QUAD_ABS_TOL = 1e-8


@dataclass(frozen=True)
class QuadFormSpec:
    lambdas: np.ndarray
    ell: int | None = None

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        if lam.size == 0 or np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise InvalidInputError("lambdas must be positive and descending")
        object.__setattr__(self, "lambdas", lam)
        if self.ell is None:
            object.__setattr__(self, "ell", detect_multiplicity(lam))
        elif not 1 <= self.ell <= lam.size:
            raise InvalidInputError("ell must lie in [1, r]")

    @property
    def lambda1(self) -> float:
        return float(self.lambdas[0])

    @property
    def weights(self) -> np.ndarray:
        """Chi-square weights: X^2 = sum_j weights_j z_j^2."""
        return self.lambdas / 2

    @property
    def mean(self) -> float:
        return float(np.sum(self.lambdas) / 2)

    @property
    def A(self) -> float:
        return tail_constant_A(self.lambdas, self.ell)

    def scaled(self, c: float) -> "QuadFormSpec":
        return QuadFormSpec(self.lambdas * c, self.ell)


def _check_domain(t, spec: QuadFormSpec) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t * spec.lambda1 >= 1):
        raise InvalidInputError(f"t must be below 1/lambda1 = {1 / spec.lambda1:.6g}")
    return t


def cgf(t, spec: QuadFormSpec):
    t = _check_domain(t, spec)
    out = -0.5 * np.sum(np.log1p(-np.multiply.outer(t, spec.lambdas)), axis=-1)
    return float(out) if out.ndim == 0 else out


def cgf_d1(t, spec: QuadFormSpec):
    t = _check_domain(t, spec)
    lam = spec.lambdas
    out = 0.5 * np.sum(lam / (1 - np.multiply.outer(t, lam)), axis=-1)
    return float(out) if out.ndim == 0 else out


def cgf_d2(t, spec: QuadFormSpec):
    t = _check_domain(t, spec)
    lam = spec.lambdas
    out = 0.5 * np.sum(lam**2 / (1 - np.multiply.outer(t, lam)) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out


def saddle_point(x: float, spec: QuadFormSpec, max_iter: int = 200) -> float:
    """Unique root of ``K'(t) = x`` on ``t < 1/lambda_1``.

    Newton steps on the convex increasing ``K'`` inside a maintained bracket,
    falling back to bisection whenever a step leaves it.
    """
    if not x > 0:
        raise InvalidInputError("saddle point needs x > 0")
    lam1 = spec.lambda1
    if spec.lambdas.size == 1:
        return 1 / lam1 - 1 / (2 * x)
    hi = 1 / lam1 - 1e-14 / lam1
    lo = -1e3 / lam1
    while cgf_d1(lo, spec) > x:
        lo *= 2
        if lo < -1e300:
            raise NonConvergenceError("could not bracket the saddle point")
    if cgf_d1(hi, spec) < x:
        raise NonConvergenceError("x is beyond the resolvable range near the pole")
    t = min(max(0.0, lo), hi) if x > spec.mean else lo / 2
    tol = 1e-13 * x
    for _ in range(max_iter):
        f = cgf_d1(t, spec) - x
        if abs(f) <= tol:
            return float(t)
        if f > 0:
            hi = t
        else:
            lo = t
        step = t - f / cgf_d2(t, spec)
        t = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(t), 1 / lam1):
            return float(t)
    raise NonConvergenceError(f"saddle point iteration did not converge for x = {x}")


def saddlepoint_density(x: float, spec: QuadFormSpec) -> float:
    """Daniels' approximation exp(K(t) - t x) / sqrt(2 pi K''(t)) to the density of X^2."""
    t = saddle_point(x, spec)
    return math.exp(cgf(t, spec) - t * x) / math.sqrt(2 * math.pi * cgf_d2(t, spec))


def _imhof_sf(y: float, w: np.ndarray, tol: float = QUAD_ABS_TOL) -> tuple[float, float]:
    """P(sum_j w_j z_j^2 > y) by Imhof's formula; returns (value, error estimate).

    QAWF occasionally reports a poor error estimate for one particular split
    point; the head/tail split is then moved and the best attempt kept.
    """
    best = (math.nan, math.inf)
    for factor in (1.0, 1.37, 0.73, 2.11):
        value, err = _imhof_attempt(y, w, 50.0 * factor)
        if err < best[1]:
            best = (value, err)
        if err <= tol:
            break
    return best


def _imhof_attempt(y: float, w: np.ndarray, cycles: float) -> tuple[float, float]:
    omega = y / 2

    def theta(u):
        return 0.5 * np.sum(np.arctan(w * u))

    def rho(u):
        return np.prod((1 + (w * u) ** 2) ** 0.25)

    def full(u):
        if u == 0:
            return 0.5 * np.sum(w) - omega
        return math.sin(theta(u) - omega * u) / (u * rho(u))

    def sin_part(u):
        return math.sin(theta(u)) / (u * rho(u))

    def cos_part(u):
        return math.cos(theta(u)) / (u * rho(u))

    cut = cycles / omega
    # geometric pieces keep each head segment smooth with few oscillations
    edges = [0.0]
    b = 1.0 / float(np.max(w))
    while b < cut:
        edges.append(b)
        b *= 2.0
    edges.append(cut)
    head = e0 = 0.0
    # QUADPACK warns when it cannot reach epsabs=1e-15; the returned error
    # estimates are checked against QUAD_ABS_TOL by the caller instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(full, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)
            head += v
            e0 += e
        # sin(theta - omega u) = sin(theta) cos(omega u) - cos(theta) sin(omega u)
        tail_c, e1 = integrate.quad(sin_part, cut, np.inf, weight="cos", wvar=omega, epsabs=1e-15, limlst=200)
        tail_s, e2 = integrate.quad(cos_part, cut, np.inf, weight="sin", wvar=omega, epsabs=1e-15, limlst=200)
    value = 0.5 + (head + tail_c - tail_s) / math.pi
    return value, (e0 + e1 + e2) / math.pi


def chernoff_bound(y: float, spec: QuadFormSpec) -> float:
    """exp(K(t) - t y) at the saddle point.

    Bounds P(X^2 > y) for y above the mean and P(X^2 <= y) below it.
    """
    try:
        t = saddle_point(y, spec)
    except NonConvergenceError:
        return 0.0
    return math.exp(min(0.0, cgf(t, spec) - t * y))


def quadform_sf(y: float, spec: QuadFormSpec) -> float:
    """P(X^2 > y) by characteristic-function inversion."""
    if y <= 0:
        return 1.0
    y = float(y)
    bound = chernoff_bound(y, spec)
    lo, hi = (0.0, bound) if y >= spec.mean else (1.0 - bound, 1.0)
    value, err = _imhof_sf(y, spec.weights)
    # far from the mean the bound alone pins the answer to within tolerance
    if hi - lo > QUAD_ABS_TOL and (not np.isfinite(value) or err > QUAD_ABS_TOL):
        raise QuadratureError(f"Imhof quadrature error estimate {err:.3e} exceeds {QUAD_ABS_TOL}")
    if not np.isfinite(value):
        value = 0.5 * (lo + hi)
    return float(min(hi, max(lo, value)))


def exact_cdf_quadform(x: float, spec: QuadFormSpec) -> float:
    """P(X^2 <= x)."""
    if x < 0:
        raise InvalidInputError("x must be nonnegative")
    return 1.0 - quadform_sf(x, spec)


def quadform_quantile(q: float, spec: QuadFormSpec) -> float:
    """Quantile of X^2 at level ``q`` from the inverted CDF."""
    if not 0 < q < 1:
        raise InvalidInputError("q must lie in (0, 1)")
    target = 1 - q
    hi = max(spec.mean, spec.lambda1)
    while quadform_sf(hi, spec) > target:
        hi *= 2
    return float(brentq(lambda y: quadform_sf(y, spec) - target, 0.0, hi, xtol=1e-14, rtol=1e-13))


def row_norm_quantiles(spec: QuadFormSpec, levels) -> np.ndarray:
    """Quantiles of X = sqrt(X^2) at the given levels."""
    return np.sqrt([quadform_quantile(q, spec) for q in levels])


def tail_ratio_to_A(spec: QuadFormSpec, xs) -> np.ndarray:
    """Ratios P(H > x) / P(X > x) on a grid of row-norm values ``xs``."""
    xs = np.asarray(xs, dtype=float)
    if np.any(np.diff(xs) <= 0):
        raise InvalidInputError("grid must be strictly ascending")
    ref = GenGamma(spec.lambda1, spec.ell)
    return np.array([gengamma_survival(x, ref) / quadform_sf(x * x, spec) for x in xs])
