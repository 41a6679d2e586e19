"""Extreme-value calibration of the maximum row norm.

The rows of ``E V S^{-1}`` are iid Gaussian with covariance
``S^{-1} V^T D V S^{-1}``; their squared norm has MGF ``det(I - tP)^{-1/2}``
with ``P = 2 S^{-2} V^T D V``. The eigenvalues of ``P`` fix a generalized
gamma reference tail, normalizing sequences ``(a_n, b_n)`` and the tail
constant ``A`` that together standardize the two-to-infinity distance to a
standard Gumbel limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import AmbiguousMultiplicityError, InvalidInputError
from .linalg import as_matrix, sign_align, two_inf_norm

MULTIPLICITY_TOL = 1e-9


@dataclass(frozen=True)
class EvtCalibration:
    lambdas: np.ndarray
    ell: int
    A: float
    a_n: float
    b_n: float
    n: int

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        object.__setattr__(self, "lambdas", lam)
        if not 1 <= self.ell <= lam.size:
            raise InvalidInputError("ell must lie in [1, r]")
        if not 0 < self.A <= 1:
            raise InvalidInputError(f"A = {self.A} outside (0, 1]")
        if not self.a_n > 0:
            raise InvalidInputError("a_n must be positive")

    @property
    def log_A(self) -> float:
        return math.log(self.A)

    def standardize(self, distance: float) -> float:
        return (distance - self.b_n) / self.a_n + self.log_A


@dataclass(frozen=True)
class GenGamma:
    """GG(sqrt(lambda1), ell, 2): a sqrt(lambda1/2)-scaled chi with ell dof."""

    lambda1: float
    ell: int

    @property
    def scale(self) -> float:
        return math.sqrt(self.lambda1)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        lam, ell = self.lambda1, self.ell
        logc = math.log(2) - (ell / 2) * math.log(lam) - special.gammaln(ell / 2)
        with np.errstate(divide="ignore"):
            out = np.exp(logc + (ell - 1) * np.log(np.where(x > 0, x, 1.0)) - x**2 / lam)
        return np.where(x > 0, out, 0.0)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, special.gammaincc(self.ell / 2, np.maximum(x, 0) ** 2 / self.lambda1), 1.0)

    def sf_leading_term(self, x):
        """Leading term of the large-x tail expansion (no remainder)."""
        lam, ell = self.lambda1, self.ell
        x = np.asarray(x, dtype=float)
        return lam ** (1 - ell / 2) / special.gamma(ell / 2) * x ** (ell - 2) * np.exp(-(x**2) / lam)

    def remainder_bound(self, x):
        """|r(x)| bound: |lambda1 (ell-2)| / (2 x^2 - lambda1 (ell-2))."""
        c = self.lambda1 * (self.ell - 2)
        x = np.asarray(x, dtype=float)
        return abs(c) / (2 * x**2 - c)


def gengamma_survival(x, dist: GenGamma):
    """Exact survival via the regularized upper incomplete gamma Q(ell/2, x^2/lambda1)."""
    out = dist.sf(x)
    return float(out) if np.ndim(out) == 0 else out


def compute_lambdas(s, V=None, D=1.0) -> np.ndarray:
    """Eigenvalues of ``P = 2 S^{-2} V^T D V``, descending.

    ``D`` is either a scalar (``sigma^2 I``, in which case ``V`` is not
    needed and the closed form ``2 sigma^2 / s_j^2`` is returned) or the
    diagonal of the noise covariance.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s <= 0):
        raise InvalidInputError("singular values must be positive")
    D = np.asarray(D, dtype=float)
    if D.ndim == 0:
        if D <= 0:
            raise InvalidInputError("noise variance must be positive")
        return np.sort(2.0 * float(D) / s**2)[::-1]
    V = as_matrix(V, "V")
    if V.shape != (D.size, s.size):
        raise InvalidInputError(f"V has shape {V.shape}, expected ({D.size}, {s.size})")
    if np.any(D <= 0):
        raise InvalidInputError("noise variances must be positive")
    G = (V * D[:, None]).T @ V
    # symmetric similar matrix 2 S^{-1} G S^{-1}
    sym = 2.0 * G / np.outer(s, s)
    lam = np.linalg.eigvalsh((sym + sym.T) / 2)[::-1]
    if lam[-1] <= 0:
        raise ArithmeticError(f"nonpositive eigenvalue {lam[-1]:.3e} of P")
    return lam


def detect_multiplicity(lambdas, rel_tol: float = MULTIPLICITY_TOL) -> int:
    lam = np.asarray(lambdas, dtype=float)
    ratio = lam / lam[0]
    ell = int(np.sum(ratio >= 1 - rel_tol))
    ambiguous = (ratio > 1 - 10 * rel_tol) & (ratio < 1 - rel_tol)
    if np.any(ambiguous):
        raise AmbiguousMultiplicityError(
            f"eigenvalue ratios {ratio[ambiguous]} fall inside the tolerance band below 1"
        )
    return ell


def log_tail_constant(lambdas, ell: int) -> float:
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 1 or ell >= lam.size:
        return 0.0
    return float(0.5 * np.sum(np.log1p(-lam[ell:] / lam[0])))


def tail_constant_A(lambdas, ell: int) -> float:
    """prod_{j > ell} (1 - lambda_j / lambda_1)^{1/2}; 1 when r = 1 or ell = r."""
    return math.exp(log_tail_constant(lambdas, ell))


def normalizing_sequences(lambda1: float, ell: int, n: int) -> tuple[float, float]:
    if n < 3:
        raise InvalidInputError("normalizing sequences need n >= 3")
    if lambda1 <= 0 or ell < 1:
        raise InvalidInputError("need lambda1 > 0 and ell >= 1")
    L = math.log(n)
    root = math.sqrt(lambda1)
    a_n = root / (2 * math.sqrt(L))
    b_n = (
        root * math.sqrt(L)
        + root * (ell - 2) * math.log(L) / (4 * math.sqrt(L))
        - root * special.gammaln(ell / 2) / (2 * math.sqrt(L))
    )
    return a_n, float(b_n)


def calibrate(s, n: int, V=None, D=1.0, rel_tol: float = MULTIPLICITY_TOL) -> EvtCalibration:
    """Full oracle calibration from population singular values and noise covariance."""
    lam = compute_lambdas(s, V, D)
    ell = detect_multiplicity(lam, rel_tol)
    a_n, b_n = normalizing_sequences(lam[0], ell, n)
    return EvtCalibration(lam, ell, tail_constant_A(lam, ell), a_n, b_n, int(n))


def aligned_distance(Uhat, U0) -> float:
    """||Uhat sgn(Uhat^T U0) - U0||_{2,inf}."""
    Uhat, U0 = as_matrix(Uhat, "Uhat"), as_matrix(U0, "U0")
    return two_inf_norm(Uhat @ sign_align(Uhat, U0) - U0)


def oracle_statistic(Uhat, U0, cal: EvtCalibration) -> float:
    return cal.standardize(aligned_distance(Uhat, U0))


def first_order_residual_ratio(Uhat, U, E, V, s) -> float:
    """||Uhat R_U - U - E V S^{-1}||_{2,inf} / ||E V S^{-1}||_{2,inf}."""
    Uhat, U = as_matrix(Uhat, "Uhat"), as_matrix(U, "U")
    lead = (as_matrix(E, "E") @ as_matrix(V, "V")) / np.asarray(s, dtype=float)
    resid = Uhat @ sign_align(Uhat, U) - U - lead
    return two_inf_norm(resid) / two_inf_norm(lead)


# -- Gumbel reference --------------------------------------------------------


def gumbel_cdf(x):
    return np.exp(-np.exp(-np.asarray(x, dtype=float)))


def gumbel_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-x - np.exp(-x))


def gumbel_quantile(q):
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)):
        raise InvalidInputError("quantile level must lie in (0, 1)")
    out = -np.log(-np.log(q))
    return float(out) if out.ndim == 0 else out


def gumbel_sf(x):
    return -np.expm1(-np.exp(-np.asarray(x, dtype=float)))


def ks_distance_to_gumbel(samples) -> float:
    """One-sample Kolmogorov-Smirnov distance to the standard Gumbel CDF."""
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    if x.size < 2:
        raise InvalidInputError("need at least 2 finite samples")
    return float(stats.kstest(x, gumbel_cdf).statistic)
