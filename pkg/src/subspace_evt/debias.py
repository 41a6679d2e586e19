"""De-biased singular values and the data-driven plug-in statistic.

Under iid N(0, sigma^2) noise a spike ``s`` produces a sample singular
value near ``theta(s) = sqrt((sigma^2 N + s^2)(c sigma^2 N + s^2)) / s``
with ``N = max(n, m)`` and ``c = min(n/m, m/n)``. ``debias_singular_values``
inverts that map in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BelowBulkEdgeError, InvalidInputError
from .evt import aligned_distance, log_tail_constant, normalizing_sequences


@dataclass(frozen=True)
class DebiasInput:
    shat: np.ndarray
    n: int
    m: int
    sigma: float
    c: float | None = None

    def __post_init__(self):
        shat = np.atleast_1d(np.asarray(self.shat, dtype=float))
        if np.any(shat <= 0) or np.any(np.diff(shat) > 0):
            raise InvalidInputError("sample singular values must be positive and descending")
        if self.n < 1 or self.m < 1:
            raise InvalidInputError("dimensions must be positive")
        if self.sigma < 0:
            raise InvalidInputError("sigma must be nonnegative")
        object.__setattr__(self, "shat", shat)
        if self.c is None:
            object.__setattr__(self, "c", min(self.n / self.m, self.m / self.n))
        elif not 0 < self.c <= 1:
            raise InvalidInputError("aspect ratio c must lie in (0, 1]")

    @property
    def N(self) -> int:
        return max(self.n, self.m)

    @property
    def bulk_edge_sq(self) -> float:
        """Smallest ``shat^2`` the inverse map accepts: (1 + sqrt(c))^2 sigma^2 N."""
        return (1 + math.sqrt(self.c)) ** 2 * self.sigma**2 * self.N


def theta_location(s, inp: DebiasInput):
    """Deterministic location of the sample singular value for a spike ``s``."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise InvalidInputError("s must be positive")
    k = inp.sigma**2 * inp.N
    out = np.sqrt((k + s**2) * (inp.c * k + s**2)) / s
    return float(out) if out.ndim == 0 else out


def debias_singular_values(inp: DebiasInput) -> np.ndarray:
    k = inp.sigma**2 * inp.N
    shift = inp.shat**2 - (1 + inp.c) * k
    disc = shift**2 - 4 * inp.c * k**2
    bad = np.flatnonzero((shift < 0) | (disc < 0))
    if bad.size:
        raise BelowBulkEdgeError(bad)
    return np.sqrt((shift + np.sqrt(disc)) / 2)


@dataclass(frozen=True)
class PluginCalibration:
    stilde: np.ndarray
    lambdas_tilde: np.ndarray
    a_n: float
    b_n: float
    A_tilde: float
    n: int

    @property
    def log_A(self) -> float:
        return math.log(self.A_tilde)

    def standardize(self, distance: float) -> float:
        return (distance - self.b_n) / self.a_n + self.log_A


def calibration_from_singular_values(stilde, sigma: float, n: int) -> PluginCalibration:
    """Plug-in calibration with multiplicity fixed at one (distinct singular values)."""
    stilde = np.atleast_1d(np.asarray(stilde, dtype=float))
    if sigma <= 0:
        raise InvalidInputError("plug-in calibration needs sigma > 0")
    # lambda_j = 2 sigma^2 / s_{r-j+1}^2, so descending lambdas come from ascending s
    lam = 2.0 * sigma**2 / stilde[::-1] ** 2
    a_n, b_n = normalizing_sequences(lam[0], 1, n)
    return PluginCalibration(stilde, lam, a_n, b_n, math.exp(log_tail_constant(lam, 1)), int(n))


def plugin_calibration(inp: DebiasInput) -> PluginCalibration:
    return calibration_from_singular_values(debias_singular_values(inp), inp.sigma, inp.n)


def plugin_statistic(Uhat, U0, cal: PluginCalibration) -> float:
    return cal.standardize(aligned_distance(Uhat, U0))


def uncorrected_statistic(Uhat, U0, shat, sigma: float, n: int) -> float:
    """Plug-in pipeline with the raw sample singular values in place of de-biased ones."""
    return plugin_statistic(Uhat, U0, calibration_from_singular_values(shat, sigma, n))
