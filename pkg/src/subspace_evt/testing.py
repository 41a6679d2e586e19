"""Decision layer: Gumbel-calibrated subspace tests and the Frobenius baseline."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from .debias import DebiasInput, PluginCalibration, plugin_calibration
from .errors import InvalidInputError, MisalignedHypothesesError
from .evt import EvtCalibration, aligned_distance, calibrate, gumbel_quantile, gumbel_sf
from .linalg import as_matrix, is_orthonormal, sign_align, truncated_svd, two_inf_norm

CONSISTENT_RATIO = 10.0
INCONSISTENT_RATIO = 0.1


@dataclass
class TestReport:
    statistic: float
    critical_value: float
    alpha: float
    p_value: float
    decision: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestReport":
        return cls(**d)

    @property
    def rejected(self) -> bool:
        return self.decision == "reject"


@dataclass(frozen=True)
class OracleMode:
    """Known population singular values ``s``, right factor ``V`` and noise covariance ``D``.

    ``D`` is a scalar variance or the diagonal of the row covariance.
    """

    s: Any
    V: Any = None
    D: Any = 1.0


@dataclass(frozen=True)
class PluginMode:
    sigma: float


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")


def gumbel_report(statistic: float, alpha: float, diagnostics: dict[str, Any]) -> TestReport:
    _check_alpha(alpha)
    crit = gumbel_quantile(1 - alpha)
    return TestReport(
        statistic=float(statistic),
        critical_value=crit,
        alpha=alpha,
        p_value=float(gumbel_sf(statistic)),
        decision="reject" if statistic >= crit else "accept",
        diagnostics=diagnostics,
    )


def test_subspace(Mhat, r: int, U0, alpha: float, mode: OracleMode | PluginMode, *, C_mu: float | None = None) -> TestReport:
    """Test H0: U = U0 with the two-to-infinity statistic at level ``alpha``."""
    _check_alpha(alpha)
    Mhat = as_matrix(Mhat, "Mhat")
    U0 = as_matrix(U0, "U0")
    n, m = Mhat.shape
    if U0.shape != (n, r):
        raise InvalidInputError(f"U0 has shape {U0.shape}, expected ({n}, {r})")
    screen = validate_hypothesis(U0, C_mu if C_mu is not None else 1e300)
    triple = truncated_svd(Mhat, r)
    dist = aligned_distance(triple.U, U0)
    if isinstance(mode, OracleMode):
        cal: EvtCalibration | PluginCalibration = calibrate(mode.s, n, mode.V, mode.D)
        kind, log_A = "oracle", cal.log_A
    elif isinstance(mode, PluginMode):
        cal = plugin_calibration(DebiasInput(triple.s, n, m, mode.sigma))
        kind, log_A = "plugin", cal.log_A
    else:
        raise InvalidInputError(f"unknown mode {mode!r}")
    diagnostics = {
        "kind": kind,
        "two_inf_distance": dist,
        "a_n": cal.a_n,
        "b_n": cal.b_n,
        "log_A": log_A,
        "in_parameter_space": screen["in_parameter_space"],
    }
    return gumbel_report(cal.standardize(dist), alpha, diagnostics)


test_subspace.__test__ = False


def projection_distance_sq(A, B) -> float:
    """||A A^T - B B^T||_F^2 for orthonormal A, B (computed without n x n products)."""
    A, B = as_matrix(A), as_matrix(B)
    cross = A.T @ B
    return float(A.shape[1] + B.shape[1] - 2 * np.sum(cross**2))


def frobenius_from_frames(Uhat, Vhat, U0, V0, s, sigma: float = 1.0) -> float:
    """Standardized Frobenius projection-distance statistic (standard normal under H0).

    ``s`` holds the r signal singular values (population or de-biased); a
    scalar is broadcast to all r directions. With n = m and r = 1 this is
    ``(d_U + d_V - 4(n-1)/s^2) / (sqrt(16(n-1))/s^2)``.
    """
    Uhat, Vhat, U0, V0 = (as_matrix(X) for X in (Uhat, Vhat, U0, V0))
    n, r = U0.shape
    m = V0.shape[0]
    if Uhat.shape != (n, r) or Vhat.shape != (m, r) or V0.shape[1] != r:
        raise InvalidInputError("dimension mismatch between estimated and hypothesized frames")
    s = np.broadcast_to(np.asarray(s, dtype=float), (r,)) / sigma
    dof = n + m - 2 * r
    num = projection_distance_sq(Uhat, U0) + projection_distance_sq(Vhat, V0) - 2 * dof * np.sum(s**-2.0)
    return float(num / (math.sqrt(8 * dof) * math.sqrt(np.sum(s**-4.0))))


def frobenius_statistic(Mhat, U0, V0, stilde_r, r: int, sigma: float = 1.0) -> float:
    """Frobenius statistic of the rank-``r`` SVD of ``Mhat`` against ``(U0, V0)``."""
    triple = truncated_svd(Mhat, r)
    return frobenius_from_frames(triple.U, triple.V, U0, V0, stilde_r, sigma)


def frobenius_test(Mhat, r: int, U0, V0, alpha: float, sigma: float, s=None) -> TestReport:
    """Frobenius baseline; de-biased ``s_r`` is used when ``s`` is not given."""
    _check_alpha(alpha)
    Mhat = as_matrix(Mhat, "Mhat")
    n, m = Mhat.shape
    triple = truncated_svd(Mhat, r)
    if s is None:
        s = plugin_calibration(DebiasInput(triple.s, n, m, sigma)).stilde[-1]
    stat = frobenius_from_frames(triple.U, triple.V, U0, V0, s, sigma)
    crit = float(stats.norm.ppf(1 - alpha))
    return TestReport(
        statistic=stat,
        critical_value=crit,
        alpha=alpha,
        p_value=float(stats.norm.sf(stat)),
        decision="reject" if stat >= crit else "accept",
        diagnostics={"kind": "frobenius", "s_r": float(np.min(s))},
    )


def row_discrepancy(U1, U0, tol: float = 1e-12) -> int:
    """Number of rows on which aligned frames differ."""
    U1, U0 = as_matrix(U1, "U1"), as_matrix(U0, "U0")
    if U1.shape != U0.shape:
        raise InvalidInputError("frames must have the same shape")
    R = sign_align(U0, U1)
    if np.max(np.abs(R - np.eye(R.shape[0]))) > 1e-8:
        raise MisalignedHypothesesError("sgn(U0^T U1) != I; align U1 first")
    return int(np.sum(np.any(np.abs(U1 - U0) > tol, axis=1)))


@dataclass(frozen=True)
class PowerRegime:
    d_n: float
    a_tilde_n: float
    ratio: float
    classification: str


def classify_power_regime(U0, U1, a_tilde_n: float) -> PowerRegime:
    if a_tilde_n <= 0:
        raise InvalidInputError("a_tilde_n must be positive")
    d = two_inf_norm(as_matrix(U0) - as_matrix(U1))
    ratio = d / a_tilde_n
    if ratio >= CONSISTENT_RATIO:
        label = "consistent"
    elif ratio <= INCONSISTENT_RATIO:
        label = "inconsistent"
    else:
        label = "boundary"
    return PowerRegime(d, a_tilde_n, ratio, label)


def validate_hypothesis(U0, C_mu: float) -> dict[str, Any]:
    """Check membership of ``U0`` in the delocalized parameter space.

    Warns (never raises) when ``||U0||_{2,inf}`` exceeds ``sqrt(C_mu r / n)``.
    """
    U0 = as_matrix(U0, "U0")
    n, r = U0.shape
    if C_mu < 1:
        raise InvalidInputError("C_mu must be at least 1")
    norm = two_inf_norm(U0)
    lower, upper = math.sqrt(r / n), math.sqrt(C_mu * r / n)
    orthonormal = is_orthonormal(U0)
    inside = bool(orthonormal and norm <= upper * (1 + 1e-12))
    if not inside:
        warnings.warn(
            f"U0 is outside the parameter space: ||U0||_2,inf = {norm:.4g} > {upper:.4g}"
            if orthonormal
            else "U0 does not have orthonormal columns",
            stacklevel=2,
        )
    return {
        "two_inf_norm": norm,
        "lower_bound": lower,
        "upper_bound": upper,
        "mu": n / r * norm**2,
        "orthonormal": orthonormal,
        "lower_bound_ok": bool(norm >= lower - 1e-12),
        "in_parameter_space": inside,
    }
