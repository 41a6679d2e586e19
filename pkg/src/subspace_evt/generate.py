"""Synthetic signal matrices, noise models and structured hypothesis pairs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidInputError, RankRequestError
from .linalg import SpectralTriple, as_matrix, is_orthonormal, qr_orthonormalize, two_inf_norm

# stream tags for Seed.generator
SIGNAL, NOISE, ALTERNATIVE, NULL_FRAME = 0, 1, 2, 3

NOISE_KINDS = ("iid_gaussian", "diagonal_gaussian", "student_t", "sbm_bernoulli", "sbm_poisson", "sbm_gaussian")


@dataclass(frozen=True)
class Seed:
    """Deterministic RNG stream keyed by (master, replicate_index, tag)."""

    master: int
    replicate_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master) < 2**64:
            raise InvalidInputError("master seed must be an unsigned 64-bit integer")
        if int(self.replicate_index) < 0:
            raise InvalidInputError("replicate_index must be nonnegative")

    def generator(self, tag: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master), spawn_key=(int(self.replicate_index), int(tag)))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, key: int) -> "Seed":
        """A new master seed for a sub-experiment (e.g. one grid cell)."""
        ss = np.random.SeedSequence(int(self.master), spawn_key=(2**32 + int(key),))
        return Seed(int(ss.generate_state(1, np.uint64)[0]), 0)

    def replicate(self, index: int) -> "Seed":
        return Seed(self.master, index)


@dataclass(frozen=True)
class NoiseSpec:
    """Tagged noise description.

    ``kind`` is one of :data:`NOISE_KINDS`. Gaussian and Student-t kinds use
    ``sigma`` (``sigmas`` for the diagonal case, sorted non-increasing on
    construction); SBM kinds use ``p`` (within block) and ``q`` (between).
    ``sbm_gaussian`` matches the first two moments of the Bernoulli case.
    """

    kind: str
    sigma: float = 1.0
    sigmas: tuple[float, ...] = ()
    nu: float | None = None
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidInputError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.kind == "diagonal_gaussian":
            sig = tuple(sorted((float(s) for s in self.sigmas), reverse=True))
            if not sig or min(sig) <= 0:
                raise InvalidInputError("diagonal_gaussian needs positive sigmas")
            object.__setattr__(self, "sigmas", sig)
        elif self.kind in ("iid_gaussian", "student_t"):
            if not self.sigma > 0:
                raise InvalidInputError("sigma must be positive")
        if self.kind == "student_t" and not (self.nu is not None and self.nu > 2):
            raise InvalidInputError("student_t requires nu > 2")
        if self.kind.startswith("sbm"):
            p, q = self.p, self.q
            if p is None or q is None or p <= 0 or q <= 0:
                raise InvalidInputError("SBM noise requires positive p and q")
            if self.kind in ("sbm_bernoulli", "sbm_gaussian") and not q <= p <= 1:
                raise InvalidInputError("Bernoulli SBM requires 0 < q <= p <= 1")

    @classmethod
    def iid_gaussian(cls, sigma: float = 1.0) -> "NoiseSpec":
        return cls("iid_gaussian", sigma=sigma)

    @classmethod
    def diagonal_gaussian(cls, sigmas) -> "NoiseSpec":
        return cls("diagonal_gaussian", sigmas=tuple(sigmas))

    @classmethod
    def student_t(cls, nu: float, sigma: float = 1.0) -> "NoiseSpec":
        return cls("student_t", sigma=sigma, nu=nu)

    @classmethod
    def sbm(cls, family: str, p: float, q: float) -> "NoiseSpec":
        return cls(f"sbm_{family}", p=p, q=q)

    @property
    def is_gaussian_iid(self) -> bool:
        return self.kind == "iid_gaussian"

    def column_variances(self, m: int, row_block: int = 0) -> np.ndarray:
        """Variances of the entries of one noise row (diagonal of D)."""
        if self.kind in ("iid_gaussian", "student_t"):
            return np.full(m, self.sigma**2)
        if self.kind == "diagonal_gaussian":
            if len(self.sigmas) != m:
                raise InvalidInputError(f"{len(self.sigmas)} sigmas for {m} columns")
            return np.asarray(self.sigmas) ** 2
        within = _block_labels(m) == row_block
        if self.kind == "sbm_poisson":
            return np.where(within, self.p, self.q)
        return np.where(within, self.p * (1 - self.p), self.q * (1 - self.q))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind in ("iid_gaussian", "student_t"):
            out["sigma"] = self.sigma
        if self.kind == "diagonal_gaussian":
            out["sigmas"] = list(self.sigmas)
        if self.kind == "student_t":
            out["nu"] = self.nu
        if self.kind.startswith("sbm"):
            out.update(p=self.p, q=self.q)
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "NoiseSpec":
        d = dict(d)
        if "sigmas" in d:
            d["sigmas"] = tuple(d["sigmas"])
        return cls(**d)


@dataclass(frozen=True)
class SignalSpec:
    """Low-rank signal description.

    ``factor_mode`` is ``"random_frames"`` (QR of Gaussian matrices),
    ``"explicit"`` (``U``/``V`` supplied) or ``"sbm_two_block"`` (balanced
    two-block ``Z B Z^T`` with ``p``, ``q``; singular values are implied).
    """

    n: int
    m: int
    r: int
    singular_values: tuple[float, ...] = ()
    factor_mode: str = "random_frames"
    U: Any = field(default=None, repr=False, compare=False)
    V: Any = field(default=None, repr=False, compare=False)
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        if min(self.n, self.m, self.r) < 1:
            raise InvalidInputError("n, m, r must be positive")
        if self.r > min(self.n, self.m):
            raise RankRequestError("r exceeds min(n, m)")
        if self.factor_mode == "sbm_two_block":
            if self.r != 2 or self.n != self.m:
                raise InvalidInputError("sbm_two_block needs r = 2 and a square matrix")
            if self.n % 2:
                raise InvalidInputError("sbm_two_block needs even n")
            if self.p is None or self.q is None or not 0 < self.q < self.p:
                raise InvalidInputError("sbm_two_block needs 0 < q < p")
            s = (self.n * (self.p + self.q) / 2, self.n * (self.p - self.q) / 2)
            object.__setattr__(self, "singular_values", s)
            return
        s = tuple(float(x) for x in self.singular_values)
        if len(s) != self.r or min(s) <= 0 or any(b > a for a, b in zip(s, s[1:])):
            raise InvalidInputError("need r positive, non-increasing singular values")
        object.__setattr__(self, "singular_values", s)
        if self.factor_mode == "explicit":
            U, V = as_matrix(self.U, "U"), as_matrix(self.V, "V")
            if U.shape != (self.n, self.r) or V.shape != (self.m, self.r):
                raise InvalidInputError("explicit factors have the wrong shape")
            if not (is_orthonormal(U) and is_orthonormal(V)):
                raise InvalidInputError("explicit factors must have orthonormal columns")
            object.__setattr__(self, "U", U)
            object.__setattr__(self, "V", V)
        elif self.factor_mode != "random_frames":
            raise InvalidInputError(f"unknown factor_mode {self.factor_mode!r}")


def _block_labels(n: int) -> np.ndarray:
    return (np.arange(n) >= n // 2).astype(int)


def random_frame(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    return qr_orthonormalize(rng.standard_normal((n, r)))


def generate_signal(spec: SignalSpec, seed: Seed) -> tuple[np.ndarray, SpectralTriple]:
    """Return ``M = U diag(s) V^T`` together with its generating factors."""
    s = np.asarray(spec.singular_values)
    if spec.factor_mode == "random_frames":
        rng = seed.generator(SIGNAL)
        U = random_frame(spec.n, spec.r, rng)
        V = random_frame(spec.m, spec.r, rng)
    elif spec.factor_mode == "explicit":
        U, V = spec.U, spec.V
    else:
        n = spec.n
        ones = np.ones(n) / math.sqrt(n)
        contrast = np.where(_block_labels(n) == 0, 1.0, -1.0) / math.sqrt(n)
        U = np.column_stack([ones, contrast])
        V = U.copy()
        Z = np.column_stack([_block_labels(n) == 0, _block_labels(n) == 1]).astype(float)
        B = np.array([[spec.p, spec.q], [spec.q, spec.p]])
        return Z @ B @ Z.T, SpectralTriple(U, s, V)
    return (U * s) @ V.T, SpectralTriple(U, s, V)


def generate_noise(kind: NoiseSpec, n: int, m: int, seed: Seed) -> np.ndarray:
    """Mean-zero noise matrix drawn according to ``kind``."""
    if n < 1 or m < 1:
        raise InvalidInputError("noise dimensions must be positive")
    rng = seed.generator(NOISE)
    if kind.kind == "iid_gaussian":
        return kind.sigma * rng.standard_normal((n, m))
    if kind.kind == "diagonal_gaussian":
        return rng.standard_normal((n, m)) * np.sqrt(kind.column_variances(m))
    if kind.kind == "student_t":
        scale = kind.sigma * math.sqrt((kind.nu - 2) / kind.nu)
        return scale * rng.standard_t(kind.nu, size=(n, m))
    within = _block_labels(n)[:, None] == _block_labels(m)[None, :]
    mean = np.where(within, kind.p, kind.q)
    if kind.kind == "sbm_bernoulli":
        return (rng.random((n, m)) < mean).astype(float) - mean
    if kind.kind == "sbm_poisson":
        return rng.poisson(mean).astype(float) - mean
    return rng.standard_normal((n, m)) * np.sqrt(mean * (1 - mean))


def sbm_block_variances(kind: NoiseSpec, n: int) -> np.ndarray:
    """Column variances of a first-block noise row (both blocks share the spectrum)."""
    return kind.column_variances(n, row_block=0)


# -- alternatives ------------------------------------------------------------


def make_alternative_rowflip(n: int, xi: int) -> tuple[np.ndarray, np.ndarray]:
    """``u0 = 1/sqrt(n)`` and ``u1`` equal to it with the last ``xi`` signs flipped.

    Any ``xi`` in ``[1, n-1]`` is accepted; values below ``ceil(n/2)`` trigger
    a warning because the classic construction starts there. ``u1`` is
    returned as constructed (not sign-normalized), so ``u0 @ u1 == (n - 2 xi)/n``.
    """
    n, xi = int(n), int(xi)
    if n < 2 or not 1 <= xi <= n - 1:
        raise InvalidInputError(f"xi must lie in [1, n-1] = [1, {n - 1}], got {xi}")
    if xi < math.ceil(n / 2):
        warnings.warn(f"xi = {xi} is below ceil(n/2) = {math.ceil(n / 2)}", stacklevel=2)
    u0 = np.full(n, 1 / math.sqrt(n))
    u1 = u0.copy()
    u1[n - xi :] *= -1
    return u0, u1


def complement_frame(U0, rng: np.random.Generator, tries: int = 8) -> np.ndarray:
    """Random orthonormal r-frame inside the orthogonal complement of col(U0)."""
    U0 = as_matrix(U0, "U0")
    n, r = U0.shape
    if n < 2 * r:
        raise InvalidInputError("need n >= 2r for a complement frame")
    for _ in range(tries):
        G = rng.standard_normal((n, r))
        G -= U0 @ (U0.T @ G)
        # second pass keeps U0^T W at rounding level
        G -= U0 @ (U0.T @ G)
        try:
            return qr_orthonormalize(G)
        except RankRequestError:
            continue
    raise RankRequestError("could not draw a full-rank complement frame")


def interpolate_frames(U0, W, t: float) -> np.ndarray:
    """``QR((1 - t) U0 + t W)`` for orthonormal U0, W with U0^T W = 0."""
    if not 0 <= t <= 1:
        raise InvalidInputError("t must lie in [0, 1]")
    return qr_orthonormalize((1 - t) * np.asarray(U0) + t * np.asarray(W))


def make_alternative_interpolated(U0, t: float, seed: Seed) -> np.ndarray:
    U0 = as_matrix(U0, "U0")
    if not is_orthonormal(U0):
        raise InvalidInputError("U0 must have orthonormal columns")
    W = complement_frame(U0, seed.generator(ALTERNATIVE))
    return interpolate_frames(U0, W, t)


def interpolate_to_distance(U0, W, d: float, grid: int = 401) -> tuple[np.ndarray, float]:
    """Smallest ``t`` with ``||U0 - U1(t)||_{2,inf} = d``; returns ``(U1, t)``.

    Raises :class:`InvalidInputError` when ``d`` exceeds the largest distance
    reachable along the path.
    """
    U0, W = as_matrix(U0, "U0"), as_matrix(W, "W")
    if d <= 0:
        return U0.copy(), 0.0

    def dist(t):
        return two_inf_norm(U0 - interpolate_frames(U0, W, t)) - d

    ts = np.linspace(0.0, 1.0, grid)
    vals = np.array([dist(t) for t in ts])
    hit = np.flatnonzero(vals >= 0)
    if hit.size == 0:
        raise InvalidInputError(f"distance {d:.4g} is beyond the path maximum {vals.max() + d:.4g}")
    j = hit[0]
    t = ts[j] if vals[j] == 0 else brentq(dist, ts[j - 1], ts[j], xtol=1e-14, rtol=1e-12)
    return interpolate_frames(U0, W, t), float(t)
