"""Dense linear-algebra primitives and matrix file I/O.

Matrices are plain 2-D ``float64`` numpy arrays. Singular vectors are only
ever compared after Procrustes alignment, so nothing here fixes their signs.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import svds

from .errors import InvalidInputError, RankRequestError, SingularAlignmentError

ORTHONORMAL_TOL = 1e-10
SINGULAR_TOL = 1e-12
GAP_TOL = 1e-12

# below this min(n, m) a full LAPACK SVD is cheaper than Lanczos
_DENSE_SVD_CUTOFF = 300

DMAT_MAGIC = b"DMAT"


class DegenerateGapWarning(RuntimeWarning):
    """s_r ties s_{r+1}: the leading rank-r column space is not unique."""


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (1-D input becomes a column)."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains NaN or Inf entries")
    return A


@dataclass(frozen=True)
class SpectralTriple:
    """Rank-r truncated SVD ``U @ diag(s) @ V.T``."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        U, V = as_matrix(self.U, "U"), as_matrix(self.V, "V")
        s = np.atleast_1d(np.asarray(self.s, dtype=float))
        r = s.size
        if U.shape[1] != r or V.shape[1] != r:
            raise InvalidInputError(f"factor widths {U.shape[1]}, {V.shape[1]} do not match {r} singular values")
        if np.any(s <= 0) or np.any(np.diff(s) > 0):
            raise InvalidInputError("singular values must be strictly positive and non-increasing")
        for name, F in (("U", U), ("V", V)):
            err = np.max(np.abs(F.T @ F - np.eye(r)))
            if err > ORTHONORMAL_TOL:
                raise InvalidInputError(f"{name} columns are not orthonormal (max deviation {err:.3e})")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "s", s)

    @property
    def rank(self) -> int:
        return self.s.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.s) @ self.V.T


def truncated_svd(A, r: int, *, check_gap: bool = True) -> SpectralTriple:
    """Leading ``r`` singular triplets of ``A``, singular values descending.

    Small matrices go through a full LAPACK SVD; larger ones use ARPACK
    Lanczos with a fixed start vector so repeated calls are bit-identical.
    With ``check_gap`` a :class:`DegenerateGapWarning` is emitted when
    ``s_r`` and ``s_{r+1}`` coincide to 1e-12 relative; on the Lanczos path
    this needs one extra triplet, which is noticeably slower, so Monte Carlo
    loops switch it off.
    """
    A = as_matrix(A, "A")
    n, m = A.shape
    k = min(n, m)
    r = int(r)
    if r < 1:
        raise InvalidInputError(f"rank must be positive, got {r}")
    if r > k:
        raise RankRequestError(f"requested rank {r} exceeds min(n, m) = {k}")

    if k <= _DENSE_SVD_CUTOFF or r + 1 >= k:
        U, s, Vt = scipy.linalg.svd(A, full_matrices=False)
        s_next = s[r] if r < k else None
        U, s, Vt = U[:, :r], s[:r], Vt[:r]
    else:
        want = r + 1 if check_gap else r
        v0 = np.random.default_rng(0x5EED).standard_normal(k)
        U, s, Vt = svds(A, k=want, v0=v0, tol=0, return_singular_vectors=True)
        order = np.argsort(s)[::-1]
        U, s, Vt = U[:, order], s[order], Vt[order]
        s_next = s[r] if check_gap else None
        U, s, Vt = U[:, :r], s[:r], Vt[:r]

    if s[-1] <= 0:
        raise RankRequestError(f"A has rank below {r}")
    if check_gap and s_next is not None and s[-1] - s_next <= GAP_TOL * s[-1]:
        warnings.warn(
            f"s_{r} = {s[-1]:.6g} ties s_{r + 1} = {s_next:.6g}; the rank-{r} subspace is not unique",
            DegenerateGapWarning,
            stacklevel=2,
        )
    return SpectralTriple(np.ascontiguousarray(U), s.copy(), np.ascontiguousarray(Vt.T))


def sign_align(A, B) -> np.ndarray:
    """Orthogonal factor of the polar decomposition of ``A.T @ B``.

    The returned ``R`` minimizes ``||A Q - B||_F`` over orthogonal ``Q``.
    """
    A, B = as_matrix(A, "A"), as_matrix(B, "B")
    if A.shape != B.shape:
        raise InvalidInputError(f"shape mismatch {A.shape} vs {B.shape}")
    X, c, Yt = np.linalg.svd(A.T @ B)
    if c[-1] < SINGULAR_TOL:
        raise SingularAlignmentError(f"A^T B has singular value {c[-1]:.3e} < {SINGULAR_TOL}")
    return X @ Yt


def two_inf_norm(A) -> float:
    """Largest Euclidean row norm of ``A``."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.size == 0:
        return 0.0
    # row-wise pairwise summation; bit-identical to summing each row on its own
    return float(np.sqrt(np.max(np.sum(A * A, axis=1))))


def qr_orthonormalize(A) -> np.ndarray:
    """Orthonormal basis of col(A) from an economy QR, with diag(R) > 0."""
    A = as_matrix(A, "A")
    if A.shape[1] > A.shape[0]:
        raise RankRequestError("more columns than rows")
    Q, R = np.linalg.qr(A)
    d = np.abs(np.diag(R))
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    if smin <= SINGULAR_TOL or np.min(d) <= SINGULAR_TOL * max(1.0, np.max(d)):
        raise RankRequestError(f"input is rank deficient (smallest singular value {smin:.3e})")
    signs = np.sign(np.diag(R))
    return Q * signs


def condition_number(s) -> float:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    return float(s[0] / s[-1])


def delocalization_mu(U, V) -> float:
    """max{(n/r) ||U||_{2,inf}^2, (m/r) ||V||_{2,inf}^2}."""
    U, V = as_matrix(U, "U"), as_matrix(V, "V")
    n, r = U.shape
    m = V.shape[0]
    return max(n / r * two_inf_norm(U) ** 2, m / r * two_inf_norm(V) ** 2)


def is_orthonormal(U, tol: float = ORTHONORMAL_TOL) -> bool:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    return bool(np.max(np.abs(U.T @ U - np.eye(U.shape[1]))) <= tol)


# -- matrix files -----------------------------------------------------------


def write_csv(path, A) -> None:
    """One matrix row per line, comma separated, shortest round-trip repr."""
    A = as_matrix(A)
    with open(path, "w", encoding="ascii") as fh:
        for row in A:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def read_csv(path) -> np.ndarray:
    rows = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise InvalidInputError(f"{path}: empty matrix file")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInputError(f"{path}: ragged rows (widths {sorted(widths)})")
    return as_matrix(np.array(rows, dtype=float), str(path))


def write_dmat(path, A) -> None:
    """Binary: b"DMAT", u64 rows, u64 cols, little-endian f64 row-major."""
    A = as_matrix(A)
    with open(path, "wb") as fh:
        fh.write(DMAT_MAGIC)
        fh.write(struct.pack("<QQ", *A.shape))
        fh.write(np.ascontiguousarray(A, dtype="<f8").tobytes())


def read_dmat(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != DMAT_MAGIC or len(data) < 20:
        raise InvalidInputError(f"{path}: not a DMAT file")
    n, m = struct.unpack("<QQ", data[4:20])
    payload = data[20:]
    if len(payload) != 8 * n * m:
        raise InvalidInputError(f"{path}: expected {8 * n * m} payload bytes, found {len(payload)}")
    return as_matrix(np.frombuffer(payload, dtype="<f8").reshape(n, m).astype(float), str(path))


def read_matrix(path) -> np.ndarray:
    """Read either format, sniffing the DMAT magic."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    return read_dmat(path) if head == DMAT_MAGIC else read_csv(path)


def write_matrix(path, A) -> None:
    if str(path).endswith((".dmat", ".bin")):
        write_dmat(path, A)
    else:
        write_csv(path, A)
