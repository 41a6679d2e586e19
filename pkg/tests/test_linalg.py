from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from subspace_evt.errors import InvalidInputError, RankRequestError, SingularAlignmentError
from subspace_evt.linalg import (
    DegenerateGapWarning,
    SpectralTriple,
    condition_number,
    delocalization_mu,
    qr_orthonormalize,
    read_csv,
    read_dmat,
    read_matrix,
    sign_align,
    truncated_svd,
    two_inf_norm,
    write_csv,
    write_dmat,
    write_matrix,
)

seeds = st.integers(0, 2**32 - 1)


def test_truncated_svd_diagonal():
    t = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(t.s, [3, 2])
    np.testing.assert_allclose(np.abs(t.U), np.eye(3)[:, :2], atol=1e-12)
    np.testing.assert_allclose(np.abs(t.V), np.eye(3)[:, :2], atol=1e-12)


def test_truncated_svd_identity_warns_on_tie():
    with pytest.warns(DegenerateGapWarning):
        t = truncated_svd(np.eye(5), 1)
    assert t.s[0] == pytest.approx(1.0)


def test_truncated_svd_rank_one():
    rng = np.random.default_rng(0)
    u = rng.standard_normal(7)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(5)
    v /= np.linalg.norm(v)
    t = truncated_svd(np.outer(u, v), 1)
    assert t.s[0] == pytest.approx(1.0)
    assert abs(abs(t.U[:, 0] @ u) - 1) < 1e-12
    assert abs(abs(t.V[:, 0] @ v) - 1) < 1e-12


def test_truncated_svd_errors():
    with pytest.raises(RankRequestError):
        truncated_svd(np.ones((3, 2)), 3)
    with pytest.raises(InvalidInputError):
        truncated_svd(np.array([[1.0, np.nan]]), 1)


@pytest.mark.parametrize("shape", [(400, 350), (350, 420)])
def test_lanczos_path_matches_dense(shape):
    rng = np.random.default_rng(1)
    A = rng.standard_normal(shape)
    A[:, :3] += 40 * rng.standard_normal((shape[0], 1))
    t = truncated_svd(A, 3)
    s_full = np.linalg.svd(A, compute_uv=False)
    np.testing.assert_allclose(t.s, s_full[:3], rtol=1e-10)
    again = truncated_svd(A, 3)
    assert np.array_equal(t.U, again.U)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 50), st.integers(2, 50))
def test_truncated_svd_optimal_reconstruction(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m))
    r = int(rng.integers(1, min(n, m)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGapWarning)
        t = truncated_svd(A, r)
    s = np.linalg.svd(A, compute_uv=False)
    best = np.sqrt(np.sum(s[r:] ** 2))
    assert abs(np.linalg.norm(A - t.reconstruct()) - best) <= 1e-9 * max(1.0, best)
    assert np.all(np.diff(t.s) <= 0)


def test_sign_align_examples():
    rng = np.random.default_rng(2)
    A = qr_orthonormalize(rng.standard_normal((30, 4)))
    np.testing.assert_allclose(sign_align(A, A), np.eye(4), atol=1e-12)
    Q0 = ortho_group.rvs(4, random_state=3)
    np.testing.assert_allclose(sign_align(A @ Q0, A), Q0.T, atol=1e-10)
    a = A[:, :1]
    assert sign_align(a, -a)[0, 0] == pytest.approx(-1.0)


def test_sign_align_singular():
    A = np.eye(4)[:, :2]
    B = np.eye(4)[:, 2:]
    with pytest.raises(SingularAlignmentError):
        sign_align(A, B)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_sign_align_optimal_and_orthogonal(seed):
    rng = np.random.default_rng(seed)
    n, r = 20, 3
    A = qr_orthonormalize(rng.standard_normal((n, r)))
    B = qr_orthonormalize(A + 0.3 * rng.standard_normal((n, r)))
    R = sign_align(A, B)
    assert np.max(np.abs(R.T @ R - np.eye(r))) <= 1e-10
    best = np.linalg.norm(A @ R - B)
    for Q in ortho_group.rvs(r, size=100, random_state=seed % 2**31):
        assert best <= np.linalg.norm(A @ Q - B) + 1e-10


def test_two_inf_norm_examples():
    assert two_inf_norm(np.eye(3)) == 1.0
    assert two_inf_norm(np.zeros((4, 2))) == 0.0
    assert two_inf_norm(np.array([[3.0, 4.0], [1.0, 0.0]])) == 5.0


@settings(max_examples=1000, deadline=None)
@given(seeds, st.integers(1, 30), st.integers(1, 30))
def test_two_inf_norm_properties(seed, n, m):
    A = np.random.default_rng(seed).standard_normal((n, m))
    assert two_inf_norm(A) == max(np.sqrt(np.sum(row * row)) for row in A)
    tin = two_inf_norm(A)
    assert np.linalg.norm(A, 2) / np.sqrt(n) <= tin * (1 + 1e-12)
    assert tin <= np.linalg.norm(A) * (1 + 1e-12)


def test_qr_orthonormalize_examples():
    A = np.vstack([np.diag([2.0, 3.0]), np.zeros((3, 2))])
    Q = qr_orthonormalize(A)
    np.testing.assert_allclose(np.abs(Q), np.eye(5)[:, :2], atol=1e-12)
    G = np.random.default_rng(4).standard_normal((100, 5))
    Q = qr_orthonormalize(G)
    assert np.max(np.abs(Q.T @ Q - np.eye(5))) <= 1e-10
    # same span
    assert np.linalg.norm(G - Q @ (Q.T @ G)) <= 1e-10 * np.linalg.norm(G)
    with pytest.raises(RankRequestError):
        qr_orthonormalize(np.ones((5, 2)))


def test_condition_and_delocalization():
    assert condition_number([3.0, 1.0]) == 3.0
    n, r = 12, 3
    E = np.eye(n)[:, :r]
    assert delocalization_mu(E, E) == pytest.approx(n / r)
    u = np.where(np.arange(n) % 2, 1.0, -1.0)[:, None] / np.sqrt(n)
    assert delocalization_mu(u, u) == pytest.approx(1.0)


def test_spectral_triple_invariants():
    with pytest.raises(InvalidInputError):
        SpectralTriple(np.eye(3)[:, :2], np.array([1.0, 2.0]), np.eye(3)[:, :2])
    with pytest.raises(InvalidInputError):
        SpectralTriple(np.ones((3, 1)), np.array([1.0]), np.eye(3)[:, :1])


@pytest.mark.parametrize("writer,reader,suffix", [(write_csv, read_csv, ".csv"), (write_dmat, read_dmat, ".dmat")])
def test_matrix_io_roundtrip_bit_exact(tmp_path, writer, reader, suffix):
    A = np.random.default_rng(5).standard_normal((7, 3)) * 10.0 ** np.arange(-3, 4)[:, None]
    A[0, 0] = 1 / 3
    path = tmp_path / f"a{suffix}"
    writer(path, A)
    B = reader(path)
    assert B.dtype == np.float64 and np.array_equal(A, B)
    assert np.array_equal(read_matrix(path), A)


def test_write_matrix_dispatch(tmp_path):
    A = np.arange(6.0).reshape(2, 3)
    write_matrix(tmp_path / "x.bin", A)
    assert (tmp_path / "x.bin").read_bytes()[:4] == b"DMAT"
    write_matrix(tmp_path / "x.csv", A)
    assert (tmp_path / "x.csv").read_text().splitlines()[0] == "0.0,1.0,2.0"


def test_csv_rejects_ragged(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(InvalidInputError):
        read_csv(p)
