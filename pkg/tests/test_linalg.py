import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from adaptctl.errors import ValidationError
from adaptctl.linalg import (as_symmetric, assemble_block, block_neg_semidef, is_pos_def,
                             lam_max, lam_min, min_eig_orthogonality, sym_eig)

from conftest import Q_CONTRACT, random_spd

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def sym_matrices(n_max=5):
    return st.integers(1, n_max).flatmap(
        lambda n: arrays(float, (n, n), elements=finite).map(lambda X: 0.5 * (X + X.T)))


def test_identity_spectrum():
    d = sym_eig(np.eye(2))
    assert np.allclose(d.values, [1, 1])
    assert np.allclose(d.vectors.T @ d.vectors, np.eye(2))


def test_diagonal_spectrum():
    assert np.allclose(sym_eig(np.diag([7.0, 3.0])).values, [3, 7])


def test_contract_matrix_spectrum():
    # characteristic polynomial of the 2x2 matrix
    tr, det = np.trace(Q_CONTRACT), np.linalg.det(Q_CONTRACT)
    disc = np.sqrt(tr * tr / 4 - det)
    d = sym_eig(Q_CONTRACT)
    assert d.min == pytest.approx(tr / 2 - disc, abs=1e-12)
    assert d.max == pytest.approx(tr / 2 + disc, abs=1e-12)
    assert d.min == pytest.approx(1.0569, abs=1e-4)
    assert d.max == pytest.approx(3.3573, abs=1e-4)


def test_nonsymmetric_rejected():
    with pytest.raises(ValidationError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_tiny_asymmetry_is_symmetrized():
    M = np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]])
    S = as_symmetric(M)
    assert np.array_equal(S, S.T)


def test_nonfinite_rejected():
    with pytest.raises(ValidationError):
        sym_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


@settings(max_examples=200, deadline=None)
@given(sym_matrices())
def test_jacobi_matches_eigh(M):
    d = sym_eig(M)
    ref = np.linalg.eigvalsh(M)
    scale = max(np.linalg.norm(M), 1.0)
    assert np.all(np.diff(d.values) >= -1e-12 * scale)
    assert np.allclose(d.values, ref, atol=1e-10 * scale)
    n = M.shape[0]
    assert np.allclose(d.vectors.T @ d.vectors, np.eye(n), atol=1e-10)
    assert np.linalg.norm(M @ d.vectors - d.vectors * d.values) <= 1e-9 * scale
    recon = (d.vectors * d.values) @ d.vectors.T
    assert np.linalg.norm(recon - M) <= 1e-8 * scale


def test_is_pos_def_examples():
    assert is_pos_def(np.eye(2), 0.0)
    assert not is_pos_def(np.array([[0.0, 0.0], [0.0, 1.0]]), 0.0)
    assert is_pos_def(Q_CONTRACT, 0.0)
    assert not is_pos_def(np.eye(2), 1.0)


def test_block_examples():
    assert block_neg_semidef(-np.eye(2), np.zeros(2))
    assert not block_neg_semidef(-np.eye(2), np.array([0.1, 0.0]))
    assert block_neg_semidef(np.array([[0.0, 0.0], [0.0, -1.0]]), np.zeros(2))


def test_block_dimension_mismatch():
    with pytest.raises(ValidationError):
        block_neg_semidef(-np.eye(2), np.zeros(3))


def test_block_predicate_randomized():
    rng = np.random.default_rng(11)
    for k in range(500):
        n = rng.integers(1, 5)
        M = -random_spd(rng, n, 0.0) if k % 3 else -np.diag(rng.uniform(0, 2, n))
        if k % 7 == 0:
            M = M + 0.3 * np.eye(n)  # sometimes indefinite
        # nonzero m kept well above tolerance: the block eigenvalue scales with ||m||^2
        m = np.zeros(n) if k % 2 else rng.normal(size=n) * 10.0 ** rng.integers(-3, 1)
        X = assemble_block(M, m)
        direct = np.linalg.eigvalsh(X).max() <= 1e-10
        assert block_neg_semidef(M, m) == direct


def test_min_eig_orthogonality_examples():
    Q = np.diag([1.0, 2.0])
    assert min_eig_orthogonality(Q, np.array([0.0, 1.0]))
    assert not min_eig_orthogonality(Q, np.array([1.0, 0.0]))
    assert min_eig_orthogonality(np.eye(2), np.array([1.0, 1.0]))


def test_min_eig_orthogonality_randomized():
    rng = np.random.default_rng(5)
    for k in range(500):
        Q = random_spd(rng, 3) - 1.0 * np.eye(3)
        vals, vecs = np.linalg.eigh(Q)
        if k % 3 == 0:
            # constructed orthogonal case: w built from the other eigenvectors
            w = vecs[:, 1:] @ rng.normal(size=2)
        elif k % 3 == 1 and k % 2:
            # repeated minimum eigenvalue: w hits only part of the eigenspace
            Q = vecs @ np.diag([vals[0], vals[0], vals[2] + 1]) @ vecs.T
            w = rng.normal(size=3)
        else:
            w = rng.normal(size=3)
        w = w.reshape(3, 1)
        predicate = min_eig_orthogonality(Q, w, tol=1e-8)
        gap = abs(np.linalg.eigvalsh(Q + w @ w.T).min() - np.linalg.eigvalsh(Q).min())
        assert predicate == (gap <= 1e-8), (Q, w, gap)


def test_lam_helpers():
    M = np.diag([4.0, -1.0, 2.0])
    assert lam_min(M) == -1.0 and lam_max(M) == 4.0
