import numpy as np
import pytest
from hypothesis import given, strategies as st

from caratheodory.operators import (DualityTag, NotHermitianError, NotPositiveError, OperatorError,
                                    cauchy_schwarz_check, dual_flip, factorize, hermitian, is_positive,
                                    order_leq, pairing, psd_project, require_positive, spectral_norm)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return G @ G.conj().T


psd_cases = st.tuples(st.integers(1, 16), st.integers(1, 16), st.integers(0, 2**32 - 1))


def test_pairing_convention():
    A = np.array([[1, 2j], [0, 3]])
    b, c = np.array([1, 1j]), np.array([2, 1])
    assert pairing(A, b, c) == pytest.approx(np.conj(c) @ A @ b)


def test_pairing_dimension_mismatch():
    with pytest.raises(OperatorError):
        pairing(np.eye(2), np.ones(3), np.ones(2))


def test_hermitian_symmetrizes_small_defect():
    A = np.array([[1, 1e-14], [0, 2]])
    H = hermitian(A)
    assert np.allclose(H.matrix, H.matrix.conj().T)
    assert H.hermiticity_defect > 0


def test_hermitian_rejects():
    with pytest.raises(NotHermitianError):
        hermitian(np.array([[0, 1], [0, 0]]))


def test_is_positive_examples():
    assert is_positive(np.diag([1.0, 0.0]))
    cert = is_positive(np.diag([1.0, -1.0]))
    assert not cert
    w = cert.witness
    assert pairing(np.diag([1.0, -1.0]), w, w).real < 0


def test_require_positive_carries_witness():
    with pytest.raises(NotPositiveError) as e:
        require_positive(np.array([[0, 1], [1, 0]]))
    assert e.value.min_eigenvalue == pytest.approx(-1)
    w = e.value.witness
    assert np.vdot(w, np.array([[0, 1], [1, 0]]) @ w).real == pytest.approx(-1)


def test_factorize_identity_and_rank_one():
    F = factorize(np.eye(3))
    assert F.rank == 3 and F.residual < 1e-14
    v = np.array([1, 1j, 2])
    F = factorize(np.outer(v, v.conj()))
    assert F.rank == 1
    assert np.allclose(F.T.conj().T @ F.T, np.outer(v, v.conj()))


def test_factorize_rejects_indefinite():
    with pytest.raises(NotPositiveError):
        factorize(np.diag([1.0, -0.5]))


@given(psd_cases)
def test_factorize_residual_and_norm(case):
    n, r, seed = case
    A = random_psd(np.random.default_rng(seed), n, min(r, n))
    F = factorize(A)
    assert np.linalg.norm(A - F.T.conj().T @ F.T) <= 1e-10 * max(1, np.linalg.norm(A))
    assert abs(spectral_norm(A) - spectral_norm(F.T) ** 2) <= 1e-10 * max(1, spectral_norm(A))
    assert F.rank <= min(r, n)


@given(psd_cases)
def test_cauchy_schwarz(case):
    n, r, seed = case
    rng = np.random.default_rng(seed)
    A = random_psd(rng, n, min(r, n))
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert cauchy_schwarz_check(A, b, c).holds


def test_order_leq():
    A, B = np.diag([1.0, 2.0]), np.diag([2.0, 2.0])
    assert order_leq(A, B)
    assert not order_leq(B, A)


def test_order_leq_tag_mismatch():
    A = hermitian(np.eye(2), DualityTag.B_TO_BSTAR)
    B = hermitian(np.eye(2), DualityTag.BSTAR_TO_B)
    with pytest.raises(OperatorError):
        order_leq(A, B)


def test_dual_flip_is_an_involution():
    A = np.array([[1, 2j], [3, 4]])
    M, tag = dual_flip(A, DualityTag.B_TO_BSTAR)
    assert tag is DualityTag.BSTAR_TO_B
    assert np.array_equal(M, A)
    assert dual_flip(M, tag)[1] is DualityTag.B_TO_BSTAR


def test_psd_project_clips_negative_part(rng):
    A = np.diag([2.0, -1.0])
    assert np.allclose(psd_project(A), np.diag([2.0, 0.0]))
    P = psd_project(rng.standard_normal((5, 3, 3)))
    assert np.min(np.linalg.eigvalsh(P)) > -1e-12
