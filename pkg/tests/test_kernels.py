import numpy as np
import pytest
from hypothesis import given, strategies as st

from caratheodory.kernels import (FunctionDomainError, IndefiniteKernelError, RationalFunction, SampleSet,
                                  TableFunction, cayley, certify_positive_kernel, constant, gram_assemble,
                                  kernel_eval, mobius_atom, negative_squares_estimate,
                                  point_mass_counterexample, random_sample_set, rkhs_section, schur_gram)
from caratheodory.realization import random_realization

from oracles import COUNTEREXAMPLE_EIGS, MOBIUS_AT_HALF, brute_gram

seeds = st.integers(0, 2**32 - 1)


def test_rational_evaluation():
    phi = RationalFunction([[[1]], [[1]]], [1, -1])
    assert phi(0.5)[0, 0] == pytest.approx(MOBIUS_AT_HALF)
    assert phi(np.array([0.0, 0.5])).shape == (2, 1, 1)


def test_rational_pole_rejected():
    with pytest.raises(FunctionDomainError):
        RationalFunction([[[1]], [[1]]], [1, -1])(1.0)


def test_mobius_atom_matches_formula():
    z = 0.3 - 0.4j
    e = np.exp(0.7j)
    assert mobius_atom(0.7, 2.0)(z)[0, 0] == pytest.approx(2 * (e + z) / (e - z))


def test_kernel_of_constant_one():
    # k(z, w) = 1/(1 - z conj w) for phi = 1
    z, w = 0.5, 0.3j
    assert kernel_eval(constant(1.0), z, w)[0, 0] == pytest.approx(1 / (1 - z * np.conj(w)))


def test_kernel_points_outside_disk():
    with pytest.raises(FunctionDomainError):
        kernel_eval(constant(1.0), 1.0, 0.0)


def test_sample_set_validation():
    with pytest.raises(ValueError):
        SampleSet([0.1, 0.1])
    with pytest.raises(ValueError):
        SampleSet([1.2])
    S = SampleSet.from_points([0.3, 0.4j])
    assert S.include_origin and S.origin_index == 0


@given(seeds)
def test_gram_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    phi = random_realization(rng, 2, 3)
    S = random_sample_set(rng, 4)
    G = gram_assemble(phi, S)
    assert np.allclose(G.matrix, brute_gram(phi(S.points), S.points), atol=1e-12)


@given(seeds)
def test_realization_kernels_are_positive(seed):
    rng = np.random.default_rng(seed)
    phi = random_realization(rng, int(rng.integers(1, 3)), int(rng.integers(1, 6)))
    family = [random_sample_set(rng, 5) for _ in range(3)]
    rep = certify_positive_kernel(phi, family)
    assert rep.passed and rep.n_negative == 0


def test_gram_with_direction_vectors(rng):
    phi = random_realization(rng, 2, 3)
    S = SampleSet.from_points([0.2, -0.5j], vectors=np.array([[1, 0], [1, 1j], [0, 1]]))
    G = gram_assemble(phi, S)
    full = brute_gram(phi(S.points), S.points)
    b = np.zeros((6, 3), complex)
    for i in range(3):
        b[2 * i:2 * i + 2, i] = S.vectors[i]
    assert np.allclose(G.matrix, b.conj().T @ full @ b)


def test_counterexample_has_one_negative_square():
    phi = point_mass_counterexample()
    G = gram_assemble(phi, SampleSet.from_points([0.5]))
    assert np.allclose(G.eigenvalues, COUNTEREXAMPLE_EIGS)
    assert G.n_negative == 1
    rng = np.random.default_rng(3)
    fam = [random_sample_set(rng, k) for k in range(1, 8)]
    assert negative_squares_estimate(phi, fam) == 1
    rep = certify_positive_kernel(phi, fam)
    assert not rep.passed and rep.witness is not None


def test_table_without_default():
    with pytest.raises(FunctionDomainError):
        TableFunction([0.0], [1.0])(0.5)


def test_rkhs_section_reproduces_kernel(rng):
    phi = random_realization(rng, 2, 4)
    S = random_sample_set(rng, 4)
    sec = rkhs_section(phi, S)
    x = sec.point_coefficients(1, np.array([1.0, 1j]))[:, 0]
    y = sec.point_coefficients(2, np.array([0.5, -1.0]))[:, 0]
    G = brute_gram(phi(S.points), S.points)
    assert sec.inner(x, y) == pytest.approx(np.vdot(y, G @ x), abs=1e-10)
    # f_x(w_j) = k(w_j, w_1) b
    val = sec.evaluate(x, S.points[2])
    assert np.allclose(val, kernel_eval(phi, S.points[2], S.points[1]) @ np.array([1.0, 1j]))


def test_rkhs_section_rejects_indefinite():
    with pytest.raises(IndefiniteKernelError) as e:
        rkhs_section(point_mass_counterexample(), SampleSet.from_points([0.5]))
    assert e.value.n_negative == 1


@given(seeds)
def test_cayley_is_contractive(seed):
    rng = np.random.default_rng(seed)
    phi = random_realization(rng, 2, 4)
    z = 0.9 * np.exp(2j * np.pi * np.arange(16) / 16)
    s = cayley(phi(z)).values
    assert np.max(np.linalg.norm(s, 2, axis=(1, 2))) <= 1 + 1e-10
    assert schur_gram(z, s).min_eigenvalue >= -1e-8


def test_cayley_of_zero_is_identity():
    assert np.allclose(cayley(np.zeros((2, 2))).values, np.eye(2))
