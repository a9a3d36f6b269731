import numpy as np
import pytest
from hypothesis import given, strategies as st

from caratheodory.kernels import (FunctionDomainError, IndefiniteKernelError, RationalFunction, SampleSet,
                                  constant, gram_assemble, point_mass_counterexample)
from caratheodory.realization import (Realization, evaluate, holdout_points, random_realization, realize,
                                      synthesize)

from oracles import MOBIUS_AT_HALF, unitary_spectral_atoms

mobius = RationalFunction([[[1]], [[1]]], [1, -1])
ring = 0.7 * np.exp(2j * np.pi * np.arange(9) / 9)


def rel_err(R, phi, z):
    return max(np.linalg.norm(a - b, 2) / max(1, np.linalg.norm(b, 2)) for a, b in zip(R(z), phi(z)))


def test_mobius_realization():
    R = realize(mobius, ring)
    assert R(0.5)[0, 0] == pytest.approx(MOBIUS_AT_HALF, abs=1e-10)
    assert rel_err(R, mobius, holdout_points(ring)) < 1e-10
    assert R.isometry_defect < 1e-12


def test_value_at_origin_and_skew_part():
    # phi(0) = D + C^H C with D the skew part of phi(0)
    phi = constant(np.array([[1.0, 2.0], [-2.0, 3.0]]) + 1j * np.eye(2))
    R = realize(phi, ring[:4])
    P = phi(0.0)
    assert np.allclose(R(0.0), P)
    assert np.allclose(R.D, (P - P.conj().T) / 2)
    assert R.skew_defect < 1e-14


def test_purely_imaginary_constant_has_trivial_state_space():
    R = realize(constant(1j), ring[:3])
    assert R.state_dim == 0
    assert R(0.3)[0, 0] == pytest.approx(1j)


@given(st.integers(0, 2**32 - 1))
def test_random_colligation_round_trip(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 3)), int(rng.integers(1, 9))
    phi = random_realization(rng, n, d)
    R, info = realize(phi, ring, full_output=True)
    assert rel_err(R, phi, holdout_points(ring)) <= 1e-6
    assert R.isometry_defect <= 1e-8 and R.skew_defect <= 1e-10
    assert info.relation.defect <= 1e-8
    assert info.relation.isometry_mismatch <= 1e-8
    G = gram_assemble(R, SampleSet.from_points(holdout_points(ring)))
    assert G.min_eigenvalue >= -1e-8


def test_equal_at_function_level_not_matrix_level(rng):
    phi = random_realization(rng, 2, 3)
    R = realize(phi, ring)
    z = np.array([0.1, -0.4j, 0.6 + 0.2j])
    assert np.allclose(R(z), phi(z))
    # state spaces are related by a unitary, so V itself generally differs
    assert R.state_dim == phi.state_dim


def test_spectral_atoms_of_unitary_colligation(rng):
    phi = random_realization(rng, 1, 3)
    atoms = unitary_spectral_atoms(phi.V, phi.C)
    z = 0.35 + 0.2j
    val = phi.D + sum(m * (np.exp(1j * t) + z) / (np.exp(1j * t) - z) for t, m in atoms)
    assert np.allclose(evaluate(phi, z), val)


def test_missing_origin_rejected():
    S = SampleSet.from_points(ring, include_origin=False).with_values(mobius)
    with pytest.raises(ValueError, match="origin"):
        synthesize(S)


def test_missing_values_rejected():
    with pytest.raises(ValueError):
        synthesize(SampleSet.from_points(ring))


def test_counterexample_has_no_realization():
    S = SampleSet.from_points([0.5, 0.2j]).with_values(point_mass_counterexample())
    with pytest.raises(IndefiniteKernelError):
        synthesize(S)
    with pytest.raises(ValueError):
        realize(point_mass_counterexample(), [0.5])


def test_evaluation_outside_disk_rejected(rng):
    R = random_realization(rng, 1, 2)
    with pytest.raises(FunctionDomainError):
        R(1.0)


def test_holdout_points_are_rotations():
    h = holdout_points(ring)
    assert np.allclose(np.sort(np.abs(h)), np.sort(np.abs(ring)))
    assert np.min(np.abs(h[:, None] - ring[None, :])) > 0.1


def test_realization_shapes_validated():
    with pytest.raises(ValueError):
        Realization(np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((1, 1)))
