import numpy as np
import pytest

from traceconvex.linalg import dagger, eigvalsh, singular_values
from traceconvex.sampling import KINDS, Rng, random_matrix


def test_density_contract(rng):
    rho = random_matrix("density", 4, rng, size=50)
    assert np.allclose(np.trace(rho, axis1=-2, axis2=-1), 1, atol=1e-14)
    assert np.all(eigvalsh(rho) > 0)


def test_unitary_contract(rng):
    u = random_matrix("unitary", 5, rng, size=50)
    assert np.all(np.linalg.norm(dagger(u) @ u - np.eye(5), axis=(-2, -1)) <= 1e-12)


def test_pd_spectrum_range(rng):
    w = eigvalsh(random_matrix("pd", 3, rng, size=200))
    assert w.min() >= 0.1 - 1e-12 and w.max() <= 10 + 1e-12


def test_invertible_conditioning(rng):
    s = singular_values(random_matrix("invertible", 4, rng, size=200))
    assert np.all(s[:, 0] > 1e-3 * s[:, -1])


def test_well_conditioned_range(rng):
    s = singular_values(random_matrix("well_conditioned", 3, rng, size=100))
    assert s.min() >= 0.1 - 1e-12 and s.max() <= 10 + 1e-12


def test_self_adjoint(rng):
    k = random_matrix("self_adjoint", 3, rng)
    assert np.allclose(k, dagger(k))


@pytest.mark.parametrize("kind", KINDS)
def test_determinism(kind):
    a = random_matrix(kind, 3, Rng(7, 1), size=4)
    b = random_matrix(kind, 3, Rng(7, 1), size=4)
    assert np.array_equal(a, b)


def test_streams_differ():
    assert not np.array_equal(random_matrix("ginibre", 2, Rng(7, 1)), random_matrix("ginibre", 2, Rng(7, 2)))
    assert np.array_equal(Rng(3).child(5).normal(3), Rng(3, 5).normal(3))


def test_bad_kind_and_dim(rng):
    with pytest.raises(ValueError):
        random_matrix("hermitian", 2, rng)
    with pytest.raises(ValueError):
        random_matrix("pd", 0, rng)
