import numpy as np
import pytest

from sffbound.randommatrix import dft_matrix, gue_matrix, haar_unitary, make_rng, random_complex_hadamard


@pytest.mark.parametrize("D", [1, 2, 7, 32])
def test_haar_unitary_is_unitary(D):
    U = haar_unitary(D, 3)
    assert np.abs(U.conj().T @ U - np.eye(D)).max() < 1e-12


def test_haar_unitary_seeded():
    assert np.array_equal(haar_unitary(8, 11), haar_unitary(8, 11))
    assert not np.allclose(haar_unitary(8, 11), haar_unitary(8, 12))


def test_haar_moments():
    # E|U_00|^2 = 1/D and E|U_00|^4 = 2/(D(D+1)) for Haar unitaries
    D = 4
    rng = make_rng(0)
    x = np.array([abs(haar_unitary(D, rng)[0, 0]) ** 2 for _ in range(6000)])
    assert x.mean() == pytest.approx(1 / D, abs=0.01)
    assert (x**2).mean() == pytest.approx(2 / (D * (D + 1)), abs=0.01)


def test_haar_trace_second_moment():
    # E|Tr U|^2 = 1 for D >= 1
    rng = make_rng(1)
    v = np.array([abs(np.trace(haar_unitary(6, rng))) ** 2 for _ in range(4000)])
    assert v.mean() == pytest.approx(1.0, abs=0.06)


def test_gue_hermitian_and_semicircle_edge():
    H = gue_matrix(400, 0)
    assert np.abs(H - H.conj().T).max() == 0
    E = np.linalg.eigvalsh(H)
    assert E.min() == pytest.approx(-2, abs=0.1)
    assert E.max() == pytest.approx(2, abs=0.1)
    assert np.mean(E**2) == pytest.approx(1.0, abs=0.05)


def test_make_rng_passthrough():
    g = np.random.default_rng(0)
    assert make_rng(g) is g


@pytest.mark.parametrize("D", [1, 2, 5, 16])
def test_dft_is_complex_hadamard(D):
    F = dft_matrix(D)
    assert np.abs(F.conj().T @ F - np.eye(D)).max() < 1e-12
    assert np.abs(np.abs(F) ** 2 - 1 / D).max() < 1e-15


def test_random_complex_hadamard():
    X = random_complex_hadamard(9, 4)
    assert np.abs(X.conj().T @ X - np.eye(9)).max() < 1e-12
    assert np.abs(np.abs(X) ** 2 - 1 / 9).max() < 1e-14
    assert not np.allclose(X, dft_matrix(9))
