import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sffbound.errors import (
    DimensionZero,
    GridTooNarrow,
    NonHermitianInput,
    NonpositiveBinWidth,
    NonpositiveSigma,
)
from sffbound.randommatrix import gue_matrix
from sffbound.spectra import (
    DosHistogram,
    TimeSeries,
    check_fourier_nonnegativity,
    diagonalize,
    dos_fourier,
    dos_histogram,
    gaussian_smooth_dos,
    mt_envelope,
    phase_sums,
    sff_from_spectrum,
    sff_plateau,
    spectral_variance,
    spectrum_only,
)

spectra_st = st.lists(
    st.floats(-5, 5, allow_nan=False, allow_infinity=False), min_size=1, max_size=40
)


def random_hermitian(D, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    return (A + A.conj().T) / 2


# --- diagonalize -------------------------------------------------------------


def test_diagonalize_diagonal_input():
    s = diagonalize(np.diag([0.0, 1.0]))
    assert np.allclose(s.eigenvalues, [0, 1])
    assert np.allclose(np.abs(s.eigenvectors), np.eye(2))


def test_diagonalize_pauli_x():
    s = diagonalize(np.array([[0, 1], [1, 0]]))
    assert np.allclose(s.eigenvalues, [-1, 1])


def test_diagonalize_reconstructs_random_64():
    H = random_hermitian(64, 0)
    s = diagonalize(H)
    assert np.abs(s.reconstruct() - H).max() < 1e-10
    assert s.unitarity_residual() < 1e-10
    assert np.all(np.diff(s.eigenvalues) >= 0)


def test_diagonalize_residuals_at_1024():
    s = diagonalize(gue_matrix(1024, 5))
    assert s.unitarity_residual() < 1e-10
    assert np.abs(s.reconstruct() - gue_matrix(1024, 5)).max() < 1e-10


def test_diagonalize_rejects_nonhermitian():
    with pytest.raises(NonHermitianInput):
        diagonalize(np.array([[0, 1], [0, 0]]))


def test_diagonalize_rejects_empty():
    with pytest.raises(DimensionZero):
        diagonalize(np.zeros((0, 0)))


def test_decomposition_is_read_only():
    s = diagonalize(random_hermitian(4, 1))
    with pytest.raises(ValueError):
        s.eigenvalues[0] = 3.0


# --- N~ and K ----------------------------------------------------------------


def test_dos_fourier_two_level_cancellation():
    n = dos_fourier(spectrum_only([0.0, np.pi]), [1.0])
    assert abs(n.values[0]) < 1e-15


def test_dos_fourier_degenerate_spectrum():
    t = np.linspace(-3, 3, 11)
    n = dos_fourier(spectrum_only([0.7] * 5), t)
    assert np.allclose(n.values, np.exp(-0.7j * t))
    assert np.allclose(np.abs(n.values), 1.0)


def test_dos_fourier_equally_spaced_levels_give_sinc():
    D, W = 4001, 2 * np.pi  # tau = 1
    E = np.linspace(-W / 2, W / 2, D)
    t = np.linspace(0.05, 3.0, 60)
    K = np.abs(dos_fourier(spectrum_only(E), t).values) ** 2
    assert np.allclose(K, np.sinc(t) ** 2, atol=2e-3)


def test_sff_two_level_closed_form():
    t = np.linspace(-10, 10, 101)
    K = sff_from_spectrum(spectrum_only([0.0, 1.0]), t).values
    assert np.allclose(K, np.cos(t / 2) ** 2, atol=1e-15)


def test_sff_degenerate_is_one():
    K = sff_from_spectrum(spectrum_only([2.0, 2.0, 2.0]), np.linspace(0, 50, 20)).values
    assert np.allclose(K, 1.0, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(spectra_st, st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=20))
def test_sff_is_abs_square_of_dos_fourier(E, times):
    s = spectrum_only(E)
    t = np.unique(times)
    n = dos_fourier(s, t).values
    K = sff_from_spectrum(s, t).values
    assert np.abs(K - np.abs(n) ** 2).max() < 1e-14
    assert np.all(K <= 1 + 1e-14) and np.all(K >= 0)
    assert np.abs(np.abs(n) - 1).max() < 1 + 1e-14


@settings(max_examples=40, deadline=None)
@given(spectra_st, st.floats(0.01, 30))
def test_dos_fourier_conjugate_symmetry(E, t):
    s = spectrum_only(E)
    v = dos_fourier(s, [-t, t]).values
    assert abs(v[0] - np.conj(v[1])) < 1e-13


def test_sff_at_zero_is_one():
    s = diagonalize(random_hermitian(16, 3))
    assert sff_from_spectrum(s, [0.0]).values[0] == pytest.approx(1.0, abs=1e-15)
    assert dos_fourier(s, [0.0]).values[0] == pytest.approx(1.0, abs=1e-15)


def test_phase_sums_partition_invariant():
    E = np.random.default_rng(2).standard_normal(300)
    t = np.linspace(0, 400, 997)
    whole, carrier = phase_sums(E, t)
    parts = np.concatenate([phase_sums(E, t[a:b])[0] for a, b in [(0, 1), (1, 400), (400, 401), (401, 997)]])
    assert np.array_equal(whole, parts)
    pointwise = np.array([phase_sums(E, [x])[0][0] for x in t[::97]])
    assert np.array_equal(whole[::97], pointwise)


def test_sff_plateau_counts_degeneracies():
    assert sff_plateau(spectrum_only([0, 1, 2, 3])) == pytest.approx(0.25)
    assert sff_plateau(spectrum_only([0, 0, 1, 1])) == pytest.approx(0.5)
    assert sff_plateau(spectrum_only([5.0])) == 1.0


def test_sff_plateau_matches_long_time_average():
    s = spectrum_only(np.random.default_rng(0).standard_normal(12))
    t = np.linspace(0, 20000, 200001)
    assert sff_from_spectrum(s, t).values.mean() == pytest.approx(sff_plateau(s), rel=0.05)


# --- variance and MT envelope --------------------------------------------------


def test_spectral_variance_simple():
    assert spectral_variance(spectrum_only([-1.0, 1.0])) == pytest.approx(1.0)
    assert spectral_variance(spectrum_only([3.0, 3.0])) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_spectral_variance_matches_curvature_of_sff(seed):
    E = np.random.default_rng(seed).uniform(-2, 3, 50)
    s = spectrum_only(E)
    var = spectral_variance(s)
    h = 1e-4 / np.sqrt(var)
    K = sff_from_spectrum(s, [-h, 0.0, h]).values
    curvature = (K[0] - 2 * K[1] + K[2]) / h**2
    assert -curvature / 2 == pytest.approx(var, rel=1e-4)


def test_mt_envelope_origin_and_window_edge():
    sigma = 2.0
    eps = 1e-6
    edge = np.pi / (2 * sigma)
    env = mt_envelope(sigma, [0.0, edge - eps, edge + eps])
    assert env.values[0] == 1.0
    assert env.values[1] == pytest.approx(np.cos(sigma * (edge - eps)) ** 2)
    assert env.values[2] == 0.0
    assert list(env.in_window) == [True, True, False]


def test_mt_envelope_rejects_nonpositive_sigma():
    with pytest.raises(NonpositiveSigma):
        mt_envelope(0.0, [0.0])


def test_mt_envelope_equals_two_level_sff():
    s = spectrum_only([0.0, 1.0])
    sigma = np.sqrt(spectral_variance(s))
    assert sigma == pytest.approx(0.5)
    t = np.linspace(-np.pi / (2 * sigma) + 1e-9, np.pi / (2 * sigma) - 1e-9, 201)
    env = mt_envelope(sigma, t)
    assert np.all(env.in_window)
    assert np.abs(env.values - sff_from_spectrum(s, t).values).max() < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=30))
def test_sff_above_mt_envelope(E):
    s = spectrum_only(E)
    sigma = np.sqrt(spectral_variance(s))
    if sigma < 1e-6:
        return
    t = np.linspace(0, np.pi / (2 * sigma), 200, endpoint=False)
    env = mt_envelope(sigma, t)
    K = sff_from_spectrum(s, t).values
    assert np.all(K[env.in_window] >= env.values[env.in_window] - 1e-12)


# --- histograms ------------------------------------------------------------------


def test_dos_histogram_two_bins():
    h = dos_histogram(spectrum_only([0, 0, 1, 1]), 1.0)
    assert np.allclose(h.densities, [0.5, 0.5])
    assert np.allclose(h.bin_edges, [0, 1, 2])


def test_dos_histogram_rejects_bad_width():
    with pytest.raises(NonpositiveBinWidth):
        dos_histogram(spectrum_only([0, 1]), 0.0)


@settings(max_examples=50, deadline=None)
@given(spectra_st, st.floats(0.01, 3.0))
def test_dos_histogram_mass_and_coverage(E, w):
    s = spectrum_only(E)
    h = dos_histogram(s, w)
    assert h.total_mass == pytest.approx(1.0, abs=1e-12)
    assert h.bin_edges[0] <= s.eigenvalues[0] and h.bin_edges[-1] >= s.eigenvalues[-1]
    assert np.all(h.densities >= 0)


def test_syk_histogram_has_sharp_edges(syk10):
    h = dos_histogram(syk10.spectrum, 0.05)
    peak = h.densities.max()
    # the outermost occupied bins already carry a sizeable fraction of the peak density
    assert h.densities[0] > 0 and h.densities[-1] > 0
    assert h.densities[:3].max() > 0.02 * peak and h.densities[-3:].max() > 0.02 * peak


def test_smoothing_spike_gives_gaussian():
    edges = np.arange(-50, 51) * 0.1
    dens = np.zeros(100)
    dens[50] = 10.0
    sm = gaussian_smooth_dos(DosHistogram(edges, dens), sigma=0.5)
    c = sm.centers
    mean = np.sum(c * sm.densities * 0.1)
    sd = np.sqrt(np.sum((c - mean) ** 2 * sm.densities * 0.1))
    assert sd == pytest.approx(np.sqrt(0.5**2), rel=0.01)
    assert sm.total_mass == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(spectra_st, st.floats(0.02, 1.0), st.floats(0.01, 2.0))
def test_smoothing_preserves_mass_and_positivity(E, w, sigma):
    sm = gaussian_smooth_dos(dos_histogram(spectrum_only(E), w), sigma)
    assert sm.total_mass == pytest.approx(1.0, abs=1e-10)
    assert np.all(sm.densities >= 0)


def test_smoothing_syk_interior_and_edges(syk10):
    h = dos_histogram(syk10.spectrum, 0.05)
    sm = gaussian_smooth_dos(h, 0.1)
    pad = (sm.densities.size - h.densities.size) // 2
    inner = sm.densities[pad:pad + h.densities.size]
    mid = slice(h.densities.size // 4, 3 * h.densities.size // 4)
    # interior: local averages barely move
    ratio = inner[mid].sum() / h.densities[mid].sum()
    assert ratio == pytest.approx(1.0, abs=0.03)
    # edges: mass leaks beyond the spectrum over about 2 sigma
    outside = sm.densities[:pad].sum() * 0.05
    assert outside > 1e-4
    beyond = sm.centers < h.bin_edges[0] - 4 * 0.1
    assert sm.densities[beyond].sum() * 0.05 < 1e-3 * outside + 1e-12


def test_smoothing_rejects_bad_sigma():
    h = dos_histogram(spectrum_only([0, 1]), 0.5)
    with pytest.raises(NonpositiveSigma):
        gaussian_smooth_dos(h, -1.0)


# --- Fourier non-negativity ------------------------------------------------------


def _grid(half=40.0, n=8001):
    return np.linspace(-half, half, n)


def test_fourier_gaussian_is_nonnegative():
    t = _grid()
    rep = check_fourier_nonnegativity(TimeSeries(t, np.exp(-t**2 / 2)), np.linspace(-5, 5, 201))
    assert rep.nonneg
    expected = np.exp(-rep.energies**2 / 2) / np.sqrt(2 * np.pi)
    assert np.abs(rep.densities - expected).max() < 1e-8


def test_fourier_triangle_is_nonnegative():
    t = np.linspace(-2, 2, 40001)
    rep = check_fourier_nonnegativity(TimeSeries(t, np.maximum(1 - np.abs(t), 0)), np.linspace(-6, 6, 241))
    assert rep.nonneg
    expected = np.sinc(rep.energies / (2 * np.pi)) ** 2 / (2 * np.pi)
    assert np.abs(rep.densities - expected).max() < 1e-6


def test_fourier_quartic_exponential_goes_negative():
    t = np.linspace(-6, 6, 12001)
    E = np.linspace(0, 10, 501)
    rep = check_fourier_nonnegativity(TimeSeries(t, np.exp(-t**4)), E)
    assert not rep.nonneg
    # dense direct quadrature of the real transform as an independent oracle
    tt = np.linspace(0, 6, 600001)
    f = np.exp(-tt**4)
    i = int(np.argmin(rep.densities))
    direct = np.trapezoid(f * np.cos(E[i] * tt), tt) / np.pi
    assert rep.min_density == pytest.approx(direct, rel=1e-4)
    assert direct < -1e-4


def test_fourier_check_rejects_truncated_grid():
    t = np.linspace(-1, 1, 101)
    with pytest.raises(GridTooNarrow):
        check_fourier_nonnegativity(TimeSeries(t, np.exp(-t**2 / 2)), [0.0])


def test_time_series_rejects_unsorted_times():
    with pytest.raises(ValueError):
        TimeSeries([0.0, 0.0], [1, 2])


def test_hermiticity_tolerance_scales_with_matrix():
    H = random_hermitian(8, 4) * 1e6
    H[0, 1] += 1e-6  # relative deviation 1e-12, inside 1e-10 * max|H|
    assert diagonalize(H).dimension == 8
    H[0, 1] += 1.0
    with pytest.raises(NonHermitianInput):
        diagonalize(H)
