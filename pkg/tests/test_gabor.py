import math
import warnings

import numpy as np
import pytest

from vesselseg.gabor import (
    DEFAULT_OMEGA0,
    BankConfig,
    DegenerateFieldWarning,
    GaborParams,
    KernelTooLarge,
    build_bank,
    convolve,
    gabor_kernel,
    kernel_radius,
    max_response,
    normalize01,
)
from oracles import correlate_loop


@pytest.fixture(scope="module")
def bank():
    return build_bank()


def bar_image(n, theta_deg, width):
    """Bright bar through the centre whose cross-section runs along theta."""
    c = n // 2
    yy, xx = np.mgrid[0:n, 0:n] - c
    t = math.radians(theta_deg)
    u = xx * math.cos(t) + yy * math.sin(t)
    return (np.abs(u) <= width / 2).astype(float)


def test_kernel_formula_at_sample_points():
    p = GaborParams(omega0=0.9, theta=math.radians(50), K=2.2)
    k = gabor_kernel(p, truncation_sigmas=3.5)
    r = k.radius
    raw = np.empty_like(k.coefficients)
    for y in range(-r, r + 1):
        for x in range(-r, r + 1):
            u = x * math.cos(p.theta) + y * math.sin(p.theta)
            v = -x * math.sin(p.theta) + y * math.cos(p.theta)
            env = 0.9 / (math.sqrt(2 * math.pi) * 2.2) * math.exp(-0.81 / (8 * 2.2**2) * (4 * u * u + v * v))
            raw[y + r, x + r] = env * (complex(math.cos(0.9 * u), math.sin(0.9 * u)) - math.exp(-2.2**2 / 2))
    raw /= math.sqrt(np.sum(np.abs(raw) ** 2))
    assert np.allclose(k.coefficients, raw, atol=1e-14)


def test_kernel_radius_example():
    # sigma_major = 2 K / omega0 = 6.2857...; 3.5 sigma = 22.0
    assert kernel_radius(0.7, 2.2, 3.5) == 22
    k = gabor_kernel(GaborParams(0.7, 0.0, 2.2), 3.5)
    assert k.coefficients.shape == (45, 45)


def test_bank_size_and_grid(bank):
    assert len(bank) == 36
    grid = {(k.params.omega0, round(k.params.theta_deg, 6)) for k in bank}
    assert grid == {(w, float(t)) for w in DEFAULT_OMEGA0 for t in range(0, 180, 20)}
    assert all(k.params.K == 2.2 for k in bank)


def test_bank_kernels_unit_norm_and_nearly_dc_free(bank):
    for k in bank:
        assert abs(np.linalg.norm(k.coefficients) - 1) <= 1e-6
        assert abs(k.coefficients.sum()) <= 1e-2


def test_dc_error_shrinks_with_truncation():
    p = GaborParams(0.7, math.radians(40))
    sums = [abs(gabor_kernel(p, t).coefficients.sum()) for t in (1.5, 2.0, 2.5, 3.0, 3.5)]
    assert all(a > b for a, b in zip(sums, sums[1:]))


def test_degenerate_grids():
    assert len(build_bank(BankConfig(omega0_values=(1.1,), theta_start=40, theta_stop=41, theta_step=20))) == 1
    only_zero = build_bank(BankConfig(theta_step=180))
    assert len(only_zero) == 4
    assert all(k.params.theta == 0.0 for k in only_zero)


def test_kernel_cap():
    with pytest.raises(KernelTooLarge):
        gabor_kernel(GaborParams(0.05, 0.0), 3.5, max_radius=128)


@pytest.mark.parametrize("kw", [dict(omega0=0), dict(omega0=1, theta=math.pi), dict(omega0=1, theta=0, K=0)])
def test_param_validation(kw):
    kw.setdefault("theta", 0.0)
    with pytest.raises(ValueError):
        GaborParams(**kw)


def test_convolve_zero_image(bank):
    assert not np.any(convolve(np.zeros((30, 30)), bank[0]))


def test_impulse_response_is_kernel(bank):
    k = bank[5]
    r = k.radius
    n = 2 * r + 11
    img = np.zeros((n, n))
    img[n // 2, n // 2] = 1.0
    for method in ("direct", "fft"):
        out = convolve(img, k, method)
        patch = out[n // 2 - r : n // 2 + r + 1, n // 2 - r : n // 2 + r + 1]
        # correlation with an impulse reproduces the point-reflected kernel
        assert np.allclose(patch, k.coefficients[::-1, ::-1], atol=1e-12)


def test_convolve_matches_loop_oracle(rng):
    kernels = [gabor_kernel(GaborParams(1.3, math.radians(t)), 3.5) for t in (0, 60)]
    kernels.append(gabor_kernel(GaborParams(0.9, math.radians(100)), 2.0))
    for k in kernels:
        img = rng.random((32, 32))
        ref = correlate_loop(img, k.coefficients)
        assert np.max(np.abs(convolve(img, k, "direct") - ref)) <= 1e-10
        assert np.max(np.abs(convolve(img, k, "fft") - ref)) <= 1e-6


def test_fft_path_matches_direct_full_bank(rng, bank):
    img = rng.random((48, 40))
    for k in bank[::7]:
        assert np.max(np.abs(convolve(img, k, "fft") - convolve(img, k, "direct"))) <= 1e-6


def test_convolve_linearity(rng, bank):
    img = rng.random((32, 32))
    a = 3.7
    base = convolve(img, bank[3])
    assert np.allclose(convolve(a * img, bank[3]), a * base, rtol=1e-12, atol=1e-12)


def test_max_response_single_kernel_is_magnitude(rng, bank):
    img = rng.random((30, 30))
    assert np.array_equal(max_response(img, bank[:1]), np.abs(convolve(img, bank[0])))


def test_max_response_dominates_and_is_order_free(rng, bank):
    img = rng.random((40, 40))
    sub = bank[::5]
    p = max_response(img, sub)
    for k in sub:
        assert np.all(p >= np.abs(convolve(img, k)))
    assert np.array_equal(p, max_response(img, sub[::-1]))


def test_max_response_empty_bank():
    with pytest.raises(ValueError):
        max_response(np.zeros((5, 5)), [])


@pytest.mark.parametrize("theta_deg", range(0, 180, 20))
def test_orientation_selectivity(bank, theta_deg):
    img = bar_image(101, theta_deg, 3)
    _, arg = max_response(img, bank, return_argmax=True)
    winner = bank[arg[50, 50]]
    assert round(winner.params.theta_deg) == theta_deg


def test_line_at_40_degrees_selects_40(bank):
    img = bar_image(101, 40, 3)
    c = 50
    mags = [abs(np.sum(k.coefficients * img[c - k.radius : c + k.radius + 1, c - k.radius : c + k.radius + 1]))
            for k in bank]
    assert round(bank[int(np.argmax(mags))].params.theta_deg) == 40


def _peak(img, w0):
    k = gabor_kernel(GaborParams(w0, 0.0))
    return np.abs(convolve(img, k))[40:80, 30:90].max()


def test_frequency_selectivity():
    thick = np.zeros((121, 121))
    thick[:, 56:65] = 1.0
    thin = np.zeros((121, 121))
    thin[:, 59:61] = 1.0
    thick_peaks = [_peak(thick, w) for w in DEFAULT_OMEGA0]
    thin_peaks = [_peak(thin, w) for w in DEFAULT_OMEGA0]
    # the lowest frequency is the best detector of a 9-px vessel
    assert int(np.argmax(thick_peaks)) == 0
    # relative preference for a thin vessel grows with frequency, peaking at 1.3
    ratios = [a / b for a, b in zip(thin_peaks, thick_peaks)]
    assert all(x < y for x, y in zip(ratios, ratios[1:]))


def test_normalize01_examples():
    fov = np.ones((1, 3), bool)
    assert np.allclose(normalize01(np.array([[2.0, 4.0, 6.0]]), fov), [[0, 0.5, 1]])
    spanning = np.array([[0.0, 0.25, 1.0]])
    assert np.array_equal(normalize01(spanning, fov), spanning)


def test_normalize01_uses_fov_only():
    field = np.array([[100.0, 1.0, 3.0, -50.0]])
    fov = np.array([[False, True, True, False]])
    assert np.array_equal(normalize01(field, fov), [[0.0, 0.0, 1.0, 0.0]])


def test_normalize01_constant_warns():
    with pytest.warns(DegenerateFieldWarning):
        out = normalize01(np.full((4, 4), 2.0), np.ones((4, 4), bool))
    assert not out.any()
