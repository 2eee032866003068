import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from destripe.fourier import (
    FourierFilterParams, damping_mask, filter_mask, filter_slice, filter_volume, wedge_directions,
    wedge_weights,
)
from destripe.metrics import curtaining
from destripe.synth import PhantomSpec, StripeSpec, make_pair

N = 64


def kgrid(shape):
    ny, nx = shape
    return np.meshgrid(np.fft.fftfreq(ny) * ny, np.fft.fftfreq(nx) * nx, indexing="ij")


def test_mask_zero_on_stripe_band():
    p = FourierFilterParams(sigma=8)
    m = damping_mask((N, N), p.theta0, p)
    ky, kx = kgrid((N, N))
    band = (ky == 0) & (kx**2 > p.r0**2)
    assert np.all(m[band] == 0.0)
    assert np.all(m[kx**2 + ky**2 <= p.r0**2] == 1.0)


def test_far_wedges_are_untouched():
    p = FourierFilterParams()
    for theta_i in wedge_directions(p):
        dev = abs(math.remainder(theta_i - p.theta0, math.pi))
        m = damping_mask((N, N), theta_i, p)
        if dev > math.pi / 4 + 1e-9:
            assert np.all(m == 1.0)
        else:
            assert m.min() == 0.0


def test_sigma_i_equals_sigma_on_stripe_wedge():
    p = FourierFilterParams(sigma=5.0, r0=0.0)
    m = damping_mask((N, N), p.theta0, p)
    # k_par = sigma gives 1 - exp(-1/2)
    assert m[5, 0] == pytest.approx(1 - math.exp(-0.5), abs=1e-15)


def test_sigma_i_decays_with_angle():
    p = FourierFilterParams(sigma=6.0, sigma_a=0.3, r0=0.0)
    theta_i = p.theta0 + math.pi / 8
    m = damping_mask((N, N), theta_i, p)
    sigma_i = 6.0 * math.exp(-(math.pi / 8) ** 2 / (2 * 0.3**2))
    assert m[3, 0] == pytest.approx(1 - math.exp(-9 / (2 * sigma_i**2)), abs=1e-15)


@pytest.mark.parametrize("n_dir", [4, 8, 16])
def test_wedges_partition_unity(n_dir):
    p = FourierFilterParams(n_dir=n_dir)
    total = sum(wedge_weights((33, 40), p))
    assert np.allclose(total, 1.0, atol=1e-12)


@pytest.mark.parametrize("shape", [(64, 64), (31, 48), (50, 33)])
def test_mask_range_and_symmetry(shape):
    m = filter_mask(shape, FourierFilterParams(theta0=1.2))
    assert m.min() >= 0.0 and m.max() <= 1.0
    flipped = np.roll(m[::-1, ::-1], (1, 1), axis=(0, 1))
    assert np.array_equal(m, flipped)


@pytest.mark.parametrize("sigma", [8.0, 12.0, 20.0])
@pytest.mark.parametrize("freq", [5, 10, 23])
def test_vertical_stripe_band_attenuation(sigma, freq):
    x = np.arange(N)
    v = 0.5 + 0.25 * np.sin(2 * np.pi * freq * x / N)[None, :] * np.ones((N, 1))
    out, residue = filter_slice(v, FourierFilterParams(sigma=sigma), return_residue=True)
    before = np.abs(np.fft.fft2(v)[0, freq]) ** 2
    after = np.abs(np.fft.fft2(out)[0, freq]) ** 2
    assert 10 * math.log10(before / max(after, 1e-300)) >= 20.0
    assert residue <= 1e-10


def test_constant_image_unchanged():
    v = np.full((40, 52), 0.37)
    assert np.max(np.abs(filter_slice(v) - v)) <= 1e-12


def test_horizontal_stripes_pass():
    y = np.arange(N)
    v = 0.5 + 0.2 * np.sin(2 * np.pi * 9 * y / N)[:, None] * np.ones((1, N))
    assert np.max(np.abs(filter_slice(v) - v)) <= 1e-10


@given(st.integers(0, 2**31 - 1), st.floats(0.5, 30), st.floats(0.05, 2), st.floats(0, math.pi, exclude_max=True))
def test_real_output_and_nonexpansive(seed, sigma, sigma_a, theta0):
    v = np.random.default_rng(seed).random((24, 30))
    out, residue = filter_slice(v, FourierFilterParams(sigma=sigma, sigma_a=sigma_a, theta0=theta0),
                                return_residue=True)
    assert residue <= 1e-10
    assert np.linalg.norm(out) <= np.linalg.norm(v) * (1 + 1e-12)


def test_small_sigma_approaches_identity_off_the_band():
    # the k_par = 0 line is removed for every sigma > 0, so use an input
    # without energy there
    rng = np.random.default_rng(5)
    spec = np.fft.fft2(rng.random((N, N)))
    ky, kx = kgrid((N, N))
    spec[(ky == 0) & (kx**2 + ky**2 > 9)] = 0.0
    v = np.fft.ifft2(spec).real
    errs = [np.max(np.abs(filter_slice(v, FourierFilterParams(sigma=s)) - v)) for s in (1.0, 0.3, 0.1, 0.02)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-10


def test_params_validation():
    with pytest.raises(ValueError):
        FourierFilterParams(sigma=0)
    with pytest.raises(ValueError):
        FourierFilterParams(n_dir=1)
    with pytest.raises(ValueError):
        FourierFilterParams(r0=-1)
    with pytest.raises(ValueError):
        FourierFilterParams(wedge_transition=1.0)


def test_volume_single_slice_matches_slice():
    v = np.random.default_rng(1).random((1, 20, 22))
    dec = filter_volume(v)
    assert np.array_equal(dec.clean[0], filter_slice(v[0]))
    assert np.max(np.abs(dec.clean + dec.stripes - v)) <= 1e-12


def test_volume_slices_independent():
    v = np.random.default_rng(2).random((4, 16, 18))
    perm = [2, 0, 3, 1]
    a = filter_volume(v).clean
    b = filter_volume(v[perm]).clean
    assert np.array_equal(a[perm], b)


def test_striped_phantom_curtaining_improves():
    _, striped, _, _ = make_pair(PhantomSpec(dims=(96, 96), count=4), StripeSpec(), 4)
    dec = filter_volume(striped.array)
    assert curtaining(dec.clean) > curtaining(striped.array)
