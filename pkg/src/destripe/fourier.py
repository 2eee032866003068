"""Directional Fourier damping of stripe frequencies.

The frequency plane is split into ``n_dir`` angular wedges with raised-cosine
edges. Wedge ``i`` collects structures oriented along ``theta_i``; wedges
within pi/4 of the stripe direction ``theta_0`` get the Gaussian notch::

    f_i = 1 - exp(-k_par^2 / (2 sigma_i^2)),  sigma_i = sigma exp(-(theta_0 - theta_i)^2 / (2 sigma_a^2))

where ``k_par`` is the frequency component along the stripe direction (in
bins). Other wedges pass unchanged, as does a disk of radius ``r0`` around DC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .core import VERTICAL, StripeDecomposition, as_array, parse_direction
from .parallel import fft_workers, map_ordered

_TOL = 1e-12


@dataclass
class FourierFilterParams:
    sigma: float = 12.0
    sigma_a: float = 0.3
    n_dir: int = 8
    theta0: float = VERTICAL
    r0: float = 3.0
    #: width (radians) of the raised-cosine ramp between adjacent wedges
    wedge_transition: float | None = None

    def __post_init__(self):
        if self.sigma <= 0 or self.sigma_a <= 0:
            raise ValueError("sigma and sigma_a must be positive")
        if self.n_dir < 2:
            raise ValueError("n_dir must be at least 2")
        if self.r0 < 0:
            raise ValueError("r0 must be non-negative")
        self.theta0 = parse_direction(self.theta0)
        width = math.pi / self.n_dir
        if self.wedge_transition is None:
            self.wedge_transition = width / 2
        if not 0 <= self.wedge_transition <= width:
            raise ValueError("wedge_transition must lie in [0, pi / n_dir]")


def _angle_dev(a, b):
    """Distance between two orientations, in [0, pi/2]."""
    d = np.mod(np.asarray(a) - b, math.pi)
    return np.minimum(d, math.pi - d)


def wedge_directions(params):
    """Structure orientation ``theta_i`` of each wedge, starting at ``theta_0``."""
    step = math.pi / params.n_dir
    return [math.fmod(params.theta0 + i * step, math.pi) for i in range(params.n_dir)]


def _freq_grid(shape):
    ny, nx = shape
    ky = sfft.fftfreq(ny) * ny
    kx = sfft.fftfreq(nx) * nx
    return np.meshgrid(ky, kx, indexing="ij")


def damping_mask(shape, theta_i, params):
    """Gaussian notch ``f_i`` of one wedge on the unshifted FFT grid of ``shape``.

    All ones when ``theta_i`` is more than pi/4 from the stripe direction.
    Values inside the protect disk are 1.
    """
    ky, kx = _freq_grid(shape)
    dev = float(_angle_dev(theta_i, params.theta0))
    if dev > math.pi / 4 + _TOL:
        return np.ones(shape)
    sigma_i = params.sigma * math.exp(-dev**2 / (2 * params.sigma_a**2))
    k_par = kx * math.cos(params.theta0) + ky * math.sin(params.theta0)
    mask = 1.0 - np.exp(-k_par**2 / (2 * sigma_i**2))
    mask[kx**2 + ky**2 <= params.r0**2] = 1.0
    return mask


def wedge_weights(shape, params):
    """Raised-cosine partition of unity over frequency orientation, one map per wedge."""
    ky, kx = _freq_grid(shape)
    # frequency vectors are orthogonal to the structures they encode
    orient = np.mod(np.arctan2(ky, kx) - math.pi / 2, math.pi)
    half = math.pi / (2 * params.n_dir)
    w = params.wedge_transition
    out = []
    for theta_i in wedge_directions(params):
        d = _angle_dev(orient, theta_i)
        if w == 0:
            wt = (d <= half).astype(np.float64)
        else:
            ramp = np.clip((d - (half - w / 2)) / w, 0.0, 1.0)
            wt = 0.5 * (1.0 + np.cos(math.pi * ramp))
        out.append(wt)
    return out


def filter_mask(shape, params):
    """Combined multiplicative mask in [0, 1], symmetric under ``k -> -k``."""
    mask = np.zeros(shape)
    for theta_i, wt in zip(wedge_directions(params), wedge_weights(shape, params)):
        mask += wt * damping_mask(shape, theta_i, params)
    flipped = np.roll(mask[::-1, ::-1], shift=(1, 1), axis=(0, 1))
    mask = 0.5 * (mask + flipped)
    return np.clip(mask, 0.0, 1.0)


def filter_slice(v, params=None, mask=None, return_residue=False):
    """Damp stripe frequencies of one 2D slice.

    Output is not clipped to [0, 1]. With ``return_residue`` the largest
    imaginary part discarded after the inverse transform is also returned.
    """
    params = params or FourierFilterParams()
    v = as_array(v)
    if v.ndim != 2:
        raise ValueError("filter_slice expects a 2D image")
    if mask is None:
        mask = filter_mask(v.shape, params)
    w = fft_workers()
    out = sfft.ifft2(sfft.fft2(v, workers=w) * mask, workers=w)
    real = np.ascontiguousarray(out.real)
    if return_residue:
        return real, float(np.max(np.abs(out.imag), initial=0.0))
    return real


def filter_volume(v, params=None):
    """Apply :func:`filter_slice` to every x-y slice; stripes are ``input - output``."""
    params = params or FourierFilterParams()
    arr = as_array(v)
    if arr.ndim == 2:
        clean = filter_slice(arr, params)
    elif arr.ndim == 3:
        mask = filter_mask(arr.shape[1:], params)
        clean = np.stack(map_ordered(lambda sl: filter_slice(sl, params, mask), arr))
    else:
        raise ValueError("expected a 2D or 3D image")
    return StripeDecomposition.from_clean(arr, clean, method="fourier")
