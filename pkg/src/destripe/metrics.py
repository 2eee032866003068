"""Image quality scores: PSNR, (MS-)SSIM and a reference-free curtaining score."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import VERTICAL, as_array, parse_direction

#: standard per-scale MS-SSIM exponents
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
WIN_RADIUS = 5
WIN_SIGMA = 1.5
K1, K2 = 0.01, 0.03


def _pair(u, ref):
    u = as_array(u)
    ref = as_array(ref)
    if u.shape != ref.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {ref.shape}")
    return u, ref


def psnr(u, ref):
    """Peak signal-to-noise ratio in dB for unit peak; ``inf`` for identical images."""
    u, ref = _pair(u, ref)
    mse = float(np.mean((u - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def _filt(x):
    # 11x11 Gaussian window, valid region only
    y = ndimage.gaussian_filter(x, WIN_SIGMA, radius=WIN_RADIUS, mode="nearest")
    r = WIN_RADIUS
    return y[r:-r, r:-r]


def ssim_components(u, ref, data_range=1.0):
    """Mean luminance term and mean contrast-structure term of SSIM for 2D images."""
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mu_u, mu_r = _filt(u), _filt(ref)
    var_u = _filt(u * u) - mu_u**2
    var_r = _filt(ref * ref) - mu_r**2
    cov = _filt(u * ref) - mu_u * mu_r
    lum = (2 * mu_u * mu_r + c1) / (mu_u**2 + mu_r**2 + c1)
    cs = (2 * cov + c2) / (var_u + var_r + c2)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def ssim(u, ref, data_range=1.0):
    """Single-scale SSIM of two 2D images (Gaussian window, valid region)."""
    u, ref = _pair(u, ref)
    if min(u.shape) < 2 * WIN_RADIUS + 1:
        raise ValueError("image smaller than the 11x11 SSIM window")
    return ssim_components(u, ref, data_range)[0]


def _downsample(x):
    ny, nx = x.shape
    x = x[: ny - ny % 2, : nx - nx % 2]
    return 0.25 * (x[0::2, 0::2] + x[1::2, 0::2] + x[0::2, 1::2] + x[1::2, 1::2])


def ms_ssim(u, ref, levels=5, return_levels=False):
    """Multi-scale SSIM of 2D images (3D: mean over slices).

    When the image is too small for ``levels`` dyadic scales, the number of
    scales is reduced and the remaining exponents are renormalized; use
    ``return_levels`` to see how many were used. Negative contrast-structure
    terms are clamped to zero so the score stays in [0, 1].
    """
    u, ref = _pair(u, ref)
    if u.ndim == 3:
        vals = [ms_ssim(a, b, levels, return_levels=True) for a, b in zip(u, ref)]
        score = float(np.mean([v for v, _ in vals]))
        return (score, min(n for _, n in vals)) if return_levels else score
    win = 2 * WIN_RADIUS + 1
    usable = 0
    while usable < levels and min(u.shape) >= win * 2**usable:
        usable += 1
    if usable == 0:
        raise ValueError(f"image {u.shape} smaller than the {win}x{win} SSIM window")
    weights = np.asarray(MS_SSIM_WEIGHTS[:usable])
    weights = weights / weights.sum()
    a, b = u, ref
    score = 1.0
    for j in range(usable):
        full, cs = ssim_components(a, b)
        term = full if j == usable - 1 else cs
        score *= max(term, 0.0) ** weights[j]
        if j < usable - 1:
            a, b = _downsample(a), _downsample(b)
    score = float(min(score, 1.0))
    return (score, usable) if return_levels else score


def curtaining(u, theta0=VERTICAL, band=2.0, radius=5.0, return_flag=False):
    """Reference-free stripe score in [0, 1]; 1 means no stripe concentration.

    Compares the mean spectral power in the band of frequencies orthogonal to
    the stripe direction (``|k_par| <= band`` bins) with the mean power
    elsewhere, ignoring a disk of ``radius`` bins around DC::

        score = 1 - clip((P_band - P_rest) / (P_band + P_rest), 0, 1)

    Volumes are scored slice by slice and averaged.
    """
    arr = as_array(u)
    if arr.ndim == 3:
        vals = [curtaining(sl, theta0, band, radius, return_flag=True) for sl in arr]
        score = float(np.mean([v for v, _ in vals]))
        flag = any(f for _, f in vals)
        return (score, flag) if return_flag else score
    theta0 = parse_direction(theta0)
    ny, nx = arr.shape
    power = np.abs(np.fft.fft2(arr)) ** 2
    ky = np.fft.fftfreq(ny) * ny
    kx = np.fft.fftfreq(nx) * nx
    KY, KX = np.meshgrid(ky, kx, indexing="ij")
    keep = KX**2 + KY**2 > radius**2
    k_par = np.abs(KX * math.cos(theta0) + KY * math.sin(theta0))
    in_band = keep & (k_par <= band)
    rest = keep & ~in_band
    if not in_band.any() or not rest.any():
        return (1.0, True) if return_flag else 1.0
    pb = float(power[in_band].mean())
    po = float(power[rest].mean())
    if pb + po <= 0.0:
        return (1.0, True) if return_flag else 1.0
    score = 1.0 - min(max((pb - po) / (pb + po), 0.0), 1.0)
    return (score, False) if return_flag else score


@dataclass
class MetricReport:
    psnr: float | None = None
    ms_ssim: float | None = None
    curtaining: float = 1.0
    flags: list = field(default_factory=list)

    def lines(self):
        """``key=value`` lines; reference-based metrics read ``NA`` when unavailable."""
        def fmt(v):
            if v is None:
                return "NA"
            if math.isinf(v):
                return "inf"
            return f"{v:.10g}"
        out = [f"psnr={fmt(self.psnr)}", f"ms_ssim={fmt(self.ms_ssim)}",
               f"curtaining={fmt(self.curtaining)}"]
        out.append("flags=" + (",".join(self.flags) if self.flags else "none"))
        return out

    def as_row(self):
        return {
            "psnr": self.psnr,
            "ms_ssim": self.ms_ssim,
            "curtaining": self.curtaining,
            "flags": ";".join(self.flags),
        }


def evaluate(u, ref=None, theta0=VERTICAL):
    """Compute every available metric for ``u`` (PSNR/MS-SSIM need ``ref``)."""
    report = MetricReport()
    report.curtaining, degenerate = curtaining(u, theta0, return_flag=True)
    if degenerate:
        report.flags.append("curtaining_degenerate")
    if ref is None:
        report.flags.append("no_reference")
        return report
    report.psnr = psnr(u, ref)
    value, used = ms_ssim(u, ref, return_levels=True)
    report.ms_ssim = value
    if used < len(MS_SSIM_WEIGHTS):
        report.flags.append(f"ms_ssim_levels={used}")
    return report
