"""Stripe artifact removal for 2D and 3D grayscale images."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    VERTICAL,
    NormalizationRecord,
    StripeDecomposition,
    Volume,
    denormalize,
    normalize,
    parse_direction,
)
from .fourier import FourierFilterParams, filter_slice, filter_volume  # noqa: E402
from .gsr import GsrParams, SolveReport, SolverSettings, gsr_objective, solve_gsr, solve_gsr_oblique  # noqa: E402
from .io import read_image, write_image  # noqa: E402
from .metrics import MetricReport, curtaining, evaluate, ms_ssim, psnr, ssim  # noqa: E402
from .synth import PhantomSpec, StripeSpec, corrupt, make_pair, make_phantom, make_stripes  # noqa: E402
from .vsnr import VsnrParams, make_gabor_patterns, solve_vsnr  # noqa: E402

__all__ = [
    "VERTICAL", "NormalizationRecord", "StripeDecomposition", "Volume", "denormalize", "normalize",
    "parse_direction", "FourierFilterParams", "filter_slice", "filter_volume", "GsrParams",
    "SolveReport", "SolverSettings", "gsr_objective", "solve_gsr", "solve_gsr_oblique",
    "read_image", "write_image", "MetricReport", "curtaining", "evaluate", "ms_ssim", "psnr",
    "ssim", "PhantomSpec", "StripeSpec", "corrupt", "make_pair", "make_phantom", "make_stripes",
    "VsnrParams", "make_gabor_patterns", "solve_vsnr",
]
