"""Seeded synthetic phantoms and additive stripe fields with known ground truth.

Random numbers come from numpy's PCG64 bit generator; its name and the seed
are stored with every generated pair so regressions can be replayed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .core import VERTICAL, Volume, as_array, parse_direction

RNG_ALGORITHM = "numpy.random.PCG64"
STRUCTURES = ("spheres", "blobs", "cells")


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _dims_to_shape(dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) not in (2, 3):
        raise ValueError("dims must be (nx, ny) or (nx, ny, nz)")
    if min(dims) < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    return dims[::-1]


@dataclass
class PhantomSpec:
    """Random objects on a flat background.

    ``dims`` is ``(nx, ny)`` or ``(nx, ny, nz)``. Objects are composited with
    a maximum, then blurred with a Gaussian of width ``blur`` pixels.
    """

    dims: tuple = (256, 256)
    structure: str = "cells"
    count: int = 12
    radius: tuple = (8.0, 24.0)
    intensity: tuple = (0.4, 0.8)
    background: float = 0.2
    blur: float = 1.0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        _dims_to_shape(self.dims)
        if self.structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}")
        if self.count < 0:
            raise ValueError("count must be non-negative")
        self.radius = tuple(float(r) for r in self.radius)
        self.intensity = tuple(float(i) for i in self.intensity)
        if not 0 < self.radius[0] <= self.radius[1]:
            raise ValueError("radius range must be positive and ordered")
        if not 0 <= self.intensity[0] <= self.intensity[1] <= 1:
            raise ValueError("intensity range must be ordered within [0, 1]")
        if not 0 <= self.background <= 1:
            raise ValueError("background must lie in [0, 1]")
        if self.blur < 0:
            raise ValueError("blur must be non-negative")


@dataclass
class StripeSpec:
    """Elongated additive structures along ``theta``.

    Stripes are laid side by side across the image: at each free line a
    stripe starts with a probability chosen so that the expected covered
    fraction equals ``density``. Widths are drawn uniformly from
    ``width`` (pixels). ``length=None`` gives stripes that span the image;
    otherwise each stripe is split into segments of uniform random length in
    ``length`` separated by gaps drawn from the same range, and the line
    density is doubled (capped at 1) to keep the covered area near
    ``density``. Each stripe or segment gets an amplitude magnitude drawn
    uniformly from ``amplitude`` with sign chosen by ``sign``.
    """

    theta: float = VERTICAL
    width: tuple = (1, 3)
    length: tuple | None = None
    amplitude: tuple = (0.02, 0.15)
    density: float = 0.3
    sign: str = "both"

    def __post_init__(self):
        self.theta = parse_direction(self.theta)
        self.width = tuple(int(w) for w in self.width)
        if not 1 <= self.width[0] <= self.width[1]:
            raise ValueError("width range must be ordered and at least 1")
        if self.length is not None:
            self.length = tuple(int(v) for v in self.length)
            if not 1 <= self.length[0] <= self.length[1]:
                raise ValueError("length range must be ordered and at least 1")
        self.amplitude = tuple(float(a) for a in self.amplitude)
        if not 0 <= self.amplitude[0] <= self.amplitude[1] <= 1:
            raise ValueError("amplitude range must be ordered within [0, 1]")
        if not 0 <= self.density <= 1:
            raise ValueError("density must lie in [0, 1]")
        if self.sign not in ("both", "positive", "negative"):
            raise ValueError("sign must be 'both', 'positive' or 'negative'")


@dataclass
class CorruptionReport:
    clamped_fraction: float
    unsuitable: bool
    meta: dict = field(default_factory=dict)


def phantom_objects(spec, seed):
    """Sample object centres ``(x, y[, z])``, radii and intensities."""
    rng = _rng(seed)
    shape = _dims_to_shape(spec.dims)
    n = spec.count
    centres = rng.uniform(0, 1, size=(n, len(shape))) * np.asarray(spec.dims, dtype=float)
    radii = rng.uniform(*spec.radius, size=n)
    levels = rng.uniform(*spec.intensity, size=n)
    return [(tuple(c), float(r), float(i)) for c, r, i in zip(centres, radii, levels)]


def make_phantom(spec, seed=0):
    """Render a phantom as a :class:`Volume` with values in [0, 1]."""
    shape = _dims_to_shape(spec.dims)
    grids = np.meshgrid(*[np.arange(n, dtype=float) for n in shape], indexing="ij")
    coords = grids[::-1]  # x, y[, z]
    img = np.full(shape, spec.background)
    for centre, r, level in phantom_objects(spec, seed):
        d2 = sum((c - c0) ** 2 for c, c0 in zip(coords, centre))
        if spec.structure == "spheres":
            obj = np.where(d2 <= r * r, level, 0.0)
        elif spec.structure == "blobs":
            obj = level * np.exp(-d2 / (2 * (r / 2) ** 2))
        else:
            # cytoplasm at 60% with a bright nucleus of half the radius
            obj = np.where(d2 <= r * r, 0.6 * level, 0.0)
            obj = np.where(d2 <= (r / 2) ** 2, level, obj)
        np.maximum(img, obj, out=img)
    if spec.blur > 0:
        img = ndimage.gaussian_filter(img, spec.blur, mode="nearest")
    img = np.clip(img, 0.0, 1.0)
    return Volume(img, source=f"phantom:{spec.structure}:seed={seed}")


def _line_starts(rng, n_lines, spec, density):
    """Non-overlapping ``(start, width)`` runs along the across axis."""
    mean_w = 0.5 * (spec.width[0] + spec.width[1])
    if density <= 0:
        return []
    # renewal process: expected covered fraction of this chain equals density
    p = density / (mean_w - density * mean_w + density)
    runs = []
    i = 0
    while i < n_lines:
        if rng.random() < p:
            w = int(rng.integers(spec.width[0], spec.width[1] + 1))
            runs.append((i, w))
            i += w
        else:
            i += 1
    return runs


def _amplitudes(rng, n, spec):
    mag = rng.uniform(*spec.amplitude, size=n)
    if spec.sign == "positive":
        return mag
    if spec.sign == "negative":
        return -mag
    return mag * rng.choice([-1.0, 1.0], size=n)


def make_stripes(spec, dims, seed=0):
    """Signed stripe field of shape ``(ny, nx)`` or ``(nz, ny, nx)`` in [-1, 1].

    Stripes occupy unit cells of the coordinate across ``theta``; each pixel
    takes the area-weighted mix of the cells under its footprint, so
    axis-aligned stripes are exact columns or rows and oblique ones have
    one-pixel linear edges instead of staircases.

    Every z slice gets an independently drawn in-plane pattern.
    """
    shape = _dims_to_shape(dims)
    rng = _rng(seed)
    ny, nx = shape[-2:]
    nz = shape[0] if len(shape) == 3 else 1
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    yy, xx = np.mgrid[0:ny, 0:nx].astype(float)
    across = -xx * s + yy * c
    along = xx * c + yy * s
    # unit-width cells across the stripes; pixel centres of axis-aligned
    # stripes sit in the middle of a cell
    a = across - across.min() + 0.5
    line = np.floor(a + 1e-9).astype(int)
    frac = np.clip(a - line, 0.0, 1.0)
    pos = np.floor(along - along.min() + 1e-9).astype(int)
    n_lines = int(line.max()) + 2
    n_pos = int(pos.max()) + 1
    # area of the unit pixel footprint falling into cells line-1, line, line+1
    w_prev = np.maximum(0.5 - frac, 0.0)
    w_next = np.maximum(frac - 0.5, 0.0)
    w_mid = 1.0 - w_prev - w_next

    density = spec.density if spec.length is None else min(1.0, 2 * spec.density)
    slices = []
    for _ in range(nz):
        table = np.zeros((n_lines, n_pos))
        for start, w in _line_starts(rng, n_lines, spec, density):
            stop = min(start + w, n_lines)
            if spec.length is None:
                table[start:stop, :] = _amplitudes(rng, 1, spec)[0]
                continue
            j = -int(rng.integers(0, spec.length[1] + 1))
            while j < n_pos:
                seg = int(rng.integers(spec.length[0], spec.length[1] + 1))
                amp = _amplitudes(rng, 1, spec)[0]
                table[start:stop, max(j, 0):max(j + seg, 0)] = amp
                j += seg + int(rng.integers(spec.length[0], spec.length[1] + 1))
        table = np.pad(table, ((1, 0), (0, 0)))
        slices.append(w_prev * table[line, pos] + w_mid * table[line + 1, pos]
                      + w_next * table[line + 2, pos])
    field_ = np.stack(slices) if len(shape) == 3 else slices[0]
    return np.clip(field_, -1.0, 1.0)


def corrupt(clean, stripes, limit=0.05):
    """Add ``stripes`` to ``clean`` and clamp to [0, 1].

    Returns the corrupted :class:`Volume` and a :class:`CorruptionReport`;
    pairs whose clamped fraction exceeds ``limit`` are flagged unsuitable for
    exact ground-truth tests.
    """
    u = as_array(clean)
    s = np.asarray(stripes, dtype=np.float64)
    if u.shape != s.shape:
        raise ValueError(f"shape mismatch: clean {u.shape} vs stripes {s.shape}")
    total = u + s
    clamped = (total < 0.0) | (total > 1.0)
    frac = float(np.count_nonzero(clamped)) / total.size
    out = Volume(np.clip(total, 0.0, 1.0), source="synthetic")
    return out, CorruptionReport(frac, frac > limit)


def make_pair(phantom, stripes, seed=0):
    """Generate ``(clean, striped, stripe_field, report)`` from one seed.

    The phantom and stripe generators get independent child seeds.
    """
    ss = np.random.SeedSequence(seed)
    s_ph, s_st = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    clean = make_phantom(phantom, s_ph)
    field_ = make_stripes(stripes, phantom.dims, s_st)
    if clean.is_2d:
        field_ = field_.reshape(clean.array.shape)
    striped, report = corrupt(clean, field_)
    report.meta = {
        "rng": RNG_ALGORITHM,
        "seed": seed,
        "phantom": asdict(phantom),
        "stripes": asdict(stripes),
    }
    return clean, striped, field_, report
