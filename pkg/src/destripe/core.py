"""Image data model, value normalization and the stripe decomposition type.

Arrays follow the usual numpy image layout: a 2D image is ``(ny, nx)`` and a
volume is ``(nz, ny, nx)``, so x is the fastest-varying (last) axis. Stripes
run along y unless stated otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

AXES = {"x": -1, "y": -2, "z": -3}

#: Angle of the default stripe direction (vertical, along y).
VERTICAL = math.pi / 2


@dataclass(frozen=True)
class NormalizationRecord:
    """How raw samples were mapped to [0, 1], so the mapping can be undone."""

    kind: str  # "integer" or "float"
    bit_depth: int | None = None
    vmin: float = 0.0
    vmax: float = 1.0
    degenerate: bool = False
    dtype: str = "float64"

    def to_dict(self):
        return {
            "kind": self.kind,
            "bit_depth": self.bit_depth,
            "vmin": self.vmin,
            "vmax": self.vmax,
            "degenerate": self.degenerate,
            "dtype": self.dtype,
        }


@dataclass(frozen=True)
class Volume:
    """A 2D or 3D grayscale image in double precision.

    ``data`` is always stored as ``(nz, ny, nx)``; a volume with ``nz == 1``
    is treated as 2D everywhere.
    """

    data: np.ndarray
    record: NormalizationRecord | None = None
    source: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"volume data must be 2D or 3D and non-empty, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self):
        """``(nx, ny, nz)``."""
        nz, ny, nx = self.data.shape
        return nx, ny, nz

    @property
    def is_2d(self):
        return self.data.shape[0] == 1

    @property
    def array(self):
        """The data as ``(ny, nx)`` for 2D volumes, ``(nz, ny, nx)`` otherwise."""
        return self.data[0] if self.is_2d else self.data


@dataclass
class StripeDecomposition:
    """Clean image ``clean`` and stripe field ``stripes`` with ``clean + stripes == input``."""

    clean: np.ndarray
    stripes: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.clean.shape != self.stripes.shape:
            raise ValueError("clean and stripes must have the same shape")

    @classmethod
    def from_clean(cls, u0, clean, **meta):
        """Build the pair with the stripe field defined as ``u0 - clean``."""
        u0 = np.asarray(u0, dtype=np.float64)
        clean = np.asarray(clean, dtype=np.float64)
        return cls(clean=clean, stripes=u0 - clean, meta=dict(meta))


def as_array(v):
    """Return a float64 array from a Volume or array-like, keeping 2D inputs 2D."""
    if isinstance(v, Volume):
        return np.array(v.array, dtype=np.float64)
    return np.asarray(v, dtype=np.float64)


def parse_direction(direction):
    """Convert an axis name or angle to an angle in [0, pi).

    ``"y"`` is pi/2 and ``"x"`` is 0. Angles are reduced modulo pi since a
    stripe direction has no orientation.
    """
    if isinstance(direction, str):
        key = direction.strip().lower()
        if key == "x":
            return 0.0
        if key == "y":
            return VERTICAL
        raise ValueError(f"unknown stripe direction {direction!r}; use 'x', 'y' or an angle")
    theta = float(direction)
    if not math.isfinite(theta):
        raise ValueError("stripe direction must be finite")
    theta = math.fmod(theta, math.pi)
    if theta < 0:
        theta += math.pi
    if theta >= math.pi:
        theta = 0.0
    return theta


def _integer_bit_depth(dtype):
    if dtype == np.uint8:
        return 8
    if dtype == np.uint16:
        return 16
    if dtype == np.uint32:
        return 32
    return None


def normalize(raw, bit_depth=None, mode="auto"):
    """Map raw samples to [0, 1].

    Parameters
    ----------
    raw : array_like
        Raw samples; must be finite.
    bit_depth : int or None
        Bit depth of integer samples. Inferred from unsigned integer dtypes
        when omitted.
    mode : {"auto", "bitdepth", "minmax"}
        ``"auto"`` scales integer data by ``2**bit_depth - 1`` and float data
        by an affine min-max rescale. ``"minmax"`` forces the rescale.

    Returns
    -------
    Volume
        Normalized data with the record needed by :func:`denormalize`.
    """
    arr = np.asarray(raw)
    if not np.all(np.isfinite(arr)):
        raise ValueError("raw samples must be finite")
    if bit_depth is None and mode != "minmax":
        bit_depth = _integer_bit_depth(arr.dtype)
    if mode == "bitdepth" and bit_depth is None:
        raise ValueError(f"cannot infer a bit depth for dtype {arr.dtype}")

    if bit_depth is not None and mode != "minmax":
        if bit_depth < 1:
            raise ValueError("bit_depth must be positive")
        scale = float(2**bit_depth - 1)
        data = arr.astype(np.float64) / scale
        if data.min(initial=0.0) < 0 or data.max(initial=0.0) > 1:
            raise ValueError(f"samples exceed the {bit_depth}-bit range")
        rec = NormalizationRecord("integer", bit_depth=bit_depth, vmin=0.0, vmax=scale,
                                  dtype=str(arr.dtype))
        return Volume(data, rec)

    data = arr.astype(np.float64)
    vmin, vmax = float(data.min()), float(data.max())
    if vmin == vmax:
        level = min(max(vmin, 0.0), 1.0)
        rec = NormalizationRecord("float", vmin=vmin, vmax=vmax, degenerate=True,
                                  dtype=str(arr.dtype))
        return Volume(np.full(data.shape, level), rec)
    rec = NormalizationRecord("float", vmin=vmin, vmax=vmax, dtype=str(arr.dtype))
    return Volume((data - vmin) / (vmax - vmin), rec)


def denormalize(v, record=None):
    """Invert :func:`normalize`.

    Integer records quantize with round-half-even and saturate at the bit
    range; float records apply the inverse affine map.
    """
    if record is None and isinstance(v, Volume):
        record = v.record
    if record is None:
        raise ValueError("denormalize needs the normalization record")
    data = as_array(v)
    if record.kind == "integer":
        scale = float(2**record.bit_depth - 1)
        q = np.rint(np.clip(data, 0.0, 1.0) * scale)
        if record.bit_depth <= 8:
            return q.astype(np.uint8)
        if record.bit_depth <= 16:
            return q.astype(np.uint16)
        return q.astype(np.uint32)
    if record.degenerate:
        level = min(max(record.vmin, 0.0), 1.0)
        return data + (record.vmin - level)
    return data * (record.vmax - record.vmin) + record.vmin
