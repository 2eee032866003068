"""Image files and run configuration.

Supported inputs: grayscale TIFF (single or multi-page; 8/16-bit unsigned or
32/64-bit float), grayscale PNG (8/16-bit) and raw little-endian float32
with a JSON sidecar ``<file>.json`` holding ``{"dims": [nx, ny, nz]}``.
"""

from __future__ import annotations

import configparser
import json
import os

import numpy as np
import tifffile
from PIL import Image

from .core import NormalizationRecord, Volume, as_array, denormalize, normalize

TIFF_SUFFIXES = (".tif", ".tiff")
PNG_SUFFIXES = (".png",)
RAW_SUFFIXES = (".raw", ".f32", ".bin")
STRIPE_NOTE = "stripe field exported as (s + 1) / 2"


class ImageFormatError(ValueError):
    """A file could not be read or written; the message names the file."""

    def __init__(self, path, reason):
        super().__init__(f"{path}: {reason}")
        self.path = str(path)
        self.reason = reason


def _suffix(path):
    return os.path.splitext(str(path))[1].lower()


def sidecar_path(path):
    return str(path) + ".json"


def _check_samples(path, arr):
    if arr.dtype.kind == "u" and arr.dtype.itemsize in (1, 2):
        return
    if arr.dtype.kind == "f" and arr.dtype.itemsize in (4, 8):
        return
    raise ImageFormatError(path, f"unsupported sample format {arr.dtype}")


def _read_tiff(path):
    try:
        with tifffile.TiffFile(path) as tif:
            page = tif.pages[0]
            if page.samplesperpixel > 1 or page.photometric == tifffile.PHOTOMETRIC.RGB:
                raise ImageFormatError(path, "RGB or multi-sample images are not supported")
            arr = tif.asarray()
    except ImageFormatError:
        raise
    except Exception as exc:  # tifffile raises several types for damaged files
        raise ImageFormatError(path, f"unreadable or truncated TIFF ({exc})") from exc
    arr = np.squeeze(arr)
    if arr.ndim not in (2, 3):
        raise ImageFormatError(path, f"expected a 2D image or a stack of pages, got shape {arr.shape}")
    return arr


def _read_png(path):
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode not in ("L", "I;16", "I;16B", "I"):
                raise ImageFormatError(path, f"PNG mode {mode} is not single-channel grayscale")
            im.load()
            arr = np.array(im)
    except ImageFormatError:
        raise
    except Exception as exc:
        raise ImageFormatError(path, f"unreadable or truncated PNG ({exc})") from exc
    if mode == "I":
        # Pillow widens 16-bit grayscale PNGs to 32-bit ints
        if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
            raise ImageFormatError(path, "PNG samples exceed 16 bits")
        arr = arr.astype(np.uint16)
    return arr


def _read_raw(path):
    side = sidecar_path(path)
    if not os.path.exists(side):
        raise ImageFormatError(path, f"raw input needs a sidecar file {side}")
    try:
        with open(side) as fh:
            meta = json.load(fh)
        dims = [int(d) for d in meta["dims"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ImageFormatError(side, f"invalid sidecar ({exc})") from exc
    if meta.get("dtype", "float32") != "float32":
        raise ImageFormatError(path, f"unsupported raw sample format {meta['dtype']}")
    if len(dims) == 2:
        dims.append(1)
    if len(dims) != 3 or min(dims) < 1:
        raise ImageFormatError(side, f"dims must be [nx, ny] or [nx, ny, nz], got {meta['dims']}")
    expected = int(np.prod(dims))
    arr = np.fromfile(path, dtype="<f4")
    if arr.size != expected:
        raise ImageFormatError(path, f"truncated or oversized raw file: {arr.size} samples, expected {expected}")
    nx, ny, nz = dims
    arr = arr.reshape(nz, ny, nx)
    return arr[0] if nz == 1 else arr


def read_raw_samples(path):
    """Raw samples of an image file without normalization."""
    path = str(path)
    if not os.path.exists(path):
        raise ImageFormatError(path, "file does not exist")
    suffix = _suffix(path)
    if suffix in TIFF_SUFFIXES:
        arr = _read_tiff(path)
    elif suffix in PNG_SUFFIXES:
        arr = _read_png(path)
    elif suffix in RAW_SUFFIXES:
        arr = _read_raw(path)
    else:
        raise ImageFormatError(path, f"unknown file type {suffix!r}")
    _check_samples(path, arr)
    return arr


def read_image(path, mode="auto"):
    """Read and normalize an image.

    Integer samples are divided by ``2**bits - 1``; float samples are
    rescaled from their min-max range unless ``mode="identity"``, which keeps
    float values as stored (useful for data already in [0, 1]).
    """
    arr = read_raw_samples(path)
    if mode == "identity":
        if arr.dtype.kind != "f":
            return _tag(normalize(arr), path)
        rec = NormalizationRecord("float", vmin=0.0, vmax=1.0, dtype=str(arr.dtype))
        return Volume(arr.astype(np.float64), rec, source=str(path))
    try:
        vol = normalize(arr, mode=mode)
    except ValueError as exc:
        raise ImageFormatError(path, str(exc)) from exc
    return _tag(vol, path)


def _tag(vol, path):
    return Volume(vol.data, vol.record, source=str(path))


def _quantize(data, bits):
    rec = NormalizationRecord("integer", bit_depth=bits, vmax=float(2**bits - 1))
    return denormalize(data, rec)


def write_image(v, path, bit_depth=None, float_output=False, stripes=False, metadata=None):
    """Write an image or stripe field.

    Values are clipped to [0, 1] and quantized with round-half-even for
    integer output (default 16-bit TIFF, 8-bit PNG). ``float_output`` writes
    float32 TIFF or raw data without clipping. Stripe fields
    (``stripes=True``) are mapped to [0, 1] by ``(s + 1) / 2`` first and the
    mapping is noted in the metadata.
    """
    path = str(path)
    data = as_array(v)
    if data.ndim == 3 and data.shape[0] == 1:
        data = data[0]
    meta = dict(metadata or {})
    if stripes:
        data = (data + 1.0) / 2.0
        meta["note"] = STRIPE_NOTE
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise ImageFormatError(path, "parent directory does not exist")
    suffix = _suffix(path)
    try:
        if suffix in TIFF_SUFFIXES:
            if float_output:
                out = data.astype(np.float32)
            else:
                out = _quantize(data, bit_depth or 16)
            desc = json.dumps(meta, sort_keys=True) if meta else None
            tifffile.imwrite(path, out, photometric="minisblack", description=desc,
                             metadata=None)
        elif suffix in PNG_SUFFIXES:
            if data.ndim != 2:
                raise ImageFormatError(path, "PNG output holds a single 2D slice")
            if float_output:
                raise ImageFormatError(path, "PNG cannot store float samples")
            bits = bit_depth or 8
            if bits not in (8, 16):
                raise ImageFormatError(path, "PNG output must be 8 or 16 bit")
            Image.fromarray(_quantize(data, bits)).save(path)
        elif suffix in RAW_SUFFIXES:
            arr = data if data.ndim == 3 else data[np.newaxis]
            nz, ny, nx = arr.shape
            out = arr if float_output else np.clip(arr, 0.0, 1.0)
            out.astype("<f4").tofile(path)
            side = {"dims": [nx, ny, nz], "dtype": "float32"}
            side.update(meta)
            with open(sidecar_path(path), "w") as fh:
                json.dump(side, fh, sort_keys=True, indent=1)
        else:
            raise ImageFormatError(path, f"unknown file type {suffix!r}")
    except ImageFormatError:
        raise
    except OSError as exc:
        raise ImageFormatError(path, f"write failed ({exc})") from exc


def read_config(path):
    """Read an INI-style run configuration.

    Returns ``{section: {key: value}}`` with string values; keys are
    lower-cased and dashes become underscores so they match CLI option names.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ValueError(f"{path}: cannot read config ({exc})") from exc
    out = {}
    for name in parser.sections():
        out[name.lower()] = {k.lower().replace("-", "_"): v.strip() for k, v in parser[name].items()}
    if parser.defaults():
        out.setdefault("default", {}).update(
            {k.lower().replace("-", "_"): v.strip() for k, v in parser.defaults().items()})
    return out
