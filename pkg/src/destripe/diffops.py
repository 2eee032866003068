"""Forward differences, their adjoints and operator norm bounds.

All differences are one-sided forward differences with a Neumann boundary:
the last difference along an axis is zero, so constant images have exactly
zero gradient. Arrays are ``(ny, nx)`` or ``(nz, ny, nx)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AXES, parse_direction

# Angles closer than this to an axis snap onto it, so pi/2 gives exactly d/dy.
_SNAP = 1e-12


def _axis_index(v, axis):
    if isinstance(axis, str):
        try:
            axis = AXES[axis]
        except KeyError:
            raise ValueError(f"unknown axis {axis!r}") from None
    if axis < -v.ndim or axis >= v.ndim:
        return None
    return axis % v.ndim


def forward_diff(v, axis):
    """``v[i+1] - v[i]`` along ``axis`` (``"x"``, ``"y"``, ``"z"`` or an int).

    The z axis of a 2D image yields an all-zero field.
    """
    v = np.asarray(v, dtype=np.float64)
    ax = _axis_index(v, axis)
    out = np.zeros_like(v)
    if ax is None:
        return out
    n = v.shape[ax]
    head = [slice(None)] * v.ndim
    tail = [slice(None)] * v.ndim
    head[ax] = slice(0, n - 1)
    tail[ax] = slice(1, n)
    out[tuple(head)] = v[tuple(tail)] - v[tuple(head)]
    return out


def adjoint_diff(p, axis, shape=None):
    """Exact adjoint of :func:`forward_diff` (a negative divergence)."""
    p = np.asarray(p, dtype=np.float64)
    if shape is not None and tuple(shape) != p.shape:
        raise ValueError(f"field shape {p.shape} does not match operator shape {tuple(shape)}")
    ax = _axis_index(p, axis)
    out = np.zeros_like(p)
    if ax is None:
        return out
    n = p.shape[ax]
    if n == 1:
        return out

    def sl(a, b):
        s = [slice(None)] * p.ndim
        s[ax] = slice(a, b)
        return tuple(s)

    # the last entry of p never enters the forward operator
    out[sl(0, n - 1)] -= p[sl(0, n - 1)]
    out[sl(1, n)] += p[sl(0, n - 1)]
    return out


def oblique_taps(theta):
    """Bilinear interpolation taps for a one-pixel step along ``theta``.

    Returns a list of ``(dy, dx, weight)`` with strictly positive weights
    summing to one. The step is ``(cos theta, sin theta)`` in ``(x, y)``.
    """
    theta = parse_direction(theta)
    c, s = math.cos(theta), math.sin(theta)
    if abs(c) < _SNAP:
        c = 0.0
    if abs(s) < _SNAP:
        s = 0.0
    if abs(1 - abs(c)) < _SNAP:
        c = math.copysign(1.0, c)
    if abs(1 - s) < _SNAP:
        s = 1.0
    x0, y0 = math.floor(c), math.floor(s)
    fx, fy = c - x0, s - y0
    taps = []
    for dy, wy in ((y0, 1 - fy), (y0 + 1, fy)):
        for dx, wx in ((x0, 1 - fx), (x0 + 1, fx)):
            w = wy * wx
            if w > 0:
                taps.append((int(dy), int(dx), w))
    return taps


def _tap_mask(shape2d, taps):
    ny, nx = shape2d
    yy = np.arange(ny)[:, None]
    xx = np.arange(nx)[None, :]
    mask = np.ones((ny, nx), dtype=bool)
    for dy, dx, _ in taps:
        mask &= (yy + dy >= 0) & (yy + dy < ny) & (xx + dx >= 0) & (xx + dx < nx)
    return mask


def _shift_read(v, dy, dx):
    """``out[..., y, x] = v[..., y+dy, x+dx]`` where in bounds, else 0."""
    ny, nx = v.shape[-2:]
    out = np.zeros_like(v)
    ys_out = slice(max(0, -dy), min(ny, ny - dy))
    xs_out = slice(max(0, -dx), min(nx, nx - dx))
    ys_in = slice(max(0, dy), min(ny, ny + dy))
    xs_in = slice(max(0, dx), min(nx, nx + dx))
    out[..., ys_out, xs_out] = v[..., ys_in, xs_in]
    return out


def oblique_diff(v, theta):
    """Directional difference ``v~(p + (cos theta, sin theta)) - v(p)``.

    ``v~`` is the bilinear interpolant of ``v``. Where the interpolation
    stencil leaves the image the difference is zero. Volumes are processed
    slice-wise in the x-y plane. At ``theta = pi/2`` this is exactly
    ``forward_diff(v, "y")``.
    """
    v = np.asarray(v, dtype=np.float64)
    taps = oblique_taps(theta)
    mask = _tap_mask(v.shape[-2:], taps)
    acc = np.zeros_like(v)
    # sum of weighted differences, so constants give exact zeros
    for dy, dx, w in taps:
        if w == 1.0:
            acc += _shift_read(v, dy, dx) - v
        else:
            acc += w * (_shift_read(v, dy, dx) - v)
    return np.where(mask, acc, 0.0)


def oblique_adjoint(q, theta):
    """Exact adjoint of :func:`oblique_diff`."""
    q = np.asarray(q, dtype=np.float64)
    taps = oblique_taps(theta)
    mask = _tap_mask(q.shape[-2:], taps)
    qm = np.where(mask, q, 0.0)
    out = -qm
    for dy, dx, w in taps:
        shifted = _shift_read(qm, -dy, -dx)
        out += shifted if w == 1.0 else w * shifted
    return out


@dataclass(frozen=True)
class Gradient:
    """Stacked forward differences (x, y[, rho_z * z]) used by total variation."""

    ndim: int = 2
    rho_z: float = 1.0

    def __post_init__(self):
        if self.ndim not in (2, 3):
            raise ValueError("Gradient supports 2D and 3D images")
        if not 0.0 <= self.rho_z <= 1.0:
            raise ValueError("rho_z must lie in [0, 1]")

    @property
    def channels(self):
        return ("x", "y") if self.ndim == 2 else ("x", "y", "z")

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        out = [forward_diff(u, "x"), forward_diff(u, "y")]
        if self.ndim == 3:
            out.append(self.rho_z * forward_diff(u, "z"))
        return np.stack(out)

    def adjoint(self, p):
        out = adjoint_diff(p[0], "x") + adjoint_diff(p[1], "y")
        if self.ndim == 3:
            out += self.rho_z * adjoint_diff(p[2], "z")
        return out

    def channel_bounds(self):
        bounds = [2.0, 2.0]
        if self.ndim == 3:
            bounds.append(2.0 * self.rho_z)
        return bounds

    def norm_bound(self):
        return operator_norm_bound(self)


@dataclass(frozen=True)
class DirectionalDiff:
    """Oblique difference along a stripe direction ``theta``."""

    theta: float = math.pi / 2

    def __call__(self, u):
        return oblique_diff(u, self.theta)

    def adjoint(self, q):
        return oblique_adjoint(q, self.theta)

    def channel_bounds(self):
        return [2.0]

    def norm_bound(self):
        return 2.0


class Stacked:
    """Several operators applied jointly; output is a list of channel blocks."""

    def __init__(self, ops):
        self.ops = list(ops)
        if not self.ops:
            raise ValueError("stacked operator needs at least one member")

    def __call__(self, u):
        return [op(u) for op in self.ops]

    def adjoint(self, blocks):
        if len(blocks) != len(self.ops):
            raise ValueError("number of dual blocks does not match the operator")
        out = self.ops[0].adjoint(blocks[0])
        for op, b in zip(self.ops[1:], blocks[1:]):
            out = out + op.adjoint(b)
        return out

    def channel_bounds(self):
        return [b for op in self.ops for b in op.channel_bounds()]

    def norm_bound(self):
        return operator_norm_bound(self)


def operator_norm_bound(op):
    """Upper bound ``L >= ||K||``: root of the sum of squared per-channel bounds.

    Each forward difference has norm at most 2, so a single difference gives
    2, 2D total variation gives ``sqrt(8)`` and 3D total variation plus one
    directional channel gives 4.
    """
    if isinstance(op, str):
        return 2.0
    bounds = op.channel_bounds()
    return math.sqrt(sum(b * b for b in bounds))


def power_iteration(apply, adjoint, shape, iters=200, seed=0):
    """Estimate ``||K||`` by power iteration on ``K^T K``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = adjoint(apply(x))
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        est = math.sqrt(nrm)
        x = y / nrm
    return est
