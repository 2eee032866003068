"""Pure numpy implementation of the hot loops.

Mirrors the compiled ``_kernels`` module function for function; the backend
selector in ``_backend`` picks one of the two at import time.
"""

import numpy as np


def _shift_read(v, dy, dx):
    ny, nx = v.shape[-2:]
    out = np.zeros_like(v)
    out[..., max(0, -dy):min(ny, ny - dy), max(0, -dx):min(nx, nx - dx)] = \
        v[..., max(0, dy):min(ny, ny + dy), max(0, dx):min(nx, nx + dx)]
    return out


def _masks(shape, taps, ntaps):
    nz, ny, nx = shape
    yy = np.arange(ny)[:, None]
    xx = np.arange(nx)[None, :]
    masks = []
    for d in range(len(ntaps)):
        m = np.ones((ny, nx), dtype=bool)
        for k in range(ntaps[d]):
            dy, dx = taps[d, k]
            m &= (yy + dy >= 0) & (yy + dy < ny) & (xx + dx >= 0) & (xx + dx < nx)
        masks.append(m)
    return masks


def _grad(u, rho_z, use_z, out):
    out[...] = 0.0
    out[0, :, :, :-1] = u[:, :, 1:] - u[:, :, :-1]
    out[1, :, :-1, :] = u[:, 1:, :] - u[:, :-1, :]
    if use_z:
        out[2, :-1, :, :] = rho_z * (u[1:] - u[:-1])


def _grad_adjoint(p, rho_z, use_z, out):
    out[...] = 0.0
    out[:, :, :-1] -= p[0, :, :, :-1]
    out[:, :, 1:] += p[0, :, :, :-1]
    out[:, :-1, :] -= p[1, :, :-1, :]
    out[:, 1:, :] += p[1, :, :-1, :]
    if use_z:
        out[:-1] -= rho_z * p[2, :-1]
        out[1:] += rho_z * p[2, :-1]


def _dir(u, taps, weights, ntaps, mask):
    acc = np.zeros_like(u)
    for k in range(ntaps):
        dy, dx = taps[k]
        acc += weights[k] * _shift_read(u, int(dy), int(dx))
    return np.where(mask, acc - u, 0.0)


def _dir_adjoint(q, taps, weights, ntaps, mask):
    qm = np.where(mask, q, 0.0)
    out = -qm
    for k in range(ntaps):
        dy, dx = taps[k]
        out += weights[k] * _shift_read(qm, -int(dy), -int(dx))
    return out


def directional_diff(u, taps, weights, ntaps):
    """Apply every directional channel to ``u`` (shape ``(nz, ny, nx)``)."""
    masks = _masks(u.shape, taps, ntaps)
    return np.stack([_dir(u, taps[d], weights[d], ntaps[d], masks[d])
                     for d in range(len(ntaps))])


def gsr_iterate(u, u0, p, pbar, q, qbar, b, taps, weights, ntaps,
                mu1, mu2, rho_z, use_z, tau, sigma, theta, n_iter):
    """Run ``n_iter`` PDHG steps with dual extrapolation, in place.

    Returns ``(||u_new - u_old||^2, ||u_old||^2)`` of the final step.
    """
    masks = _masks(u.shape, taps, ntaps)
    ndir = len(ntaps)
    g = np.empty_like(u)
    grad = np.empty_like(p)
    change = norm_old = 0.0
    for _ in range(n_iter):
        _grad_adjoint(pbar, rho_z, use_z, g)
        for d in range(ndir):
            g += _dir_adjoint(qbar[d], taps[d], weights[d], ntaps[d], masks[d])
        v = u - tau * g - u0
        u_new = np.clip(u0 + np.sign(v) * np.maximum(np.abs(v) - tau * mu2, 0.0), 0.0, 1.0)
        diff = u_new - u
        change = float(np.sum(diff * diff))
        norm_old = float(np.sum(u * u))
        u[...] = u_new

        _grad(u, rho_z, use_z, grad)
        p_new = p + sigma * grad
        nrm = np.sqrt(p_new[0] * p_new[0] + p_new[1] * p_new[1] + p_new[2] * p_new[2])
        p_new *= mu1 / np.maximum(nrm, mu1)
        pbar[...] = p_new + theta * (p_new - p)
        p[...] = p_new

        for d in range(ndir):
            qd = np.clip(q[d] + sigma * _dir(u, taps[d], weights[d], ntaps[d], masks[d])
                         - sigma * b[d], -1.0, 1.0)
            qbar[d] = qd + theta * (qd - q[d])
            q[d] = qd
    return change, norm_old
