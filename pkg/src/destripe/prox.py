"""Closed-form proximal maps and dual projections.

``prox_f(x, lam)`` means ``argmin_t lam * f(t) + ||t - x||^2 / 2``.
"""

import numpy as np


def prox_l1(x, lam):
    """Soft threshold ``sign(x) * max(|x| - lam, 0)``."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def project_box01(x):
    return np.clip(x, 0.0, 1.0)


def project_l2_ball_groups(p, radius, axis=0):
    """Project each vector along ``axis`` onto the l2 ball of ``radius``.

    This is the dual prox of ``radius * ||.||_{2,1}`` (isotropic total
    variation), i.e. ``g / max(1, |g| / radius)`` per group.
    """
    p = np.asarray(p, dtype=np.float64)
    norm = np.sqrt(np.sum(p * p, axis=axis, keepdims=True))
    return p / np.maximum(1.0, norm / radius)


def prox_conjugate_l1_shifted(y, sigma, b):
    """Prox of ``sigma * f*`` for ``f(z) = ||b - z||_1``.

    ``f*(y) = <y, b> + indicator(|y| <= 1)``, so the map is
    ``clip(y - sigma * b, -1, 1)``.
    """
    y = np.asarray(y, dtype=np.float64)
    return np.clip(y - sigma * b, -1.0, 1.0)


def prox_l1_shifted(x, lam, b):
    """Prox of ``lam * ||b - t||_1``: soft-threshold toward ``b``."""
    return b + prox_l1(np.asarray(x, dtype=np.float64) - b, lam)


def prox_l1_shifted_box01(x, lam, b):
    """Prox of ``lam * ||b - t||_1 + indicator([0, 1])``.

    Both parts are separable and one-dimensional, so clamping the
    unconstrained prox gives the exact answer.
    """
    return np.clip(prox_l1_shifted(x, lam, b), 0.0, 1.0)


def huber(x, eps):
    """``phi_eps``: quadratic ``x^2 / (2 eps)`` near 0, ``|x| - eps/2`` outside."""
    a = np.abs(np.asarray(x, dtype=np.float64))
    return np.where(a <= eps, a * a / (2 * eps), a - eps / 2)


def prox_huber(x, lam, eps):
    """Prox of ``lam * phi_eps`` (scalar, element-wise)."""
    x = np.asarray(x, dtype=np.float64)
    a = np.abs(x)
    return np.where(a <= eps + lam, x * (eps / (eps + lam)), x - lam * np.sign(x))


def prox_huber_groups(x, lam, eps, axis=0):
    """Prox of ``lam * phi_eps(|g|)`` applied to each vector ``g`` along ``axis``."""
    x = np.asarray(x, dtype=np.float64)
    r = np.sqrt(np.sum(x * x, axis=axis, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = np.where(r > 0, 1.0 - lam / r, 0.0)
    scale = np.where(r <= eps + lam, eps / (eps + lam), outer)
    return x * scale


def prox_conjugate_huber_shifted(y, sigma, eps, b, axis=0):
    """Prox of ``sigma * F*`` for ``F(z) = sum phi_eps(|b - z|)`` over groups.

    ``phi_eps*(w) = eps |w|^2 / 2`` on the unit ball, so the map shrinks
    ``y - sigma b`` by ``1 + sigma eps`` and projects onto the unit ball.
    """
    w = (np.asarray(y, dtype=np.float64) - sigma * b) / (1.0 + sigma * eps)
    return project_l2_ball_groups(w, 1.0, axis=axis)
