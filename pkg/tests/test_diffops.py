import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from destripe.diffops import (
    DirectionalDiff, Gradient, Stacked, adjoint_diff, forward_diff, oblique_adjoint, oblique_diff,
    oblique_taps, operator_norm_bound, power_iteration,
)

ANGLES = [0.0, math.pi / 6, math.pi / 3, math.pi / 2, 2.0, 3.0]


def test_constant_has_zero_differences():
    v = np.full((4, 5, 6), 0.3)
    for axis in "xyz":
        assert not forward_diff(v, axis).any()
    for t in ANGLES:
        assert not oblique_diff(v, t).any()


def test_step_edge_row():
    assert forward_diff(np.array([[0.0, 1.0, 1.0]]), "x").tolist() == [[1.0, 0.0, 0.0]]


def test_z_on_2d_is_zero():
    rng = np.random.default_rng(0)
    assert not forward_diff(rng.random((5, 5)), "z").any()
    assert not adjoint_diff(rng.random((5, 5)), "z").any()


def test_adjoint_of_zero_is_zero():
    assert not adjoint_diff(np.zeros((5, 7)), "x").any()


def test_adjoint_dims_mismatch():
    with pytest.raises(ValueError):
        adjoint_diff(np.zeros((5, 7)), "x", shape=(5, 6))


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_axis_adjoint_random_8cube(axis):
    rng = np.random.default_rng(1)
    u, p = rng.standard_normal((2, 8, 8, 8))
    lhs = np.vdot(forward_diff(u, axis), p)
    rhs = np.vdot(u, adjoint_diff(p, axis))
    assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(u) * np.linalg.norm(p)


@pytest.mark.parametrize("axis", ["x", "y"])
def test_axis_adjoint_random_5x7(axis):
    rng = np.random.default_rng(2)
    u, p = rng.standard_normal((2, 5, 7))
    assert abs(np.vdot(forward_diff(u, axis), p) - np.vdot(u, adjoint_diff(p, axis))) <= 1e-12


@pytest.mark.parametrize("axis", ["x", "y"])
def test_adjoint_of_adjoint_is_forward(axis):
    # build both matrices on a small grid and compare transposes
    shape = (4, 5)
    n = 20
    fwd = np.zeros((n, n))
    adj = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        fwd[:, i] = forward_diff(e.reshape(shape), axis).ravel()
        adj[:, i] = adjoint_diff(e.reshape(shape), axis).ravel()
    assert np.max(np.abs(adj.T - fwd)) <= 1e-12


def test_vertical_oblique_equals_forward_y():
    rng = np.random.default_rng(3)
    v = rng.random((3, 6, 7))
    assert np.array_equal(oblique_diff(v, math.pi / 2), forward_diff(v, "y"))
    assert np.array_equal(oblique_diff(v, 0.0), forward_diff(v, "x"))
    assert oblique_taps(math.pi / 2 + 1e-14) == [(1, 0, 1.0)]


def test_linear_ramp_has_unit_x_difference():
    ny, nx = 5, 6
    v = np.tile(np.arange(nx, dtype=float), (ny, 1))
    d = oblique_diff(v, 0.0)
    assert np.allclose(d[:, :-1], 1.0) and not d[:, -1].any()
    # bilinear interpolation is exact on a linear field: d = cos(theta)
    t = math.pi / 6
    d = oblique_diff(v, t)
    assert np.allclose(d[:-1, :-1], math.cos(t), atol=1e-14)


def test_oblique_taps_are_a_partition():
    for t in np.linspace(0, math.pi, 37, endpoint=False):
        taps = oblique_taps(t)
        assert abs(sum(w for *_, w in taps) - 1.0) < 1e-15
        assert all(w > 0 for *_, w in taps)


@given(st.floats(0.0, math.pi, exclude_max=True), st.integers(0, 2**31 - 1))
def test_oblique_adjoint_property(theta, seed):
    rng = np.random.default_rng(seed)
    u, q = rng.standard_normal((2, 2, 6, 7))
    lhs = np.vdot(oblique_diff(u, theta), q)
    rhs = np.vdot(u, oblique_adjoint(q, theta))
    assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(u) * np.linalg.norm(q)


@given(st.floats(0.0, math.pi, exclude_max=True), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(theta, a, b):
    rng = np.random.default_rng(7)
    u, v = rng.standard_normal((2, 5, 6))
    lhs = oblique_diff(a * u + b * v, theta)
    rhs = a * oblique_diff(u, theta) + b * oblique_diff(v, theta)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(a) + abs(b)) * 10


def test_rho_zero_gradient_is_slicewise_2d():
    rng = np.random.default_rng(4)
    u = rng.random((4, 6, 5))
    g3 = Gradient(ndim=3, rho_z=0.0)(u)
    g2 = np.stack([Gradient(ndim=2)(sl) for sl in u], axis=1)
    assert np.array_equal(g3[:2], g2)
    assert not g3[2].any()
    g1 = Gradient(ndim=3, rho_z=1.0)(u)
    assert np.array_equal(g1[2], forward_diff(u, "z"))


def test_norm_bounds():
    assert operator_norm_bound("x") == 2.0
    assert math.isclose(operator_norm_bound(Gradient(ndim=2)), math.sqrt(8))
    stack = Stacked([Gradient(ndim=3), DirectionalDiff(math.pi / 2)])
    assert math.isclose(operator_norm_bound(stack), 4.0)


@pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 2, 2.5])
@pytest.mark.parametrize("ndim,rho", [(2, 1.0), (3, 0.5), (3, 1.0)])
def test_power_iteration_below_bound(theta, ndim, rho):
    op = Stacked([Gradient(ndim=ndim, rho_z=rho), DirectionalDiff(theta)])
    shape = (16, 16) if ndim == 2 else (4, 16, 16)
    est = power_iteration(op, op.adjoint, shape, iters=300)
    assert est <= operator_norm_bound(op) + 1e-9
