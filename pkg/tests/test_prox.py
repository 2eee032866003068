import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from destripe.prox import (
    huber, project_box01, project_l2_ball_groups, prox_conjugate_huber_shifted,
    prox_conjugate_l1_shifted, prox_huber, prox_huber_groups, prox_l1, prox_l1_shifted,
    prox_l1_shifted_box01,
)
from oracles import argmin_convex_1d, project_ball_kkt, sign_plus

finite = st.floats(-5, 5, allow_nan=False)
positive = st.floats(1e-3, 3)


def test_soft_threshold_examples():
    assert prox_l1(0.5, 0.2) == pytest.approx(0.3, abs=1e-15)
    assert prox_l1(-0.1, 0.2) == 0.0


def test_box_examples():
    assert project_box01(np.array([1.3, -0.2, 0.7])).tolist() == [1.0, 0.0, 0.7]


def test_group_projection_examples():
    assert project_l2_ball_groups(np.zeros((3, 1)), 1.0).ravel().tolist() == [0, 0, 0]
    out = project_l2_ball_groups(np.array([[3.0], [4.0], [0.0]]), 1.0).ravel()
    assert np.allclose(out, [0.6, 0.8, 0.0], atol=1e-15)
    g = np.array([[0.1], [0.2], [0.05]])
    assert np.array_equal(project_l2_ball_groups(g, 1.0), g)


def test_conjugate_shifted_examples():
    assert prox_conjugate_l1_shifted(0.0, 1.0, 0.0) == 0.0
    assert prox_conjugate_l1_shifted(2.0, 1.0, 0.5) == 1.0


def test_huber_examples():
    assert prox_huber(0.0, 1.0, 0.1) == 0.0
    x, lam, eps = 0.05, 1.0, 0.1
    assert prox_huber(x, lam, eps) == pytest.approx(x / (1 + lam / eps), abs=1e-15)


def test_limits_and_idempotence():
    x = np.random.default_rng(0).standard_normal(50)
    assert np.array_equal(prox_l1(x, 0.0), x)
    b = project_box01(x)
    assert np.array_equal(project_box01(b), b)


def test_l1_against_numeric_oracle():
    rng = np.random.default_rng(10)
    for x, lam in zip(rng.uniform(-3, 3, 1000), rng.uniform(0.01, 2, 1000)):
        ref = argmin_convex_1d(lambda t: lam * sign_plus(t) + t - x, -5, 5)
        assert abs(prox_l1(x, lam) - ref) <= 1e-8


def test_box_against_numeric_oracle():
    rng = np.random.default_rng(11)
    for x in rng.uniform(-2, 3, 1000):
        ref = argmin_convex_1d(lambda t: t - x, 0.0, 1.0)
        assert abs(project_box01(x) - ref) <= 1e-8


def test_shifted_l1_box_against_numeric_oracle():
    rng = np.random.default_rng(12)
    for x, lam, b in zip(rng.uniform(-1, 2, 1000), rng.uniform(0.01, 1, 1000), rng.random(1000)):
        ref = argmin_convex_1d(lambda t: lam * sign_plus(t - b) + t - x, 0.0, 1.0)
        assert abs(prox_l1_shifted_box01(x, lam, b) - ref) <= 1e-8


def test_conjugate_shifted_via_moreau_numeric():
    # prox_{s f*}(y) = y - s * prox_{f/s}(y/s), the inner prox found numerically
    rng = np.random.default_rng(13)
    for y, s, b in zip(rng.uniform(-4, 4, 1000), rng.uniform(0.05, 2, 1000), rng.uniform(-1, 1, 1000)):
        inner = argmin_convex_1d(lambda t: sign_plus(t - b) / s + t - y / s, -100, 100)
        assert abs(prox_conjugate_l1_shifted(y, s, b) - (y - s * inner)) <= 1e-8


def test_huber_against_numeric_oracle():
    rng = np.random.default_rng(14)
    for x, lam, eps in zip(rng.uniform(-3, 3, 1000), rng.uniform(0.01, 2, 1000), rng.uniform(1e-3, 1, 1000)):
        # phi_eps'(t) = t / eps inside, sign(t) outside
        ref = argmin_convex_1d(lambda t: lam * (t / eps if abs(t) <= eps else sign_plus(t)) + t - x, -5, 5)
        assert abs(prox_huber(x, lam, eps) - ref) <= 1e-8


def test_group_projection_against_numeric_oracle():
    rng = np.random.default_rng(15)
    for g, r in zip(rng.uniform(-3, 3, (1000, 3)), rng.uniform(0.1, 2, 1000)):
        got = project_l2_ball_groups(g.reshape(3, 1), r).ravel()
        assert np.max(np.abs(got - project_ball_kkt(g, r))) <= 1e-8


def test_group_huber_against_numeric_oracle():
    rng = np.random.default_rng(16)
    for x, lam, eps in zip(rng.uniform(-2, 2, (1000, 2)), rng.uniform(0.05, 1, 1000), rng.uniform(0.01, 1, 1000)):
        def f(t):
            return lam * float(huber(np.hypot(*t), eps)) + 0.5 * np.sum((t - x) ** 2)

        def grad(t):
            r = np.hypot(*t)
            d = t / eps if r <= eps else t / r
            return lam * d + (t - x)

        res = optimize.minimize(f, x, jac=grad, method="BFGS", options={"gtol": 1e-13})
        got = prox_huber_groups(x.reshape(2, 1), lam, eps).ravel()
        assert np.max(np.abs(got - res.x)) <= 1e-8


@given(st.lists(finite, min_size=2, max_size=2), st.lists(finite, min_size=2, max_size=2), positive, positive)
def test_firm_nonexpansiveness(a, b, lam, eps):
    a, b = np.array(a), np.array(b)
    d = np.sum((a - b) ** 2)
    maps = [
        lambda z: prox_l1(z, lam),
        project_box01,
        lambda z: prox_l1_shifted_box01(z, lam, 0.3),
        lambda z: prox_huber(z, lam, eps),
        lambda z: project_l2_ball_groups(z.reshape(2, 1), lam).ravel(),
        lambda z: prox_huber_groups(z.reshape(2, 1), lam, eps).ravel(),
    ]
    for m in maps:
        pa, pb = m(a), m(b)
        # firm: ||Pa - Pb||^2 <= <Pa - Pb, a - b>
        assert np.sum((pa - pb) ** 2) <= np.dot(pa - pb, a - b) + 1e-12 * (1 + d)


@given(finite, positive, st.floats(-2, 2))
def test_moreau_identity_shifted_l1(y, s, b):
    # closed-form primal prox of f/s with f(z) = |b - z|
    primal = prox_l1_shifted(y / s, 1.0 / s, b)
    assert abs(prox_conjugate_l1_shifted(y, s, b) + s * primal - y) <= 1e-10 * (1 + abs(y))


@given(st.lists(finite, min_size=2, max_size=2), positive, positive)
def test_moreau_identity_huber_groups(y, s, eps):
    # F(z) = phi_eps(|z|), b = 0: prox_{sF*}(y) + s prox_{F/s}(y/s) = y
    y = np.array(y).reshape(2, 1)
    dual = prox_conjugate_huber_shifted(y, s, eps, np.zeros_like(y))
    primal = prox_huber_groups(y / s, 1.0 / s, eps)
    assert np.max(np.abs(dual + s * primal - y)) <= 1e-10 * (1 + np.max(np.abs(y)))
